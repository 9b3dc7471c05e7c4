use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qpke_core::analysis::{
    channel_identity, cipher_distance, multicopy_distance, pan10_mixture_distance, pubkey_leakage, scheme_a_cipher,
    sigma_bound, KeyModel, MixtureSpec, SecurityReport, CSV_HEADER,
};
use qpke_core::attacks::{
    ciphertext_distinguisher, owt_inversion_baseline, pan10_attack_run, AttackOutcome, OwtOutcome, BATCH_CSV_HEADER,
};
use qpke_core::schemes::{encrypt, keygen, round_trip, Ciphertext, PrivateKey, PublicKey, SchemeId, SchemeParams};
use qpke_core::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{
    AnalyzeTarget, AttackArgs, AttackKind, Cli, Command, DecryptArgs, EncryptArgs, Format, GridArgs, KeygenArgs,
    MixtureModel, RoundtripArgs, SchemeArgs,
};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn of(cli: &Cli) -> Self {
        Self {
            tool: "qpke",
            version: env!("CARGO_PKG_VERSION"),
            seed: cli.seed,
            config: serde_json::to_value(cli).unwrap_or(Value::Null),
        }
    }
}

/// Runs one invocation. `Ok(false)` means a computed quantity missed its
/// bound or a round trip failed.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Keygen(args) => cmd_keygen(cli, args),
        Command::Encrypt(args) => cmd_encrypt(cli, args),
        Command::Decrypt(args) => cmd_decrypt(cli, args),
        Command::Roundtrip(args) => cmd_roundtrip(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, &[args.target], &args.grid, false),
        Command::Sweep(args) => {
            let targets = if args.targets.is_empty() {
                vec![
                    AnalyzeTarget::SigmaBound,
                    AnalyzeTarget::ChannelIdentity,
                    AnalyzeTarget::SchemeACipher,
                    AnalyzeTarget::SchemeBCipher,
                    AnalyzeTarget::SchemeM1Cipher,
                    AnalyzeTarget::SchemeM2Cipher,
                    AnalyzeTarget::PubkeyLeakage,
                    AnalyzeTarget::Multicopy,
                    AnalyzeTarget::Pan10Bounds,
                ]
            } else {
                let mut t = args.targets.clone();
                t.sort();
                t.dedup();
                t
            };
            cmd_analyze(cli, &targets, &args.grid, true)
        }
        Command::Attack(args) => cmd_attack(cli, args),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn format_of(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

/// A reader closing the pipe early is not an error.
fn to_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { path: PathBuf::from("<stdout>"), source: e })
        }
        _ => Ok(()),
    }
}

/// Writes to `--out` (plus a provenance sidecar for CSV) or to stdout.
fn emit(cli: &Cli, text: &str, format: Format) -> Result<()> {
    match &cli.out {
        Some(path) => {
            write_file(path, text)?;
            if format == Format::Csv {
                write_file(&with_suffix(path, ".provenance.json"), &pretty(&Provenance::of(cli)))?;
            }
            Ok(())
        }
        None => to_stdout(text),
    }
}

fn report_json(cli: &Cli, key: &str, value: Value, extra: Option<(&str, Value)>) -> String {
    let mut obj = json!({ "provenance": Provenance::of(cli) });
    obj[key] = value;
    if let Some((k, v)) = extra {
        obj[k] = v;
    }
    pretty(&obj)
}

fn scheme_params(args: &SchemeArgs, seed: u64) -> Result<SchemeParams> {
    let mut params = SchemeParams::new(args.scheme, args.n, seed).with_model(args.key_model.into());
    if let Some(m) = args.m {
        params = params.with_m(m);
    }
    params.validate()?;
    Ok(params)
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn cmd_keygen(cli: &Cli, args: &KeygenArgs) -> Result<bool> {
    let dir = cli.out.as_ref().ok_or_else(|| CliError::Usage("keygen needs --out DIR".into()))?;
    let params = scheme_params(&args.scheme, cli.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let (sk, pks) = keygen(&params, args.count, &mut rng)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![("private.json".to_string(), pretty(&sk))];
    let width = (args.count.saturating_sub(1)).to_string().len().max(3);
    for (idx, pk) in pks.iter().enumerate() {
        files.push((format!("public-{idx:0width$}.json"), pretty(pk)));
    }
    files.push(("provenance.json".to_string(), pretty(&Provenance::of(cli))));
    let mut summary = String::new();
    for (name, text) in &files {
        write_file(&dir.join(name), text)?;
        summary.push_str(&format!("{name} sha256:{}\n", fingerprint(text.as_bytes())));
    }
    to_stdout(&summary)?;
    Ok(true)
}

fn cmd_encrypt(cli: &Cli, args: &EncryptArgs) -> Result<bool> {
    let mut pk: PublicKey = read_json(&args.public)?;
    pk.validate()?;
    let marker = with_suffix(&args.public, ".used");
    if marker.exists() && !args.allow_reuse {
        return Err(qpke_core::QpkeError::PublicKeyConsumed.into());
    }
    if args.allow_reuse {
        pk.allow_reuse();
    }
    let message: Bits = args.message.parse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let ct = encrypt(&mut pk, &message, &mut rng)?;
    emit(cli, &pretty(&ct), Format::Json)?;
    write_file(&marker, "")?;
    Ok(true)
}

fn cmd_decrypt(cli: &Cli, args: &DecryptArgs) -> Result<bool> {
    let sk: PrivateKey = read_json(&args.private)?;
    sk.validate()?;
    let ct: Ciphertext = read_json(&args.ciphertext)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let message = sk.decrypt(&ct, &mut rng)?;
    let text = match format_of(cli, Format::Json) {
        Format::Json => pretty(&json!({ "scheme": sk.scheme, "message": message })),
        Format::Csv => format!("scheme,message\n{},{}\n", sk.scheme, message),
    };
    emit(cli, &text, format_of(cli, Format::Json))?;
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub scheme: SchemeId,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub dense_checks: usize,
    pub dense_agreed: usize,
}

fn cmd_roundtrip(cli: &Cli, args: &RoundtripArgs) -> Result<bool> {
    let params = scheme_params(&args.scheme, cli.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut report = RoundtripReport {
        scheme: params.scheme,
        n: params.n,
        m: params.m,
        trials: args.trials,
        successes: 0,
        failures: 0,
        dense_checks: 0,
        dense_agreed: 0,
    };
    if args.trials > 0 {
        let mut sk = PrivateKey::generate(&params, &mut rng)?;
        let step = (args.trials / 10).max(1);
        for trial in 0..args.trials {
            let t = round_trip(&mut sk, &mut rng)?;
            if t.succeeded() {
                report.successes += 1;
            } else {
                report.failures += 1;
            }
            if trial % step == 0 && report.dense_checks < 10 {
                report.dense_checks += 1;
                if sk.decrypt_dense(&t.ciphertext)? == Some(t.message) {
                    report.dense_agreed += 1;
                }
            }
        }
    }
    let format = format_of(cli, Format::Json);
    let text = match format {
        Format::Json => report_json(cli, "report", serde_json::to_value(&report).expect("report"), None),
        Format::Csv => format!(
            "scheme,n,m,trials,successes,dense_checks,dense_agreed,seed\n{},{},{},{},{},{},{},{}\n",
            report.scheme,
            report.n,
            report.m,
            report.trials,
            report.successes,
            report.dense_checks,
            report.dense_agreed,
            cli.seed
        ),
    };
    emit(cli, &text, format)?;
    Ok(report.failures == 0 && report.dense_agreed == report.dense_checks)
}

fn evaluate(target: AnalyzeTarget, n: usize, t: usize, grid: &GridArgs, seed: u64) -> qpke_core::Result<Vec<SecurityReport>> {
    let bit = |b: bool| Bits::from_bools(&[b]);
    let mut reports = match target {
        AnalyzeTarget::SigmaBound => vec![sigma_bound(n)?],
        AnalyzeTarget::ChannelIdentity => vec![channel_identity(n, false)?, channel_identity(n, true)?],
        AnalyzeTarget::SchemeACipher => vec![scheme_a_cipher(n)?],
        AnalyzeTarget::SchemeBCipher => vec![cipher_distance(SchemeId::B, n, &bit(false)?, &bit(true)?)?],
        AnalyzeTarget::SchemeM1Cipher | AnalyzeTarget::SchemeM2Cipher => {
            let scheme = if target == AnalyzeTarget::SchemeM1Cipher { SchemeId::M1 } else { SchemeId::M2 };
            vec![cipher_distance(scheme, n, &Bits::zeros(n), &Bits::ones(n))?, pubkey_leakage(scheme, n)?]
        }
        AnalyzeTarget::PubkeyLeakage => vec![pubkey_leakage(grid.scheme.unwrap_or(SchemeId::A), n)?],
        AnalyzeTarget::Multicopy => {
            let model = match grid.key_model {
                MixtureModel::UniformK => KeyModel::UniformK,
                MixtureModel::SampledAnf => KeyModel::SampledAnf { samples: grid.samples },
            };
            let spec = MixtureSpec::new(grid.scheme.unwrap_or(SchemeId::B), n, bit(false)?)
                .with_copies(t, grid.reuse)
                .with_key_model(model, seed);
            vec![multicopy_distance(&spec)?]
        }
        AnalyzeTarget::Pan10Bounds => pan10_mixture_distance(n, t)?,
    };
    for r in &mut reports {
        r.seed = seed;
    }
    Ok(reports)
}

fn cmd_analyze(cli: &Cli, targets: &[AnalyzeTarget], grid: &GridArgs, skip_invalid: bool) -> Result<bool> {
    let mut points = Vec::new();
    for &target in targets {
        for &n in &grid.n.0 {
            if target.uses_t() {
                points.extend(grid.t.0.iter().map(|&t| (target, n, t)));
            } else {
                points.push((target, n, 1));
            }
        }
    }
    let results: Vec<_> =
        points.par_iter().map(|&(target, n, t)| evaluate(target, n, t, grid, cli.seed)).collect();
    let mut reports = Vec::new();
    for ((target, n, t), result) in points.iter().zip(results) {
        match result {
            Ok(rs) => reports.extend(rs),
            Err(e) if skip_invalid => eprintln!("skipped {target:?} n={n} t={t}: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    let all_hold = reports.iter().all(SecurityReport::holds);
    for r in reports.iter().filter(|r| !r.holds()) {
        eprintln!("bound violated: {}", r.csv_row());
    }
    let format = format_of(cli, Format::Csv);
    let text = match format {
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => report_json(
            cli,
            "reports",
            serde_json::to_value(&reports).expect("reports"),
            Some(("all_hold", Value::Bool(all_hold))),
        ),
    };
    emit(cli, &text, format)?;
    Ok(all_hold)
}

/// Independent seed for point `(a, b)` of a run.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((a << 32) | (b & 0xffff_ffff));
    rng.gen()
}

#[derive(Debug, Clone, Serialize)]
struct RecoverySummary {
    n: usize,
    runs: usize,
    max_copies: usize,
    successes: usize,
    success_rate: f64,
    mean_copies: f64,
}

fn batch_csv(outcomes: &[AttackOutcome]) -> String {
    let mut s = format!("{BATCH_CSV_HEADER}\n");
    for o in outcomes {
        s.push_str(&o.csv_row());
        s.push('\n');
    }
    s
}

fn cmd_attack(cli: &Cli, args: &AttackArgs) -> Result<bool> {
    let format = format_of(cli, Format::Json);
    match args.target {
        AttackKind::Pan10Key => {
            let mut summaries = Vec::new();
            let mut outcomes = Vec::new();
            for &n in &args.n.0 {
                let max_copies = args.max_copies.unwrap_or(4 * n);
                let runs: Vec<AttackOutcome> = (0..args.runs)
                    .into_par_iter()
                    .map(|r| pan10_attack_run(n, max_copies, derive_seed(cli.seed, n as u64, r as u64)))
                    .collect::<qpke_core::Result<_>>()?;
                let successes = runs.iter().filter(|o| o.success).count();
                let copies: usize = runs.iter().map(|o| o.copies_used).sum();
                summaries.push(RecoverySummary {
                    n,
                    runs: args.runs,
                    max_copies,
                    successes,
                    success_rate: successes as f64 / args.runs.max(1) as f64,
                    mean_copies: copies as f64 / args.runs.max(1) as f64,
                });
                outcomes.extend(runs);
            }
            let text = match format {
                Format::Json => report_json(
                    cli,
                    "summaries",
                    serde_json::to_value(&summaries).expect("summaries"),
                    Some(("outcomes", serde_json::to_value(&outcomes).expect("outcomes"))),
                ),
                Format::Csv => batch_csv(&outcomes),
            };
            emit(cli, &text, format)?;
            if let (Some(path), Format::Json) = (&cli.out, format) {
                write_file(&with_suffix(path, ".batch.csv"), &batch_csv(&outcomes))?;
            }
            for s in &summaries {
                eprintln!("n={} success {:.3} mean copies {:.2}", s.n, s.success_rate, s.mean_copies);
            }
            Ok(true)
        }
        AttackKind::OwtBaseline => {
            let results: Vec<OwtOutcome> = args
                .n
                .0
                .par_iter()
                .map(|&n| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cli.seed, n as u64, 0));
                    owt_inversion_baseline(n, args.trials, &mut rng)
                })
                .collect::<qpke_core::Result<_>>()?;
            let ok = results.iter().all(|r| r.within_sigmas(3.0));
            let text = match format {
                Format::Json => report_json(
                    cli,
                    "outcomes",
                    serde_json::to_value(&results).expect("outcomes"),
                    Some(("all_hold", Value::Bool(ok))),
                ),
                Format::Csv => {
                    let mut s = "n,trials,hits,rate,expected,sigma,seed\n".to_string();
                    for r in &results {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            r.n,
                            r.trials,
                            r.hits,
                            qpke_core::analysis::format_float(r.rate),
                            qpke_core::analysis::format_float(r.expected),
                            qpke_core::analysis::format_float(r.sigma),
                            cli.seed
                        ));
                    }
                    s
                }
            };
            emit(cli, &text, format)?;
            Ok(ok)
        }
        AttackKind::Distinguish => {
            let outcomes: Vec<AttackOutcome> = args
                .n
                .0
                .par_iter()
                .map(|&n| {
                    let seed = derive_seed(cli.seed, n as u64, 0);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    ciphertext_distinguisher(args.scheme, n, args.samples, seed, &mut rng)
                })
                .collect::<qpke_core::Result<_>>()?;
            let ok = outcomes.iter().all(|o| o.statistics.is_some_and(|s| s.under_ceiling(3.0)));
            let text = match format {
                Format::Json => report_json(
                    cli,
                    "outcomes",
                    serde_json::to_value(&outcomes).expect("outcomes"),
                    Some(("all_hold", Value::Bool(ok))),
                ),
                Format::Csv => batch_csv(&outcomes),
            };
            emit(cli, &text, format)?;
            Ok(ok)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_point() {
        let a = derive_seed(7, 8, 0);
        assert_eq!(a, derive_seed(7, 8, 0));
        assert_ne!(a, derive_seed(7, 8, 1));
        assert_ne!(a, derive_seed(7, 9, 0));
        assert_ne!(a, derive_seed(8, 8, 0));
    }

    #[test]
    fn suffix_appends() {
        assert_eq!(with_suffix(Path::new("out/a.csv"), ".provenance.json"), PathBuf::from("out/a.csv.provenance.json"));
    }

    #[test]
    fn fingerprint_is_sha256_hex() {
        assert_eq!(fingerprint(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
