//! Adversaries: recovering a pan10 basis string from copies of one public
//! key, the guessing attack on a one-way transformation, and the IND-CPA
//! distinguisher built on the Helstrom measurement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{binomial_sigma, cipher_mixture, cipher_mixture_a, helstrom_projector, MixtureSpec};
use crate::bits::Bits;
use crate::boolfn::{gf2_nullspace, KeyFunction, RandomOracle};
use crate::error::{QpkeError, Result};
use crate::qmat::{trace_distance, C64};
use crate::qsym::{apply_gate_dense, Gate};
use crate::schemes::{encrypt, FunctionModel, Label, PrivateKey, PublicKey, SchemeId, SchemeParams};

pub const BATCH_CSV_HEADER: &str = "target,n,copies_used,success,seed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackTarget {
    pub attack: String,
    pub scheme: SchemeId,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameStatistics {
    pub samples: usize,
    pub empirical: f64,
    pub ceiling: f64,
    pub sigma: f64,
}

impl GameStatistics {
    /// Empirical rate does not exceed the ceiling by more than `k` sigma.
    pub fn under_ceiling(&self, k: f64) -> bool {
        self.empirical <= self.ceiling + k * self.sigma + 1e-12
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.empirical - self.ceiling).abs() <= k * self.sigma + 1e-12
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub target: AttackTarget,
    pub success: bool,
    pub copies_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered: Option<Bits>,
    #[serde(default)]
    pub equations: Vec<Bits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<GameStatistics>,
}

impl AttackOutcome {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.target.attack, self.target.n, self.copies_used, self.success, self.target.seed
        )
    }
}

/// Outcome distribution of measuring `H^⊗n |ψ>` in the computational basis.
fn hadamard_probabilities(v: &[C64], n: usize) -> Result<Vec<f64>> {
    let mut v = v.to_vec();
    for q in 0..n {
        v = apply_gate_dense(&v, n, Gate::H, q)?;
    }
    Ok(v.iter().map(|a| a.norm_sqr()).collect())
}

fn inverse_cdf<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let r = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (idx, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = idx;
        if r < acc {
            return idx;
        }
    }
    last
}

/// Measures each copy after `H^⊗n`, keeping every outcome `y` as the
/// equation `y·k = 0`, until the solution space is one-dimensional.
/// `truth` is the challenger's `k`, used only to score the run.
pub fn pan10_key_recovery<I, R>(keys: I, truth: &Bits, max_copies: usize, seed: u64, rng: &mut R) -> Result<AttackOutcome>
where
    I: IntoIterator<Item = PublicKey>,
    R: Rng + ?Sized,
{
    let n = truth.width();
    let target = AttackTarget { attack: "pan10-key".into(), scheme: SchemeId::Pan10, n, seed };
    let mut label: Option<Label> = None;
    let mut equations = Vec::new();
    let mut recovered = None;
    for pk in keys.into_iter().take(max_copies) {
        if pk.scheme != SchemeId::Pan10 || pk.n != n {
            return Err(QpkeError::InvalidParameters("expected pan10 keys of matching width".into()));
        }
        match &label {
            Some(l) if *l != pk.label => {
                return Err(QpkeError::InvalidParameters("public keys do not share one label".into()));
            }
            Some(_) => {}
            None => label = Some(pk.label.clone()),
        }
        let probs = hadamard_probabilities(&pk.quantum.to_vector()?, n)?;
        let y = Bits::new(n, inverse_cdf(&probs, rng) as u64)?;
        equations.push(y);
        let null = gf2_nullspace(&equations, n)?;
        match null.len() {
            0 => break,
            1 => {
                recovered = Some(null[0]);
                break;
            }
            _ => {}
        }
    }
    let success = recovered.as_ref() == Some(truth);
    Ok(AttackOutcome { target, success, copies_used: equations.len(), recovered, equations, statistics: None })
}

/// One complete key-recovery run: fresh pan10 key, one label, copies
/// issued on demand.
pub fn pan10_attack_run(n: usize, max_copies: usize, seed: u64) -> Result<AttackOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = SchemeParams::new(SchemeId::Pan10, n, seed);
    let mut sk = PrivateKey::generate(&params, &mut rng)?;
    let s = Bits::random(params.m, &mut rng);
    let truth = sk.basis_for(&s)?;
    let mut key_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let copies: Vec<PublicKey> =
        (0..max_copies).map(|_| sk.issue_public_key_at(&s, &mut key_rng)).collect::<Result<_>>()?;
    pan10_key_recovery(copies, &truth, max_copies, seed, &mut rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwtOutcome {
    pub n: usize,
    pub trials: usize,
    pub hits: usize,
    pub rate: f64,
    pub expected: f64,
    pub sigma: f64,
}

impl OwtOutcome {
    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.rate - self.expected).abs() <= k * self.sigma + 1e-12
    }
}

/// Fraction of independent input pairs on which `f` agrees: the chance
/// that a guessed preimage reproduces the image.
pub fn owt_inversion_rate<R: Rng + ?Sized>(f: &KeyFunction, trials: usize, rng: &mut R) -> Result<usize> {
    let m = f.input_width();
    let mut hits = 0;
    for _ in 0..trials {
        let (a, b) = (Bits::random(m, rng), Bits::random(m, rng));
        if f.evaluate(&a)? == f.evaluate(&b)? {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Input width for the baseline oracle; wide enough that equal inputs are
/// negligible next to output collisions.
pub fn owt_input_width(n: usize) -> usize {
    (n + 16).min(32)
}

/// Guessing attack against a random-oracle `f: {0,1}^m → {0,1}^n`.
pub fn owt_inversion_baseline<R: Rng + ?Sized>(n: usize, trials: usize, rng: &mut R) -> Result<OwtOutcome> {
    if n == 0 || n > 20 || trials == 0 {
        return Err(QpkeError::InvalidParameters("baseline needs 1 <= n <= 20 and trials >= 1".into()));
    }
    let f = KeyFunction::Oracle(RandomOracle::new(owt_input_width(n), n, rng.gen())?);
    let hits = owt_inversion_rate(&f, trials, rng)?;
    let expected = 0.5f64.powi(n as i32);
    Ok(OwtOutcome {
        n,
        trials,
        hits,
        rate: hits as f64 / trials as f64,
        expected,
        sigma: binomial_sigma(expected, trials),
    })
}

/// Plays the IND-CPA game: each round a fresh random-oracle key pair, a
/// fair coin chooses which of two messages is encrypted, and the adversary
/// answers with the Helstrom measurement for the averaged ciphertext states.
pub fn ciphertext_distinguisher<R: Rng + ?Sized>(scheme: SchemeId, n: usize, samples: usize, seed: u64, rng: &mut R) -> Result<AttackOutcome> {
    let messages: [Bits; 2] = match scheme {
        SchemeId::A | SchemeId::B => [Bits::from_bools(&[false])?, Bits::from_bools(&[true])?],
        SchemeId::M2 => [Bits::zeros(n), Bits::ones(n)],
        other => return Err(QpkeError::InvalidParameters(format!("distinguisher not defined for scheme {other}"))),
    };
    let (rho0, rho1) = match scheme {
        SchemeId::A => (cipher_mixture_a(n, false)?, cipher_mixture_a(n, true)?),
        _ => (
            cipher_mixture(&MixtureSpec::new(scheme, n, messages[0]))?,
            cipher_mixture(&MixtureSpec::new(scheme, n, messages[1]))?,
        ),
    };
    let ceiling = 0.5 + 0.5 * trace_distance(&rho0, &rho1)?;
    let proj = helstrom_projector(&rho0, &rho1)?;
    let params = SchemeParams::new(scheme, n, seed).with_model(FunctionModel::Oracle);
    let mut wins = 0usize;
    for _ in 0..samples {
        let mut sk = PrivateKey::generate(&params, rng)?;
        let mut pk = sk.issue_public_key(rng)?;
        let b = rng.gen::<bool>();
        let ct = encrypt(&mut pk, &messages[b as usize], rng)?;
        let psi = ct.quantum.to_vector()?;
        let projected = proj.apply(&psi)?;
        let p0: f64 = psi.iter().zip(&projected).map(|(a, b)| (a.conj() * b).re).sum();
        let guess_one = rng.gen::<f64>() >= p0;
        if guess_one == b {
            wins += 1;
        }
    }
    let empirical = if samples == 0 { 0.5 } else { wins as f64 / samples as f64 };
    let stats = GameStatistics { samples, empirical, ceiling, sigma: binomial_sigma(ceiling, samples) };
    // Success: an advantage over guessing that sampling noise cannot explain.
    let success = empirical - 0.5 > 3.0 * binomial_sigma(0.5, samples);
    Ok(AttackOutcome {
        target: AttackTarget { attack: "distinguish".into(), scheme, n, seed },
        success,
        copies_used: samples,
        recovered: None,
        equations: Vec::new(),
        statistics: Some(stats),
    })
}
