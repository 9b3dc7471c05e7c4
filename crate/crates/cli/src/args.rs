use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpke_core::analysis::Reuse;
use qpke_core::schemes::{FunctionModel, SchemeId};
use serde::Serialize;

use crate::range::Range;

#[derive(Parser, Debug, Serialize)]
#[command(name = "qpke", version, about = "Simulate and analyze conjugate-coding quantum public-key encryption")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (directory for keygen). Standard output when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate one private key and `count` public keys.
    Keygen(KeygenArgs),
    /// Encrypt a message under a public-key file.
    Encrypt(EncryptArgs),
    /// Decrypt a ciphertext file with a private-key file.
    Decrypt(DecryptArgs),
    /// Encrypt and decrypt random messages, counting failures.
    Roundtrip(RoundtripArgs),
    /// Compute security quantities and compare them with their bounds.
    Analyze(AnalyzeArgs),
    /// Run an adversary.
    Attack(AttackArgs),
    /// Analyze several targets over an (n, t) grid in parallel.
    Sweep(SweepArgs),
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.parse().map_err(|e: qpke_core::QpkeError| e.to_string())
}

fn parse_reuse(s: &str) -> Result<Reuse, String> {
    s.parse().map_err(|e: qpke_core::QpkeError| e.to_string())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivateModel {
    Anf,
    Oracle,
}

impl From<PrivateModel> for FunctionModel {
    fn from(m: PrivateModel) -> Self {
        match m {
            PrivateModel::Anf => FunctionModel::Anf,
            PrivateModel::Oracle => FunctionModel::Oracle,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SchemeArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: SchemeId,
    #[arg(long)]
    pub n: usize,
    /// Label width; defaults to 2n.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "anf")]
    pub key_model: PrivateModel,
}

#[derive(Args, Debug, Serialize)]
pub struct KeygenArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct EncryptArgs {
    #[arg(long)]
    pub public: PathBuf,
    /// One bit, or n bits for m1/m2.
    #[arg(long)]
    pub message: String,
    /// Permit encrypting again under an already used key.
    #[arg(long)]
    pub allow_reuse: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DecryptArgs {
    #[arg(long)]
    pub private: PathBuf,
    #[arg(long)]
    pub ciphertext: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzeTarget {
    SigmaBound,
    ChannelIdentity,
    SchemeACipher,
    SchemeBCipher,
    SchemeM1Cipher,
    SchemeM2Cipher,
    PubkeyLeakage,
    Multicopy,
    Pan10Bounds,
}

impl AnalyzeTarget {
    pub fn uses_t(self) -> bool {
        matches!(self, AnalyzeTarget::Multicopy | AnalyzeTarget::Pan10Bounds)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureModel {
    #[value(name = "uniform_k")]
    UniformK,
    #[value(name = "sampled_anf")]
    SampledAnf,
}

#[derive(Args, Debug, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub n: Range,
    /// Extra copies (multicopy) or copies (pan10-bounds).
    #[arg(long, default_value = "1")]
    pub t: Range,
    /// Scheme for pubkey-leakage and multicopy.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<SchemeId>,
    #[arg(long, value_parser = parse_reuse, default_value = "fresh_s")]
    pub reuse: Reuse,
    #[arg(long, value_enum, default_value = "uniform_k")]
    pub key_model: MixtureModel,
    /// Private keys drawn under sampled_anf.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub target: AnalyzeTarget,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// Comma-separated targets; all of them when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub targets: Vec<AnalyzeTarget>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Pan10Key,
    OwtBaseline,
    Distinguish,
}

#[derive(Args, Debug, Serialize)]
pub struct AttackArgs {
    #[arg(long, value_enum)]
    pub target: AttackKind,
    #[arg(long, default_value = "8")]
    pub n: Range,
    /// Independent key-recovery runs per n.
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Copy budget per key-recovery run; defaults to 4n.
    #[arg(long)]
    pub max_copies: Option<usize>,
    /// Guessing-attack trials per n.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// IND-CPA games per n.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, value_parser = parse_scheme, default_value = "b")]
    pub scheme: SchemeId,
}
