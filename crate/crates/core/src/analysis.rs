//! Exact density-operator mixtures for every scheme and the reports that
//! compare their trace distances with the stated bounds.
//!
//! Single-copy mixtures are built from rank-one terms. Mixtures of parity
//! classes use the identity `Σ_{x∈Ω_p} |x><x| / 2^(n-1) = (I + (-1)^p Z^⊗n) / 2^n`,
//! so `H_k` conjugation turns them into sums of signed Pauli strings; the
//! multi-copy and pan10 matrices are assembled entry by entry from those.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{QpkeError, Result};
use crate::qmat::{
    c, gates, hermitian_eigen, kron_power, qubit_dim, trace_distance, trace_norm, ComplexMatrix, C64, EXACT_TOL,
    SPECTRAL_TOL, ZERO_EIGENVALUE,
};
use crate::qsym::{ProductState, TwoTermState};
use crate::schemes::{FunctionModel, PrivateKey, SchemeId, SchemeParams};

/// Largest joint register (in qubits) a multi-copy mixture may occupy.
pub const MAX_JOINT_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyModel {
    /// `k = F(s)` uniform and independent across labels.
    #[default]
    UniformK,
    /// Explicit ANF private keys, `samples` of them.
    SampledAnf { samples: usize },
}

impl KeyModel {
    pub fn name(&self) -> &'static str {
        match self {
            KeyModel::UniformK => "uniform_k",
            KeyModel::SampledAnf { .. } => "sampled_anf",
        }
    }
}

impl fmt::Display for KeyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reuse {
    /// Every copy carries its own label.
    #[default]
    FreshS,
    /// All copies share one label, hence one `k`.
    SharedS,
}

impl Reuse {
    pub fn name(self) -> &'static str {
        match self {
            Reuse::FreshS => "fresh_s",
            Reuse::SharedS => "shared_s",
        }
    }
}

impl fmt::Display for Reuse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reuse {
    type Err = QpkeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh_s" | "fresh" => Ok(Reuse::FreshS),
            "shared_s" | "shared" => Ok(Reuse::SharedS),
            other => Err(QpkeError::Parse(format!("unknown reuse mode {other:?}"))),
        }
    }
}

/// Which ensemble to average: a ciphertext of `message` plus `copies`
/// extra public keys.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub scheme: SchemeId,
    pub n: usize,
    pub message: Bits,
    pub copies: usize,
    pub key_model: KeyModel,
    pub reuse: Reuse,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(scheme: SchemeId, n: usize, message: Bits) -> Self {
        Self { scheme, n, message, copies: 0, key_model: KeyModel::UniformK, reuse: Reuse::FreshS, seed: 0 }
    }

    pub fn with_copies(mut self, copies: usize, reuse: Reuse) -> Self {
        self.copies = copies;
        self.reuse = reuse;
        self
    }

    pub fn with_key_model(mut self, key_model: KeyModel, seed: u64) -> Self {
        self.key_model = key_model;
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QpkeError::InvalidParameters("n must be at least 1".into()));
        }
        if self.scheme == SchemeId::Pan10 {
            return Err(QpkeError::InvalidParameters("pan10 mixtures go through pan10_mixture_distance".into()));
        }
        let width = self.scheme.message_width(self.n);
        if self.message.width() != width {
            return Err(QpkeError::WidthMismatch { expected: width, actual: self.message.width() });
        }
        if self.reuse == Reuse::SharedS && self.n * (self.copies + 1) > MAX_JOINT_QUBITS {
            return Err(QpkeError::InvalidParameters(format!(
                "shared-label joint state needs n(t+1) <= {MAX_JOINT_QUBITS}"
            )));
        }
        Ok(())
    }
}

/// How the string `i` under `H_k` is distributed for one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Pad {
    /// Uniform over `Ω_p`.
    Parity(bool),
    Exact(Bits),
}

impl Pad {
    fn shifted(self, message: &Bits) -> Pad {
        match self {
            Pad::Parity(p) => Pad::Parity(p ^ message.get(0)),
            Pad::Exact(i) => Pad::Exact(i ^ *message),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct KeyPoint {
    k: Bits,
    pad: Pad,
    weight: f64,
}

fn key_points(scheme: SchemeId, n: usize, model: KeyModel, seed: u64) -> Result<Vec<KeyPoint>> {
    match model {
        KeyModel::UniformK => {
            let pads: Vec<Pad> = match scheme {
                SchemeId::A => vec![Pad::Parity(false)],
                SchemeId::B | SchemeId::Enh => vec![Pad::Parity(false), Pad::Parity(true)],
                SchemeId::M1 | SchemeId::M2 => Bits::all(n).map(Pad::Exact).collect(),
                SchemeId::Pan10 => return Err(QpkeError::InvalidParameters("pan10 has no product key states".into())),
            };
            let weight = 1.0 / ((1u64 << n) as f64 * pads.len() as f64);
            Ok(Bits::all(n).flat_map(|k| pads.iter().map(move |&pad| KeyPoint { k, pad, weight })).collect())
        }
        KeyModel::SampledAnf { samples } => {
            if samples == 0 {
                return Err(QpkeError::InvalidParameters("sampled_anf needs at least one sample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = SchemeParams::new(scheme, n, seed).with_model(FunctionModel::Anf);
            let mut counts: BTreeMap<(Bits, Pad), usize> = BTreeMap::new();
            for _ in 0..samples {
                let mut sk = PrivateKey::generate(&params, &mut rng)?;
                let pk = sk.issue_public_key(&mut rng)?;
                let state = pk.quantum.as_product()?;
                let (k, i) = (state.x_basis_mask(), state.encoded_bits());
                let pad = if scheme.is_multibit() { Pad::Exact(i) } else { Pad::Parity(i.parity()) };
                *counts.entry((k, pad)).or_default() += 1;
            }
            Ok(counts
                .into_iter()
                .map(|((k, pad), count)| KeyPoint { k, pad, weight: count as f64 / samples as f64 })
                .collect())
        }
    }
}

/// Adds `weight` times the Pauli string with X on `x` and Z on `z` (disjoint
/// masks over `qubits` qubits).
fn add_pauli(rho: &mut ComplexMatrix, x: u64, z: u64, weight: f64) {
    debug_assert_eq!(x & z, 0);
    for col in 0..rho.dim() {
        let sign = if (col as u64 & z).count_ones() % 2 == 1 { -weight } else { weight };
        let row = col ^ x as usize;
        let cur = rho.get(row, col);
        rho.set(row, col, cur + sign);
    }
}

/// `Σ_{x∈Ω_p} |x><x|` conjugated by `H_k`, averaged: `(I + (-1)^p P_k) / 2^n`
/// expanded over `blocks` tensor factors `(k_a, p_a)`, all added with `weight`.
fn add_parity_blocks(rho: &mut ComplexMatrix, n: usize, blocks: &[(Bits, bool)], weight: f64) {
    let per_block = weight / ((1u64 << (n * blocks.len())) as f64);
    let full = (1u64 << n) - 1;
    for subset in 0..(1u32 << blocks.len()) {
        let (mut x, mut z, mut sign) = (0u64, 0u64, 1.0);
        for (a, &(k, p)) in blocks.iter().enumerate() {
            let shift = n * (blocks.len() - 1 - a);
            if subset >> (blocks.len() - 1 - a) & 1 == 1 {
                x |= k.value() << shift;
                z |= (!k.value() & full) << shift;
                if p {
                    sign = -sign;
                }
            }
        }
        add_pauli(rho, x, z, sign * per_block);
    }
}

fn add_pad_blocks(rho: &mut ComplexMatrix, n: usize, k: Bits, pads: &[Pad], weight: f64) -> Result<()> {
    if let Some(parities) = pads.iter().map(|p| if let Pad::Parity(b) = p { Some(*b) } else { None }).collect::<Option<Vec<_>>>() {
        let blocks: Vec<(Bits, bool)> = parities.into_iter().map(|p| (k, p)).collect();
        add_parity_blocks(rho, n, &blocks, weight);
        return Ok(());
    }
    let mut v = vec![c(1.0, 0.0)];
    for pad in pads {
        let Pad::Exact(i) = pad else {
            return Err(QpkeError::InvalidParameters("mixed pad kinds".into()));
        };
        v = crate::qmat::kron_vec(&v, &ProductState::encoded(i, &k)?.to_vector()?);
    }
    rho.add_outer(&v, weight);
    Ok(())
}

fn check_scheme(scheme: SchemeId, allowed: &[SchemeId]) -> Result<()> {
    if allowed.contains(&scheme) {
        Ok(())
    } else {
        Err(QpkeError::InvalidParameters(format!("operation not defined for scheme {scheme}")))
    }
}

/// Averaged public-key state for `spec.scheme`.
pub fn pubkey_mixture(spec: &MixtureSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let dim = qubit_dim(spec.n)?;
    let mut rho = ComplexMatrix::zeros(dim);
    for p in key_points(spec.scheme, spec.n, spec.key_model, spec.seed)? {
        add_pad_blocks(&mut rho, spec.n, p.k, &[p.pad], p.weight)?;
    }
    Ok(rho)
}

/// Averaged ciphertext state for `spec.message`, one copy.
pub fn cipher_mixture(spec: &MixtureSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let dim = qubit_dim(spec.n)?;
    let mut rho = ComplexMatrix::zeros(dim);
    for p in key_points(spec.scheme, spec.n, spec.key_model, spec.seed)? {
        add_pad_blocks(&mut rho, spec.n, p.k, &[p.pad.shifted(&spec.message)], p.weight)?;
    }
    Ok(rho)
}

/// Ciphertext together with `spec.copies` public keys under one shared
/// label: `Σ_k w_k ρ_{k,b} ⊗ τ_k^⊗t`.
pub fn joint_mixture(spec: &MixtureSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let dim = qubit_dim(spec.n * (spec.copies + 1))?;
    let mut rho = ComplexMatrix::zeros(dim);
    for p in key_points(spec.scheme, spec.n, spec.key_model, spec.seed)? {
        let mut pads = vec![p.pad.shifted(&spec.message)];
        pads.extend(std::iter::repeat_n(p.pad, spec.copies));
        add_pad_blocks(&mut rho, spec.n, p.k, &pads, p.weight)?;
    }
    Ok(rho)
}

/// `σ_b`: uniform mixture over `j ∈ Ω_b` of `⊗ H^{j_a}|0>`.
pub fn sigma_b(n: usize, b: bool) -> Result<ComplexMatrix> {
    let dim = qubit_dim(n)?;
    let mut rho = ComplexMatrix::zeros(dim);
    let weight = 1.0 / (1u64 << (n - 1)) as f64;
    let zeros = Bits::zeros(n);
    for j in Bits::all_with_parity(n, b) {
        rho.add_outer(&ProductState::encoded(&zeros, &j)?.to_vector()?, weight);
    }
    Ok(rho)
}

/// Scheme a ciphertext mixture from the closed sum over `i ∈ Ω_b` and all
/// `j` of `H^j X^i |0>`.
pub fn cipher_mixture_a(n: usize, b: bool) -> Result<ComplexMatrix> {
    let dim = qubit_dim(n)?;
    let mut rho = ComplexMatrix::zeros(dim);
    let weight = 1.0 / (1u64 << (2 * n - 1)) as f64;
    for i in Bits::all_with_parity(n, b) {
        for j in Bits::all(n) {
            rho.add_outer(&ProductState::encoded(&i, &j)?.to_vector()?, weight);
        }
    }
    Ok(rho)
}

/// Ciphertext mixture by running the protocol symbolically over every
/// uniform-k key state and pad, merging equal rays before densifying.
pub fn protocol_cipher_mixture(scheme: SchemeId, n: usize, message: &Bits) -> Result<ComplexMatrix> {
    check_scheme(scheme, &[SchemeId::A, SchemeId::B, SchemeId::M1, SchemeId::M2, SchemeId::Enh])?;
    let width = scheme.message_width(n);
    if message.width() != width {
        return Err(QpkeError::WidthMismatch { expected: width, actual: message.width() });
    }
    let dim = qubit_dim(n)?;
    let keys: Vec<Bits> = match scheme {
        SchemeId::A => Bits::all_with_parity(n, false).collect(),
        _ => Bits::all(n).collect(),
    };
    let pads: Vec<Bits> = if scheme.is_multibit() {
        vec![*message]
    } else {
        Bits::all_with_parity(n, message.get(0)).collect()
    };
    let mut counts: BTreeMap<ProductState, usize> = BTreeMap::new();
    let mut total = 0usize;
    for k in Bits::all(n) {
        for i in &keys {
            let pk = ProductState::encoded(i, &k)?;
            for j in &pads {
                *counts.entry(pk.apply_yj(j)?.canonical()).or_default() += 1;
                total += 1;
            }
        }
    }
    let mut rho = ComplexMatrix::zeros(dim);
    for (state, count) in counts {
        rho.add_outer(&state.to_vector()?, count as f64 / total as f64);
    }
    Ok(rho)
}

/// Uniform-k ciphertext mixture for b, m1 or m2.
pub fn cipher_mixture_uniform(scheme: SchemeId, n: usize, message: &Bits) -> Result<ComplexMatrix> {
    check_scheme(scheme, &[SchemeId::B, SchemeId::M1, SchemeId::M2])?;
    protocol_cipher_mixture(scheme, n, message)
}

fn qubits_of(rho: &ComplexMatrix) -> Result<usize> {
    let dim = rho.dim();
    if !dim.is_power_of_two() {
        return Err(QpkeError::InvalidParameters(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `U^⊗n ρ U^⊗n†` with `U` the quarter turn about y.
pub fn channel_e1(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = qubits_of(rho)?;
    rho.conjugate_by(&kron_power(&gates::y_quarter_turn(), n)?)
}

/// `2^-n Σ_k H_k ρ H_k`.
pub fn channel_e2(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = qubits_of(rho)?;
    let (h, id) = (gates::hadamard(), gates::identity());
    let mut out = ComplexMatrix::zeros(rho.dim());
    let weight = 1.0 / (1u64 << n) as f64;
    for k in Bits::all(n) {
        let factors: Vec<&ComplexMatrix> = k.iter().map(|b| if b { &h } else { &id }).collect();
        let hk = crate::qmat::kron_all(factors)?;
        out.add_assign_scaled(&rho.conjugate_by(&hk)?, weight)?;
    }
    Ok(out)
}

/// How a computed value is compared with its bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed - bound| <= tol`.
    Equal,
    /// `computed <= bound + tol`.
    AtMost,
    /// `computed < bound`.
    Below,
    /// `computed > bound`.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub quantity: String,
    pub scheme: SchemeId,
    pub n: usize,
    pub t: usize,
    pub key_model: String,
    pub reuse: String,
    pub computed: f64,
    pub bound: f64,
    pub margin: f64,
    pub seed: u64,
    pub relation: Relation,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
}

pub const CSV_HEADER: &str = "quantity,scheme,n,t,key_model,reuse,computed,bound,margin,seed";

/// Twelve significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

impl SecurityReport {
    pub fn new(quantity: &str, scheme: SchemeId, n: usize, t: usize, computed: f64, bound: f64, relation: Relation) -> Self {
        let tolerance = match relation {
            Relation::Equal => EXACT_TOL,
            Relation::AtMost => SPECTRAL_TOL,
            Relation::Below | Relation::Above => 0.0,
        };
        Self {
            quantity: quantity.into(),
            scheme,
            n,
            t,
            key_model: KeyModel::UniformK.name().into(),
            reuse: Reuse::FreshS.name().into(),
            computed,
            bound,
            margin: bound - computed,
            seed: 0,
            relation,
            tolerance,
            regime: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn with_model(mut self, key_model: KeyModel, reuse: Reuse, seed: u64) -> Self {
        self.key_model = key_model.name().into();
        self.reuse = reuse.name().into();
        self.seed = seed;
        self
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Equal => (self.computed - self.bound).abs() <= self.tolerance,
            Relation::AtMost => self.computed <= self.bound + self.tolerance,
            Relation::Below => self.computed < self.bound + self.tolerance,
            Relation::Above => self.computed > self.bound - self.tolerance,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.quantity,
            self.scheme,
            self.n,
            self.t,
            self.key_model,
            self.reuse,
            format_float(self.computed),
            format_float(self.bound),
            format_float(self.margin),
            self.seed
        )
    }
}

/// `D(σ_0, σ_1)` against `(√2/2)^n`.
pub fn sigma_bound(n: usize) -> Result<SecurityReport> {
    let d = trace_distance(&sigma_b(n, false)?, &sigma_b(n, true)?)?;
    Ok(SecurityReport::new("sigma-distance", SchemeId::A, n, 1, d, FRAC_1_SQRT_2.powi(n as i32), Relation::Equal))
}

/// Largest entrywise gap between `ℰ2∘ℰ1(σ_b)` and `ρ_b`.
pub fn channel_identity(n: usize, b: bool) -> Result<SecurityReport> {
    let lhs = channel_e2(&channel_e1(&sigma_b(n, b)?)?)?;
    let gap = lhs.max_abs_diff(&cipher_mixture_a(n, b)?)?;
    let quantity = if b { "channel-identity-b1" } else { "channel-identity-b0" };
    Ok(SecurityReport::new(quantity, SchemeId::A, n, 1, gap, 0.0, Relation::Equal))
}

/// Scheme a ciphertext distance against `(√2/2)^n`.
pub fn scheme_a_cipher(n: usize) -> Result<SecurityReport> {
    let rho0 = cipher_mixture_a(n, false)?;
    let rho1 = cipher_mixture_a(n, true)?;
    rho0.check_density()?;
    rho1.check_density()?;
    let d = trace_distance(&rho0, &rho1)?;
    Ok(SecurityReport::new("cipher-distance", SchemeId::A, n, 1, d, FRAC_1_SQRT_2.powi(n as i32), Relation::AtMost))
}

/// Distance between the ciphertext mixtures of two messages; zero for b, m1, m2.
pub fn cipher_distance(scheme: SchemeId, n: usize, m0: &Bits, m1: &Bits) -> Result<SecurityReport> {
    check_scheme(scheme, &[SchemeId::B, SchemeId::M1, SchemeId::M2])?;
    let rho0 = cipher_mixture_uniform(scheme, n, m0)?;
    let rho1 = cipher_mixture_uniform(scheme, n, m1)?;
    rho0.check_density()?;
    rho1.check_density()?;
    let d = trace_distance(&rho0, &rho1)?;
    Ok(SecurityReport::new("cipher-distance", scheme, n, 1, d, 0.0, Relation::Equal))
}

/// Largest entrywise gap between a mixture and `I/2^n`.
pub fn maximally_mixed_gap(rho: &ComplexMatrix) -> Result<f64> {
    rho.max_abs_diff(&ComplexMatrix::maximally_mixed(rho.dim()))
}

/// Uniform-k ciphertext mixture of one message against `I/2^n`.
pub fn cipher_uniformity(scheme: SchemeId, n: usize, message: &Bits) -> Result<SecurityReport> {
    let gap = maximally_mixed_gap(&cipher_mixture_uniform(scheme, n, message)?)?;
    Ok(SecurityReport::new("cipher-vs-mixed", scheme, n, 1, gap, 0.0, Relation::Equal))
}

/// Public-key mixture against `I/2^n`: `½(√2/2)^n` for scheme a, zero for
/// the others.
pub fn pubkey_leakage(scheme: SchemeId, n: usize) -> Result<SecurityReport> {
    check_scheme(scheme, &[SchemeId::A, SchemeId::B, SchemeId::M1, SchemeId::M2, SchemeId::Enh])?;
    let width = scheme.message_width(n);
    let rho = pubkey_mixture(&MixtureSpec::new(scheme, n, Bits::zeros(width)))?;
    rho.check_density()?;
    let d = trace_distance(&rho, &ComplexMatrix::maximally_mixed(rho.dim()))?;
    let expected = if scheme == SchemeId::A { 0.5 * FRAC_1_SQRT_2.powi(n as i32) } else { 0.0 };
    Ok(SecurityReport::new("pubkey-leakage", scheme, n, 1, d, expected, Relation::Equal).with_tolerance(SPECTRAL_TOL))
}

/// Scheme a public-key leakage.
pub fn pubkey_mixture_a(n: usize) -> Result<SecurityReport> {
    pubkey_leakage(SchemeId::A, n)
}

/// Distance between the messages 0 and 1 given a ciphertext plus `t`
/// public keys. With fresh labels under uniform k the copies are
/// independent of the ciphertext, so only the single-copy distance is
/// computed.
pub fn multicopy_distance(spec: &MixtureSpec) -> Result<SecurityReport> {
    check_scheme(spec.scheme, &[SchemeId::A, SchemeId::B, SchemeId::Enh])?;
    let one = Bits::from_bools(&[true])?;
    let zero = Bits::from_bools(&[false])?;
    let (d, regime) = match spec.reuse {
        Reuse::FreshS => {
            if spec.key_model != KeyModel::UniformK {
                return Err(QpkeError::InvalidParameters(
                    "fresh-label factorization holds only under uniform_k".into(),
                ));
            }
            let s0 = MixtureSpec { message: zero, copies: 0, ..spec.clone() };
            let s1 = MixtureSpec { message: one, copies: 0, ..spec.clone() };
            (trace_distance(&cipher_mixture(&s0)?, &cipher_mixture(&s1)?)?, "factorized")
        }
        Reuse::SharedS => {
            let rho0 = joint_mixture(&MixtureSpec { message: zero, ..spec.clone() })?;
            let rho1 = joint_mixture(&MixtureSpec { message: one, ..spec.clone() })?;
            (trace_distance(&rho0, &rho1)?, "joint")
        }
    };
    let mut report = SecurityReport::new("multicopy-distance", spec.scheme, spec.n, spec.copies, d, 1.0, Relation::AtMost)
        .with_model(spec.key_model, spec.reuse, spec.seed);
    report.regime = Some(regime.into());
    Ok(report)
}

/// `(I ± X^k)/2^n` summed over odd `k`, tensored as given by `signs`
/// (`None` is the identity-free difference factor `2X^k/2^n`).
fn pan10_operator(n: usize, factors: &[Option<bool>], subtract_mixed: bool) -> Result<ComplexMatrix> {
    let dim = qubit_dim(n * factors.len())?;
    let mut out = ComplexMatrix::zeros(dim);
    let odd: Vec<Bits> = Bits::all_with_parity(n, true).collect();
    let weight = 1.0 / odd.len() as f64;
    let norm = 1.0 / (1u64 << (n * factors.len())) as f64;
    for k in &odd {
        for subset in 0..(1u32 << factors.len()) {
            let mut x = 0u64;
            let mut coeff = weight * norm;
            let mut valid = true;
            for (a, f) in factors.iter().enumerate() {
                let shift = n * (factors.len() - 1 - a);
                let chosen = subset >> (factors.len() - 1 - a) & 1 == 1;
                match (f, chosen) {
                    (Some(_), false) => {}
                    (Some(minus), true) => {
                        x |= k.value() << shift;
                        if *minus {
                            coeff = -coeff;
                        }
                    }
                    (None, false) => valid = false,
                    (None, true) => {
                        x |= k.value() << shift;
                        coeff *= 2.0;
                    }
                }
            }
            if valid {
                add_pauli(&mut out, x, 0, coeff);
            }
        }
    }
    if subtract_mixed {
        out.add_assign_scaled(&ComplexMatrix::identity(dim), -norm)?;
    }
    Ok(out)
}

/// `½‖2^-(n-1) Σ_{k odd} (ρ_k^b)^⊗t − (I/2^n)^⊗t‖_tr`.
pub fn pan10_term(n: usize, t: usize, b: bool) -> Result<f64> {
    if t == 0 {
        return Ok(0.0);
    }
    Ok(0.5 * trace_norm(&pan10_operator(n, &vec![Some(b); t], true)?)?)
}

/// `½‖2^-(n-1) Σ_{k odd} (ρ_k^0 − ρ_k^1) ⊗ (ρ_k^0)^⊗(t−1)‖_tr`.
pub fn pan10_difference(n: usize, t: usize) -> Result<f64> {
    if t == 0 {
        return Ok(0.0);
    }
    let mut factors = vec![None];
    factors.extend(std::iter::repeat_n(Some(false), t - 1));
    Ok(0.5 * trace_norm(&pan10_operator(n, &factors, false)?)?)
}

/// `ρ_k^b` from two-term states averaged over `i`; the independent route.
pub fn pan10_key_state(k: &Bits, b: bool) -> Result<ComplexMatrix> {
    let n = k.width();
    let mut rho = ComplexMatrix::zeros(qubit_dim(n)?);
    let weight = 1.0 / (1u64 << n) as f64;
    for i in Bits::all(n) {
        let mut state = TwoTermState::new(i, *k, 0, 0)?;
        if b {
            state = state.apply_zall();
        }
        rho.add_outer(&state.to_vector()?, weight);
    }
    Ok(rho)
}

/// The three pan10 quantities at `(n, t)`: the two per-message terms
/// against `√(2^-(n-t+1))` and the message difference against
/// `√(2^-(n-t-1))`.
pub fn pan10_mixture_distance(n: usize, t: usize) -> Result<Vec<SecurityReport>> {
    if n < 2 {
        return Err(QpkeError::InvalidParameters("pan10 needs n >= 2".into()));
    }
    if n * t.max(1) > MAX_JOINT_QUBITS {
        return Err(QpkeError::InvalidParameters(format!("pan10 needs n*t <= {MAX_JOINT_QUBITS}")));
    }
    let exponent = |e: i64| 2f64.powf(-(e as f64) / 2.0);
    let term_bound = exponent(n as i64 - t as i64 + 1);
    let combined_bound = exponent(n as i64 - t as i64 - 1);
    let mut out = Vec::new();
    for b in [false, true] {
        let name = if b { "pan10-term-b1" } else { "pan10-term-b0" };
        out.push(SecurityReport::new(name, SchemeId::Pan10, n, t, pan10_term(n, t, b)?, term_bound, Relation::Below));
    }
    if t > 0 {
        out.push(SecurityReport::new(
            "pan10-combined",
            SchemeId::Pan10,
            n,
            t,
            pan10_difference(n, t)?,
            combined_bound,
            Relation::AtMost,
        ));
    }
    Ok(out)
}

/// Projector onto the eigenspace of `ρ0 − ρ1` with eigenvalue `>= 0`;
/// outcome "inside" guesses hypothesis 0.
pub fn helstrom_projector(rho0: &ComplexMatrix, rho1: &ComplexMatrix) -> Result<ComplexMatrix> {
    let diff = rho0.sub(rho1)?;
    let (values, vectors) = hermitian_eigen(&diff)?;
    let mut proj = ComplexMatrix::zeros(diff.dim());
    for (lambda, v) in values.iter().zip(&vectors) {
        if *lambda >= -ZERO_EIGENVALUE {
            proj.add_outer(v, 1.0);
        }
    }
    Ok(proj)
}

/// `tr(Πρ)`, real part.
pub fn outcome_probability(projector: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    Ok(projector.matmul(rho)?.trace().re.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelstromOutcome {
    pub analytic: f64,
    pub empirical: f64,
    pub samples: usize,
}

impl HelstromOutcome {
    /// Binomial standard deviation of the empirical rate around `analytic`.
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.analytic, self.samples)
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.empirical - self.analytic).abs() <= k * self.sigma() + 1e-12
    }
}

pub fn binomial_sigma(p: f64, samples: usize) -> f64 {
    (p * (1.0 - p) / samples.max(1) as f64).sqrt()
}

/// Analytic `½ + ½D` and the success rate of the Helstrom measurement over
/// `samples` equiprobable labeled draws.
pub fn helstrom_advantage<R: Rng + ?Sized>(
    rho0: &ComplexMatrix,
    rho1: &ComplexMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<HelstromOutcome> {
    let d = trace_distance(rho0, rho1)?;
    let proj = helstrom_projector(rho0, rho1)?;
    let p0 = [outcome_probability(&proj, rho0)?, outcome_probability(&proj, rho1)?];
    let mut wins = 0usize;
    for _ in 0..samples {
        let b = rng.gen::<bool>();
        let guess_zero = rng.gen::<f64>() < p0[b as usize];
        if guess_zero != b {
            wins += 1;
        }
    }
    let empirical = if samples == 0 { 0.5 } else { wins as f64 / samples as f64 };
    Ok(HelstromOutcome { analytic: 0.5 + 0.5 * d, empirical, samples })
}

/// Random density operator of rank `rank` on `qubits` qubits.
pub fn random_density<R: Rng + ?Sized>(qubits: usize, rank: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let dim = qubit_dim(qubits)?;
    let mut rho = ComplexMatrix::zeros(dim);
    let weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let mut v: Vec<C64> = (0..dim).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        rho.add_outer(&v, w / total);
    }
    Ok(rho)
}

/// Random Hermitian matrix with entries in `[-1, 1]`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        a.set(i, i, c(rng.gen_range(-1.0..1.0), 0.0));
        for j in i + 1..dim {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            a.set(i, j, z);
            a.set(j, i, z.conj());
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::kron;
    use proptest::prelude::*;

    fn bit(b: bool) -> Bits {
        Bits::from_bools(&[b]).unwrap()
    }

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn sigma_one_qubit() {
        let plus = ProductState::encoded(&bits("0"), &bits("1")).unwrap().to_density().unwrap();
        let zero = ProductState::encoded(&bits("0"), &bits("0")).unwrap().to_density().unwrap();
        assert!(sigma_b(1, false).unwrap().max_abs_diff(&zero).unwrap() < 1e-15);
        assert!(sigma_b(1, true).unwrap().max_abs_diff(&plus).unwrap() < 1e-15);
    }

    #[test]
    fn sigma_difference_is_a_tensor_power() {
        let zero = ProductState::encoded(&bits("0"), &bits("0")).unwrap().to_density().unwrap();
        let plus = ProductState::encoded(&bits("0"), &bits("1")).unwrap().to_density().unwrap();
        let one = zero.sub(&plus).unwrap();
        for n in 1..=5 {
            let diff = sigma_b(n, false).unwrap().sub(&sigma_b(n, true).unwrap()).unwrap();
            let expected = kron_power(&one, n).unwrap().scale(1.0 / (1u64 << (n - 1)) as f64);
            assert!(diff.max_abs_diff(&expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sigma_distance_closed_form() {
        for n in 1..=8 {
            assert!(sigma_bound(n).unwrap().holds(), "n={n}");
        }
    }

    #[test]
    fn scheme_a_one_qubit() {
        let zero = ProductState::encoded(&bits("0"), &bits("0")).unwrap().to_density().unwrap();
        let plus = ProductState::encoded(&bits("0"), &bits("1")).unwrap().to_density().unwrap();
        let expected = zero.add(&plus).unwrap().scale(0.5);
        assert!(cipher_mixture_a(1, false).unwrap().max_abs_diff(&expected).unwrap() < 1e-15);
        let r = scheme_a_cipher(1).unwrap();
        assert!((r.computed - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn formula_routes_agree() {
        for n in 1..=4 {
            for b in [false, true] {
                let formula = cipher_mixture_a(n, b).unwrap();
                let protocol = protocol_cipher_mixture(SchemeId::A, n, &bit(b)).unwrap();
                let pauli = cipher_mixture(&MixtureSpec::new(SchemeId::A, n, bit(b))).unwrap();
                assert!(formula.max_abs_diff(&protocol).unwrap() < 1e-10);
                assert!(formula.max_abs_diff(&pauli).unwrap() < 1e-10);
                assert!((formula.trace().re - 1.0).abs() < 1e-12);
            }
        }
        for scheme in [SchemeId::B, SchemeId::M1, SchemeId::M2] {
            let n = 3;
            let msg = Bits::all(scheme.message_width(n)).last().unwrap();
            let protocol = protocol_cipher_mixture(scheme, n, &msg).unwrap();
            let pauli = cipher_mixture(&MixtureSpec::new(scheme, n, msg)).unwrap();
            assert!(protocol.max_abs_diff(&pauli).unwrap() < 1e-10);
        }
    }

    #[test]
    fn channels() {
        let zero = ProductState::encoded(&bits("0"), &bits("0")).unwrap().to_density().unwrap();
        let plus = ProductState::encoded(&bits("0"), &bits("1")).unwrap().to_density().unwrap();
        assert!(channel_e1(&zero).unwrap().max_abs_diff(&plus).unwrap() < 1e-15);
        for n in 1..=4 {
            let mixed = ComplexMatrix::maximally_mixed(1 << n);
            assert!(channel_e2(&mixed).unwrap().max_abs_diff(&mixed).unwrap() < 1e-12);
            for b in [false, true] {
                assert!(channel_identity(n, b).unwrap().holds());
            }
        }
    }

    #[test]
    fn perfectly_hidden_mixtures() {
        let n = 3;
        assert!(cipher_distance(SchemeId::B, n, &bit(false), &bit(true)).unwrap().holds());
        assert!(cipher_distance(SchemeId::M2, n, &bits("010"), &bits("111")).unwrap().holds());
        assert!(cipher_uniformity(SchemeId::M1, n, &bits("101")).unwrap().holds());
        assert!(pubkey_leakage(SchemeId::M2, n).unwrap().holds());
        assert!(pubkey_leakage(SchemeId::B, n).unwrap().holds());
    }

    #[test]
    fn scheme_a_pubkey_leaks() {
        let r = pubkey_mixture_a(1).unwrap();
        assert!((r.computed - 2f64.sqrt() / 4.0).abs() < 1e-12);
        for n in 1..=5 {
            let r = pubkey_mixture_a(n).unwrap();
            assert!(r.computed > 0.0 && r.holds(), "{r:?}");
        }
    }

    #[test]
    fn multicopy_regimes() {
        let fresh = MixtureSpec::new(SchemeId::B, 3, bit(false)).with_copies(2, Reuse::FreshS);
        assert!(multicopy_distance(&fresh).unwrap().computed < 1e-10);
        let mut last = -1.0;
        for t in 0..=2 {
            let shared = MixtureSpec::new(SchemeId::B, 3, bit(false)).with_copies(t, Reuse::SharedS);
            let r = multicopy_distance(&shared).unwrap();
            assert_eq!(r.regime.as_deref(), Some("joint"));
            assert!(r.computed >= last - 1e-10);
            if t == 0 {
                assert!(r.computed < 1e-10);
            } else {
                assert!(r.computed > 0.0 && r.computed < 1.0);
            }
            last = r.computed;
        }
        let too_big = MixtureSpec::new(SchemeId::B, 4, bit(false)).with_copies(2, Reuse::SharedS);
        assert!(multicopy_distance(&too_big).is_err());
    }

    #[test]
    fn joint_mixture_matches_rank_one_sum() {
        let n = 2;
        let spec = MixtureSpec::new(SchemeId::B, n, bit(true)).with_copies(1, Reuse::SharedS);
        let joint = joint_mixture(&spec).unwrap();
        let mut direct = ComplexMatrix::zeros(1 << (2 * n));
        let mut count = 0usize;
        for k in Bits::all(n) {
            for p in [false, true] {
                for x in Bits::all_with_parity(n, !p) {
                    for y in Bits::all_with_parity(n, p) {
                        let kk = k.concat(&k).unwrap();
                        let v = ProductState::encoded(&x.concat(&y).unwrap(), &kk).unwrap().to_vector().unwrap();
                        direct.add_outer(&v, 1.0);
                        count += 1;
                    }
                }
            }
        }
        let direct = direct.scale(1.0 / count as f64);
        assert!(joint.max_abs_diff(&direct).unwrap() < 1e-12);
        joint.check_density().unwrap();
    }

    #[test]
    fn sampled_anf_approaches_uniform() {
        let exact = cipher_mixture(&MixtureSpec::new(SchemeId::A, 3, bit(false))).unwrap();
        let gap = |samples| {
            let spec = MixtureSpec::new(SchemeId::A, 3, bit(false)).with_key_model(KeyModel::SampledAnf { samples }, 5);
            let rho = cipher_mixture(&spec).unwrap();
            rho.check_density().unwrap();
            trace_distance(&rho, &exact).unwrap()
        };
        assert!(gap(10_000) < gap(100));
    }

    #[test]
    fn pan10_key_state_pauli_form() {
        for k in Bits::all_with_parity(3, true) {
            for b in [false, true] {
                let dense = pan10_key_state(&k, b).unwrap();
                let mut pauli = ComplexMatrix::identity(8).scale(1.0 / 8.0);
                add_pauli(&mut pauli, k.value(), 0, if b { -1.0 / 8.0 } else { 1.0 / 8.0 });
                assert!(dense.max_abs_diff(&pauli).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn pan10_operator_matches_dense() {
        let (n, t) = (3, 2);
        let odd: Vec<Bits> = Bits::all_with_parity(n, true).collect();
        let mut term = ComplexMatrix::zeros(1 << (n * t));
        let mut diff = ComplexMatrix::zeros(1 << (n * t));
        for k in &odd {
            let r0 = pan10_key_state(k, false).unwrap();
            let r1 = pan10_key_state(k, true).unwrap();
            term.add_assign_scaled(&kron(&r0, &r0).unwrap(), 1.0 / odd.len() as f64).unwrap();
            diff.add_assign_scaled(&kron(&r0.sub(&r1).unwrap(), &r0).unwrap(), 1.0 / odd.len() as f64).unwrap();
        }
        let term = term.sub(&ComplexMatrix::maximally_mixed(1 << (n * t))).unwrap();
        assert!((0.5 * trace_norm(&term).unwrap() - pan10_term(n, t, false).unwrap()).abs() < 1e-10);
        assert!((0.5 * trace_norm(&diff).unwrap() - pan10_difference(n, t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn pan10_bounds_small() {
        for (n, t) in [(3, 1), (3, 2), (4, 1), (4, 2)] {
            for r in pan10_mixture_distance(n, t).unwrap() {
                assert!(r.holds(), "{r:?}");
            }
        }
        assert!(pan10_mixture_distance(3, 0).unwrap().iter().all(|r| r.computed == 0.0));
    }

    #[test]
    fn helstrom_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let same = helstrom_advantage(&rho, &rho, 20_000, &mut rng).unwrap();
        assert!((same.analytic - 0.5).abs() < 1e-12);
        assert!(same.within_sigmas(3.0));
        let zero = ProductState::computational(&bits("0")).unwrap().to_density().unwrap();
        let one = ProductState::computational(&bits("1")).unwrap().to_density().unwrap();
        let ortho = helstrom_advantage(&zero, &one, 1000, &mut rng).unwrap();
        assert!((ortho.analytic - 1.0).abs() < 1e-12);
        assert_eq!(ortho.empirical, 1.0);
    }

    #[test]
    fn csv_row_shape() {
        let r = sigma_bound(2).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("sigma-distance,a,2,1,uniform_k,fresh_s,5.00000000000e-1,"));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(sigma_b(13, false), Err(QpkeError::DimensionOverflow { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn channels_contract(seed in any::<u64>(), n in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(n, 2, &mut rng).unwrap();
            let sigma = random_density(n, 3, &mut rng).unwrap();
            let before = trace_distance(&rho, &sigma).unwrap();
            for channel in [channel_e1, channel_e2] {
                let (a, b) = (channel(&rho).unwrap(), channel(&sigma).unwrap());
                prop_assert!((a.trace().re - 1.0).abs() < 1e-10);
                prop_assert!(trace_distance(&a, &b).unwrap() <= before + 1e-9);
            }
        }

        #[test]
        fn trace_norm_is_multiplicative(seed in any::<u64>(), d1 in 1usize..=4, d2 in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(d1, &mut rng);
            let b = random_hermitian(d2, &mut rng);
            let lhs = trace_norm(&kron(&a, &b).unwrap()).unwrap();
            let rhs = trace_norm(&a).unwrap() * trace_norm(&b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        }
    }
}
