//! The six encryption protocols as keygen / encrypt / decrypt over symbolic
//! states.
//!
//! | scheme | private key | label | message |
//! |--------|-------------|-------|---------|
//! | `a`    | `F: m→n` | `s` | 1 bit |
//! | `b`    | `F1: m→n`, balanced `F2: m→1` | `s` | 1 bit |
//! | `m1`   | `F: m→n` | `(s1, s2)` | n bits |
//! | `m2`   | `F1, F2: m→n` | `s` | n bits |
//! | `enh`  | `F1: m→n`, balanced `F2: m→1`, `l` | `\|ψ_s>` | 1 bit |
//! | `pan10`| `F: m→n` (mapped to odd weight), `s → i` table | `s` | 1 bit |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bits::{Bits, MAX_WIDTH};
use crate::boolfn::{generate_balanced_f2, AnfFunction, AnfParams, KeyFunction, RandomOracle, DEFAULT_BALANCE_BUDGET, MAX_BALANCED_WIDTH};
use crate::error::{QpkeError, Result};
use crate::qmat::C64;
use crate::qsym::{apply_gate_dense, Gate, ProductState, TwoTermState};

/// Rejection budget when re-drawing `s` to match a parity bit.
pub const LABEL_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    A,
    B,
    M1,
    M2,
    Enh,
    Pan10,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [SchemeId::A, SchemeId::B, SchemeId::M1, SchemeId::M2, SchemeId::Enh, SchemeId::Pan10];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::A => "a",
            SchemeId::B => "b",
            SchemeId::M1 => "m1",
            SchemeId::M2 => "m2",
            SchemeId::Enh => "enh",
            SchemeId::Pan10 => "pan10",
        }
    }

    pub fn is_multibit(self) -> bool {
        matches!(self, SchemeId::M1 | SchemeId::M2)
    }

    pub fn message_width(self, n: usize) -> usize {
        if self.is_multibit() {
            n
        } else {
            1
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = QpkeError;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| QpkeError::Parse(format!("unknown scheme {s:?}")))
    }
}

/// How private functions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionModel {
    /// Coin-tossed algebraic normal form.
    #[default]
    Anf,
    /// Lazily sampled uniform function.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    pub scheme: SchemeId,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub model: FunctionModel,
    pub balance_budget: usize,
}

impl SchemeParams {
    /// Defaults: `m = 2n`, ANF private keys.
    pub fn new(scheme: SchemeId, n: usize, seed: u64) -> Self {
        Self { scheme, n, m: 2 * n, seed, model: FunctionModel::Anf, balance_budget: DEFAULT_BALANCE_BUDGET }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_model(mut self, model: FunctionModel) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QpkeError::InvalidParameters("n must be at least 1".into()));
        }
        if self.m <= self.n {
            return Err(QpkeError::InvalidParameters(format!(
                "m must exceed n (got m={}, n={})",
                self.m, self.n
            )));
        }
        if self.m > MAX_WIDTH || self.n + 1 > MAX_WIDTH {
            return Err(QpkeError::InvalidParameters(format!("widths limited to {MAX_WIDTH} bits")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivateKey {
    pub scheme: SchemeId,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<KeyFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<KeyFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<KeyFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Bits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pan10_table: Option<BTreeMap<Bits, Bits>>,
}

/// Classical (or, for the enhanced scheme, quantum) part that travels with
/// the key state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Classical(Bits),
    Pair([Bits; 2]),
    Concealed(ProductState),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantumPart {
    Product(ProductState),
    TwoTerm(TwoTermState),
}

impl QuantumPart {
    pub fn n(&self) -> usize {
        match self {
            QuantumPart::Product(p) => p.len(),
            QuantumPart::TwoTerm(t) => t.n(),
        }
    }

    pub fn to_vector(&self) -> Result<Vec<C64>> {
        match self {
            QuantumPart::Product(p) => p.to_vector(),
            QuantumPart::TwoTerm(t) => t.to_vector(),
        }
    }

    pub fn as_product(&self) -> Result<&ProductState> {
        match self {
            QuantumPart::Product(p) => Ok(p),
            QuantumPart::TwoTerm(_) => Err(QpkeError::InvalidParameters("expected a product state".into())),
        }
    }

    pub fn as_two_term(&self) -> Result<&TwoTermState> {
        match self {
            QuantumPart::TwoTerm(t) => Ok(t),
            QuantumPart::Product(_) => Err(QpkeError::InvalidParameters("expected a two-term state".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicKey {
    pub scheme: SchemeId,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub label: Label,
    pub quantum: QuantumPart,
    #[serde(skip)]
    consumed: bool,
    #[serde(skip)]
    reusable: bool,
}

impl PublicKey {
    pub fn new(scheme: SchemeId, n: usize, m: usize, label: Label, quantum: QuantumPart) -> Self {
        Self { scheme, n, m, seed: None, label, quantum, consumed: false, reusable: false }
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Lifts the single-use restriction; used to study key reuse.
    pub fn allow_reuse(&mut self) {
        self.reusable = true;
    }

    /// Structural checks for a key read from outside.
    pub fn validate(&self) -> Result<()> {
        if self.quantum.n() != self.n {
            return Err(QpkeError::WidthMismatch { expected: self.n, actual: self.quantum.n() });
        }
        let label_ok = match (&self.scheme, &self.label) {
            (SchemeId::M1, Label::Pair([a, b])) => a.width() == self.m && b.width() == self.m,
            (SchemeId::Enh, Label::Concealed(p)) => p.len() == self.m,
            (SchemeId::A | SchemeId::B | SchemeId::M2 | SchemeId::Pan10, Label::Classical(s)) => s.width() == self.m,
            _ => false,
        };
        let quantum_ok = matches!(
            (&self.scheme, &self.quantum),
            (SchemeId::Pan10, QuantumPart::TwoTerm(_))
                | (SchemeId::A | SchemeId::B | SchemeId::M1 | SchemeId::M2 | SchemeId::Enh, QuantumPart::Product(_))
        );
        if label_ok && quantum_ok {
            Ok(())
        } else {
            Err(QpkeError::InvalidParameters(format!("malformed {} public key", self.scheme)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ciphertext {
    pub scheme: SchemeId,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub label: Label,
    pub quantum: QuantumPart,
}

/// What an eavesdropper holds: the label and the quantum part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryView {
    pub view: String,
    pub scheme: SchemeId,
    pub n: usize,
    pub label: Label,
    pub quantum: QuantumPart,
}

pub trait Observable {
    fn adversary_view(&self) -> AdversaryView;
}

impl Observable for PublicKey {
    fn adversary_view(&self) -> AdversaryView {
        AdversaryView {
            view: "adversary".into(),
            scheme: self.scheme,
            n: self.n,
            label: self.label.clone(),
            quantum: self.quantum.clone(),
        }
    }
}

impl Observable for Ciphertext {
    fn adversary_view(&self) -> AdversaryView {
        AdversaryView {
            view: "adversary".into(),
            scheme: self.scheme,
            n: self.n,
            label: self.label.clone(),
            quantum: self.quantum.clone(),
        }
    }
}

/// Maps any string to an odd-weight one by fixing the last bit.
pub fn to_odd_weight(k: Bits) -> Bits {
    let mut k = k;
    if !k.parity() {
        k.flip(k.width() - 1);
    }
    k
}

fn draw_function<R: Rng + ?Sized>(params: &SchemeParams, n_out: usize, rng: &mut R) -> Result<KeyFunction> {
    match params.model {
        FunctionModel::Anf => Ok(KeyFunction::Anf(AnfFunction::generate(&AnfParams::new(params.m, n_out), rng)?)),
        FunctionModel::Oracle => Ok(KeyFunction::Oracle(RandomOracle::new(params.m, n_out, rng.gen())?)),
    }
}

fn draw_balanced<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<KeyFunction> {
    // Balance is a property of the whole truth table, so both models use the
    // explicit generator while it can be checked.
    if params.m <= MAX_BALANCED_WIDTH {
        Ok(KeyFunction::Anf(generate_balanced_f2(params.m, params.balance_budget, rng)?))
    } else {
        Ok(KeyFunction::Oracle(RandomOracle::new(params.m, 1, rng.gen())?))
    }
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field.as_ref().ok_or_else(|| QpkeError::InvalidParameters(format!("private key lacks {name}")))
}

impl PrivateKey {
    pub fn generate<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let SchemeParams { scheme, n, m, seed, .. } = *params;
        let mut key = PrivateKey { scheme, n, m, seed, f: None, f1: None, f2: None, l: None, pan10_table: None };
        match scheme {
            SchemeId::A | SchemeId::M1 | SchemeId::Pan10 => key.f = Some(draw_function(params, n, rng)?),
            SchemeId::B | SchemeId::Enh => {
                key.f1 = Some(draw_function(params, n, rng)?);
                key.f2 = Some(draw_balanced(params, rng)?);
            }
            SchemeId::M2 => {
                key.f1 = Some(draw_function(params, n, rng)?);
                key.f2 = Some(draw_function(params, n, rng)?);
            }
        }
        if scheme == SchemeId::Enh {
            key.l = Some(Bits::random(m, rng));
        }
        if scheme == SchemeId::Pan10 {
            key.pan10_table = Some(BTreeMap::new());
        }
        key.check_shapes()?;
        Ok(key)
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        let shape = |f: &Option<KeyFunction>, out: usize| match f {
            Some(f) => f.input_width() == m && f.output_width() == out,
            None => false,
        };
        let ok = match self.scheme {
            SchemeId::A | SchemeId::M1 | SchemeId::Pan10 => shape(&self.f, n),
            SchemeId::B => shape(&self.f1, n) && shape(&self.f2, 1),
            SchemeId::M2 => shape(&self.f1, n) && shape(&self.f2, n),
            SchemeId::Enh => shape(&self.f1, n) && shape(&self.f2, 1) && self.l.is_some_and(|l| l.width() == m),
        };
        let pan10_ok = (self.scheme == SchemeId::Pan10) == self.pan10_table.is_some();
        if ok && pan10_ok && m > n {
            Ok(())
        } else {
            Err(QpkeError::InvalidParameters(format!("private key shapes inconsistent with scheme {}", self.scheme)))
        }
    }

    /// Structural checks for a key read from outside.
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        if let Some(table) = &self.pan10_table {
            for (s, i) in table {
                if s.width() != self.m || i.width() != self.n {
                    return Err(QpkeError::InvalidParameters("pan10 table widths".into()));
                }
            }
        }
        Ok(())
    }

    /// Basis string `k` for a classical label.
    pub fn basis_for(&self, s: &Bits) -> Result<Bits> {
        match self.scheme {
            SchemeId::A | SchemeId::M1 => require(&self.f, "f")?.evaluate(s),
            SchemeId::B | SchemeId::M2 | SchemeId::Enh => require(&self.f1, "f1")?.evaluate(s),
            SchemeId::Pan10 => Ok(to_odd_weight(require(&self.f, "f")?.evaluate(s)?)),
        }
    }

    /// Parity bit `p = F2(s)`.
    fn parity_for(&self, s: &Bits) -> Result<bool> {
        match self.scheme {
            SchemeId::B | SchemeId::Enh => Ok(require(&self.f2, "f2")?.evaluate(s)?.get(0)),
            other => Err(QpkeError::InvalidParameters(format!("scheme {other} has no parity bit"))),
        }
    }

    fn public_key(&self, label: Label, quantum: QuantumPart) -> PublicKey {
        let mut pk = PublicKey::new(self.scheme, self.n, self.m, label, quantum);
        pk.seed = Some(self.seed);
        pk
    }

    /// Draws a fresh label and builds one public key.
    pub fn issue_public_key<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PublicKey> {
        let (n, m) = (self.n, self.m);
        match self.scheme {
            SchemeId::A | SchemeId::M2 | SchemeId::Pan10 => {
                let s = Bits::random(m, rng);
                self.issue_public_key_at(&s, rng)
            }
            SchemeId::B => {
                let i = Bits::random(n, rng);
                for _ in 0..LABEL_BUDGET {
                    let s = Bits::random(m, rng);
                    if self.parity_for(&s)? == i.parity() {
                        let k = self.basis_for(&s)?;
                        let state = ProductState::encoded(&i, &k)?;
                        return Ok(self.public_key(Label::Classical(s), QuantumPart::Product(state)));
                    }
                }
                Err(QpkeError::RejectionExhausted { what: "label matching P(i)", attempts: LABEL_BUDGET })
            }
            SchemeId::M1 => {
                let (s1, s2) = (Bits::random(m, rng), Bits::random(m, rng));
                let f = require(&self.f, "f")?;
                let (k, i) = (f.evaluate(&s1)?, f.evaluate(&s2)?);
                let state = ProductState::encoded(&i, &k)?;
                Ok(self.public_key(Label::Pair([s1, s2]), QuantumPart::Product(state)))
            }
            SchemeId::Enh => {
                let i = Bits::random(n, rng);
                let l = *require(&self.l, "l")?;
                for _ in 0..LABEL_BUDGET {
                    let s = Bits::random(m, rng);
                    if self.parity_for(&s)? == i.parity() {
                        let k = self.basis_for(&s)?;
                        let state = ProductState::encoded(&i, &k)?;
                        let concealed = ProductState::encoded(&s, &l)?;
                        return Ok(self.public_key(Label::Concealed(concealed), QuantumPart::Product(state)));
                    }
                }
                Err(QpkeError::RejectionExhausted { what: "label matching P(i)", attempts: LABEL_BUDGET })
            }
        }
    }

    /// Public key for a caller-chosen label `s` (schemes a, m2, pan10). For
    /// pan10 a label seen before reuses its recorded `i`, so repeated calls
    /// yield copies of one key.
    pub fn issue_public_key_at<R: Rng + ?Sized>(&mut self, s: &Bits, rng: &mut R) -> Result<PublicKey> {
        if s.width() != self.m {
            return Err(QpkeError::WidthMismatch { expected: self.m, actual: s.width() });
        }
        let n = self.n;
        let k = self.basis_for(s)?;
        match self.scheme {
            SchemeId::A => {
                let i = Bits::random_with_parity(n, false, rng);
                let state = ProductState::encoded(&i, &k)?;
                Ok(self.public_key(Label::Classical(*s), QuantumPart::Product(state)))
            }
            SchemeId::M2 => {
                let i = require(&self.f2, "f2")?.evaluate(s)?;
                let state = ProductState::encoded(&i, &k)?;
                Ok(self.public_key(Label::Classical(*s), QuantumPart::Product(state)))
            }
            SchemeId::Pan10 => {
                let table = self.pan10_table.get_or_insert_with(BTreeMap::new);
                let i = *table.entry(*s).or_insert_with(|| Bits::random(n, rng));
                let state = TwoTermState::new(i, k, 0, 0)?;
                Ok(self.public_key(Label::Classical(*s), QuantumPart::TwoTerm(state)))
            }
            other => Err(QpkeError::InvalidParameters(format!("scheme {other} does not take a chosen label"))),
        }
    }

    /// Recovers the classical label; for the enhanced scheme this measures
    /// each label qubit in the basis given by `l`.
    pub fn recover_label<R: Rng + ?Sized>(&self, label: &Label, rng: &mut R) -> Result<Bits> {
        match (self.scheme, label) {
            (SchemeId::Enh, Label::Concealed(psi)) => psi.measure_in_bases(require(&self.l, "l")?, rng),
            (SchemeId::A | SchemeId::B | SchemeId::M2 | SchemeId::Pan10, Label::Classical(s)) => Ok(*s),
            (scheme, _) => Err(QpkeError::InvalidParameters(format!("label shape does not fit scheme {scheme}"))),
        }
    }

    /// Basis string `k` and the string `i` Bob subtracts after measuring.
    fn decryption_keys<R: Rng + ?Sized>(&self, label: &Label, rng: &mut R) -> Result<(Bits, Bits)> {
        let n = self.n;
        match (self.scheme, label) {
            (SchemeId::M1, Label::Pair([s1, s2])) => {
                let f = require(&self.f, "f")?;
                Ok((f.evaluate(s1)?, f.evaluate(s2)?))
            }
            (SchemeId::M2, Label::Classical(s)) => Ok((self.basis_for(s)?, require(&self.f2, "f2")?.evaluate(s)?)),
            (SchemeId::A, _) => {
                let s = self.recover_label(label, rng)?;
                Ok((self.basis_for(&s)?, Bits::zeros(n)))
            }
            (SchemeId::B | SchemeId::Enh, _) => {
                let s = self.recover_label(label, rng)?;
                // Only the parity of i matters for one-bit schemes.
                let mut i = Bits::zeros(n);
                i.set(n - 1, self.parity_for(&s)?);
                Ok((self.basis_for(&s)?, i))
            }
            (scheme, _) => Err(QpkeError::InvalidParameters(format!("label shape does not fit scheme {scheme}"))),
        }
    }

    pub fn decrypt<R: Rng + ?Sized>(&self, ct: &Ciphertext, rng: &mut R) -> Result<Bits> {
        if ct.scheme != self.scheme {
            return Err(QpkeError::SchemeMismatch { key: self.scheme.to_string(), ciphertext: ct.scheme.to_string() });
        }
        if ct.n != self.n || ct.quantum.n() != self.n {
            return Err(QpkeError::WidthMismatch { expected: self.n, actual: ct.quantum.n() });
        }
        if self.scheme == SchemeId::Pan10 {
            return self.decrypt_pan10(ct, rng);
        }
        let (k, i) = self.decryption_keys(&ct.label, rng)?;
        let measured = ct.quantum.as_product()?.apply_hk(&k)?.measure_computational(rng);
        self.decode(measured ^ i)
    }

    fn decode(&self, x: Bits) -> Result<Bits> {
        if self.scheme.is_multibit() {
            Ok(x)
        } else {
            Bits::from_bools(&[x.parity()])
        }
    }

    /// Decryption through dense state vectors only; `None` when the dense
    /// outcome is not deterministic.
    pub fn decrypt_dense(&self, ct: &Ciphertext) -> Result<Option<Bits>> {
        if ct.scheme != self.scheme {
            return Err(QpkeError::SchemeMismatch { key: self.scheme.to_string(), ciphertext: ct.scheme.to_string() });
        }
        if self.scheme == SchemeId::Pan10 {
            let p_plus = self.pan10_plus_probability(ct)?;
            return Ok(if p_plus > 1.0 - 1e-12 {
                Some(Bits::from_bools(&[false])?)
            } else if p_plus < 1e-12 {
                Some(Bits::from_bools(&[true])?)
            } else {
                None
            });
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (_, i) = self.decryption_keys(&ct.label, &mut rng)?;
        self.dense_measurement(ct)?.map(|x| self.decode(x ^ i)).transpose()
    }

    /// Projective test against `(|i> ± |i⊕k>)/√2`; outcome `+` decodes to 0.
    fn decrypt_pan10<R: Rng + ?Sized>(&self, ct: &Ciphertext, rng: &mut R) -> Result<Bits> {
        let p_plus = self.pan10_plus_probability(ct)?;
        Bits::from_bools(&[rng.gen::<f64>() >= p_plus])
    }

    fn pan10_plus_probability(&self, ct: &Ciphertext) -> Result<f64> {
        let Label::Classical(s) = &ct.label else {
            return Err(QpkeError::InvalidParameters("pan10 ciphertext needs a classical label".into()));
        };
        let table = require(&self.pan10_table, "pan10_table")?;
        let i = *table.get(s).ok_or_else(|| QpkeError::UnknownLabel(s.to_string()))?;
        let k = self.basis_for(s)?;
        let plus = TwoTermState::new(i, k, 0, 0)?.to_vector()?;
        let psi = ct.quantum.to_vector()?;
        let overlap: C64 = plus.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        Ok(overlap.norm_sqr())
    }

    /// Decryption measurement computed by dense evolution: applies `H_k` gate
    /// by gate to the ciphertext vector and returns the basis string carrying
    /// all the probability, or `None` if the outcome is not deterministic.
    pub fn dense_measurement(&self, ct: &Ciphertext) -> Result<Option<Bits>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (k, _) = self.decryption_keys(&ct.label, &mut rng)?;
        let n = self.n;
        let mut v = ct.quantum.as_product()?.to_vector()?;
        for q in (0..n).filter(|&q| k.get(q)) {
            v = apply_gate_dense(&v, n, Gate::H, q)?;
        }
        v.iter()
            .position(|a| (a.norm_sqr() - 1.0).abs() < 1e-12)
            .map(|idx| Bits::new(n, idx as u64))
            .transpose()
    }
}

pub fn keygen<R: Rng + ?Sized>(params: &SchemeParams, count: usize, rng: &mut R) -> Result<(PrivateKey, Vec<PublicKey>)> {
    if count == 0 {
        return Err(QpkeError::InvalidParameters("count must be at least 1".into()));
    }
    let mut sk = PrivateKey::generate(params, rng)?;
    let pks = (0..count).map(|_| sk.issue_public_key(rng)).collect::<Result<Vec<_>>>()?;
    Ok((sk, pks))
}

fn check_message(pk: &PublicKey, message: &Bits) -> Result<()> {
    let expected = pk.scheme.message_width(pk.n);
    if message.width() != expected {
        return Err(QpkeError::WidthMismatch { expected, actual: message.width() });
    }
    Ok(())
}

fn consume(pk: &mut PublicKey) -> Result<()> {
    if pk.consumed && !pk.reusable {
        return Err(QpkeError::PublicKeyConsumed);
    }
    pk.consumed = true;
    Ok(())
}

/// Encrypts `message` (one bit, or n bits for m1/m2) under a single-use key.
pub fn encrypt<R: Rng + ?Sized>(pk: &mut PublicKey, message: &Bits, rng: &mut R) -> Result<Ciphertext> {
    check_message(pk, message)?;
    match pk.scheme {
        SchemeId::Pan10 => {
            consume(pk)?;
            let state = pk.quantum.as_two_term()?;
            let quantum = if message.get(0) { state.apply_zall() } else { state.clone() };
            Ok(ciphertext(pk, QuantumPart::TwoTerm(quantum)))
        }
        SchemeId::M1 | SchemeId::M2 => encrypt_with_mask(pk, message),
        SchemeId::A | SchemeId::B | SchemeId::Enh => {
            let j = Bits::random_with_parity(pk.n, message.get(0), rng);
            encrypt_with_mask(pk, &j)
        }
    }
}

/// Applies `Y_j` to the key state with a caller-chosen `j`.
pub fn encrypt_with_mask(pk: &mut PublicKey, j: &Bits) -> Result<Ciphertext> {
    if j.width() != pk.n {
        return Err(QpkeError::WidthMismatch { expected: pk.n, actual: j.width() });
    }
    let state = pk.quantum.as_product()?.apply_yj(j)?;
    consume(pk)?;
    Ok(ciphertext(pk, QuantumPart::Product(state)))
}

fn ciphertext(pk: &PublicKey, quantum: QuantumPart) -> Ciphertext {
    Ciphertext { scheme: pk.scheme, n: pk.n, m: pk.m, seed: pk.seed, label: pk.label.clone(), quantum }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub public_key: PublicKey,
    pub message: Bits,
    pub ciphertext: Ciphertext,
    pub decrypted: Bits,
}

impl Transcript {
    pub fn succeeded(&self) -> bool {
        self.message == self.decrypted
    }
}

/// Issues a key, encrypts a uniformly random message and decrypts it.
pub fn round_trip<R: Rng + ?Sized>(sk: &mut PrivateKey, rng: &mut R) -> Result<Transcript> {
    let public_key = sk.issue_public_key(rng)?;
    let message = Bits::random(sk.scheme.message_width(sk.n), rng);
    let mut pk = public_key.clone();
    let ciphertext = encrypt(&mut pk, &message, rng)?;
    let decrypted = sk.decrypt(&ciphertext, rng)?;
    Ok(Transcript { public_key, message, ciphertext, decrypted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsym::Basis;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn scheme_a_keys_use_even_i() {
        let mut r = rng(1);
        let (sk, pks) = keygen(&SchemeParams::new(SchemeId::A, 4, 1), 1000, &mut r).unwrap();
        for pk in &pks {
            let Label::Classical(s) = pk.label else { panic!() };
            let state = pk.quantum.as_product().unwrap();
            assert_eq!(state.x_basis_mask(), sk.basis_for(&s).unwrap());
            assert!(!state.encoded_bits().parity());
        }
    }

    #[test]
    fn scheme_b_parity_matches() {
        let mut r = rng(2);
        let (sk, pks) = keygen(&SchemeParams::new(SchemeId::B, 4, 2), 1000, &mut r).unwrap();
        let mut seen = [0usize; 2];
        for pk in &pks {
            let Label::Classical(s) = pk.label else { panic!() };
            let i = pk.quantum.as_product().unwrap().encoded_bits();
            assert_eq!(sk.parity_for(&s).unwrap(), i.parity());
            seen[i.parity() as usize] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0);
    }

    #[test]
    fn pan10_keys_have_odd_k() {
        let mut r = rng(3);
        let (sk, pks) = keygen(&SchemeParams::new(SchemeId::Pan10, 4, 3), 1000, &mut r).unwrap();
        for pk in &pks {
            let t = pk.quantum.as_two_term().unwrap();
            assert!(t.k().parity());
            let Label::Classical(s) = pk.label else { panic!() };
            assert_eq!(sk.pan10_table.as_ref().unwrap()[&s], t.i());
            assert_eq!(t.apply_zall().rel_phase(), (t.rel_phase() + 2) % 4);
        }
    }

    #[test]
    fn m_must_exceed_n() {
        let err = PrivateKey::generate(&SchemeParams::new(SchemeId::B, 4, 0).with_m(4), &mut rng(0)).unwrap_err();
        assert!(matches!(err, QpkeError::InvalidParameters(_)));
    }

    #[test]
    fn zero_message_leaves_m2_state() {
        let mut r = rng(4);
        let (_, mut pks) = keygen(&SchemeParams::new(SchemeId::M2, 3, 4), 1, &mut r).unwrap();
        let before = pks[0].quantum.clone();
        let ct = encrypt(&mut pks[0], &bits("000"), &mut r).unwrap();
        assert_eq!(ct.quantum, before);
    }

    #[test]
    fn forced_mask_scheme_a() {
        let state = ProductState::encoded(&bits("11"), &bits("01")).unwrap();
        let mut pk = PublicKey::new(SchemeId::A, 2, 4, Label::Classical(bits("0000")), QuantumPart::Product(state));
        let ct = encrypt_with_mask(&mut pk, &bits("11")).unwrap();
        let q = ct.quantum.as_product().unwrap();
        assert_eq!(q.bases(), vec![Basis::Z0, Basis::XP]);
    }

    #[test]
    fn pan10_encrypt_one_flips_phase() {
        let t = TwoTermState::new(bits("00"), bits("01"), 0, 0).unwrap();
        let mut pk = PublicKey::new(SchemeId::Pan10, 2, 4, Label::Classical(bits("0000")), QuantumPart::TwoTerm(t));
        let ct = encrypt(&mut pk, &bits("1"), &mut rng(0)).unwrap();
        let out = ct.quantum.as_two_term().unwrap();
        assert_eq!((out.i(), out.k(), out.rel_phase()), (bits("00"), bits("01"), 2));
    }

    #[test]
    fn keys_are_single_use() {
        let mut r = rng(5);
        let (_, mut pks) = keygen(&SchemeParams::new(SchemeId::A, 3, 5), 1, &mut r).unwrap();
        encrypt(&mut pks[0], &bits("0"), &mut r).unwrap();
        assert!(matches!(encrypt(&mut pks[0], &bits("1"), &mut r), Err(QpkeError::PublicKeyConsumed)));
        pks[0].allow_reuse();
        assert!(encrypt(&mut pks[0], &bits("1"), &mut r).is_ok());
    }

    #[test]
    fn message_width_checked() {
        let mut r = rng(6);
        let (_, mut pks) = keygen(&SchemeParams::new(SchemeId::M1, 3, 6), 1, &mut r).unwrap();
        assert!(matches!(encrypt(&mut pks[0], &bits("1"), &mut r), Err(QpkeError::WidthMismatch { .. })));
        assert!(!pks[0].is_consumed());
    }

    #[test]
    fn round_trips_all_schemes() {
        for scheme in SchemeId::ALL {
            for n in 2..=6 {
                for model in [FunctionModel::Anf, FunctionModel::Oracle] {
                    let mut r = rng(100 + n as u64);
                    let params = SchemeParams::new(scheme, n, 0).with_model(model);
                    let mut sk = PrivateKey::generate(&params, &mut r).unwrap();
                    for _ in 0..40 {
                        let t = round_trip(&mut sk, &mut r).unwrap();
                        assert!(t.succeeded(), "{scheme} n={n} {model:?}: {t:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn m2_with_j_equal_i() {
        let mut r = rng(7);
        let (sk, mut pks) = keygen(&SchemeParams::new(SchemeId::M2, 4, 7), 1, &mut r).unwrap();
        let i = pks[0].quantum.as_product().unwrap().encoded_bits();
        let ct = encrypt(&mut pks[0], &i, &mut r).unwrap();
        assert_eq!(sk.dense_measurement(&ct).unwrap(), Some(Bits::zeros(4)));
        assert_eq!(sk.decrypt(&ct, &mut r).unwrap(), i);
    }

    #[test]
    fn dense_decryption_agrees() {
        for scheme in SchemeId::ALL {
            let mut r = rng(14);
            let (sk, pks) = keygen(&SchemeParams::new(scheme, 4, 14), 10, &mut r).unwrap();
            for mut pk in pks {
                let msg = Bits::random(scheme.message_width(4), &mut r);
                let ct = encrypt(&mut pk, &msg, &mut r).unwrap();
                assert_eq!(sk.decrypt_dense(&ct).unwrap(), Some(msg));
            }
        }
    }

    #[test]
    fn enh_label_recovery() {
        let mut r = rng(8);
        let (sk, pks) = keygen(&SchemeParams::new(SchemeId::Enh, 4, 8), 200, &mut r).unwrap();
        for pk in &pks {
            let Label::Concealed(psi) = &pk.label else { panic!() };
            let s = sk.recover_label(&pk.label, &mut r).unwrap();
            assert_eq!(s, psi.encoded_bits());
            assert_eq!(psi.x_basis_mask(), sk.l.unwrap());
        }
    }

    #[test]
    fn dense_measurement_agrees_with_symbolic() {
        for scheme in [SchemeId::A, SchemeId::B, SchemeId::M1, SchemeId::M2, SchemeId::Enh] {
            let mut r = rng(9);
            let (sk, pks) = keygen(&SchemeParams::new(scheme, 4, 9), 20, &mut r).unwrap();
            for mut pk in pks {
                let msg = Bits::random(scheme.message_width(4), &mut r);
                let ct = encrypt(&mut pk, &msg, &mut r).unwrap();
                let (k, _) = sk.decryption_keys(&ct.label, &mut r).unwrap();
                let symbolic = ct.quantum.as_product().unwrap().apply_hk(&k).unwrap().measure_computational(&mut r);
                assert_eq!(sk.dense_measurement(&ct).unwrap(), Some(symbolic));
            }
        }
    }

    #[test]
    fn decrypt_errors() {
        let mut r = rng(10);
        let (sk_a, mut pks_a) = keygen(&SchemeParams::new(SchemeId::A, 3, 10), 1, &mut r).unwrap();
        let (sk_p, _) = keygen(&SchemeParams::new(SchemeId::Pan10, 3, 10), 1, &mut r).unwrap();
        let ct = encrypt(&mut pks_a[0], &bits("1"), &mut r).unwrap();
        assert!(matches!(sk_p.decrypt(&ct, &mut r), Err(QpkeError::SchemeMismatch { .. })));
        assert!(sk_a.decrypt(&ct, &mut r).is_ok());

        let t = TwoTermState::new(bits("000"), bits("001"), 0, 0).unwrap();
        let unknown = Ciphertext {
            scheme: SchemeId::Pan10,
            n: 3,
            m: 6,
            seed: None,
            label: Label::Classical(bits("111111")),
            quantum: QuantumPart::TwoTerm(t),
        };
        let mut sk_p2 = sk_p.clone();
        sk_p2.pan10_table = Some(BTreeMap::new());
        assert!(matches!(sk_p2.decrypt(&unknown, &mut r), Err(QpkeError::UnknownLabel(_))));
    }

    #[test]
    fn scheme_a_ciphertexts_keep_parity() {
        let mut r = rng(11);
        let (_, pks) = keygen(&SchemeParams::new(SchemeId::A, 5, 11), 300, &mut r).unwrap();
        for mut pk in pks {
            let b = r.gen::<bool>();
            let ct = encrypt(&mut pk, &Bits::from_bools(&[b]).unwrap(), &mut r).unwrap();
            let ones = ct.quantum.as_product().unwrap().bases().iter().filter(|q| matches!(q, Basis::Z1 | Basis::XM)).count();
            assert_eq!(ones % 2 == 1, b);
        }
    }

    #[test]
    fn adversary_view_hides_private_fields() {
        let mut r = rng(12);
        let (sk, pks) = keygen(&SchemeParams::new(SchemeId::A, 3, 12), 1, &mut r).unwrap();
        let view = serde_json::to_value(pks[0].adversary_view()).unwrap();
        let obj = view.as_object().unwrap();
        assert_eq!(obj["view"], "adversary");
        let private = serde_json::to_value(&sk).unwrap();
        for key in private.as_object().unwrap().keys() {
            if !["scheme", "n"].contains(&key.as_str()) {
                assert!(!obj.contains_key(key), "view leaks {key}");
            }
        }
        assert!(matches!(pks[0].adversary_view().label, Label::Classical(_)));

        let (_, enh) = keygen(&SchemeParams::new(SchemeId::Enh, 3, 12), 1, &mut r).unwrap();
        assert!(matches!(enh[0].adversary_view().label, Label::Concealed(_)));
    }

    #[test]
    fn key_files_round_trip() {
        for scheme in SchemeId::ALL {
            let mut r = rng(13);
            let (sk, pks) = keygen(&SchemeParams::new(scheme, 3, 13), 2, &mut r).unwrap();
            let json = serde_json::to_string(&sk).unwrap();
            let back: PrivateKey = serde_json::from_str(&json).unwrap();
            back.validate().unwrap();
            assert_eq!(back, sk);
            for pk in pks {
                let json = serde_json::to_string(&pk).unwrap();
                let back: PublicKey = serde_json::from_str(&json).unwrap();
                back.validate().unwrap();
                assert_eq!(back.label, pk.label);
                assert_eq!(back.quantum.to_vector().unwrap(), pk.quantum.to_vector().unwrap());
            }
        }
    }
}
