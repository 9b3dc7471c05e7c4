//! Exact symbolic states for the conjugate-coding family.
//!
//! A [`ProductState`] is a tensor product of `|0>, |1>, |+>, |->` with phases
//! that are powers of `i`. The family is closed under `I, X, Y, Z, H`, so every
//! protocol step in the one-bit and multi-bit schemes stays symbolic and exact.
//! [`TwoTermState`] covers the `(|i> + i^r |i⊕k>)/√2` states of the
//! entanglement-based scheme.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::error::{QpkeError, Result};
use crate::qmat::{c, kron_vec, qubit_dim, ComplexMatrix, C64};

/// `i^p` for `p` taken mod 4.
pub fn phase_factor(p: u8) -> C64 {
    match p % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    /// `|0>`
    Z0,
    /// `|1>`
    Z1,
    /// `|+>`
    XP,
    /// `|->`
    XM,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Z0, Basis::Z1, Basis::XP, Basis::XM];

    pub fn code(self) -> &'static str {
        match self {
            Basis::Z0 => "Z0",
            Basis::Z1 => "Z1",
            Basis::XP => "X+",
            Basis::XM => "X-",
        }
    }

    /// Computational-basis state for a bit, optionally rotated by H.
    pub fn encode(bit: bool, hadamard: bool) -> Basis {
        match (hadamard, bit) {
            (false, false) => Basis::Z0,
            (false, true) => Basis::Z1,
            (true, false) => Basis::XP,
            (true, true) => Basis::XM,
        }
    }

    pub fn is_x_basis(self) -> bool {
        matches!(self, Basis::XP | Basis::XM)
    }

    /// The bit encoded in this state (0 for `|0>`/`|+>`).
    pub fn bit(self) -> bool {
        matches!(self, Basis::Z1 | Basis::XM)
    }

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            Basis::Z0 => [c(1.0, 0.0), c(0.0, 0.0)],
            Basis::Z1 => [c(0.0, 0.0), c(1.0, 0.0)],
            Basis::XP => [c(h, 0.0), c(h, 0.0)],
            Basis::XM => [c(h, 0.0), c(-h, 0.0)],
        }
    }
}

impl FromStr for Basis {
    type Err = QpkeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z0" => Ok(Basis::Z0),
            "Z1" => Ok(Basis::Z1),
            "X+" => Ok(Basis::XP),
            "X-" => Ok(Basis::XM),
            other => Err(QpkeError::Parse(format!("unknown qubit symbol {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
    H,
}

impl Gate {
    pub const ALL: [Gate; 5] = [Gate::I, Gate::X, Gate::Y, Gate::Z, Gate::H];

    /// Action on a basis state: the new state and the phase exponent picked up.
    pub fn act(self, basis: Basis) -> (Basis, u8) {
        use Basis::*;
        match (self, basis) {
            (Gate::I, b) => (b, 0),
            (Gate::X, Z0) => (Z1, 0),
            (Gate::X, Z1) => (Z0, 0),
            (Gate::X, XP) => (XP, 0),
            (Gate::X, XM) => (XM, 2),
            (Gate::Z, Z0) => (Z0, 0),
            (Gate::Z, Z1) => (Z1, 2),
            (Gate::Z, XP) => (XM, 0),
            (Gate::Z, XM) => (XP, 0),
            (Gate::Y, Z0) => (Z1, 1),
            (Gate::Y, Z1) => (Z0, 3),
            (Gate::Y, XP) => (XM, 3),
            (Gate::Y, XM) => (XP, 1),
            (Gate::H, Z0) => (XP, 0),
            (Gate::H, Z1) => (XM, 0),
            (Gate::H, XP) => (Z0, 0),
            (Gate::H, XM) => (Z1, 0),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        use crate::qmat::gates;
        match self {
            Gate::I => gates::identity(),
            Gate::X => gates::pauli_x(),
            Gate::Y => gates::pauli_y(),
            Gate::Z => gates::pauli_z(),
            Gate::H => gates::hadamard(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSymbol {
    pub basis: Basis,
    /// Exponent of `i`, always in `0..4`.
    pub phase: u8,
}

impl QubitSymbol {
    pub fn new(basis: Basis, phase: u8) -> Self {
        Self { basis, phase: phase % 4 }
    }

    pub fn apply(self, gate: Gate) -> Self {
        let (basis, dp) = gate.act(self.basis);
        Self::new(basis, self.phase + dp)
    }

    pub fn amplitudes(self) -> [C64; 2] {
        let p = phase_factor(self.phase);
        let [a, b] = self.basis.amplitudes();
        [a * p, b * p]
    }
}

impl From<Basis> for QubitSymbol {
    fn from(basis: Basis) -> Self {
        Self::new(basis, 0)
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolRecord {
    code: String,
    phase: u8,
}

impl Serialize for QubitSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolRecord { code: self.basis.code().to_string(), phase: self.phase }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QubitSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = SymbolRecord::deserialize(d)?;
        if rec.phase > 3 {
            return Err(serde::de::Error::custom(format!("phase {} outside 0..4", rec.phase)));
        }
        let basis = rec.code.parse().map_err(serde::de::Error::custom)?;
        Ok(QubitSymbol::new(basis, rec.phase))
    }
}

/// Tensor product of conjugate-coding symbols with a global phase `i^global_phase`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    qubits: Vec<QubitSymbol>,
    global_phase: u8,
}

impl ProductState {
    pub fn new(qubits: Vec<QubitSymbol>, global_phase: u8) -> Result<Self> {
        if qubits.is_empty() {
            return Err(QpkeError::InvalidParameters("product state needs at least one qubit".into()));
        }
        Ok(Self { qubits, global_phase: global_phase % 4 })
    }

    pub fn from_bases(bases: &[Basis]) -> Result<Self> {
        Self::new(bases.iter().map(|&b| b.into()).collect(), 0)
    }

    /// `|i>`.
    pub fn computational(i: &Bits) -> Result<Self> {
        Self::new(i.iter().map(|b| Basis::encode(b, false).into()).collect(), 0)
    }

    /// `H_bases |bits>`: each bit encoded in the Z basis (0) or X basis (1).
    pub fn encoded(bits: &Bits, bases: &Bits) -> Result<Self> {
        if bits.width() != bases.width() {
            return Err(QpkeError::WidthMismatch { expected: bits.width(), actual: bases.width() });
        }
        Self::new(bits.iter().zip(bases.iter()).map(|(b, h)| Basis::encode(b, h).into()).collect(), 0)
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn qubits(&self) -> &[QubitSymbol] {
        &self.qubits
    }

    pub fn global_phase(&self) -> u8 {
        self.global_phase
    }

    /// Global phase with every per-qubit phase folded in.
    pub fn total_phase(&self) -> u8 {
        self.qubits.iter().fold(self.global_phase as u32, |acc, q| acc + q.phase as u32) as u8 % 4
    }

    pub fn bases(&self) -> Vec<Basis> {
        self.qubits.iter().map(|q| q.basis).collect()
    }

    /// Same state with all phase carried globally.
    pub fn canonical(&self) -> Self {
        Self {
            qubits: self.qubits.iter().map(|q| QubitSymbol::new(q.basis, 0)).collect(),
            global_phase: self.total_phase(),
        }
    }

    pub fn same_ray(&self, other: &Self) -> bool {
        self.bases() == other.bases()
    }

    /// The bits encoded by each symbol, ignoring basis.
    pub fn encoded_bits(&self) -> Bits {
        let bits: Vec<bool> = self.qubits.iter().map(|q| q.basis.bit()).collect();
        Bits::from_bools(&bits).expect("state wider than 64 qubits")
    }

    /// Which symbols sit in the X basis.
    pub fn x_basis_mask(&self) -> Bits {
        let bits: Vec<bool> = self.qubits.iter().map(|q| q.basis.is_x_basis()).collect();
        Bits::from_bools(&bits).expect("state wider than 64 qubits")
    }

    pub fn apply_gate(&self, gate: Gate, index: usize) -> Result<Self> {
        let n = self.qubits.len();
        if index >= n {
            return Err(QpkeError::IndexOutOfRange { index, n });
        }
        let mut out = self.clone();
        out.qubits[index] = out.qubits[index].apply(gate);
        Ok(out)
    }

    fn apply_masked(&self, gate: Gate, mask: &Bits) -> Result<Self> {
        if mask.width() != self.qubits.len() {
            return Err(QpkeError::WidthMismatch { expected: self.qubits.len(), actual: mask.width() });
        }
        let mut out = self.clone();
        for (q, on) in out.qubits.iter_mut().zip(mask.iter()) {
            if on {
                *q = q.apply(gate);
            }
        }
        Ok(out)
    }

    /// `H_k = H^{k_1} ⊗ … ⊗ H^{k_n}`.
    pub fn apply_hk(&self, k: &Bits) -> Result<Self> {
        self.apply_masked(Gate::H, k)
    }

    /// `Y_j = Y^{j_1} ⊗ … ⊗ Y^{j_n}`.
    pub fn apply_yj(&self, j: &Bits) -> Result<Self> {
        self.apply_masked(Gate::Y, j)
    }

    pub fn to_vector(&self) -> Result<Vec<C64>> {
        qubit_dim(self.qubits.len())?;
        let mut v = vec![phase_factor(self.global_phase)];
        for q in &self.qubits {
            v = kron_vec(&v, &q.amplitudes());
        }
        Ok(v)
    }

    pub fn to_density(&self) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::outer(&self.to_vector()?))
    }

    /// Measures every qubit in the computational basis. X-basis symbols
    /// consume one fair bit from `rng` each, in qubit order.
    pub fn measure_computational<R: Rng + ?Sized>(&self, rng: &mut R) -> Bits {
        let bits: Vec<bool> = self
            .qubits
            .iter()
            .map(|q| match q.basis {
                Basis::Z0 => false,
                Basis::Z1 => true,
                Basis::XP | Basis::XM => rng.gen::<bool>(),
            })
            .collect();
        Bits::from_bools(&bits).expect("state wider than 64 qubits")
    }

    /// Measures qubit `a` in the Z basis when `bases[a] = 0` and in the X basis
    /// when it is 1.
    pub fn measure_in_bases<R: Rng + ?Sized>(&self, bases: &Bits, rng: &mut R) -> Result<Bits> {
        Ok(self.apply_hk(bases)?.measure_computational(rng))
    }
}

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = ["", "i·", "-", "-i·"][self.total_phase() as usize];
        f.write_str(p)?;
        for q in &self.qubits {
            let s = match q.basis {
                Basis::Z0 => "|0>",
                Basis::Z1 => "|1>",
                Basis::XP => "|+>",
                Basis::XM => "|->",
            };
            f.write_str(s)?;
        }
        Ok(())
    }
}

// Serialized as a plain symbol array; the global phase is folded into the
// first symbol so the encoded state is unchanged.
impl Serialize for ProductState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut symbols = self.qubits.clone();
        if let Some(first) = symbols.first_mut() {
            *first = QubitSymbol::new(first.basis, first.phase + self.global_phase);
        }
        symbols.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProductState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let symbols = Vec::<QubitSymbol>::deserialize(d)?;
        if symbols.len() > crate::bits::MAX_WIDTH {
            return Err(serde::de::Error::custom("product state wider than 64 qubits"));
        }
        ProductState::new(symbols, 0).map_err(serde::de::Error::custom)
    }
}

/// `i^global_phase (|i> + i^rel_phase |i⊕k>)/√2` with `k ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwoTermState {
    i: Bits,
    k: Bits,
    rel_phase: u8,
    global_phase: u8,
}

impl TwoTermState {
    pub fn new(i: Bits, k: Bits, rel_phase: u8, global_phase: u8) -> Result<Self> {
        if i.width() != k.width() {
            return Err(QpkeError::WidthMismatch { expected: i.width(), actual: k.width() });
        }
        if i.width() == 0 {
            return Err(QpkeError::InvalidParameters("two-term state needs at least one qubit".into()));
        }
        if k.is_zero() {
            return Err(QpkeError::InvalidParameters("two-term state needs k ≠ 0".into()));
        }
        Ok(Self { i, k, rel_phase: rel_phase % 4, global_phase: global_phase % 4 })
    }

    pub fn n(&self) -> usize {
        self.i.width()
    }

    pub fn i(&self) -> Bits {
        self.i
    }

    pub fn k(&self) -> Bits {
        self.k
    }

    pub fn rel_phase(&self) -> u8 {
        self.rel_phase
    }

    pub fn global_phase(&self) -> u8 {
        self.global_phase
    }

    /// `Z^{⊗n}`: the `|i>` term picks up `(-1)^{W(i)}` (global) and the
    /// relative phase moves by `(-1)^{W(k)}`.
    pub fn apply_zall(&self) -> Self {
        let mut out = self.clone();
        out.global_phase = (out.global_phase + 2 * (self.i.weight() % 2) as u8) % 4;
        out.rel_phase = (out.rel_phase + 2 * (self.k.weight() % 2) as u8) % 4;
        out
    }

    pub fn to_vector(&self) -> Result<Vec<C64>> {
        let dim = qubit_dim(self.n())?;
        let mut v = vec![c(0.0, 0.0); dim];
        let g = phase_factor(self.global_phase) * FRAC_1_SQRT_2;
        v[self.i.value() as usize] = g;
        v[(self.i ^ self.k).value() as usize] = g * phase_factor(self.rel_phase);
        Ok(v)
    }

    pub fn to_density(&self) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::outer(&self.to_vector()?))
    }
}

#[derive(Serialize, Deserialize)]
struct TwoTermRecord {
    i: Bits,
    k_xor: Bits,
    rel_phase: u8,
    #[serde(default)]
    global_phase: u8,
}

impl Serialize for TwoTermState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TwoTermRecord {
            i: self.i,
            k_xor: self.i ^ self.k,
            rel_phase: self.rel_phase,
            global_phase: self.global_phase,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwoTermState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = TwoTermRecord::deserialize(d)?;
        if rec.rel_phase > 3 || rec.global_phase > 3 {
            return Err(serde::de::Error::custom("phase outside 0..4"));
        }
        if rec.i.width() != rec.k_xor.width() {
            return Err(serde::de::Error::custom("i and k_xor widths differ"));
        }
        TwoTermState::new(rec.i, rec.i ^ rec.k_xor, rec.rel_phase, rec.global_phase)
            .map_err(serde::de::Error::custom)
    }
}

/// Dense evolution of a vector under a gate on one qubit (qubit 0 most
/// significant). Used as the independent check on the symbolic rules.
pub fn apply_gate_dense(v: &[C64], n: usize, gate: Gate, index: usize) -> Result<Vec<C64>> {
    if index >= n {
        return Err(QpkeError::IndexOutOfRange { index, n });
    }
    let m = gate.matrix();
    let stride = 1usize << (n - 1 - index);
    let mut out = v.to_vec();
    for base in 0..v.len() {
        if base & stride != 0 {
            continue;
        }
        let (a, b) = (v[base], v[base | stride]);
        out[base] = m.get(0, 0) * a + m.get(0, 1) * b;
        out[base | stride] = m.get(1, 0) * a + m.get(1, 1) * b;
    }
    Ok(out)
}
