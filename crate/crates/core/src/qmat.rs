//! Dense complex matrices: the brute-force oracle every security number is
//! computed with.
//!
//! Matrices are square and stored row-major. Qubit 0 is the most significant
//! tensor factor, matching [`crate::bits::Bits`] ordering.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QpkeError, Result};

pub type C64 = Complex64;

/// Entrywise tolerance for exact identities.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for quantities that went through an eigensolver.
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Eigenvalues below this magnitude count as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

pub const DEFAULT_DIM_CAP: usize = 1 << 12;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

pub fn dim_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

/// Process-wide override of the dimension cap.
pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub fn check_dim(dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        Err(QpkeError::DimensionOverflow { dim, cap })
    } else {
        Ok(())
    }
}

/// `2^qubits`, checked against the cap.
pub fn qubit_dim(qubits: usize) -> Result<usize> {
    if qubits >= usize::BITS as usize - 1 {
        return Err(QpkeError::DimensionOverflow { dim: usize::MAX, cap: dim_cap() });
    }
    let dim = 1usize << qubits;
    check_dim(dim)?;
    Ok(dim)
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::identity(dim).scale(1.0 / dim as f64)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(QpkeError::DimensionMismatch { left: dim, right: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for (i, vi) in v.iter().enumerate() {
            if *vi == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                m.data[i * dim + j] = vi * vj.conj();
            }
        }
        m
    }

    /// Diagonal matrix with the given real entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = C64::new(x, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Adds `weight * |v><v|` in place.
    pub fn add_outer(&mut self, v: &[C64], weight: f64) {
        assert_eq!(v.len(), self.dim);
        for (i, vi) in v.iter().enumerate() {
            if vi.norm_sqr() == 0.0 {
                continue;
            }
            let wi = vi * weight;
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (slot, vj) in row.iter_mut().zip(v) {
                *slot += wi * vj.conj();
            }
        }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(QpkeError::DimensionMismatch { left: self.dim, right: other.dim })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn add_assign_scaled(&mut self, other: &Self, weight: f64) -> Result<()> {
        self.same_dim(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * weight;
        }
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * factor).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &Self) -> Result<Self> {
        unitary.matmul(self)?.matmul(&unitary.adjoint())
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(QpkeError::DimensionMismatch { left: self.dim, right: v.len() });
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest entrywise `|A - A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Largest entrywise `|A - B|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Checks the density-operator invariants: Hermitian within 1e-10,
    /// eigenvalues ≥ -1e-9 and unit trace within 1e-10.
    pub fn check_density(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return Err(QpkeError::InvalidParameters(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(self)?.last().copied().unwrap_or(0.0);
        if min < -SPECTRAL_TOL {
            return Err(QpkeError::InvalidParameters(format!(
                "not positive semidefinite: eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        // Symmetrize away rounding so the solver sees an exactly Hermitian input.
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5)
    }

    fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a
        .dim
        .checked_mul(b.dim)
        .ok_or(QpkeError::DimensionOverflow { dim: usize::MAX, cap: dim_cap() })?;
    check_dim(dim)?;
    let mut out = ComplexMatrix::zeros(dim);
    for ai in 0..a.dim {
        for aj in 0..a.dim {
            let x = a.data[ai * a.dim + aj];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for bi in 0..b.dim {
                let row = (ai * b.dim + bi) * dim + aj * b.dim;
                let src = &b.data[bi * b.dim..(bi + 1) * b.dim];
                for (slot, y) in out.data[row..row + b.dim].iter_mut().zip(src) {
                    *slot = x * y;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a sequence; the empty product is the 1×1 identity.
pub fn kron_all<'a, I>(factors: I) -> Result<ComplexMatrix>
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// `m^{⊗power}`.
pub fn kron_power(m: &ComplexMatrix, power: usize) -> Result<ComplexMatrix> {
    kron_all(std::iter::repeat_n(m, power))
}

/// Kronecker product of column vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

fn require_hermitian(a: &ComplexMatrix) -> Result<()> {
    let deviation = a.hermitian_deviation();
    if deviation > EXACT_TOL {
        Err(QpkeError::NotHermitian { deviation })
    } else {
        Ok(())
    }
}

/// Real eigenvalues of a Hermitian matrix, in descending order.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    require_hermitian(a)?;
    let mut values: Vec<f64> = if a.is_real() {
        let n = a.dim;
        let real = DMatrix::from_fn(n, n, |i, j| (a.data[i * n + j].re + a.data[j * n + i].re) * 0.5);
        real.symmetric_eigenvalues().iter().copied().collect()
    } else {
        a.to_nalgebra().symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    require_hermitian(a)?;
    let eig = a.to_nalgebra().symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<C64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lambda)| (lambda, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(pairs.into_iter().unzip())
}

/// Sum of singular values.
///
/// Hermitian inputs use `Σ|λᵢ(A)|`; anything else goes through `Σ √λᵢ(A†A)`,
/// which loses about half the significant digits near zero singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    check_dim(a.dim)?;
    if a.is_hermitian(EXACT_TOL) {
        return Ok(hermitian_eigenvalues(a)?.iter().map(|x| x.abs()).sum());
    }
    let gram = a.adjoint().matmul(a)?;
    Ok(hermitian_eigenvalues(&gram)?.iter().map(|x| x.max(0.0).sqrt()).sum())
}

/// `½ tr|ρ − σ|` for two density operators.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    rho.same_dim(sigma)?;
    for m in [rho, sigma] {
        let tr = m.trace();
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return Err(QpkeError::InvalidParameters(format!(
                "trace distance needs unit-trace inputs, got trace {tr}"
            )));
        }
    }
    let diff = rho.sub(sigma)?;
    let d: f64 = hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>() * 0.5;
    Ok(d.clamp(0.0, 1.0))
}

/// Single-qubit gate matrices.
pub mod gates {
    use super::{c, ComplexMatrix};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
            .unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_real(&[&[h, h], &[h, -h]]).unwrap()
    }

    /// `exp(-iπY/4)`: the quarter-turn about the y axis, `|0> → |+>`.
    pub fn y_quarter_turn() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_real(&[&[h, -h], &[h, h]]).unwrap()
    }
}
