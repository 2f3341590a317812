//! Dense complex linear algebra for one to four qubits.
//!
//! Matrices are stored row-major. Qubit ordering is big-endian: qubit 0 is
//! the leftmost tensor factor, so `|q0 q1 q2 q3>` has index
//! `q0*8 + q1*4 + q2*2 + q3`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Largest supported matrix dimension (four qubits).
pub const MAX_DIM: usize = 16;

/// Absolute tolerance for Hermiticity of constructed density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Trace tolerance for normalized density matrices.
pub const TRACE_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmatError {
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionOverflow(usize),
    #[error("dimension {0} is not a power of two in 2..={MAX_DIM}")]
    InvalidDimension(usize),
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("partial trace needs at least one kept qubit")]
    EmptyKeep,
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
}

fn check_dim(dim: usize) -> Result<(), QmatError> {
    if dim > MAX_DIM {
        return Err(QmatError::DimensionOverflow(dim));
    }
    if dim < 2 || !dim.is_power_of_two() {
        return Err(QmatError::InvalidDimension(dim));
    }
    Ok(())
}

/// Square complex matrix of dimension 2, 4, 8 or 16.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self, QmatError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self, QmatError> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self, QmatError> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(QmatError::EntryCount {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self, QmatError> {
        Self::from_vec(dim, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self, QmatError> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        Ok(m)
    }

    /// `|psi><psi|` for a (not necessarily normalized) ket.
    pub fn outer(ket: &[C64]) -> Result<Self, QmatError> {
        let dim = ket.len();
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits, `log2(dim)`.
    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data }
    }

    /// Entrywise complex conjugate (not the adjoint).
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    /// Largest `|a_ij - b_ij|`; `f64::INFINITY` when the dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn try_mul(&self, rhs: &Self) -> Result<Self, QmatError> {
        if self.dim != rhs.dim {
            return Err(QmatError::DimensionMismatch(self.dim, rhs.dim));
        }
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    /// Matrix product, checked.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, QmatError> {
        self.try_mul(rhs)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Panics on dimension mismatch; use [`CMatrix::matmul`] for a checked product.
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix dimensions must agree")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, QmatError> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(QmatError::DimensionOverflow(dim));
    }
    let mut out = CMatrix::zeros(dim)?;
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out[(i * b.dim + k, j * b.dim + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two kets.
pub fn tensor_ket(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

#[inline]
fn bit_of(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

#[inline]
fn with_bit(index: usize, qubit: usize, n: usize, bit: usize) -> usize {
    let shift = n - 1 - qubit;
    (index & !(1 << shift)) | (bit << shift)
}

/// `K m K†` with the 2×2 operator `k` acting on `target` of an `m.qubits()`
/// register and identity elsewhere.
pub fn conjugate_one_qubit(m: &CMatrix, k: &CMatrix, target: usize) -> Result<CMatrix, QmatError> {
    if k.dim != 2 {
        return Err(QmatError::DimensionMismatch(k.dim, 2));
    }
    let n = m.qubits();
    if target >= n {
        return Err(QmatError::QubitOutOfRange { index: target, qubits: n });
    }
    let dim = m.dim;
    let mut left = CMatrix::zeros(dim)?;
    for r in 0..dim {
        let b = bit_of(r, target, n);
        let r0 = with_bit(r, target, n, 0);
        let r1 = with_bit(r, target, n, 1);
        let (k0, k1) = (k[(b, 0)], k[(b, 1)]);
        for c in 0..dim {
            left[(r, c)] = k0 * m[(r0, c)] + k1 * m[(r1, c)];
        }
    }
    let mut out = CMatrix::zeros(dim)?;
    for c in 0..dim {
        let b = bit_of(c, target, n);
        let c0 = with_bit(c, target, n, 0);
        let c1 = with_bit(c, target, n, 1);
        let (k0, k1) = (k[(b, 0)].conj(), k[(b, 1)].conj());
        for r in 0..dim {
            out[(r, c)] = left[(r, c0)] * k0 + left[(r, c1)] * k1;
        }
    }
    Ok(out)
}

/// `K |psi>` with `k` acting on `target` of an `n`-qubit ket (`n = log2(len)`).
pub fn apply_one_qubit_ket(psi: &[C64], k: &CMatrix, target: usize) -> Vec<C64> {
    let n = psi.len().trailing_zeros() as usize;
    assert!(target < n, "qubit {target} out of range for {n} qubits");
    (0..psi.len())
        .map(|r| {
            let b = bit_of(r, target, n);
            k[(b, 0)] * psi[with_bit(r, target, n, 0)] + k[(b, 1)] * psi[with_bit(r, target, n, 1)]
        })
        .collect()
}

/// Partial trace of `m` keeping the qubits in `keep` (any order; the result
/// follows ascending qubit order).
pub fn partial_trace_matrix(m: &CMatrix, keep: &[usize]) -> Result<CMatrix, QmatError> {
    if keep.is_empty() {
        return Err(QmatError::EmptyKeep);
    }
    let n = m.qubits();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&q| q >= n) {
        return Err(QmatError::QubitOutOfRange { index: bad, qubits: n });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let kdim = 1usize << kept.len();
    let tdim = 1usize << traced.len();

    let compose = |kv: usize, tv: usize| -> usize {
        let mut idx = 0;
        for (pos, &q) in kept.iter().enumerate() {
            idx = with_bit(idx, q, n, bit_of(kv, pos, kept.len()));
        }
        for (pos, &q) in traced.iter().enumerate() {
            idx = with_bit(idx, q, n, bit_of(tv, pos, traced.len()));
        }
        idx
    };

    let mut out = CMatrix::zeros(kdim)?;
    for i in 0..kdim {
        for j in 0..kdim {
            out[(i, j)] = (0..tdim).map(|t| m[(compose(i, t), compose(j, t))]).sum();
        }
    }
    Ok(out)
}

/// Trace normalization of a [`DensityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Unit trace.
    Normalized,
    /// Trace carries the weight of a heralded branch, `0 < tr <= 1`.
    Heralded,
}

/// Hermitian positive-semidefinite matrix with a tracked normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    norm: NormKind,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and the trace condition of `norm`.
    pub fn new(mat: CMatrix, norm: NormKind) -> Result<Self, QmatError> {
        let dev = mat.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(QmatError::NotHermitian(dev));
        }
        let tr = mat.trace();
        match norm {
            NormKind::Normalized if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL => {
                return Err(QmatError::NotDensity(format!("trace {tr} is not 1")));
            }
            NormKind::Heralded if tr.re <= 0.0 || tr.re > 1.0 + TRACE_TOL => {
                return Err(QmatError::NotDensity(format!("heralded trace {} outside (0, 1]", tr.re)));
            }
            _ => {}
        }
        let eig = hermitian_eigenvalues(&mat)?;
        if let Some(&min) = eig.last() {
            if min < -PSD_TOL {
                return Err(QmatError::NotDensity(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self { mat, norm })
    }

    /// Density matrix of a pure state; the ket is normalized first.
    pub fn from_pure(ket: &[C64]) -> Result<Self, QmatError> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QmatError::NotDensity("zero ket".into()));
        }
        let scaled: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::outer(&scaled)?, NormKind::Normalized)
    }

    /// Wraps an already-valid matrix without re-running the eigenvalue check.
    /// Only Hermiticity and the trace are verified.
    pub(crate) fn trusted(mat: CMatrix, norm: NormKind) -> Result<Self, QmatError> {
        let dev = mat.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(QmatError::NotHermitian(dev));
        }
        Ok(Self { mat, norm })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn qubits(&self) -> usize {
        self.mat.qubits()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Rescales to unit trace.
    pub fn normalized(&self) -> Result<Self, QmatError> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(QmatError::NotDensity(format!("cannot normalize trace {tr}")));
        }
        Ok(Self {
            mat: self.mat.scale_real(1.0 / tr),
            norm: NormKind::Normalized,
        })
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, QmatError> {
        Ok(Self {
            mat: partial_trace_matrix(&self.mat, keep)?,
            norm: self.norm,
        })
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.mat[idx]
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

/// Cyclic complex Jacobi: each rotation is a phase that makes the pivot real
/// followed by a real Givens rotation zeroing it.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen, QmatError> {
    let dev = m.hermitian_deviation();
    if dev > 1e-10 {
        return Err(QmatError::NotHermitian(dev));
    }
    let n = m.dim;
    let mut a = (m + &m.adjoint()).scale_real(0.5);
    let mut v = CMatrix::identity(n)?;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph_c = phase.conj();

                // A <- A U, V <- V U with U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]].
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * ph_c * s;
                    a[(k, q)] = akp * s + akq * ph_c * c;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * ph_c * s;
                    v[(k, q)] = vkp * s + vkq * ph_c * c;
                }
                // A <- U† A.
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n)?;
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>, QmatError> {
    Ok(hermitian_eigen(m)?.values)
}

/// Pauli matrices and a few fixed states used across the crate.
pub mod consts {
    use super::{CMatrix, C64};

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> CMatrix {
        let z = C64::new(0.0, 0.0);
        CMatrix::from_vec(2, vec![z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z]).unwrap()
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_diag(&[1.0, -1.0]).unwrap()
    }

    pub fn identity2() -> CMatrix {
        CMatrix::identity(2).unwrap()
    }
}
