//! Entanglement and quality measures of two-qubit states.

use thiserror::Error;

use crate::qmat::{hermitian_eigen, CMatrix, DensityMatrix, QmatError, C64};
use crate::swap::BsmOutcome;

/// Off-X entries above this magnitude disqualify the X-state fast path.
pub const XSTATE_TOL: f64 = 1e-12;

/// Eigenvalues of `rho` below this are treated as exact zeros when
/// factoring `rho = W W†`.
const RANK_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("expected a two-qubit (4x4) state, got dimension {0}")]
    WrongDimension(usize),
    #[error("state is not an X-state (off-X entry of magnitude {0:e})")]
    NotXState(f64),
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

/// Wootters concurrence, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Concurrence(f64);

impl Concurrence {
    /// Clamps a signed margin at zero.
    pub fn from_margin(margin: f64) -> Self {
        Self(margin.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Overlap `<target|rho|target>` with a Bell state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fidelity(f64);

impl Fidelity {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<(), MeasureError> {
    if rho.dim() != 4 {
        return Err(MeasureError::WrongDimension(rho.dim()));
    }
    Ok(())
}

/// `sigma_y ⊗ sigma_y`; real, with -1 on the outer anti-diagonal and +1 on
/// the inner one.
fn spin_flip(v: &[C64]) -> [C64; 4] {
    [-v[3], v[2], v[1], -v[0]]
}

/// Singular values of a small complex matrix given by its columns
/// (one-sided Jacobi). Small singular values keep absolute accuracy near
/// machine epsilon, which squaring into an eigenproblem would lose.
fn singular_values(mut cols: Vec<Vec<C64>>) -> Vec<f64> {
    let k = cols.len();
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g <= 1e-17 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..cols[i].len() {
                    let ai = cols[i][r];
                    let aj = cols[j][r] * phase;
                    cols[i][r] = ai * c - aj * s;
                    cols[j][r] = ai * s + aj * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// The four Wootters `lambda_i` in descending order: the square roots of the
/// eigenvalues of `rho (sy⊗sy) rho* (sy⊗sy)`.
///
/// With `rho = W W†` these are the singular values of the complex symmetric
/// matrix `Wᵀ (sy⊗sy) W`, which is what is computed here.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4], MeasureError> {
    check_two_qubit(rho)?;
    let eig = hermitian_eigen(rho.matrix())?;
    let scale = eig.values[0].max(1.0);
    let w: Vec<Vec<C64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &mu)| mu > RANK_CUTOFF * scale)
        .map(|(col, &mu)| (0..4).map(|row| eig.vectors[(row, col)] * mu.sqrt()).collect())
        .collect();
    let flipped: Vec<[C64; 4]> = w.iter().map(|col| spin_flip(col)).collect();
    // tau[i][j] = w_i^T (sy⊗sy) w_j, stored column-wise.
    let tau: Vec<Vec<C64>> = (0..w.len())
        .map(|j| {
            (0..w.len())
                .map(|i| w[i].iter().zip(&flipped[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let mut lambdas = [0.0; 4];
    for (slot, sv) in lambdas.iter_mut().zip(singular_values(tau)) {
        *slot = sv;
    }
    Ok(lambdas)
}

/// Signed `lambda_1 - lambda_2 - lambda_3 - lambda_4` before clamping.
pub fn concurrence_margin(rho: &DensityMatrix) -> Result<f64, MeasureError> {
    let l = wootters_lambdas(rho)?;
    Ok(l[0] - l[1] - l[2] - l[3])
}

/// Wootters concurrence of a normalized two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<Concurrence, MeasureError> {
    Ok(Concurrence::from_margin(concurrence_margin(rho)?))
}

/// Largest magnitude among entries outside the diagonal and anti-diagonal.
pub fn off_x_magnitude(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j && i + j != 3 {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Signed X-state margin `max(|r14| - sqrt(r22 r33), |r23| - sqrt(r11 r44))`;
/// the concurrence is twice its positive part.
pub fn xstate_margin(rho: &DensityMatrix) -> Result<f64, MeasureError> {
    check_two_qubit(rho)?;
    let m = rho.matrix();
    let off = off_x_magnitude(m);
    if off > XSTATE_TOL {
        return Err(MeasureError::NotXState(off));
    }
    let p = |i: usize| m[(i, i)].re.max(0.0);
    let outer = m[(0, 3)].norm() - (p(1) * p(2)).sqrt();
    let inner = m[(1, 2)].norm() - (p(0) * p(3)).sqrt();
    Ok(outer.max(inner))
}

/// Closed-form concurrence of an X-shaped two-qubit state.
pub fn concurrence_xstate(rho: &DensityMatrix) -> Result<Concurrence, MeasureError> {
    Ok(Concurrence::from_margin(2.0 * xstate_margin(rho)?))
}

/// `<target|rho|target>` for one of the four Bell states.
pub fn bell_fidelity(rho: &DensityMatrix, target: BsmOutcome) -> Result<Fidelity, MeasureError> {
    check_two_qubit(rho)?;
    let ket = target.ket();
    let m = rho.matrix();
    let mut f = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            f += ket[i].conj() * m[(i, j)] * ket[j];
        }
    }
    Ok(Fidelity(f.re))
}
