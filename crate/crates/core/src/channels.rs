//! Amplitude damping and its weak-measurement reversal as Kraus channels.
//!
//! Branch 0 of every channel built here is the no-jump operator (the
//! "success" outcome of the reversal), branch 1 is the jump.

use thiserror::Error;

use crate::qmat::{conjugate_one_qubit, CMatrix, DensityMatrix, NormKind, QmatError, C64};

/// Heralded branches with a smaller probability are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-15;

/// Tolerance of the completeness check `sum K† K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{name} = {value} is outside [0, 1]")]
    StrengthOutOfRange { name: &'static str, value: f64 },
    #[error("Kraus operators violate completeness by {0:e}")]
    Incomplete(f64),
    #[error("Kraus operators must be 2x2")]
    NotSingleQubit,
    #[error("branch {branch} does not exist (channel has {ops} operators)")]
    BadBranch { branch: usize, ops: usize },
    #[error("heralded branch has probability {0:e}")]
    ZeroProbability(f64),
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

fn check_unit(name: &'static str, value: f64) -> Result<f64, ChannelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ChannelError::StrengthOutOfRange { name, value })
    }
}

/// Damping strength `D` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DampingStrength(f64);

impl DampingStrength {
    pub fn new(d: f64) -> Result<Self, ChannelError> {
        check_unit("damping strength", d).map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - D`.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

/// Reversing strength `R` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReversingStrength(f64);

impl ReversingStrength {
    pub fn new(r: f64) -> Result<Self, ChannelError> {
        check_unit("reversing strength", r).map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - R`.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

/// A single-qubit channel given by its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    label: String,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, label: impl Into<String>) -> Result<Self, ChannelError> {
        if ops.is_empty() || ops.iter().any(|k| k.dim() != 2) {
            return Err(ChannelError::NotSingleQubit);
        }
        let ch = Self {
            ops,
            label: label.into(),
        };
        let dev = ch.completeness_error();
        if dev > COMPLETENESS_TOL {
            return Err(ChannelError::Incomplete(dev));
        }
        Ok(ch)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest entrywise deviation of `sum K† K` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = CMatrix::zeros(2).expect("2 is a valid dimension");
        for k in &self.ops {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&CMatrix::identity(2).expect("2 is a valid dimension"))
    }
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
    CMatrix::from_real(2, &[a, b, c, d]).expect("2x2 literal")
}

/// `{ |0><0| + sqrt(1-D)|1><1|,  sqrt(D)|0><1| }`.
pub fn amplitude_damping(d: DampingStrength) -> KrausChannel {
    let k1 = real2(1.0, 0.0, 0.0, d.complement().sqrt());
    let k2 = real2(0.0, d.value().sqrt(), 0.0, 0.0);
    KrausChannel {
        ops: vec![k1, k2],
        label: format!("amplitude-damping(D={})", d.value()),
    }
}

/// `{ sqrt(1-R)|0><0| + |1><1|,  sqrt(R)|1><0| }`; branch 0 heralds success.
pub fn reversal(r: ReversingStrength) -> KrausChannel {
    let k1 = real2(r.complement().sqrt(), 0.0, 0.0, 1.0);
    let k2 = real2(0.0, 0.0, r.value().sqrt(), 0.0);
    KrausChannel {
        ops: vec![k1, k2],
        label: format!("reversal(R={})", r.value()),
    }
}

/// Deterministic application `sum_i K_i rho K_i†` on qubit `target`.
pub fn apply_channel(
    rho: &DensityMatrix,
    ch: &KrausChannel,
    target: usize,
) -> Result<DensityMatrix, ChannelError> {
    let mut out = CMatrix::zeros(rho.dim())?;
    for k in &ch.ops {
        out = &out + &conjugate_one_qubit(rho.matrix(), k, target)?;
    }
    Ok(DensityMatrix::trusted(out, rho.norm_kind())?)
}

/// Unnormalized branch `K rho K†` of a single Kraus operator.
pub fn branch_unnormalized(
    rho: &CMatrix,
    ch: &KrausChannel,
    branch: usize,
    target: usize,
) -> Result<CMatrix, ChannelError> {
    let k = ch.ops.get(branch).ok_or(ChannelError::BadBranch {
        branch,
        ops: ch.ops.len(),
    })?;
    Ok(conjugate_one_qubit(rho, k, target)?)
}

/// Heralded application of one branch. Returns the normalized post-selected
/// state and the branch probability `tr(K rho K†) / tr(rho)`.
pub fn apply_heralded(
    rho: &DensityMatrix,
    ch: &KrausChannel,
    branch: usize,
    target: usize,
) -> Result<(DensityMatrix, f64), ChannelError> {
    let un = branch_unnormalized(rho.matrix(), ch, branch, target)?;
    let p = un.trace().re / rho.trace();
    if !(p >= ZERO_PROBABILITY) {
        return Err(ChannelError::ZeroProbability(p));
    }
    let state = DensityMatrix::trusted(un.scale_real(1.0 / (p * rho.trace())), NormKind::Normalized)?;
    Ok((state, p))
}

/// Pure two-qubit state `a|00> + b|11>`.
pub(crate) fn pair_ket(a: C64, b: C64) -> Vec<C64> {
    let z = C64::new(0.0, 0.0);
    vec![a, z, z, b]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::hermitian_eigenvalues;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn damp(d: f64) -> KrausChannel {
        amplitude_damping(DampingStrength::new(d).unwrap())
    }

    fn rev(r: f64) -> KrausChannel {
        reversal(ReversingStrength::new(r).unwrap())
    }

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&pair_ket(c(h), c(h))).unwrap()
    }

    #[test]
    fn strengths_are_range_checked() {
        assert!(DampingStrength::new(-0.01).is_err());
        assert!(DampingStrength::new(1.01).is_err());
        assert!(ReversingStrength::new(f64::NAN).is_err());
        assert!(ReversingStrength::new(1.0).is_ok());
    }

    #[test]
    fn damping_operators() {
        let ch = damp(0.0);
        assert_eq!(ch.ops()[0], CMatrix::identity(2).unwrap());
        assert_eq!(ch.ops()[1], CMatrix::zeros(2).unwrap());

        let ch = damp(1.0);
        assert_eq!(ch.ops()[0], real2(1.0, 0.0, 0.0, 0.0));
        assert_eq!(ch.ops()[1], real2(0.0, 1.0, 0.0, 0.0));

        let ch = damp(0.36);
        assert!(ch.ops()[0].max_abs_diff(&real2(1.0, 0.0, 0.0, 0.8)) < 1e-15);
        assert!(ch.ops()[1].max_abs_diff(&real2(0.0, 0.6, 0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn reversal_operators() {
        let ch = rev(0.0);
        assert_eq!(ch.ops()[0], CMatrix::identity(2).unwrap());
        assert_eq!(ch.ops()[1], CMatrix::zeros(2).unwrap());
        let ch = rev(1.0);
        assert_eq!(ch.ops()[0], real2(0.0, 0.0, 0.0, 1.0));
        assert_eq!(ch.ops()[1], real2(0.0, 0.0, 1.0, 0.0));
        assert!(rev(0.19).ops()[0].max_abs_diff(&real2(0.9, 0.0, 0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn incomplete_channel_rejected() {
        let err = KrausChannel::new(vec![real2(1.0, 0.0, 0.0, 0.5)], "bad").unwrap_err();
        assert!(matches!(err, ChannelError::Incomplete(_)));
    }

    #[test]
    fn noiseless_damping_is_identity() {
        let out = apply_channel(&bell(), &damp(0.0), 1).unwrap();
        assert!(out.matrix().max_abs_diff(bell().matrix()) < 1e-15);
    }

    #[test]
    fn damped_pair_matches_closed_matrix() {
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let d: f64 = 0.3;
        let rho = DensityMatrix::from_pure(&pair_ket(a, b)).unwrap();
        let out = apply_channel(&rho, &damp(d), 1).unwrap();
        let mut want = CMatrix::zeros(4).unwrap();
        want[(0, 0)] = c(a.norm_sqr());
        want[(0, 3)] = a * b.conj() * (1.0 - d).sqrt();
        want[(3, 0)] = a.conj() * b * (1.0 - d).sqrt();
        want[(2, 2)] = c(d * b.norm_sqr());
        want[(3, 3)] = c((1.0 - d) * b.norm_sqr());
        assert!(out.matrix().max_abs_diff(&want) < 1e-12);

        let out = apply_channel(&bell(), &damp(0.5), 1).unwrap();
        let diag = out.matrix().diagonal_real();
        for (g, w) in diag.iter().zip([0.5, 0.0, 0.25, 0.25]) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!((out[(0, 3)].re - 0.5 * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn heralded_reversal_success_probability() {
        let damped = apply_channel(&bell(), &damp(0.5), 1).unwrap();
        let (_, p) = apply_heralded(&damped, &rev(2.0 / 3.0), 0, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);

        for &(d, r) in &[(0.2, 0.4), (0.7, 0.9), (0.0, 0.5)] {
            let damped = apply_channel(&bell(), &damp(d), 1).unwrap();
            let (_, p) = apply_heralded(&damped, &rev(r), 0, 1).unwrap();
            assert!((p - (1.0 - 0.5 * r * (1.0 + d))).abs() < 1e-14);
        }

        let (same, p) = apply_heralded(&damped, &rev(0.0), 0, 1).unwrap();
        assert_eq!(p, 1.0);
        assert!(same.matrix().max_abs_diff(damped.matrix()) < 1e-15);
    }

    #[test]
    fn heralded_reversal_reproduces_reversed_pair() {
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.8, 0.0));
        let (d, r): (f64, f64) = (0.4, 0.55);
        let (db, rb) = (1.0 - d, 1.0 - r);
        let damped = apply_channel(&DensityMatrix::from_pure(&pair_ket(a, b)).unwrap(), &damp(d), 1).unwrap();
        let (state, p) = apply_heralded(&damped, &rev(r), 0, 1).unwrap();
        let p_want = rb * a.norm_sqr() + d * rb * b.norm_sqr() + db * b.norm_sqr();
        assert!((p - p_want).abs() < 1e-14);
        let mut want = CMatrix::zeros(4).unwrap();
        want[(0, 0)] = c(rb * a.norm_sqr());
        want[(0, 3)] = a * b.conj() * (db * rb).sqrt();
        want[(3, 0)] = a.conj() * b * (db * rb).sqrt();
        want[(2, 2)] = c(d * rb * b.norm_sqr());
        want[(3, 3)] = c(db * b.norm_sqr());
        assert!(state.matrix().max_abs_diff(&want.scale_real(1.0 / p_want)) < 1e-12);
    }

    #[test]
    fn impossible_branch_is_an_error() {
        let ground = DensityMatrix::from_pure(&[c(1.0), c(0.0)]).unwrap();
        let err = apply_heralded(&ground, &damp(0.5), 1, 0).unwrap_err();
        assert!(matches!(err, ChannelError::ZeroProbability(_)));
        assert!(matches!(
            apply_heralded(&ground, &damp(0.5), 2, 0),
            Err(ChannelError::BadBranch { branch: 2, ops: 2 })
        ));
        assert!(matches!(apply_channel(&ground, &damp(0.5), 1), Err(ChannelError::Qmat(_))));
    }

    fn random_state(seed: &[f64]) -> DensityMatrix {
        // mixture of two random pure two-qubit kets
        let k1: Vec<C64> = (0..4).map(|i| C64::new(seed[i], seed[i + 4])).collect();
        let k2: Vec<C64> = (0..4).map(|i| C64::new(seed[i + 8], seed[(i + 3) % 12])).collect();
        let n1: f64 = k1.iter().map(|z| z.norm_sqr()).sum();
        let n2: f64 = k2.iter().map(|z| z.norm_sqr()).sum();
        let m = &CMatrix::outer(&k1).unwrap().scale_real(0.3 / n1) + &CMatrix::outer(&k2).unwrap().scale_real(0.7 / n2);
        DensityMatrix::new(m, NormKind::Normalized).unwrap()
    }

    proptest! {
        #[test]
        fn channel_is_sum_of_heralded_branches(
            seed in proptest::collection::vec(0.05f64..1.0, 12),
            d in 0.0f64..=1.0,
            r in 0.0f64..=1.0,
            target in 0usize..2,
        ) {
            let rho = random_state(&seed);
            for ch in [damp(d), rev(r)] {
                prop_assert!(ch.completeness_error() < 1e-12);
                let full = apply_channel(&rho, &ch, target).unwrap();
                let mut sum = CMatrix::zeros(4).unwrap();
                for b in 0..2 {
                    if let Ok((s, p)) = apply_heralded(&rho, &ch, b, target) {
                        sum = &sum + &s.matrix().scale_real(p);
                    }
                }
                prop_assert!(full.matrix().max_abs_diff(&sum) < 1e-12);
                prop_assert!((full.trace() - 1.0).abs() < 1e-12);
                prop_assert!(full.matrix().is_hermitian(1e-12));
                let ev = hermitian_eigenvalues(full.matrix()).unwrap();
                prop_assert!(*ev.last().unwrap() >= -1e-10);
            }
        }

        #[test]
        fn damping_composes_multiplicatively(
            seed in proptest::collection::vec(0.05f64..1.0, 12),
            d1 in 0.0f64..=1.0,
            d2 in 0.0f64..=1.0,
        ) {
            let rho = random_state(&seed);
            let twice = apply_channel(&apply_channel(&rho, &damp(d1), 0).unwrap(), &damp(d2), 0).unwrap();
            let once = apply_channel(&rho, &damp(1.0 - (1.0 - d1) * (1.0 - d2)), 0).unwrap();
            prop_assert!(twice.matrix().max_abs_diff(once.matrix()) < 1e-12);
        }
    }
}
