//! Noiseless linear amplification by quantum scissors.
//!
//! The input qubit lives in the vacuum/single-photon subspace of mode 1. An
//! ancilla photon enters mode 3 and is split on a beam splitter of
//! transmissivity `eta` with mode 2; modes 1 and 2 are then mixed on a
//! balanced beam splitter and detected. One photon in mode 1 and none in
//! mode 2 heralds `c0|0> + g c1|1>` in mode 3, with `g = sqrt(eta/(1-eta))`.

use thiserror::Error;

use crate::channels::{ChannelError, DampingStrength, ReversingStrength, ZERO_PROBABILITY};
use crate::qmat::{conjugate_one_qubit, CMatrix, DensityMatrix, NormKind, QmatError, C64};

pub const MODES: usize = 3;
pub const CUTOFF: usize = 2;
const LEVELS: usize = CUTOFF + 1;
const FOCK_DIM: usize = LEVELS * LEVELS * LEVELS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlaError {
    #[error("transmissivity {0} outside [0.5, 1)")]
    EtaOutOfRange(f64),
    #[error("input amplitudes are not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("heralding probability {0:e} is too small")]
    ZeroProbability(f64),
    #[error("photon number exceeds the cutoff of {CUTOFF} in mode {0}")]
    CutoffExceeded(usize),
    #[error("mode index {0} out of range")]
    BadMode(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

/// Scissors beam-splitter transmissivity and the gain it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScissorsConfig {
    eta: f64,
    gain: f64,
}

impl ScissorsConfig {
    pub fn new(eta: f64) -> Result<Self, NlaError> {
        if !(0.5..1.0).contains(&eta) {
            return Err(NlaError::EtaOutOfRange(eta));
        }
        Ok(Self {
            eta,
            gain: (eta / (1.0 - eta)).sqrt(),
        })
    }

    /// Transmissivity realizing a reversal of strength `r < 1`, `eta = 1/(2-R)`.
    pub fn for_reversal(r: ReversingStrength) -> Result<Self, NlaError> {
        Self::new(1.0 / (2.0 - r.value()))
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn reversing_strength(&self) -> ReversingStrength {
        ReversingStrength::new((2.0 - 1.0 / self.eta).clamp(0.0, 1.0)).expect("clamped")
    }
}

/// `R = 2 - 1/eta`.
pub fn reversing_strength_from_eta(eta: f64) -> Result<ReversingStrength, NlaError> {
    Ok(ScissorsConfig::new(eta)?.reversing_strength())
}

/// Photon loss with rate `t` acts on the `{|0>,|1>}` subspace as amplitude
/// damping with `D = t`.
pub fn loss_as_damping(loss_rate: f64) -> Result<DampingStrength, NlaError> {
    Ok(DampingStrength::new(loss_rate)?)
}

/// Three-mode Fock state truncated at two photons per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amps: [C64; FOCK_DIM],
}

fn index(n: [usize; MODES]) -> usize {
    (n[0] * LEVELS + n[1]) * LEVELS + n[2]
}

fn occupation(i: usize) -> [usize; MODES] {
    [i / (LEVELS * LEVELS), (i / LEVELS) % LEVELS, i % LEVELS]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl FockState {
    pub fn vacuum() -> Self {
        Self::basis([0, 0, 0]).expect("vacuum is in range")
    }

    pub fn basis(n: [usize; MODES]) -> Result<Self, NlaError> {
        if let Some(m) = n.iter().position(|&k| k > CUTOFF) {
            return Err(NlaError::CutoffExceeded(m));
        }
        let mut amps = [C64::new(0.0, 0.0); FOCK_DIM];
        amps[index(n)] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Input qubit `c0|0> + c1|1>` in mode 1 and one ancilla photon in mode 3.
    pub fn scissors_input(c0: C64, c1: C64) -> Self {
        let mut amps = [C64::new(0.0, 0.0); FOCK_DIM];
        amps[index([0, 0, 1])] = c0;
        amps[index([1, 0, 1])] = c1;
        Self { amps }
    }

    pub fn amplitude(&self, n: [usize; MODES]) -> C64 {
        self.amps[index(n)]
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = ([usize; MODES], C64)> + '_ {
        self.amps.iter().enumerate().map(|(i, a)| (occupation(i), *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of each total photon number `0..=6`.
    pub fn photon_number_distribution(&self) -> [f64; MODES * CUTOFF + 1] {
        let mut out = [0.0; MODES * CUTOFF + 1];
        for (n, a) in self.amplitudes() {
            out[n.iter().sum::<usize>()] += a.norm_sqr();
        }
        out
    }

    /// Beam splitter on modes `(i, j)`: `a_i† -> cos θ a_i† + sin θ a_j†`,
    /// `a_j† -> -sin θ a_i† + cos θ a_j†`. A photon stays in its mode with
    /// amplitude `cos θ`, so the transmissivity is `cos² θ`.
    pub fn beam_splitter(&self, i: usize, j: usize, theta: f64) -> Result<Self, NlaError> {
        for m in [i, j] {
            if m >= MODES {
                return Err(NlaError::BadMode(m));
            }
        }
        if i == j {
            return Err(NlaError::BadMode(j));
        }
        let (t, s) = (theta.cos(), theta.sin());
        let mut out = [C64::new(0.0, 0.0); FOCK_DIM];
        for (n, amp) in self.amplitudes() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let (ni, nj) = (n[i], n[j]);
            let norm = 1.0 / (factorial(ni) * factorial(nj)).sqrt();
            // (t x + s y)^ni (-s x + t y)^nj with x = a_i†, y = a_j†.
            for k in 0..=ni {
                for l in 0..=nj {
                    let coeff = binomial(ni, k)
                        * t.powi(k as i32)
                        * s.powi((ni - k) as i32)
                        * binomial(nj, l)
                        * (-s).powi(l as i32)
                        * t.powi((nj - l) as i32);
                    if coeff == 0.0 {
                        continue;
                    }
                    let (p, q) = (k + l, ni + nj - k - l);
                    let weight = coeff * norm * (factorial(p) * factorial(q)).sqrt();
                    let mut m = n;
                    m[i] = p;
                    m[j] = q;
                    if p > CUTOFF || q > CUTOFF {
                        return Err(NlaError::CutoffExceeded(if p > CUTOFF { i } else { j }));
                    }
                    out[index(m)] += amp * weight;
                }
            }
        }
        Ok(Self { amps: out })
    }
}

/// Unnormalized mode-3 amplitudes `(u0, u1)` on the heralded branch. This map
/// is linear in `(c0, c1)`.
pub fn scissors_branch(c0: C64, c1: C64, cfg: ScissorsConfig) -> Result<(C64, C64), NlaError> {
    let theta_eta = cfg.eta.sqrt().acos();
    let state = FockState::scissors_input(c0, c1)
        .beam_splitter(1, 2, theta_eta)?
        .beam_splitter(0, 1, std::f64::consts::FRAC_PI_4)?;
    Ok((state.amplitude([1, 0, 0]), state.amplitude([1, 0, 1])))
}

/// Scissors on a normalized input qubit; returns the normalized output
/// amplitudes and the heralding probability.
pub fn scissors_truncate(c0: C64, c1: C64, eta: f64) -> Result<(C64, C64, f64), NlaError> {
    let cfg = ScissorsConfig::new(eta)?;
    let n = c0.norm_sqr() + c1.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(NlaError::NotNormalized(n));
    }
    let (u0, u1) = scissors_branch(c0, c1, cfg)?;
    let p = u0.norm_sqr() + u1.norm_sqr();
    if !(p >= ZERO_PROBABILITY) {
        return Err(NlaError::ZeroProbability(p));
    }
    let s = p.sqrt();
    Ok((u0 / s, u1 / s, p))
}

/// The heralded Kraus operator on the `{|0>,|1>}` subspace, read off from the
/// simulation with basis inputs.
pub fn scissors_kraus(eta: f64) -> Result<CMatrix, NlaError> {
    let cfg = ScissorsConfig::new(eta)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (a00, a10) = scissors_branch(one, zero, cfg)?;
    let (a01, a11) = scissors_branch(zero, one, cfg)?;
    Ok(CMatrix::from_vec(2, vec![a00, a01, a10, a11])?)
}

/// Applies the heralded scissors to qubit `target` of `rho`; returns the
/// normalized state and the heralding probability.
pub fn scissors_on_qubit(rho: &DensityMatrix, eta: f64, target: usize) -> Result<(DensityMatrix, f64), NlaError> {
    let k = scissors_kraus(eta)?;
    let out = conjugate_one_qubit(rho.matrix(), &k, target)?;
    let p = out.trace().re / rho.trace();
    if !(p >= ZERO_PROBABILITY) {
        return Err(NlaError::ZeroProbability(p));
    }
    let state = DensityMatrix::new(out.scale_real(1.0 / out.trace().re), NormKind::Normalized)?;
    Ok((state, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{amplitude_damping, apply_channel, apply_heralded, reversal};
    use crate::swap::PairAmplitudes;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eta_to_reversal() {
        assert_eq!(reversing_strength_from_eta(0.5).unwrap().value(), 0.0);
        assert!((reversing_strength_from_eta(0.8).unwrap().value() - 0.75).abs() < 1e-15);
        assert!(reversing_strength_from_eta(1.0 - 1e-12).unwrap().value() > 1.0 - 1e-11);
        assert_eq!(reversing_strength_from_eta(0.4).unwrap_err(), NlaError::EtaOutOfRange(0.4));
        assert!(reversing_strength_from_eta(1.0).is_err());
    }

    #[test]
    fn unit_gain_is_identity() {
        let (a, b) = (c(0.6), C64::new(0.0, 0.8));
        let (o0, o1, p) = scissors_truncate(a, b, 0.5).unwrap();
        assert!((o0 - a).norm() < 1e-12 && (o1 - b).norm() < 1e-12);
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gain_two_at_eta_point_eight() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (o0, o1, p) = scissors_truncate(c(h), c(h), 0.8).unwrap();
        assert!(((o1 / o0) - c(2.0)).norm() < 1e-12);
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn herald_probability_formula() {
        let (a, b) = (c(0.8), c(0.6));
        for k in 0..10 {
            let eta = 0.5 + 0.05 * k as f64;
            let (_, _, p) = scissors_truncate(a, b, eta).unwrap();
            let want = 0.5 * (0.64 * (1.0 - eta) + 0.36 * eta);
            assert!((p - want).abs() < 1e-12);
        }
    }

    #[test]
    fn beam_splitter_conserves_photons_and_norm() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = FockState::scissors_input(c(h), C64::new(0.0, h));
        let before = s.photon_number_distribution();
        let out = s.beam_splitter(1, 2, 0.3).unwrap().beam_splitter(0, 1, 1.1).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        for (x, y) in before.iter().zip(out.photon_number_distribution()) {
            assert!((x - y).abs() < 1e-12);
        }
        let two = FockState::basis([1, 1, 0]).unwrap().beam_splitter(0, 1, std::f64::consts::FRAC_PI_4).unwrap();
        // Hong-Ou-Mandel: no coincidence at a balanced splitter.
        assert!(two.amplitude([1, 1, 0]).norm() < 1e-15);
        assert!((two.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_enforced() {
        assert!(FockState::basis([3, 0, 0]).is_err());
        let s = FockState::basis([2, 1, 0]).unwrap();
        assert!(matches!(s.beam_splitter(0, 1, 0.4), Err(NlaError::CutoffExceeded(_))));
        assert!(FockState::vacuum().beam_splitter(0, 3, 0.1).is_err());
    }

    #[test]
    fn loss_maps_to_damping() {
        assert_eq!(loss_as_damping(0.0).unwrap().value(), 0.0);
        assert_eq!(loss_as_damping(0.52).unwrap().value(), 0.52);
        assert!(loss_as_damping(1.5).is_err());
    }

    #[test]
    fn scissors_reproduces_single_pair_recovery() {
        let d = 0.4;
        let r_opt = 2.0 * d / (1.0 + d);
        let rho = DensityMatrix::from_pure(&PairAmplitudes::bell().ket()).unwrap();
        let damped = apply_channel(&rho, &amplitude_damping(DampingStrength::new(d).unwrap()), 1).unwrap();
        let rs = ReversingStrength::new(r_opt).unwrap();
        let (want, _) = apply_heralded(&damped, &reversal(rs), 0, 1).unwrap();
        let eta = ScissorsConfig::for_reversal(rs).unwrap().eta();
        let (got, _) = scissors_on_qubit(&damped, eta, 1).unwrap();
        assert!(got.matrix().max_abs_diff(want.matrix()) < 1e-10);
    }
}
