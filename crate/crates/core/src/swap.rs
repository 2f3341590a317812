//! Entanglement swapping at a single repeater node.
//!
//! Two pairs `(A,B)` and `(C,D)` are prepared as `a|00> + b|11>`, the noisy
//! qubits are damped and then reversed (success branch only), and a Bell
//! measurement on `(B,C)` leaves `(A,D)` entangled. Qubits are ordered
//! `A, B, C, D` (indices 0..4).
//!
//! [`swap_numeric`] runs the whole thing on the 16×16 density matrix and is
//! the oracle for the closed forms in this module.

use thiserror::Error;

use crate::channels::{
    amplitude_damping, apply_channel, branch_unnormalized, reversal, ChannelError, DampingStrength,
    ReversingStrength, ZERO_PROBABILITY,
};
use crate::qmat::{tensor_ket, CMatrix, DensityMatrix, NormKind, QmatError, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwapError {
    #[error("pair amplitudes are not normalized (|a|^2 + |b|^2 = {0})")]
    NotNormalized(f64),
    #[error("outcome {0:?} does not belong to the requested branch family")]
    WrongFamily(BsmOutcome),
    #[error("branch has probability {0:e}")]
    ZeroProbability(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

/// Amplitudes of `a|00> + b|11>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAmplitudes {
    a: C64,
    b: C64,
}

impl PairAmplitudes {
    pub fn new(a: C64, b: C64) -> Result<Self, SwapError> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(SwapError::NotNormalized(n));
        }
        Ok(Self { a, b })
    }

    /// Rescales `(a, b)` to unit norm.
    pub fn normalized(a: C64, b: C64) -> Result<Self, SwapError> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(SwapError::NotNormalized(0.0));
        }
        Self::new(a / n, b / n)
    }

    /// `|Phi+>`.
    pub fn bell() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { a: h, b: h }
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }

    pub fn ket(&self) -> Vec<C64> {
        crate::channels::pair_ket(self.a, self.b)
    }

    /// Success probability of the reversal on the damped second qubit,
    /// `(1-R)|a|^2 + D(1-R)|b|^2 + (1-D)|b|^2`.
    pub fn reversal_success(&self, d: f64, r: f64) -> f64 {
        let (a2, b2) = (self.a.norm_sqr(), self.b.norm_sqr());
        (1.0 - r) * a2 + d * (1.0 - r) * b2 + (1.0 - d) * b2
    }
}

/// Outcome of the Bell measurement on `(B, C)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BsmOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// `Phi` outcomes keep `|00>,|11>` correlations, `Psi` outcomes `|01>,|10>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellFamily {
    Phi,
    Psi,
}

impl BsmOutcome {
    pub const ALL: [BsmOutcome; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    pub fn family(self) -> BellFamily {
        match self {
            Self::PhiPlus | Self::PhiMinus => BellFamily::Phi,
            Self::PsiPlus | Self::PsiMinus => BellFamily::Psi,
        }
    }

    /// `+1` for the `+` states, `-1` for the `-` states.
    pub fn sign(self) -> f64 {
        match self {
            Self::PhiPlus | Self::PsiPlus => 1.0,
            Self::PhiMinus | Self::PsiMinus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::PhiPlus => 0,
            Self::PhiMinus => 1,
            Self::PsiPlus => 2,
            Self::PsiMinus => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
        }
    }

    /// The Bell state as a two-qubit ket.
    pub fn ket(self) -> [C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let p = C64::new(h, 0.0);
        let s = C64::new(h * self.sign(), 0.0);
        match self.family() {
            BellFamily::Phi => [p, z, z, s],
            BellFamily::Psi => [z, p, s, z],
        }
    }
}

/// Which qubits of `A, B, C, D` are exposed to noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepeaterModel {
    /// Entanglement swapping; the intermediate qubits `B` and `C` are damped.
    TwoWay,
    /// Relay teleportation; the transmitted qubits `B` and `D` are damped.
    OneWay,
}

impl RepeaterModel {
    pub fn noisy_qubits(self) -> [usize; 2] {
        match self {
            Self::TwoWay => [1, 2],
            Self::OneWay => [1, 3],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::TwoWay => "two-way",
            Self::OneWay => "one-way",
        }
    }
}

/// Normalized `(A, D)` state after a heralded swap.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapResult {
    pub outcome: BsmOutcome,
    pub state: DensityMatrix,
    /// Probability of `outcome`, conditioned on both reversals succeeding.
    pub branch_prob: f64,
    /// Product of the two reversal success probabilities (1 without reversal).
    pub reversal_prob: f64,
}

/// Unnormalized 16×16 state after damping and successful reversal, together
/// with the two heralding probabilities.
#[derive(Debug, Clone)]
pub struct PostReversal {
    state: CMatrix,
    reversal_probs: [f64; 2],
}

impl PostReversal {
    pub fn state(&self) -> &CMatrix {
        &self.state
    }

    pub fn reversal_probs(&self) -> [f64; 2] {
        self.reversal_probs
    }

    pub fn reversal_prob(&self) -> f64 {
        self.reversal_probs[0] * self.reversal_probs[1]
    }

    /// Unnormalized `<bell|_{BC} rho |bell>_{BC}` on `(A, D)`.
    pub fn project(&self, outcome: BsmOutcome) -> CMatrix {
        let bell = outcome.ket();
        let mut out = CMatrix::zeros(4).expect("4 is a valid dimension");
        for a in 0..2 {
            for d in 0..2 {
                for a2 in 0..2 {
                    for d2 in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for x in 0..4 {
                            if bell[x].norm_sqr() == 0.0 {
                                continue;
                            }
                            for y in 0..4 {
                                if bell[y].norm_sqr() == 0.0 {
                                    continue;
                                }
                                acc += bell[x].conj() * self.state[(a * 8 + x * 2 + d, a2 * 8 + y * 2 + d2)] * bell[y];
                            }
                        }
                        out[(a * 2 + d, a2 * 2 + d2)] = acc;
                    }
                }
            }
        }
        out
    }

    /// Heralds `outcome`; the branch probability is conditional on the
    /// reversals having succeeded.
    pub fn herald(&self, outcome: BsmOutcome) -> Result<SwapResult, SwapError> {
        let projected = self.project(outcome);
        let weight = projected.trace().re;
        let total = self.reversal_prob();
        let branch_prob = weight / total;
        if !(branch_prob >= ZERO_PROBABILITY) {
            return Err(SwapError::ZeroProbability(branch_prob));
        }
        let state = DensityMatrix::new(projected.scale_real(1.0 / weight), NormKind::Normalized)?;
        Ok(SwapResult {
            outcome,
            state,
            branch_prob,
            reversal_prob: total,
        })
    }
}

/// Damping strengths and reversal strengths for the two noisy qubits, in the
/// order given by [`RepeaterModel::noisy_qubits`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeNoise {
    pub damping: [DampingStrength; 2],
    pub reversing: [ReversingStrength; 2],
}

impl NodeNoise {
    /// Equal strengths on both noisy qubits.
    pub fn symmetric(d: DampingStrength, r: ReversingStrength) -> Self {
        Self {
            damping: [d, d],
            reversing: [r, r],
        }
    }
}

/// Builds the four-qubit state, damps and reverses the model's noisy qubits.
pub fn post_reversal(
    pair1: PairAmplitudes,
    pair2: PairAmplitudes,
    model: RepeaterModel,
    noise: NodeNoise,
) -> Result<PostReversal, SwapError> {
    let ket = tensor_ket(&pair1.ket(), &pair2.ket());
    let mut rho = DensityMatrix::trusted(CMatrix::outer(&ket)?, NormKind::Normalized)?;
    let qubits = model.noisy_qubits();
    for (q, d) in qubits.iter().zip(noise.damping) {
        rho = apply_channel(&rho, &amplitude_damping(d), *q)?;
    }
    let mut state = rho.into_matrix();
    let mut probs = [1.0; 2];
    for (i, (q, r)) in qubits.iter().zip(noise.reversing).enumerate() {
        let before = state.trace().re;
        state = branch_unnormalized(&state, &reversal(r), 0, *q)?;
        probs[i] = state.trace().re / before;
        if !(probs[i] >= ZERO_PROBABILITY) {
            return Err(SwapError::ZeroProbability(probs[i]));
        }
    }
    Ok(PostReversal {
        state,
        reversal_probs: probs,
    })
}

/// Brute-force swap for one outcome: 16×16 state, damping, heralded reversal,
/// Bell projection on `(B, C)`, partial trace onto `(A, D)`.
#[allow(clippy::too_many_arguments)]
pub fn swap_numeric(
    pair1: PairAmplitudes,
    pair2: PairAmplitudes,
    model: RepeaterModel,
    d1: DampingStrength,
    d2: DampingStrength,
    r1: ReversingStrength,
    r2: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    let noise = NodeNoise {
        damping: [d1, d2],
        reversing: [r1, r2],
    };
    post_reversal(pair1, pair2, model, noise)?.herald(outcome)
}

/// All four outcomes from one brute-force run; impossible outcomes come back
/// as [`SwapError::ZeroProbability`].
pub fn swap_numeric_all(
    pair1: PairAmplitudes,
    pair2: PairAmplitudes,
    model: RepeaterModel,
    noise: NodeNoise,
) -> Result<[Result<SwapResult, SwapError>; 4], SwapError> {
    let post = post_reversal(pair1, pair2, model, noise)?;
    Ok(BsmOutcome::ALL.map(|o| post.herald(o)))
}

/// Products of pair amplitudes shared by all closed forms.
struct Amps {
    ag: f64,
    ad: f64,
    bg: f64,
    bd: f64,
    /// `a b* g d*`
    phi_coh: C64,
    /// `a b* g* d`
    psi_coh: C64,
}

impl Amps {
    fn new(p: PairAmplitudes, q: PairAmplitudes) -> Self {
        let (a, b, g, d) = (p.a, p.b, q.a, q.b);
        Self {
            ag: (a * g).norm_sqr(),
            ad: (a * d).norm_sqr(),
            bg: (b * g).norm_sqr(),
            bd: (b * d).norm_sqr(),
            phi_coh: a * b.conj() * g * d.conj(),
            psi_coh: a * b.conj() * g.conj() * d,
        }
    }
}

fn expect_family(outcome: BsmOutcome, family: BellFamily) -> Result<(), SwapError> {
    if outcome.family() == family {
        Ok(())
    } else {
        Err(SwapError::WrongFamily(outcome))
    }
}

/// Normalizes an unnormalized closed-form `(A,D)` matrix and attaches the
/// branch probability `tr / (2 P_AB P_CD)`.
fn finish(
    outcome: BsmOutcome,
    diag: [f64; 4],
    coherence: C64,
    p_ab: f64,
    p_cd: f64,
) -> Result<SwapResult, SwapError> {
    let mut m = CMatrix::from_diag(&diag)?;
    let (i, j) = match outcome.family() {
        BellFamily::Phi => (0, 3),
        BellFamily::Psi => (1, 2),
    };
    m[(i, j)] = coherence;
    m[(j, i)] = coherence.conj();
    let tr: f64 = diag.iter().sum();
    let reversal_prob = p_ab * p_cd;
    let branch_prob = tr / (2.0 * reversal_prob);
    if !(branch_prob >= ZERO_PROBABILITY) {
        return Err(SwapError::ZeroProbability(branch_prob));
    }
    let state = DensityMatrix::trusted(m.scale_real(1.0 / tr), NormKind::Normalized)?;
    Ok(SwapResult {
        outcome,
        state,
        branch_prob,
        reversal_prob,
    })
}

fn strengths(d: DampingStrength, r: ReversingStrength) -> (f64, f64, f64) {
    (d.value(), d.complement(), r.complement())
}

/// Two-way model, `Phi±` outcome, equal strengths on `B` and `C`.
pub fn twoway_phi_closed(
    pairs: (PairAmplitudes, PairAmplitudes),
    d: DampingStrength,
    r: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    expect_family(outcome, BellFamily::Phi)?;
    let (dv, db, rb) = strengths(d, r);
    let m = Amps::new(pairs.0, pairs.1);
    let diag = [
        rb * rb * m.ag,
        dv * rb * rb * m.ad,
        dv * rb * rb * m.bg,
        (dv * dv * rb * rb + db * db) * m.bd,
    ];
    let coh = m.phi_coh * (outcome.sign() * db * rb);
    let r = r.value();
    finish(outcome, diag, coh, pairs.0.reversal_success(dv, r), pairs.1.reversal_success(dv, r))
}

/// Two-way model, `Psi±` outcome.
pub fn twoway_psi_closed(
    pairs: (PairAmplitudes, PairAmplitudes),
    d: DampingStrength,
    r: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    expect_family(outcome, BellFamily::Psi)?;
    let (dv, db, rb) = strengths(d, r);
    let m = Amps::new(pairs.0, pairs.1);
    let diag = [0.0, db * rb * m.ad, db * rb * m.bg, 2.0 * dv * db * rb * m.bd];
    let coh = m.psi_coh * (outcome.sign() * db * rb);
    let r = r.value();
    finish(outcome, diag, coh, pairs.0.reversal_success(dv, r), pairs.1.reversal_success(dv, r))
}

/// One-way model, `Phi±` outcome, equal strengths on `B` and `D`.
pub fn oneway_phi_closed(
    pairs: (PairAmplitudes, PairAmplitudes),
    d: DampingStrength,
    r: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    expect_family(outcome, BellFamily::Phi)?;
    let (dv, db, rb) = strengths(d, r);
    let m = Amps::new(pairs.0, pairs.1);
    let diag = [
        rb * rb * m.ag,
        0.0,
        dv * rb * rb * m.bg + dv * db * rb * m.bd,
        db * db * m.bd,
    ];
    let coh = m.phi_coh * (outcome.sign() * db * rb);
    let r = r.value();
    finish(outcome, diag, coh, pairs.0.reversal_success(dv, r), pairs.1.reversal_success(dv, r))
}

/// One-way model, `Psi±` outcome.
pub fn oneway_psi_closed(
    pairs: (PairAmplitudes, PairAmplitudes),
    d: DampingStrength,
    r: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    expect_family(outcome, BellFamily::Psi)?;
    let (dv, db, rb) = strengths(d, r);
    let m = Amps::new(pairs.0, pairs.1);
    let diag = [
        dv * rb * rb * m.ad,
        db * rb * m.ad,
        db * rb * m.bg + dv * dv * rb * rb * m.bd,
        dv * db * rb * m.bd,
    ];
    let coh = m.psi_coh * (outcome.sign() * db * rb);
    let r = r.value();
    finish(outcome, diag, coh, pairs.0.reversal_success(dv, r), pairs.1.reversal_success(dv, r))
}

/// Dispatches to the closed form matching `model` and the outcome family.
pub fn swap_closed(
    model: RepeaterModel,
    pairs: (PairAmplitudes, PairAmplitudes),
    d: DampingStrength,
    r: ReversingStrength,
    outcome: BsmOutcome,
) -> Result<SwapResult, SwapError> {
    match (model, outcome.family()) {
        (RepeaterModel::TwoWay, BellFamily::Phi) => twoway_phi_closed(pairs, d, r, outcome),
        (RepeaterModel::TwoWay, BellFamily::Psi) => twoway_psi_closed(pairs, d, r, outcome),
        (RepeaterModel::OneWay, BellFamily::Phi) => oneway_phi_closed(pairs, d, r, outcome),
        (RepeaterModel::OneWay, BellFamily::Psi) => oneway_psi_closed(pairs, d, r, outcome),
    }
}
