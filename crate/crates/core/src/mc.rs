//! Monte-Carlo trajectories of the recovery protocol.
//!
//! Each trial is one repeater round. For each side a fresh pair is prepared,
//! damped and reversed, with Kraus branches drawn from their Born
//! probabilities; a failed reversal discards the pair and the side retries.
//! Once both sides hold a recovered pair, the Bell measurement outcome is
//! sampled. Pair attempts are counted so the Bell-pair cost can be estimated
//! directly.
//!
//! Trial `i` draws from ChaCha8 stream `i` of the seed, so results do not
//! depend on how trials are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channels::{amplitude_damping, reversal, DampingStrength, ReversingStrength};
use crate::qmat::{apply_one_qubit_ket, tensor_ket, CMatrix, C64};
use crate::swap::{swap_closed, BellFamily, BsmOutcome, PairAmplitudes, RepeaterModel, SwapError};

/// Reversal success probabilities below this are rejected: the expected
/// number of attempts per round would be unbounded in practice.
pub const MIN_SUCCESS_PROB: f64 = 1e-9;
pub const SIGMA_THRESHOLD: f64 = 5.0;
pub const COST_REL_TOL: f64 = 0.05;
/// Absolute slack for rounding in the analytic probabilities.
pub const FREQ_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("reversal success probability {0:e} is too small to sample")]
    Unsamplable(f64),
    #[error(transparent)]
    Swap(#[from] SwapError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub model: RepeaterModel,
    pub d: DampingStrength,
    pub r: ReversingStrength,
    pub pairs: (PairAmplitudes, PairAmplitudes),
    pub trials: u64,
    pub seed: u64,
}

impl McConfig {
    /// Bell-state inputs.
    pub fn bell(model: RepeaterModel, d: DampingStrength, r: ReversingStrength, trials: u64, seed: u64) -> Self {
        Self {
            model,
            d,
            r,
            pairs: (PairAmplitudes::bell(), PairAmplitudes::bell()),
            trials,
            seed,
        }
    }

    fn validate(&self) -> Result<(), McError> {
        if self.trials == 0 {
            return Err(McError::NoTrials);
        }
        for p in [self.pairs.0, self.pairs.1] {
            let s = p.reversal_success(self.d.value(), self.r.value());
            if !(s >= MIN_SUCCESS_PROB) {
                return Err(McError::Unsamplable(s));
            }
        }
        Ok(())
    }
}

/// Integer tallies from a run. Adding two runs over disjoint trials gives the
/// tallies of the combined run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct McStats {
    pub trials: u64,
    /// Pairs prepared on each side.
    pub attempts: [u64; 2],
    /// Damping jumps (second Kraus branch) on each side.
    pub jumps: [u64; 2],
    /// Rounds ending in each outcome, indexed by [`BsmOutcome::index`].
    pub bsm_counts: [u64; 4],
}

impl std::ops::Add for McStats {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        let add2 = |a: [u64; 2], b: [u64; 2]| [a[0] + b[0], a[1] + b[1]];
        let mut bsm = self.bsm_counts;
        for (x, y) in bsm.iter_mut().zip(o.bsm_counts) {
            *x += y;
        }
        Self {
            trials: self.trials + o.trials,
            attempts: add2(self.attempts, o.attempts),
            jumps: add2(self.jumps, o.jumps),
            bsm_counts: bsm,
        }
    }
}

impl McStats {
    /// Empirical reversal success probability on one side.
    pub fn success_freq(&self, side: usize) -> f64 {
        self.trials as f64 / self.attempts[side] as f64
    }

    pub fn outcome_freq(&self, o: BsmOutcome) -> f64 {
        self.bsm_counts[o.index()] as f64 / self.trials as f64
    }

    pub fn family_count(&self, family: BellFamily) -> u64 {
        BsmOutcome::ALL
            .iter()
            .filter(|o| o.family() == family)
            .map(|o| self.bsm_counts[o.index()])
            .sum()
    }

    /// Pairs consumed per round ending in a Phi outcome.
    pub fn empirical_cost(&self) -> f64 {
        let hits = self.family_count(BellFamily::Phi);
        if hits == 0 {
            f64::INFINITY
        } else {
            (self.attempts[0] + self.attempts[1]) as f64 / hits as f64
        }
    }
}

/// Analytic probabilities the frequencies are compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expected {
    pub success: [f64; 2],
    pub jump: [f64; 2],
    /// Per outcome, conditional on both reversals succeeding.
    pub outcome: [f64; 4],
}

impl Expected {
    pub fn analytic(cfg: &McConfig) -> Result<Self, McError> {
        let (d, r) = (cfg.d, cfg.r);
        let sides = [cfg.pairs.0, cfg.pairs.1];
        let mut outcome = [0.0; 4];
        for o in BsmOutcome::ALL {
            outcome[o.index()] = match swap_closed(cfg.model, cfg.pairs, d, r, o) {
                Ok(res) => res.branch_prob,
                Err(SwapError::ZeroProbability(_)) => 0.0,
                Err(e) => return Err(e.into()),
            };
        }
        Ok(Self {
            success: sides.map(|p| p.reversal_success(d.value(), r.value())),
            jump: sides.map(|p| d.value() * p.b().norm_sqr()),
            outcome,
        })
    }

    /// Probability that a round ends in a Phi outcome.
    pub fn phi(&self) -> f64 {
        self.outcome[0] + self.outcome[1]
    }

    /// Expected pairs consumed per Phi round, `(1/P_1 + 1/P_2) / 2B`; this is
    /// `1/(P B)` when both sides are alike.
    pub fn cost(&self) -> f64 {
        (1.0 / self.success[0] + 1.0 / self.success[1]) / self.phi()
    }
}

/// One frequency-versus-probability comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub name: String,
    pub empirical: f64,
    pub expected: f64,
    /// Binomial standard error at the expected probability; for the cost
    /// cell this is the tolerated absolute deviation.
    pub sigma: f64,
    pub pass: bool,
}

impl CellCheck {
    fn binomial(name: String, hits: u64, n: u64, p: f64) -> Self {
        let empirical = hits as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).max(0.0).sqrt();
        let pass = (empirical - p).abs() <= SIGMA_THRESHOLD * sigma + FREQ_SLACK;
        Self {
            name,
            empirical,
            expected: p,
            sigma,
            pass,
        }
    }

    /// Deviation in units of `sigma`.
    pub fn z(&self) -> f64 {
        let dev = (self.empirical - self.expected).abs();
        if dev <= FREQ_SLACK {
            0.0
        } else {
            dev / self.sigma
        }
    }
}

/// Compares `stats` with `expected`: per-side reversal success and jump
/// rates, each outcome frequency and the Phi frequency within 5σ, and the
/// empirical cost within 5%.
pub fn compare(stats: &McStats, expected: &Expected) -> Vec<CellCheck> {
    let mut out = Vec::new();
    for side in 0..2 {
        out.push(CellCheck::binomial(
            format!("reversal_success[{side}]"),
            stats.trials,
            stats.attempts[side],
            expected.success[side],
        ));
        out.push(CellCheck::binomial(
            format!("damping_jump[{side}]"),
            stats.jumps[side],
            stats.attempts[side],
            expected.jump[side],
        ));
    }
    for o in BsmOutcome::ALL {
        out.push(CellCheck::binomial(
            format!("outcome[{}]", o.label()),
            stats.bsm_counts[o.index()],
            stats.trials,
            expected.outcome[o.index()],
        ));
    }
    out.push(CellCheck::binomial(
        "outcome[phi]".to_string(),
        stats.family_count(BellFamily::Phi),
        stats.trials,
        expected.phi(),
    ));
    let q = expected.cost();
    let q_hat = stats.empirical_cost();
    out.push(CellCheck {
        name: "cost".to_string(),
        empirical: q_hat,
        expected: q,
        sigma: COST_REL_TOL * q,
        pass: (q_hat - q).abs() <= COST_REL_TOL * q,
    });
    out
}

struct Sampler {
    damping: Vec<CMatrix>,
    reverse: CMatrix,
    kets: [Vec<C64>; 2],
    /// Noisy qubit within each pair.
    targets: [usize; 2],
}

impl Sampler {
    fn new(cfg: &McConfig) -> Self {
        let targets = match cfg.model {
            RepeaterModel::TwoWay => [1, 0],
            RepeaterModel::OneWay => [1, 1],
        };
        Self {
            damping: amplitude_damping(cfg.d).ops().to_vec(),
            reverse: reversal(cfg.r).ops()[0].clone(),
            kets: [cfg.pairs.0.ket(), cfg.pairs.1.ket()],
            targets,
        }
    }

    fn side(&self, side: usize, rng: &mut ChaCha8Rng, stats: &mut McStats) -> Vec<C64> {
        let target = self.targets[side];
        loop {
            stats.attempts[side] += 1;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut psi = None;
            for (j, k) in self.damping.iter().enumerate() {
                let cand = apply_one_qubit_ket(&self.kets[side], k, target);
                let p = norm_sqr(&cand);
                acc += p;
                if u < acc || j + 1 == self.damping.len() {
                    if j > 0 {
                        stats.jumps[side] += 1;
                    }
                    psi = Some(scale(cand, p));
                    break;
                }
            }
            let psi = psi.expect("channel has operators");
            let cand = apply_one_qubit_ket(&psi, &self.reverse, target);
            let p = norm_sqr(&cand);
            if rng.gen::<f64>() < p {
                return scale(cand, p);
            }
        }
    }

    fn trial(&self, seed: u64, index: u64, stats: &mut McStats) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let a = self.side(0, &mut rng, stats);
        let b = self.side(1, &mut rng, stats);
        let psi = tensor_ket(&a, &b);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut hit = BsmOutcome::PsiMinus;
        for o in BsmOutcome::ALL {
            acc += bsm_prob(&psi, o);
            if u < acc {
                hit = o;
                break;
            }
        }
        stats.trials += 1;
        stats.bsm_counts[hit.index()] += 1;
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn scale(v: Vec<C64>, p: f64) -> Vec<C64> {
    let s = 1.0 / p.sqrt();
    v.into_iter().map(|x| x * s).collect()
}

/// `|| <bell|_{BC} psi ||^2` for a normalized four-qubit ket.
fn bsm_prob(psi: &[C64], o: BsmOutcome) -> f64 {
    let bell = o.ket();
    let mut p = 0.0;
    for a in 0..2 {
        for d in 0..2 {
            let amp: C64 = (0..4).map(|x| bell[x].conj() * psi[a * 8 + x * 2 + d]).sum();
            p += amp.norm_sqr();
        }
    }
    p
}

const CHUNK: u64 = 4096;

/// Runs `cfg.trials` rounds in parallel.
pub fn run_trajectories(cfg: &McConfig) -> Result<McStats, McError> {
    run_trajectories_sharded(cfg, cfg.trials.div_ceil(CHUNK).max(1))
}

/// Same as [`run_trajectories`] with the trials split into `shards`
/// contiguous ranges. The result is independent of `shards`.
pub fn run_trajectories_sharded(cfg: &McConfig, shards: u64) -> Result<McStats, McError> {
    cfg.validate()?;
    let sampler = Sampler::new(cfg);
    let shards = shards.clamp(1, cfg.trials);
    let per = cfg.trials.div_ceil(shards);
    Ok((0..shards)
        .into_par_iter()
        .map(|s| {
            let mut stats = McStats::default();
            let end = ((s + 1) * per).min(cfg.trials);
            for i in s * per..end {
                sampler.trial(cfg.seed, i, &mut stats);
            }
            stats
        })
        .reduce(McStats::default, |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: RepeaterModel, d: f64, r: f64, trials: u64, seed: u64) -> McConfig {
        McConfig::bell(
            model,
            DampingStrength::new(d).unwrap(),
            ReversingStrength::new(r).unwrap(),
            trials,
            seed,
        )
    }

    #[test]
    fn rejects_degenerate_configs() {
        assert_eq!(run_trajectories(&cfg(RepeaterModel::TwoWay, 0.1, 0.1, 0, 1)), Err(McError::NoTrials));
        assert!(matches!(
            run_trajectories(&cfg(RepeaterModel::TwoWay, 1.0, 1.0, 10, 1)),
            Err(McError::Unsamplable(_))
        ));
    }

    #[test]
    fn counts_are_consistent() {
        let s = run_trajectories(&cfg(RepeaterModel::OneWay, 0.4, 0.5, 5000, 3)).unwrap();
        assert_eq!(s.trials, 5000);
        assert_eq!(s.bsm_counts.iter().sum::<u64>(), 5000);
        assert!(s.attempts.iter().all(|&a| a >= 5000));
        assert!(s.jumps[0] <= s.attempts[0] && s.jumps[1] <= s.attempts[1]);
    }

    #[test]
    fn noiseless_has_no_failures() {
        let s = run_trajectories(&cfg(RepeaterModel::TwoWay, 0.0, 0.0, 2000, 9)).unwrap();
        assert_eq!(s.attempts, [2000, 2000]);
        assert_eq!(s.jumps, [0, 0]);
    }

    #[test]
    fn shard_count_does_not_matter() {
        let c = cfg(RepeaterModel::TwoWay, 0.52, 0.774, 3001, 42);
        let a = run_trajectories_sharded(&c, 1).unwrap();
        let b = run_trajectories_sharded(&c, 7).unwrap();
        let d = run_trajectories(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, d);
    }

    #[test]
    fn seeds_differ() {
        let a = run_trajectories(&cfg(RepeaterModel::TwoWay, 0.3, 0.5, 2000, 1)).unwrap();
        let b = run_trajectories(&cfg(RepeaterModel::TwoWay, 0.3, 0.5, 2000, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn moderate_run_passes_checks() {
        let c = cfg(RepeaterModel::OneWay, 0.62, 0.9, 50_000, 11);
        let s = run_trajectories(&c).unwrap();
        for cell in compare(&s, &Expected::analytic(&c).unwrap()) {
            assert!(cell.pass, "{cell:?}");
        }
    }

    #[test]
    fn biased_expectation_fails() {
        let c = cfg(RepeaterModel::TwoWay, 0.3, 0.5, 50_000, 5);
        let s = run_trajectories(&c).unwrap();
        let mut e = Expected::analytic(&c).unwrap();
        e.success[0] += 0.05;
        assert!(compare(&s, &e).iter().any(|cell| !cell.pass));
    }
}
