//! Optimal reversing strengths and Bell-pair cost accounting for Bell-state
//! inputs.
//!
//! All quantities here are closed forms in `D` and `R`. The `swap` and
//! `measures` modules give an independent route to the same numbers, which
//! the tests use as the oracle.

use thiserror::Error;

use crate::channels::{ChannelError, DampingStrength, ReversingStrength};
use crate::swap::{BellFamily, RepeaterModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("curve evaluated to {value} at R = {r}")]
    NonFinite { r: f64, value: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// A single damped pair, or two pairs joined at a repeater node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    SinglePair,
    Repeater(RepeaterModel),
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Self::SinglePair => "single",
            Self::Repeater(m) => m.label(),
        }
    }
}

/// Which Bell-measurement outcomes are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomePolicy {
    PhiOnly,
    PsiOnly,
    KeepAll,
}

impl OutcomePolicy {
    pub fn label(self) -> &'static str {
        match self {
            Self::PhiOnly => "phi",
            Self::PsiOnly => "psi",
            Self::KeepAll => "all",
        }
    }
}

/// One point of a recovery strategy.
///
/// `branch_prob` is the probability of one member of the kept `±` pair
/// (1 for a single pair, 1/2 when every outcome is kept), so that
/// `bell_pair_cost = 1/(P·B)` in every case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub scenario: Scenario,
    pub policy: OutcomePolicy,
    pub d: f64,
    pub r_used: f64,
    pub concurrence: f64,
    pub reversal_success_prob: f64,
    pub branch_prob: f64,
    /// `f64::INFINITY` when `P·B` vanishes.
    pub bell_pair_cost: f64,
}

/// Closed-form optimum of a Phi-postselected strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPoint {
    pub r: f64,
    pub c_max: f64,
    pub success_prob: f64,
    pub branch_prob: f64,
    pub cost: f64,
}

/// Concurrence and probabilities of one heralded branch with Bell inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchValues {
    pub concurrence: f64,
    /// Pre-clamp value; negative where the branch is separable.
    pub margin: f64,
    /// Single-pair reversal success probability `P`.
    pub success_prob: f64,
    /// Probability of one member of the `±` pair, given both reversals succeeded.
    pub branch_prob: f64,
}

/// `1/(P·B)`, or infinity when the product vanishes.
pub fn bell_pair_cost(p: f64, b: f64) -> f64 {
    let x = p * b;
    if x > 0.0 && x.is_finite() {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

/// `P = (1-R)|a|^2 + D(1-R)|b|^2 + (1-D)|b|^2` with `|a|^2 = |b|^2 = 1/2`.
pub fn reversal_success_bell(d: f64, r: f64) -> f64 {
    0.5 * ((1.0 - r) * (1.0 + d) + (1.0 - d))
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn branch_raw(scenario: Scenario, family: BellFamily, d: f64, r: f64) -> BranchValues {
    let (db, rb) = (1.0 - d, 1.0 - r);
    let p = reversal_success_bell(d, r);
    let (margin, trace) = match (scenario, family) {
        (Scenario::SinglePair, _) => {
            let margin = ratio((rb * db).sqrt(), p);
            return BranchValues {
                concurrence: margin.max(0.0),
                margin,
                success_prob: p,
                branch_prob: 1.0,
            };
        }
        (Scenario::Repeater(RepeaterModel::TwoWay), BellFamily::Phi) => {
            let t = rb * rb * (1.0 + d).powi(2) + db * db;
            (ratio(2.0 * rb * (db - d * rb), t), t)
        }
        (Scenario::Repeater(RepeaterModel::TwoWay), BellFamily::Psi) => {
            let t = 2.0 * db * rb * (1.0 + d);
            (if t > 0.0 { 1.0 / (1.0 + d) } else { 0.0 }, t)
        }
        (Scenario::Repeater(RepeaterModel::OneWay), BellFamily::Phi) => {
            let t = rb * rb * (1.0 + d) + d * db * rb + db * db;
            (ratio(2.0 * db * rb, t), t)
        }
        (Scenario::Repeater(RepeaterModel::OneWay), BellFamily::Psi) => {
            let t = rb * (d * (1.0 + d) * rb + db * (2.0 + d));
            let m = ratio(2.0 * (db - d * (db * rb).sqrt()), d * (1.0 + d) * rb + db * (2.0 + d));
            (if t > 0.0 { m } else { 0.0 }, t)
        }
    };
    BranchValues {
        concurrence: margin.max(0.0),
        margin,
        success_prob: p,
        branch_prob: ratio(trace, 8.0 * p * p),
    }
}

/// Closed-form concurrence and probabilities of one branch family for Bell
/// inputs damped with `D` and reversed with `R`. For a single pair the family
/// is ignored and `branch_prob` is 1.
pub fn bell_branch(
    scenario: Scenario,
    family: BellFamily,
    d: DampingStrength,
    r: ReversingStrength,
) -> BranchValues {
    branch_raw(scenario, family, d.value(), r.value())
}

/// `R -> C(D, R)` for one branch family, with `R` clamped to `[0, 1]`.
pub fn concurrence_curve(
    scenario: Scenario,
    family: BellFamily,
    d: DampingStrength,
) -> impl Fn(f64) -> f64 {
    let d = d.value();
    move |r| branch_raw(scenario, family, d, r.clamp(0.0, 1.0)).concurrence
}

fn report_raw(scenario: Scenario, policy: OutcomePolicy, d: f64, r: f64) -> RecoveryReport {
    let (concurrence, p, b) = match (scenario, policy) {
        (Scenario::SinglePair, _) => {
            let v = branch_raw(scenario, BellFamily::Phi, d, r);
            (v.concurrence, v.success_prob, 1.0)
        }
        (_, OutcomePolicy::PhiOnly) | (_, OutcomePolicy::PsiOnly) => {
            let family = if policy == OutcomePolicy::PhiOnly {
                BellFamily::Phi
            } else {
                BellFamily::Psi
            };
            let v = branch_raw(scenario, family, d, r);
            (v.concurrence, v.success_prob, v.branch_prob)
        }
        (_, OutcomePolicy::KeepAll) => {
            let phi = branch_raw(scenario, BellFamily::Phi, d, r);
            let psi = branch_raw(scenario, BellFamily::Psi, d, r);
            let c = 2.0 * phi.branch_prob * phi.concurrence + 2.0 * psi.branch_prob * psi.concurrence;
            (c, phi.success_prob, 0.5)
        }
    };
    RecoveryReport {
        scenario,
        policy,
        d,
        r_used: r,
        concurrence,
        reversal_success_prob: p,
        branch_prob: b,
        bell_pair_cost: bell_pair_cost(p, b),
    }
}

/// Evaluates a strategy at fixed `(D, R)`.
pub fn evaluate(
    scenario: Scenario,
    policy: OutcomePolicy,
    d: DampingStrength,
    r: ReversingStrength,
) -> RecoveryReport {
    report_raw(scenario, policy, d.value(), r.value())
}

/// Concurrence of the strategy with no reversal applied.
pub fn unrecovered_concurrence(scenario: Scenario, policy: OutcomePolicy, d: DampingStrength) -> f64 {
    report_raw(scenario, policy, d.value(), 0.0).concurrence
}

/// Single pair: `R_opt = 2D/(1+D)`, `C_max = 1/sqrt(1+D)`, `P_opt = 1-D`.
pub fn optimal_r_single(d: DampingStrength) -> OptimalPoint {
    let d = d.value();
    let p = 1.0 - d;
    OptimalPoint {
        r: 2.0 * d / (1.0 + d),
        c_max: 1.0 / (1.0 + d).sqrt(),
        success_prob: p,
        branch_prob: 1.0,
        cost: bell_pair_cost(p, 1.0),
    }
}

/// Reversing strength maximizing the single-pair fidelity, `D(3+D)/(1+D)^2`.
pub fn fidelity_optimal_r(d: DampingStrength) -> f64 {
    let d = d.value();
    d * (3.0 + d) / (1.0 + d).powi(2)
}

/// Two-way model, Phi outcomes kept.
pub fn optimal_r_twoway_phi(d: DampingStrength) -> OptimalPoint {
    let d = d.value();
    let s = (1.0 + 2.0 * d + 2.0 * d * d).sqrt();
    let rbar = (1.0 - d) / (1.0 + d).powi(2) * (s - d);
    let p = (1.0 - d) / (2.0 * (1.0 + d)) * (1.0 + s);
    let b = ratio((1.0 + d).powi(2) * rbar * rbar + (1.0 - d).powi(2), 8.0 * p * p);
    OptimalPoint {
        r: 1.0 - rbar,
        c_max: (s - d) / (1.0 + d).powi(2),
        success_prob: p,
        branch_prob: b,
        cost: bell_pair_cost(p, b),
    }
}

/// One-way model, Phi outcomes kept.
pub fn optimal_r_oneway_phi(d: DampingStrength) -> OptimalPoint {
    let d = d.value();
    let db = 1.0 - d;
    let rbar = db / (1.0 + d).sqrt();
    let p = 0.5 * db * (1.0 + (1.0 + d).sqrt());
    let b = ratio((1.0 + d) * rbar * rbar + d * db * rbar + db * db, 8.0 * p * p);
    OptimalPoint {
        r: 1.0 - rbar,
        c_max: 2.0 / (d + 2.0 * (1.0 + d).sqrt()),
        success_prob: p,
        branch_prob: b,
        cost: bell_pair_cost(p, b),
    }
}

/// One-way model, Psi outcomes kept, at a given `R`. The concurrence grows
/// with `R`; at `R = 1` it reports the limit `2/(2+D)` with infinite cost.
pub fn oneway_psi_report(d: DampingStrength, r: ReversingStrength) -> RecoveryReport {
    let scenario = Scenario::Repeater(RepeaterModel::OneWay);
    let mut rep = evaluate(scenario, OutcomePolicy::PsiOnly, d, r);
    if r.value() == 1.0 {
        rep.concurrence = 2.0 / (2.0 + d.value());
        rep.branch_prob = 0.0;
        rep.bell_pair_cost = f64::INFINITY;
    }
    rep
}

/// Keeps every outcome at `r` (the Phi-optimal strength when `None`);
/// `Q_ave = 2/P`.
pub fn average_yield(model: RepeaterModel, d: DampingStrength, r: Option<ReversingStrength>) -> RecoveryReport {
    let r = match r {
        Some(r) => r.value(),
        None => phi_optimal(model, d).r,
    };
    report_raw(Scenario::Repeater(model), OutcomePolicy::KeepAll, d.value(), r)
}

fn phi_optimal(model: RepeaterModel, d: DampingStrength) -> OptimalPoint {
    match model {
        RepeaterModel::TwoWay => optimal_r_twoway_phi(d),
        RepeaterModel::OneWay => optimal_r_oneway_phi(d),
    }
}

/// The recommended strategy for a scenario and policy.
///
/// Phi and keep-all policies use the Phi-optimal `R`. Two-way Psi is
/// independent of `R`, so no reversal is applied. One-way Psi improves
/// monotonically up to `R = 1`, reported as its divergent-cost limit.
pub fn optimal_report(scenario: Scenario, policy: OutcomePolicy, d: DampingStrength) -> RecoveryReport {
    let dv = d.value();
    match (scenario, policy) {
        (Scenario::SinglePair, _) => {
            let o = optimal_r_single(d);
            from_optimal(scenario, policy, dv, o)
        }
        (Scenario::Repeater(m), OutcomePolicy::PhiOnly) => from_optimal(scenario, policy, dv, phi_optimal(m, d)),
        (Scenario::Repeater(m), OutcomePolicy::KeepAll) => average_yield(m, d, None),
        (Scenario::Repeater(RepeaterModel::TwoWay), OutcomePolicy::PsiOnly) => report_raw(scenario, policy, dv, 0.0),
        (Scenario::Repeater(RepeaterModel::OneWay), OutcomePolicy::PsiOnly) => {
            oneway_psi_report(d, ReversingStrength::new(1.0).expect("1 is in range"))
        }
    }
}

fn from_optimal(scenario: Scenario, policy: OutcomePolicy, d: f64, o: OptimalPoint) -> RecoveryReport {
    RecoveryReport {
        scenario,
        policy,
        d,
        r_used: o.r,
        concurrence: o.c_max,
        reversal_success_prob: o.success_prob,
        branch_prob: o.branch_prob,
        bell_pair_cost: o.cost,
    }
}

const SCAN_POINTS: usize = 64;
const GOLDEN_TOL: f64 = 1e-9;

/// Maximizes `curve` over `[0, 1]`: a coarse scan brackets the best point,
/// then golden-section search narrows it to width `1e-9`.
///
/// Returns `(R*, C*)`. Flat regions such as clamped zeros are harmless since
/// the bracket is taken around the first maximal scan point.
pub fn maximize_concurrence_numeric<F: Fn(f64) -> f64>(curve: F) -> Result<(f64, f64), OptimizeError> {
    let eval = |r: f64| {
        let v = curve(r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OptimizeError::NonFinite { r, value: v })
        }
    };
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..=SCAN_POINTS {
        let v = eval(k as f64 / SCAN_POINTS as f64)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    let step = 1.0 / SCAN_POINTS as f64;
    let mut lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best.0 as f64 + 1.0) * step).min(1.0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut out = (mid, eval(mid)?);
    for (x, f) in [(best.0 as f64 * step, best.1), (x1, f1), (x2, f2)] {
        if f > out.1 {
            out = (x, f);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(x: f64) -> DampingStrength {
        DampingStrength::new(x).unwrap()
    }

    fn rs(x: f64) -> ReversingStrength {
        ReversingStrength::new(x).unwrap()
    }

    const TW: Scenario = Scenario::Repeater(RepeaterModel::TwoWay);
    const OW: Scenario = Scenario::Repeater(RepeaterModel::OneWay);

    #[test]
    fn single_pair_examples() {
        let o = optimal_r_single(ds(0.0));
        assert_eq!((o.r, o.c_max, o.success_prob), (0.0, 1.0, 1.0));
        let o = optimal_r_single(ds(0.5));
        assert!((o.r - 2.0 / 3.0).abs() < 1e-15);
        assert!((o.c_max - 0.816_496_580_927_726).abs() < 1e-12);
        assert!((o.success_prob - 0.5).abs() < 1e-15);
        assert!((o.cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity_optimal_r(ds(0.0)), 0.0);
        assert!((fidelity_optimal_r(ds(1.0)) - 1.0).abs() < 1e-15);
        assert!((fidelity_optimal_r(ds(0.5)) - 0.5 * 3.5 / 2.25).abs() < 1e-15);
    }

    #[test]
    fn twoway_examples() {
        let o = optimal_r_twoway_phi(ds(0.0));
        assert!(o.r.abs() < 1e-15 && (o.c_max - 1.0).abs() < 1e-15);
        assert!((o.success_prob - 1.0).abs() < 1e-15 && (o.branch_prob - 0.25).abs() < 1e-15);
        assert!((o.cost - 4.0).abs() < 1e-12);
        let o = optimal_r_twoway_phi(ds(0.52));
        assert!((o.r - 0.774_275_59).abs() < 1e-7);
        assert!((o.c_max - 0.470_259_20).abs() < 1e-7);
        assert!((o.success_prob - 0.411_550_56).abs() < 1e-7);
        assert!((o.branch_prob - 0.256_915_66).abs() < 1e-7);
        assert!((o.cost - 9.457_715_27).abs() < 1e-6);
        let o = optimal_r_twoway_phi(ds(1.0));
        assert!(o.cost.is_infinite());
    }

    #[test]
    fn oneway_examples() {
        let o = optimal_r_oneway_phi(ds(0.0));
        assert!(o.r.abs() < 1e-15 && (o.cost - 4.0).abs() < 1e-12);
        let o = optimal_r_oneway_phi(ds(0.5));
        assert!((o.c_max - 0.678_083_388_794_149).abs() < 1e-12);
        assert!((o.r - 0.591_751_71).abs() < 1e-7);
        assert!((o.cost - 7.390_416_94).abs() < 1e-6);
        assert!(optimal_r_oneway_phi(ds(1.0)).cost.is_infinite());
    }

    #[test]
    fn oneway_psi_examples() {
        let rep = oneway_psi_report(ds(0.62), rs(0.9));
        assert!((rep.concurrence - 0.472_865_497_836_518_43).abs() < 1e-12);
        assert!((rep.bell_pair_cost - 19.780_299_989_051_49).abs() < 1e-9);
        let lim = oneway_psi_report(ds(0.62), rs(1.0));
        assert!((lim.concurrence - 2.0 / 2.62).abs() < 1e-15);
        assert!(lim.bell_pair_cost.is_infinite());
        for r in [0.0, 0.3, 0.99] {
            assert!((oneway_psi_report(ds(0.0), rs(r)).concurrence - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_matches_closed_form_values_at_r_opt() {
        for k in 0..20 {
            let d = k as f64 * 0.05;
            let o = optimal_r_twoway_phi(ds(d));
            let v = evaluate(TW, OutcomePolicy::PhiOnly, ds(d), rs(o.r));
            assert!((v.concurrence - o.c_max).abs() < 1e-12);
            assert!((v.reversal_success_prob - o.success_prob).abs() < 1e-12);
            assert!((v.branch_prob - o.branch_prob).abs() < 1e-12);
            let o = optimal_r_oneway_phi(ds(d));
            let v = evaluate(OW, OutcomePolicy::PhiOnly, ds(d), rs(o.r));
            assert!((v.concurrence - o.c_max).abs() < 1e-12);
            assert!((v.branch_prob - o.branch_prob).abs() < 1e-12);
        }
    }

    #[test]
    fn average_yield_noiseless() {
        let rep = average_yield(RepeaterModel::TwoWay, ds(0.0), None);
        assert!((rep.concurrence - 1.0).abs() < 1e-15);
        assert!((rep.bell_pair_cost - 2.0).abs() < 1e-15);
    }

    #[test]
    fn twoway_average_matches_weighted_form() {
        for k in 0..20 {
            let d = k as f64 * 0.05;
            let o = optimal_r_twoway_phi(ds(d));
            let rep = average_yield(RepeaterModel::TwoWay, ds(d), None);
            let want = 2.0 * o.branch_prob * o.c_max + (1.0 - 2.0 * o.branch_prob) / (1.0 + d);
            assert!((rep.concurrence - want).abs() < 1e-12);
            assert!((rep.bell_pair_cost - 2.0 / o.success_prob).abs() < 1e-9);
        }
    }

    #[test]
    fn maximizer_examples() {
        let (r, _) = maximize_concurrence_numeric(concurrence_curve(Scenario::SinglePair, BellFamily::Phi, ds(0.5))).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-6);
        let (r, _) = maximize_concurrence_numeric(concurrence_curve(TW, BellFamily::Phi, ds(0.52))).unwrap();
        assert!((r - optimal_r_twoway_phi(ds(0.52)).r).abs() < 1e-6);
        let (_, c) = maximize_concurrence_numeric(|_| 0.37).unwrap();
        assert_eq!(c, 0.37);
        assert!(matches!(
            maximize_concurrence_numeric(|r| if r > 0.5 { f64::NAN } else { r }),
            Err(OptimizeError::NonFinite { .. })
        ));
    }

    #[test]
    fn branch_probabilities_sum_to_half() {
        for model in [RepeaterModel::TwoWay, RepeaterModel::OneWay] {
            for &(d, r) in &[(0.0, 0.0), (0.3, 0.5), (0.9, 0.95)] {
                let phi = bell_branch(Scenario::Repeater(model), BellFamily::Phi, ds(d), rs(r));
                let psi = bell_branch(Scenario::Repeater(model), BellFamily::Psi, ds(d), rs(r));
                assert!((phi.branch_prob + psi.branch_prob - 0.5).abs() < 1e-12);
            }
        }
    }
}
