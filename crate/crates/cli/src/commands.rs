//! Subcommand bodies. Each returns the text to emit so runs can be compared
//! byte for byte.

use rayon::prelude::*;

use entrecover::channels::{amplitude_damping, apply_channel};
use entrecover::mc::{compare, run_trajectories, Expected, McConfig};
use entrecover::measures::concurrence;
use entrecover::nla::{scissors_on_qubit, scissors_truncate, ScissorsConfig};
use entrecover::optimize::{
    evaluate, oneway_psi_report, optimal_r_single, optimal_report, unrecovered_concurrence, OutcomePolicy,
    RecoveryReport, Scenario,
};
use entrecover::{C64, DampingStrength, DensityMatrix, PairAmplitudes, RepeaterModel, ReversingStrength};

use crate::error::CliError;
use crate::format::{num, row};
use crate::settings::{reversing_grid, DRange, Reversing};

pub const SWEEP_HEADER: &str = "D,R,concurrence_unrecovered,concurrence_recovered,P,B,Q";
pub const MIN_VALIDATE_TRIALS: u64 = 10_000;

fn damping(d: f64) -> Result<DampingStrength, CliError> {
    DampingStrength::new(d).map_err(|e| CliError::usage(e.to_string()))
}

fn reversing(r: f64) -> Result<ReversingStrength, CliError> {
    ReversingStrength::new(r).map_err(|e| CliError::usage(e.to_string()))
}

fn report_at(scenario: Scenario, policy: OutcomePolicy, d: DampingStrength, r: ReversingStrength) -> RecoveryReport {
    match (scenario, policy) {
        (Scenario::Repeater(RepeaterModel::OneWay), OutcomePolicy::PsiOnly) => oneway_psi_report(d, r),
        _ => evaluate(scenario, policy, d, r),
    }
}

fn report_for(
    scenario: Scenario,
    policy: OutcomePolicy,
    d: DampingStrength,
    mode: Reversing,
) -> Result<Vec<RecoveryReport>, CliError> {
    Ok(match mode {
        Reversing::Optimal => vec![optimal_report(scenario, policy, d)],
        Reversing::Fixed(r) => vec![report_at(scenario, policy, d, reversing(r)?)],
        Reversing::Grid => reversing_grid()
            .into_iter()
            .map(|r| Ok(report_at(scenario, policy, d, reversing(r)?)))
            .collect::<Result<_, CliError>>()?,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    pub scenario: Scenario,
    pub policy: OutcomePolicy,
    pub range: DRange,
    pub reversing: Reversing,
}

/// CSV over the damping range; one row per `(D, R)`, ascending in `D`.
pub fn sweep(p: &SweepParams) -> Result<String, CliError> {
    let blocks: Vec<String> = p
        .range
        .points()
        .par_iter()
        .map(|&d| {
            let ds = damping(d)?;
            let unrecovered = unrecovered_concurrence(p.scenario, p.policy, ds);
            let lines: Vec<String> = report_for(p.scenario, p.policy, ds, p.reversing)?
                .iter()
                .map(|rep| {
                    row(&[
                        d,
                        rep.r_used,
                        unrecovered,
                        rep.concurrence,
                        rep.reversal_success_prob,
                        rep.branch_prob,
                        rep.bell_pair_cost,
                    ])
                })
                .collect();
            Ok(lines.join("\n"))
        })
        .collect::<Result<_, CliError>>()?;
    let mut out = String::from(SWEEP_HEADER);
    for b in blocks {
        out.push('\n');
        out.push_str(&b);
    }
    out.push('\n');
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeParams {
    pub scenario: Scenario,
    pub policy: OutcomePolicy,
    pub d: f64,
    pub reversing: Reversing,
}

/// Returns the human-readable report and the one-row CSV.
pub fn optimize(p: &OptimizeParams) -> Result<(String, String), CliError> {
    if p.reversing == Reversing::Grid {
        return Err(CliError::usage("optimize takes --reversing optimal or a fixed value"));
    }
    let ds = damping(p.d)?;
    let rep = report_for(p.scenario, p.policy, ds, p.reversing)?[0];
    let unrecovered = unrecovered_concurrence(p.scenario, p.policy, ds);
    let text = format!(
        "model   {}\npolicy  {}\nD       {}\nR       {}\nC       {}\nC_unrec {}\nP       {}\nB       {}\nQ       {}\n",
        p.scenario.label(),
        p.policy.label(),
        num(rep.d),
        num(rep.r_used),
        num(rep.concurrence),
        num(unrecovered),
        num(rep.reversal_success_prob),
        num(rep.branch_prob),
        num(rep.bell_pair_cost),
    );
    let csv = format!(
        "{SWEEP_HEADER}\n{}\n",
        row(&[
            rep.d,
            rep.r_used,
            unrecovered,
            rep.concurrence,
            rep.reversal_success_prob,
            rep.branch_prob,
            rep.bell_pair_cost,
        ])
    );
    Ok((text, csv))
}

/// `(model, D, R)` points checked by `validate`.
pub const VALIDATION_GRID: [(RepeaterModel, f64, f64); 7] = [
    (RepeaterModel::TwoWay, 0.0, 0.0),
    (RepeaterModel::TwoWay, 0.3, 0.5),
    (RepeaterModel::TwoWay, 0.52, 0.774),
    (RepeaterModel::TwoWay, 0.8, 0.9),
    (RepeaterModel::OneWay, 0.3, 0.4),
    (RepeaterModel::OneWay, 0.62, 0.9),
    (RepeaterModel::OneWay, 0.8, 0.7),
];

#[derive(Debug, Clone, Copy)]
pub struct ValidateParams {
    pub trials: u64,
    pub seed: u64,
    /// Added to the analytic reversal success probability; a negative control.
    pub bias: f64,
}

/// Runs the sampler on [`VALIDATION_GRID`]; returns the CSV report and
/// whether every cell passed.
pub fn validate(p: &ValidateParams) -> Result<(String, bool), CliError> {
    if p.trials < MIN_VALIDATE_TRIALS {
        return Err(CliError::usage(format!(
            "validate needs at least {MIN_VALIDATE_TRIALS} trials, got {}",
            p.trials
        )));
    }
    let mut out = String::from("model,D,R,cell,empirical,expected,sigma,z,pass\n");
    let (mut total, mut failed) = (0usize, 0usize);
    for (k, &(model, d, r)) in VALIDATION_GRID.iter().enumerate() {
        let seed = p.seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let cfg = McConfig::bell(model, damping(d)?, reversing(r)?, p.trials, seed);
        let stats = run_trajectories(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;
        let mut expected = Expected::analytic(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;
        for s in expected.success.iter_mut() {
            *s += p.bias;
        }
        for cell in compare(&stats, &expected) {
            total += 1;
            if !cell.pass {
                failed += 1;
            }
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                model.label(),
                num(d),
                num(r),
                cell.name,
                num(cell.empirical),
                num(cell.expected),
                num(cell.sigma),
                num(cell.z()),
                if cell.pass { "pass" } else { "FAIL" }
            ));
        }
    }
    let verdict = if failed == 0 { "PASS" } else { "FAIL" };
    out.push_str(&format!("# {verdict}: {}/{total} cells within tolerance, trials={}, seed={}\n", total - failed, p.trials, p.seed));
    Ok((out, failed == 0))
}

pub const NLA_HEADER: &str = "D,R,eta,gain,ratio,herald_prob,concurrence_recovered";

/// Single-pair recovery realized by quantum scissors at the optimal
/// reversing strength.
pub fn nla(range: DRange) -> Result<String, CliError> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bell = DensityMatrix::from_pure(&PairAmplitudes::bell().ket()).map_err(|e| CliError::usage(e.to_string()))?;
    let mut out = format!("{NLA_HEADER}\n");
    for d in range.points() {
        let ds = damping(d)?;
        let r = optimal_r_single(ds).r;
        let cfg = ScissorsConfig::for_reversal(reversing(r)?)
            .map_err(|e| CliError::usage(format!("D = {d}: {e}")))?;
        let wrap = |e: &dyn std::fmt::Display| CliError::usage(format!("D = {d}: {e}"));
        let (o0, o1, _) = scissors_truncate(h, h, cfg.eta()).map_err(|e| wrap(&e))?;
        let damped = apply_channel(&bell, &amplitude_damping(ds), 1).map_err(|e| wrap(&e))?;
        let (state, herald) = scissors_on_qubit(&damped, cfg.eta(), 1).map_err(|e| wrap(&e))?;
        let c = concurrence(&state).map_err(|e| wrap(&e))?.value();
        out.push_str(&row(&[d, r, cfg.eta(), cfg.gain(), (o1 / o0).re, herald, c]));
        out.push('\n');
    }
    Ok(out)
}
