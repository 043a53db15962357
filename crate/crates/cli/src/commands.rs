use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eee_core::chain_analysis::{chain_diagnostics, consistent_model, ChainDiagnostics};
use eee_core::coupling_bounds::{contraction_factor, coupling_value, theorem_bounds, BoundsReport};
use eee_core::empirical::{compare_models, empirical_model, simulate as simulate_chain, ModelComparison, RNG_ALGORITHM};
use eee_core::export::{counts_csv, policy_csv, trace_csv};
use eee_core::learning::{
    greedy_policy, margin, q_fixed_point, q_value_iteration, verify_approx_eee, verify_eee, Outcome,
    TerminationReport, FIXED_POINT_TOL,
};
use eee_core::{validate_spec, GameSpec, PolicyRule, QTable, RunOptions, Strategy, TableFile};
use rayon::prelude::*;
use serde::Serialize;

use crate::files::{load_game, load_model, load_spec, load_strategy, output_dir, write_atomic, write_json};
use crate::{DynamicsArgs, PolicyKind};

const FIXED_POINT_CAP: usize = 1_000_000;

/// Expands `--tau` to one temperature per agent; empty means the game's own.
fn temperatures(spec: &GameSpec, tau: &[f64]) -> Result<Vec<f64>> {
    let n = spec.n_agents();
    match tau.len() {
        0 => Ok(spec.agents.iter().map(|a| a.temperature).collect()),
        1 => Ok(vec![tau[0]; n]),
        k if k == n => Ok(tau.to_vec()),
        k => Err(eee_core::EeeError::Structural(format!("{k} temperatures for {n} agents")).into()),
    }
}

fn per_agent(spec: &GameSpec, values: &[f64], what: &str) -> Result<Vec<f64>> {
    let n = spec.n_agents();
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        k if k == n => Ok(values.to_vec()),
        k => Err(eee_core::EeeError::Structural(format!("{k} values of {what} for {n} agents")).into()),
    }
}

fn policy_rule(spec: &GameSpec, dynamics: &DynamicsArgs) -> Result<PolicyRule> {
    Ok(match dynamics.policy {
        PolicyKind::Greedy => PolicyRule::Greedy,
        PolicyKind::Softmax => PolicyRule::softmax(temperatures(spec, &dynamics.tau)?)?,
    })
}

fn run_options(dynamics: &DynamicsArgs) -> RunOptions {
    RunOptions {
        tol: dynamics.tol,
        max_iter: dynamics.max_iter,
        ..RunOptions::default()
    }
}

fn outcome_code(report: &TerminationReport) -> u8 {
    match report.outcome {
        Outcome::Converged { .. } => 0,
        Outcome::Cycle { .. } => 3,
        Outcome::MaxIterReached => 4,
    }
}

fn outcome_label(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Converged { .. } => "converged",
        Outcome::Cycle { .. } => "cycle",
        Outcome::MaxIterReached => "max_iter_reached",
    }
}

/// Margins of the greedy policy of `q`, with `+∞` (single action) as `null`.
fn greedy_margins(q: &QTable) -> Result<Vec<Option<f64>>> {
    Ok(margin(q, &greedy_policy(q))?
        .into_iter()
        .map(|m| m.is_finite().then_some(m))
        .collect())
}

pub fn validate(spec_path: &Path) -> Result<u8> {
    let spec = load_spec(spec_path)?;
    let report = validate_spec(&spec);
    if report.is_ok() {
        println!(
            "ok: {} agents, {} environment states, {} joint actions",
            spec.n_agents(),
            spec.n_env,
            spec.joint_action_count()
        );
        Ok(0)
    } else {
        for v in &report.violations {
            println!("{v}");
        }
        eprintln!("{} violation(s) in {}", report.violations.len(), spec_path.display());
        Ok(1)
    }
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    spec: &'a Path,
    alpha: Option<f64>,
    policy: &'a PolicyRule,
    seed: Option<u64>,
    options: &'a RunOptions,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: RunConfig<'a>,
    termination: &'a TerminationReport,
    iterations: usize,
    final_q_norm: f64,
    /// Decision margins of the greedy policy of the final Q.
    margins: Vec<Option<f64>>,
    final_sigma: TableFile,
    final_mu: TableFile,
}

pub fn run(spec_path: &Path, alpha: Option<f64>, dynamics: &DynamicsArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let spec = load_game(spec_path, alpha)?;
    let rule = policy_rule(&spec, dynamics)?;
    let opts = run_options(dynamics);
    let (trace, report) = q_value_iteration(&spec, &rule, &QTable::zeros(&spec), &opts)?;
    let last = trace.last().context("empty trace")?;

    let dir = output_dir(out, "run");
    write_atomic(&dir.join("trace.csv"), trace_csv(&trace)?.as_bytes())?;
    write_atomic(&dir.join("policy.csv"), policy_csv(&trace)?.as_bytes())?;
    let summary = RunSummary {
        config: RunConfig {
            command: "run",
            spec: spec_path,
            alpha,
            policy: &rule,
            seed: Some(seed),
            options: &opts,
        },
        termination: &report,
        iterations: report.iterations,
        final_q_norm: last.q.sup_norm(),
        margins: greedy_margins(&last.q)?,
        final_sigma: TableFile {
            agents: last.sigma.to_rows(),
        },
        final_mu: TableFile {
            agents: last.mu.to_rows(),
        },
    };
    write_json(&dir.join("summary.json"), &summary)?;

    match report.outcome {
        Outcome::Converged { at_iter } => println!("converged after {at_iter} iterations (residual {:.3e})", report.residual),
        Outcome::Cycle { first_seen, period } => println!(
            "cycle of period {period} from iteration {first_seen}; agents {:?}",
            report.cycling_agents.iter().map(|i| i + 1).collect::<Vec<_>>()
        ),
        Outcome::MaxIterReached => println!(
            "no convergence in {} iterations (residual {:.3e})",
            report.iterations, report.residual
        ),
    }
    println!("output: {}", dir.display());
    Ok(outcome_code(&report))
}

#[derive(Serialize, Default)]
struct SweepRow {
    alpha: f64,
    outcome: String,
    iterations: Option<usize>,
    period: Option<usize>,
    final_q_norm: Option<f64>,
    lambda: Option<f64>,
    rho: Option<f64>,
    error: String,
}

fn sweep_point(spec: &GameSpec, alpha: f64, rule: &PolicyRule, opts: &RunOptions, tau: &[f64]) -> SweepRow {
    let mut row = SweepRow {
        alpha,
        ..SweepRow::default()
    };
    let result = (|| -> Result<()> {
        let family = eee_core::ConvexFamily::new(spec.clone())?;
        let game = family.interpolate(alpha)?;
        let coupling = coupling_value(&game, false)?;
        row.lambda = Some(coupling.lambda);
        let (trace, report) = q_value_iteration(&game, rule, &QTable::zeros(&game), opts)?;
        row.outcome = outcome_label(&report.outcome).to_string();
        row.iterations = Some(report.iterations);
        if let Outcome::Cycle { period, .. } = report.outcome {
            row.period = Some(period);
        }
        let last = trace.last().context("empty trace")?;
        row.final_q_norm = Some(last.q.sup_norm());
        let diag = chain_diagnostics(&game, &last.sigma)?;
        row.rho = Some(contraction_factor(&game, &diag, &coupling, tau)?);
        Ok(())
    })();
    if let Err(e) = result {
        if row.outcome.is_empty() {
            row.outcome = "error".into();
        }
        row.error = format!("{e:#}");
    }
    row
}

pub fn sweep(spec_path: &Path, alphas: &[f64], dynamics: &DynamicsArgs, out: Option<&Path>) -> Result<u8> {
    let spec = load_spec(spec_path)?;
    eee_core::ConvexFamily::new(spec.clone()).context("--alphas needs a game with uncoupled reference kernels")?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(eee_core::EeeError::Domain(format!("alpha {a} outside [0,1]")).into());
    }
    let rule = policy_rule(&spec, dynamics)?;
    let tau = temperatures(&spec, &dynamics.tau)?;
    let opts = run_options(dynamics);

    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<SweepRow> = sorted
        .par_iter()
        .map(|&alpha| {
            log::debug!("sweep point alpha={alpha}");
            sweep_point(&spec, alpha, &rule, &opts, &tau)
        })
        .collect();

    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in &rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    let dir = output_dir(out, "sweep");
    write_atomic(&dir.join("sweep.csv"), &bytes)?;
    write_json(
        &dir.join("config.json"),
        &RunConfig {
            command: "sweep",
            spec: spec_path,
            alpha: None,
            policy: &rule,
            seed: None,
            options: &opts,
        },
    )?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(if rows.iter().any(|r| !r.error.is_empty()) { 1 } else { 0 })
}

pub fn verify(
    spec_path: &Path,
    sigma_path: &Path,
    mu_path: &Path,
    alpha: Option<f64>,
    approx: bool,
    tau: &[f64],
    tol: f64,
) -> Result<u8> {
    if !(tol > 0.0) {
        bail!(eee_core::EeeError::Domain(format!("tol must be positive, got {tol}")));
    }
    let spec = load_game(spec_path, alpha)?;
    let sigma = load_strategy(sigma_path, &spec)?;
    let mu = load_model(mu_path, &spec)?;
    let report = if approx {
        verify_approx_eee(&spec, &sigma, &mu, &temperatures(&spec, tau)?, tol)?
    } else {
        verify_eee(&spec, &sigma, &mu, tol)?
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.holds() {
        Ok(0)
    } else {
        for v in &report.violations {
            eprintln!("{v}");
        }
        Ok(1)
    }
}

/// The greedy fixed point of the dynamics from zero, used when no strategy is supplied.
fn greedy_strategy(spec: &GameSpec) -> Result<Strategy> {
    let (trace, report) = q_value_iteration(spec, &PolicyRule::Greedy, &QTable::zeros(spec), &RunOptions::default())?;
    if !report.is_converged() {
        bail!(eee_core::EeeError::Domain(format!(
            "greedy dynamics did not converge ({}); pass --sigma",
            outcome_label(&report.outcome)
        )));
    }
    Ok(trace.last().context("empty trace")?.sigma.clone())
}

#[allow(clippy::too_many_arguments)]
pub fn bounds(
    spec_path: &Path,
    alpha: Option<f64>,
    sigma_path: Option<&Path>,
    tau: &[f64],
    eps_mu: &[f64],
    allow_fallback: bool,
    out: Option<&Path>,
) -> Result<u8> {
    let spec = load_game(spec_path, alpha)?;
    let coupling = coupling_value(&spec, allow_fallback)?;
    let reference_spec = if spec.has_references() {
        spec.clone()
    } else {
        spec.with_fallback_references()?.0
    };
    let sigma = match sigma_path {
        Some(p) => load_strategy(p, &spec)?,
        None => greedy_strategy(&spec)?,
    };
    let diag: ChainDiagnostics = chain_diagnostics(&reference_spec, &sigma)?;
    let mu = consistent_model(&spec, &sigma)?;
    let fp = q_fixed_point(&spec, &mu, FIXED_POINT_TOL, FIXED_POINT_CAP)?;
    let xi = margin(&fp.q, &greedy_policy(&fp.q))?;
    let tau = temperatures(&spec, tau)?;
    let eps = if eps_mu.is_empty() {
        None
    } else {
        Some(per_agent(&spec, eps_mu, "--eps-mu")?)
    };
    let bounds = theorem_bounds(&spec, &diag, &coupling, &xi, &tau, eps.as_deref())?;
    let report = BoundsReport {
        coupling,
        diagnostics: diag,
        bounds,
    };
    let text = serde_json::to_string_pretty(&report)?;
    let dir = output_dir(out, "bounds");
    write_atomic(&dir.join("bounds.json"), format!("{text}\n").as_bytes())?;
    println!("{text}");
    Ok(0)
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    spec: &'a Path,
    sigma: &'a Path,
    alpha: Option<f64>,
    seed: u64,
    horizon: usize,
    burn_in: usize,
    rng: &'a str,
    comparison: &'a ModelComparison,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    spec_path: &Path,
    sigma_path: &Path,
    alpha: Option<f64>,
    horizon: usize,
    seed: u64,
    burn_in: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let spec = load_game(spec_path, alpha)?;
    let sigma = load_strategy(sigma_path, &spec)?;
    if horizon <= burn_in {
        log::warn!("horizon {horizon} does not exceed burn-in {burn_in}; nothing to count");
        return Ok(0);
    }
    let traj = simulate_chain(&spec, &sigma, horizon, seed, burn_in)?;
    let exact = consistent_model(&spec, &sigma)?;
    let comparison = compare_models(&empirical_model(&traj), &exact)?;

    let dir: PathBuf = output_dir(out, "simulate");
    write_atomic(&dir.join("counts.csv"), counts_csv(&traj)?.as_bytes())?;
    write_json(
        &dir.join("comparison.json"),
        &SimulationSummary {
            spec: spec_path,
            sigma: sigma_path,
            alpha,
            seed,
            horizon,
            burn_in,
            rng: RNG_ALGORITHM,
            comparison: &comparison,
        },
    )?;
    println!(
        "max |gap| {:.4e}, max |z| {:.3}, {} visited states, {} unvisited",
        comparison.max_abs_gap, comparison.max_abs_z, comparison.defined_states, comparison.undefined_states
    );
    println!("output: {}", dir.display());
    Ok(0)
}
