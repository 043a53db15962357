//! Acceptance checks AC1–AC10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.
//!
//! Derived quantities (bounds, fixed points, stationary laws, κ, z-scores)
//! are recomputed here by independent routes and compared with the library.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use eee_core::chain_analysis::{
    chain_diagnostics_over, consistent_model, meyer_condition_number, row_sum_norm, JointTransition,
};
use eee_core::coupling_bounds::{contraction_factor, coupling_value, model_perturbation_bound, q_stability_bound};
use eee_core::empirical::{compare_models, empirical_model, simulate};
use eee_core::game_model::{random_family, random_strategy, RandomGameConfig};
use eee_core::learning::{bellman_update, q_value_iteration, verify_approx_eee, IterationTrace, Outcome};
use eee_core::{build_example1, ConsistentModel, GameSpec, PolicyRule, QTable, RunOptions, Strategy, TableFile};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---- oracles ---------------------------------------------------------------

/// Fixed point of the Bellman operator under a fixed model, by plain value
/// iteration over the raw game fields.
fn oracle_q_fixed(spec: &GameSpec, mu: &ConsistentModel) -> Vec<Vec<f64>> {
    spec.agents
        .iter()
        .zip(&mu.agents)
        .map(|(ag, m)| {
            let (nz, nx, na, ns) = (ag.n_memory, ag.n_states, ag.n_actions, ag.n_signals);
            let idx = |z: usize, x: usize, a: usize| (z * nx + x) * na + a;
            let mut q = vec![0.0; nz * nx * na];
            // stop once the step is at rounding level for values of size G/(1−δ)
            let scale = ag.reward_bound().max(1.0) / (1.0 - ag.discount);
            for _ in 0..1_000_000 {
                let v: Vec<f64> = (0..nz * nx)
                    .map(|r| q[r * na..(r + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                let mut next = vec![0.0; q.len()];
                for z in 0..nz {
                    for x in 0..nx {
                        for a in 0..na {
                            let mut acc = 0.0;
                            for s in 0..ns {
                                let zn = ag.memory_rule.apply(z, s);
                                let cont: f64 = (0..nx).map(|xn| ag.local(a, x, s, xn) * v[zn * nx + xn]).sum();
                                acc += m.get(z, x, s) * (ag.reward.get(x, a, s) + ag.discount * cont);
                            }
                            next[idx(z, x, a)] = acc;
                        }
                    }
                }
                let step = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                q = next;
                if step <= 1e-14 * scale {
                    break;
                }
            }
            q
        })
        .collect()
}

fn oracle_stationary(t: &DMatrix<f64>) -> Vec<f64> {
    let n = t.nrows();
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += p[i] * t[(i, j)];
            }
        }
        let step = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if step <= 1e-15 {
            break;
        }
    }
    p
}

/// `max |(I − T)^#|` from the series `Σ_k (T^k − 1πᵀ)`, valid for aperiodic
/// ergodic chains.
fn oracle_kappa(t: &DMatrix<f64>) -> f64 {
    let n = t.nrows();
    let pi = oracle_stationary(t);
    let limit = DMatrix::from_fn(n, n, |_, j| pi[j]);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for _ in 0..100_000 {
        let term = &power - &limit;
        sum += &term;
        if term.amax() <= 1e-15 {
            break;
        }
        power = &power * t;
    }
    sum.amax()
}

// ---- shared fixtures ------------------------------------------------------

fn example1(alpha: f64) -> GameSpec {
    build_example1().interpolate(alpha).unwrap()
}

fn data(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn greedy_run(alpha: f64) -> std::result::Result<(IterationTrace, eee_core::learning::TerminationReport), String> {
    let spec = example1(alpha);
    ok(q_value_iteration(&spec, &PolicyRule::Greedy, &QTable::zeros(&spec), &RunOptions::default()))
}

fn small_games() -> RandomGameConfig {
    RandomGameConfig {
        max_agents: 2,
        max_dim: 3,
        ..RandomGameConfig::default()
    }
}

// ---- criteria --------------------------------------------------------------

fn ac1() -> Check {
    let start = Instant::now();
    let (trace, report) = greedy_run(0.9)?;
    let elapsed = start.elapsed();
    let Outcome::Converged { at_iter } = report.outcome else {
        return Err(format!("outcome {:?}", report.outcome));
    };
    let chosen = trace.last().unwrap().sigma.chosen_actions();
    ensure!(
        chosen == vec![vec![1; 4], vec![0; 4]],
        "limit strategy {chosen:?} (0-based actions per (z,x))"
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("converged at iteration {at_iter} to sigma_1 = action 2, sigma_2 = action 1 in {elapsed:.2?}"))
}

fn ac2() -> Check {
    let (trace, report) = greedy_run(0.9)?;
    ensure!(report.is_converged(), "run did not converge");
    let mu = &trace.last().unwrap().mu;
    let stated = ok(TableFile::parse(&data("example1_mu_star.json")))?;
    let mut worst = 0.0f64;
    let mut rows = 0;
    for (table, stated_rows) in mu.agents.iter().zip(&stated.agents) {
        for (r, want) in stated_rows.iter().enumerate() {
            rows += 1;
            for (got, want) in table.row(r).iter().zip(want) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    ensure!(rows == 8, "{rows} stated rows");
    ensure!(worst <= 0.01, "largest deviation {worst:.4}");
    Ok(format!("8 rows, largest deviation {worst:.4} <= 0.01"))
}

fn ac3() -> Check {
    let spec = example1(1.0);
    let opts = RunOptions {
        max_iter: 200,
        ..RunOptions::default()
    };
    let (_, greedy) = ok(q_value_iteration(&spec, &PolicyRule::Greedy, &QTable::zeros(&spec), &opts))?;
    let Outcome::Cycle { first_seen, period } = greedy.outcome else {
        return Err(format!("greedy outcome {:?}", greedy.outcome));
    };
    ensure!(period >= 2, "period {period}");
    ensure!(greedy.cycling_agents.contains(&1), "cycling agents {:?}", greedy.cycling_agents);
    ensure!(greedy.iterations <= 200, "detected after {} iterations", greedy.iterations);

    let soft = ok(PolicyRule::softmax(vec![1.0, 1.0]))?;
    let (_, softmax) = ok(q_value_iteration(&spec, &soft, &QTable::zeros(&spec), &opts))?;
    ensure!(!softmax.is_converged(), "softmax converged: {:?}", softmax.outcome);
    Ok(format!(
        "greedy cycle of period {period} from iteration {first_seen} involving agent 2; softmax {:?} after {} iterations",
        softmax.outcome, softmax.iterations
    ))
}

fn ac4() -> Check {
    let spec = example1(0.9);
    let rule = ok(PolicyRule::softmax(vec![1.0, 1.0]))?;
    let (trace, report) = ok(q_value_iteration(&spec, &rule, &QTable::zeros(&spec), &RunOptions::default()))?;
    ensure!(report.is_converged(), "outcome {:?}", report.outcome);
    let last = trace.last().unwrap();
    let v = ok(verify_approx_eee(&spec, &last.sigma, &last.mu, &[1.0, 1.0], 1e-6))?;
    ensure!(v.holds(), "violations {:?}", v.violations);
    ensure!(v.optimality_residual < 1e-6, "softmax residual {:e}", v.optimality_residual);
    ensure!(v.consistency_residual < 1e-6, "consistency residual {:e}", v.consistency_residual);
    Ok(format!(
        "converged after {} iterations; softmax residual {:.1e}, consistency residual {:.1e}",
        report.iterations, v.optimality_residual, v.consistency_residual
    ))
}

/// Moves every row of `mu` toward a random vertex so that its max-norm
/// deviation is exactly `eps` (rows with a single signal cannot move).
fn perturb(mu: &ConsistentModel, eps: f64, rng: &mut ChaCha8Rng) -> ConsistentModel {
    let mut out = mu.clone();
    for table in &mut out.agents {
        let w = table.width();
        if w < 2 {
            continue;
        }
        for r in 0..table.n_rows() {
            let k = rng.gen_range(0..w);
            let row = table.row_mut(r);
            let dist = row
                .iter()
                .enumerate()
                .map(|(j, p)| if j == k { 1.0 - p } else { *p })
                .fold(0.0, f64::max);
            let t = eps / dist;
            for (j, p) in row.iter_mut().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                *p += t * (target - *p);
            }
        }
    }
    out
}

/// Runs `B(·, μ)` and `B(·, μ̄)` side by side from zero until both settle.
fn paired_limits(spec: &GameSpec, mu: &ConsistentModel, mu_bar: &ConsistentModel) -> std::result::Result<(QTable, QTable), String> {
    let (mut q, mut qb) = (QTable::zeros(spec), QTable::zeros(spec));
    let delta = spec.agents.iter().map(|a| a.discount).fold(0.0, f64::max);
    let scale = spec.agents.iter().map(|a| a.reward_bound().max(1.0)).fold(0.0, f64::max) / (1.0 - delta);
    for _ in 0..1_000_000 {
        let (n, nb) = (ok(bellman_update(&q, mu, spec))?, ok(bellman_update(&qb, mu_bar, spec))?);
        let step = ok(n.distance(&q))?.max(ok(nb.distance(&qb))?);
        q = n;
        qb = nb;
        if step <= 1e-14 * scale {
            return Ok((q, qb));
        }
    }
    Err("paired iteration did not settle".into())
}

fn ac5() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let mut trials = 0;
    let mut tightest = 0.0f64;
    for g in 0..25 {
        let family = random_family(&mut rng, &small_games());
        let spec = ok(family.interpolate(rng.gen()))?;
        let sigma = random_strategy(&mut rng, &spec, false);
        let mu = ok(consistent_model(&spec, &sigma))?;
        for eps in [0.005, 0.01, 0.02] {
            let mu_bar = perturb(&mu, eps, &mut rng);
            let dev: Vec<f64> = mu.agents.iter().zip(&mu_bar.agents).map(|(a, b)| a.max_abs_diff(b).unwrap()).collect();
            ensure!(dev.iter().all(|d| *d <= eps + 1e-15), "game {g}: perturbation {dev:?} exceeds {eps}");
            let (q, q_bar) = paired_limits(&spec, &mu, &mu_bar)?;
            let (oq, oq_bar) = (oracle_q_fixed(&spec, &mu), oracle_q_fixed(&spec, &mu_bar));
            let lib = ok(q_stability_bound(&spec, &vec![eps; spec.n_agents()]))?;
            for (i, ag) in spec.agents.iter().enumerate() {
                for (lib_q, oracle) in [(&q, &oq), (&q_bar, &oq_bar)] {
                    let d = lib_q.agents[i].data().iter().zip(&oracle[i]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    ensure!(d < 1e-8, "game {g}: library and oracle fixed points differ by {d:e}");
                }
                let bound = eps * ag.n_signals as f64 * ag.reward_bound() / (1.0 - ag.discount).powi(2);
                ensure!((bound - lib[i]).abs() <= 1e-12 * bound.max(1.0), "game {g}: bound {bound} vs library {}", lib[i]);
                let gap = q.agents[i].max_abs_diff(&q_bar.agents[i]).unwrap();
                ensure!(gap <= bound + 1e-9, "game {g} agent {} eps {eps}: gap {gap} > bound {bound}", i + 1);
                if bound > 0.0 {
                    tightest = tightest.max(gap / bound);
                }
                trials += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{trials} agent trials, largest gap/bound {tightest:.3}, {elapsed:.2?}"))
}

fn ac6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut tightest = 0.0f64;
    let mut trials = 0;
    for g in 0..50 {
        let family = random_family(&mut rng, &small_games());
        let spec = ok(family.interpolate(rng.gen()))?;
        let deterministic = rng.gen_bool(0.5);
        let sigma = random_strategy(&mut rng, &spec, deterministic);
        let sigma_bar = random_strategy(&mut rng, &spec, deterministic);
        let diag = ok(chain_diagnostics_over(&spec, &[sigma.clone(), sigma_bar.clone()]))?;
        let coupling = ok(coupling_value(&spec, false))?;
        let dist = ok(sigma.distance(&sigma_bar))?;
        let lib = ok(model_perturbation_bound(&spec, &diag, &coupling, dist))?;
        let (mu, mu_bar) = (ok(consistent_model(&spec, &sigma))?, ok(consistent_model(&spec, &sigma_bar))?);
        let a_hat: usize = spec.agents.iter().map(|a| a.n_actions).sum();
        for (i, _) in spec.agents.iter().enumerate() {
            let others: usize = spec
                .agents
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| b.n_memory * b.n_states)
                .product();
            let bound = (1.0 + diag.signal_ceiling[i]) * diag.kappa * (spec.n_env * others * a_hat) as f64 * dist
                * coupling.lambda
                / diag.minimal_mass[i];
            ensure!((bound - lib[i]).abs() <= 1e-12 * bound.max(1.0), "game {g}: bound {bound} vs library {}", lib[i]);
            let gap = mu.agents[i].max_abs_diff(&mu_bar.agents[i]).unwrap();
            ensure!(gap <= bound + 1e-12, "game {g} agent {}: ‖μ−μ̄‖ = {gap:e} > bound {bound:e}", i + 1);
            if bound > 0.0 {
                tightest = tightest.max(gap / bound);
            }
            trials += 1;
        }
    }
    Ok(format!("{trials} agent trials over 50 games, largest gap/bound {tightest:.2e}"))
}

fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>().powi(3));
    for i in 0..n {
        m[(i, i)] += 0.05;
        m[(i, (i + 1) % n)] += 0.05;
        let s: f64 = m.row(i).sum();
        for j in 0..n {
            m[(i, j)] /= s;
        }
    }
    m
}

fn ac7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let mut tightest = 0.0f64;
    for trial in 0..100 {
        let n = rng.gen_range(2..=8);
        let t = random_chain(&mut rng, n);
        let target = random_chain(&mut rng, n);
        let mut bar = &t * 0.995 + &target * 0.005;
        let d = row_sum_norm(&(&bar - &t));
        let scale = 0.01 * rng.gen::<f64>() / d;
        if scale < 1.0 {
            bar = &t + (&bar - &t) * scale;
        }
        let norm = row_sum_norm(&(&bar - &t));
        ensure!(norm <= 0.01 + 1e-15, "trial {trial}: perturbation {norm}");

        let kappa = ok(meyer_condition_number(&ok(JointTransition::from_matrix(t.clone()))?))?;
        let kappa_oracle = oracle_kappa(&t);
        ensure!(
            (kappa - kappa_oracle).abs() <= 1e-9 * kappa.max(1.0),
            "trial {trial}: kappa {kappa} vs series {kappa_oracle}"
        );
        let (pi, pi_bar) = (oracle_stationary(&t), oracle_stationary(&bar));
        let gap = pi.iter().zip(&pi_bar).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure!(gap <= kappa * norm + 1e-14, "trial {trial}: {gap:e} > {:e}", kappa * norm);
        if norm > 0.0 {
            tightest = tightest.max(gap / (kappa * norm));
        }
    }
    Ok(format!("100 chains, largest ‖π−π̄‖/(κ‖T−T̄‖) = {tightest:.3}"))
}

fn ac8() -> Check {
    let spec = example1(0.01);
    let coupling = ok(coupling_value(&spec, false))?;
    // pick τ from the diagnostics of the uniform strategy, then certify with
    // the strategies actually visited
    let uniform = ok(chain_diagnostics_over(&spec, &[Strategy::uniform(&spec)]))?;
    let rho_unit = ok(contraction_factor(&spec, &uniform, &coupling, &[1.0, 1.0]))?;
    let delta = spec.agents.iter().map(|a| a.discount).fold(0.0, f64::max);
    let tau = (rho_unit - delta) / 0.05;
    let rule = ok(PolicyRule::softmax(vec![tau, tau]))?;
    let tol = 1e-12;
    let opts = RunOptions {
        tol,
        ..RunOptions::default()
    };
    let (trace, report) = ok(q_value_iteration(&spec, &rule, &QTable::zeros(&spec), &opts))?;
    ensure!(report.is_converged(), "outcome {:?}", report.outcome);
    let visited: Vec<Strategy> = trace.records.iter().map(|r| r.sigma.clone()).collect();
    let diag = ok(chain_diagnostics_over(&spec, &visited))?;
    let rho = ok(contraction_factor(&spec, &diag, &coupling, &[tau, tau]))?;

    let a_hat: usize = spec.agents.iter().map(|a| a.n_actions).sum();
    let model_term = spec
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let others: usize = spec
                .agents
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| b.n_memory * b.n_states)
                .product();
            (1.0 + diag.signal_ceiling[i]) * diag.kappa * (spec.n_env * others * a_hat) as f64 / diag.minimal_mass[i]
                * a.n_signals as f64
                * a.reward_bound()
                / (1.0 - a.discount)
        })
        .fold(0.0, f64::max);
    let policy_term = spec.agents.iter().map(|a| (a.n_actions as f64).sqrt() / tau).fold(0.0, f64::max);
    let rho_oracle = model_term * policy_term * coupling.lambda + delta;
    ensure!((rho - rho_oracle).abs() <= 1e-12, "rho {rho} vs {rho_oracle}");
    ensure!(rho < 1.0, "rho = {rho}");

    let q_fix = &trace.last().unwrap().q;
    // the limit is known to within tol/(1−ρ); distances below that carry no signal
    let noise = tol / (1.0 - rho);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for pair in trace.records.windows(2) {
        let before = ok(pair[0].q.distance(q_fix))?;
        let after = ok(pair[1].q.distance(q_fix))?;
        if before <= 10.0 * noise {
            continue;
        }
        ensure!(
            after <= rho * before + noise,
            "iteration {}: {after:e} > rho * {before:e}",
            pair[0].iter
        );
        worst = worst.max(after / before);
        checked += 1;
    }
    ensure!(checked > 0, "no iterations to check");
    Ok(format!(
        "alpha 0.01, tau {tau:.3e}, rho {rho:.4}, {checked} steps checked, largest ratio {worst:.4}"
    ))
}

fn ac9() -> Check {
    let spec = example1(0.0);
    let (trace, report) = greedy_run(0.0)?;
    ensure!(report.is_converged(), "outcome {:?}", report.outcome);
    let first = &trace.records[0].mu;
    let drift = trace
        .records
        .iter()
        .map(|r| r.mu.distance(first).unwrap())
        .fold(0.0, f64::max);
    ensure!(drift <= 1e-12, "model drift {drift:e}");

    // rounding in Q (~1e-14 absolute) moves a ratio by less than 1e-9 only
    // while the steps stay above 1e-4
    let floor = 1e-4;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (i, ag) in spec.agents.iter().enumerate() {
        let steps: Vec<f64> = trace
            .records
            .windows(2)
            .map(|w| w[1].q.agents[i].max_abs_diff(&w[0].q.agents[i]).unwrap())
            .collect();
        for (k, w) in steps.windows(2).enumerate() {
            if w[0] < floor {
                break;
            }
            let ratio = w[1] / w[0];
            ensure!(
                ratio <= 0.7 + 1e-9,
                "agent {} step {}: ratio {ratio} (discount {})",
                i + 1,
                k + 1,
                ag.discount
            );
            worst = worst.max(ratio);
            checked += 1;
        }
    }
    Ok(format!(
        "model drift {drift:.1e}; {checked} step ratios, largest {worst:.9}"
    ))
}

fn ac10() -> Check {
    let start = Instant::now();
    let spec = example1(0.9);
    let sigma = ok(Strategy::constant(&spec, &[1, 0]))?;
    let traj = ok(simulate(&spec, &sigma, 1_000_000, 2024, 1_000))?;
    let exact = ok(consistent_model(&spec, &sigma))?;
    let cmp = ok(compare_models(&empirical_model(&traj), &exact))?;
    let elapsed = start.elapsed();

    let mut worst = 0.0f64;
    let mut cells = 0;
    for (i, counts) in traj.counts.iter().enumerate() {
        let (nz, nx, ns) = counts.dims();
        for z in 0..nz {
            for x in 0..nx {
                let n = counts.visits(z, x);
                if n == 0 {
                    continue;
                }
                for s in 0..ns {
                    let f = counts.count(z, x, s) as f64 / n as f64;
                    let p = exact.agents[i].get(z, x, s);
                    let mut se = (f * (1.0 - f) / n as f64).sqrt();
                    if se == 0.0 {
                        se = (p * (1.0 - p) / n as f64).sqrt();
                    }
                    let zs = if se > 0.0 { (f - p) / se } else { 0.0 };
                    worst = worst.max(zs.abs());
                    cells += 1;
                }
            }
        }
    }
    ensure!(cells == cmp.cells.len(), "{cells} cells vs library {}", cmp.cells.len());
    ensure!((worst - cmp.max_abs_z).abs() < 1e-9, "max |z| {worst} vs library {}", cmp.max_abs_z);
    ensure!(worst <= 4.0, "max |z| = {worst:.3}");
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{cells} cells, max |z| {worst:.3}, max gap {:.2e}, {elapsed:.2?}", cmp.max_abs_gap))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("AC1 example equilibrium (greedy, alpha 0.9)", ac1),
        ("AC2 consistent-model values", ac2),
        ("AC3 cycling at full coupling", ac3),
        ("AC4 softmax convergence (alpha 0.9, tau 1)", ac4),
        ("AC5 Q-stability bound soundness", ac5),
        ("AC6 model-perturbation bound soundness", ac6),
        ("AC7 Meyer inequality", ac7),
        ("AC8 contraction certificate", ac8),
        ("AC9 uncoupled baseline", ac9),
        ("AC10 empirical consistency", ac10),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {name} [{elapsed:.2?}]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name} [{elapsed:.2?}]: {detail}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
