//! The exact joint Markov chain over `ψ = (w, z, x)`.
//!
//! Under a strategy profile `σ` the joint state moves with
//!
//! ```text
//! T[ψ, ψ⁺] = Σ_a σ(z,x)[a] · Φ(a)[w, w⁺] · Π_i Σ_{s_i} M_i(w)[s_i] · 1{z_i⁺ = l_i(z_i,s_i)} · φ_i(x_i,s_i,a_i)[x_i⁺]
//! ```
//!
//! with `σ(z,x)[a] = Π_i σ_i(z_i,x_i)[a_i]`. Its stationary distribution gives
//! the consistent models (the long-run conditional signal frequencies) and
//! the diagnostics κ, `m_i` and `p_i^max` that enter the perturbation bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EeeError, Result};
use crate::game_model::{GameSpec, JointIndexer};
use crate::tables::{ConsistentModel, StateTable, Strategy};

/// Tolerance on `‖πT − π‖_∞` for an accepted stationary distribution.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Iteration cap of the power-iteration fallback.
pub const POWER_ITERATION_CAP: usize = 1_000_000;
/// Stationary mass below which a conditional signal frequency is undefined.
pub const MASS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct JointTransition {
    pub indexer: JointIndexer,
    pub matrix: DMatrix<f64>,
}

impl JointTransition {
    /// Wraps a bare row-stochastic matrix, e.g. for testing the solvers on
    /// hand-made chains. The indexer describes a single "environment".
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(EeeError::Structural("transition matrix must be square".into()));
        }
        let indexer = JointIndexer::new(matrix.nrows(), vec![], vec![], vec![])?;
        Ok(JointTransition { indexer, matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Row-sum norm `max_r Σ_c |A_rc|`.
pub fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// For one agent at `(w, z, x)` playing `a`: the sparse distribution of
/// `(z⁺, x⁺)` as `(offset into the flat index, probability)` pairs.
fn agent_moves(
    spec: &GameSpec,
    agent: usize,
    w: usize,
    z: usize,
    x: usize,
    a: usize,
    z_stride: usize,
    x_stride: usize,
    out: &mut Vec<(usize, f64)>,
) {
    let ag = &spec.agents[agent];
    out.clear();
    for s in 0..ag.n_signals {
        let ps = ag.signal_kernel.get(w, s);
        if ps == 0.0 {
            continue;
        }
        let z_next = ag.memory_rule.apply(z, s);
        for x_next in 0..ag.n_states {
            let p = ps * ag.local(a, x, s, x_next);
            if p == 0.0 {
                continue;
            }
            let off = z_next * z_stride + x_next * x_stride;
            match out.iter_mut().find(|(o, _)| *o == off) {
                Some(slot) => slot.1 += p,
                None => out.push((off, p)),
            }
        }
    }
}

/// Builds `T` for the game under `sigma`, densely, in indexer order.
pub fn build_joint_transition(spec: &GameSpec, sigma: &Strategy) -> Result<JointTransition> {
    sigma.check_shape(spec)?;
    let indexer = spec.indexer()?;
    if spec.env_kernels.len() != indexer.action_count() {
        return Err(EeeError::Structural(format!(
            "{} environment kernels for {} joint actions",
            spec.env_kernels.len(),
            indexer.action_count()
        )));
    }
    let n = indexer.size();
    let n_agents = spec.n_agents();
    let strides = indexer.strides();
    let w_stride = strides[0];
    let mut matrix = DMatrix::<f64>::zeros(n, n);

    let mut psi = indexer.unflatten(0);
    let mut moves: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_agents];
    let mut combined: Vec<(usize, f64)> = Vec::new();
    let mut next: Vec<(usize, f64)> = Vec::new();

    for row in 0..n {
        indexer.unflatten_into(row, &mut psi);
        for flat_a in 0..indexer.action_count() {
            let a = indexer.unflatten_action(flat_a);
            let p_a: f64 = (0..n_agents)
                .map(|i| {
                    let t = &sigma.agents[i];
                    t.get(psi.z[i], psi.x[i], a[i])
                })
                .product();
            if p_a == 0.0 {
                continue;
            }
            for i in 0..n_agents {
                agent_moves(
                    spec,
                    i,
                    psi.w,
                    psi.z[i],
                    psi.x[i],
                    a[i],
                    strides[1 + i],
                    strides[1 + n_agents + i],
                    &mut moves[i],
                );
            }
            combined.clear();
            combined.push((0, p_a));
            for m in &moves {
                next.clear();
                for &(off, p) in &combined {
                    for &(o2, p2) in m {
                        next.push((off + o2, p * p2));
                    }
                }
                std::mem::swap(&mut combined, &mut next);
            }
            let env = &spec.env_kernels[flat_a];
            for w_next in 0..spec.n_env {
                let pw = env.get(psi.w, w_next);
                if pw == 0.0 {
                    continue;
                }
                let base = w_next * w_stride;
                for &(off, p) in &combined {
                    matrix[(row, base + off)] += p * pw;
                }
            }
        }
    }
    Ok(JointTransition { indexer, matrix })
}

/// `T_U`: the chain under the uncoupled reference kernels. It does not
/// depend on the strategy.
pub fn build_reference_transition(spec: &GameSpec) -> Result<JointTransition> {
    let uncoupled = spec.uncoupled_game()?;
    build_joint_transition(&uncoupled, &Strategy::uniform(&uncoupled))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    DirectSolve,
    PowerIteration,
}

#[derive(Clone, Debug)]
pub struct StationaryDistribution {
    pub pi: DVector<f64>,
    /// `‖πT − π‖_∞`.
    pub residual: f64,
    pub method: StationaryMethod,
}

fn residual(matrix: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let moved = matrix.tr_mul(pi);
    (moved - pi).amax()
}

fn clean(mut pi: DVector<f64>) -> Option<DVector<f64>> {
    if pi.iter().any(|v| !v.is_finite() || *v < -1e-10) {
        return None;
    }
    pi.iter_mut().for_each(|v| *v = v.max(0.0));
    let sum = pi.sum();
    if sum <= 0.0 {
        return None;
    }
    Some(pi / sum)
}

/// Solves `(Tᵀ − I)π = 0` with the last equation replaced by `Σπ = 1`.
/// Returns `None` when the system is singular or the answer is not a
/// probability vector.
pub fn stationary_direct(t: &JointTransition) -> Option<StationaryDistribution> {
    let n = t.size();
    if n == 0 {
        return None;
    }
    let mut a = t.matrix.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = clean(a.lu().solve(&b)?)?;
    let residual = residual(&t.matrix, &pi);
    Some(StationaryDistribution {
        pi,
        residual,
        method: StationaryMethod::DirectSolve,
    })
}

/// Power iteration on the lazy chain `(T + I)/2`, which has the same
/// stationary distributions as `T` but is aperiodic. Starts from uniform and
/// stops once `‖πT − π‖_∞ ≤ tol`.
pub fn stationary_power(t: &JointTransition, tol: f64, max_iter: usize) -> Result<StationaryDistribution> {
    let n = t.size();
    if n == 0 {
        return Err(EeeError::Structural("empty chain".into()));
    }
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let mut res = f64::INFINITY;
    for _ in 0..max_iter {
        let moved = t.matrix.tr_mul(&pi);
        res = (&moved - &pi).amax();
        if res <= tol {
            return Ok(StationaryDistribution {
                pi,
                residual: res,
                method: StationaryMethod::PowerIteration,
            });
        }
        pi = (moved + &pi) * 0.5;
        let s = pi.sum();
        pi /= s;
    }
    Err(EeeError::NotErgodic {
        residual: res,
        detail: format!("power iteration did not converge in {max_iter} steps"),
    })
}

/// Direct solve, falling back to power iteration.
pub fn stationary_distribution(t: &JointTransition) -> Result<StationaryDistribution> {
    if let Some(sd) = stationary_direct(t) {
        if sd.residual <= STATIONARY_TOL {
            return Ok(sd);
        }
    }
    stationary_power(t, STATIONARY_TOL, POWER_ITERATION_CAP)
}

/// `π(z_i, x_i)` for every agent, one entry per `(z, x)` row.
pub fn local_marginals(spec: &GameSpec, indexer: &JointIndexer, pi: &DVector<f64>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = spec.agents.iter().map(|a| vec![0.0; a.n_local()]).collect();
    let mut psi = indexer.unflatten(0);
    for (flat, &p) in pi.iter().enumerate() {
        indexer.unflatten_into(flat, &mut psi);
        for (i, a) in spec.agents.iter().enumerate() {
            out[i][psi.z[i] * a.n_states + psi.x[i]] += p;
        }
    }
    out
}

/// `μ_i(z_i,x_i)[s_i] = N(s_i,z_i,x_i) / D(z_i,x_i)` from a stationary vector.
pub fn consistent_model_from_stationary(
    spec: &GameSpec,
    indexer: &JointIndexer,
    pi: &DVector<f64>,
) -> Result<ConsistentModel> {
    let mut numer = ConsistentModel::zeros(spec);
    let mut denom: Vec<Vec<f64>> = spec.agents.iter().map(|a| vec![0.0; a.n_local()]).collect();
    let mut psi = indexer.unflatten(0);
    for (flat, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        indexer.unflatten_into(flat, &mut psi);
        for (i, a) in spec.agents.iter().enumerate() {
            let r = psi.z[i] * a.n_states + psi.x[i];
            denom[i][r] += p;
            let m = a.signal_kernel.row(psi.w);
            numer.agents[i]
                .row_mut(r)
                .iter_mut()
                .zip(m)
                .for_each(|(n, q)| *n += q * p);
        }
    }
    for (i, (table, d)) in numer.agents.iter_mut().zip(&denom).enumerate() {
        let n_states = spec.agents[i].n_states;
        for (r, &mass) in d.iter().enumerate() {
            if mass < MASS_FLOOR {
                return Err(EeeError::VanishingMass {
                    agent: i,
                    z: r / n_states,
                    x: r % n_states,
                    mass,
                });
            }
            table.row_mut(r).iter_mut().for_each(|v| *v /= mass);
        }
    }
    Ok(numer)
}

/// The consistent model of every agent under `(spec, sigma)`.
pub fn consistent_model(spec: &GameSpec, sigma: &Strategy) -> Result<ConsistentModel> {
    let t = build_joint_transition(spec, sigma)?;
    let sd = stationary_distribution(&t)?;
    consistent_model_from_stationary(spec, &t.indexer, &sd.pi)
}

/// Group inverse `A# = (I − T + 1πᵀ)⁻¹ − 1πᵀ` of `A = I − T`.
pub fn group_inverse(t: &JointTransition) -> Result<DMatrix<f64>> {
    let sd = stationary_distribution(t)?;
    let n = t.size();
    let w = DMatrix::from_fn(n, n, |_, j| sd.pi[j]);
    let fundamental = DMatrix::identity(n, n) - &t.matrix + &w;
    let inv = fundamental.try_inverse().ok_or_else(|| EeeError::NotErgodic {
        residual: sd.residual,
        detail: "chain not ergodic: fundamental matrix is singular".into(),
    })?;
    Ok(inv - w)
}

/// κ = `max_ij |A#_ij|`.
///
/// For any chain `T̄` with stationary `π̄`, `π̄ − π = π̄(T̄ − T)A#`; since the
/// rows of `T̄ − T` sum to zero this gives
/// `‖π − π̄‖_∞ ≤ max_ij |A#_ij| · ‖T − T̄‖_{r,∞}`.
pub fn meyer_condition_number(t_ref: &JointTransition) -> Result<f64> {
    Ok(group_inverse(t_ref)?.amax())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// κ of the uncoupled reference chain.
    pub kappa: f64,
    /// `m_i`: smallest stationary mass of any `(z_i, x_i)`.
    pub minimal_mass: Vec<f64>,
    /// `p_i^max`: largest entry of `M_i`.
    pub signal_ceiling: Vec<f64>,
}

/// κ on `T_U`, `m_i` under `sigma`, `p_i^max` from the signal kernels.
pub fn chain_diagnostics(spec: &GameSpec, sigma: &Strategy) -> Result<ChainDiagnostics> {
    chain_diagnostics_over(spec, std::slice::from_ref(sigma))
}

/// As [`chain_diagnostics`], with `m_i` the minimum over all `sigmas`.
pub fn chain_diagnostics_over(spec: &GameSpec, sigmas: &[Strategy]) -> Result<ChainDiagnostics> {
    let t_ref = build_reference_transition(spec).map_err(|e| match e {
        EeeError::MissingReference(m) => EeeError::MissingReference(format!(
            "uncoupled reference kernels required for κ ({m})"
        )),
        other => other,
    })?;
    let kappa = meyer_condition_number(&t_ref)?;
    let mut minimal_mass = vec![f64::INFINITY; spec.n_agents()];
    for sigma in sigmas {
        let t = build_joint_transition(spec, sigma)?;
        let sd = stationary_distribution(&t)?;
        for (m, marg) in minimal_mass.iter_mut().zip(local_marginals(spec, &t.indexer, &sd.pi)) {
            *m = marg.into_iter().fold(*m, f64::min);
        }
    }
    let signal_ceiling = spec.agents.iter().map(|a| a.signal_kernel.max_entry()).collect();
    Ok(ChainDiagnostics {
        kappa,
        minimal_mass,
        signal_ceiling,
    })
}

/// `(z, x)`-marginal of the stationary distribution as per-agent tables of
/// width one; handy for CSV dumps.
pub fn marginal_tables(spec: &GameSpec, indexer: &JointIndexer, pi: &DVector<f64>) -> Vec<StateTable> {
    local_marginals(spec, indexer, pi)
        .into_iter()
        .zip(&spec.agents)
        .map(|(m, a)| {
            let rows: Vec<Vec<f64>> = m.into_iter().map(|v| vec![v]).collect();
            StateTable::from_rows(a.n_memory, a.n_states, &rows).expect("shape by construction")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{
        build_example1, random_family, random_strategy, AgentSpec, MemoryRule, RandomGameConfig,
        RewardTable,
    };
    use crate::kernel::StochasticKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sigma_star(spec: &GameSpec) -> Strategy {
        Strategy::constant(spec, &[1, 0]).unwrap()
    }

    fn chain(rows: &[&[f64]]) -> JointTransition {
        let n = rows.len();
        JointTransition::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    /// Enumerates (a, s, x⁺, w⁺) directly without the per-agent factorization.
    fn brute_force_row(spec: &GameSpec, sigma: &Strategy, row: usize) -> Vec<f64> {
        let idx = spec.indexer().unwrap();
        let psi = idx.unflatten(row);
        let mut out = vec![0.0; idx.size()];
        let n = spec.n_agents();
        let sig_dims: Vec<usize> = spec.agents.iter().map(|a| a.n_signals).collect();
        let x_dims: Vec<usize> = spec.agents.iter().map(|a| a.n_states).collect();
        let count = |d: &[usize]| d.iter().product::<usize>();
        let digits = |mut k: usize, d: &[usize]| {
            let mut v = vec![0; d.len()];
            for i in (0..d.len()).rev() {
                v[i] = k % d[i];
                k /= d[i];
            }
            v
        };
        for fa in 0..spec.joint_action_count() {
            let a = idx.unflatten_action(fa);
            let mut pa = 1.0;
            for i in 0..n {
                pa *= sigma.agents[i].get(psi.z[i], psi.x[i], a[i]);
            }
            for fs in 0..count(&sig_dims) {
                let s = digits(fs, &sig_dims);
                let mut ps = 1.0;
                for i in 0..n {
                    ps *= spec.agents[i].signal_kernel.get(psi.w, s[i]);
                }
                for fx in 0..count(&x_dims) {
                    let xn = digits(fx, &x_dims);
                    let mut px = 1.0;
                    for i in 0..n {
                        px *= spec.agents[i].local(a[i], psi.x[i], s[i], xn[i]);
                    }
                    for wn in 0..spec.n_env {
                        let next = crate::game_model::JointState {
                            w: wn,
                            z: (0..n)
                                .map(|i| spec.agents[i].memory_rule.apply(psi.z[i], s[i]))
                                .collect(),
                            x: xn.clone(),
                        };
                        out[idx.flatten(&next)] +=
                            pa * ps * px * spec.env_kernels[fa].get(psi.w, wn);
                    }
                }
            }
        }
        out
    }

    fn trivial_agent(n_env: usize) -> AgentSpec {
        AgentSpec {
            n_states: 1,
            n_actions: 1,
            n_signals: 1,
            n_memory: 1,
            signal_kernel: StochasticKernel::uniform(n_env, 1),
            local_kernels: vec![StochasticKernel::uniform(1, 1)],
            uncoupled_local: Some(StochasticKernel::uniform(1, 1)),
            memory_rule: MemoryRule::new(1, 1, vec![0]).unwrap(),
            reward: RewardTable::new(1, 1, 1, vec![0.0]).unwrap(),
            discount: 0.5,
            temperature: 1.0,
        }
    }

    #[test]
    fn degenerate_single_state_chain() {
        let spec = GameSpec {
            n_env: 1,
            env_kernels: vec![StochasticKernel::identity(1)],
            uncoupled_env: Some(StochasticKernel::identity(1)),
            agents: vec![trivial_agent(1)],
        };
        let t = build_joint_transition(&spec, &Strategy::uniform(&spec)).unwrap();
        assert_eq!(t.matrix, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn action_independent_kernels_ignore_strategy() {
        let uncoupled = build_example1().interpolate(0.0).unwrap();
        let a = build_joint_transition(&uncoupled, &sigma_star(&uncoupled)).unwrap();
        let b = build_joint_transition(&uncoupled, &Strategy::uniform(&uncoupled)).unwrap();
        assert!((a.matrix - b.matrix).amax() < 1e-15);
    }

    #[test]
    fn example1_matches_brute_force() {
        let spec = build_example1().interpolate(0.9).unwrap();
        let sigma = sigma_star(&spec);
        let t = build_joint_transition(&spec, &sigma).unwrap();
        assert!(t.max_row_sum_error() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let row = rng.gen_range(0..t.size());
            let oracle = brute_force_row(&spec, &sigma, row);
            for (j, v) in oracle.iter().enumerate() {
                assert!((t.matrix[(row, j)] - v).abs() < 1e-14, "row {row} col {j}");
            }
        }
    }

    #[test]
    fn impossible_memory_moves_have_no_mass() {
        let spec = build_example1().interpolate(0.9).unwrap();
        let t = build_joint_transition(&spec, &Strategy::uniform(&spec)).unwrap();
        let idx = &t.indexer;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let r = rng.gen_range(0..t.size());
            for c in 0..t.size() {
                let next = idx.unflatten(c);
                // z⁺ = s can be anything, but the joint z⁺ must be reachable:
                // with last-signal memory every z⁺ is, so check positivity
                // only where a signal has zero probability in this row.
                let w = idx.unflatten(r).w;
                let reachable = (0..2).all(|i| spec.agents[i].signal_kernel.get(w, next.z[i]) > 0.0);
                if !reachable {
                    assert_eq!(t.matrix[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn stationary_of_symmetric_chain() {
        let sd = stationary_distribution(&chain(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!((sd.pi[0] - 0.5).abs() < 1e-15 && (sd.pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_of_two_state_chain() {
        let sd = stationary_distribution(&chain(&[&[0.9, 0.1], &[0.5, 0.5]])).unwrap();
        assert!((sd.pi[0] - 5.0 / 6.0).abs() < 1e-14);
        assert!((sd.pi[1] - 1.0 / 6.0).abs() < 1e-14);
        assert!(sd.residual <= STATIONARY_TOL);
    }

    #[test]
    fn periodic_chain_needs_no_fallback_but_power_iteration_still_converges() {
        let t = chain(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = stationary_power(&t, 1e-12, 1000).unwrap();
        assert!((p.pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_chain_falls_back() {
        let t = chain(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(stationary_direct(&t).is_none());
        let sd = stationary_distribution(&t).unwrap();
        assert_eq!(sd.method, StationaryMethod::PowerIteration);
    }

    #[test]
    fn power_iteration_agrees_with_direct_solve_on_example1() {
        let spec = build_example1().interpolate(0.9).unwrap();
        let t = build_joint_transition(&spec, &sigma_star(&spec)).unwrap();
        let direct = stationary_direct(&t).unwrap();
        let power = stationary_power(&t, 1e-13, POWER_ITERATION_CAP).unwrap();
        assert!((direct.pi - power.pi).amax() < 1e-10);
        assert!(direct.residual <= STATIONARY_TOL);
    }

    #[test]
    fn signal_independent_of_environment_gives_fixed_model() {
        let mut spec = build_example1().interpolate(0.9).unwrap();
        let q = [0.3, 0.7];
        spec.agents[0].signal_kernel =
            StochasticKernel::from_rows(vec![q.to_vec(); 4]).unwrap();
        let mu = consistent_model(&spec, &Strategy::uniform(&spec)).unwrap();
        for r in 0..4 {
            let row = mu.agents[0].row(r);
            assert!((row[0] - q[0]).abs() < 1e-12 && (row[1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn example1_consistent_model_near_stated_values() {
        let spec = build_example1().interpolate(0.9).unwrap();
        let mu = consistent_model(&spec, &sigma_star(&spec)).unwrap();
        let stated = [[[0.67, 0.33], [0.54, 0.46]], [[0.64, 0.36], [0.55, 0.45]]];
        for (i, by_z) in stated.iter().enumerate() {
            for (z, want) in by_z.iter().enumerate() {
                for x in 0..2 {
                    let got = mu.agents[i].at(z, x);
                    for s in 0..2 {
                        assert!((got[s] - want[s]).abs() <= 0.01, "agent {i} z {z}: {got:?}");
                    }
                }
            }
        }
        assert!(mu.is_valid(1e-12));
    }

    #[test]
    fn vanishing_mass_is_named() {
        // agent never observes signal 2, so memory z = 2 is never visited
        let mut spec = build_example1().interpolate(0.9).unwrap();
        spec.agents[0].signal_kernel = StochasticKernel::from_rows(vec![vec![1.0, 0.0]; 4]).unwrap();
        match consistent_model(&spec, &Strategy::uniform(&spec)) {
            Err(EeeError::VanishingMass { agent: 0, z: 1, .. }) => {}
            other => panic!("expected vanishing mass, got {other:?}"),
        }
    }

    #[test]
    fn kappa_of_symmetric_chain() {
        // A# = I − 1πᵀ = [[0.5, −0.5], [−0.5, 0.5]]
        let k = meyer_condition_number(&chain(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
    }

    #[test]
    fn group_inverse_identities() {
        let t = chain(&[&[0.9, 0.1, 0.0], &[0.2, 0.5, 0.3], &[0.3, 0.3, 0.4]]);
        let g = group_inverse(&t).unwrap();
        let a = DMatrix::identity(3, 3) - &t.matrix;
        assert!((&a * &g * &a - &a).amax() < 1e-12);
        assert!((&g * &a * &g - &g).amax() < 1e-12);
        assert!((&a * &g - &g * &a).amax() < 1e-12);
    }

    fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(n, n, |_, _| 0.05 + rng.gen::<f64>());
        for mut r in m.row_iter_mut() {
            let s = r.sum();
            r /= s;
        }
        m
    }

    #[test]
    fn kappa_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_chain(&mut rng, 5);
        let perm = [3, 0, 4, 1, 2];
        let p = DMatrix::from_fn(5, 5, |i, j| m[(perm[i], perm[j])]);
        let k1 = meyer_condition_number(&JointTransition::from_matrix(m).unwrap()).unwrap();
        let k2 = meyer_condition_number(&JointTransition::from_matrix(p).unwrap()).unwrap();
        assert!((k1 - k2).abs() < 1e-12);
    }

    #[test]
    fn meyer_inequality_on_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_chain(&mut rng, 5);
        let t = JointTransition::from_matrix(m.clone()).unwrap();
        let kappa = meyer_condition_number(&t).unwrap();
        let pi = stationary_direct(&t).unwrap().pi;
        for _ in 0..100 {
            let target = random_chain(&mut rng, 5);
            let eps = 0.01 * rng.gen::<f64>();
            let mut bar = &m * (1.0 - eps) + target * eps;
            // keep ‖T − T̄‖ ≤ 0.01 in row-sum norm
            let d = row_sum_norm(&(&bar - &m));
            if d > 0.01 {
                bar = &m + (bar - &m) * (0.01 / d);
            }
            let tb = JointTransition::from_matrix(bar.clone()).unwrap();
            let pib = stationary_direct(&tb).unwrap().pi;
            assert!((&pi - &pib).amax() <= kappa * row_sum_norm(&(bar - &m)) + 1e-15);
        }
    }

    #[test]
    fn example1_signal_ceilings() {
        let spec = build_example1().interpolate(0.9).unwrap();
        let d = chain_diagnostics(&spec, &sigma_star(&spec)).unwrap();
        assert_eq!(d.signal_ceiling, vec![0.98, 0.93]);
        assert!(d.kappa > 0.0);
        assert!(d.minimal_mass.iter().all(|&m| m > 0.0 && m <= 0.25 + 1e-12));
    }

    #[test]
    fn uniform_game_has_uniform_marginals() {
        let mut spec = build_example1().interpolate(0.0).unwrap();
        spec.uncoupled_env = Some(StochasticKernel::uniform(4, 4));
        spec.env_kernels = vec![StochasticKernel::uniform(4, 4); 4];
        for a in &mut spec.agents {
            a.signal_kernel = StochasticKernel::uniform(4, 2);
            a.local_kernels = vec![StochasticKernel::uniform(4, 2); 2];
        }
        let d = chain_diagnostics(&spec, &Strategy::uniform(&spec)).unwrap();
        for m in d.minimal_mass {
            assert!((m - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn diagnostics_need_references() {
        let mut spec = build_example1().interpolate(0.9).unwrap();
        spec.agents[1].uncoupled_local = None;
        match chain_diagnostics(&spec, &sigma_star(&spec)) {
            Err(EeeError::MissingReference(m)) => assert!(m.contains("κ")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_coupling_makes_models_strategy_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let spec = random_family(&mut rng, &RandomGameConfig::default())
                .interpolate(0.0)
                .unwrap();
            let s1 = random_strategy(&mut rng, &spec, false);
            let s2 = random_strategy(&mut rng, &spec, true);
            let m1 = consistent_model(&spec, &s1).unwrap();
            let m2 = consistent_model(&spec, &s2).unwrap();
            assert!(m1.distance(&m2).unwrap() < 1e-12);
        }
    }

    #[test]
    fn stationary_invariant_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..10 {
            let spec = random_family(&mut rng, &RandomGameConfig::default())
                .interpolate(rng.gen())
                .unwrap();
            let sigma = random_strategy(&mut rng, &spec, false);
            let t = build_joint_transition(&spec, &sigma).unwrap();
            assert!(t.max_row_sum_error() < 1e-12);
            let sd = stationary_distribution(&t).unwrap();
            assert!(residual(&t.matrix, &sd.pi) < 1e-10);
            assert!((sd.pi.sum() - 1.0).abs() < 1e-12);
            let mu = consistent_model_from_stationary(&spec, &t.indexer, &sd.pi).unwrap();
            assert!(mu.is_valid(1e-12));
        }
    }
}
