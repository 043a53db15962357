use serde::Serialize;

use super::bellman::{q_fixed_point, FIXED_POINT_TOL};
use super::policy::{argmax, greedy_policy, softmax_policy};
use crate::chain_analysis::consistent_model;
use crate::error::{EeeError, Result};
use crate::game_model::GameSpec;
use crate::tables::{ConsistentModel, QTable, Strategy};

const FIXED_POINT_CAP: usize = 1_000_000;

/// `ξ_i = min_{z,x} (Q_i(z,x,σ_i(z,x)) − max_{a ≠ σ_i(z,x)} Q_i(z,x,a))`.
///
/// Positive exactly when `σ` is the strict greedy policy of `Q`. Agents with
/// a single action have no rival and get `+∞`.
pub fn margin(q: &QTable, sigma: &Strategy) -> Result<Vec<f64>> {
    if !sigma.is_deterministic() {
        return Err(EeeError::Domain("margin requires a deterministic strategy".into()));
    }
    if q.agents.len() != sigma.agents.len()
        || q.agents.iter().zip(&sigma.agents).any(|(a, b)| !a.same_shape(b))
    {
        return Err(EeeError::Structural("Q-table and strategy differ in shape".into()));
    }
    Ok(q
        .agents
        .iter()
        .zip(sigma.chosen_actions())
        .map(|(t, chosen)| {
            chosen
                .iter()
                .enumerate()
                .map(|(r, &c)| {
                    let row = t.row(r);
                    let rival = row
                        .iter()
                        .enumerate()
                        .filter(|&(a, _)| a != c)
                        .map(|(_, &v)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    row[c] - rival
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EeeReport {
    pub optimality_ok: bool,
    pub consistency_ok: bool,
    /// Greedy check: the largest shortfall `max_a Q − Q(σ)`. Softmax check:
    /// `‖σ − softmax(Q)‖_∞`.
    pub optimality_residual: f64,
    /// `‖μ − consistent_model(σ)‖_∞`.
    pub consistency_residual: f64,
    /// Residual of the Bellman fixed point under the supplied `μ`.
    pub fixed_point_residual: f64,
    /// `ξ_i` of the greedy policy of the fixed point.
    pub margins: Vec<f64>,
    pub violations: Vec<String>,
}

impl EeeReport {
    pub fn holds(&self) -> bool {
        self.optimality_ok && self.consistency_ok
    }
}

fn consistency(spec: &GameSpec, sigma: &Strategy, mu: &ConsistentModel, tol: f64, violations: &mut Vec<String>) -> Result<f64> {
    let exact = consistent_model(spec, sigma)?;
    let mut worst = 0.0f64;
    for (i, (m, e)) in mu.agents.iter().zip(&exact.agents).enumerate() {
        for r in 0..m.n_rows() {
            let gap = m
                .row(r)
                .iter()
                .zip(e.row(r))
                .fold(0.0f64, |g, (a, b)| g.max((a - b).abs()));
            worst = worst.max(gap);
            if gap >= tol {
                violations.push(format!(
                    "agent {} (z={}, x={}): model is {gap:.3e} from the consistent model {:?}",
                    i + 1,
                    r / m.n_states() + 1,
                    r % m.n_states() + 1,
                    e.row(r)
                ));
            }
        }
    }
    Ok(worst)
}

fn prepare(spec: &GameSpec, sigma: &Strategy, mu: &ConsistentModel) -> Result<crate::learning::FixedPoint> {
    sigma.check_shape(spec)?;
    mu.check_shape(spec)?;
    q_fixed_point(spec, mu, FIXED_POINT_TOL, FIXED_POINT_CAP)
}

/// Checks both equilibrium conditions for a deterministic `σ`: it is greedy
/// (up to `tol`) for the Bellman fixed point under `μ`, and `μ` is within
/// `tol` of the consistent model induced by `σ`.
pub fn verify_eee(spec: &GameSpec, sigma: &Strategy, mu: &ConsistentModel, tol: f64) -> Result<EeeReport> {
    if !sigma.is_deterministic() {
        return Err(EeeError::Domain("EEE verification requires a deterministic strategy".into()));
    }
    let fp = prepare(spec, sigma, mu)?;
    let mut violations = Vec::new();
    let mut shortfall = 0.0f64;
    for (i, (t, chosen)) in fp.q.agents.iter().zip(sigma.chosen_actions()).enumerate() {
        for (r, &c) in chosen.iter().enumerate() {
            let row = t.row(r);
            let best = argmax(row);
            let gap = row[best] - row[c];
            shortfall = shortfall.max(gap);
            if gap > tol {
                violations.push(format!(
                    "agent {} (z={}, x={}): action {} is {gap:.4} below action {}",
                    i + 1,
                    r / t.n_states() + 1,
                    r % t.n_states() + 1,
                    c + 1,
                    best + 1
                ));
            }
        }
    }
    let optimality_ok = shortfall <= tol;
    let consistency_residual = consistency(spec, sigma, mu, tol, &mut violations)?;
    Ok(EeeReport {
        optimality_ok,
        consistency_ok: consistency_residual < tol,
        optimality_residual: shortfall,
        consistency_residual,
        fixed_point_residual: fp.residual,
        margins: margin(&fp.q, sigma)?,
        violations,
    })
}

/// As [`verify_eee`] with optimality replaced by
/// `‖σ − softmax_τ(Q_fixed)‖_∞ < tol`.
pub fn verify_approx_eee(
    spec: &GameSpec,
    sigma: &Strategy,
    mu: &ConsistentModel,
    tau: &[f64],
    tol: f64,
) -> Result<EeeReport> {
    let fp = prepare(spec, sigma, mu)?;
    let target = softmax_policy(&fp.q, tau)?;
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for (i, (s, t)) in sigma.agents.iter().zip(&target.agents).enumerate() {
        let gap = s.max_abs_diff(t)?;
        worst = worst.max(gap);
        if gap >= tol {
            violations.push(format!(
                "agent {}: strategy is {gap:.3e} from the softmax of its fixed-point Q",
                i + 1
            ));
        }
    }
    let consistency_residual = consistency(spec, sigma, mu, tol, &mut violations)?;
    Ok(EeeReport {
        optimality_ok: worst < tol,
        consistency_ok: consistency_residual < tol,
        optimality_residual: worst,
        consistency_residual,
        fixed_point_residual: fp.residual,
        margins: margin(&fp.q, &greedy_policy(&fp.q))?,
        violations,
    })
}
