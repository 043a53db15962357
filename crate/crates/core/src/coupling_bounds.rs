//! How strongly actions move the dynamics, and the closed-form bounds that
//! follow from it.
//!
//! With `Φ_U` and `φ_{U,i}` action-independent reference kernels,
//! `ε_Φ = max_a ‖Φ(a) − Φ_U‖_{r,∞}`, `ε_φ,i = max_a ‖φ_i(a) − φ_{U,i}‖_{r,∞}` and
//! `λ = ε_Φ + |I| · max_i ε_φ,i`. Small `λ` means weak coupling: strategies
//! barely change the consistent models, Q-values stay close to the
//! uncoupled ones and, for softmax play, the joint iteration contracts.

use serde::{Deserialize, Serialize};

use crate::chain_analysis::ChainDiagnostics;
use crate::error::{EeeError, Result};
use crate::game_model::GameSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Supplied,
    /// Missing references were replaced by the action average of the kernels.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// `ε_Φ`.
    pub eps_env: f64,
    /// `ε_φ,i` per agent.
    pub eps_local: Vec<f64>,
    /// `max_i ε_φ,i`, the single constant that satisfies the definition.
    pub eps_local_max: f64,
    pub lambda: f64,
    pub reference_source: ReferenceSource,
}

/// Computes `ε_Φ`, `ε_φ,i` and `λ`. Without supplied references this fails
/// unless `allow_fallback` is set.
pub fn coupling_value(spec: &GameSpec, allow_fallback: bool) -> Result<CouplingReport> {
    let (spec, source) = if spec.has_references() {
        (spec.clone(), ReferenceSource::Supplied)
    } else if allow_fallback {
        (spec.with_fallback_references()?.0, ReferenceSource::Fallback)
    } else {
        return Err(EeeError::MissingReference(
            "uncoupled reference kernels are not supplied and the action-average fallback is disabled"
                .into(),
        ));
    };
    let env_ref = spec.uncoupled_env.as_ref().expect("references present");
    let eps_env = spec
        .env_kernels
        .iter()
        .map(|k| k.row_sum_distance(env_ref))
        .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))?;
    let eps_local = spec
        .agents
        .iter()
        .map(|a| {
            let r = a.uncoupled_local.as_ref().expect("references present");
            a.local_kernels
                .iter()
                .map(|k| k.row_sum_distance(r))
                .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
        })
        .collect::<Result<Vec<_>>>()?;
    let eps_local_max = eps_local.iter().copied().fold(0.0, f64::max);
    Ok(CouplingReport {
        eps_env,
        eps_local_max,
        lambda: eps_env + spec.n_agents() as f64 * eps_local_max,
        eps_local,
        reference_source: source,
    })
}

/// `ε_{μ,i} |S_i| G_i / (1 − δ_i)²`: how far the limiting Q-values can move
/// when agent `i`'s model moves by `ε_{μ,i}`.
pub fn q_stability_bound(spec: &GameSpec, eps_mu: &[f64]) -> Result<Vec<f64>> {
    if eps_mu.len() != spec.n_agents() {
        return Err(EeeError::Structural(format!(
            "{} model perturbations for {} agents",
            eps_mu.len(),
            spec.n_agents()
        )));
    }
    if let Some(e) = eps_mu.iter().find(|e| !(**e >= 0.0)) {
        return Err(EeeError::Domain(format!("model perturbation must be nonnegative, got {e}")));
    }
    Ok(spec
        .agents
        .iter()
        .zip(eps_mu)
        .map(|(a, e)| e * a.n_signals as f64 * a.reward_bound() / (1.0 - a.discount).powi(2))
        .collect())
}

/// `(1 + p_i^max) κ |W| |Z_{−i}| |X_{−i}| Â / m_i`, the factor shared by all
/// strategy-sensitivity bounds.
fn sensitivity(spec: &GameSpec, diag: &ChainDiagnostics) -> Result<Vec<f64>> {
    if diag.minimal_mass.len() != spec.n_agents() || diag.signal_ceiling.len() != spec.n_agents() {
        return Err(EeeError::Structural("diagnostics do not match the game".into()));
    }
    let a_hat: usize = spec.agents.iter().map(|a| a.n_actions).sum();
    spec.agents
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let m = diag.minimal_mass[i];
            if !(m > 0.0) {
                return Err(EeeError::MinimalMass { agent: i, mass: m });
            }
            let others: f64 = spec
                .agents
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| (b.n_memory * b.n_states) as f64)
                .product();
            Ok((1.0 + diag.signal_ceiling[i]) * diag.kappa * spec.n_env as f64 * others * a_hat as f64 / m)
        })
        .collect()
}

/// `(1 + p_i^max) κ |W| |Z_{−i}| |X_{−i}| Â ‖σ − σ̄‖_∞ λ / m_i`: how far agent
/// `i`'s consistent model can move between two strategy profiles.
pub fn model_perturbation_bound(
    spec: &GameSpec,
    diag: &ChainDiagnostics,
    coupling: &CouplingReport,
    sigma_distance: f64,
) -> Result<Vec<f64>> {
    if !(sigma_distance >= 0.0) {
        return Err(EeeError::Domain(format!(
            "strategy distance must be nonnegative, got {sigma_distance}"
        )));
    }
    Ok(sensitivity(spec, diag)?
        .into_iter()
        .map(|s| s * sigma_distance * coupling.lambda)
        .collect())
}

/// `ρ = max_i [(1+p_i^max) κ |W| |Z_{−i}| |X_{−i}| Â |S_i| G_i / (m_i (1−δ_i))]
///      · max_i √|A_i| / τ_i · λ + max_i δ_i`.
///
/// `ρ < 1` certifies that softmax Q-value iteration is a max-norm contraction.
pub fn contraction_factor(
    spec: &GameSpec,
    diag: &ChainDiagnostics,
    coupling: &CouplingReport,
    tau: &[f64],
) -> Result<f64> {
    if tau.len() != spec.n_agents() {
        return Err(EeeError::Structural(format!(
            "{} temperatures for {} agents",
            tau.len(),
            spec.n_agents()
        )));
    }
    if let Some(t) = tau.iter().find(|t| !(**t > 0.0)) {
        return Err(EeeError::Domain(format!("temperature must be positive, got {t}")));
    }
    let sens = sensitivity(spec, diag)?;
    let model_term = spec
        .agents
        .iter()
        .zip(&sens)
        .map(|(a, s)| s * a.n_signals as f64 * a.reward_bound() / (1.0 - a.discount))
        .fold(0.0, f64::max);
    let policy_term = spec
        .agents
        .iter()
        .zip(tau)
        .map(|(a, t)| (a.n_actions as f64).sqrt() / t)
        .fold(0.0, f64::max);
    let delta = spec.agents.iter().map(|a| a.discount).fold(0.0, f64::max);
    Ok(model_term * policy_term * coupling.lambda + delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginCheck {
    pub holds: bool,
    /// `(1+p_i^max) κ |W| |Z_{−i}| |X_{−i}| Â λ |S_i| G_i / (m_i (1−δ_i)²)`.
    pub lhs: f64,
    /// `ξ_i / 2`.
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per agent, whether the worst-case Q drift caused by coupling stays below
/// half the margin `ξ_i`, so that the greedy policy cannot switch. Uses
/// `‖σ − σ̄‖_∞ ≤ 1`.
pub fn margin_condition(
    spec: &GameSpec,
    diag: &ChainDiagnostics,
    coupling: &CouplingReport,
    xi: &[f64],
) -> Result<Vec<MarginCheck>> {
    if xi.len() != spec.n_agents() {
        return Err(EeeError::Structural(format!("{} margins for {} agents", xi.len(), spec.n_agents())));
    }
    let sens = sensitivity(spec, diag)?;
    Ok(spec
        .agents
        .iter()
        .zip(sens)
        .zip(xi)
        .map(|((a, s), &x)| {
            let lhs = s * coupling.lambda * a.n_signals as f64 * a.reward_bound() / (1.0 - a.discount).powi(2);
            let rhs = x / 2.0;
            if x > 0.0 {
                MarginCheck {
                    holds: lhs < rhs,
                    lhs,
                    rhs,
                    note: None,
                }
            } else {
                MarginCheck {
                    holds: false,
                    lhs,
                    rhs,
                    note: Some("zero margin".into()),
                }
            }
        })
        .collect())
}

/// Everything the bounds were computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub kappa: f64,
    pub minimal_mass: Vec<f64>,
    pub signal_ceiling: Vec<f64>,
    /// `G_i = max |g_i|`.
    pub reward_bound: Vec<f64>,
    /// `Â = Σ_j |A_j|`.
    pub action_total: usize,
    pub n_env: usize,
    pub n_memory: Vec<usize>,
    pub n_states: Vec<usize>,
    pub n_signals: Vec<usize>,
    pub n_actions: Vec<usize>,
    pub tau: Vec<f64>,
    pub discount: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda: f64,
    /// Strategy distance used for the model bound.
    pub sigma_distance: f64,
    /// `ε_{μ,i}` fed to the Q-stability bound.
    pub eps_mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub prop1: Vec<f64>,
    #[serde(rename = "propA2")]
    pub prop_a2: Vec<f64>,
    pub rho: f64,
    pub rho_certifies_contraction: bool,
    pub margin_condition: Vec<MarginCheck>,
    pub inputs: BoundInputs,
}

/// Evaluates every bound. The model bound uses `‖σ − σ̄‖_∞ = 1`; the
/// Q-stability bound is evaluated at `eps_mu` when given and otherwise at
/// that model bound.
pub fn theorem_bounds(
    spec: &GameSpec,
    diag: &ChainDiagnostics,
    coupling: &CouplingReport,
    xi: &[f64],
    tau: &[f64],
    eps_mu: Option<&[f64]>,
) -> Result<TheoremBounds> {
    let sigma_distance = 1.0;
    let prop_a2 = model_perturbation_bound(spec, diag, coupling, sigma_distance)?;
    let eps_mu = eps_mu.map_or_else(|| prop_a2.clone(), <[f64]>::to_vec);
    let prop1 = q_stability_bound(spec, &eps_mu)?;
    let rho = contraction_factor(spec, diag, coupling, tau)?;
    let margin_condition = margin_condition(spec, diag, coupling, xi)?;
    let inputs = BoundInputs {
        kappa: diag.kappa,
        minimal_mass: diag.minimal_mass.clone(),
        signal_ceiling: diag.signal_ceiling.clone(),
        reward_bound: spec.agents.iter().map(|a| a.reward_bound()).collect(),
        action_total: spec.agents.iter().map(|a| a.n_actions).sum(),
        n_env: spec.n_env,
        n_memory: spec.agents.iter().map(|a| a.n_memory).collect(),
        n_states: spec.agents.iter().map(|a| a.n_states).collect(),
        n_signals: spec.agents.iter().map(|a| a.n_signals).collect(),
        n_actions: spec.agents.iter().map(|a| a.n_actions).collect(),
        tau: tau.to_vec(),
        discount: spec.agents.iter().map(|a| a.discount).collect(),
        xi: xi.to_vec(),
        lambda: coupling.lambda,
        sigma_distance,
        eps_mu,
    };
    Ok(TheoremBounds {
        prop1,
        prop_a2,
        rho,
        rho_certifies_contraction: rho < 1.0,
        margin_condition,
        inputs,
    })
}

/// The full bounds document: coupling, chain diagnostics and bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub coupling: CouplingReport,
    pub diagnostics: ChainDiagnostics,
    #[serde(flatten)]
    pub bounds: TheoremBounds,
}
