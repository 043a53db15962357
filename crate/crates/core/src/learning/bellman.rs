use crate::error::{EeeError, Result};
use crate::game_model::GameSpec;
use crate::tables::{ConsistentModel, QTable};

/// Residual at which [`q_fixed_point`] stops.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// `V_i(z, x) = max_a Q_i(z, x, a)` per agent, one entry per `(z, x)` row.
pub fn state_values(q: &QTable) -> Vec<Vec<f64>> {
    q.agents
        .iter()
        .map(|t| {
            (0..t.n_rows())
                .map(|r| t.row(r).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect()
        })
        .collect()
}

/// One application of the Bellman operator under the models `mu`:
///
/// `Q'(z,x,a) = Σ_s μ(z,x)[s] · (g(x,a,s) + δ Σ_{x⁺} φ(x,s,a)[x⁺] · V(l(z,s), x⁺))`.
pub fn bellman_update(q: &QTable, mu: &ConsistentModel, spec: &GameSpec) -> Result<QTable> {
    q.check_shape(spec)?;
    mu.check_shape(spec)?;
    let values = state_values(q);
    let mut out = QTable::zeros(spec);
    for (i, agent) in spec.agents.iter().enumerate() {
        let v = &values[i];
        let n_x = agent.n_states;
        let table = &mut out.agents[i];
        for z in 0..agent.n_memory {
            for x in 0..n_x {
                let belief = mu.agents[i].at(z, x);
                let r = z * n_x + x;
                for a in 0..agent.n_actions {
                    let kernel = &agent.local_kernels[a];
                    let mut total = 0.0;
                    for (s, &ps) in belief.iter().enumerate() {
                        if ps == 0.0 {
                            continue;
                        }
                        let z_next = agent.memory_rule.apply(z, s);
                        let cont: f64 = kernel
                            .row(x * agent.n_signals + s)
                            .iter()
                            .enumerate()
                            .map(|(xn, p)| p * v[z_next * n_x + xn])
                            .sum();
                        total += ps * (agent.reward.get(x, a, s) + agent.discount * cont);
                    }
                    table.row_mut(r)[a] = total;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub q: QTable,
    /// `‖B(Q) − Q‖_∞` at the returned `Q`.
    pub residual: f64,
    pub iterations: usize,
}

/// Iterates [`bellman_update`] with `mu` held fixed, from zero, until the
/// step falls below `tol`.
pub fn q_fixed_point(spec: &GameSpec, mu: &ConsistentModel, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    let mut q = QTable::zeros(spec);
    for k in 0..max_iter {
        let next = bellman_update(&q, mu, spec)?;
        let residual = next.distance(&q)?;
        q = next;
        if residual < tol {
            return Ok(FixedPoint {
                q,
                residual,
                iterations: k + 1,
            });
        }
    }
    Err(EeeError::Domain(format!(
        "Bellman iteration did not reach {tol:e} in {max_iter} steps"
    )))
}
