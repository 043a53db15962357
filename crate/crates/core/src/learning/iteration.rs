use std::collections::VecDeque;

use serde::{Serialize, Serializer};

use super::bellman::bellman_update;
use super::policy::{greedy_policy, PolicyRule};
use crate::chain_analysis::consistent_model;
use crate::error::{EeeError, Result};
use crate::game_model::{ensure_valid, GameSpec};
use crate::tables::{ConsistentModel, QTable, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOptions {
    /// Convergence threshold on `‖Q^{t+1} − Q^t‖_∞`; also the softmax cycle tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations kept in full before thinning starts.
    pub full_retention: usize,
    /// After `full_retention`, keep one iteration in this many.
    pub thin_every: usize,
    /// Longest cycle period looked for.
    pub max_period: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: 1e-9,
            max_iter: 10_000,
            full_retention: 10_000,
            thin_every: 10,
            max_period: 50,
        }
    }
}

impl RunOptions {
    fn keeps(&self, t: usize) -> bool {
        t < self.full_retention || t.is_multiple_of(self.thin_every.max(1))
    }
}

/// Everything known at iteration `t`: `Q^t`, `σ^t = policy(Q^t)` and the
/// consistent models `μ^t` under `σ^t`.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iter: usize,
    pub q: QTable,
    pub sigma: Strategy,
    pub mu: ConsistentModel,
    /// `‖Q^{t+1} − Q^t‖_∞`; absent on the last record.
    pub dq: Option<f64>,
    /// `‖σ^{t+1} − σ^t‖_∞`; absent on the last record.
    pub dsigma: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub rule: PolicyRule,
    /// Ascending in `iter`; contiguous up to the retention limit.
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Per-agent policy series `σ_i^t(z,x)[a]` for plotting.
    pub fn policy_series(&self, agent: usize, row: usize, action: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .map(|r| (r.iter, r.sigma.agents[agent].row(row)[action]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// `at_iter` is the index of the final `Q`.
    Converged { at_iter: usize },
    /// The iterates repeat with `period ≥ 2`; the repeating window starts at `first_seen`.
    Cycle { first_seen: usize, period: usize },
    MaxIterReached,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerminationReport {
    pub outcome: Outcome,
    /// Last recorded `‖Q^{t+1} − Q^t‖_∞`.
    pub residual: f64,
    /// Number of Bellman updates performed.
    pub iterations: usize,
    /// Zero-based indices of the agents whose policy (greedy) or Q-values
    /// (softmax) keep moving inside the cycle.
    pub cycling_agents: Vec<usize>,
}

impl TerminationReport {
    pub fn is_converged(&self) -> bool {
        matches!(self.outcome, Outcome::Converged { .. })
    }
}

#[derive(Serialize)]
struct TerminationSummary<'a> {
    outcome: &'a str,
    at_iter: Option<usize>,
    period: Option<usize>,
    first_seen: Option<usize>,
    residual: f64,
    iterations: usize,
    cycling_agents: Vec<usize>,
}

impl Serialize for TerminationReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (outcome, at_iter, period, first_seen) = match self.outcome {
            Outcome::Converged { at_iter } => ("converged", Some(at_iter), None, None),
            Outcome::Cycle { first_seen, period } => ("cycle", None, Some(period), Some(first_seen)),
            Outcome::MaxIterReached => ("max_iter_reached", None, None, None),
        };
        TerminationSummary {
            outcome,
            at_iter,
            period,
            first_seen,
            residual: self.residual,
            iterations: self.iterations,
            cycling_agents: self.cycling_agents.iter().map(|i| i + 1).collect(),
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    /// Iteration at which the confirmed periodic window starts.
    pub first_seen: usize,
    pub period: usize,
    pub agents: Vec<usize>,
}

/// Smallest `p` such that the last `2p` policies each equal the one `p`
/// steps earlier (three full periods observed). `Some(1)` means the policy
/// has settled.
fn policy_period(policies: &[&Strategy], max_period: usize) -> Option<usize> {
    let n = policies.len();
    (1..=max_period).take_while(|p| 3 * p <= n).find(|&p| {
        (n - 2 * p..n).all(|k| policies[k] == policies[k - p])
    })
}

/// Smallest `p ≥ 2` such that, over the last `2p` iterates,
/// `‖Q^k − Q^{k−p}‖ < tol` while the step `‖Q^k − Q^{k−1}‖` stays at least
/// `tol` and does not shrink against the step one period earlier. The last
/// condition keeps slowly converging oscillations from passing as cycles.
fn q_period(qs: &[&QTable], tol: f64, max_period: usize) -> Option<usize> {
    let n = qs.len();
    let step = |k: usize| qs[k].distance(qs[k - 1]).unwrap_or(f64::INFINITY);
    if n < 2 || step(n - 1) < tol {
        return None;
    }
    (2..=max_period).take_while(|p| 3 * p < n).find(|&p| {
        (n - 2 * p..n).all(|k| {
            let back = qs[k].distance(qs[k - p]).unwrap_or(f64::INFINITY);
            let s = step(k);
            back < tol && s >= tol && s >= 0.99 * step(k - p)
        })
    })
}

fn cycle_in(policies: &[&Strategy], qs: &[&QTable], greedy: bool, tol: f64, max_period: usize, t_last: usize) -> Option<CycleReport> {
    if greedy {
        let p = policy_period(policies, max_period).filter(|&p| p >= 2)?;
        let n = policies.len();
        let tail = &policies[n - p..];
        let agents = (0..tail[0].agents.len())
            .filter(|&i| tail.iter().any(|s| s.agents[i] != tail[0].agents[i]))
            .collect();
        Some(CycleReport {
            first_seen: t_last + 1 - 3 * p,
            period: p,
            agents,
        })
    } else {
        let p = q_period(qs, tol, max_period)?;
        let n = qs.len();
        let (a, b) = (qs[n - 1], qs[n - 2]);
        let agents = (0..a.agents.len())
            .filter(|&i| a.agents[i].max_abs_diff(&b.agents[i]).map_or(true, |d| d >= tol))
            .collect();
        Some(CycleReport {
            first_seen: t_last - 3 * p,
            period: p,
            agents,
        })
    }
}

/// Looks for a cycle at the end of `trace`, using its longest contiguous
/// tail. Greedy runs compare exact policies (three repeats of a period
/// `≥ 2`); softmax runs compare Q-tables at tolerance `tol`.
pub fn detect_cycle(trace: &IterationTrace, tol: f64, max_period: usize) -> Option<CycleReport> {
    let recs = &trace.records;
    let mut start = recs.len().saturating_sub(1);
    while start > 0 && recs[start - 1].iter + 1 == recs[start].iter {
        start -= 1;
    }
    let tail = &recs[start..];
    let last = tail.last()?;
    let policies: Vec<&Strategy> = tail.iter().map(|r| &r.sigma).collect();
    let qs: Vec<&QTable> = tail.iter().map(|r| &r.q).collect();
    cycle_in(&policies, &qs, trace.rule.is_greedy(), tol, max_period, last.iter)
}

fn check_initial_bound(spec: &GameSpec, q0: &QTable) -> Result<()> {
    for (i, (t, a)) in q0.agents.iter().zip(&spec.agents).enumerate() {
        let bound = a.reward_bound() / (1.0 - a.discount);
        if !t.data().iter().all(|v| v.is_finite()) || t.sup_norm() > bound * (1.0 + 1e-12) {
            return Err(EeeError::Domain(format!(
                "initial Q of agent {} exceeds G/(1−δ) = {bound}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Runs the learning dynamics from `q0`: at each step `σ^t = policy(Q^t)`,
/// `μ^t` is the exact consistent model under `σ^t`, and
/// `Q^{t+1} = B(Q^t, μ^t)`.
///
/// Stops when `‖Q^{t+1} − Q^t‖_∞ < tol` (for greedy runs the policy must also
/// have been unchanged for two steps and stay greedy for `Q^{t+1}`), when a
/// cycle is detected, or after `max_iter` updates.
pub fn q_value_iteration(
    spec: &GameSpec,
    rule: &PolicyRule,
    q0: &QTable,
    opts: &RunOptions,
) -> Result<(IterationTrace, TerminationReport)> {
    ensure_valid(spec)?;
    rule.check(spec)?;
    q0.check_shape(spec)?;
    check_initial_bound(spec, q0)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(EeeError::Domain("tol must be positive and max_iter at least 1".into()));
    }

    let window_len = 3 * opts.max_period + 2;
    let mut window: VecDeque<(Strategy, QTable)> = VecDeque::with_capacity(window_len + 1);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut q = q0.clone();
    let mut prev_sigma: Option<Strategy> = None;
    let mut residual;

    let model = |sigma: &Strategy, t: usize| consistent_model(spec, sigma).map_err(|e| e.at_iteration(t));

    for t in 0..opts.max_iter {
        let sigma = rule.apply(&q)?;
        if let (Some(prev), Some(last)) = (&prev_sigma, records.last_mut()) {
            if last.iter + 1 == t {
                last.dsigma = Some(sigma.distance(prev)?);
            }
        }
        let mu = model(&sigma, t)?;
        let q_next = bellman_update(&q, &mu, spec)?;
        let dq = q_next.distance(&q)?;
        residual = dq;

        window.push_back((sigma.clone(), q.clone()));
        if window.len() > window_len {
            window.pop_front();
        }
        let policies: Vec<&Strategy> = window.iter().map(|(s, _)| s).collect();
        let qs: Vec<&QTable> = window.iter().map(|(_, q)| q).collect();
        let cycle = cycle_in(&policies, &qs, rule.is_greedy(), opts.tol, opts.max_period, t);

        let settled = dq < opts.tol
            && match rule {
                PolicyRule::Greedy => {
                    prev_sigma.as_ref() == Some(&sigma) && greedy_policy(&q_next) == sigma
                }
                PolicyRule::Softmax { .. } => true,
            };

        if let Some(c) = cycle {
            records.push(IterationRecord {
                iter: t,
                q,
                sigma,
                mu,
                dq: Some(dq),
                dsigma: None,
            });
            let trace = IterationTrace {
                rule: rule.clone(),
                records,
            };
            let report = TerminationReport {
                outcome: Outcome::Cycle {
                    first_seen: c.first_seen,
                    period: c.period,
                },
                residual,
                iterations: t,
                cycling_agents: c.agents,
            };
            return Ok((trace, report));
        }

        if settled || opts.keeps(t) || t + 1 == opts.max_iter {
            records.push(IterationRecord {
                iter: t,
                q,
                sigma: sigma.clone(),
                mu: mu.clone(),
                dq: Some(dq),
                dsigma: None,
            });
        }
        q = q_next;

        if settled || t + 1 == opts.max_iter {
            let sigma_final = rule.apply(&q)?;
            let mu_final = if sigma_final == sigma { mu } else { model(&sigma_final, t + 1)? };
            if let Some(last) = records.last_mut() {
                last.dsigma = Some(sigma_final.distance(&sigma)?);
            }
            records.push(IterationRecord {
                iter: t + 1,
                q,
                sigma: sigma_final,
                mu: mu_final,
                dq: None,
                dsigma: None,
            });
            let outcome = if settled {
                Outcome::Converged { at_iter: t + 1 }
            } else {
                Outcome::MaxIterReached
            };
            let trace = IterationTrace {
                rule: rule.clone(),
                records,
            };
            let report = TerminationReport {
                outcome,
                residual,
                iterations: t + 1,
                cycling_agents: vec![],
            };
            return Ok((trace, report));
        }
        prev_sigma = Some(sigma);
    }
    unreachable!("the loop returns on its last iteration")
}
