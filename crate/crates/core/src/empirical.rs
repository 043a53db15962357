//! Monte Carlo estimates of consistent models.
//!
//! The true dynamics are sampled step by step under a fixed strategy profile
//! and the signal frequencies observed at each `(z_i, x_i)` are counted.
//! Over a long horizon they approach the exact consistent model.
//!
//! Each step draws, in this order: every agent's action from `σ_i(z_i, x_i)`,
//! every agent's signal from `M_i(w)`, every agent's next local state from
//! `φ_i(x_i, s_i, a_i)`, then the next environment state from `Φ(a)[w]`.
//! Memory moves deterministically to `l_i(z_i, s_i)`. All draws use
//! inverse-CDF sampling over the stored row order with one uniform each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{EeeError, Result};
use crate::game_model::{ensure_valid, GameSpec, JointState};
use crate::tables::{ConsistentModel, Strategy};

/// Generator identifier written next to every set of counts.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.3";
/// Per-step records are kept only up to this horizon.
pub const RECORD_LIMIT: usize = 100_000;
pub const DEFAULT_BURN_IN: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub w: usize,
    pub z: Vec<usize>,
    pub x: Vec<usize>,
    pub a: Vec<usize>,
    pub s: Vec<usize>,
}

/// One agent's visit and signal counts per `(z, x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalCounts {
    n_memory: usize,
    n_states: usize,
    n_signals: usize,
    visits: Vec<u64>,
    counts: Vec<u64>,
}

impl SignalCounts {
    pub fn zeros(n_memory: usize, n_states: usize, n_signals: usize) -> Self {
        SignalCounts {
            n_memory,
            n_states,
            n_signals,
            visits: vec![0; n_memory * n_states],
            counts: vec![0; n_memory * n_states * n_signals],
        }
    }

    /// From signal counts laid out `[(z, x)][s]`; visits are their row sums.
    pub fn from_counts(n_memory: usize, n_states: usize, n_signals: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_memory * n_states * n_signals {
            return Err(EeeError::Structural("signal counts do not match the dimensions".into()));
        }
        let visits = counts.chunks(n_signals.max(1)).map(|c| c.iter().sum()).collect();
        Ok(SignalCounts {
            n_memory,
            n_states,
            n_signals,
            visits,
            counts,
        })
    }

    #[inline]
    fn record(&mut self, z: usize, x: usize, s: usize) {
        let r = z * self.n_states + x;
        self.visits[r] += 1;
        self.counts[r * self.n_signals + s] += 1;
    }

    pub fn visits(&self, z: usize, x: usize) -> u64 {
        self.visits[z * self.n_states + x]
    }

    pub fn count(&self, z: usize, x: usize, s: usize) -> u64 {
        self.counts[(z * self.n_states + x) * self.n_signals + s]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_memory, self.n_states, self.n_signals)
    }

    pub fn total(&self) -> u64 {
        self.visits.iter().sum()
    }

    /// Signal counts sum to the visit count at every `(z, x)`.
    pub fn is_conserved(&self) -> bool {
        self.counts
            .chunks(self.n_signals.max(1))
            .zip(&self.visits)
            .all(|(c, v)| c.iter().sum::<u64>() == *v)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub seed: u64,
    pub horizon: usize,
    pub burn_in: usize,
    /// Every step, when `horizon ≤ RECORD_LIMIT`.
    pub records: Option<Vec<StepRecord>>,
    pub counts: Vec<SignalCounts>,
    pub final_state: JointState,
}

/// Inverse-CDF draw from a probability row.
#[inline]
fn sample<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the last partial sum: take the last positive entry
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Samples `horizon` steps from a uniformly drawn initial joint state and
/// counts signals at steps `burn_in..horizon`.
pub fn simulate(spec: &GameSpec, sigma: &Strategy, horizon: usize, seed: u64, burn_in: usize) -> Result<Trajectory> {
    ensure_valid(spec)?;
    sigma.check_shape(spec)?;
    if !sigma.is_valid(1e-9) {
        return Err(EeeError::Domain("strategy rows must be probability vectors".into()));
    }
    let indexer = spec.indexer()?;
    let n = spec.n_agents();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = indexer.unflatten(rng.gen_range(0..indexer.size()));
    let mut counts: Vec<SignalCounts> = spec
        .agents
        .iter()
        .map(|a| SignalCounts::zeros(a.n_memory, a.n_states, a.n_signals))
        .collect();
    let mut records = (horizon <= RECORD_LIMIT).then(|| Vec::with_capacity(horizon));
    let mut a = vec![0usize; n];
    let mut s = vec![0usize; n];
    let dims = spec.action_dims();

    for t in 0..horizon {
        for i in 0..n {
            a[i] = sample(&mut rng, sigma.agents[i].at(psi.z[i], psi.x[i]));
        }
        for (i, agent) in spec.agents.iter().enumerate() {
            s[i] = sample(&mut rng, agent.signal_kernel.row(psi.w));
        }
        if let Some(r) = records.as_mut() {
            r.push(StepRecord {
                w: psi.w,
                z: psi.z.clone(),
                x: psi.x.clone(),
                a: a.clone(),
                s: s.clone(),
            });
        }
        if t >= burn_in {
            for i in 0..n {
                counts[i].record(psi.z[i], psi.x[i], s[i]);
            }
        }
        for (i, agent) in spec.agents.iter().enumerate() {
            let row = agent.local_kernels[a[i]].row(psi.x[i] * agent.n_signals + s[i]);
            psi.x[i] = sample(&mut rng, row);
            psi.z[i] = agent.memory_rule.apply(psi.z[i], s[i]);
        }
        let flat_a = a.iter().zip(&dims).fold(0, |acc, (ai, d)| acc * d + ai);
        psi.w = sample(&mut rng, spec.env_kernels[flat_a].row(psi.w));
    }

    Ok(Trajectory {
        seed,
        horizon,
        burn_in,
        records,
        counts,
        final_state: psi,
    })
}

/// One agent's frequencies `μ̂(z,x)[s]` and standard errors
/// `√(μ̂(1−μ̂)/visits)`. Rows with no visits are undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalAgent {
    pub n_memory: usize,
    pub n_states: usize,
    pub n_signals: usize,
    pub visits: Vec<u64>,
    pub frequency: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl EmpiricalAgent {
    pub fn is_defined(&self, z: usize, x: usize) -> bool {
        self.visits[z * self.n_states + x] > 0
    }

    pub fn frequency(&self, z: usize, x: usize) -> Option<&[f64]> {
        let r = z * self.n_states + x;
        self.is_defined(z, x)
            .then(|| &self.frequency[r * self.n_signals..(r + 1) * self.n_signals])
    }

    pub fn stderr(&self, z: usize, x: usize) -> Option<&[f64]> {
        let r = z * self.n_states + x;
        self.is_defined(z, x)
            .then(|| &self.stderr[r * self.n_signals..(r + 1) * self.n_signals])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalModel {
    pub agents: Vec<EmpiricalAgent>,
}

pub fn empirical_model_from_counts(counts: &[SignalCounts]) -> EmpiricalModel {
    let agents = counts
        .iter()
        .map(|c| {
            let mut frequency = vec![0.0; c.counts.len()];
            let mut stderr = vec![0.0; c.counts.len()];
            for (r, &v) in c.visits.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                for s in 0..c.n_signals {
                    let k = r * c.n_signals + s;
                    let f = c.counts[k] as f64 / v as f64;
                    frequency[k] = f;
                    stderr[k] = (f * (1.0 - f) / v as f64).sqrt();
                }
            }
            EmpiricalAgent {
                n_memory: c.n_memory,
                n_states: c.n_states,
                n_signals: c.n_signals,
                visits: c.visits.clone(),
                frequency,
                stderr,
            }
        })
        .collect();
    EmpiricalModel { agents }
}

pub fn empirical_model(traj: &Trajectory) -> EmpiricalModel {
    empirical_model_from_counts(&traj.counts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellComparison {
    /// 1-based, like every index in files.
    pub agent: usize,
    pub z: usize,
    pub x: usize,
    pub s: usize,
    pub visits: u64,
    pub empirical: f64,
    pub exact: f64,
    pub gap: f64,
    pub stderr: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelComparison {
    /// Largest `|μ̂ − μ|` over defined cells.
    pub max_abs_gap: f64,
    pub max_abs_z: f64,
    pub defined_states: usize,
    pub undefined_states: usize,
    pub cells: Vec<CellComparison>,
}

/// Compares empirical frequencies with the exact model at every visited
/// `(agent, z, x, s)`. The z-score divides the gap by the empirical standard
/// error; when that is zero (a frequency of exactly 0 or 1) the binomial
/// standard error of the exact probability is used instead.
pub fn compare_models(empirical: &EmpiricalModel, exact: &ConsistentModel) -> Result<ModelComparison> {
    if empirical.agents.len() != exact.agents.len()
        || empirical.agents.iter().zip(&exact.agents).any(|(e, m)| {
            e.n_memory != m.n_memory() || e.n_states != m.n_states() || e.n_signals != m.width()
        })
    {
        return Err(EeeError::Structural("empirical and exact models differ in shape".into()));
    }
    let mut cells = Vec::new();
    let (mut defined_states, mut undefined_states) = (0, 0);
    let (mut max_abs_gap, mut max_abs_z) = (0.0f64, 0.0f64);
    for (i, (e, m)) in empirical.agents.iter().zip(&exact.agents).enumerate() {
        for z in 0..e.n_memory {
            for x in 0..e.n_states {
                let (Some(freq), Some(se)) = (e.frequency(z, x), e.stderr(z, x)) else {
                    undefined_states += 1;
                    continue;
                };
                defined_states += 1;
                let visits = e.visits[z * e.n_states + x];
                for (s, ((&f, &se), &p)) in freq.iter().zip(se).zip(m.at(z, x)).enumerate() {
                    let gap = f - p;
                    let stderr = if se > 0.0 {
                        se
                    } else {
                        (p * (1.0 - p) / visits as f64).sqrt()
                    };
                    let z_score = if gap == 0.0 {
                        0.0
                    } else if stderr > 0.0 {
                        gap / stderr
                    } else {
                        f64::INFINITY.copysign(gap)
                    };
                    max_abs_gap = max_abs_gap.max(gap.abs());
                    max_abs_z = max_abs_z.max(z_score.abs());
                    cells.push(CellComparison {
                        agent: i + 1,
                        z: z + 1,
                        x: x + 1,
                        s: s + 1,
                        visits,
                        empirical: f,
                        exact: p,
                        gap,
                        stderr,
                        z_score,
                    });
                }
            }
        }
    }
    Ok(ModelComparison {
        max_abs_gap,
        max_abs_z,
        defined_states,
        undefined_states,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_analysis::consistent_model;
    use crate::game_model::{build_example1, AgentSpec, MemoryRule, RewardTable};
    use crate::kernel::StochasticKernel;

    fn example_star() -> (GameSpec, Strategy) {
        let spec = build_example1().interpolate(0.9).unwrap();
        let sigma = Strategy::constant(&spec, &[1, 0]).unwrap();
        (spec, sigma)
    }

    fn one_hot(rows: &[usize], cols: usize) -> StochasticKernel {
        StochasticKernel::from_rows(
            rows.iter()
                .map(|&c| (0..cols).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_counting_window() {
        let (spec, sigma) = example_star();
        let traj = simulate(&spec, &sigma, 500, 1, 500).unwrap();
        assert!(traj.counts.iter().all(|c| c.total() == 0));
        let emp = empirical_model(&traj);
        assert!(emp.agents.iter().all(|a| a.frequency(0, 0).is_none()));
        assert!(emp.agents.iter().all(|a| a.frequency.iter().all(|f| f.is_finite())));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let (spec, sigma) = example_star();
        let a = simulate(&spec, &sigma, 5_000, 42, 100).unwrap();
        let b = simulate(&spec, &sigma, 5_000, 42, 100).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.counts, b.counts);
        let c = simulate(&spec, &sigma, 5_000, 43, 100).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn counts_are_conserved() {
        let (spec, sigma) = example_star();
        let traj = simulate(&spec, &sigma, 20_000, 9, 1_000).unwrap();
        for c in &traj.counts {
            assert!(c.is_conserved());
            assert_eq!(c.total(), 19_000);
        }
    }

    #[test]
    fn deterministic_orbit_matches_hand_unrolled() {
        // W = {1,2,3} cycling 1→2→3→1; signal = w mod 2; one local state;
        // memory remembers the last signal.
        let spec = GameSpec {
            n_env: 3,
            env_kernels: vec![one_hot(&[1, 2, 0], 3)],
            uncoupled_env: None,
            agents: vec![AgentSpec {
                n_states: 2,
                n_actions: 1,
                n_signals: 2,
                n_memory: 2,
                signal_kernel: one_hot(&[0, 1, 0], 2),
                // x⁺ = s
                local_kernels: vec![one_hot(&[0, 1, 0, 1], 2)],
                uncoupled_local: None,
                memory_rule: MemoryRule::last_signal(2),
                reward: RewardTable::new(2, 1, 2, vec![0.0; 4]).unwrap(),
                discount: 0.5,
                temperature: 1.0,
            }],
        };
        let sigma = Strategy::uniform(&spec);
        let traj = simulate(&spec, &sigma, 10, 5, 0).unwrap();
        let recs = traj.records.unwrap();
        let w0 = recs[0].w;
        for (t, r) in recs.iter().enumerate() {
            let w = (w0 + t) % 3;
            assert_eq!(r.w, w);
            assert_eq!(r.s, vec![w % 2]);
            if t > 0 {
                let prev = recs[t - 1].s[0];
                assert_eq!(r.z, vec![prev]);
                assert_eq!(r.x, vec![prev]);
            }
        }
    }

    #[test]
    fn frequencies_from_counts() {
        let counts = SignalCounts::from_counts(1, 2, 2, vec![30, 70, 0, 0]).unwrap();
        let m = empirical_model_from_counts(&[counts]);
        assert_eq!(m.agents[0].frequency(0, 0).unwrap(), &[0.3, 0.7]);
        assert!(m.agents[0].frequency(0, 1).is_none());
        let se = m.agents[0].stderr(0, 0).unwrap();
        assert!((se[0] - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn synthetic_counts_sit_within_quantization() {
        let (spec, sigma) = example_star();
        let exact = consistent_model(&spec, &sigma).unwrap();
        let total = 10_000u64;
        let counts: Vec<SignalCounts> = exact
            .agents
            .iter()
            .map(|t| {
                let c = (0..t.n_rows())
                    .flat_map(|r| {
                        let row = t.row(r);
                        let first = (row[0] * total as f64).round() as u64;
                        [first, total - first]
                    })
                    .collect();
                SignalCounts::from_counts(t.n_memory(), t.n_states(), t.width(), c).unwrap()
            })
            .collect();
        let cmp = compare_models(&empirical_model_from_counts(&counts), &exact).unwrap();
        assert!(cmp.max_abs_gap <= 1.0 / total as f64);
    }

    #[test]
    fn short_horizon_tolerates_unvisited_states() {
        let (spec, sigma) = example_star();
        let exact = consistent_model(&spec, &sigma).unwrap();
        let traj = simulate(&spec, &sigma, 102, 3, 100).unwrap();
        let cmp = compare_models(&empirical_model(&traj), &exact).unwrap();
        assert!(cmp.undefined_states > 0);
        assert_eq!(cmp.defined_states + cmp.undefined_states, 8);
    }

    #[test]
    fn long_run_matches_stated_model() {
        let (spec, sigma) = example_star();
        let traj = simulate(&spec, &sigma, 1_000_000, 2024, DEFAULT_BURN_IN).unwrap();
        let emp = empirical_model(&traj);
        for x in 0..2 {
            let f = emp.agents[0].frequency(0, x).unwrap();
            let se = emp.agents[0].stderr(0, x).unwrap();
            assert!((f[0] - 0.67).abs() <= 3.0 * se[0] + 0.005, "{f:?} ± {se:?}");
        }
    }

    #[test]
    fn mismatched_shapes_are_structural() {
        let (spec, sigma) = example_star();
        let traj = simulate(&spec, &sigma, 100, 3, 0).unwrap();
        let mut exact = consistent_model(&spec, &sigma).unwrap();
        exact.agents.pop();
        assert!(compare_models(&empirical_model(&traj), &exact).is_err());
    }
}
