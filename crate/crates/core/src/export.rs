//! CSV renderings of traces, counts and models.
//!
//! Comma separated, dot decimals, `\n` line endings, header row first.
//! Indices (agent, z, x, a, s) are 1-based like every index in files.

use crate::empirical::{empirical_model, Trajectory, RNG_ALGORITHM};
use crate::error::Result;
use crate::learning::IterationTrace;
use crate::tables::ConsistentModel;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per `(iter, agent, z, x, a)`:
/// `iter,agent,z,x,a,sigma_prob,q_value,mu_s1..mu_sK,step_dq,step_dsigma`.
/// `K` is the largest signal count; shorter rows are padded with blanks.
pub fn trace_csv(trace: &IterationTrace) -> Result<String> {
    let k = trace
        .records
        .first()
        .map_or(0, |r| r.mu.agents.iter().map(|t| t.width()).max().unwrap_or(0));
    let mut w = writer();
    let mut header: Vec<String> = ["iter", "agent", "z", "x", "a", "sigma_prob", "q_value"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=k).map(|s| format!("mu_s{s}")));
    header.push("step_dq".into());
    header.push("step_dsigma".into());
    w.write_record(&header)?;
    for r in &trace.records {
        for (i, (q, (s, m))) in r.q.agents.iter().zip(r.sigma.agents.iter().zip(&r.mu.agents)).enumerate() {
            for z in 0..q.n_memory() {
                for x in 0..q.n_states() {
                    let mu = m.at(z, x);
                    for a in 0..q.width() {
                        let mut row = vec![
                            r.iter.to_string(),
                            (i + 1).to_string(),
                            (z + 1).to_string(),
                            (x + 1).to_string(),
                            (a + 1).to_string(),
                            s.get(z, x, a).to_string(),
                            q.get(z, x, a).to_string(),
                        ];
                        row.extend((0..k).map(|j| mu.get(j).map(|v| v.to_string()).unwrap_or_default()));
                        row.push(opt(r.dq));
                        row.push(opt(r.dsigma));
                        w.write_record(&row)?;
                    }
                }
            }
        }
    }
    finish(w)
}

/// Wide policy table for plotting: `iter` then one column
/// `sigma_<agent>_<z>_<x>_<a>` per strategy entry.
pub fn policy_csv(trace: &IterationTrace) -> Result<String> {
    let mut w = writer();
    let Some(first) = trace.records.first() else {
        return finish(w);
    };
    let mut header = vec!["iter".to_string()];
    for (i, t) in first.sigma.agents.iter().enumerate() {
        for z in 0..t.n_memory() {
            for x in 0..t.n_states() {
                for a in 0..t.width() {
                    header.push(format!("sigma_{}_{}_{}_{}", i + 1, z + 1, x + 1, a + 1));
                }
            }
        }
    }
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.iter.to_string()];
        for t in &r.sigma.agents {
            row.extend(t.data().iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

/// Signal counts: a `#` comment line with seed, horizon, burn-in and the
/// generator, then `agent,z,x,s,count,visits,frequency,stderr`. Frequency and
/// standard error are blank where the state was never visited.
pub fn counts_csv(traj: &Trajectory) -> Result<String> {
    let emp = empirical_model(traj);
    let mut w = writer();
    w.write_record(["agent", "z", "x", "s", "count", "visits", "frequency", "stderr"])?;
    for (i, (c, e)) in traj.counts.iter().zip(&emp.agents).enumerate() {
        let (n_memory, n_states, n_signals) = c.dims();
        for z in 0..n_memory {
            for x in 0..n_states {
                let freq = e.frequency(z, x);
                let se = e.stderr(z, x);
                for s in 0..n_signals {
                    w.write_record(&[
                        (i + 1).to_string(),
                        (z + 1).to_string(),
                        (x + 1).to_string(),
                        (s + 1).to_string(),
                        c.count(z, x, s).to_string(),
                        c.visits(z, x).to_string(),
                        opt(freq.map(|f| f[s])),
                        opt(se.map(|f| f[s])),
                    ])?;
                }
            }
        }
    }
    let body = finish(w)?;
    Ok(format!(
        "# seed={} horizon={} burn_in={} rng={}\n{body}",
        traj.seed, traj.horizon, traj.burn_in, RNG_ALGORITHM
    ))
}

/// `agent,z,x,s,probability` for a model.
pub fn model_csv(mu: &ConsistentModel) -> Result<String> {
    let mut w = writer();
    w.write_record(["agent", "z", "x", "s", "probability"])?;
    for (i, t) in mu.agents.iter().enumerate() {
        for z in 0..t.n_memory() {
            for x in 0..t.n_states() {
                for (s, p) in t.at(z, x).iter().enumerate() {
                    w.write_record(&[
                        (i + 1).to_string(),
                        (z + 1).to_string(),
                        (x + 1).to_string(),
                        (s + 1).to_string(),
                        p.to_string(),
                    ])?;
                }
            }
        }
    }
    finish(w)
}
