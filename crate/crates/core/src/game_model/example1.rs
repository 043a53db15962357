use super::{AgentSpec, ConvexFamily, GameSpec, MemoryRule, RewardTable};
use crate::kernel::StochasticKernel;

fn k(rows: &[&[f64]]) -> StochasticKernel {
    StochasticKernel::from_rows(rows.iter().map(|r| r.to_vec()).collect())
        .expect("literal matrices are rectangular")
}

/// The two-agent, four-environment-state benchmark game.
///
/// The returned family carries the coupled kernels `Φ_C(a)` and `φ_{C,i}`,
/// the uncoupled `Φ_U` and the uniform `φ_U(x, s) = 1/|X_i|`. Both agents
/// remember their last signal and discount at 0.7.
pub fn build_example1() -> ConvexFamily {
    let signal_1 = k(&[&[0.98, 0.02], &[0.09, 0.91], &[0.79, 0.21], &[0.74, 0.26]]);
    let signal_2 = k(&[&[0.93, 0.07], &[0.82, 0.18], &[0.64, 0.36], &[0.11, 0.89]]);

    let env_u = k(&[
        &[0.36, 0.42, 0.05, 0.17],
        &[0.06, 0.42, 0.33, 0.19],
        &[0.34, 0.03, 0.03, 0.60],
        &[0.39, 0.29, 0.24, 0.08],
    ]);
    // joint actions in lexicographic order (1,1), (1,2), (2,1), (2,2)
    let env_c = vec![
        k(&[
            &[0.29, 0.09, 0.15, 0.47],
            &[0.11, 0.06, 0.19, 0.64],
            &[0.25, 0.29, 0.21, 0.25],
            &[0.11, 0.40, 0.02, 0.47],
        ]),
        k(&[
            &[0.06, 0.51, 0.20, 0.23],
            &[0.48, 0.11, 0.30, 0.11],
            &[0.31, 0.39, 0.22, 0.08],
            &[0.32, 0.01, 0.24, 0.43],
        ]),
        k(&[
            &[0.39, 0.17, 0.20, 0.24],
            &[0.20, 0.48, 0.05, 0.27],
            &[0.09, 0.48, 0.30, 0.13],
            &[0.23, 0.07, 0.22, 0.48],
        ]),
        k(&[
            &[0.22, 0.27, 0.26, 0.25],
            &[0.09, 0.35, 0.47, 0.09],
            &[0.38, 0.27, 0.22, 0.13],
            &[0.23, 0.04, 0.44, 0.29],
        ]),
    ];

    // rows (x, s) = (1,1), (1,2), (2,1), (2,2)
    let local_1 = vec![
        k(&[&[0.80, 0.20], &[0.26, 0.74], &[0.84, 0.16], &[0.93, 0.07]]),
        k(&[&[0.82, 0.18], &[0.60, 0.40], &[0.24, 0.76], &[0.35, 0.65]]),
    ];
    let local_2 = vec![
        k(&[&[0.34, 0.66], &[0.62, 0.38], &[0.64, 0.36], &[0.62, 0.38]]),
        k(&[&[0.17, 0.83], &[0.61, 0.39], &[0.37, 0.63], &[0.48, 0.52]]),
    ];

    let reward_1 = RewardTable::state_independent(2, &[vec![-48.0, -50.0], vec![-36.0, 1.0]])
        .expect("2x2 reward");
    let reward_2 = RewardTable::state_independent(2, &[vec![31.0, -100.0], vec![-21.0, -37.0]])
        .expect("2x2 reward");

    let agent = |signal_kernel, local_kernels, reward| AgentSpec {
        n_states: 2,
        n_actions: 2,
        n_signals: 2,
        n_memory: 2,
        signal_kernel,
        local_kernels,
        uncoupled_local: Some(StochasticKernel::uniform(4, 2)),
        memory_rule: MemoryRule::last_signal(2),
        reward,
        discount: 0.7,
        temperature: 1.0,
    };

    let base = GameSpec {
        n_env: 4,
        env_kernels: env_c,
        uncoupled_env: Some(env_u),
        agents: vec![
            agent(signal_1, local_1, reward_1),
            agent(signal_2, local_2, reward_2),
        ],
    };
    ConvexFamily::new(base).expect("references are present")
}
