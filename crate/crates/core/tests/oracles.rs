use netgibbs::centralized::{best_static_comparator, centralized_regret, instantaneous_loss};
use netgibbs::glauber::{empirical_distributions, evolve_exact, mean_cumulative_cost, simulate_replica};
use netgibbs::measures::{tv_distance, Dist};
use netgibbs::schedule::{generate_iid, generate_shocks};
use netgibbs::theory::{compute_t0_t1, lipschitz_constant, p_poly_next};
use netgibbs::{Error, Instance, NetworkCost, NetworkGraph, ProfileSpace, RunningAvgCost, DEFAULT_DENSE_CAP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dist(n: usize, rng: &mut ChaCha8Rng) -> Dist {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    Dist::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Minimizes `sum_t l_t(nu)` by projected gradient descent on the simplex.
fn numeric_comparator(sum_f: &[f64], horizon: f64, beta: f64, mu0: &[f64]) -> f64 {
    let n = sum_f.len();
    let objective = |nu: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                let kl = if nu[i] > 0.0 {
                    nu[i] * (nu[i] / mu0[i]).ln()
                } else {
                    0.0
                };
                beta * nu[i] * sum_f[i] + horizon * kl
            })
            .sum()
    };
    let mut nu = vec![1.0 / n as f64; n];
    let step = 1e-3;
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n)
            .map(|i| beta * sum_f[i] + horizon * ((nu[i].max(1e-300) / mu0[i]).ln() + 1.0))
            .collect();
        let next: Vec<f64> = nu.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
        let next = project_simplex(&next);
        let moved: f64 = next.iter().zip(&nu).map(|(a, b)| (a - b).abs()).sum();
        nu = next;
        if moved < 1e-15 {
            break;
        }
    }
    objective(&nu)
}

#[test]
fn comparator_matches_numeric_minimum() {
    let inst = Instance::canonical();
    let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
    for seed in 0..3 {
        let s = generate_iid(&inst.graph, 2, 5, seed, 1.0).unwrap();
        let (nu_star, value) = best_static_comparator(s.costs(), &inst, &dense).unwrap();
        let mut sum = vec![0.0; 16];
        for f in s.costs() {
            for (a, b) in sum.iter_mut().zip(f.dense_values(&inst.graph, &dense.space)) {
                *a += b;
            }
        }
        let numeric = numeric_comparator(&sum, 5.0, 0.2, dense.mu0.probs());
        assert!((numeric - value).abs() < 1e-6, "{numeric} vs {value}");

        let total = |nu: &Dist| -> f64 {
            s.costs()
                .iter()
                .map(|f| instantaneous_loss(nu, &f.dense_values(&inst.graph, &dense.space), 0.2, &dense.mu0).unwrap())
                .sum()
        };
        assert!((total(&nu_star) - value).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let best_random = (0..10_000)
            .map(|_| total(&random_dist(16, &mut rng)))
            .fold(f64::INFINITY, f64::min);
        assert!(value <= best_random);
    }
}

#[test]
fn regret_ledger_is_consistent() {
    let inst = Instance::canonical();
    let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
    let s = generate_iid(&inst.graph, 2, 40, 11, 1.0).unwrap();
    let ledger = centralized_regret(s.costs(), &inst, &dense).unwrap();
    let mut cumulative = 0.0;
    for t in 0..40 {
        cumulative += ledger.per_round_losses[t];
        assert!((ledger.cumulative_regret[t] - (cumulative - ledger.comparator_values[t])).abs() < 1e-12);
        let (_, prefix_value) = best_static_comparator(&s.costs()[..=t], &inst, &dense).unwrap();
        assert!((prefix_value - ledger.comparator_values[t]).abs() < 1e-12);
        assert!(ledger.cumulative_regret[t] <= ledger.bound_values[t]);
    }
}

#[test]
fn sup_norm_and_lipschitz_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let q = rng.random_range(2..=3);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        let g = NetworkGraph::new(n, &edges).unwrap();
        let phi = (0..n)
            .map(|_| (0..q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let psi = (0..g.num_edges())
            .map(|_| (0..q * q).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let f = NetworkCost::new(&g, q, phi, psi).unwrap();
        let space = ProfileSpace::new(n, q, DEFAULT_DENSE_CAP).unwrap();
        let values = f.dense_values(&g, &space);
        let scale = n as f64 * (g.max_degree() as f64 + 1.0);
        assert!(values.iter().all(|v| v.abs() <= scale));
        assert!(lipschitz_constant(&values, &space) <= 2.0 * scale);
    }
}

#[test]
fn polynomial_reaches_any_level() {
    for &u in &[0.1, 0.3, 0.5, 0.7, 0.85, 0.9] {
        let mut p = 1.0;
        let mut t = 1;
        while p >= 1e-6 {
            p = p_poly_next(p, t, u);
            t += 1;
        }
        assert!(t < 100_000_000);
        let (t0, t1) = compute_t0_t1(1.0, u).unwrap();
        assert!(t0 <= t1);
    }
}

#[test]
fn monte_carlo_tracks_exact_evolution() {
    let inst = Instance::canonical();
    let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
    let s = generate_iid(&inst.graph, 2, 20, 3, 1.0).unwrap();
    let exact = evolve_exact(&inst, &dense, s.costs()).unwrap();
    let empirical = empirical_distributions(&inst, &dense, s.costs(), 17, 20_000, &[0, 5, 20]).unwrap();
    for (emp, t) in empirical.iter().zip([0, 5, 20]) {
        assert!(tv_distance(emp, &exact[t]).unwrap() < 0.04, "t = {t}");
    }
}

#[test]
fn zero_temperature_limit_resamples_defaults() {
    let inst = Instance::uniform(NetworkGraph::path(4), 2, 0.0).unwrap();
    let s = generate_iid(&inst.graph, 2, 30, 4, 1.0).unwrap();
    let mut ones = [0usize; 4];
    let replicas = 4000;
    for r in 0..replicas {
        let path = simulate_replica(&inst, s.costs(), 8, r).unwrap();
        for (v, &a) in path.profiles[30].iter().enumerate() {
            ones[v] += a;
        }
    }
    for count in ones {
        assert!((count as f64 / replicas as f64 - 0.5).abs() < 0.04);
    }
}

#[test]
fn sample_path_proxy_matches_exact_expectation() {
    let inst = Instance::canonical();
    let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
    let s = generate_iid(&inst.graph, 2, 15, 6, 1.0).unwrap();
    let mus = evolve_exact(&inst, &dense, s.costs()).unwrap();
    let exact: f64 = s
        .costs()
        .iter()
        .enumerate()
        .map(|(t, f)| mus[t + 1].expect(&f.dense_values(&inst.graph, &dense.space)))
        .sum();
    let proxy = mean_cumulative_cost(&inst, s.costs(), 5, 20_000).unwrap();
    assert!((proxy - exact).abs() < 0.15, "{proxy} vs {exact}");
}

#[test]
fn dense_cap_is_enforced() {
    let inst = Instance::uniform(NetworkGraph::path(17), 2, 0.1).unwrap();
    assert!(matches!(
        inst.dense(DEFAULT_DENSE_CAP),
        Err(Error::DenseCapExceeded { .. })
    ));
}

#[test]
fn iid_entries_are_uniform() {
    let g = NetworkGraph::path(5);
    let s = generate_iid(&g, 2, 5_000, 77, 1.0).unwrap();
    let mut draws: Vec<f64> = s
        .costs()
        .iter()
        .flat_map(|f| {
            f.vertex_costs()
                .iter()
                .chain(f.edge_costs())
                .flatten()
                .copied()
                .collect::<Vec<_>>()
        })
        .collect();
    assert!(draws.len() >= 100_000);
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let cdf = (x + 1.0) / 2.0;
            ((i as f64 + 1.0) / n - cdf).abs().max((cdf - i as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");
}

#[test]
fn shock_counts_follow_epoch_mean() {
    let g = NetworkGraph::path(4);
    for &mean in &[2usize, 5, 20] {
        let horizon = 200;
        let seeds = 1000;
        let total: usize = (0..seeds)
            .map(|seed| {
                generate_shocks(&g, 2, horizon, seed, mean)
                    .unwrap()
                    .shock_rounds()
                    .len()
            })
            .sum();
        let average = total as f64 / seeds as f64;
        let expected = horizon as f64 / mean as f64;
        assert!(
            (average - expected).abs() <= 0.1 * expected,
            "mean {mean}: {average} vs {expected}"
        );
    }
}

#[test]
fn long_epochs_converge_to_static_gibbs() {
    let inst = Instance::canonical();
    let dense = inst.dense(DEFAULT_DENSE_CAP).unwrap();
    let s = generate_shocks(&inst.graph, 2, 400, 1, 100_000).unwrap();
    assert!(s.shock_rounds().is_empty());
    let f = s.costs()[0].dense_values(&inst.graph, &dense.space);
    let target = netgibbs::measures::gibbs(&dense.mu0, &f.iter().map(|v| -0.2 * v).collect::<Vec<_>>()).unwrap();
    let avg = RunningAvgCost::from_costs(&inst.graph, 2, s.costs());
    let pi = netgibbs::centralized::centralized_strategy_closed_form(&avg, &inst.graph, &dense, 0.2).unwrap();
    assert!(tv_distance(&pi, &target).unwrap() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn running_average_stays_admissible(seed in 0u64..10_000, horizon in 1usize..40) {
        let g = NetworkGraph::cycle(5).unwrap();
        let s = generate_iid(&g, 3, horizon, seed, 1.0).unwrap();
        let mut avg = RunningAvgCost::new(&g, 3);
        for f in s.costs() {
            avg.update_in_place(f);
        }
        let batch = RunningAvgCost::from_costs(&g, 3, s.costs());
        prop_assert!(avg.avg().max_abs_diff(batch.avg()) < 1e-12);
        prop_assert!(avg.avg().validate(&g).is_ok());
    }

    #[test]
    fn schedules_round_trip(seed in 0u64..10_000, horizon in 0usize..10, q in 1usize..4) {
        let g = NetworkGraph::path(3);
        let s = generate_iid(&g, q, horizon, seed, 0.7).unwrap();
        let back = netgibbs::CostSchedule::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }
}
