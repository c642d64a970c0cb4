use std::collections::BTreeMap;

use colopt::anneal::{anneal, anneal_traced, enumerate_exact, kp_dp, Schedule};
use colopt::encode::{
    co_qubo, ising_to_qubo, kp_qubo_log, kp_qubo_onehot, kp_qubo_unbalanced, normalization_factor,
    qubo_to_ising, spins_of, CoEncoding, CoEncodingOptions, ConstraintId, PenaltyWeights,
    QuboModel, VariableLayout,
};
use colopt::harness::{generate_instance, GeneratorSpec};
use colopt::lpref::{solve_lp, LpStatus, CERTIFICATE_TOL};
use colopt::model::{
    decode_solution, evaluate_allocation, Account, AllocationMatrix, Asset, CollateralInstance,
    Duration, KnapsackInstance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_qubo(n: usize, density: f64, rng: &mut ChaCha8Rng) -> QuboModel<f64> {
    let linear = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut quad = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                quad.insert((i, j), rng.gen_range(-5.0..5.0));
            }
        }
    }
    let layout = VariableLayout {
        total: n,
        ..VariableLayout::default()
    };
    QuboModel::new(linear, quad, rng.gen_range(-3.0..3.0), layout).unwrap()
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

fn tiny_instance(n: usize, m: usize, seed: u64) -> CollateralInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assets = (0..n)
        .map(|_| Asset {
            quantity: rng.gen_range(1.0..20.0),
            unit_value: rng.gen_range(1.0..5.0),
            tier: [0.2, 0.5, 0.8][rng.gen_range(0..3)],
        })
        .collect::<Vec<_>>();
    let total: f64 = assets.iter().map(|a| a.market_value()).sum();
    let accounts = (0..m)
        .map(|j| Account {
            exposure: total * rng.gen_range(0.05..0.3),
            duration: if j % 2 == 0 { Duration::Short } else { Duration::Long },
        })
        .collect();
    let haircut = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0.85..1.0)).collect())
        .collect();
    CollateralInstance::new(assets, accounts, haircut).unwrap()
}

fn assert_ising_equivalent(q: &QuboModel<f64>, rng: &mut ChaCha8Rng) {
    let ising = qubo_to_ising(q);
    for _ in 0..1000 {
        let x = random_bits(q.dimension(), rng);
        let e = q.energy(&x);
        let h = ising.energy(&spins_of(&x));
        assert!((e - h).abs() <= 1e-9 * (1.0 + e.abs()), "{e} vs {h}");
    }
    let back = ising_to_qubo(&ising);
    // linear terms pass through sums of couplings, so compare at the model's scale
    let scale = q
        .linear()
        .iter()
        .chain(q.quadratic().values())
        .fold(1.0f64, |m, c| m.max(c.abs()));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * scale;
    for (i, (&a, &b)) in back.linear().iter().zip(q.linear()).enumerate() {
        assert!(close(a, b), "linear {i}: {a} vs {b}");
    }
    assert_eq!(back.quadratic().len(), q.quadratic().len());
    for (k, &v) in q.quadratic() {
        assert!(close(back.quadratic()[k], v));
    }
    // the offset accumulates every coefficient once
    let total = q.offset().abs()
        + q.linear().iter().chain(q.quadratic().values()).map(|c| c.abs()).sum::<f64>();
    assert!((back.offset() - q.offset()).abs() <= 1e-12 * total.max(1.0));
}

#[test]
fn ising_equivalence_on_encoder_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kp = KnapsackInstance::ten_item_benchmark();
    let inst = generate_instance(&GeneratorSpec::with_seed(1)).unwrap();
    let mut models = vec![
        kp_qubo_log(&kp, 1e4).unwrap(),
        kp_qubo_onehot(&kp, 0.1, 1e3).unwrap(),
        kp_qubo_unbalanced(&kp, 0.96, 0.0371, 1.0).unwrap(),
    ];
    for enc in [CoEncoding::Balanced, CoEncoding::Unbalanced] {
        let w = PenaltyWeights::new(vec![1.0; 5]).unwrap();
        for normalize in [false, true] {
            let opts = CoEncodingOptions {
                bits: 7,
                normalize,
                cost_quantity_weighted: false,
            };
            models.push(co_qubo(enc, &inst, &opts, &w).unwrap());
        }
    }
    for q in &models {
        assert_ising_equivalent(q, &mut rng);
    }
}

#[test]
fn kp_log_ising_fields() {
    // Log-encoded knapsack: item fields h_j = -v_j / 2 + l0 K w_j with
    // K = sum_k 2^k / 2 + sum_i w_i / 2 - W, couplings -l0 w_j w_k / 2.
    let kp = KnapsackInstance::new(vec![3, 5, 2], vec![4, 7, 1], 6).unwrap();
    let l0 = 2.5;
    let q = kp_qubo_log(&kp, l0).unwrap();
    let ising = qubo_to_ising(&q);
    let slack: Vec<f64> = q.layout().slack[0].weights.clone();
    let w: Vec<f64> = kp.weights().iter().map(|&v| v as f64).collect();
    let k = slack.iter().sum::<f64>() / 2.0 + w.iter().sum::<f64>() / 2.0 - 6.0;
    for (j, &v) in kp.values().iter().enumerate() {
        let expected = -(v as f64) / 2.0 + l0 * k * w[j];
        assert!((ising.h[j] - expected).abs() < 1e-12, "h_{j}");
    }
    assert!((ising.j[&(0, 1)] + l0 * w[0] * w[1] / 2.0).abs() < 1e-12);
    let sq: f64 = w.iter().chain(&slack).map(|x| x * x).sum();
    let vsum: f64 = kp.values().iter().map(|&v| v as f64).sum();
    let eps = l0 * (k * k + sq / 4.0) - vsum / 2.0;
    assert!((ising.epsilon - eps).abs() < 1e-9);
}

#[test]
fn delta_energy_matches_full_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = random_qubo(200, 0.05, &mut rng);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let mut x = random_bits(200, &mut rng);
        let i = rng.gen_range(0..200);
        let before = q.energy(&x);
        let d = q.delta_energy(&x, i).unwrap();
        x[i] ^= 1;
        worst = worst.max((q.energy(&x) - before - d).abs());
        let back = q.delta_energy(&x, i).unwrap();
        assert!((d + back).abs() < 1e-9);
    }
    assert!(worst <= 1e-9, "max deviation {worst}");
    assert!(q.delta_energy(&vec![0; 200], 200).is_err());
}

#[test]
fn delta_energy_example() {
    let mut quad = BTreeMap::new();
    quad.insert((0, 1), 2.0);
    let layout = VariableLayout {
        total: 2,
        ..VariableLayout::default()
    };
    let q = QuboModel::new(vec![1.0, 0.0], quad, 0.0, layout).unwrap();
    assert_eq!(colopt::anneal::delta_energy(&q, &[0, 1], 0).unwrap(), 3.0);
}

#[test]
fn ising_ground_energy_matches_qubo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let q = random_qubo(10, 0.4, &mut rng);
        let ising = qubo_to_ising(&q);
        let exact = enumerate_exact(&q, 24).unwrap();
        let spin_min = (0..1u32 << 10)
            .map(|mask| {
                let s: Vec<i8> = (0..10).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
                ising.energy(&s)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((exact.ground_energy - spin_min).abs() < 1e-9);
    }
}

#[test]
fn annealer_finds_small_ground_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = random_qubo(12, 0.5, &mut rng);
    let exact = enumerate_exact(&q, 24).unwrap();
    let hits = (0..10u64)
        .filter(|&seed| {
            let s = anneal(&q, &Schedule::with_seed(seed)).unwrap();
            (s.best().energy - exact.ground_energy).abs() < 1e-9
        })
        .count();
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn anneal_is_thread_count_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_qubo(40, 0.2, &mut rng);
    let sched = Schedule {
        sweeps: 100,
        reads: 16,
        seed: 9,
        ..Schedule::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| anneal(&q, &sched).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn f32_models_anneal() {
    let kp = KnapsackInstance::ten_item_benchmark();
    let q = kp_qubo_unbalanced(&kp, 0.96, 0.0371, 1.0).unwrap().cast::<f32>();
    let s = anneal(&q, &Schedule::with_seed(1)).unwrap();
    assert_eq!(kp.evaluate(&s.best().bits), (165, 309));
}

#[test]
fn cost_term_matches_allocation_objective() {
    let inst = generate_instance(&GeneratorSpec::with_seed(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for enc in [CoEncoding::Balanced, CoEncoding::Unbalanced] {
        let opts = CoEncodingOptions {
            bits: 7,
            normalize: true,
            cost_quantity_weighted: false,
        };
        let q = co_qubo(enc, &inst, &opts, &PenaltyWeights::new(vec![3.0; 5]).unwrap()).unwrap();
        let cost = q.term("cost").unwrap();
        for _ in 0..50 {
            // sparse states keep row sums below one
            let x: Vec<u8> = (0..q.dimension()).map(|_| rng.gen_bool(0.05) as u8).collect();
            let alloc = match decode_solution(&x, q.layout(), &inst) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let obj = evaluate_allocation(&alloc, &inst, 0.05).unwrap().objective;
            let weighted = cost.lambda * cost.normalization * cost.raw_value(&x);
            assert!((weighted / (cost.lambda * cost.normalization) - obj).abs() < 1e-9);
        }
    }
}

#[test]
fn consistency_slack_is_complete() {
    // every decision assignment with row sums <= 1 admits a zero-penalty slack
    let inst = tiny_instance(1, 2, 7);
    let q = co_qubo(
        CoEncoding::Balanced,
        &inst,
        &CoEncodingOptions::with_bits(3),
        &PenaltyWeights::balanced(1.0, 1.0, 1.0, 1.0),
    )
    .unwrap();
    let term = q.term("consistency").unwrap();
    let layout = q.layout();
    let dec = layout.decision_bit_count();
    let slack = &layout.slack[0];
    assert!(matches!(slack.constraint, ConstraintId::Consistency { asset: 0 }));
    for mask in 0..1u32 << dec {
        let mut x: Vec<u8> = (0..q.dimension()).map(|k| (k < dec && mask >> k & 1 == 1) as u8).collect();
        let used: u64 = layout.decision.iter().map(|b| b.code(&x)).sum();
        if used > 7 {
            continue;
        }
        let best = (0..1u32 << slack.bits.len())
            .map(|s| {
                for (k, &b) in slack.bits.iter().enumerate() {
                    x[b] = (s >> k & 1) as u8;
                }
                term.raw_value(&x)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best.abs() < 1e-9, "mask {mask}: {best}");
    }
}

#[test]
fn truncation_respects_limits() {
    let mut inst = tiny_instance(3, 2, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..3 {
        for j in 0..2 {
            inst.limits[i][j] = Some(inst.assets[i].quantity * rng.gen_range(0.0..1.2));
        }
    }
    let q = co_qubo(
        CoEncoding::Unbalanced,
        &inst,
        &CoEncodingOptions::with_bits(7),
        &PenaltyWeights::new(vec![1.0; 5]).unwrap(),
    )
    .unwrap();
    for i in 0..3 {
        for j in 0..2 {
            let block = q.layout().pair(i, j).unwrap();
            let max_q = block.max_value();
            assert!(max_q * inst.assets[i].quantity <= inst.limit(i, j).unwrap() + 1e-12);
        }
    }
}

#[test]
fn lp_lower_bounds_feasible_allocations() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20u64 {
        let inst = generate_instance(&GeneratorSpec::with_seed(seed)).unwrap();
        let lp = solve_lp(&inst).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        assert!(lp.certificate.holds(CERTIFICATE_TOL), "{:?}", lp.certificate);
        for _ in 0..20 {
            // spend a random part of each asset's unused share
            let rows: Vec<Vec<f64>> = lp
                .allocation
                .rows()
                .iter()
                .map(|row| {
                    let free = (1.0 - row.iter().sum::<f64>()).max(0.0);
                    let split: Vec<f64> = row.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
                    let total: f64 = split.iter().sum::<f64>().max(1e-12);
                    let t = rng.gen_range(0.0..1.0);
                    row.iter()
                        .zip(&split)
                        .map(|(&q, &s)| (q + free * t * s / total).min(1.0))
                        .collect()
                })
                .collect();
            let q = AllocationMatrix::new(rows).unwrap();
            let r = evaluate_allocation(&q, &inst, 0.0).unwrap();
            if r.feasible_within {
                assert!(r.objective >= lp.objective - 1e-7);
            }
        }
    }
}

#[test]
fn lp_permutation_invariance() {
    let inst = generate_instance(&GeneratorSpec::with_seed(4)).unwrap();
    let lp = solve_lp(&inst).unwrap();
    let perm: Vec<usize> = vec![3, 7, 0, 9, 1, 5, 2, 8, 6, 4];
    let mut shuffled = inst.clone();
    shuffled.assets = perm.iter().map(|&i| inst.assets[i]).collect();
    shuffled.haircut = perm.iter().map(|&i| inst.haircut[i].clone()).collect();
    shuffled.limits = perm.iter().map(|&i| inst.limits[i].clone()).collect();
    let lp2 = solve_lp(&shuffled).unwrap();
    assert!((lp.objective - lp2.objective).abs() < 1e-9);
}

#[test]
fn generated_instances_are_lp_feasible() {
    for seed in 0..10u64 {
        let spec = GeneratorSpec::with_seed(seed);
        let inst = generate_instance(&spec).unwrap();
        inst.validate().unwrap();
        let total: f64 = inst.assets.iter().map(|a| a.market_value()).sum();
        assert!(total * 0.85 > inst.total_exposure());
        assert_eq!(solve_lp(&inst).unwrap().status, LpStatus::Optimal);
    }
}

#[test]
fn traced_best_is_monotone_on_collateral_model() {
    let inst = tiny_instance(2, 2, 10);
    let q = co_qubo(
        CoEncoding::Balanced,
        &inst,
        &CoEncodingOptions::with_bits(4),
        &PenaltyWeights::balanced(1.0, 10.0, 1.0, 1.0),
    )
    .unwrap();
    let (set, traces) = anneal_traced(&q, &Schedule { sweeps: 200, reads: 8, ..Schedule::default() }).unwrap();
    for t in &traces {
        assert!(t.windows(2).all(|w| w[1] <= w[0]));
    }
    for s in &set.samples {
        assert!((q.energy(&s.bits) - s.energy).abs() <= 1e-9 * (1.0 + s.energy.abs()));
    }
}

fn brute_force_kp(w: &[u64], v: &[u64], cap: u64) -> u64 {
    (0..1u32 << w.len())
        .filter_map(|mask| {
            let (mut tw, mut tv) = (0, 0);
            for k in 0..w.len() {
                if mask >> k & 1 == 1 {
                    tw += w[k];
                    tv += v[k];
                }
            }
            (tw <= cap).then_some(tv)
        })
        .max()
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kp_dp_matches_brute_force(
        items in prop::collection::vec((1u64..40, 0u64..60), 0..=20),
        cap in 0u64..200,
    ) {
        let (w, v): (Vec<u64>, Vec<u64>) = items.into_iter().unzip();
        let (best, sel) = kp_dp(&w, &v, cap);
        prop_assert_eq!(best, brute_force_kp(&w, &v, cap));
        let tw: u64 = sel.iter().zip(&w).map(|(&s, &x)| s as u64 * x).sum();
        let tv: u64 = sel.iter().zip(&v).map(|(&s, &x)| s as u64 * x).sum();
        prop_assert!(tw <= cap);
        prop_assert_eq!(tv, best);
    }

    #[test]
    fn random_qubo_ising_round_trip(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_qubo(n, 0.3, &mut rng);
        assert_ising_equivalent(&q, &mut rng);
    }

    #[test]
    fn normalization_preserves_argmin(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_qubo(8, 0.5, &mut rng);
        let mut coeffs: Vec<f64> = q.linear().to_vec();
        coeffs.extend(q.quadratic().values());
        let f = normalization_factor(&coeffs).unwrap();
        let scaled = QuboModel::new(
            q.linear().iter().map(|c| c * f).collect(),
            q.quadratic().iter().map(|(&k, &c)| (k, c * f)).collect(),
            q.offset() * f,
            q.layout().clone(),
        ).unwrap();
        let a = enumerate_exact(&q, 24).unwrap();
        let b = enumerate_exact(&scaled, 24).unwrap();
        prop_assert_eq!(a.ground_states, b.ground_states);
    }

    #[test]
    fn decoded_allocations_stay_on_grid(seed in any::<u64>(), bits in 1u32..8) {
        let inst = tiny_instance(2, 3, seed);
        let q = co_qubo(
            CoEncoding::Unbalanced,
            &inst,
            &CoEncodingOptions::with_bits(bits),
            &PenaltyWeights::new(vec![1.0; 5]).unwrap(),
        ).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u8> = (0..q.dimension()).map(|_| rng.gen_bool(0.2) as u8).collect();
        if let Ok(a) = decode_solution(&x, q.layout(), &inst) {
            let m = ((1u64 << bits) - 1) as f64;
            for &v in a.rows().iter().flatten() {
                prop_assert!(((v * m).round() - v * m).abs() < 1e-9);
            }
        }
    }
}
