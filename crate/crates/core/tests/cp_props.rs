use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twr_precoding::cp::{self, AllocationMode, CpOptions, ParallelizedChannels, PowerAllocation};
use twr_precoding::iterative::{self, IterativeOptions};
use twr_precoding::linalg;
use twr_precoding::model::{self, ChannelSet, Side, SystemConfig};

fn system(n: usize, db: f64) -> SystemConfig<f64> {
    let s = n as f64 / 10f64.powf(db / 10.0);
    SystemConfig::new(n, n, n as f64, n as f64, n as f64, s, s, s).unwrap()
}

fn channels(n: usize, rng: &mut ChaCha8Rng) -> ChannelSet<f64> {
    let h1: linalg::ComplexMatrix<f64> = linalg::complex_gaussian(n, n, rng);
    let h2: linalg::ComplexMatrix<f64> = linalg::complex_gaussian(n, n, rng);
    ChannelSet {
        g1: h1.transpose(),
        g2: h2.transpose(),
        h1,
        h2,
    }
}

fn random_split(n: usize, total: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x * total / s).collect()
}

/// Random allocation using a random fraction of every budget.
fn random_allocation(c: &SystemConfig<f64>, pc: &ParallelizedChannels<f64>, rng: &mut ChaCha8Rng) -> PowerAllocation<f64> {
    let n = pc.streams();
    let p_a1 = random_split(n, c.tau1 * rng.random_range(0.01..1.0), rng);
    let p_a2 = random_split(n, c.tau2 * rng.random_range(0.01..1.0), rng);
    let mut pa = PowerAllocation {
        p_ar: random_split(n, 1.0, rng),
        p_a1,
        p_a2,
    };
    let scale = c.taur * rng.random_range(0.01..1.0) / cp::relay_usage(c, pc, &pa);
    pa.p_ar.iter_mut().for_each(|x| *x *= scale);
    pa
}

#[test]
fn bound_dominates_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..1000 {
        let n = 2 + k % 2;
        let c = system(n, rng.random_range(-5.0..30.0));
        let ch = channels(n, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let pa = random_allocation(&c, &pc, &mut rng);
        let p = cp::assemble_precoders(&c, &ch, &pc, &pa).unwrap();
        // the diagonal relay usage is the exact relay power of the precoders
        let used = model::relay_power(&c, &ch, &p);
        assert!((used - cp::relay_usage(&c, &pc, &pa)).abs() <= 1e-9 * c.taur, "{k}");
        model::check_power(&c, &ch, &p).unwrap();
        for side in Side::BOTH {
            let exact = model::mmse_residual(&c, &ch, &p, side).unwrap();
            let bound = cp::upper_bound_side(&c, &pc, &pa, side);
            assert!(bound >= exact - 1e-9, "{k}: bound {bound} < {exact}");
        }
    }
}

/// Bound at relay powers `(x, (τr − c0·x)/c1)` along the budget line.
fn along_line(c: &SystemConfig<f64>, pc: &ParallelizedChannels<f64>, pa: &PowerAllocation<f64>, coef: [f64; 2], x: f64) -> f64 {
    let y = ((c.taur - coef[0] * x) / coef[1]).max(0.0);
    let p = PowerAllocation {
        p_ar: vec![x, y],
        ..pa.clone()
    };
    cp::upper_bound_mse(c, pc, &p)
}

fn relay_coefficient(c: &SystemConfig<f64>, pc: &ParallelizedChannels<f64>, pa: &PowerAllocation<f64>, k: usize) -> f64 {
    let mut unit = pa.clone();
    unit.p_ar = vec![0.0; pc.streams()];
    unit.p_ar[k] = 1.0;
    cp::relay_usage(c, pc, &unit)
}

#[test]
fn symmetric_link_gets_symmetric_source_powers() {
    let c = system(2, 12.0);
    let eye = linalg::identity::<f64>(2);
    let ch = ChannelSet {
        h1: eye.clone(),
        h2: eye.clone(),
        g1: eye.clone(),
        g2: eye,
    };
    let pc = cp::parallelize(&c, &ch).unwrap();
    let src = cp::source_power_update(&c, &pc, &[0.4, 0.4], 1e-13).unwrap();
    for (x, y) in src.p_a1.iter().zip(&src.p_a2) {
        assert!((x - y).abs() <= 1e-9, "{:?} vs {:?}", src.p_a1, src.p_a2);
    }
    assert!((src.p_a1[0] - src.p_a1[1]).abs() <= 1e-9, "{:?}", src.p_a1);
}

#[test]
fn waterfill_matches_grid_search() {
    const POINTS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for inst in 0..50 {
        let c = system(2, rng.random_range(-5.0..30.0));
        let ch = channels(2, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let pa = random_allocation(&c, &pc, &mut rng);
        let wf = cp::relay_waterfill(&c, &pc, &pa.p_a1, &pa.p_a2, 1e-13).unwrap();
        let sol = PowerAllocation {
            p_ar: wf.p_ar.clone(),
            ..pa.clone()
        };
        let ours = cp::upper_bound_mse(&c, &pc, &sol);
        let coef = [relay_coefficient(&c, &pc, &pa, 0), relay_coefficient(&c, &pc, &pa, 1)];

        // the bound falls in every relay power, so the budget is spent
        let used = cp::relay_usage(&c, &pc, &sol);
        assert!((used - c.taur).abs() <= 1e-9 * c.taur, "instance {inst}: {used}");

        let xmax = c.taur / coef[0];
        let grid = (0..=POINTS)
            .map(|i| along_line(&c, &pc, &pa, coef, xmax * i as f64 / POINTS as f64))
            .fold(f64::INFINITY, f64::min);
        assert!(ours <= grid + 1e-12, "instance {inst}: {ours} vs grid {grid}");
        assert!(grid - ours <= 1e-6, "instance {inst}: {ours} vs grid {grid}");

        // stationarity on active streams, no gain from switching on idle ones
        for k in 0..2 {
            let x = wf.p_ar[k];
            let h = 1e-6 * (x + c.taur / coef[k]);
            let bump = |dx: f64| {
                let mut p = sol.clone();
                p.p_ar[k] = (x + dx).max(0.0);
                cp::upper_bound_mse(&c, &pc, &p)
            };
            let price = wf.mu * coef[k];
            if x > h {
                let slope = -(bump(h) - bump(-h)) / (2.0 * h);
                assert!((slope - price).abs() <= 1e-4 * price.max(1e-12), "instance {inst}, stream {k}: {slope} vs {price}");
            } else {
                let slope = -(bump(h) - bump(0.0)) / h;
                assert!(slope <= price * (1.0 + 1e-4) + 1e-12, "instance {inst}, idle stream {k}");
            }
        }
    }
}

#[test]
fn source_update_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for inst in 0..40 {
        let c = system(2, rng.random_range(-5.0..30.0));
        let ch = channels(2, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let start = random_allocation(&c, &pc, &mut rng);
        let src = cp::source_power_update(&c, &pc, &start.p_ar, 1e-13).unwrap();
        let sol = PowerAllocation {
            p_a1: src.p_a1.clone(),
            p_a2: src.p_a2.clone(),
            p_ar: start.p_ar.clone(),
        };
        sol.check(&c, &pc).unwrap();
        let ours = cp::upper_bound_mse(&c, &pc, &sol);

        // no feasible point of a coarse grid (or the start) does better
        assert!(ours <= cp::upper_bound_mse(&c, &pc, &start) + 1e-12);
        const STEPS: usize = 24;
        for i in 0..=STEPS {
            for j in 0..=STEPS - i {
                for k in 0..=STEPS {
                    for l in 0..=STEPS - k {
                        let f = |a: usize| a as f64 / STEPS as f64;
                        let p = PowerAllocation {
                            p_a1: vec![c.tau1 * f(i), c.tau1 * f(j)],
                            p_a2: vec![c.tau2 * f(k), c.tau2 * f(l)],
                            p_ar: start.p_ar.clone(),
                        };
                        if cp::relay_usage(&c, &pc, &p) > c.taur {
                            continue;
                        }
                        assert!(ours <= cp::upper_bound_mse(&c, &pc, &p) + 1e-12, "instance {inst}");
                    }
                }
            }
        }

        // KKT: ∂J/∂p + ν_j + μ·d ≥ 0, with equality on active streams
        let [nu1, nu2, mu] = src.multipliers;
        for (side, nu) in [(Side::One, nu1), (Side::Two, nu2)] {
            for k in 0..2 {
                let get = |p: &PowerAllocation<f64>| match side {
                    Side::One => p.p_a1[k],
                    Side::Two => p.p_a2[k],
                };
                let y = get(&sol);
                let h = 1e-6 * (y + 1.0);
                let bump = |dy: f64| {
                    let mut p = sol.clone();
                    let v = match side {
                        Side::One => &mut p.p_a1[k],
                        Side::Two => &mut p.p_a2[k],
                    };
                    *v = (y + dy).max(0.0);
                    cp::upper_bound_mse(&c, &pc, &p)
                };
                let d = start.p_ar[k] * pc.p_h(side, k);
                let price = nu + mu * d;
                if y > h {
                    let grad = (bump(h) - bump(-h)) / (2.0 * h);
                    assert!((grad + price).abs() <= 1e-4 * price.max(1e-9), "instance {inst}: {grad} vs {price}");
                } else {
                    let grad = (bump(h) - bump(0.0)) / h;
                    assert!(grad + price >= -1e-4 * price.max(1e-9), "instance {inst}: idle {grad} vs {price}");
                }
            }
        }
        // complementary slackness
        let s1: f64 = sol.p_a1.iter().sum();
        let s2: f64 = sol.p_a2.iter().sum();
        assert!(nu1 == 0.0 || (s1 - c.tau1).abs() <= 1e-9 * c.tau1);
        assert!(nu2 == 0.0 || (s2 - c.tau2).abs() <= 1e-9 * c.tau2);
        let used = cp::relay_usage(&c, &pc, &sol);
        assert!(mu == 0.0 || (used - c.taur).abs() <= 1e-8 * c.taur);
    }
}

#[test]
fn bound_is_convex_in_each_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..100 {
        let c = system(2, rng.random_range(-5.0..30.0));
        let ch = channels(2, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let pa = random_allocation(&c, &pc, &mut rng);
        for which in 0..3 {
            for k in 0..2 {
                let at = |v: f64| {
                    let mut p = pa.clone();
                    match which {
                        0 => p.p_a1[k] = v,
                        1 => p.p_a2[k] = v,
                        _ => p.p_ar[k] = v,
                    }
                    cp::upper_bound_mse(&c, &pc, &p)
                };
                let v = [pa.p_a1[k], pa.p_a2[k], pa.p_ar[k]][which];
                let h = 1e-3 * v.max(1e-6);
                let second = (at(v + h) - 2.0 * at(v) + at((v - h).max(0.0))) / (h * h);
                // rounding in the second difference is about eps·J/h²
                let noise = 1e-12 * at(v) / (h * h);
                assert!(second >= -noise - 1e-9, "block {which}: {second}");
            }
        }
    }
}

#[test]
fn optimized_allocation_improves_on_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..30 {
        let c = system(2, rng.random_range(0.0..25.0));
        let ch = channels(2, &mut rng);
        let (pu, tu) = cp::run_algorithm2(
            &c,
            &ch,
            &CpOptions {
                mode: AllocationMode::Uniform,
                ..CpOptions::default()
            },
        )
        .unwrap();
        let (po, to) = cp::run_algorithm2(&c, &ch, &CpOptions::default()).unwrap();
        assert!(to.converged);
        assert!(to.final_bound() <= tu.final_bound() + 1e-12);
        assert!(to.half_steps.windows(2).all(|w| w[1] <= w[0]));
        for (b, j) in to.upper_bound.iter().zip(&to.total_mse) {
            assert!(b + 1e-9 >= *j);
        }
        model::check_power(&c, &ch, &po).unwrap();
        model::check_power(&c, &ch, &pu).unwrap();
    }
}

#[test]
fn iterative_design_usually_beats_parallelization() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let mut wins = 0;
    let trials = 40;
    for _ in 0..trials {
        let c = system(2, 15.0);
        let ch = channels(2, &mut rng);
        let (_, t1) = iterative::run_algorithm1(&c, &ch, &IterativeOptions::default()).unwrap();
        let (_, t2) = cp::run_algorithm2(&c, &ch, &CpOptions::default()).unwrap();
        wins += usize::from(t1.final_mse() <= t2.final_mse() + 1e-9);
    }
    assert!(wins * 10 >= trials * 9, "{wins}/{trials}");
}

#[test]
fn parallelization_requires_square_relay() {
    let s = 0.1;
    let c = SystemConfig::new(2, 3, 2.0, 2.0, 2.0, s, s, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let ch = ChannelSet {
        h1: linalg::complex_gaussian(3, 2, &mut rng),
        h2: linalg::complex_gaussian(3, 2, &mut rng),
        g1: linalg::complex_gaussian(2, 3, &mut rng),
        g2: linalg::complex_gaussian(2, 3, &mut rng),
    };
    assert!(cp::parallelize(&c, &ch).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_allocation_spends_every_budget(seed in any::<u64>(), db in -5.0f64..30.0, n in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = system(n, db);
        let ch = channels(n, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let pa = cp::uniform_allocation(&c, &pc);
        prop_assert!((pa.p_a1.iter().sum::<f64>() - c.tau1).abs() < 1e-12);
        prop_assert!((cp::relay_usage(&c, &pc, &pa) - c.taur).abs() < 1e-9);
        prop_assert!(pa.p_ar.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn waterfill_spends_relay_budget(seed in any::<u64>(), db in -5.0f64..30.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = system(3, db);
        let ch = channels(3, &mut rng);
        let pc = cp::parallelize(&c, &ch).unwrap();
        let pa = random_allocation(&c, &pc, &mut rng);
        let wf = cp::relay_waterfill(&c, &pc, &pa.p_a1, &pa.p_a2, 1e-13).unwrap();
        let sol = PowerAllocation { p_ar: wf.p_ar, ..pa.clone() };
        prop_assert!((cp::relay_usage(&c, &pc, &sol) - c.taur).abs() <= 1e-9 * c.taur);
        prop_assert!(cp::upper_bound_mse(&c, &pc, &sol) <= cp::upper_bound_mse(&c, &pc, &pa) + 1e-12);
    }
}
