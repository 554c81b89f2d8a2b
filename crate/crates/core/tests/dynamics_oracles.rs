use dblrot::analysis::{d_functional, d_functional_naive};
use dblrot::diffchain::DiffChain;
use dblrot::rds::{reversed_image_exact, two_point_orbit, NoiseStream, ParticleEnsemble, SystemConfig};
use dblrot::sets::{IntervalUnion, TorusSet};
use dblrot::stats::two_sample_chi_square;
use dblrot::torus::TorusPoint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval() -> TorusSet {
    IntervalUnion::from_arcs(&[(0.0, 0.3)]).unwrap().into()
}

fn pt(x: f64) -> TorusPoint {
    TorusPoint::on_circle(x).unwrap()
}

#[test]
fn chain_has_the_law_of_the_difference_from_a_uniform_start() {
    let set = interval();
    let cfg = SystemConfig::with_default_v(set.clone()).unwrap();
    let chain = DiffChain::new(set, cfg.v().clone(), 16).unwrap();
    let z0 = pt(0.5);
    let n = 30;
    let trials = 20_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let direct: Vec<i64> = (0..trials)
        .map(|i| {
            let x = pt(rng.random::<f64>());
            let y = pt(x.coords()[0] - 0.5);
            let tr = two_point_orbit(&cfg, &x, &y, n, &NoiseStream::new(7, i)).unwrap();
            i64::from(tr.lattice()[n])
        })
        .collect();
    let modeled: Vec<i64> = (0..trials)
        .map(|i| chain.chain_orbit(&z0, n, &NoiseStream::new(8, i)).unwrap().final_index)
        .collect();
    let r = two_sample_chi_square(&direct, &modeled).unwrap();
    assert!(r.p_value > 1e-3, "{r:?}");
}

#[test]
fn two_point_jumps_follow_half_phi() {
    let set = interval();
    let cfg = SystemConfig::with_default_v(set.clone()).unwrap();
    let tr = two_point_orbit(&cfg, &pt(0.1), &pt(0.6), 200_000, &NoiseStream::new(3, 0)).unwrap();
    let mut checked = 0;
    for b in tr.jump_statistics(&set, 32).unwrap() {
        if b.visits < 2000 {
            continue;
        }
        let se = b.variance.sqrt();
        assert!((b.plus as f64 - b.expected).abs() <= 4.0 * se, "{b:?}");
        assert!((b.minus as f64 - b.expected).abs() <= 4.0 * se, "{b:?}");
        checked += 1;
    }
    assert!(checked >= 5);
}

/// Whether `y` has a preimage under `f_{w_1} ∘ ⋯ ∘ f_{w_n}`, by depth-first
/// search over the two candidate preimages at each level.
fn in_reversed_image(arcs: &[(f64, f64)], v: f64, w: &[f64], y: f64) -> bool {
    let inside = |x: f64| arcs.iter().any(|&(a, b)| a <= x && x < b);
    fn search(inside: &dyn Fn(f64) -> bool, v: f64, w: &[f64], y: f64) -> bool {
        let Some((&wi, rest)) = w.split_first() else {
            return true;
        };
        let plain = (y - wi).rem_euclid(1.0);
        if !inside(plain) && search(inside, v, rest, plain) {
            return true;
        }
        let jumped = (y - wi - v).rem_euclid(1.0);
        inside(jumped) && search(inside, v, rest, jumped)
    }
    search(&inside, v, w, y)
}

#[test]
fn exact_image_measure_matches_backward_branching() {
    let arcs = [(0.0, 0.3)];
    let cfg = SystemConfig::with_default_v(interval()).unwrap();
    let v = cfg.v().coords()[0];
    let samples = 20_000;
    for n in [10usize, 100] {
        for seed in 0..3u64 {
            let noise = NoiseStream::new(seed, 0);
            let exact = reversed_image_exact(&cfg, n, &noise).unwrap().measure();
            let w = noise.take(1, n);
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let hits = (0..samples)
                .filter(|_| in_reversed_image(&arcs, v, &w, rng.random::<f64>()))
                .count();
            let p = hits as f64 / samples as f64;
            let se = (exact * (1.0 - exact) / samples as f64).sqrt().max(1e-9);
            assert!((p - exact).abs() <= 4.0 * se, "n={n} seed={seed}: {p} vs {exact}");
        }
    }
}

proptest! {
    #[test]
    fn fast_d_matches_quadratic(xs in prop::collection::vec(0.0f64..1.0, 1..300), t in 0.0f64..1.0) {
        let pts: Vec<TorusPoint> = xs.iter().map(|&x| pt(x)).collect();
        let ens = ParticleEnsemble::from_points(pts).unwrap();
        let d = d_functional(&ens);
        prop_assert!((d - d_functional_naive(&ens)).abs() < 1e-12);
        prop_assert!((0.0..=0.5).contains(&d));
        let moved: Vec<TorusPoint> = xs.iter().map(|&x| pt(x + t)).collect();
        let shifted = ParticleEnsemble::from_points(moved).unwrap();
        prop_assert!((d_functional(&shifted) - d).abs() < 1e-12);
    }

    #[test]
    fn d_in_two_dimensions_is_bounded(
        xs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..120),
    ) {
        let pts: Vec<TorusPoint> = xs.iter().map(|&(a, b)| TorusPoint::wrap(&[a, b]).unwrap()).collect();
        let ens = ParticleEnsemble::from_points(pts).unwrap();
        let d = d_functional(&ens);
        prop_assert!((d - d_functional_naive(&ens)).abs() < 1e-12);
        prop_assert!(d <= 2f64.sqrt() / 2.0 + 1e-12);
    }
}
