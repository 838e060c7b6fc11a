use proptest::prelude::*;
use pseudolattice::diophantine::{
    bad_measure_estimate, diophantine_witness, good_values, is_diophantine, DiophantineParams, GridSpec,
};
use pseudolattice::geom::Rect;
use pseudolattice::models::{action_coords, make_champagne_model, make_flat_model};

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

/// `min |<omega, k>| |k|^2` over `0 < |k| <= k_max` for `omega = (1, g)`,
/// scanning `k2` and the two nearest `k1` for each.
fn golden_min_product(k_max: i64) -> f64 {
    let g = golden();
    let mut best = f64::INFINITY;
    for k2 in 0..=k_max {
        let c = -g * k2 as f64;
        for k1 in [
            c.floor() as i64 - 1,
            c.floor() as i64,
            c.ceil() as i64,
            c.ceil() as i64 + 1,
        ] {
            let n2 = (k1 * k1 + k2 * k2) as f64;
            if n2 == 0.0 || n2 > (k_max * k_max) as f64 {
                continue;
            }
            best = best.min((k1 as f64 + g * k2 as f64).abs() * n2);
        }
    }
    best
}

#[test]
fn golden_frequency_passes_the_exhaustive_sweep() {
    let min = golden_min_product(10_000);
    assert!(min > 0.1, "{min}");
    let p = DiophantineParams::new(0.1, 1.0, 10_000).unwrap();
    assert!(is_diophantine([1.0, golden()], &p));
    // Just above the observed minimum the sweep must find a witness.
    let p = DiophantineParams::new(1.01 * min, 1.0, 10_000).unwrap();
    assert!(!is_diophantine([1.0, golden()], &p));
}

#[test]
fn resonant_witness() {
    let p = DiophantineParams::new(0.01, 1.0, 10_000).unwrap();
    let k = diophantine_witness([1.0, 2.0], &p).unwrap();
    assert_eq!(k[0] + 2 * k[1], 0);
    assert_eq!(diophantine_witness([0.0, 1.0], &p), Some([1, 0]));
}

#[test]
fn flat_model_grid_is_all_good() {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let grid = GridSpec {
        rect: Rect::square([0.0, 0.0], 1e-9),
        n: 20,
    };
    let set = good_values(&chart, &DiophantineParams::default(), &grid).unwrap();
    assert_eq!(set.nodes.len(), 400);
    assert_eq!(set.good_count(), 400);
}

#[test]
fn large_alpha_excludes_everything() {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let grid = GridSpec {
        rect: Rect::square([0.0, 0.0], 0.01),
        n: 5,
    };
    let p = DiophantineParams::new(2.0, 1.0, 1000).unwrap();
    let set = good_values(&chart, &p, &grid).unwrap();
    assert_eq!(set.good_count(), 0);
    assert!(set.nodes.iter().all(|n| !n.dq_ok));
}

#[test]
fn champagne_chart_is_mostly_good() {
    let m = make_champagne_model(1.0).unwrap();
    let chart = action_coords(&m, [0.5, 0.3]).unwrap();
    let grid = GridSpec {
        rect: chart.domain,
        n: 20,
    };
    let set = good_values(&chart, &DiophantineParams::default(), &grid).unwrap();
    assert!(set.good_fraction() >= 0.9, "{}", set.good_fraction());
}

#[test]
fn grid_outside_the_chart_is_rejected() {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let grid = GridSpec {
        rect: Rect::square([1.0, 0.0], 0.01),
        n: 5,
    };
    assert!(good_values(&chart, &DiophantineParams::default(), &grid).is_err());
    let empty = GridSpec {
        rect: Rect::square([0.0, 0.0], 0.01),
        n: 0,
    };
    assert!(good_values(&chart, &DiophantineParams::default(), &empty).is_err());
}

#[test]
fn bad_fraction_shrinks_with_alpha() {
    let m = make_flat_model([1.0, golden()], "xi_weighted")
        .unwrap()
        .with_max_radius(0.5);
    let chart = action_coords(&m, [1.0, 0.0]).unwrap();
    let alphas = [0.02, 0.01, 0.005, 0.0025];
    let est = bad_measure_estimate(&chart, 1.0, 10_000, &alphas, 4000, 11).unwrap();
    for pair in est.windows(2) {
        assert!(pair[1].1 <= pair[0].1, "{est:?}");
    }
    assert!(est[0].1 > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_covariance(w1 in 0.1f64..2.0, w2 in 0.1f64..2.0, alpha in 1e-4f64..0.1, lambda in 0.1f64..10.0) {
        let p = DiophantineParams::new(alpha, 1.0, 200).unwrap();
        let q = DiophantineParams::new(lambda * alpha, 1.0, 200).unwrap();
        if is_diophantine([w1, w2], &p) {
            prop_assert!(is_diophantine([lambda * w1, lambda * w2], &q));
        }
    }

    #[test]
    fn monotone_in_alpha(w1 in -2.0f64..2.0, w2 in -2.0f64..2.0, alpha in 1e-4f64..0.1, shrink in 0.01f64..1.0) {
        let p = DiophantineParams::new(alpha, 1.0, 200).unwrap();
        let q = DiophantineParams::new(shrink * alpha, 1.0, 200).unwrap();
        if is_diophantine([w1, w2], &p) {
            prop_assert!(is_diophantine([w1, w2], &q));
        }
    }
}
