use pseudolattice::averaging::{
    ergodic_constant, flow_average, q_infinity, q_infinity_with, torus_average, torus_average_n, torus_samples,
    AverageReport,
};
use pseudolattice::models::{action_coords, make_flat_model, QChoice};

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

#[test]
fn golden_flow_interval_is_narrow_and_contains_the_mean() {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let xi = [0.01, 0.02];
    let (lo, hi) = q_infinity(&chart, xi, &[1e2, 1e3]).unwrap();
    let mean = torus_average(&chart, xi);
    assert!(hi - lo <= 0.02);
    assert!(lo <= mean && mean <= hi);
}

#[test]
fn resonant_flow_interval_spans_the_range() {
    let q = QChoice::CosX2.polynomial();
    let (lo, hi) = q_infinity_with(&q, [1.0, 0.0], [0.0, 0.0], &[1e3]).unwrap();
    // The frozen angle x2 only visits the 16 sample values.
    let x2: Vec<f64> = torus_samples(16).iter().map(|x| x[1].cos()).collect();
    let lo_exact = x2.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_exact = x2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((lo - lo_exact).abs() < 1e-12 && (hi - hi_exact).abs() < 1e-12);
    assert!(lo < -0.9 && hi > 0.9, "{lo} {hi}");
}

#[test]
fn constant_symbol_gives_a_point() {
    let q = QChoice::Constant(2.5).polynomial();
    let (lo, hi) = q_infinity_with(&q, [1.0, golden()], [0.0, 0.0], &[10.0]).unwrap();
    assert!((lo - 2.5).abs() < 1e-14 && (hi - 2.5).abs() < 1e-14);
    for t in [0.5, 3.0, 77.0] {
        let v = flow_average(&q, [1.0, golden()], [0.0, 0.0], [1.0, 2.0], t).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }
}

#[test]
fn angle_grid_refinement_is_spectrally_accurate() {
    for choice in [QChoice::Mixed, QChoice::XiWeighted, QChoice::CosX1] {
        let q = choice.polynomial();
        for xi in [[0.0, 0.0], [0.3, -0.2]] {
            let a = torus_average_n(&q, xi, 64);
            let b = torus_average_n(&q, xi, 128);
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn spread_over_initial_angles_shrinks_like_one_over_t() {
    let q = QChoice::Mixed.polynomial();
    let omega = [1.0, golden()];
    let spread = |t: f64| {
        let v: Vec<f64> = torus_samples(16)
            .into_iter()
            .map(|x0| flow_average(&q, omega, [0.0, 0.0], x0, t).unwrap())
            .collect();
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (s1, s2) = (spread(1e2), spread(1e3));
    assert!(s2 < 0.3 * s1, "{s1} {s2}");
}

#[test]
fn ergodic_constant_is_stable_under_doubling() {
    let q = QChoice::Mixed.polynomial();
    let omega = [1.0, golden()];
    let c1 = ergodic_constant(&q, omega, [0.0, 0.0], 100.0).unwrap();
    let c2 = ergodic_constant(&q, omega, [0.0, 0.0], 200.0).unwrap();
    assert!(c1 > 0.0 && c2 > 0.0);
    assert!(c1.max(c2) / c1.min(c2) <= 2.0);
}

#[test]
fn report_table_has_one_row_per_time() {
    let m = make_flat_model([1.0, golden()], "mixed").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let r = AverageReport::compute(&chart, [0.0, 0.0], [0.0, 0.0], &[10.0, 100.0]).unwrap();
    let t = r.to_table();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.header, vec!["T", "time_avg", "torus_avg", "abs_err"]);
}
