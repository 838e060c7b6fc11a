use pseudolattice::detect::{
    detect_basis, fit_hchart, label_points, nearest_point, scaled_points, solve_gauge, DEFAULT_FIT_DEGREE,
    RESIDUAL_THRESHOLD,
};
use pseudolattice::diophantine::DiophantineParams;
use pseudolattice::geom::{dist, Vec2};
use pseudolattice::models::{action_coords, make_champagne_model, make_flat_model, ModelSystem};
use pseudolattice::pipeline::{refined_chart, spectral_chart, PipelineConfig, SpectralChart};
use pseudolattice::synth::{synth_spectrum, GoodRectangle, NormalFormSymbol, SemiclassicalParams, SpectrumCloud};

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

fn affine_cloud(omega: Vec2, h: f64) -> SpectrumCloud {
    let m = make_flat_model(omega, "xi_weighted").unwrap().with_curvature(0.0);
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let p = SemiclassicalParams::new(h, 0.5, 0, 0).unwrap();
    let rect = GoodRectangle::new([0.0, 0.0], &p, 2.0).unwrap();
    let sym = NormalFormSymbol::new(chart, &p, Vec::new()).unwrap();
    synth_spectrum(&sym, &rect, &p).unwrap()
}

fn config(model: ModelSystem, h: f64, seed: u64) -> PipelineConfig {
    let p = SemiclassicalParams::new(h, 0.5, 3, seed).unwrap();
    PipelineConfig::new(model, p, DiophantineParams::default(), 2.0)
}

#[test]
fn exact_cloud_maps_onto_h_times_labels() {
    let h = 1e-3;
    let cloud = affine_cloud([1.0, golden()], h);
    let chart = fit_hchart(&cloud.blind(), DEFAULT_FIT_DEGREE).unwrap();
    for (u, l) in chart.points.iter().zip(&chart.labels) {
        let f = chart.eval(*u);
        let target = [h * l[0] as f64, h * l[1] as f64];
        assert!(dist(f, target) <= 1e-10 * h, "{l:?}");
    }
    assert_eq!(chart.unlabeled, 0);
}

#[test]
fn axis_aligned_basis_matches_the_jacobian() {
    let h = 1e-3;
    let cloud = affine_cloud([2.0, 0.0], h);
    let basis = detect_basis(&cloud).unwrap();
    let mut v = [basis.b1, basis.b2].map(|b| [b[0].abs(), b[1].abs()]);
    v.sort_by(|a, b| b[0].total_cmp(&a[0]));
    assert!(dist(v[0], [2.0 * h, 0.0]) <= 0.01 * 2.0 * h, "{v:?}");
    assert!(dist(v[1], [0.0, h]) <= 0.01 * h, "{v:?}");
}

#[test]
fn labels_match_the_truth_up_to_gauge() {
    for (model, target) in [
        (make_flat_model([1.0, golden()], "xi_weighted").unwrap(), [0.0, 0.0]),
        (make_champagne_model(1.0).unwrap(), [0.3, 0.15]),
        (make_champagne_model(1.0).unwrap(), [0.25, 0.0]),
    ] {
        let sc = spectral_chart(&config(model, 1e-3, 3), target).unwrap();
        let (m, _) = sc.gauge().expect("labels are an integer affine image of the truth");
        assert_eq!(m.det().abs(), 1);
        assert!(sc.hchart.labeled_fraction() >= 0.99);
    }
}

#[test]
fn noisy_clouds_pass_the_residual_threshold() {
    for (model, target) in [
        (make_flat_model([1.0, golden()], "xi_weighted").unwrap(), [0.0, 0.0]),
        (make_champagne_model(1.0).unwrap(), [0.4, -0.2]),
    ] {
        let sc = spectral_chart(&config(model, 1e-3, 8), target).unwrap();
        assert!(
            sc.hchart.max_residual() <= RESIDUAL_THRESHOLD,
            "{}",
            sc.hchart.max_residual()
        );
        assert!(sc.accepted());
        assert!(sc.hchart.affine_fit().0.det().abs() > 0.0);
    }
}

#[test]
fn different_anchors_give_gauge_equivalent_labels() {
    let sc = spectral_chart(&config(make_champagne_model(1.0).unwrap(), 1e-3, 4), [0.3, 0.15]).unwrap();
    let points = scaled_points(&sc.cloud).unwrap();
    let corner = sc.rectangle.value_box().lo();
    let a = nearest_point(&points, sc.rectangle.value).unwrap();
    let b = nearest_point(&points, corner).unwrap();
    assert_ne!(a, b);
    let la = label_points(&points, &sc.hchart.basis, a).unwrap();
    let lb = label_points(&points, &sc.hchart.basis, b).unwrap();
    let (la, lb): (Vec<_>, Vec<_>) = la.into_iter().zip(lb).filter_map(|(x, y)| Some((x?, y?))).unzip();
    let (m, c) = solve_gauge(&lb, &la).unwrap();
    assert_eq!(m.det().abs(), 1);
    assert_ne!(c, [0, 0]);
}

fn overlap_error(a: &SpectralChart, b: &SpectralChart) -> f64 {
    let ga = a.gauge().unwrap();
    let gb = b.gauge().unwrap();
    let ov = a.rectangle.value_box().intersect(&b.rectangle.value_box()).unwrap();
    ov.grid(5, 0.9)
        .into_iter()
        .map(|u| {
            let ea = a.estimated_actions(u, &ga).unwrap();
            let eb = b.estimated_actions(u, &gb).unwrap();
            dist(ea, eb)
        })
        .fold(0.0, f64::max)
}

#[test]
fn leading_terms_of_neighboring_rectangles_agree() {
    let cfg = config(make_champagne_model(1.0).unwrap(), 1e-3, 2);
    let w = cfg.rectangle_half_width();
    let a = spectral_chart(&cfg, [0.3, 0.15]).unwrap();
    let b = spectral_chart(&cfg, [0.3 + 0.8 * w, 0.15 + 0.5 * w]).unwrap();
    let bound = 5.0 * cfg.params.expansion_scale();
    assert!(overlap_error(&a, &b) <= bound);
}

#[test]
fn two_level_refinement_reduces_the_leading_error() {
    let h = 1e-3;
    let cfg = config(make_champagne_model(1.0).unwrap(), h, 5);
    let r = refined_chart(&cfg, [0.3, 0.15]).unwrap();
    assert!((r.fine.cloud.params.epsilon - 0.5 * cfg.params.epsilon).abs() < 1e-15);
    assert_eq!(r.coarse.rectangle.value, r.fine.rectangle.value);
    let (m, c) = r.fine.gauge().unwrap();
    let minv = m.inverse().unwrap().to_f64();
    let eta = r.fine.chart.eta;
    let to_actions = |f: Vec2| {
        let v = minv.apply([f[0] - h * c[0] as f64, f[1] - h * c[1] as f64]);
        [v[0] - 0.25 * h * eta[0] as f64, v[1] - 0.25 * h * eta[1] as f64]
    };
    let mut single: f64 = 0.0;
    let mut refined: f64 = 0.0;
    for &u in &r.fine.hchart.points {
        let exact = r.fine.chart.model.actions(u, r.fine.chart.branch).unwrap();
        single = single.max(dist(to_actions(r.fine.hchart.eval(u)), exact));
        refined = refined.max(dist(to_actions(r.leading(u)), exact));
    }
    assert!(refined < 0.5 * single, "single {single:e}, refined {refined:e}");
}
