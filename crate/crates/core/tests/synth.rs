use proptest::prelude::*;
use pseudolattice::diophantine::{classify_value, DiophantineParams};
use pseudolattice::geom::dist;
use pseudolattice::models::{action_coords, make_champagne_model, make_flat_model};
use pseudolattice::synth::{
    default_higher_terms, good_rectangle, spectral_band, synth_spectrum, GoodRectangle, NormalFormSymbol,
    SemiclassicalParams, SpectrumCloud,
};
use pseudolattice::table::Table;
use std::collections::HashSet;

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

fn flat_cloud(noise: u32, seed: u64, higher: bool) -> (SpectrumCloud, SemiclassicalParams) {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let p = SemiclassicalParams::new(1e-3, 0.5, noise, seed).unwrap();
    let rect = GoodRectangle::new([0.0, 0.0], &p, 2.0).unwrap();
    let terms = if higher { default_higher_terms() } else { Vec::new() };
    let sym = NormalFormSymbol::new(chart, &p, terms).unwrap();
    (synth_spectrum(&sym, &rect, &p).unwrap(), p)
}

#[test]
fn flat_point_count_matches_brute_force() {
    let (cloud, p) = flat_cloud(0, 0, false);
    let rect = cloud.rectangle;
    let (h, eps) = (p.h, p.epsilon);
    let g = golden();
    let mut expected = HashSet::new();
    let kmax = (3.0 * rect.half_width / h).ceil() as i64 + 5;
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let xi = [h * k1 as f64, h * k2 as f64];
            let e = xi[0] + g * xi[1] + 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
            let im = eps * xi[1];
            if e.abs() <= rect.half_width && im.abs() <= rect.half_height {
                expected.insert([k1, k2]);
            }
        }
    }
    let got: HashSet<[i64; 2]> = cloud.points.iter().map(|p| p.k.unwrap()).collect();
    assert_eq!(got, expected);
    // Pulled-back rectangle has area (2w)^2 / |det dphi| with det dphi = 1 at 0.
    let area = (2.0 * rect.half_width).powi(2) / (h * h);
    let perimeter = 8.0 * rect.half_width / h;
    assert!(
        (cloud.len() as f64 - area).abs() <= perimeter,
        "{} vs {area}",
        cloud.len()
    );
}

#[test]
fn exact_leading_term_without_corrections() {
    let (cloud, p) = flat_cloud(0, 0, false);
    let g = golden();
    for pt in &cloud.points {
        let k = pt.k.unwrap();
        let xi = [p.h * k[0] as f64, p.h * k[1] as f64];
        let e = xi[0] + g * xi[1] + 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
        assert!((pt.mu.re - e).abs() <= 1e-15);
        assert!((pt.mu.im - p.epsilon * xi[1]).abs() <= 1e-18);
    }
}

#[test]
fn inverse_leading_term_recovers_lattice_actions() {
    let m = make_champagne_model(1.0).unwrap();
    let chart = action_coords(&m, [0.3, 0.15]).unwrap();
    let p = SemiclassicalParams::new(1e-3, 0.5, 0, 0).unwrap();
    let rect = GoodRectangle::new([0.3, 0.15], &p, 5.0).unwrap();
    let sym = NormalFormSymbol::new(chart.clone(), &p, Vec::new()).unwrap();
    let cloud = synth_spectrum(&sym, &rect, &p).unwrap();
    assert!(cloud.len() > 50);
    for pt in &cloud.points {
        let u = [pt.mu.re, pt.mu.im / p.epsilon];
        let (xi, _) = chart.invert(u).unwrap();
        let k = pt.k.unwrap();
        let expected = [
            p.h * (k[0] as f64 - chart.eta[0] as f64 / 4.0) - chart.tau[0],
            p.h * (k[1] as f64 - chart.eta[1] as f64 / 4.0) - chart.tau[1],
        ];
        let scale = chart.tau[0].abs().max(chart.tau[1].abs());
        assert!(dist(xi, expected) <= 1e-12 * scale, "{k:?}: {xi:?} vs {expected:?}");
    }
}

#[test]
fn seeded_clouds_are_bit_identical() {
    let (a, _) = flat_cloud(3, 42, true);
    let (b, _) = flat_cloud(3, 42, true);
    assert_eq!(a, b);
    let (c, _) = flat_cloud(3, 43, true);
    assert_ne!(a.points, c.points);
}

#[test]
fn distinct_labels_give_distinct_eigenvalues() {
    let (cloud, _) = flat_cloud(3, 1, true);
    let labels: HashSet<[i64; 2]> = cloud.points.iter().map(|p| p.k.unwrap()).collect();
    assert_eq!(labels.len(), cloud.len());
    let mus: HashSet<(u64, u64)> = cloud
        .points
        .iter()
        .map(|p| (p.mu.re.to_bits(), p.mu.im.to_bits()))
        .collect();
    assert_eq!(mus.len(), cloud.len());
}

#[test]
fn cloud_lies_in_the_spectral_band() {
    let dioph = DiophantineParams::default();
    for (m, c) in [
        (make_flat_model([1.0, golden()], "xi_weighted").unwrap(), [0.0, 0.0]),
        (make_champagne_model(1.0).unwrap(), [0.3, 0.15]),
    ] {
        let chart = action_coords(&m, c).unwrap();
        let p = SemiclassicalParams::new(1e-3, 0.5, 3, 5).unwrap();
        let node = classify_value(&chart, c, &dioph).unwrap();
        let rect = good_rectangle(&node, &p, 2.0).unwrap();
        let sym = NormalFormSymbol::new(chart.clone(), &p, default_higher_terms()).unwrap();
        let cloud = synth_spectrum(&sym, &rect, &p).unwrap();
        let (lo, hi) = spectral_band(&chart, c[0], rect.half_width, &p, &dioph).unwrap();
        for pt in &cloud.points {
            assert!(lo <= pt.mu.im && pt.mu.im <= hi, "{:?} not in [{lo}, {hi}]", pt.mu);
        }
    }
}

#[test]
fn constant_average_has_no_chart() {
    let m = make_flat_model([1.0, golden()], "const=2").unwrap();
    assert!(action_coords(&m, [0.0, 2.0]).is_err());
}

#[test]
fn band_is_bounded_by_the_average_range_of_the_domain() {
    let m = make_flat_model([1.0, golden()], "xi_weighted").unwrap();
    let chart = action_coords(&m, [0.0, 0.0]).unwrap();
    let p = SemiclassicalParams::new(1e-3, 0.5, 3, 5).unwrap();
    let (lo, hi) = spectral_band(&chart, 0.0, 1e-3, &p, &DiophantineParams::default()).unwrap();
    let m_ = p.expansion_scale();
    assert!(lo >= p.epsilon * (-chart.radius() - m_) - 1e-15);
    assert!(hi <= p.epsilon * (chart.radius() + m_) + 1e-15);
}

#[test]
fn table_round_trip_preserves_the_cloud() {
    let (cloud, p) = flat_cloud(3, 9, true);
    let text = cloud.to_table(true).to_tsv();
    let back = SpectrumCloud::from_table(&Table::parse(&text).unwrap(), p, cloud.rectangle).unwrap();
    assert_eq!(back, cloud);
    let blind = SpectrumCloud::from_table(
        &Table::parse(&cloud.to_table(false).to_tsv()).unwrap(),
        p,
        cloud.rectangle,
    )
    .unwrap();
    assert_eq!(blind, cloud.blind());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn any_seed_is_reproducible(seed in any::<u64>()) {
        let (a, _) = flat_cloud(3, seed, true);
        let (b, _) = flat_cloud(3, seed, true);
        prop_assert_eq!(a, b);
    }
}
