use pseudolattice::detect::fit_hchart;
use pseudolattice::table::Table;
use pseudolattice_cli::config::RunConfig;
use pseudolattice_cli::plots::{lattice_lines, plot_spectrum};
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GOLDEN: f64 = 1.618033988749895;

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudolattice"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// The single run directory under `root`.
fn run_dir(root: &Path) -> PathBuf {
    let dirs: Vec<_> = fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

const FLAT_SYNTH: &str = r#"
mode = "synth"

[model]
name = "flat"
omega_star = [1.0, 1.618033988749895]

[semiclassical]
h = 0.004
noise_order = 0
higher_terms = false

[rectangles]
targets = [[0.0, 0.0]]
"#;

const FLAT_DETECT: &str = r#"
mode = "detect"

[model]
name = "flat"
omega_star = [1.0, 1.618033988749895]

[semiclassical]
h = 0.004
seed = 5

[rectangles]
targets = [[0.0, 0.0], [0.01, 0.005]]
"#;

#[test]
fn malformed_config_exits_with_code_2_and_a_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &FLAT_DETECT.replace("seed = 5", "seed = = 5"));
    let out = run(&cfg, &tmp.path().join("runs"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.toml:10:"), "{stderr}");
}

#[test]
fn out_of_range_parameter_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &FLAT_DETECT.replace("h = 0.004", "h = 0.2"));
    let out = run(&cfg, &tmp.path().join("runs"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml:9:"));
}

#[test]
fn missing_config_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&tmp.path().join("none.toml"), &tmp.path().join("runs"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_failure_exits_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    // The loop runs through the focus-focus value.
    let text = r#"
mode = "monodromy"

[model]
name = "champagne"

[semiclassical]
h = 0.004

[loop]
vertices = [[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [0.0, 0.0]]
"#;
    let cfg = write_config(tmp.path(), "through.toml", text);
    let out = run(&cfg, &tmp.path().join("runs"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_table_matches_the_brute_force_lattice_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "synth.toml", FLAT_SYNTH);
    let out = run(&cfg, &tmp.path().join("runs"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = run_dir(&tmp.path().join("runs"));
    assert!(dir.file_name().unwrap().to_string_lossy().ends_with("-synth"));

    let summary = Table::parse(&fs::read_to_string(dir.join("synth_summary.tsv")).unwrap()).unwrap();
    let col = |name: &str| summary.f64_at(0, summary.column(name).unwrap()).unwrap();
    assert_eq!([col("value_e"), col("value_g")], [0.0, 0.0]);
    let w = col("half_width");

    let h: f64 = 0.004;
    let eps = h.sqrt();
    let mut expected = HashSet::new();
    let kmax = (3.0 * w / h).ceil() as i64 + 5;
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let xi = [h * k1 as f64, h * k2 as f64];
            let e = xi[0] + GOLDEN * xi[1] + 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
            if e.abs() <= w && (eps * xi[1]).abs() <= eps * w {
                expected.insert([k1, k2]);
            }
        }
    }
    let spectrum = Table::parse(&fs::read_to_string(dir.join("rect_00_spectrum.tsv")).unwrap()).unwrap();
    let (c1, c2) = (spectrum.column("k1").unwrap(), spectrum.column("k2").unwrap());
    let got: HashSet<[i64; 2]> = spectrum
        .rows
        .iter()
        .map(|r| [r[c1].parse().unwrap(), r[c2].parse().unwrap()])
        .collect();
    assert_eq!(got.len(), spectrum.rows.len());
    assert_eq!(got, expected);

    let svg = fs::read_to_string(dir.join("rect_00_spectrum.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), spectrum.rows.len());
    assert!(fs::read_to_string(dir.join("rect_00_chart.toml"))
        .unwrap()
        .contains("tau"));
}

#[test]
fn identical_configs_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "detect.toml", FLAT_DETECT);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for root in [&a, &b] {
        let out = run(&cfg, root, &["--jobs", "1"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = files(&run_dir(&a));
    let fb = files(&run_dir(&b));
    assert!(fa.contains_key("rect_01_hchart.toml"));
    assert!(fa.contains_key("rect_00_residuals.svg"));
    assert_eq!(fa, fb);

    let out = run(&cfg, &c, &["--seed", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let fc = files(&run_dir(&c));
    assert_ne!(fa["rect_00_spectrum.tsv"], fc["rect_00_spectrum.tsv"]);
    assert!(String::from_utf8_lossy(&fc["config.toml"]).contains("seed = 6"));
}

#[test]
fn flat_monodromy_is_trivial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/flat_monodromy.toml");
    let out = run(&cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(run_dir(tmp.path()).join("monodromy_report.txt")).unwrap();
    assert!(report.contains("spectral_normal_form: identity"), "{report}");
    assert!(report.contains("conjugate: true"));
}

#[test]
fn champagne_verify_all_reports_conjugate_monodromy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/champagne_verify.toml");
    let out = run(&cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dir = run_dir(tmp.path());
    let report = fs::read_to_string(dir.join("monodromy_report.txt")).unwrap();
    assert!(report.contains("conjugate: true"), "{report}");
    assert!(report.contains("spectral_normal_form: parabolic |m| = 1"), "{report}");
    assert!(
        report.contains("winding_2_spectral_normal_form: parabolic |m| = 2"),
        "{report}"
    );
    let svg = fs::read_to_string(dir.join("loop.svg")).unwrap();
    assert_eq!(svg.matches("class=\"critical\"").count(), 1);
    let checks = fs::read_to_string(dir.join("checks.tsv")).unwrap();
    assert!(checks.lines().all(|l| l.starts_with("PASS")), "{checks}");
    assert!(dir.join("rect_01_labels.tsv").exists());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        RunConfig::load(&p).unwrap();
        n += 1;
    }
    assert!(n >= 4);
}

fn detect_chart() -> (pseudolattice::synth::SpectrumCloud, pseudolattice::detect::HChart) {
    let cfg = RunConfig::parse(FLAT_DETECT, "detect.toml").unwrap();
    let p = cfg.pipeline().unwrap();
    let (_, _, cloud) = pseudolattice::pipeline::synth_rectangle(&p, [0.0, 0.0]).unwrap();
    let chart = fit_hchart(&cloud.blind(), 3).unwrap();
    (cloud, chart)
}

#[test]
fn spectrum_plot_is_deterministic_with_one_circle_per_point() {
    let (cloud, chart) = detect_chart();
    let a = plot_spectrum(&cloud, None);
    assert_eq!(a, plot_spectrum(&cloud, None));
    assert_eq!(a.matches("<circle").count(), cloud.len());
    assert_eq!(a.matches("<polyline").count(), 0);
    let b = plot_spectrum(&cloud, Some(&chart));
    assert_eq!(b, plot_spectrum(&cloud, Some(&chart)));
    assert_eq!(b.matches("<circle").count(), cloud.len());
}

#[test]
fn overlay_has_one_line_per_label_value() {
    let (cloud, chart) = detect_chart();
    let extent = |d: usize| {
        let lo = chart.labels.iter().map(|l| l[d]).min().unwrap();
        let hi = chart.labels.iter().map(|l| l[d]).max().unwrap();
        (hi - lo + 1) as usize
    };
    let svg = plot_spectrum(&cloud, Some(&chart));
    assert_eq!(svg.matches("<polyline").count(), extent(0) + extent(1));
    assert_eq!(lattice_lines(&chart).len(), extent(0) + extent(1));
}
