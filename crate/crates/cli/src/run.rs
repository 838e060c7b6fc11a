//! Mode execution and artifact output.

use crate::config::{Mode, RunConfig};
use crate::plots::{plot_loop, plot_residuals, plot_spectrum};
use anyhow::{Context, Result};
use pseudolattice::detect::RESIDUAL_THRESHOLD;
use pseudolattice::geom::Vec2;
use pseudolattice::models::SingularValues;
use pseudolattice::monodromy::{
    classical_monodromy, compare_monodromies, MonodromyClass, CENTER_SPACING, ROUNDING_THRESHOLD,
};
use pseudolattice::pipeline::{
    run_monodromy, spectral_chart, synth_rectangle, MonodromyRun, PipelineConfig, SpectralChart,
};
use pseudolattice::table::{fmt_f64, Table};
use rayon::prelude::*;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Smallest fraction of labeled points for an accepted chart.
const MIN_LABELED_FRACTION: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Fresh directory `<root>/<stamp>-<mode>`, suffixed if it already exists.
pub fn output_dir(root: &Path, stamp: &str, mode: Mode) -> Result<PathBuf> {
    let base = format!("{stamp}-{}", mode.as_str());
    let mut dir = root.join(&base);
    let mut n = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{n}"));
        n += 1;
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

struct Writer {
    dir: PathBuf,
}

impl Writer {
    fn put(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let out = Writer { dir: dir.to_path_buf() };
    out.put("config.toml", &cfg.to_toml())?;
    let pipeline = cfg.pipeline()?;
    let mut checks = Vec::new();
    match cfg.mode {
        Mode::Synth => synth_mode(cfg, &pipeline, &out, &mut checks)?,
        Mode::Detect => detect_mode(cfg, &pipeline, &out, &mut checks)?,
        Mode::Monodromy => monodromy_mode(cfg, &pipeline, &out, &mut checks)?,
        Mode::VerifyAll => {
            if !cfg.targets().is_empty() {
                detect_mode(cfg, &pipeline, &out, &mut checks)?;
            }
            monodromy_mode(cfg, &pipeline, &out, &mut checks)?;
        }
    }
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(
            text,
            "{}\t{}\t{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    out.put("checks.tsv", &text)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        checks,
    })
}

fn rect_name(i: usize, what: &str) -> String {
    format!("rect_{i:02}_{what}")
}

fn synth_mode(cfg: &RunConfig, pipeline: &PipelineConfig, out: &Writer, checks: &mut Vec<Check>) -> Result<()> {
    let results: Vec<_> = cfg
        .targets()
        .par_iter()
        .map(|&t| synth_rectangle(pipeline, t))
        .collect::<pseudolattice::Result<Vec<_>>>()?;
    let mut summary = Table::new(&[
        "rect",
        "target_e",
        "target_g",
        "value_e",
        "value_g",
        "half_width",
        "points",
    ]);
    for (i, ((chart, rect, cloud), target)) in results.iter().zip(cfg.targets()).enumerate() {
        out.put(&rect_name(i, "spectrum.tsv"), &cloud.to_table(true).to_tsv())?;
        out.put(&rect_name(i, "chart.toml"), &chart.document().to_toml())?;
        out.put(&rect_name(i, "spectrum.svg"), &plot_spectrum(cloud, None))?;
        summary.push(vec![
            i.to_string(),
            fmt_f64(target[0]),
            fmt_f64(target[1]),
            fmt_f64(rect.value[0]),
            fmt_f64(rect.value[1]),
            fmt_f64(rect.half_width),
            cloud.points.len().to_string(),
        ]);
        let labels: HashSet<_> = cloud.points.iter().filter_map(|p| p.k).collect();
        checks.push(Check::new(
            format!("synth rect {i}"),
            !cloud.points.is_empty() && labels.len() == cloud.points.len(),
            format!("{} eigenvalues, {} distinct labels", cloud.points.len(), labels.len()),
        ));
    }
    out.put("synth_summary.tsv", &summary.to_tsv())
}

fn detect_mode(cfg: &RunConfig, pipeline: &PipelineConfig, out: &Writer, checks: &mut Vec<Check>) -> Result<()> {
    let charts: Vec<SpectralChart> = cfg
        .targets()
        .par_iter()
        .map(|&t| spectral_chart(pipeline, t))
        .collect::<pseudolattice::Result<Vec<_>>>()?;
    let mut summary = Table::new(&[
        "rect",
        "value_e",
        "value_g",
        "points",
        "labeled_fraction",
        "max_residual",
        "accepted",
    ]);
    for (i, c) in charts.iter().enumerate() {
        write_detection(out, i, c)?;
        let fraction = c.hchart.labeled_fraction();
        let residual = c.hchart.max_residual();
        let pass = c.accepted() && fraction >= MIN_LABELED_FRACTION;
        summary.push(vec![
            i.to_string(),
            fmt_f64(c.rectangle.value[0]),
            fmt_f64(c.rectangle.value[1]),
            c.cloud.points.len().to_string(),
            fmt_f64(fraction),
            fmt_f64(residual),
            pass.to_string(),
        ]);
        checks.push(Check::new(
            format!("detect rect {i}"),
            pass,
            format!("labeled {fraction:.4}, max residual {residual:.3e} h"),
        ));
    }
    out.put("detect_summary.tsv", &summary.to_tsv())
}

fn write_detection(out: &Writer, i: usize, c: &SpectralChart) -> Result<()> {
    let blind = c.cloud.blind();
    out.put(&rect_name(i, "spectrum.tsv"), &blind.to_table(false).to_tsv())?;
    out.put(&rect_name(i, "chart.toml"), &c.chart.document().to_toml())?;
    let mut labels = Table::new(&["re_mu", "im_mu", "l1", "l2", "residual"]);
    for (j, &idx) in c.hchart.indices.iter().enumerate() {
        let mu = c.cloud.points[idx].mu;
        let l = c.hchart.labels[j];
        labels.push(vec![
            fmt_f64(mu.re),
            fmt_f64(mu.im),
            l[0].to_string(),
            l[1].to_string(),
            fmt_f64(c.hchart.residuals[j]),
        ]);
    }
    out.put(&rect_name(i, "labels.tsv"), &labels.to_tsv())?;
    let doc = toml::to_string(&c.hchart).context("serializing h-chart")?;
    out.put(&rect_name(i, "hchart.toml"), &doc)?;
    out.put(&rect_name(i, "spectrum.svg"), &plot_spectrum(&blind, Some(&c.hchart)))?;
    out.put(
        &rect_name(i, "residuals.svg"),
        &plot_residuals(&c.hchart.residuals, RESIDUAL_THRESHOLD),
    )
}

fn product_line(m: &MonodromyClass) -> String {
    m.product.to_string()
}

fn monodromy_mode(cfg: &RunConfig, pipeline: &PipelineConfig, out: &Writer, checks: &mut Vec<Check>) -> Result<()> {
    let block = cfg.loop_.as_ref().context("missing [loop] section")?;
    let path = cfg.loop_path().context("invalid loop")?;
    let run: MonodromyRun = run_monodromy(pipeline, &path, block.spacing, block.winding)?;
    let atlas = &run.spectral_atlas;
    let table = atlas.atlas.transition_table()?;

    let mut transitions = Table::new(&["i", "j", "m11", "m12", "m21", "m22", "rounding_error"]);
    for t in &run.spectral.transitions {
        let m = t.m.0;
        transitions.push(vec![
            t.i.to_string(),
            t.j.to_string(),
            m[0][0].to_string(),
            m[0][1].to_string(),
            m[1][0].to_string(),
            m[1][1].to_string(),
            fmt_f64(t.rounding_error),
        ]);
    }
    out.put("loop_transitions.tsv", &transitions.to_tsv())?;

    let mut charts = Table::new(&["chart", "value_e", "value_g", "points", "max_residual"]);
    for (i, c) in atlas.charts.iter().enumerate() {
        charts.push(vec![
            i.to_string(),
            fmt_f64(c.rectangle.value[0]),
            fmt_f64(c.rectangle.value[1]),
            c.cloud.points.len().to_string(),
            fmt_f64(c.hchart.max_residual()),
        ]);
    }
    out.put("loop_charts.tsv", &charts.to_tsv())?;

    // Winding once more than configured must change the class unless it is
    // trivial, and must match the classical class wound the same way.
    let next = block.winding + 1;
    let spectral_next = atlas.monodromy(next)?;
    let (classical_next, _) = classical_monodromy(&pipeline.model, &path, CENTER_SPACING, next)?;
    let winding_ok = compare_monodromies(&spectral_next, &classical_next);

    let rounding_ok = table.max_rounding_error <= ROUNDING_THRESHOLD;
    let mut report = String::new();
    let _ = writeln!(report, "model: {}", pipeline.model.name);
    let _ = writeln!(report, "h: {}", fmt_f64(pipeline.params.h));
    let _ = writeln!(report, "epsilon: {}", fmt_f64(pipeline.params.epsilon));
    let _ = writeln!(report, "seed: {}", pipeline.params.seed);
    let _ = writeln!(report, "loop_vertices: {}", path.vertices.len());
    let _ = writeln!(report, "winding: {}", block.winding);
    let _ = writeln!(report, "spectral_charts: {}", atlas.charts.len());
    let _ = writeln!(report, "transitions: {}", table.matrices.len());
    let _ = writeln!(report, "max_rounding_error: {}", fmt_f64(table.max_rounding_error));
    let _ = writeln!(report, "cocycle_pairs: {}", run.cocycle.pairs_checked);
    let _ = writeln!(report, "cocycle_triples: {}", run.cocycle.triples_checked);
    let _ = writeln!(report, "cocycle_violations: {}", run.cocycle.violations.len());
    let _ = writeln!(report, "spectral_product: {}", product_line(&run.spectral));
    let _ = writeln!(report, "spectral_normal_form: {}", run.spectral.normal_form);
    let _ = writeln!(report, "spectral_trace: {}", run.spectral.trace);
    let _ = writeln!(report, "spectral_det: {}", run.spectral.det);
    let _ = writeln!(report, "classical_product: {}", product_line(&run.classical));
    let _ = writeln!(report, "classical_normal_form: {}", run.classical.normal_form);
    let _ = writeln!(
        report,
        "winding_{next}_spectral_normal_form: {}",
        spectral_next.normal_form
    );
    let _ = writeln!(
        report,
        "winding_{next}_classical_normal_form: {}",
        classical_next.normal_form
    );
    let _ = writeln!(report, "conjugate: {}", run.conjugate);
    out.put("monodromy_report.txt", &report)?;

    let domains: Vec<_> = atlas.atlas.charts.iter().map(|c| c.domain).collect();
    let values: Vec<Vec2> = atlas.atlas.charts.iter().map(|c| c.value).collect();
    let marks = match pipeline.model.singular_values() {
        SingularValues::FocusFocus { point, .. } => vec![point],
        SingularValues::None => Vec::new(),
    };
    out.put("loop.svg", &plot_loop(&path, &domains, &values, &marks))?;

    checks.push(Check::new(
        "transition integrality",
        rounding_ok,
        format!("max pre-rounding error {:.3e}", table.max_rounding_error),
    ));
    checks.push(Check::new(
        "cocycle",
        run.cocycle.ok(),
        format!(
            "{} pairs, {} triples, {} violations",
            run.cocycle.pairs_checked,
            run.cocycle.triples_checked,
            run.cocycle.violations.len()
        ),
    ));
    checks.push(Check::new(
        "spectral vs classical",
        run.conjugate,
        format!(
            "spectral {}, classical {}",
            run.spectral.normal_form, run.classical.normal_form
        ),
    ));
    checks.push(Check::new(
        format!("winding {next}"),
        winding_ok,
        format!(
            "spectral {}, classical {}",
            spectral_next.normal_form, classical_next.normal_form
        ),
    ));
    Ok(())
}
