//! End-to-end runs: good rectangles, synthesized clouds, fitted h-charts and
//! the spectral and classical atlases along a loop.

use crate::detect::{
    chain_gauge, fit_hchart, richardson_leading, solve_gauge, HChart, DEFAULT_FIT_DEGREE, RESIDUAL_THRESHOLD,
};
use crate::diophantine::{nearest_good_value, DiophantineParams};
use crate::geom::{IMat2, Vec2};
use crate::models::{action_coords, ActionChart, ModelSystem};
use crate::monodromy::{
    classical_monodromy, compare_monodromies, loop_monodromy, place_centers, Atlas, CocycleReport, LoopPath,
    MonodromyClass, PseudoChart, PseudoChartAtlas, TransitionRule, CENTER_SPACING,
};
use crate::synth::{
    default_higher_terms, good_rectangle, synth_spectrum, GoodRectangle, HigherTerm, NormalFormSymbol,
    SemiclassicalParams, SpectrumCloud,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Number of spiral rings searched for a good value near a target.
const GOOD_VALUE_RINGS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub model: ModelSystem,
    pub params: SemiclassicalParams,
    pub dioph: DiophantineParams,
    pub c0: f64,
    pub degree: usize,
    pub higher: Vec<HigherTerm>,
}

impl PipelineConfig {
    pub fn new(model: ModelSystem, params: SemiclassicalParams, dioph: DiophantineParams, c0: f64) -> Self {
        PipelineConfig {
            model,
            params,
            dioph,
            c0,
            degree: DEFAULT_FIT_DEGREE,
            higher: default_higher_terms(),
        }
    }

    /// Half-width of a good rectangle.
    pub fn rectangle_half_width(&self) -> f64 {
        self.params.h.powf(self.params.delta) / self.c0
    }

    /// Radius of the pseudo-chart around `w`.
    pub fn pseudo_chart_radius(&self, w: Vec2) -> f64 {
        self.model.chart_radius(w).min(self.rectangle_half_width())
    }
}

/// One good rectangle taken through synthesis and detection.
#[derive(Clone, Debug)]
pub struct SpectralChart {
    pub target: Vec2,
    pub chart: ActionChart,
    pub rectangle: GoodRectangle,
    pub cloud: SpectrumCloud,
    pub hchart: HChart,
}

impl SpectralChart {
    pub fn accepted(&self) -> bool {
        self.hchart.max_residual() <= RESIDUAL_THRESHOLD
    }

    /// Domain of the pseudo-chart: the action chart domain cut down to the
    /// rectangle window.
    pub fn pseudo_chart(&self) -> Option<PseudoChart> {
        let domain = self.chart.domain.intersect(&self.rectangle.value_box())?;
        Some(PseudoChart {
            value: self.rectangle.value,
            domain,
            hchart: self.hchart.clone(),
        })
    }

    /// Labels of the synthesized points, in the order of the fitted chart.
    pub fn true_labels(&self) -> Option<Vec<[i64; 2]>> {
        self.hchart.indices.iter().map(|&i| self.cloud.points[i].k).collect()
    }

    /// Integer gauge relating detected labels to the true ones.
    pub fn gauge(&self) -> Option<(IMat2, [i64; 2])> {
        solve_gauge(&self.hchart.labels, &self.true_labels()?)
    }

    /// Absolute actions predicted by the fitted chart at `u`, in the gauge
    /// of the true lattice.
    pub fn estimated_actions(&self, u: Vec2, gauge: &(IMat2, [i64; 2])) -> Option<Vec2> {
        let (m, c) = gauge;
        let h = self.cloud.params.h;
        let f = self.hchart.eval(u);
        let v = m
            .inverse()?
            .to_f64()
            .apply([f[0] - h * c[0] as f64, f[1] - h * c[1] as f64]);
        let eta = self.chart.eta;
        Some([v[0] - 0.25 * h * eta[0] as f64, v[1] - 0.25 * h * eta[1] as f64])
    }

    /// Sup-norm error of the fitted leading term against the exact actions,
    /// over the scaled points of the cloud.
    pub fn leading_term_error(&self) -> Result<f64> {
        let gauge = self.gauge().ok_or(Error::DegenerateCloud)?;
        let mut err: f64 = 0.0;
        for &u in &self.hchart.points {
            let est = self.estimated_actions(u, &gauge).ok_or(Error::DegenerateCloud)?;
            let exact = self.chart.model.actions(u, self.chart.branch)?;
            err = err.max((est[0] - exact[0]).abs().max((est[1] - exact[1]).abs()));
        }
        Ok(err)
    }
}

/// Action chart, good rectangle and synthesized cloud at the good value
/// nearest to `target`.
pub fn synth_rectangle(cfg: &PipelineConfig, target: Vec2) -> Result<(ActionChart, GoodRectangle, SpectrumCloud)> {
    let coarse = action_coords(&cfg.model, target)?;
    let step = cfg.rectangle_half_width() / (2 * GOOD_VALUE_RINGS) as f64;
    let node = nearest_good_value(&coarse, target, &cfg.dioph, step, GOOD_VALUE_RINGS)?;
    let chart = action_coords(&cfg.model, node.value)?;
    let rectangle = good_rectangle(&node, &cfg.params, cfg.c0)?;
    let symbol = NormalFormSymbol::new(chart.clone(), &cfg.params, cfg.higher.clone())?;
    let cloud = synth_spectrum(&symbol, &rectangle, &cfg.params)?;
    Ok((chart, rectangle, cloud))
}

/// Synthesis and detection in the good rectangle nearest to `target`.
pub fn spectral_chart(cfg: &PipelineConfig, target: Vec2) -> Result<SpectralChart> {
    let (chart, rectangle, cloud) = synth_rectangle(cfg, target)?;
    let hchart = fit_hchart(&cloud.blind(), cfg.degree)?;
    Ok(SpectralChart {
        target,
        chart,
        rectangle,
        cloud,
        hchart,
    })
}

pub fn spectral_charts(cfg: &PipelineConfig, targets: &[Vec2]) -> Result<Vec<SpectralChart>> {
    targets.par_iter().map(|&t| spectral_chart(cfg, t)).collect()
}

/// Largest change of `eps` between consecutive fits of a refinement chain,
/// in units of `h`.
const CHAIN_STEP: f64 = 2.0;

/// Fits of one rectangle at `eps` and `eps / 2` (same `h`), with the integer
/// gauge carrying the coarse labels to the fine ones.
#[derive(Clone, Debug)]
pub struct RefinedChart {
    pub coarse: SpectralChart,
    pub fine: SpectralChart,
    pub gauge: (IMat2, [i64; 2]),
    pub chain_len: usize,
}

impl RefinedChart {
    /// Extrapolated leading term at `u`, in the gauge of the fine chart.
    pub fn leading(&self, u: Vec2) -> Vec2 {
        richardson_leading(&self.coarse.hchart, &self.fine.hchart, self.gauge, u)
    }
}

/// Parameters with the same `h` and perturbation strength `eps`.
fn with_epsilon(params: &SemiclassicalParams, eps: f64) -> Result<SemiclassicalParams> {
    SemiclassicalParams::new(params.h, eps.ln() / params.h.ln(), params.noise_order, params.seed)
}

/// Refinement at `target`. The two gauges are linked through intermediate
/// fits whose `eps` differ by at most `CHAIN_STEP * h`, so the shift
/// between consecutive charts rounds to the right integer.
pub fn refined_chart(cfg: &PipelineConfig, target: Vec2) -> Result<RefinedChart> {
    let eps = cfg.params.epsilon;
    let h = cfg.params.h;
    let fine_cfg = PipelineConfig {
        params: with_epsilon(&cfg.params, 0.5 * eps)?,
        ..cfg.clone()
    };
    let fine = spectral_chart(&fine_cfg, target)?;
    let value = fine.rectangle.value;
    let steps = ((0.5 * eps) / (CHAIN_STEP * h)).ceil().max(1.0) as usize;
    let mut chain = Vec::with_capacity(steps + 1);
    for j in 0..steps {
        let e = eps * (1.0 - 0.5 * j as f64 / steps as f64);
        let c = PipelineConfig {
            params: with_epsilon(&cfg.params, e)?,
            ..cfg.clone()
        };
        chain.push(spectral_chart(&c, value)?);
    }
    let links: Vec<&HChart> = chain.iter().map(|c| &c.hchart).chain([&fine.hchart]).collect();
    let gauge = chain_gauge(&links, fine.hchart.center);
    let coarse = chain.swap_remove(0);
    Ok(RefinedChart {
        coarse,
        fine,
        gauge,
        chain_len: steps + 1,
    })
}

/// Pseudo-chart atlas along a loop, with chart centers spaced
/// `spacing` times the pseudo-chart radius.
pub struct SpectralAtlas {
    pub charts: Vec<SpectralChart>,
    pub atlas: PseudoChartAtlas,
}

impl SpectralAtlas {
    pub fn build(cfg: &PipelineConfig, path: &LoopPath, spacing: f64) -> Result<Self> {
        let centers = place_centers(path, spacing, |w| Ok(cfg.pseudo_chart_radius(w)))?;
        let charts = spectral_charts(cfg, &centers)?;
        let mut pseudo = Vec::with_capacity(charts.len());
        for c in &charts {
            if !c.accepted() {
                return Err(Error::ChartRejected(c.hchart.max_residual()));
            }
            pseudo.push(c.pseudo_chart().ok_or(Error::ChartTooSmall)?);
        }
        Ok(SpectralAtlas {
            charts,
            atlas: Atlas::new(pseudo, TransitionRule::Direct),
        })
    }

    /// Monodromy of the loop traversed `winding` times.
    pub fn monodromy(&self, winding: usize) -> Result<MonodromyClass> {
        let order: Vec<usize> = (0..winding.max(1)).flat_map(|_| 0..self.atlas.len()).collect();
        loop_monodromy(&self.atlas, &order)
    }

    pub fn cocycle_check(&self) -> Result<CocycleReport> {
        self.atlas.cocycle_check()
    }
}

/// Spectral and classical monodromy of one loop.
pub struct MonodromyRun {
    pub spectral_atlas: SpectralAtlas,
    pub spectral: MonodromyClass,
    pub classical: MonodromyClass,
    pub cocycle: CocycleReport,
    pub conjugate: bool,
}

pub fn run_monodromy(cfg: &PipelineConfig, path: &LoopPath, spacing: f64, winding: usize) -> Result<MonodromyRun> {
    let spectral_atlas = SpectralAtlas::build(cfg, path, spacing)?;
    let spectral = spectral_atlas.monodromy(winding)?;
    let cocycle = spectral_atlas.cocycle_check()?;
    let (classical, _) = classical_monodromy(&cfg.model, path, CENTER_SPACING, winding)?;
    let conjugate = compare_monodromies(&spectral, &classical);
    Ok(MonodromyRun {
        spectral_atlas,
        spectral,
        classical,
        cocycle,
        conjugate,
    })
}

/// Relative radial offsets in `[-amplitude, amplitude]`, one per vertex.
pub fn perturbation_factors(n: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-amplitude..=amplitude)).collect()
}

/// Regular nodes of an `n x n` grid over `rect` whose action chart can hold
/// a good rectangle.
pub fn good_targets(cfg: &PipelineConfig, rect: &crate::geom::Rect, n: usize) -> Vec<Vec2> {
    rect.grid(n, 1.0)
        .into_iter()
        .filter(|&w| cfg.model.is_regular(w) && cfg.model.chart_radius(w) >= 1.5 * cfg.rectangle_half_width())
        .collect()
}
