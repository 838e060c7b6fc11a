//! Run configuration files.

use pseudolattice::diophantine::DiophantineParams;
use pseudolattice::models::{make_champagne_model, make_flat_model, ModelSystem};
use pseudolattice::monodromy::{LoopPath, CENTER_SPACING};
use pseudolattice::pipeline::PipelineConfig;
use pseudolattice::synth::SemiclassicalParams;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Synth,
    Detect,
    Monodromy,
    VerifyAll,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Synth => "synth",
            Mode::Detect => "detect",
            Mode::Monodromy => "monodromy",
            Mode::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelBlock {
    Flat {
        omega_star: [f64; 2],
        #[serde(default = "default_q")]
        q: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_radius: Option<f64>,
    },
    Champagne {
        #[serde(default = "default_well_depth")]
        well_depth: f64,
    },
}

fn default_q() -> String {
    "xi_weighted".into()
}

fn default_well_depth() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalBlock {
    pub h: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_noise_order")]
    pub noise_order: u32,
    #[serde(default)]
    pub seed: u64,
    /// Include the default higher-order symbol terms.
    #[serde(default = "default_higher_terms")]
    pub higher_terms: bool,
}

fn default_higher_terms() -> bool {
    true
}

fn default_delta() -> f64 {
    0.5
}

fn default_c0() -> f64 {
    2.0
}

fn default_noise_order() -> u32 {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineBlock {
    pub alpha: f64,
    pub d: f64,
    pub k_max: u32,
}

impl Default for DiophantineBlock {
    fn default() -> Self {
        let p = DiophantineParams::default();
        DiophantineBlock {
            alpha: p.alpha,
            d: p.d,
            k_max: p.k_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopBlock {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_winding")]
    pub winding: usize,
}

fn default_spacing() -> f64 {
    CENTER_SPACING
}

fn default_winding() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectanglesBlock {
    pub targets: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: ModelBlock,
    pub semiclassical: SemiclassicalBlock,
    #[serde(default)]
    pub diophantine: DiophantineBlock,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_: Option<LoopBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangles: Option<RectanglesBlock>,
}

/// Configuration error with the offending line when it is known.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of byte offset `at`.
fn line_of_offset(text: &str, at: usize) -> usize {
    text[..at.min(text.len())].matches('\n').count() + 1
}

/// 1-based line where `key` is assigned inside `[section]`, or where the
/// section starts if the key is absent.
fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    section_line
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
            source: source.to_string(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate(text, source)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        RunConfig::parse(&text, &source)
    }

    fn validate(&self, text: &str, source: &str) -> Result<(), ConfigError> {
        let err = |section: &str, key: &str, message: String| ConfigError {
            source: source.to_string(),
            line: line_of_key(text, section, key),
            message,
        };
        let s = &self.semiclassical;
        if !(s.h > 0.0 && s.h <= 0.1) {
            return Err(err("semiclassical", "h", format!("h = {} must lie in (0, 0.1]", s.h)));
        }
        if !(s.delta > 0.0 && s.delta < 1.0) {
            return Err(err(
                "semiclassical",
                "delta",
                format!("delta = {} must lie in (0, 1)", s.delta),
            ));
        }
        if !(s.c0 >= 1.0) {
            return Err(err("semiclassical", "c0", format!("c0 = {} must be at least 1", s.c0)));
        }
        if let Err(e) = self.params() {
            return Err(err("semiclassical", "h", e.to_string()));
        }
        if !(self.diophantine.alpha > 0.0) {
            return Err(err(
                "diophantine",
                "alpha",
                format!("alpha = {} must be positive", self.diophantine.alpha),
            ));
        }
        if let Err(e) = self.dioph() {
            return Err(err("diophantine", "d", e.to_string()));
        }
        if let Err(e) = self.model_system() {
            return Err(err("model", "name", e.to_string()));
        }
        if let Some(l) = &self.loop_ {
            if let Err(e) = LoopPath::new(l.vertices.clone()) {
                return Err(err("loop", "vertices", e.to_string()));
            }
            if !(l.spacing > 0.0 && l.spacing <= 1.0) {
                return Err(err(
                    "loop",
                    "spacing",
                    format!("spacing = {} must lie in (0, 1]", l.spacing),
                ));
            }
            if l.winding == 0 {
                return Err(err("loop", "winding", "winding must be at least 1".into()));
            }
        }
        let needs_targets = matches!(self.mode, Mode::Synth | Mode::Detect);
        let has_targets = self.rectangles.as_ref().is_some_and(|r| !r.targets.is_empty());
        if needs_targets && !has_targets {
            return Err(err(
                "rectangles",
                "targets",
                format!("mode {} needs a nonempty [rectangles] targets list", self.mode.as_str()),
            ));
        }
        let needs_loop = matches!(self.mode, Mode::Monodromy | Mode::VerifyAll);
        if needs_loop && self.loop_.is_none() {
            return Err(ConfigError {
                source: source.to_string(),
                line: None,
                message: format!("mode {} needs a [loop] section", self.mode.as_str()),
            });
        }
        Ok(())
    }

    pub fn model_system(&self) -> pseudolattice::Result<ModelSystem> {
        match &self.model {
            ModelBlock::Flat {
                omega_star,
                q,
                curvature,
                max_radius,
            } => {
                let mut m = make_flat_model(*omega_star, q)?;
                if let Some(c) = curvature {
                    m = m.with_curvature(*c);
                }
                if let Some(r) = max_radius {
                    m = m.with_max_radius(*r);
                }
                Ok(m)
            }
            ModelBlock::Champagne { well_depth } => make_champagne_model(*well_depth),
        }
    }

    pub fn params(&self) -> pseudolattice::Result<SemiclassicalParams> {
        let s = &self.semiclassical;
        SemiclassicalParams::new(s.h, s.delta, s.noise_order, s.seed)
    }

    pub fn dioph(&self) -> pseudolattice::Result<DiophantineParams> {
        let d = &self.diophantine;
        DiophantineParams::new(d.alpha, d.d, d.k_max)
    }

    pub fn pipeline(&self) -> pseudolattice::Result<PipelineConfig> {
        let mut p = PipelineConfig::new(
            self.model_system()?,
            self.params()?,
            self.dioph()?,
            self.semiclassical.c0,
        );
        if !self.semiclassical.higher_terms {
            p.higher.clear();
        }
        Ok(p)
    }

    pub fn loop_path(&self) -> Option<LoopPath> {
        self.loop_.as_ref().and_then(|l| LoopPath::new(l.vertices.clone()).ok())
    }

    pub fn targets(&self) -> Vec<[f64; 2]> {
        self.rectangles.as_ref().map(|r| r.targets.clone()).unwrap_or_default()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs are plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"
mode = "detect"

[model]
name = "flat"
omega_star = [1.0, 1.618033988749895]

[semiclassical]
h = 0.004
seed = 3

[rectangles]
targets = [[0.0, 0.0]]
"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = RunConfig::parse(FLAT, "flat.toml").unwrap();
        assert_eq!(cfg.semiclassical.delta, 0.5);
        assert_eq!(cfg.semiclassical.noise_order, 3);
        assert_eq!(cfg.diophantine, DiophantineBlock::default());
        assert_eq!(cfg.mode, Mode::Detect);
        assert!(cfg.pipeline().is_ok());
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = RunConfig::parse(FLAT, "flat.toml").unwrap();
        let again = RunConfig::parse(&cfg.to_toml(), "copy").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let bad = FLAT.replace("h = 0.004", "h = = 0.004");
        let e = RunConfig::parse(&bad, "bad.toml").unwrap_err();
        assert_eq!(e.line, Some(9));
    }

    #[test]
    fn range_errors_point_at_the_key() {
        let bad = FLAT.replace("h = 0.004", "h = 0.5");
        let e = RunConfig::parse(&bad, "bad.toml").unwrap_err();
        assert_eq!(e.line, Some(9));
        assert!(e.to_string().starts_with("bad.toml:9:"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = FLAT.replace("seed = 3", "seed = 3\nsed = 4");
        let e = RunConfig::parse(&bad, "bad.toml").unwrap_err();
        assert_eq!(e.line, Some(11));
    }

    #[test]
    fn unknown_model_is_rejected() {
        let bad = FLAT.replace("name = \"flat\"", "name = \"bowl\"");
        assert!(RunConfig::parse(&bad, "bad.toml").is_err());
    }

    #[test]
    fn missing_targets_are_reported() {
        let bad = FLAT.replace("targets = [[0.0, 0.0]]", "targets = []");
        let e = RunConfig::parse(&bad, "bad.toml").unwrap_err();
        assert_eq!(e.line, Some(13));
    }
}
