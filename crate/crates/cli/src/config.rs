//! Run configuration, read from TOML.
//!
//! Rational parameters are written as strings (`"4/3"`); integers are also
//! accepted. Float literals are rejected in exact mode.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use stationize_core::decomposition::{GreedyParams, Schedule};
use stationize_core::scalar::{parse_q, q_to_f64};
use stationize_core::{Rate, VisualParams, WeightedFreeGroup, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Float,
    Exact,
}

/// A number as written in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Num {
    pub fn to_q(&self, mode: Mode, field: &str) -> Result<Q> {
        match self {
            Num::Int(n) => Ok(Q::from_integer((*n).into())),
            Num::Str(s) => parse_q(s).with_context(|| format!("field `{field}`")),
            Num::Float(x) => {
                if mode == Mode::Exact {
                    bail!("field `{field}`: float literal {x} not allowed in exact mode; write it as a fraction string");
                }
                parse_q(&x.to_string()).with_context(|| format!("field `{field}`"))
            }
        }
    }

    pub fn to_f64(&self, mode: Mode, field: &str) -> Result<f64> {
        Ok(q_to_f64(&self.to_q(mode, field)?))
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub rank: Option<usize>,
    pub weights: Option<Vec<Num>>,
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    #[default]
    Fixed,
    Growing,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// Rate syntax: `"log 3"` or a decimal.
    pub alpha: Option<String>,
    pub eps: Option<String>,
    #[serde(rename = "D")]
    pub margin: Option<Num>,
    pub s: Option<Num>,
    pub beta: Option<Num>,
    #[serde(rename = "C")]
    pub c: Option<Num>,
    pub band: Option<Num>,
    pub tolerance: Option<Num>,
    #[serde(default)]
    pub schedule: ScheduleName,
    pub max_len: Option<usize>,
    pub max_rounds: Option<usize>,
    pub spike_budget: Option<usize>,
    pub l_nu: Option<Num>,
    #[serde(default)]
    pub admit_identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Basis,
    Moment,
}

/// The density to decompose: `F ≡ 1` unless one of the fields is set.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// `F = f_γ`.
    pub gamma: Option<String>,
    pub constant: Option<Num>,
    /// JSON list of `[cylinder, value]`.
    pub function: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSection {
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub target: TargetSection,
    /// Depth of the post-run stationarity check (default 4).
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// JSON measure on the group.
    pub measure: Option<PathBuf>,
    /// Sphere-uniform measure of this radius instead of a file.
    pub sphere: Option<usize>,
    /// Compare against `γ⋆ν` instead of `ν`.
    pub target: Option<String>,
    pub depth: Option<usize>,
    pub threshold: Option<Num>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub max_len: Option<usize>,
    pub shadow_margins: Option<Vec<Num>>,
    pub spike_margins: Option<Vec<Num>>,
    /// Extra spikes to check, JSON list of `{gamma, margin, constant, function}`.
    pub spikes: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    /// Report the functionals of this measure instead of running a decomposition.
    pub measure: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub group: GroupSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub decompose: DecomposeSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub audit: AuditSection,
    #[serde(default)]
    pub moments: MomentsSection,
}

/// A loaded, validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub group: WeightedFreeGroup,
    pub params: GreedyParams,
    pub raw: RawConfig,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let (raw, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let raw: RawConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                (raw, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        RunConfig::from_raw(raw, base_dir)
    }

    pub fn from_raw(raw: RawConfig, base_dir: PathBuf) -> Result<RunConfig> {
        let mode = raw.mode;
        let group = build_group(&raw.group, mode)?;
        let visual = visual_params(&raw.params, &group)?;
        let params = greedy_params(&raw.params, visual, mode)?;
        params.validate(mode == Mode::Exact)?;
        Ok(RunConfig { mode, group, params, raw, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn build_group(g: &GroupSection, mode: Mode) -> Result<WeightedFreeGroup> {
    let weights: Vec<Q> = match (&g.weights, g.rank) {
        (Some(ws), rank) => {
            if let Some(r) = rank {
                if r != ws.len() {
                    bail!("group.rank = {r} but {} weights given", ws.len());
                }
            }
            ws.iter().enumerate().map(|(i, w)| w.to_q(mode, &format!("group.weights[{i}]"))).collect::<Result<_>>()?
        }
        (None, rank) => vec![Q::from_integer(1.into()); rank.unwrap_or(2)],
    };
    let group = match &g.names {
        Some(names) => WeightedFreeGroup::with_names(weights, names.clone())?,
        None => WeightedFreeGroup::new(weights)?,
    };
    Ok(group)
}

fn visual_params(p: &ParamsSection, group: &WeightedFreeGroup) -> Result<VisualParams> {
    let alpha = match &p.alpha {
        Some(s) => Rate::parse(s).context("field `params.alpha`")?,
        None => default_alpha(group)?,
    };
    let eps = match &p.eps {
        Some(s) => Rate::parse(s).context("field `params.eps`")?,
        None => alpha.clone(),
    };
    Ok(VisualParams::new(alpha, eps))
}

/// `log(2k - 1) / w` for equal weights `w`; otherwise the critical exponent
/// must be given explicitly.
fn default_alpha(group: &WeightedFreeGroup) -> Result<Rate> {
    if !group.equal_weights() {
        bail!("params.alpha is required for groups with unequal weights");
    }
    let base = Q::from_integer(((group.num_letters() - 1) as i64).into());
    let w = group.weights()[0].clone();
    Ok(Rate::log_of(base)?.times(&w.recip())?)
}

fn greedy_params(p: &ParamsSection, visual: VisualParams, mode: Mode) -> Result<GreedyParams> {
    let mut g = GreedyParams::new(visual);
    if let Some(v) = &p.s {
        g.s = v.to_q(mode, "params.s")?;
    }
    if let Some(v) = &p.beta {
        g.beta = v.to_q(mode, "params.beta")?;
    }
    if let Some(v) = &p.c {
        g.c = v.to_q(mode, "params.C")?;
    }
    if let Some(v) = &p.margin {
        g.margin = v.to_q(mode, "params.D")?;
    }
    if let Some(v) = &p.band {
        g.band = Some(v.to_q(mode, "params.band")?);
    }
    if let Some(v) = &p.tolerance {
        g.tolerance = v.to_f64(mode, "params.tolerance")?;
    }
    if let Some(v) = &p.l_nu {
        g.l_nu = Some(v.to_f64(mode, "params.l_nu")?);
    }
    g.schedule = match p.schedule {
        ScheduleName::Fixed => Schedule::FixedC,
        ScheduleName::Growing => Schedule::Growing,
    };
    if let Some(v) = p.max_len {
        g.max_len = v;
    }
    if let Some(v) = p.max_rounds {
        g.max_rounds = v;
    }
    if let Some(v) = p.spike_budget {
        g.spike_budget = v;
    }
    g.admit_identity = p.admit_identity;
    Ok(g)
}

/// Parses a list of rationals, or returns the defaults.
pub fn q_list(v: &Option<Vec<Num>>, default: &[&str], mode: Mode, field: &str) -> Result<Vec<Q>> {
    match v {
        Some(xs) => xs.iter().map(|x| x.to_q(mode, field)).collect(),
        None => default.iter().map(|s| parse_q(s).map_err(|e| anyhow!(e))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_raw(toml::from_str(text)?, PathBuf::new())
    }

    #[test]
    fn defaults_are_unit_f2() {
        let c = parse("").unwrap();
        assert_eq!(c.group.rank(), 2);
        assert_eq!(c.params.visual.alpha, Rate::parse("log 3").unwrap());
        assert_eq!(c.mode, Mode::Float);
    }

    #[test]
    fn fractions_and_floats() {
        let c = parse("[params]\nC = \"5/4\"\ns = 2\n").unwrap();
        assert_eq!(c.params.c, Q::new(5.into(), 4.into()));
        assert!(parse("mode = \"exact\"\n[params]\nC = 1.25\n").is_err());
        assert!(parse("[params]\nC = 1.25\n").is_ok());
    }

    #[test]
    fn float_mode_rejects_zero_tolerance() {
        assert!(parse("[params]\ntolerance = 0\n").is_err());
        assert!(parse("mode = \"exact\"\n[params]\ntolerance = 0\n").is_ok());
    }

    #[test]
    fn weighted_groups_need_alpha() {
        assert!(parse("[group]\nweights = [\"1\", \"2\"]\n").is_err());
        let c = parse("[group]\nweights = [\"2\", \"2\", \"2\"]\n").unwrap();
        assert!((c.params.visual.alpha.value() - 5f64.ln() / 2.0).abs() < 1e-15);
        assert!(parse("[group]\nbogus = 1\n").is_err());
    }
}
