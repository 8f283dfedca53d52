//! The four subcommands. Each returns its exit code: 0 pass, 1 check failed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use stationize_core::decomposition::{basis_decompose, moment_decompose, DecompositionResult};
use stationize_core::function::Lcf;
use stationize_core::io::{
    coefficient_table, decomposition_to_json, group_measure_from_json, lcf_from_json, params_to_json,
};
use stationize_core::measure::{
    convolve, max_cell_difference, pushforward, radon_nikodym, uniform_ps_measure, BoundaryMeasure, GroupMeasure,
};
use stationize_core::scalar::{fmt_q, qi};
use stationize_core::spikes::{make_spike, measure_constants, shadow_lemma_audit, verify_q_spike, Check, SpikeReport};
use stationize_core::stationarity::{default_depth, functionals, sphere_uniform, verify_stationarity};
use stationize_core::{Scalar, WeightedFreeGroup, Word, Q};

use crate::config::{q_list, Algorithm, Mode, RunConfig, TargetSection};

/// Command-line overrides shared by the commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub depth: Option<usize>,
    pub threshold: Option<String>,
}

pub struct Output {
    pub dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Output> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    pub fn json(&self, name: &str, v: &Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn csv<T: serde::Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn measure<S: Scalar>(cfg: &RunConfig) -> Result<BoundaryMeasure<S>> {
    Ok(uniform_ps_measure::<S>(&cfg.group, &cfg.params.visual)?)
}

fn target<S: Scalar>(cfg: &RunConfig, t: &TargetSection, nu: &BoundaryMeasure<S>) -> Result<(Lcf<S>, Value)> {
    let set = [t.gamma.is_some(), t.constant.is_some(), t.function.is_some()].iter().filter(|x| **x).count();
    if set > 1 {
        bail!("give at most one of `gamma`, `constant`, `function` for the target density");
    }
    let rank = cfg.group.rank();
    if let Some(g) = &t.gamma {
        let w = cfg.group.parse_word(g)?;
        return Ok((radon_nikodym(&w, nu)?, json!({"derivative": cfg.group.format_word(&w)})));
    }
    if let Some(c) = &t.constant {
        let v = c.to_q(cfg.mode, "constant")?;
        return Ok((Lcf::constant(rank, S::from_q(&v)), json!({"constant": fmt_q(&v)})));
    }
    if let Some(p) = &t.function {
        let path = cfg.resolve(p);
        let f = lcf_from_json::<S>(&read_json(&path)?, &cfg.group)?;
        return Ok((f, json!({"function": p.display().to_string()})));
    }
    Ok((Lcf::constant(rank, S::one()), json!({"constant": "1"})))
}

/// `max |μ⋆ν(C) - F ν(C)|` over cylinders of the given depth.
fn reconstruction_check<S: Scalar>(
    mu: &GroupMeasure<S>,
    nu: &BoundaryMeasure<S>,
    f: &Lcf<S>,
    depth: usize,
    group: &WeightedFreeGroup,
) -> Value {
    if mu.is_empty() {
        return json!({"depth": depth, "max_cell_error": null, "witness": null});
    }
    let (err, witness) = max_cell_difference(&convolve(mu, nu), &nu.weighted(f), depth);
    json!({"depth": depth, "max_cell_error": err.to_json(), "witness": group.format_word(&witness)})
}

fn run_decomposition<S: Scalar>(
    cfg: &RunConfig,
    algorithm: Algorithm,
    f: &Lcf<S>,
    nu: &BoundaryMeasure<S>,
) -> Result<DecompositionResult<S>> {
    Ok(match algorithm {
        Algorithm::Basis => basis_decompose(f, nu, &cfg.params)?,
        Algorithm::Moment => moment_decompose(f, nu, &cfg.params)?,
    })
}

pub fn decompose<S: Scalar>(cfg: &RunConfig, ov: &Overrides, out: &Output) -> Result<i32> {
    let nu = measure::<S>(cfg)?;
    let (f, described) = target(cfg, &cfg.raw.decompose.target, &nu)?;
    let algorithm = cfg.raw.decompose.algorithm;
    let r = run_decomposition(cfg, algorithm, &f, &nu)?;
    let depth = ov.depth.or(cfg.raw.decompose.depth).unwrap_or(4);
    let mut doc = decomposition_to_json(&r, &cfg.group);
    let pass = r.achieved_tolerance <= cfg.params.tolerance;
    if let Value::Object(m) = &mut doc {
        m.insert("algorithm".into(), json!(format!("{algorithm:?}").to_lowercase()));
        m.insert("target".into(), described);
        m.insert("params".into(), params_to_json(&cfg.params));
        m.insert("check".into(), reconstruction_check(&r.coefficients, &nu, &f, depth, &cfg.group));
        m.insert("pass".into(), json!(pass));
    }
    out.json("result.json", &doc)?;
    out.csv("coefficients.csv", &coefficient_table(&r.coefficients, &cfg.group))?;
    println!(
        "decompose: {} rounds, stop {:?}, |R|_1 = {:.3e}, support {}, moment {:.6}, entropy {:.6}",
        r.rounds,
        r.stop,
        r.achieved_tolerance,
        r.coefficients.len(),
        r.functionals.moment,
        r.functionals.entropy
    );
    Ok(if pass { 0 } else { 1 })
}

pub fn verify<S: Scalar>(cfg: &RunConfig, ov: &Overrides, out: &Output) -> Result<i32> {
    let v = &cfg.raw.verify;
    let nu = measure::<S>(cfg)?;
    let mu: GroupMeasure<S> = match (&v.measure, v.sphere) {
        (Some(_), Some(_)) => bail!("give either verify.measure or verify.sphere, not both"),
        (Some(p), None) => group_measure_from_json(&read_json(&cfg.resolve(p))?, &cfg.group)?,
        (None, Some(r)) => sphere_uniform(&cfg.group, r)?,
        (None, None) => bail!("verify needs verify.measure or verify.sphere"),
    };
    let nu_prime = match &v.target {
        Some(g) => pushforward(&cfg.group.parse_word(g)?, &nu),
        None => nu.clone(),
    };
    let depth = ov.depth.or(v.depth).unwrap_or_else(|| default_depth(&mu));
    let threshold: Q = match (&ov.threshold, &v.threshold) {
        (Some(s), _) => stationize_core::scalar::parse_q(s).context("--threshold")?,
        (None, Some(n)) => n.to_q(cfg.mode, "verify.threshold")?,
        (None, None) => match cfg.mode {
            Mode::Exact => qi(0),
            Mode::Float => stationize_core::scalar::parse_q("1e-9")?,
        },
    };
    let report = verify_stationarity(&mu, &nu, &nu_prime, depth)?;
    let pass = report.max_cell_error.le_tol(&S::from_q(&threshold));
    let mut doc = report.to_json(&cfg.group);
    if let Value::Object(m) = &mut doc {
        m.insert("threshold".into(), json!(fmt_q(&threshold)));
        m.insert("pass".into(), json!(pass));
    }
    out.json("verify.json", &doc)?;
    println!(
        "verify: depth {}, max cell error {:.3e} at `{}`, exact {}",
        depth,
        report.max_cell_error.as_f64(),
        cfg.group.format_word(&report.witness),
        report.exact
    );
    Ok(if pass { 0 } else { 1 })
}

/// Pass counts for one spike condition, with the first failure.
#[derive(Default)]
struct Tally {
    passed: usize,
    total: usize,
    witness: Option<String>,
}

impl Tally {
    fn push<S: Scalar>(&mut self, c: Option<&Check<S>>, gamma: &str, group: &WeightedFreeGroup) {
        let Some(c) = c else { return };
        self.total += 1;
        if c.ok {
            self.passed += 1;
        } else if self.witness.is_none() {
            let at = c.witness.as_ref().map(|w| group.format_word(w)).unwrap_or_default();
            self.witness = Some(format!("gamma `{gamma}` at `{at}`"));
        }
    }

    fn to_json(&self) -> Value {
        let rate = if self.total == 0 { 1.0 } else { self.passed as f64 / self.total as f64 };
        json!({"passed": self.passed, "total": self.total, "pass_rate": rate, "witness": self.witness})
    }
}

const CONDITIONS: [&str; 5] = ["height", "decay", "oscillation", "lipschitz", "ball_mass"];

fn tally_report<S: Scalar>(tallies: &mut [Tally; 5], r: &SpikeReport<S>, gamma: &str, group: &WeightedFreeGroup) {
    tallies[0].push(Some(&r.cond1), gamma, group);
    tallies[1].push(Some(&r.cond2), gamma, group);
    tallies[2].push(Some(&r.cond3), gamma, group);
    tallies[3].push(r.lipschitz.as_ref(), gamma, group);
    tallies[4].push(r.ball_mass.as_ref(), gamma, group);
}

fn tallies_json(t: &[Tally; 5]) -> Value {
    Value::Object(CONDITIONS.iter().zip(t).map(|(k, v)| (k.to_string(), v.to_json())).collect())
}

pub fn audit<S: Scalar>(cfg: &RunConfig, _ov: &Overrides, out: &Output) -> Result<i32> {
    let a = &cfg.raw.audit;
    let max_len = a.max_len.unwrap_or(5);
    let shadow_margins = q_list(&a.shadow_margins, &["0", "1", "2"], cfg.mode, "audit.shadow_margins")?;
    let spike_margins = q_list(&a.spike_margins, &["0", "1"], cfg.mode, "audit.spike_margins")?;
    if max_len == 0 || shadow_margins.is_empty() || spike_margins.is_empty() {
        bail!("empty sweep: audit.max_len and both margin lists must be nonempty");
    }
    let group = &cfg.group;
    let visual = &cfg.params.visual;
    let nu = measure::<S>(cfg)?;
    let shadow = shadow_lemma_audit(&nu, visual, max_len, &shadow_margins)?;
    let constants = measure_constants(&nu, visual, max_len.min(4))?;

    let words: Vec<Word> = group.ball(max_len).into_iter().skip(1).collect();
    let mut tallies: [Tally; 5] = Default::default();
    let mut hard_failures = Vec::new();
    let mut per_margin = Vec::new();
    for d in &spike_margins {
        // Constant bound β e^{2αD}.
        let widen: S = visual.alpha.exp_neg(&(-(d.clone() * qi(2))))?;
        let bound = shadow.beta.clone() * widen;
        let mut worst = S::one();
        let mut worst_at = None;
        for g in &words {
            let name = group.format_word(g);
            let spike = match make_spike(g, &nu, visual, d) {
                Ok(s) => s,
                Err(e) => {
                    hard_failures.push(json!({"gamma": name, "margin": fmt_q(d), "error": e.to_string()}));
                    continue;
                }
            };
            let report = verify_q_spike(&spike, &nu)?;
            tally_report(&mut tallies, &report, &name, group);
            if !report.all_ok() {
                hard_failures.push(json!({"gamma": name, "margin": fmt_q(d), "error": "condition failed"}));
            }
            if !spike.constant.le_tol(&bound) {
                hard_failures.push(json!({
                    "gamma": name,
                    "margin": fmt_q(d),
                    "error": format!("constant {} exceeds bound {}", spike.constant.as_f64(), bound.as_f64()),
                }));
            }
            if spike.constant > worst {
                worst = spike.constant.clone();
                worst_at = Some(name);
            }
        }
        per_margin.push(json!({
            "D": fmt_q(d),
            "max_constant": worst.to_json(),
            "witness": worst_at,
            "bound": bound.to_json(),
            "within_bound": worst.le_tol(&bound),
        }));
    }

    let mut injected = Vec::new();
    if let Some(p) = &a.spikes {
        let doc = read_json(&cfg.resolve(p))?;
        let items = doc.as_array().context("spike file must hold a list")?;
        if items.is_empty() {
            bail!("empty sweep: spike file has no entries");
        }
        let mut t: [Tally; 5] = Default::default();
        for it in items {
            let gamma = group.parse_word(it.get("gamma").and_then(Value::as_str).context("spike needs `gamma`")?)?;
            let margin = match it.get("margin") {
                Some(m) => Q::from_json(m)?,
                None => qi(0),
            };
            let base = make_spike(&gamma, &nu, visual, &margin)?;
            let function = match it.get("function") {
                Some(v) => lcf_from_json::<S>(v, group)?,
                None => base.function.clone(),
            };
            let constant = match it.get("constant") {
                Some(v) => S::from_json(v)?,
                None => base.constant.clone(),
            };
            let spike = base.with_function(function, constant);
            let name = group.format_word(&gamma);
            let report = verify_q_spike(&spike, &nu)?;
            tally_report(&mut t, &report, &name, group);
            if !report.all_ok() {
                let w = t.iter().find_map(|x| x.witness.clone());
                hard_failures.push(json!({"gamma": name, "injected": true, "error": "condition failed", "witness": w}));
            }
        }
        injected.push(tallies_json(&t));
    }

    let ok = hard_failures.is_empty();
    let doc = json!({
        "exact": S::EXACT,
        "max_len": max_len,
        "beta": shadow.beta.to_json(),
        "beta_f64": shadow.beta.as_f64(),
        "beta_witness": shadow.witness.as_ref().map(|(g, d)| json!([group.format_word(g), fmt_q(d)])),
        "beta_per_margin": shadow.per_margin.iter().map(|(d, b)| json!([fmt_q(d), b.to_json()])).collect::<Vec<_>>(),
        "D_0": fmt_q(&shadow.d0),
        "D_nu": constants.d_nu,
        "T_nu": constants.t_nu,
        "L_nu": constants.l_nu,
        "spikes": tallies_json(&tallies),
        "spike_constants": per_margin,
        "injected": injected.first().cloned(),
        "hard_failures": hard_failures,
        "pass": ok,
    });
    out.json("audit.json", &doc)?;
    println!(
        "audit: beta = {:.6}, D_nu = {:.6}, T_nu = {:.6}, {} hard failures",
        shadow.beta.as_f64(),
        constants.d_nu,
        constants.t_nu,
        doc["hard_failures"].as_array().map_or(0, Vec::len)
    );
    Ok(if ok { 0 } else { 1 })
}

pub fn moments<S: Scalar>(cfg: &RunConfig, _ov: &Overrides, out: &Output) -> Result<i32> {
    if let Some(p) = &cfg.raw.moments.measure {
        let mu = group_measure_from_json::<S>(&read_json(&cfg.resolve(p))?, &cfg.group)?;
        let f = functionals(&mu, &cfg.group);
        let doc = json!({
            "moment": f.moment,
            "log_moment": f.log_moment,
            "entropy": f.entropy,
            "finite": f.finite(),
            "pass": f.finite(),
        });
        out.json("moments.json", &doc)?;
        println!("moments: moment {:.6}, log-moment {:.6}, entropy {:.6}", f.moment, f.log_moment, f.entropy);
        return Ok(if f.finite() { 0 } else { 1 });
    }
    let nu = measure::<S>(cfg)?;
    let (f, described) = target(cfg, &cfg.raw.decompose.target, &nu)?;
    let r = run_decomposition(cfg, Algorithm::Moment, &f, &nu)?;
    let envelope_ok = r.envelope.as_ref().is_none_or(|e| e.ok);
    let pass = r.functionals.finite() && envelope_ok;
    let doc = json!({
        "target": described,
        "params": params_to_json(&cfg.params),
        "rounds": r.rounds,
        "stop": serde_json::to_value(r.stop)?,
        "achieved_tolerance": r.achieved_tolerance,
        "moment": r.functionals.moment,
        "log_moment": r.functionals.log_moment,
        "entropy": r.functionals.entropy,
        "finite": r.functionals.finite(),
        "envelope": serde_json::to_value(&r.envelope)?,
        "records": serde_json::to_value(&r.records)?,
        "pass": pass,
    });
    out.json("moments.json", &doc)?;
    out.csv("coefficients.csv", &coefficient_table(&r.coefficients, &cfg.group))?;
    println!(
        "moments: {} rounds, moment {:.6}, entropy {:.6}, envelope {}",
        r.rounds,
        r.functionals.moment,
        r.functionals.entropy,
        if envelope_ok { "holds" } else { "violated" }
    );
    Ok(if pass { 0 } else { 1 })
}
