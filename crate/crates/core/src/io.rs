//! JSON encodings of measures, functions and decomposition results.
//!
//! Exact scalars are written as `"num/den"` strings, floats as numbers.
//! Words use the group's generator names. Objects carry no timestamps, so
//! equal inputs give byte-identical output.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::decomposition::{DecompositionResult, GreedyParams};
use crate::error::{Error, Result};
use crate::function::Lcf;
use crate::group::WeightedFreeGroup;
use crate::measure::GroupMeasure;
use crate::partition::Partition;
use crate::scalar::{fmt_q, q_to_f64, Scalar};

pub fn group_measure_to_json<S: Scalar>(mu: &GroupMeasure<S>, group: &WeightedFreeGroup) -> Value {
    Value::Array(mu.atoms().map(|(w, m)| json!([group.format_word(w), m.to_json()])).collect())
}

/// Reads `[[word, mass], ...]` or `{"word": mass, ...}`.
pub fn group_measure_from_json<S: Scalar>(v: &Value, group: &WeightedFreeGroup) -> Result<GroupMeasure<S>> {
    let v = v.get("atoms").unwrap_or(v);
    let pairs: Vec<(String, &Value)> = match v {
        Value::Array(items) => items
            .iter()
            .map(|it| match it.as_array().map(|a| a.as_slice()) {
                Some([Value::String(w), m]) => Ok((w.clone(), m)),
                _ => Err(Error::Serde(format!("expected [word, mass], found {it}"))),
            })
            .collect::<Result<_>>()?,
        Value::Object(map) => map.iter().map(|(k, m)| (k.clone(), m)).collect(),
        other => return Err(Error::Serde(format!("expected a list of atoms, found {other}"))),
    };
    let mut atoms = Vec::with_capacity(pairs.len());
    for (w, m) in pairs {
        atoms.push((group.parse_word(&w)?, S::from_json(m)?));
    }
    GroupMeasure::from_atoms(atoms)
}

pub fn lcf_to_json<S: Scalar>(f: &Lcf<S>, group: &WeightedFreeGroup) -> Value {
    Value::Array(f.cells().map(|(c, v)| json!([group.format_word(c), v.to_json()])).collect())
}

/// Reads `[[cylinder, value], ...]`; the cylinders must partition the boundary.
pub fn lcf_from_json<S: Scalar>(v: &Value, group: &WeightedFreeGroup) -> Result<Lcf<S>> {
    let items = v.as_array().ok_or_else(|| Error::Serde("expected a list of [cylinder, value]".into()))?;
    let mut cells = Vec::with_capacity(items.len());
    for it in items {
        match it.as_array().map(|a| a.as_slice()) {
            Some([Value::String(w), x]) => cells.push((group.parse_word(w)?, S::from_json(x)?)),
            _ => return Err(Error::Serde(format!("expected [cylinder, value], found {it}"))),
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let (words, values): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
    Lcf::new(Partition::from_cells(group.rank(), words)?, values)
}

pub fn params_to_json(p: &GreedyParams) -> Value {
    json!({
        "alpha": p.visual.alpha.to_string(),
        "eps": p.visual.eps.to_string(),
        "s": fmt_q(&p.s),
        "beta": fmt_q(&p.beta),
        "C": fmt_q(&p.c),
        "D": fmt_q(&p.margin),
        "band": p.band.as_ref().map(fmt_q),
        "max_len": p.max_len,
        "tolerance": p.tolerance,
        "max_rounds": p.max_rounds,
        "spike_budget": p.spike_budget,
        "schedule": p.schedule,
        "l_nu": p.l_nu,
        "admit_identity": p.admit_identity,
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn decomposition_to_json<S: Scalar>(r: &DecompositionResult<S>, group: &WeightedFreeGroup) -> Value {
    let mut m = Map::new();
    m.insert("exact".into(), json!(S::EXACT));
    m.insert("coefficients".into(), group_measure_to_json(&r.coefficients, group));
    m.insert("support".into(), json!(r.coefficients.len()));
    m.insert("total_mass".into(), r.coefficients.total().to_json());
    m.insert("residual_trace".into(), Value::Array(r.residual_trace.iter().map(|x| x.to_json()).collect()));
    m.insert("rounds".into(), json!(r.rounds));
    m.insert("achieved_tolerance".into(), json!(r.achieved_tolerance));
    m.insert("leak".into(), json!(r.leak));
    m.insert("stop".into(), to_value(&r.stop));
    m.insert("rate_ok".into(), json!(r.rate_ok));
    m.insert("l_nu".into(), json!(r.l_nu));
    m.insert("constants".into(), to_value(&r.constants));
    m.insert(
        "functionals".into(),
        json!({
            "moment": r.functionals.moment,
            "log_moment": r.functionals.log_moment,
            "entropy": r.functionals.entropy,
            "finite": r.functionals.finite(),
        }),
    );
    m.insert("records".into(), to_value(&r.records));
    if let Some(e) = &r.envelope {
        m.insert("envelope".into(), to_value(e));
    }
    Value::Object(m)
}

/// One row of the `(|γ|, μ(γ))` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub word: String,
    pub length: f64,
    pub mass: String,
    pub mass_f64: f64,
}

/// Rows sorted by length, then word.
pub fn coefficient_table<S: Scalar>(mu: &GroupMeasure<S>, group: &WeightedFreeGroup) -> Vec<CoefficientRow> {
    let mut rows: Vec<(crate::scalar::Q, &crate::group::Word, &S)> =
        mu.atoms().map(|(w, m)| (group.length(w), w, m)).collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(b.1)));
    rows.into_iter()
        .map(|(len, w, m)| CoefficientRow {
            word: group.format_word(w),
            length: q_to_f64(&len),
            mass: match m.to_json() {
                Value::String(s) => s,
                other => other.to_string(),
            },
            mass_f64: m.as_f64(),
        })
        .collect()
}
