//! Checks of `μ ⋆ ν = ν'` and the moment functionals of `μ`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{WeightedFreeGroup, Word};
use crate::measure::{convolve, max_cell_difference, BoundaryMeasure, GroupMeasure};
use crate::scalar::{q_to_f64, Scalar};

/// First moment, log-moment and entropy of a finitely supported measure.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Functionals {
    pub moment: f64,
    pub log_moment: f64,
    pub entropy: f64,
}

impl Functionals {
    pub fn finite(&self) -> bool {
        self.moment.is_finite() && self.log_moment.is_finite() && self.entropy.is_finite()
    }
}

/// `Σ μ(γ)|γ|`, `Σ μ(γ) max(0, log|γ|)` and `-Σ μ(γ) log μ(γ)`.
pub fn functionals<S: Scalar>(mu: &GroupMeasure<S>, group: &WeightedFreeGroup) -> Functionals {
    let mut f = Functionals { moment: 0.0, log_moment: 0.0, entropy: 0.0 };
    for (w, m) in mu.atoms() {
        let m = m.as_f64();
        let d = q_to_f64(&group.length(w));
        f.moment += m * d;
        if d > 1.0 {
            f.log_moment += m * d.ln();
        }
        if m > 0.0 {
            f.entropy -= m * m.ln();
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport<S> {
    /// `max |μ⋆ν(C) - ν'(C)|` over cylinders of exactly `depth` letters.
    pub max_cell_error: S,
    pub witness: Word,
    pub depth: usize,
    pub exact: bool,
    /// The input did not have unit mass and was normalized first.
    pub normalized: bool,
    pub functionals: Functionals,
}

impl<S: Scalar> StationarityReport<S> {
    pub fn to_json(&self, group: &WeightedFreeGroup) -> Value {
        json!({
            "exact": self.exact,
            "depth": self.depth,
            "max_cell_error": self.max_cell_error.to_json(),
            "witness": group.format_word(&self.witness),
            "normalized": self.normalized,
            "moment": self.functionals.moment,
            "log_moment": self.functionals.log_moment,
            "entropy": self.functionals.entropy,
            "finite": self.functionals.finite(),
        })
    }
}

/// Verification depth used when none is given: longest support word plus two.
pub fn default_depth<S: Scalar>(mu: &GroupMeasure<S>) -> usize {
    mu.max_word_len() + 2
}

fn has_unit_mass<S: Scalar>(mu: &GroupMeasure<S>) -> bool {
    let t = mu.total();
    if S::EXACT {
        t == S::one()
    } else {
        (t.as_f64() - 1.0).abs() <= 1e-9
    }
}

pub fn verify_stationarity<S: Scalar>(
    mu: &GroupMeasure<S>,
    nu: &BoundaryMeasure<S>,
    nu_prime: &BoundaryMeasure<S>,
    depth: usize,
) -> Result<StationarityReport<S>> {
    if depth < 1 {
        return Err(Error::Input("verification depth must be at least 1".into()));
    }
    if mu.is_empty() {
        return Err(Error::Input("measure on the group is empty".into()));
    }
    let normalized = !has_unit_mass(mu);
    let mu = if normalized { mu.normalized()? } else { mu.clone() };
    let conv = convolve(&mu, nu);
    let (err, witness) = max_cell_difference(&conv, nu_prime, depth);
    let exact = S::EXACT && err.is_zero();
    Ok(StationarityReport {
        max_cell_error: err,
        witness,
        depth,
        exact,
        normalized,
        functionals: functionals(&mu, nu.group()),
    })
}

/// Uniform probability on the words of a given length.
pub fn sphere_uniform<S: Scalar>(group: &WeightedFreeGroup, radius: usize) -> Result<GroupMeasure<S>> {
    if radius < 1 {
        return Err(Error::Input("sphere radius must be at least 1".into()));
    }
    if !group.equal_weights() {
        return Err(Error::Unsupported("sphere-uniform measures need equal generator weights".into()));
    }
    let words = group.sphere(radius);
    let m = S::one() / S::from_i64(words.len() as i64);
    GroupMeasure::from_atoms(words.into_iter().map(|w| (w, m.clone())))
}

/// Convex combination `Σ t_i μ_i`.
pub fn mix<S: Scalar>(solutions: &[(GroupMeasure<S>, S)]) -> Result<GroupMeasure<S>> {
    if solutions.is_empty() {
        return Err(Error::Input("nothing to mix".into()));
    }
    let mut total = S::zero();
    for (_, t) in solutions {
        if *t < S::zero() {
            return Err(Error::Input(format!("negative mixing weight {}", t.as_f64())));
        }
        total = total + t.clone();
    }
    let off = (total - S::one()).abs_val();
    if !(off.is_zero() || (!S::EXACT && off.as_f64() <= 1e-12)) {
        return Err(Error::Input("mixing weights must sum to 1".into()));
    }
    let mut out = GroupMeasure::new();
    for (mu, t) in solutions {
        for (w, m) in mu.atoms() {
            out.add(w.clone(), m.clone() * t.clone());
        }
    }
    Ok(out)
}

/// `(μ + μ̌) / 2` with `μ̌(γ) = μ(γ^{-1})`.
pub fn symmetrize<S: Scalar>(mu: &GroupMeasure<S>) -> GroupMeasure<S> {
    let half = S::one() / S::from_i64(2);
    let mut out = GroupMeasure::new();
    for (w, m) in mu.atoms() {
        out.add(w.clone(), m.clone() * half.clone());
        out.add(w.inverse(), m.clone() * half.clone());
    }
    out
}

/// Symmetrizes and re-verifies; the symmetric measure need not stationize.
pub fn symmetrize_and_verify<S: Scalar>(
    mu: &GroupMeasure<S>,
    nu: &BoundaryMeasure<S>,
    depth: usize,
) -> Result<(GroupMeasure<S>, StationarityReport<S>)> {
    let sym = symmetrize(mu);
    let report = verify_stationarity(&sym, nu, nu, depth)?;
    Ok((sym, report))
}
