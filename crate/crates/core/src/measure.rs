//! Boundary measures, Patterson-Sullivan densities and group measures.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::Lcf;
use crate::group::{VisualParams, WeightedFreeGroup, Word};
use crate::partition::Partition;
use crate::scalar::{q_to_f64, Rate, Scalar, Q};

const CONFORMAL_TOL: f64 = 1e-9;

/// Markov measure on infinite reduced words. In the conformal case it is the
/// Patterson-Sullivan measure at the identity.
#[derive(Debug, Clone)]
pub struct PsMeasure<S> {
    group: Arc<WeightedFreeGroup>,
    alpha: Rate,
    init: Vec<S>,
    trans: Vec<Vec<S>>,
    conformal: bool,
    normalizer: f64,
}

impl<S: Scalar> PsMeasure<S> {
    pub fn group(&self) -> &Arc<WeightedFreeGroup> {
        &self.group
    }

    pub fn alpha(&self) -> &Rate {
        &self.alpha
    }

    /// False when `alpha` is above the critical exponent and the measure is a
    /// normalized Markov substitute.
    pub fn conformal(&self) -> bool {
        self.conformal
    }

    /// `sum_x q_x / (1 + q_x)` with `q_x = e^{-alpha w_x}`; equals 1 exactly at
    /// the critical exponent.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn mass(&self, w: &Word) -> S {
        let ls = w.letters();
        let Some(first) = ls.first() else {
            return S::one();
        };
        let mut m = self.init[first.0 as usize].clone();
        for pair in ls.windows(2) {
            m = m * self.trans[pair[0].0 as usize][pair[1].0 as usize].clone();
        }
        m
    }
}

/// The Patterson-Sullivan measure of a weighted free group at exponent `alpha`.
///
/// Below the critical exponent the normalization diverges and an error is
/// returned; above it a Markov measure with the same branching weights is
/// returned with `conformal() == false`.
pub fn ps_base<S: Scalar>(group: &WeightedFreeGroup, alpha: &Rate) -> Result<PsMeasure<S>> {
    let n = group.num_letters();
    let qs: Vec<S> = group
        .letters()
        .map(|l| alpha.exp_neg::<S>(group.weight(l)))
        .collect::<Result<_>>()?;
    let ms: Vec<S> = qs.iter().map(|q| q.clone() / (S::one() + q.clone())).collect();
    let z = ms.iter().cloned().fold(S::zero(), |a, b| a + b);
    let zf = z.as_f64();
    let conformal = if S::EXACT { z == S::one() } else { (zf - 1.0).abs() <= CONFORMAL_TOL };
    if !conformal && zf > 1.0 {
        return Err(Error::DivergentNormalization {
            alpha: alpha.value(),
            critical: critical_exponent(group, 12).value,
        });
    }
    let (init, trans) = if conformal {
        let trans = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        if y == x ^ 1 {
                            S::zero()
                        } else {
                            (S::one() + qs[x].clone()) * ms[y].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        (ms, trans)
    } else {
        let total = qs.iter().cloned().fold(S::zero(), |a, b| a + b);
        let init = qs.iter().map(|q| q.clone() / total.clone()).collect();
        let trans = (0..n)
            .map(|x| {
                let row_total = total.clone() - qs[x ^ 1].clone();
                (0..n)
                    .map(|y| if y == x ^ 1 { S::zero() } else { qs[y].clone() / row_total.clone() })
                    .collect()
            })
            .collect();
        (init, trans)
    };
    Ok(PsMeasure {
        group: Arc::new(group.clone()),
        alpha: alpha.clone(),
        init,
        trans,
        conformal,
        normalizer: zf,
    })
}

/// A finite measure `F dnu0` where `nu0` is a [`PsMeasure`] and `F` is locally constant.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure<S> {
    base: Arc<PsMeasure<S>>,
    density: Lcf<S>,
}

impl<S: Scalar> BoundaryMeasure<S> {
    pub fn from_base(base: PsMeasure<S>) -> Self {
        let rank = base.group.rank();
        BoundaryMeasure { base: Arc::new(base), density: Lcf::constant(rank, S::one()) }
    }

    pub fn with_density(base: Arc<PsMeasure<S>>, density: Lcf<S>) -> Result<Self> {
        if density.values().iter().any(|v| *v < S::zero()) {
            return Err(Error::Input("negative density".into()));
        }
        Ok(BoundaryMeasure { base, density })
    }

    /// Builds a measure from cell masses.
    pub fn from_masses(base: Arc<PsMeasure<S>>, partition: Partition, masses: Vec<S>) -> Result<Self> {
        if masses.iter().any(|m| *m < S::zero()) {
            return Err(Error::Input("negative mass".into()));
        }
        let values: Vec<S> = partition
            .cells()
            .iter()
            .zip(masses)
            .map(|(c, m)| m / base.mass(c))
            .collect();
        let density = Lcf::new(partition, values)?;
        Ok(BoundaryMeasure { base, density })
    }

    pub fn base(&self) -> &Arc<PsMeasure<S>> {
        &self.base
    }

    pub fn group(&self) -> &WeightedFreeGroup {
        &self.base.group
    }

    pub fn density(&self) -> &Lcf<S> {
        &self.density
    }

    pub fn partition(&self) -> &Partition {
        self.density.partition()
    }

    pub fn mass_of(&self, w: &Word) -> S {
        let p = self.density.partition();
        if let Some(i) = p.containing(w) {
            return self.density.values()[i].clone() * self.base.mass(w);
        }
        p.range(w).fold(S::zero(), |acc, i| {
            acc + self.density.values()[i].clone() * self.base.mass(&p.cells()[i])
        })
    }

    /// Mass of a union of disjoint cylinders.
    pub fn mass_of_union(&self, cells: &[Word]) -> S {
        cells.iter().fold(S::zero(), |acc, c| acc + self.mass_of(c))
    }

    pub fn total(&self) -> S {
        self.mass_of(&Word::identity())
    }

    /// Cell masses on the density's own partition.
    pub fn cell_masses(&self) -> Vec<(Word, S)> {
        self.density
            .cells()
            .map(|(c, v)| (c.clone(), v.clone() * self.base.mass(c)))
            .collect()
    }

    pub fn masses_on(&self, p: &Partition) -> Vec<S> {
        p.cells().iter().map(|c| self.mass_of(c)).collect()
    }

    pub fn scale(&self, k: &S) -> Self {
        BoundaryMeasure { base: self.base.clone(), density: self.density.scale(k) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_base(other)?;
        Ok(BoundaryMeasure { base: self.base.clone(), density: self.density.add(&other.density) })
    }

    fn check_base(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.base, &other.base)
            || (self.base.group == other.base.group && self.base.alpha == other.base.alpha)
        {
            Ok(())
        } else {
            Err(Error::Input("measures have different base measures".into()))
        }
    }

    /// Measure `F * self` for a locally constant `F`.
    pub fn weighted(&self, f: &Lcf<S>) -> Self {
        BoundaryMeasure { base: self.base.clone(), density: self.density.mul(f) }
    }
}

/// Uniform Patterson-Sullivan measure as a [`BoundaryMeasure`].
pub fn uniform_ps_measure<S: Scalar>(
    group: &WeightedFreeGroup,
    params: &VisualParams,
) -> Result<BoundaryMeasure<S>> {
    Ok(BoundaryMeasure::from_base(ps_base(group, &params.alpha)?))
}

/// Estimate of the critical exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalExponent {
    /// Closed form for equal weights, otherwise the root of the branching equation.
    pub value: f64,
    pub closed_form: bool,
    /// `(1/n) log S_n` for `n = 1..=horizon`, `S_n = #{γ : n-1 < |γ| <= n}`.
    pub sphere_estimates: Vec<f64>,
    /// `log(S_h / S_{h-1})` at the horizon.
    pub growth_estimate: f64,
}

/// Counts of reduced words by weighted length, in units of `1/scale`.
struct LengthCounts {
    scale: u64,
    /// `counts[t]` = number of reduced words of scaled length exactly `t`.
    counts: Vec<f64>,
}

fn length_counts(group: &WeightedFreeGroup, max_len: u64) -> LengthCounts {
    let scale = group.weights().iter().fold(1u64, |acc, w| {
        acc.lcm(&w.denom().to_u64().unwrap_or(1))
    });
    let units: Vec<usize> = group
        .letters()
        .map(|l| (group.weight(l) * Q::from_integer(scale.into())).to_integer().to_usize().unwrap_or(1))
        .collect();
    let n = group.num_letters();
    let tmax = (max_len * scale) as usize;
    // by_last[t][x]: words of scaled length t ending in letter x.
    let mut by_last = vec![vec![0f64; n]; tmax + 1];
    for x in 0..n {
        if units[x] <= tmax {
            by_last[units[x]][x] += 1.0;
        }
    }
    for t in 0..=tmax {
        for x in 0..n {
            let c = by_last[t][x];
            if c == 0.0 {
                continue;
            }
            for y in 0..n {
                if y != x ^ 1 && t + units[y] <= tmax {
                    by_last[t + units[y]][y] += c;
                }
            }
        }
    }
    let mut counts: Vec<f64> = by_last.iter().map(|r| r.iter().sum()).collect();
    counts[0] = 1.0;
    LengthCounts { scale, counts }
}

impl LengthCounts {
    /// Words with `n - 1 < |γ| <= n` (the identity counts in shell 0).
    fn shell(&self, n: u64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let lo = ((n - 1) * self.scale + 1) as usize;
        let hi = (n * self.scale) as usize;
        self.counts[lo..=hi.min(self.counts.len() - 1)].iter().sum()
    }

    fn shell_sum(&self, n: u64, s: f64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let lo = ((n - 1) * self.scale + 1) as usize;
        let hi = (n * self.scale) as usize;
        (lo..=hi.min(self.counts.len() - 1))
            .map(|t| self.counts[t] * (-s * t as f64 / self.scale as f64).exp())
            .sum()
    }
}

/// Critical exponent with sphere-count diagnostics up to `horizon`.
pub fn critical_exponent(group: &WeightedFreeGroup, horizon: u64) -> CriticalExponent {
    let horizon = horizon.max(2);
    let counts = length_counts(group, horizon);
    let sphere_estimates: Vec<f64> =
        (1..=horizon).map(|n| counts.shell(n).ln() / n as f64).collect();
    let growth_estimate = (counts.shell(horizon) / counts.shell(horizon - 1)).ln();
    if group.equal_weights() {
        let w = q_to_f64(&group.weights()[0]);
        let value = ((group.num_letters() - 1) as f64).ln() / w;
        return CriticalExponent { value, closed_form: true, sphere_estimates, growth_estimate };
    }
    CriticalExponent {
        value: solve_branching(group),
        closed_form: false,
        sphere_estimates,
        growth_estimate,
    }
}

/// Root of `sum_x e^{-s w_x} / (1 + e^{-s w_x}) = 1`.
fn solve_branching(group: &WeightedFreeGroup) -> f64 {
    let ws: Vec<f64> = group.weights().iter().map(q_to_f64).collect();
    let f = |s: f64| ws.iter().map(|w| 2.0 / (1.0 + (s * w).exp())).sum::<f64>() - 1.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSeries {
    pub partial_sum: f64,
    /// Contribution of each shell `n - 1 < |γ| <= n`, starting with the identity.
    pub shell_terms: Vec<f64>,
    /// True when `s` is at or below the critical exponent.
    pub divergent: bool,
}

/// Partial sum of `sum e^{-s |γ|}` over `|γ| <= truncation`.
pub fn poincare_series(group: &WeightedFreeGroup, s: f64, truncation: u64) -> PoincareSeries {
    let truncation = truncation.max(1);
    let counts = length_counts(group, truncation);
    let shell_terms: Vec<f64> = (0..=truncation).map(|n| counts.shell_sum(n, s)).collect();
    let critical = critical_exponent(group, 2).value;
    PoincareSeries {
        partial_sum: shell_terms.iter().sum(),
        shell_terms,
        divergent: s <= critical * (1.0 + 1e-12),
    }
}

/// Total variation at `depth` between the closed-form measure and the
/// normalized truncated orbit measure at exponent `s` over words of at most
/// `letters` letters.
pub fn ps_truncation_audit(
    group: &WeightedFreeGroup,
    alpha: &Rate,
    s: f64,
    letters: usize,
    depth: usize,
) -> Result<f64> {
    let base = ps_base::<f64>(group, alpha)?;
    let n = group.num_letters();
    let qs: Vec<f64> = group.letters().map(|l| (-s * q_to_f64(group.weight(l))).exp()).collect();
    // tails[m][x]: sum over reduced continuations of at most m letters after x.
    let mut tails = vec![vec![1.0; n]];
    for m in 1..=letters {
        let prev = &tails[m - 1];
        let row = (0..n)
            .map(|x| 1.0 + (0..n).filter(|&y| y != x ^ 1).map(|y| qs[y] * prev[y]).sum::<f64>())
            .collect();
        tails.push(row);
    }
    let cells = group.sphere(depth);
    let weights: Vec<f64> = cells
        .iter()
        .map(|w| {
            let len = q_to_f64(&group.length(w));
            let last = w.last().map(|l| l.0 as usize).unwrap_or(0);
            let rest = letters.saturating_sub(w.len());
            (-s * len).exp() * tails[rest][last]
        })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(cells
        .iter()
        .zip(&weights)
        .map(|(c, w)| (w / total - base.mass(c)).abs())
        .sum::<f64>()
        / 2.0)
}

/// `d(γ_* ν)/dν = e^{-α ρ_{γ^{-1}, z}(e)}` for a conformal `ν` with constant density.
pub fn radon_nikodym<S: Scalar>(gamma: &Word, nu: &BoundaryMeasure<S>) -> Result<Lcf<S>> {
    if !nu.base.conformal {
        return Err(Error::NotConformal(format!(
            "exponent {} is not critical (normalizer {})",
            nu.base.alpha, nu.base.normalizer
        )));
    }
    let d = nu.density.coarsen();
    if d.partition().len() != 1 {
        return Err(Error::NotConformal("density is not constant".into()));
    }
    let group = nu.group();
    let cells = group.locally_constant_depth(&gamma.inverse(), &Word::identity());
    let mut ws = Vec::with_capacity(cells.len());
    let mut vs = Vec::with_capacity(cells.len());
    for (c, rho) in cells {
        vs.push(nu.base.alpha.exp_neg::<S>(&rho)?);
        ws.push(c);
    }
    Lcf::new(Partition::from_sorted_unchecked(group.rank(), ws), vs)
}

/// `(γ_* ν)(E) = ν(γ E)`.
pub fn pushforward<S: Scalar>(gamma: &Word, nu: &BoundaryMeasure<S>) -> BoundaryMeasure<S> {
    if gamma.is_empty() {
        return nu.clone();
    }
    let rank = nu.group().rank();
    let ginv = gamma.inverse();
    let fp = nu.density.partition();
    let part = Partition::trivial(rank).split_while(|c| {
        if c.is_empty() || ginv.starts_with(c) {
            return true;
        }
        let w = gamma.mul(c);
        fp.containing(&w).is_none()
    });
    let base = &nu.base;
    let density = Lcf::from_fn(part, |c| {
        let w = gamma.mul(c);
        let f = nu.density.value_on(&w).expect("refined").clone();
        f * base.mass(&w) / base.mass(c)
    });
    BoundaryMeasure { base: base.clone(), density }
}

/// Finitely supported measure on the group, ordered by word.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMeasure<S> {
    atoms: BTreeMap<Word, S>,
}

impl<S: Scalar> Default for GroupMeasure<S> {
    fn default() -> Self {
        GroupMeasure { atoms: BTreeMap::new() }
    }
}

impl<S: Scalar> GroupMeasure<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Word, S)>) -> Result<Self> {
        let mut m = Self::new();
        for (w, v) in atoms {
            if !(v > S::zero()) {
                return Err(Error::Input(format!("weight of `{w}` must be positive")));
            }
            m.add(w, v);
        }
        Ok(m)
    }

    pub fn dirac(w: Word) -> Self {
        let mut m = Self::new();
        m.add(w, S::one());
        m
    }

    /// Adds mass to an atom; nonpositive amounts are ignored.
    pub fn add(&mut self, w: Word, v: S) {
        if !(v > S::zero()) {
            return;
        }
        match self.atoms.get_mut(&w) {
            Some(x) => *x = x.clone() + v,
            None => {
                self.atoms.insert(w, v);
            }
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.atoms.iter()
    }

    pub fn get(&self, w: &Word) -> Option<&S> {
        self.atoms.get(w)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> S {
        self.atoms.values().cloned().fold(S::zero(), |a, b| a + b)
    }

    pub fn scale(&self, k: &S) -> Self {
        GroupMeasure { atoms: self.atoms.iter().map(|(w, v)| (w.clone(), v.clone() * k.clone())).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.total();
        if !(t > S::zero()) {
            return Err(Error::Input("cannot normalize an empty measure".into()));
        }
        Ok(self.scale(&(S::one() / t)))
    }

    pub fn max_word_len(&self) -> usize {
        self.atoms.keys().map(|w| w.len()).max().unwrap_or(0)
    }
}

/// `μ ⋆ ν = Σ μ(γ) γ_* ν`.
///
/// Pushforwards run in parallel; the sum is folded in word order so the
/// result does not depend on scheduling.
pub fn convolve<S: Scalar>(mu: &GroupMeasure<S>, nu: &BoundaryMeasure<S>) -> BoundaryMeasure<S> {
    let atoms: Vec<(&Word, &S)> = mu.atoms().collect();
    let rank = nu.group().rank();
    if atoms.is_empty() {
        return BoundaryMeasure { base: nu.base.clone(), density: Lcf::constant(rank, S::zero()) };
    }
    let pushed: Vec<BoundaryMeasure<S>> = atoms.par_iter().map(|(g, _)| pushforward(g, nu)).collect();
    let common = Partition::union_of(rank, pushed.iter().map(|m| m.density.partition()));
    let mut values = vec![S::zero(); common.len()];
    for ((_, w), m) in atoms.iter().zip(&pushed) {
        for (c, v) in m.density.cells() {
            let add = (*w).clone() * v.clone();
            for i in common.meeting(c) {
                values[i] = values[i].clone() + add.clone();
            }
        }
    }
    BoundaryMeasure { base: nu.base.clone(), density: Lcf::new(common, values).expect("sizes match") }
}

/// `∫ f dν`.
pub fn integrate<S: Scalar>(f: &Lcf<S>, nu: &BoundaryMeasure<S>) -> S {
    let p = f.partition().refine(nu.density.partition());
    let fv = f.refine_to(&p).expect("refinement");
    let dv = nu.density.refine_to(&p).expect("refinement");
    p.cells()
        .iter()
        .zip(fv.values().iter().zip(dv.values()))
        .fold(S::zero(), |acc, (c, (a, b))| acc + a.clone() * b.clone() * nu.base.mass(c))
}

/// `‖f - g‖_{L^1(ν)}`.
pub fn l1_distance<S: Scalar>(f: &Lcf<S>, g: &Lcf<S>, nu: &BoundaryMeasure<S>) -> S {
    integrate(&f.sub(g).abs(), nu)
}

/// Largest absolute cell difference of two measures on the depth-`d` partition.
pub fn max_cell_difference<S: Scalar>(a: &BoundaryMeasure<S>, b: &BoundaryMeasure<S>, depth: usize) -> (S, Word) {
    let p = Partition::uniform(a.group().rank(), depth);
    p.cells()
        .par_iter()
        .map(|c| ((a.mass_of(c) - b.mass_of(c)).abs_val(), c.clone()))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((S::zero(), Word::identity()), |best, x| if x.0 > best.0 { x } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn setup() -> (WeightedFreeGroup, VisualParams, BoundaryMeasure<Q>) {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let p = VisualParams::new(Rate::parse("log 3").unwrap(), Rate::parse("log 3").unwrap());
        let nu = uniform_ps_measure::<Q>(&g, &p).unwrap();
        (g, p, nu)
    }

    #[test]
    fn uniform_masses() {
        let (g, _, nu) = setup();
        let w = |s| g.parse_word(s).unwrap();
        assert_eq!(nu.mass_of(&w("a")), q(1, 4));
        assert_eq!(nu.mass_of(&w("a b")), q(1, 12));
        assert_eq!(nu.total(), qi(1));
        assert!(nu.base().conformal());
    }

    #[test]
    fn subcritical_exponent_diverges() {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let r = ps_base::<Q>(&g, &Rate::parse("log 2").unwrap());
        assert!(matches!(r, Err(Error::DivergentNormalization { .. })));
        let m = ps_base::<Q>(&g, &Rate::parse("log 5").unwrap()).unwrap();
        assert!(!m.conformal());
        let nu = BoundaryMeasure::from_base(m);
        assert_eq!(nu.total(), qi(1));
        assert!(radon_nikodym(&Word::identity(), &nu).is_err());
    }

    #[test]
    fn critical_exponents() {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let c = critical_exponent(&g, 12);
        assert!(c.closed_form);
        assert!((c.value - 3f64.ln()).abs() < 1e-15);
        assert!((c.growth_estimate - 3f64.ln()).abs() < 1e-6);
        let g3 = WeightedFreeGroup::unit(3).unwrap();
        assert!((critical_exponent(&g3, 6).value - 5f64.ln()).abs() < 1e-15);
        let h = WeightedFreeGroup::from_weight_strs(&["1", "2"]).unwrap();
        let c = critical_exponent(&h, 30);
        assert!(!c.closed_form);
        assert!((c.growth_estimate - c.value).abs() < 1e-2);
    }

    #[test]
    fn poincare_partial_sums() {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let s = poincare_series(&g, 2.0 * 3f64.ln(), 8);
        assert!(!s.divergent);
        assert!(*s.shell_terms.last().unwrap() < 1e-3);
        let z = poincare_series(&g, 0.0, 3);
        assert_eq!(z.partial_sum, 1.0 + 4.0 + 12.0 + 36.0);
        let c = poincare_series(&g, 3f64.ln(), 6);
        assert!(c.divergent);
        assert!((c.shell_terms[3] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radon_nikodym_of_generator() {
        let (g, _, nu) = setup();
        let w = |s| g.parse_word(s).unwrap();
        let f = radon_nikodym(&w("a^-1"), &nu).unwrap();
        assert_eq!(*f.value_on(&w("a")).unwrap(), qi(3));
        assert_eq!(*f.value_on(&w("b")).unwrap(), q(1, 3));
        assert_eq!(*f.value_on(&w("a^-1")).unwrap(), q(1, 3));
        assert_eq!(integrate(&f, &nu), qi(1));
        let one = radon_nikodym(&Word::identity(), &nu).unwrap();
        assert_eq!(one.values(), &[qi(1)]);
    }

    #[test]
    fn pushforward_of_generator() {
        let (g, _, nu) = setup();
        let w = |s| g.parse_word(s).unwrap();
        let m = pushforward(&w("a^-1"), &nu);
        assert_eq!(m.mass_of(&w("a")), q(3, 4));
        assert_eq!(m.total(), qi(1));
        assert_eq!(pushforward(&Word::identity(), &nu).total(), qi(1));
    }

    #[test]
    fn sphere_one_is_stationary() {
        let (g, _, nu) = setup();
        let mu = GroupMeasure::from_atoms(g.sphere(1).into_iter().map(|w| (w, q(1, 4)))).unwrap();
        let c = convolve(&mu, &nu);
        let (err, _) = max_cell_difference(&c, &nu, 4);
        assert_eq!(err, qi(0));
    }

    #[test]
    fn l1_distance_two_cells() {
        let (g, _, nu) = setup();
        let f = Lcf::new(Partition::uniform(2, 1), vec![qi(1), qi(0), qi(0), qi(0)]).unwrap();
        let h = Lcf::constant(2, q(1, 2));
        // |1 - 1/2| * 1/4 + |0 - 1/2| * 3/4
        assert_eq!(l1_distance(&f, &h, &nu), q(1, 2));
        let _ = g;
    }

    #[test]
    fn truncated_orbit_measure_is_close() {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let tv = ps_truncation_audit(&g, &Rate::parse("log 3").unwrap(), 3f64.ln() + 0.01, 10, 2).unwrap();
        assert!(tv < 1e-12);
    }
}
