//! Spikes: concentrated densities and the audits of their defining inequalities.

use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::Lcf;
use crate::group::{VisualParams, WeightedFreeGroup, Word};
use crate::measure::{radon_nikodym, BoundaryMeasure};
use crate::partition::Partition;
use crate::scalar::{q_to_f64, qi, smax, Rate, Scalar, Q};

/// A spike `(h, r, a, Q, θ, C)` with `r = e^{-ε t}`.
#[derive(Debug, Clone)]
pub struct Spike<S> {
    pub function: Lcf<S>,
    /// `t` in `r = e^{-ε t}`.
    pub radius_exp: Q,
    /// The center `a` is the canonical ray through this word.
    pub center: Word,
    pub eps: Rate,
    /// `ε Q`.
    pub q_rate: Rate,
    /// `ε θ`.
    pub theta_rate: Rate,
    pub constant: S,
    pub gamma: Word,
    pub margin: Q,
}

impl<S: Scalar> Spike<S> {
    pub fn radius(&self) -> Result<S> {
        self.eps.exp_neg(&self.radius_exp)
    }

    pub fn q(&self) -> f64 {
        self.q_rate.value() / self.eps.value()
    }

    pub fn theta(&self) -> f64 {
        self.theta_rate.value() / self.eps.value()
    }

    /// The closed ball `B(a, r)` as a single cylinder.
    pub fn ball(&self, group: &WeightedFreeGroup) -> Word {
        group.shortest_prefix_reaching(&self.center, &self.radius_exp)
    }

    /// `r^Q`.
    pub fn radius_pow_q(&self) -> Result<S> {
        self.q_rate.exp_neg(&self.radius_exp)
    }

    /// Same spike with a different function and constant.
    pub fn with_function(&self, function: Lcf<S>, constant: S) -> Spike<S> {
        Spike { function, constant, ..self.clone() }
    }
}

/// A required constant and the cell where it is attained. `required == None`
/// means no finite constant works.
#[derive(Debug, Clone, PartialEq)]
pub struct Check<S> {
    pub required: Option<S>,
    pub witness: Option<Word>,
    pub ok: bool,
}

impl<S: Scalar> Check<S> {
    fn new(found: Requirement<S>, cap: &S) -> Check<S> {
        let ok = match &found.value {
            Some(v) => v.le_tol(cap),
            None => false,
        };
        Check { required: found.value, witness: found.witness, ok }
    }
}

/// Running maximum of required constants.
struct Requirement<S> {
    value: Option<S>,
    witness: Option<Word>,
    infinite: bool,
}

impl<S: Scalar> Requirement<S> {
    fn new() -> Self {
        Requirement { value: Some(S::one()), witness: None, infinite: false }
    }

    fn push(&mut self, v: S, at: &Word) {
        if self.infinite {
            return;
        }
        if let Some(cur) = &self.value {
            if v > *cur {
                self.value = Some(v);
                self.witness = Some(at.clone());
            }
        }
    }

    fn fail(&mut self, at: &Word) {
        if !self.infinite {
            self.infinite = true;
            self.value = None;
            self.witness = Some(at.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeReport<S> {
    /// Height on the ball.
    pub cond1: Check<S>,
    /// Decay off the ball against the singular kernel.
    pub cond2: Check<S>,
    /// Oscillation within `r`-balls.
    pub cond3: Check<S>,
    /// `D_r h <= C h / r`; present for Q-spike reports.
    pub lipschitz: Option<Check<S>>,
    /// `ν(B(a, r)) >= r^Q / C`; present for Q-spike reports.
    pub ball_mass: Option<Check<S>>,
    /// `ν(B(a, 5r)) / ν(B(a, r))`.
    pub local_doubling: f64,
    /// Tightest constant satisfying every checked condition.
    pub measured_c: Option<S>,
}

impl<S: Scalar> SpikeReport<S> {
    pub fn all_ok(&self) -> bool {
        self.cond1.ok
            && self.cond2.ok
            && self.cond3.ok
            && self.lipschitz.as_ref().is_none_or(|c| c.ok)
            && self.ball_mass.as_ref().is_none_or(|c| c.ok)
    }

    fn checks(&self) -> impl Iterator<Item = &Check<S>> {
        [Some(&self.cond1), Some(&self.cond2), Some(&self.cond3), self.lipschitz.as_ref(), self.ball_mass.as_ref()]
            .into_iter()
            .flatten()
    }
}

/// Unit spike from the derivative `f_γ`: center `z+ = C(γ^{-1})`,
/// `r = e^{-ε(|γ| - D)}`, `Q = θ = α/ε`, and the tightest measured constant.
pub fn make_spike<S: Scalar>(
    gamma: &Word,
    nu: &BoundaryMeasure<S>,
    params: &VisualParams,
    margin: &Q,
) -> Result<Spike<S>> {
    if gamma.is_empty() {
        return Err(Error::DegenerateSpike("the identity has no spike".into()));
    }
    let group = nu.group();
    let f = radon_nikodym(gamma, nu)?;
    let sup = f.sup();
    let function = f.scale(&(S::one() / sup));
    let t = group.length(gamma) - margin;
    let spike = Spike {
        function,
        radius_exp: if t < Q::zero() { Q::zero() } else { t },
        center: gamma.inverse(),
        eps: params.eps.clone(),
        q_rate: params.alpha.clone(),
        theta_rate: params.alpha.clone(),
        constant: S::one(),
        gamma: gamma.clone(),
        margin: margin.clone(),
    };
    let report = verify_q_spike(&spike, nu)?;
    let c = report.measured_c.ok_or_else(|| {
        Error::DegenerateSpike(format!("no finite constant for `{}`", group.format_word(gamma)))
    })?;
    Ok(Spike { constant: c, ..spike })
}

/// Checks the three spike conditions exactly on cylinders.
pub fn verify_spike<S: Scalar>(s: &Spike<S>, nu: &BoundaryMeasure<S>) -> Result<SpikeReport<S>> {
    let group = nu.group();
    let ball = s.ball(group);
    let h = s.function.refine_to(&s.function.partition().along(&ball))?;
    let sup = h.sup();

    // 1: h >= sup / C on the ball.
    let mut c1 = Requirement::new();
    let (min_ball, _) = h.bounds_on(&ball);
    if min_ball > S::zero() {
        c1.push(sup.clone() / min_ball, &ball);
    } else {
        c1.fail(&ball);
    }

    // 2: h(y) <= h(a) r^Q C ν(B) e^{ε(Q+θ)(y·a)} off the ball.
    let mut c2 = Requirement::new();
    let h_a = h.at_ray(&s.center).clone();
    let nu_ball = nu.mass_of(&ball);
    let scale = h_a * s.radius_pow_q()? * nu_ball;
    let kernel = s.q_rate.plus(&s.theta_rate);
    if !(scale > S::zero()) {
        c2.fail(&ball);
    } else {
        for (c, v) in h.cells() {
            if c.starts_with(&ball) {
                continue;
            }
            if !(*v > S::zero()) {
                c2.fail(c);
                break;
            }
            let prod = group.length(&ball.prefix(c.lcp_len(&ball)));
            let grow: S = kernel.exp_neg(&prod)?;
            c2.push(v.clone() * grow / scale.clone(), c);
        }
    }

    // 3: max/min within every r-ball.
    let c3 = oscillation(&h, group, &s.radius_exp);

    let local_doubling = local_doubling(nu, group, &s.center, &s.radius_exp, s.eps.value(), 5.0);
    let mut report = SpikeReport {
        cond1: Check::new(c1, &s.constant),
        cond2: Check::new(c2, &s.constant),
        cond3: Check::new(c3, &s.constant),
        lipschitz: None,
        ball_mass: None,
        local_doubling,
        measured_c: None,
    };
    report.measured_c = measured(&report);
    Ok(report)
}

/// Spike conditions plus the scale-`r` Lipschitz bound and the ball mass bound.
pub fn verify_q_spike<S: Scalar>(s: &Spike<S>, nu: &BoundaryMeasure<S>) -> Result<SpikeReport<S>> {
    let mut report = verify_spike(s, nu)?;
    let group = nu.group();
    let h = &s.function;

    let mut lip = Requirement::new();
    let d = lipschitz_scale(h, group, &s.radius_exp, &s.eps)?;
    let r: S = s.radius()?;
    for ((c, dv), hv) in d.cells().zip(h.values()) {
        if dv.is_zero() {
            continue;
        }
        if !(*hv > S::zero()) {
            lip.fail(c);
            break;
        }
        lip.push(dv.clone() * r.clone() / hv.clone(), c);
    }

    let ball = s.ball(group);
    let mut mass = Requirement::new();
    let nu_ball = nu.mass_of(&ball);
    if nu_ball > S::zero() {
        mass.push(s.radius_pow_q()? / nu_ball, &ball);
    } else {
        mass.fail(&ball);
    }
    report.lipschitz = Some(Check::new(lip, &s.constant));
    report.ball_mass = Some(Check::new(mass, &s.constant));
    report.measured_c = measured(&report);
    Ok(report)
}

fn measured<S: Scalar>(r: &SpikeReport<S>) -> Option<S> {
    r.checks().try_fold(S::one(), |acc, c| c.required.clone().map(|v| smax(acc, v)))
}

/// Largest `max/min` of `h` over closed balls of radius `e^{-ε t}`; `None`
/// when some ball mixes zero and nonzero values.
pub fn ball_oscillation<S: Scalar>(h: &Lcf<S>, group: &WeightedFreeGroup, t: &Q) -> Option<S> {
    oscillation(h, group, t).value
}

fn oscillation<S: Scalar>(h: &Lcf<S>, group: &WeightedFreeGroup, t: &Q) -> Requirement<S> {
    let mut req = Requirement::new();
    let mut seen: HashMap<Word, ()> = HashMap::new();
    for c in h.partition().cells() {
        let v = group.shortest_prefix_reaching(c, t);
        if v.len() > c.len() || seen.insert(v.clone(), ()).is_some() {
            continue;
        }
        let (lo, hi) = h.bounds_on(&v);
        if lo > S::zero() {
            req.push(hi / lo, &v);
        } else if hi > S::zero() || lo < S::zero() {
            req.fail(&v);
        }
    }
    req
}

/// `ν(B(a, k r)) / ν(B(a, r))` for `r = e^{-ε t}`.
pub fn local_doubling<S: Scalar>(
    nu: &BoundaryMeasure<S>,
    group: &WeightedFreeGroup,
    center: &Word,
    t: &Q,
    eps: f64,
    factor: f64,
) -> f64 {
    let inner = group.shortest_prefix_reaching(center, t);
    let threshold = q_to_f64(t) - factor.ln() / eps;
    let mut n = 0;
    while q_to_f64(&group.ray_length(center, n)) < threshold - 1e-12 {
        n += 1;
    }
    let outer = center.ray(n).prefix(n);
    let small = nu.mass_of(&inner).as_f64();
    if small == 0.0 {
        return f64::INFINITY;
    }
    nu.mass_of(&outer).as_f64() / small
}

/// Lipschitz constant at scale `r = e^{-ε t}`, cell by cell:
/// `max |f(x) - f(y)| / d(x, y)` over `y` with `d(x, y) <= r`.
pub fn lipschitz_scale<S: Scalar>(
    f: &Lcf<S>,
    group: &WeightedFreeGroup,
    radius_exp: &Q,
    eps: &Rate,
) -> Result<Lcf<S>> {
    let mut bounds: HashMap<Word, (S, S)> = HashMap::new();
    let mut values = Vec::with_capacity(f.partition().len());
    for (c, v) in f.cells() {
        let mut best = S::zero();
        let mut len = Q::zero();
        for i in 0..c.len() {
            if i > 0 {
                len += group.weight(c.letters()[i - 1]);
            }
            if len < *radius_exp {
                continue;
            }
            let u = c.prefix(i);
            let (lo, hi) = bounds.entry(u).or_insert_with_key(|u| f.bounds_on(u)).clone();
            let spread = smax(v.clone() - lo, hi - v.clone());
            if spread > S::zero() {
                let inv_d: S = eps.exp_neg(&-len.clone())?;
                best = smax(best, spread * inv_d);
            }
        }
        values.push(best);
    }
    Lcf::new(f.partition().clone(), values)
}

/// One `(center, radius)` evaluation of the decay integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEntry {
    pub center: String,
    pub radius: f64,
    pub integral: f64,
    /// `r^p * integral`, or `integral / (1 + |log r|)` when `p = 0`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub entries: Vec<DecayEntry>,
    /// Smallest constant valid at the requested radii.
    pub d_nu: f64,
    /// Smallest constant valid at every radius in `(0, 1]` down to the horizon.
    pub d_nu_sup: f64,
    /// Upper regularity constant `sup ν(B(x, r)) / r^{Q}` with `Q = α_ν / ε`.
    pub regularity: f64,
    /// Constant from the regularity-implies-decay argument; never below `d_nu_sup`.
    pub lemma_bound: f64,
}

/// Evaluates `∫_{X - B(x, r)} d(y, x)^{-(p + α)} dν(y)` exactly on shells.
pub fn decay_check<S: Scalar>(
    nu: &BoundaryMeasure<S>,
    p: f64,
    alpha: f64,
    eps: &Rate,
    centers: &[Word],
    radii: &[f64],
) -> Result<DecayReport> {
    if radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::Input("radii must lie in (0, 1]".into()));
    }
    if centers.is_empty() {
        return Err(Error::Input("no centers".into()));
    }
    let group = nu.group();
    let e = eps.value();
    let q_reg = nu.base().alpha().value() / e;
    let r_min = radii.iter().cloned().fold(1.0, f64::min);
    let scaled = |integral: f64, r: f64| {
        if p == 0.0 {
            integral / (1.0 + r.ln().abs())
        } else {
            integral * r.powf(p)
        }
    };
    let mut entries = Vec::new();
    let mut d_nu_sup = 0f64;
    let mut regularity = 0f64;
    let mut lemma_bound = 0f64;
    for x in centers {
        // Shells u_0 = e, u_1, ... along the ray through x.
        let mut dists = Vec::new();
        let mut weights = Vec::new();
        let mut ball_masses = Vec::new();
        let mut m = 0;
        loop {
            let u = x.ray(m).prefix(m);
            let d = (-e * q_to_f64(&group.length(&u))).exp();
            let next = x.ray(m + 1).prefix(m + 1);
            let mu = nu.mass_of(&u).as_f64();
            let w = mu - nu.mass_of(&next).as_f64();
            dists.push(d);
            weights.push(w);
            ball_masses.push(mu);
            if d < r_min * 1e-2 && m > x.len() + 2 {
                break;
            }
            m += 1;
        }
        for (d, bm) in dists.iter().zip(&ball_masses) {
            regularity = regularity.max(bm / d.powf(q_reg));
        }
        for &r in radii {
            let integral: f64 = dists
                .iter()
                .zip(&weights)
                .filter(|(d, _)| **d > r * (1.0 + 1e-12))
                .map(|(d, w)| w * d.powf(-(p + alpha)))
                .sum();
            entries.push(DecayEntry {
                center: group.format_word(x),
                radius: r,
                integral,
                scaled: scaled(integral, r),
            });
        }
        // Just below d_{m-1} the integral covers shells 0..m-1.
        let mut acc = 0.0;
        let mut lemma_acc = 0.0;
        for j in 0..dists.len() {
            acc += weights[j] * dists[j].powf(-(p + alpha));
            lemma_acc += dists[j].powf(q_reg - p - alpha);
            d_nu_sup = d_nu_sup.max(scaled(acc, dists[j]));
            lemma_bound = lemma_bound.max(scaled(lemma_acc, dists[j]));
        }
    }
    let d_nu = entries.iter().map(|en| en.scaled).fold(0.0, f64::max);
    Ok(DecayReport { entries, d_nu, d_nu_sup, regularity, lemma_bound: lemma_bound * regularity })
}

/// Shadow Lemma audit for one `(γ, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowEntry<S> {
    pub gamma: Word,
    pub margin: Q,
    pub mass: S,
    /// `e^{-α U}`.
    pub expected: S,
    /// `e^{-α U} / ν(O)`.
    pub lower_ratio: S,
    /// `ν(O) / (e^{-α U} e^{2 α D})`.
    pub upper_ratio: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowAudit<S> {
    pub beta: S,
    /// Smallest margin audited.
    pub d0: Q,
    /// Tightest `β` for each margin.
    pub per_margin: Vec<(Q, S)>,
    pub witness: Option<(Word, Q)>,
    pub entries: Vec<ShadowEntry<S>>,
}

/// Tightest `β` with `β^{-1} e^{-αU} <= ν(O(γ, D)) <= β e^{-αU} e^{2αD}`
/// over `1 <= |γ| <= max_len` (letters) and the given margins.
pub fn shadow_lemma_audit<S: Scalar>(
    nu: &BoundaryMeasure<S>,
    params: &VisualParams,
    max_len: usize,
    margins: &[Q],
) -> Result<ShadowAudit<S>> {
    if max_len < 1 || margins.is_empty() {
        return Err(Error::Input("audit needs max_len >= 1 and at least one margin".into()));
    }
    let group = nu.group();
    let e = Word::identity();
    let words: Vec<Word> = group.ball(max_len).into_iter().skip(1).collect();
    let mut entries = Vec::new();
    for d in margins {
        let found: Vec<Result<ShadowEntry<S>>> = words
            .par_iter()
            .map(|g| {
                let shadow = group.shadow(g, d, &e)?;
                let mass = nu.mass_of_union(&shadow);
                let u = group.u_value(g, &e);
                let expected: S = params.alpha.exp_neg(&u)?;
                let widen: S = params.alpha.exp_neg(&(-(d.clone() * qi(2))))?;
                let lower_ratio = if mass > S::zero() {
                    expected.clone() / mass.clone()
                } else {
                    return Err(Error::Invariant(format!("empty shadow mass at `{}`", group.format_word(g))));
                };
                let upper_ratio = mass.clone() / (expected.clone() * widen);
                Ok(ShadowEntry { gamma: g.clone(), margin: d.clone(), mass, expected, lower_ratio, upper_ratio })
            })
            .collect();
        for r in found {
            entries.push(r?);
        }
    }
    let mut beta = S::one();
    let mut witness = None;
    let mut per_margin = Vec::new();
    for d in margins {
        let mut b = S::one();
        for en in entries.iter().filter(|en| en.margin == *d) {
            for v in [&en.lower_ratio, &en.upper_ratio] {
                if *v > b {
                    b = v.clone();
                }
                if *v > beta {
                    beta = v.clone();
                    witness = Some((en.gamma.clone(), d.clone()));
                }
            }
        }
        per_margin.push((d.clone(), b));
    }
    let d0 = margins.iter().min().cloned().unwrap_or_else(Q::zero);
    Ok(ShadowAudit { beta, d0, per_margin, witness, entries })
}

/// Measured constants entering the greedy rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureConstants {
    /// Besicovitch constant of the shell covers (disjoint cylinders).
    pub b: f64,
    pub d_nu: f64,
    pub t_nu: f64,
    pub q: f64,
    /// `L_ν` from `3 L_ν = 1 / (1 + B + D_ν B + B T_ν + B D_ν 2^Q)`.
    pub l_nu: f64,
}

/// Measures `D_ν` (decay with `p = Q`, kernel exponent `Q + θ`, `θ = Q`) and
/// `T_ν` (local doubling at factor 5) over centers of at most `max_len`
/// letters and cylinder radii, then applies the formula for `L_ν`.
pub fn measure_constants<S: Scalar>(
    nu: &BoundaryMeasure<S>,
    params: &VisualParams,
    max_len: usize,
) -> Result<MeasureConstants> {
    let group = nu.group();
    let q = params.q_exponent();
    let centers = group.sphere(max_len.max(1));
    let radii: Vec<f64> = (0..=max_len + 1)
        .map(|n| (-params.eps.value() * q_to_f64(&group.min_weight()) * n as f64).exp())
        .collect();
    let decay = decay_check(nu, q, q, &params.eps, &centers, &radii)?;
    let mut t_nu = 1f64;
    for c in &centers {
        for n in 0..=max_len + 1 {
            let t = group.ray_length(c, n);
            t_nu = t_nu.max(local_doubling(nu, group, c, &t, params.eps.value(), 5.0));
        }
    }
    let b = 1.0;
    let d_nu = decay.d_nu_sup;
    let l_nu = 1.0 / (3.0 * (1.0 + b + d_nu * b + b * t_nu + b * d_nu * 2f64.powf(q)));
    Ok(MeasureConstants { b, d_nu, t_nu, q, l_nu })
}

/// Partition on which every spike in `spikes` is constant.
pub fn common_partition<S: Scalar>(rank: usize, spikes: &[Spike<S>]) -> Partition {
    Partition::union_of(rank, spikes.iter().map(|s| s.function.partition()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::uniform_ps_measure;
    use crate::scalar::q;

    fn setup() -> (WeightedFreeGroup, VisualParams, BoundaryMeasure<Q>) {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let p = VisualParams::new(Rate::parse("log 3").unwrap(), Rate::parse("log 3").unwrap());
        let nu = uniform_ps_measure::<Q>(&g, &p).unwrap();
        (g, p, nu)
    }

    #[test]
    fn generator_spike() {
        let (g, p, nu) = setup();
        let w = |s| g.parse_word(s).unwrap();
        let s = make_spike(&w("a^-1"), &nu, &p, &qi(0)).unwrap();
        assert_eq!(*s.function.value_on(&w("a")).unwrap(), qi(1));
        assert_eq!(*s.function.value_on(&w("b")).unwrap(), q(1, 9));
        assert_eq!(s.function.sup(), qi(1));
        assert_eq!(s.radius().unwrap(), q(1, 3));
        let rep = verify_spike(&s, &nu).unwrap();
        assert!(rep.all_ok());
        assert_eq!(rep.cond1.required, Some(qi(1)));
        let rep = verify_q_spike(&s, &nu).unwrap();
        assert_eq!(rep.ball_mass.unwrap().required, Some(q(4, 3)));
        assert_eq!(s.constant, q(4, 3));
        assert!(make_spike(&Word::identity(), &nu, &p, &qi(0)).is_err());
    }

    #[test]
    fn constant_spike_passes() {
        let (g, p, nu) = setup();
        let s = Spike {
            function: Lcf::constant(2, qi(1)),
            radius_exp: qi(0),
            center: g.parse_word("b").unwrap(),
            eps: p.eps.clone(),
            q_rate: p.alpha.clone(),
            theta_rate: p.alpha.clone(),
            constant: qi(1),
            gamma: Word::identity(),
            margin: qi(0),
        };
        let rep = verify_q_spike(&s, &nu).unwrap();
        assert!(rep.all_ok());
        assert_eq!(rep.measured_c, Some(qi(1)));
    }

    #[test]
    fn zero_outside_fails_condition_two() {
        let (g, p, nu) = setup();
        let w = |s| g.parse_word(s).unwrap();
        let part = Partition::path(2, &w("a b a"));
        let f = Lcf::from_fn(part, |c| if *c == w("a b a") { qi(1) } else { qi(0) });
        let s = Spike {
            function: f,
            radius_exp: qi(3),
            center: w("a b a"),
            eps: p.eps.clone(),
            q_rate: p.alpha.clone(),
            theta_rate: p.alpha.clone(),
            constant: qi(2),
            gamma: Word::identity(),
            margin: qi(0),
        };
        let rep = verify_spike(&s, &nu).unwrap();
        assert!(rep.cond1.ok);
        assert!(!rep.cond2.ok);
        assert!(rep.cond2.witness.is_some());
        assert_eq!(rep.measured_c, None);
    }

    #[test]
    fn lipschitz_below_cell_scale_vanishes() {
        let (g, p, nu) = setup();
        let f = radon_nikodym(&g.parse_word("a^-1").unwrap(), &nu).unwrap();
        let d = lipschitz_scale(&f, &g, &qi(2), &p.eps).unwrap();
        assert!(d.values().iter().all(|v| v.is_zero()));
        // At scale 1 every cell sees the jump 3 - 1/3 at distance 1.
        let d = lipschitz_scale(&f, &g, &qi(0), &p.eps).unwrap();
        assert_eq!(d.sup(), q(8, 3));
    }

    #[test]
    fn shadow_audit_small() {
        let (_, p, nu) = setup();
        let a = shadow_lemma_audit(&nu, &p, 3, &[qi(0), qi(1), qi(2)]).unwrap();
        assert_eq!(a.beta, q(4, 3));
        assert_eq!(a.d0, qi(0));
        let e2 = a.entries.iter().find(|e| e.gamma.len() == 2 && e.margin == qi(0)).unwrap();
        assert_eq!(e2.mass, q(1, 12));
        assert_eq!(e2.expected, q(1, 9));
    }

    #[test]
    fn decay_and_constants() {
        let (g, p, nu) = setup();
        let centers = g.sphere(2);
        let rep = decay_check(&nu, 1.0, 1.0, &p.eps, &centers, &[1.0, 1.0 / 3.0, 1.0 / 9.0]).unwrap();
        assert!((rep.d_nu - 0.25).abs() < 1e-12);
        assert!((rep.d_nu_sup - 0.75).abs() < 1e-12);
        assert!(rep.d_nu_sup <= rep.lemma_bound);
        let c = measure_constants(&nu, &p, 3).unwrap();
        assert!((c.t_nu - 4.0).abs() < 1e-12);
        assert!((c.l_nu - 1.0 / 24.75).abs() < 1e-12);
    }
}
