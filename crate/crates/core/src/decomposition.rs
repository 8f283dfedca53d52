//! Greedy decomposition of a density into nonnegative combinations of spikes.
//!
//! A round approximates `β R` from below by `h = (3 L_ν / (C s)) Σ λ_n f_n`
//! with spikes taken from one shell of group elements; the residual
//! `R ← R - h` then shrinks geometrically.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::Lcf;
use crate::group::{VisualParams, WeightedFreeGroup, Word};
use crate::measure::{integrate, BoundaryMeasure, GroupMeasure};
use crate::partition::Partition;
use crate::scalar::{q_to_f64, Scalar, Q};
use crate::spikes::{ball_oscillation, lipschitz_scale, make_spike, measure_constants, MeasureConstants, Spike};
use crate::stationarity::{functionals, Functionals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// One spike-constant cap `C` for every round.
    FixedC,
    /// `C_n = C √n`.
    Growing,
}

#[derive(Debug, Clone)]
pub struct GreedyParams {
    pub visual: VisualParams,
    /// Oscillation bound, in `(1, 2]`.
    pub s: Q,
    /// Damping, in `(0, 1)`.
    pub beta: Q,
    /// Spike-constant cap.
    pub c: Q,
    /// Shadow margin `D` of the spikes.
    pub margin: Q,
    /// Width of the radius window `[e^{-ε band} ε_N, ε_N]` in the moment
    /// schedule; defaults to the largest generator weight.
    pub band: Option<Q>,
    /// Longest spike word, in letters.
    pub max_len: usize,
    pub tolerance: f64,
    pub max_rounds: usize,
    /// Largest shell a single round may use.
    pub spike_budget: usize,
    pub schedule: Schedule,
    /// Overrides the measured `L_ν`.
    pub l_nu: Option<f64>,
    /// Lets a constant density be matched by `δ_e` in one step.
    pub admit_identity: bool,
}

impl GreedyParams {
    pub fn new(visual: VisualParams) -> GreedyParams {
        GreedyParams {
            visual,
            s: Q::from_integer(2.into()),
            beta: Q::new(19.into(), 20.into()),
            c: Q::new(4.into(), 3.into()),
            margin: Q::from_integer(0.into()),
            band: None,
            max_len: 8,
            tolerance: 1e-6,
            max_rounds: 2000,
            spike_budget: 5000,
            schedule: Schedule::FixedC,
            l_nu: None,
            admit_identity: false,
        }
    }

    pub fn validate(&self, exact: bool) -> Result<()> {
        let one = Q::from_integer(1.into());
        let zero = Q::from_integer(0.into());
        if !(self.s > one && self.s <= Q::from_integer(2.into())) {
            return Err(Error::Parameter(format!("s = {} must lie in (1, 2]", self.s)));
        }
        if !(self.beta > zero && self.beta < one) {
            return Err(Error::Parameter(format!("beta = {} must lie in (0, 1)", self.beta)));
        }
        if self.c <= one {
            return Err(Error::Parameter(format!("C = {} must exceed 1", self.c)));
        }
        if self.margin < zero {
            return Err(Error::Parameter("margin D must be nonnegative".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) || (!exact && self.tolerance == 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance {} is unreachable; float mode needs a positive tolerance",
                self.tolerance
            )));
        }
        if self.max_rounds == 0 || self.max_len == 0 || self.spike_budget == 0 {
            return Err(Error::Parameter("max_rounds, max_len and spike_budget must be positive".into()));
        }
        if let Some(l) = self.l_nu {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::Parameter(format!("L_nu = {l} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// `1 - L β / (C² s²)` for a given cap.
    pub fn rate(&self, l_nu: f64, c: f64) -> f64 {
        let s = q_to_f64(&self.s);
        1.0 - l_nu * q_to_f64(&self.beta) / (c * c * s * s)
    }

    fn cap(&self, round: usize) -> Q {
        match self.schedule {
            Schedule::FixedC => self.c.clone(),
            Schedule::Growing => {
                let r = (round as f64).sqrt();
                self.c.clone() * <Q as Scalar>::from_f64(r)
            }
        }
    }
}

/// Coefficients and the subfunction `h` produced by one greedy pass.
#[derive(Debug, Clone)]
pub struct GreedyOutcome<S> {
    /// `λ_n`, in spike order.
    pub lambdas: Vec<S>,
    /// `3 L_ν / (C s)`.
    pub scale: S,
    pub h: Lcf<S>,
    /// `δ` and `t` of the radius precondition.
    pub delta: f64,
    pub t: f64,
}

/// Sum of spike functions accumulated on cylinder labels; the value at a
/// point is the sum over its prefixes.
struct Accumulator<S> {
    acc: HashMap<Word, S>,
    depth: usize,
}

impl<S: Scalar> Accumulator<S> {
    fn new(depth: usize) -> Self {
        Accumulator { acc: HashMap::new(), depth }
    }

    fn add(&mut self, f: &Lcf<S>, k: &S) {
        for (c, v) in f.cells() {
            let add = k.clone() * v.clone();
            match self.acc.get_mut(c) {
                Some(x) => *x = x.clone() + add,
                None => {
                    self.acc.insert(c.clone(), add);
                }
            }
        }
    }

    /// Value at the canonical ray through `w`.
    fn at_ray(&self, w: &Word) -> S {
        let ray = w.ray(self.depth.max(w.len()));
        self.sum_prefixes(&ray)
    }

    fn sum_prefixes(&self, w: &Word) -> S {
        let mut total = S::zero();
        for k in 0..=w.len() {
            if let Some(v) = self.acc.get(&w.prefix(k)) {
                total = total + v.clone();
            }
        }
        total
    }
}

/// Smallest prefix length `t*` at which every ball of radius `e^{-ε t*}`
/// has oscillation at most `s`, and the admissible radius `δ`: the
/// supremum of radii whose balls all satisfy the bound (`∞` when `t* = 0`).
pub fn oscillation_radius<S: Scalar>(f: &Lcf<S>, group: &WeightedFreeGroup, eps: f64, s: &Q) -> (Q, f64) {
    let mut lengths: Vec<Q> = Vec::new();
    for c in f.partition().cells() {
        for k in 0..=c.len() {
            lengths.push(group.length(&c.prefix(k)));
        }
    }
    lengths.sort();
    lengths.dedup();
    let cap = S::from_q(s);
    let passes = |t: &Q| ball_oscillation(f, group, t).is_some_and(|v| v.le_tol(&cap));
    // Smaller balls have smaller oscillation, so the passing lengths form a
    // suffix of `lengths`; balls inside a single cell always pass.
    let first = lengths.partition_point(|t| !passes(t));
    assert!(first < lengths.len(), "balls inside a single cell have oscillation 1");
    let delta = match first {
        0 => f64::INFINITY,
        k => (-eps * q_to_f64(&lengths[k - 1])).exp(),
    };
    (lengths[first].clone(), delta)
}

fn ratio_t<S: Scalar>(sup: &S, inf: &S, q: f64) -> f64 {
    (sup.as_f64() / inf.as_f64()).powf(1.0 / q) + 1.0
}

fn spike_radius<S: Scalar>(s: &Spike<S>) -> f64 {
    (-s.eps.value() * q_to_f64(&s.radius_exp)).exp()
}

/// One greedy pass: `λ_n = max(0, F(b_n) - g_{n-1}(b_n))`,
/// `g_n = g_{n-1} + λ_n f_n`, `h = 3 L_ν g / (C s)`.
///
/// `spikes` must be sorted by nonincreasing radius and every radius must be
/// at most `δ / t`. Spikes whose center lies outside the span of `span` get
/// `λ = 0`.
pub fn greedy_subfunction<S: Scalar>(
    f: &Lcf<S>,
    spikes: &[Spike<S>],
    span: &[Word],
    group: &WeightedFreeGroup,
    params: &GreedyParams,
) -> Result<GreedyOutcome<S>> {
    let refs: Vec<&Spike<S>> = spikes.iter().collect();
    greedy_pass(f, &refs, span, group, params, None)
}

/// [`greedy_subfunction`] with an optional precomputed `δ` of `f`.
fn greedy_pass<S: Scalar>(
    f: &Lcf<S>,
    spikes: &[&Spike<S>],
    span: &[Word],
    group: &WeightedFreeGroup,
    params: &GreedyParams,
    known_delta: Option<f64>,
) -> Result<GreedyOutcome<S>> {
    let l_nu = params.l_nu.ok_or_else(|| Error::Parameter("L_nu has not been measured".into()))?;
    let inf = f.inf();
    if !(inf > S::zero()) {
        return Err(Error::Parameter("F is not uniformly positive".into()));
    }
    if span.is_empty() {
        return Err(Error::Parameter("empty span".into()));
    }
    let mut sup_y = S::zero();
    for u in span {
        let (_, hi) = f.bounds_on(u);
        if hi > sup_y {
            sup_y = hi;
        }
    }
    let eps = params.visual.eps.value();
    let t = ratio_t(&sup_y, &inf, params.visual.q_exponent());
    let delta = known_delta.unwrap_or_else(|| oscillation_radius(f, group, eps, &params.s).1);
    let cap = S::from_q(&params.c);
    let mut prev = f64::INFINITY;
    for &sp in spikes {
        let r = spike_radius(sp);
        let name = group.format_word(&sp.gamma);
        if r > prev * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!("spike radii are not nonincreasing at `{name}`")));
        }
        if r * t > delta * (1.0 + 1e-9) {
            return Err(Error::Parameter(format!(
                "spike radius {r} at `{name}` exceeds delta/t = {} (delta = {delta}, t = {t})",
                delta / t
            )));
        }
        if !sp.constant.le_tol(&cap) {
            return Err(Error::Parameter(format!(
                "spike constant {} at `{name}` exceeds the cap C = {}",
                sp.constant.as_f64(),
                params.c
            )));
        }
        prev = r;
    }

    let depth = spikes.iter().map(|s| s.function.partition().max_depth()).max().unwrap_or(0);
    let mut acc = Accumulator::new(depth);
    let mut lambdas = Vec::with_capacity(spikes.len());
    let mut used = Vec::new();
    for &sp in spikes {
        let inside = span.iter().any(|u| sp.center.ray(u.len()).starts_with(u));
        if !inside {
            lambdas.push(S::zero());
            continue;
        }
        let fb = f.at_ray(&sp.center).clone();
        let gb = acc.at_ray(&sp.center);
        let lam = fb - gb;
        if lam > S::zero() {
            acc.add(&sp.function, &lam);
            used.push(sp.function.partition());
            lambdas.push(lam);
        } else {
            lambdas.push(S::zero());
        }
    }

    let l_q = rational_floor(l_nu);
    let scale = S::from_q(&(l_q * Q::from_integer(3.into()) / (params.c.clone() * params.s.clone())));
    let rank = group.rank();
    let h = if used.is_empty() {
        Lcf::constant(rank, S::zero())
    } else {
        let p = Partition::union_of(rank, used);
        let values: Vec<S> =
            p.cells().par_iter().map(|c| acc.sum_prefixes(c) * scale.clone()).collect();
        Lcf::new(p, values)?
    };
    if !h.le(f) {
        let d = f.sub(&h);
        if d.values().iter().any(|v| !(S::zero().le_tol(v) || (!S::EXACT && v.as_f64() > -1e-12 * inf.as_f64())))
        {
            return Err(Error::Invariant("greedy subfunction exceeds F".into()));
        }
    }
    Ok(GreedyOutcome { lambdas, scale, h, delta, t })
}

/// `floor(x 10^12) / 10^12`, a rational lower bound for `x > 0`.
fn rational_floor(x: f64) -> Q {
    let den = BigInt::from(10u64.pow(12));
    Q::new(BigInt::from((x * 1e12).floor() as i64), den)
}

/// Centers `w ≠ e` with `|w| >= level > |parent(w)|`: a partition of the
/// boundary into cylinders. Returns `None` when the shell exceeds `budget`
/// words or `max_len` letters.
pub fn crossing_shell(group: &WeightedFreeGroup, level: &Q, max_len: usize, budget: usize) -> ShellResult {
    let mut out = Vec::new();
    let mut stack = vec![Word::identity()];
    while let Some(w) = stack.pop() {
        if !w.is_empty() && group.length(&w) >= *level {
            if w.len() > max_len {
                return ShellResult::Horizon;
            }
            out.push(w);
            if out.len() > budget {
                return ShellResult::Budget;
            }
            continue;
        }
        if w.len() >= max_len {
            return ShellResult::Horizon;
        }
        stack.extend(group.children(&w));
    }
    out.sort_by(|a, b| group.length(a).cmp(&group.length(b)).then(a.len().cmp(&b.len())).then(a.cmp(b)));
    ShellResult::Shell(out)
}

/// Round `n` keeps shortlex order among equal radii when `n` is odd and
/// reverses it when `n` is even. A fixed order lets the cells processed
/// first collect the tails of every later spike, round after round, and the
/// residual drifts away from uniform; alternating cancels that bias.
pub fn tie_order(group: &WeightedFreeGroup, mut centers: Vec<Word>, round: usize) -> Vec<Word> {
    if round % 2 == 0 {
        let mut out = Vec::with_capacity(centers.len());
        while !centers.is_empty() {
            let len = group.length(&centers[0]);
            let end = centers.iter().position(|c| group.length(c) != len).unwrap_or(centers.len());
            let mut run: Vec<Word> = centers.drain(..end).collect();
            run.reverse();
            out.extend(run);
        }
        out
    } else {
        centers
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShellResult {
    Shell(Vec<Word>),
    Budget,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxRounds,
    SpikeBudget,
    Horizon,
    /// `F` is constant and `δ_e` was admitted.
    Identity,
}

/// Per-round bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Shell level: the smallest `|γ|` in the round.
    pub level: f64,
    pub spikes: usize,
    /// Spikes with `λ > 0`.
    pub used: usize,
    pub cap: f64,
    pub delta: f64,
    pub t: f64,
    /// `ε_N` of the moment schedule.
    pub eps_n: Option<f64>,
    /// Mass added to `μ`.
    pub mass: f64,
    /// `Σ m |γ|` over the additions.
    pub moment: f64,
    /// `-Σ m log m` over the additions.
    pub entropy: f64,
    pub max_length: f64,
    pub residual: f64,
    /// `(1 - L β / (C² s²))` times the previous residual.
    pub bound: f64,
    pub rate_ok: bool,
}

/// Tail of the moment and entropy sums against the closed-form envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEnvelope {
    pub rate: f64,
    /// Fitted `λ` with `-log g(ε_N) <= λ N²`.
    pub lambda: f64,
    /// Fitted `K` with `k_N <= K e^{λ Q N²}`.
    pub k_cover: f64,
    pub moment_actual: Vec<f64>,
    pub moment_envelope: Vec<f64>,
    /// `(actual, envelope)` tails beyond each round `N = 0, 1, ...`.
    pub moment_tails: Vec<(f64, f64)>,
    pub entropy_actual: Vec<f64>,
    pub entropy_envelope: Vec<f64>,
    pub entropy_tails: Vec<(f64, f64)>,
    pub moment_bound: f64,
    pub entropy_bound: f64,
    /// `bound / ([1 + log(sup F/inf F) + log max(L, 1)] ‖F‖₁)`.
    pub a_moment: f64,
    pub a_entropy: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult<S> {
    /// `μ(γ) = λ_γ ‖f_γ‖₁`, summed over rounds.
    pub coefficients: GroupMeasure<S>,
    /// `‖R_N‖₁` for `N = 0, 1, ...`.
    pub residual_trace: Vec<S>,
    pub residual: Lcf<S>,
    pub rounds: usize,
    pub achieved_tolerance: f64,
    /// Mass of truncated float coefficients.
    pub leak: f64,
    pub stop: StopReason,
    pub records: Vec<RoundRecord>,
    pub constants: MeasureConstants,
    pub l_nu: f64,
    /// Every round met the geometric rate.
    pub rate_ok: bool,
    pub functionals: Functionals,
    pub envelope: Option<MomentEnvelope>,
}

/// Spikes by `γ`, with `‖f_γ / sup f_γ‖₁`.
struct SpikeCache<S> {
    spikes: BTreeMap<Word, (Spike<S>, S)>,
}

impl<S: Scalar> SpikeCache<S> {
    fn new() -> Self {
        SpikeCache { spikes: BTreeMap::new() }
    }

    fn get(&mut self, centers: &[Word], nu: &BoundaryMeasure<S>, params: &GreedyParams, margin: &Q) -> Result<Vec<&(Spike<S>, S)>> {
        let missing: Vec<Word> =
            centers.iter().map(|c| c.inverse()).filter(|g| !self.spikes.contains_key(g)).collect();
        let built: Vec<Result<(Word, (Spike<S>, S))>> = missing
            .par_iter()
            .map(|g| {
                let s = make_spike(g, nu, &params.visual, margin)?;
                let norm = integrate(&s.function, nu);
                Ok((g.clone(), (s, norm)))
            })
            .collect();
        for b in built {
            let (g, v) = b?;
            self.spikes.insert(g, v);
        }
        Ok(centers.iter().map(|c| &self.spikes[&c.inverse()]).collect())
    }
}

fn is_constant<S: Scalar>(f: &Lcf<S>) -> bool {
    f.values().iter().all(|v| *v == f.values()[0])
}

/// Shared round loop. `choose` returns the shell level for the round
/// (or a stop reason) given the current residual.
struct Runner<'a, S: Scalar> {
    nu: &'a BoundaryMeasure<S>,
    params: &'a GreedyParams,
    constants: MeasureConstants,
    l_nu: f64,
    cache: SpikeCache<S>,
    residual: Lcf<S>,
    trace: Vec<S>,
    mu: GroupMeasure<S>,
    records: Vec<RoundRecord>,
    per_round: Vec<Vec<(Word, S)>>,
}

impl<'a, S: Scalar> Runner<'a, S> {
    fn new(f: &Lcf<S>, nu: &'a BoundaryMeasure<S>, params: &'a GreedyParams) -> Result<Self> {
        params.validate(S::EXACT)?;
        if !(f.inf() > S::zero()) {
            return Err(Error::Parameter("F is not uniformly positive".into()));
        }
        let constants = measure_constants(nu, &params.visual, params.max_len.clamp(1, 4))?;
        let l_nu = params.l_nu.unwrap_or(constants.l_nu);
        let norm = integrate(f, nu);
        Ok(Runner {
            nu,
            params,
            constants,
            l_nu,
            cache: SpikeCache::new(),
            residual: f.clone(),
            trace: vec![norm],
            mu: GroupMeasure::new(),
            records: Vec::new(),
            per_round: Vec::new(),
        })
    }

    fn current(&self) -> f64 {
        self.trace.last().expect("nonempty trace").as_f64()
    }

    fn done(&self) -> bool {
        self.params.tolerance > 0.0 && self.current() <= self.params.tolerance
    }

    /// Runs one greedy round on the shell at `level` with spike margin `margin`.
    /// `delta`, when known, is the admissible radius of the current residual.
    fn round(
        &mut self,
        n: usize,
        level: f64,
        margin: &Q,
        eps_n: Option<f64>,
        delta: Option<f64>,
    ) -> Result<Option<StopReason>> {
        let group = self.nu.group();
        let level_q = <Q as Scalar>::from_f64(level - 1e-9);
        let centers = match crossing_shell(group, &level_q, self.params.max_len, self.params.spike_budget) {
            ShellResult::Shell(c) => c,
            ShellResult::Budget => return Ok(Some(StopReason::SpikeBudget)),
            ShellResult::Horizon => return Ok(Some(StopReason::Horizon)),
        };
        let centers = tie_order(group, centers, n);
        let cap = self.params.cap(n);
        let spikes = self.cache.get(&centers, self.nu, self.params, margin)?;
        let mut round_params = self.params.clone();
        round_params.c = cap.clone();
        round_params.l_nu = Some(self.l_nu);
        let target = self.residual.scale(&S::from_q(&self.params.beta));
        let only: Vec<&Spike<S>> = spikes.iter().map(|(s, _)| s).collect();
        let out = greedy_pass(&target, &only, &[Word::identity()], group, &round_params, delta)?;

        let next = self.residual.sub(&out.h);
        let next = if S::EXACT { next.coarsen() } else { next };
        let norm = integrate(&next, self.nu);
        let prev = self.trace.last().expect("nonempty").clone();
        if !(norm < prev) {
            return Err(Error::Invariant(format!(
                "residual did not decrease in round {n}: {} -> {}",
                prev.as_f64(),
                norm.as_f64()
            )));
        }
        let cap_f = q_to_f64(&cap);
        let rate = self.params.rate(self.l_nu, cap_f);
        let bound = rate * prev.as_f64();
        let rate_ok = norm.as_f64() <= bound * (1.0 + 1e-12);

        let mut added = Vec::new();
        let (mut mass, mut moment, mut entropy, mut max_length) = (0.0, 0.0, 0.0, 0f64);
        for (&(sp, l1), lam) in spikes.iter().zip(&out.lambdas) {
            if !(*lam > S::zero()) {
                continue;
            }
            let m = out.scale.clone() * lam.clone() * l1.clone();
            let mf = m.as_f64();
            let len = q_to_f64(&group.length(&sp.gamma));
            mass += mf;
            moment += mf * len;
            if mf > 0.0 {
                entropy -= mf * mf.ln();
            }
            max_length = max_length.max(len);
            self.mu.add(sp.gamma.clone(), m.clone());
            added.push((sp.gamma.clone(), m));
        }
        self.records.push(RoundRecord {
            round: n,
            level: q_to_f64(&group.length(&centers[0])),
            spikes: centers.len(),
            used: added.len(),
            cap: cap_f,
            delta: out.delta,
            t: out.t,
            eps_n,
            mass,
            moment,
            entropy,
            max_length,
            residual: norm.as_f64(),
            bound,
            rate_ok,
        });
        self.per_round.push(added);
        self.residual = next;
        self.trace.push(norm);
        Ok(None)
    }

    fn finish(self, stop: StopReason, envelope: Option<MomentEnvelope>) -> DecompositionResult<S> {
        let group = self.nu.group();
        let mut mu = self.mu;
        let mut leak = 0.0;
        if !S::EXACT {
            let total = mu.total().as_f64();
            let keep: Vec<(Word, S)> = mu
                .atoms()
                .filter_map(|(w, m)| {
                    if m.as_f64() < 1e-15 * total {
                        leak += m.as_f64();
                        None
                    } else {
                        Some((w.clone(), m.clone()))
                    }
                })
                .collect();
            mu = GroupMeasure::new();
            for (w, m) in keep {
                mu.add(w, m);
            }
        }
        let residual = self.trace.last().expect("nonempty").as_f64();
        let functionals = functionals(&mu, group);
        let rate_ok = self.records.iter().all(|r| r.rate_ok);
        DecompositionResult {
            coefficients: mu,
            residual_trace: self.trace,
            residual: self.residual,
            rounds: self.records.len(),
            achieved_tolerance: residual + leak,
            leak,
            stop,
            records: self.records,
            constants: self.constants,
            l_nu: self.l_nu,
            rate_ok,
            functionals,
            envelope,
        }
    }
}

/// Identity shortcut: `F ≡ c` is matched by `c δ_e` exactly.
fn identity_result<S: Scalar>(runner: Runner<'_, S>) -> DecompositionResult<S> {
    let mut runner = runner;
    let c = runner.residual.values()[0].clone();
    let mass = runner.trace[0].clone();
    runner.mu.add(Word::identity(), c);
    runner.residual = Lcf::constant(runner.nu.group().rank(), S::zero());
    runner.trace.push(S::zero());
    runner.records.push(RoundRecord {
        round: 1,
        level: 0.0,
        spikes: 1,
        used: 1,
        cap: 1.0,
        delta: f64::INFINITY,
        t: 2.0,
        eps_n: Some(1.0),
        mass: mass.as_f64(),
        moment: 0.0,
        entropy: if mass.as_f64() > 0.0 { -mass.as_f64() * mass.as_f64().ln() } else { 0.0 },
        max_length: 0.0,
        residual: 0.0,
        bound: 0.0,
        rate_ok: true,
    });
    runner.finish(StopReason::Identity, None)
}

/// Outer loop: each round applies the greedy pass to `β R_{N-1}` on the
/// shallowest shell (never shallower than the previous one) whose spike
/// radii satisfy `r <= δ / t`.
pub fn basis_decompose<S: Scalar>(
    f: &Lcf<S>,
    nu: &BoundaryMeasure<S>,
    params: &GreedyParams,
) -> Result<DecompositionResult<S>> {
    let mut runner = Runner::new(f, nu, params)?;
    if params.admit_identity && is_constant(f) {
        return Ok(identity_result(runner));
    }
    let group = nu.group();
    let eps = params.visual.eps.value();
    let q = params.visual.q_exponent();
    let margin = q_to_f64(&params.margin);
    let mut level = 0f64;
    for n in 1..=params.max_rounds {
        if runner.done() {
            return Ok(runner.finish(StopReason::Tolerance, None));
        }
        let r = &runner.residual;
        let t = ratio_t(&r.sup(), &r.inf(), q);
        let (_, delta) = oscillation_radius(r, group, eps, &params.s);
        // r = e^{-ε(|γ| - D)} <= δ / t
        let need = if delta.is_finite() { margin + (t / delta).ln() / eps } else { 0.0 };
        level = level.max(need);
        if let Some(stop) = runner.round(n, level, &params.margin, None, Some(delta))? {
            return Ok(runner.finish(stop, None));
        }
        level = runner.records.last().expect("round recorded").level;
    }
    let stop = if runner.done() { StopReason::Tolerance } else { StopReason::MaxRounds };
    Ok(runner.finish(stop, None))
}

/// Moment-controlled schedule with a fixed cap `C`: radii shrink along
/// `δ_N = min((s-1) inf R / sup D_{g(ε_{N-1})} R, g(ε_{N-1}))`,
/// `ε_N = min(δ_N / t_N, ε_{N-1})`, `g(r) = e^{-ε band} r`, and round `N`
/// uses the margin-0 spikes with radii in `[g(ε_N), ε_N]`.
pub fn moment_decompose<S: Scalar>(
    f: &Lcf<S>,
    nu: &BoundaryMeasure<S>,
    params: &GreedyParams,
) -> Result<DecompositionResult<S>> {
    let group = nu.group();
    let band = params.band.clone().unwrap_or_else(|| group.max_weight());
    if band < group.max_weight() {
        return Err(Error::Parameter(format!(
            "band {band} is narrower than the largest generator weight {}",
            group.max_weight()
        )));
    }
    if params.schedule != Schedule::FixedC {
        return Err(Error::Parameter("the moment schedule needs a fixed cap C".into()));
    }
    let runner = Runner::new(f, nu, params)?;
    let c2 = q_to_f64(&params.c).powi(2);
    if c2 <= runner.l_nu {
        return Err(Error::Parameter(format!(
            "C^2/(C^2 - L_nu) > 1 fails: C^2 = {c2}, L_nu = {}",
            runner.l_nu
        )));
    }
    if params.admit_identity && is_constant(f) {
        return Ok(identity_result(runner));
    }
    let mut runner = runner;
    let eps = params.visual.eps.value();
    let q = params.visual.q_exponent();
    let s = q_to_f64(&params.s);
    let band_f = q_to_f64(&band);
    let zero = Q::from_integer(0.into());
    let mut eps_prev = 1.0f64;
    let mut stop = StopReason::MaxRounds;
    for n in 1..=params.max_rounds {
        if runner.done() {
            stop = StopReason::Tolerance;
            break;
        }
        let r = &runner.residual;
        let g_prev = (-eps * band_f).exp() * eps_prev;
        let t_g = <Q as Scalar>::from_f64(-g_prev.ln() / eps);
        let d = lipschitz_scale(r, group, &t_g, &params.visual.eps)?.sup().as_f64();
        let (inf, sup) = (r.inf(), r.sup());
        let delta = if d > 0.0 { ((s - 1.0) * inf.as_f64() / d).min(g_prev) } else { g_prev };
        let t = ratio_t(&sup, &inf, q);
        let eps_n = (delta / t).min(eps_prev);
        let level = -eps_n.ln() / eps;
        if let Some(reason) = runner.round(n, level, &zero, Some(eps_n), None)? {
            stop = reason;
            break;
        }
        eps_prev = eps_n;
    }
    if stop == StopReason::MaxRounds && runner.done() {
        stop = StopReason::Tolerance;
    }
    let envelope = moment_envelope(&runner, f, band_f)?;
    Ok(runner.finish(stop, Some(envelope)))
}

/// Replays the case-3 tail sums with measured constants.
fn moment_envelope<S: Scalar>(runner: &Runner<'_, S>, f: &Lcf<S>, band: f64) -> Result<MomentEnvelope> {
    let p = runner.params;
    let group = runner.nu.group();
    let alpha = p.visual.alpha.value();
    let eps = p.visual.eps.value();
    let q = p.visual.q_exponent();
    let c = q_to_f64(&p.c);
    let beta = q_to_f64(&p.beta);
    let rate = p.rate(runner.l_nu, c);
    let norm_f = runner.trace[0].as_f64();
    let recs = &runner.records;

    // -log g(ε_N) <= λ N² and k_N <= K e^{λ Q N²}
    let mut lambda = 0f64;
    for (i, r) in recs.iter().enumerate() {
        let n = (i + 1) as f64;
        let neg_log_g = -r.eps_n.unwrap_or(1.0).ln() + eps * band;
        lambda = lambda.max(neg_log_g / (n * n));
    }
    let mut k_cover = 1f64;
    for (i, r) in recs.iter().enumerate() {
        let n = (i + 1) as f64;
        k_cover = k_cover.max(r.spikes as f64 / (lambda * q * n * n).exp());
    }
    let mass_bound = |n: f64| beta * norm_f * rate.powf(n - 1.0);
    let moment_term = |n: f64| mass_bound(n) * (lambda * q * n * n + 2.0 * c.ln()) / alpha;
    let entropy_term = |n: f64| {
        let m = mass_bound(n);
        let log_k = k_cover.ln() + lambda * q * n * n;
        // x log(k/x) increases up to x = k/e.
        if m.ln() <= log_k - 1.0 {
            m * (log_k - m.ln())
        } else {
            (log_k - 1.0).exp()
        }
    };
    let tail_from = |start: usize, term: &dyn Fn(f64) -> f64| {
        let mut sum = 0.0;
        let mut n = start + 1;
        loop {
            let v = term(n as f64);
            sum += v;
            if n > start + 50 && v <= 1e-17 * sum.max(1e-300) {
                break;
            }
            n += 1;
            if n > start + 10_000_000 {
                break;
            }
        }
        sum
    };
    let moment_actual: Vec<f64> = recs.iter().map(|r| r.moment).collect();
    let entropy_actual: Vec<f64> = recs.iter().map(|r| r.entropy).collect();
    let moment_envelope: Vec<f64> = (1..=recs.len()).map(|n| moment_term(n as f64)).collect();
    let entropy_envelope: Vec<f64> = (1..=recs.len()).map(|n| entropy_term(n as f64)).collect();
    let tails = |actual: &[f64], term: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        (0..=actual.len())
            .map(|n| (actual[n..].iter().sum::<f64>(), tail_from(n, term)))
            .collect()
    };
    let moment_tails = tails(&moment_actual, &moment_term);
    let entropy_tails = tails(&entropy_actual, &entropy_term);
    let moment_bound = moment_tails[0].1;
    let entropy_bound = entropy_tails[0].1;
    let lip = lipschitz_scale(f, group, &Q::from_integer(0.into()), &p.visual.eps)?.sup().as_f64();
    let denom = (1.0 + (f.sup().as_f64() / f.inf().as_f64()).ln() + lip.max(1.0).ln()) * norm_f;
    let ok = moment_tails.iter().chain(&entropy_tails).all(|(a, e)| a.is_finite() && e.is_finite() && *a <= *e)
        && moment_bound.is_finite()
        && entropy_bound.is_finite();
    Ok(MomentEnvelope {
        rate,
        lambda,
        k_cover,
        moment_actual,
        moment_envelope,
        moment_tails,
        entropy_actual,
        entropy_envelope,
        entropy_tails,
        moment_bound,
        entropy_bound,
        a_moment: moment_bound / denom,
        a_entropy: entropy_bound / denom,
        ok,
    })
}

/// Closed-form envelope of `a_{n+1} <= (1 - δ_n) a_n + δ_n ε_n`:
/// `a_{n+1} <= Σ_{k=0}^{n} (Δ^n_k - Δ^n_{k-1}) ε_k` with `ε_0 = a_1`,
/// `Δ^n_m = Π_{j=m+1}^{n} (1 - δ_j)` and `Δ^n_{-1} = 0`.
///
/// `deltas[i]` and `epsilons[i]` are `δ_{i+1}` and `ε_{i+1}`; entry `i` of
/// the result bounds `a_{i+2}`.
pub fn sequence_decay_bound<S: Scalar>(deltas: &[S], epsilons: &[S], a1: &S) -> Result<Vec<S>> {
    if deltas.len() != epsilons.len() {
        return Err(Error::Input("deltas and epsilons differ in length".into()));
    }
    if let Some(d) = deltas.iter().find(|d| **d < S::zero() || **d > S::one()) {
        return Err(Error::Input(format!("delta {} lies outside [0, 1]", d.as_f64())));
    }
    let mut eps = Vec::with_capacity(epsilons.len() + 1);
    eps.push(a1.clone());
    eps.extend(epsilons.iter().cloned());
    let mut out = Vec::with_capacity(deltas.len());
    for n in 1..=deltas.len() {
        // big[m] = Δ^n_m for m = 0..=n
        let mut big = vec![S::one(); n + 1];
        for m in (0..n).rev() {
            big[m] = big[m + 1].clone() * (S::one() - deltas[m].clone());
        }
        let mut sum = S::zero();
        for k in 0..=n {
            let lower = if k == 0 { S::zero() } else { big[k - 1].clone() };
            sum = sum + (big[k].clone() - lower) * eps[k].clone();
        }
        out.push(sum);
    }
    Ok(out)
}

/// Direct iteration of `a_{n+1} = (1 - δ_n) a_n + δ_n ε_n`.
pub fn sequence_decay_direct<S: Scalar>(deltas: &[S], epsilons: &[S], a1: &S) -> Vec<S> {
    let mut a = a1.clone();
    deltas
        .iter()
        .zip(epsilons)
        .map(|(d, e)| {
            a = (S::one() - d.clone()) * a.clone() + d.clone() * e.clone();
            a.clone()
        })
        .collect()
}

/// Constants of the case-1/2 coefficient profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileConstants {
    pub c_prime: f64,
    pub lambda: f64,
    pub q: f64,
    /// Cover constant `K`.
    pub k_cover: f64,
    /// Growth base `k >= 1` of the scale schedule (case 2).
    pub k: f64,
}

/// Post-hoc audit of a coefficient stream against a case-1 or case-2 profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseAudit {
    pub case: u8,
    /// Rounds whose mass or scale broke the profile.
    pub violations: Vec<usize>,
    /// Sum over the stream: `Σ m_N ℓ_N` (case 1) or `Σ m_N log ℓ_N` (case 2),
    /// with `ℓ_N = max log(1/‖f‖₁)` in round `N`.
    pub actual: f64,
    /// The profile's series bound.
    pub bound: f64,
    pub finite: bool,
    pub ok: bool,
}

/// One round of a coefficient stream: mass added and the largest
/// `log(1/‖f‖₁)` among its spikes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamRound {
    pub mass: f64,
    pub log_inv_norm: f64,
}

impl StreamRound {
    /// From recorded rounds of a decomposition with exponent `α`.
    pub fn from_records(records: &[RoundRecord], alpha: f64) -> Vec<StreamRound> {
        records.iter().map(|r| StreamRound { mass: r.mass, log_inv_norm: alpha * r.max_length }).collect()
    }
}

fn log_floor(n: f64) -> f64 {
    n.ln().max(1.0)
}

/// Case 1: `m_N <= C' ‖F‖_∞ / (N³ log² N)` and
/// `ℓ_N <= λ Q (N-1)² + 2 log(K N)`; the moment series is then bounded by
/// `Σ C' ‖F‖_∞ (λ Q (N-1)² + 2 log(K N)) / (N³ log² N)`.
pub fn audit_case1(stream: &[StreamRound], sup_f: f64, c: &ProfileConstants) -> CaseAudit {
    let mass_cap = |n: f64| c.c_prime * sup_f / (n.powi(3) * log_floor(n).powi(2));
    let scale_cap = |n: f64| c.lambda * c.q * (n - 1.0).powi(2) + 2.0 * (c.k_cover * n).ln();
    let term = |n: f64| mass_cap(n) * scale_cap(n);
    let tail = |m: f64| c.c_prime * sup_f * (c.lambda * c.q / m.ln() + 2.0 * (c.k_cover.ln().abs() + m.ln() + 1.0) / m);
    audit(1, stream, &mass_cap, &scale_cap, &term, &tail, |m, l| m * l)
}

/// Case 2: `m_N <= C' ‖F‖_∞ / (log(k) N² log² N + N log³ N)` and
/// `ℓ_N <= λ Q (N-1)² k^{N-1} + 2 log(K N)`, for the log-moment.
pub fn audit_case2(stream: &[StreamRound], sup_f: f64, c: &ProfileConstants) -> CaseAudit {
    let lk = c.k.max(1.0).ln();
    let mass_cap = |n: f64| {
        let l = log_floor(n);
        c.c_prime * sup_f / (lk * n * n * l * l + n * l.powi(3))
    };
    let scale_cap =
        |n: f64| c.lambda * c.q * (n - 1.0).powi(2) * c.k.max(1.0).powf(n - 1.0) + 2.0 * (c.k_cover * n).ln();
    // log of the scale cap, kept finite where k^{N-1} overflows
    let log_scale = |n: f64| {
        let b = (2.0 * (c.k_cover * n).ln()).max(f64::MIN_POSITIVE).ln();
        if c.lambda * c.q <= 0.0 || n <= 1.0 {
            return b.max(0.0);
        }
        let a = (c.lambda * c.q).ln() + 2.0 * (n - 1.0).ln() + (n - 1.0) * lk;
        (a.max(b) + (-(a - b).abs()).exp().ln_1p()).max(0.0)
    };
    let term = |n: f64| mass_cap(n) * log_scale(n);
    // log(λQ N² k^N + 2 log(KN)) <= N log k + 2 log N + log(λQ + 2|log K| + 2) for N >= 3
    let tail = |m: f64| {
        let extra = (c.lambda * c.q + 2.0 * c.k_cover.ln().abs() + 2.0).ln().max(0.0);
        c.c_prime * sup_f * ((1.0 + 2.0 + extra) / m.ln() + lk / m.ln())
    };
    audit(2, stream, &mass_cap, &scale_cap, &term, &tail, |m, l| m * l.max(1.0).ln())
}

fn audit(
    case: u8,
    stream: &[StreamRound],
    mass_cap: &dyn Fn(f64) -> f64,
    scale_cap: &dyn Fn(f64) -> f64,
    term: &dyn Fn(f64) -> f64,
    tail: &dyn Fn(f64) -> f64,
    weight: impl Fn(f64, f64) -> f64,
) -> CaseAudit {
    let mut violations = Vec::new();
    let mut actual = 0.0;
    for (i, r) in stream.iter().enumerate() {
        let n = (i + 1) as f64;
        if r.mass > mass_cap(n) * (1.0 + 1e-12) || r.log_inv_norm > scale_cap(n) * (1.0 + 1e-12) + 1e-12 {
            violations.push(i + 1);
        }
        actual += weight(r.mass, r.log_inv_norm);
    }
    const M: usize = 1_000_000;
    let mut bound: f64 = (1..=M).map(|n| term(n as f64)).sum();
    bound += tail(M as f64);
    let finite = bound.is_finite() && actual.is_finite();
    CaseAudit { case, ok: finite && violations.is_empty() && actual <= bound, violations, actual, bound, finite }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::uniform_ps_measure;
    use crate::scalar::{q, qi, Rate};

    fn setup() -> (WeightedFreeGroup, VisualParams, BoundaryMeasure<Q>) {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let p = VisualParams::new(Rate::parse("log 3").unwrap(), Rate::parse("log 3").unwrap());
        let nu = uniform_ps_measure::<Q>(&g, &p).unwrap();
        (g, p, nu)
    }

    #[test]
    fn four_generator_spikes_replay() {
        let (g, p, nu) = setup();
        let mut params = GreedyParams::new(p.clone());
        params.l_nu = Some(1.0 / 24.75);
        let centers = match crossing_shell(&g, &qi(1), 4, 100) {
            ShellResult::Shell(c) => c,
            other => panic!("{other:?}"),
        };
        assert_eq!(centers.len(), 4);
        let spikes: Vec<Spike<Q>> =
            centers.iter().map(|c| make_spike(&c.inverse(), &nu, &p, &qi(0)).unwrap()).collect();
        let f = Lcf::constant(2, qi(1));
        let out = greedy_subfunction(&f, &spikes, &[Word::identity()], &g, &params).unwrap();
        assert_eq!(out.lambdas[0], qi(1));
        assert_eq!(out.lambdas[1], q(8, 9));
        assert!(out.h.le(&f));
        assert!(out.delta.is_infinite());
        assert_eq!(out.t, 2.0);
    }

    #[test]
    fn single_spike_on_its_own_function() {
        let (g, p, nu) = setup();
        let mut params = GreedyParams::new(p.clone());
        params.l_nu = Some(0.04);
        let s = make_spike(&g.parse_word("a b").unwrap(), &nu, &p, &qi(0)).unwrap();
        // F = the spike, spanned by its own center cell.
        let f = s.function.clone();
        let err = greedy_subfunction(&f, std::slice::from_ref(&s), &[s.center.clone()], &g, &params);
        // sup/inf = 81 forces radii <= δ/82, far below 1/9.
        assert!(matches!(err, Err(Error::Parameter(_))));
        params.s = qi(2);
        let (_, delta) = oscillation_radius(&f, &g, p.eps.value(), &params.s);
        assert!((delta - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_or_oversized_spikes_are_rejected() {
        let (g, p, nu) = setup();
        let mut params = GreedyParams::new(p.clone());
        params.l_nu = Some(0.04);
        let s1 = make_spike(&g.parse_word("a").unwrap(), &nu, &p, &qi(0)).unwrap();
        let s2 = make_spike(&g.parse_word("a b").unwrap(), &nu, &p, &qi(0)).unwrap();
        let f = Lcf::constant(2, qi(1));
        assert!(greedy_subfunction(&f, &[s2, s1.clone()], &[Word::identity()], &g, &params).is_err());
        let zero = Lcf::constant(2, qi(0));
        assert!(greedy_subfunction(&zero, &[s1], &[Word::identity()], &g, &params).is_err());
    }

    #[test]
    fn sequence_decay_trivial_cases() {
        let ones = vec![qi(1); 4];
        let eps = vec![q(1, 2), q(1, 3), q(1, 5), q(1, 7)];
        let b = sequence_decay_bound(&ones, &eps, &qi(9)).unwrap();
        assert_eq!(b, eps);
        let zeros = vec![qi(0); 4];
        let b = sequence_decay_bound(&zeros, &eps, &qi(9)).unwrap();
        assert!(b.iter().all(|x| *x == qi(9)));
        let halves = vec![0.5f64; 30];
        let e: Vec<f64> = (1..=30).map(|n| 0.5f64.powi(n)).collect();
        let b = sequence_decay_bound(&halves, &e, &1.0).unwrap();
        let d = sequence_decay_direct(&halves, &e, &1.0);
        for (x, y) in b.iter().zip(&d) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert!(sequence_decay_bound(&[1.5f64], &[0.0], &1.0).is_err());
    }

    #[test]
    fn basis_decompose_exact_rounds() {
        let (_, p, nu) = setup();
        let mut params = GreedyParams::new(p);
        params.tolerance = 0.0;
        params.max_rounds = 3;
        let r = basis_decompose(&Lcf::constant(2, qi(1)), &nu, &params).unwrap();
        assert_eq!(r.rounds, 3);
        assert_eq!(r.stop, StopReason::MaxRounds);
        assert!(r.residual_trace.windows(2).all(|w| w[1] < w[0]));
        assert!(r.rate_ok);
        assert!(r.coefficients.atoms().all(|(w, m)| w.len() == 1 && *m > qi(0)));
        // Mass of μ equals the removed residual.
        assert_eq!(r.coefficients.total(), qi(1) - r.residual_trace.last().unwrap().clone());
    }

    #[test]
    fn identity_shortcut() {
        let (_, p, nu) = setup();
        let mut params = GreedyParams::new(p);
        params.admit_identity = true;
        let r = moment_decompose(&Lcf::constant(2, qi(1)), &nu, &params).unwrap();
        assert_eq!(r.rounds, 1);
        assert_eq!(r.stop, StopReason::Identity);
        assert_eq!(r.coefficients, GroupMeasure::dirac(Word::identity()));
    }

    #[test]
    fn parameter_validation() {
        let (_, p, _) = setup();
        let mut params = GreedyParams::new(p);
        params.tolerance = 0.0;
        assert!(params.validate(false).is_err());
        assert!(params.validate(true).is_ok());
        params.s = qi(3);
        assert!(params.validate(true).is_err());
    }

    #[test]
    fn case_audits_accept_fast_streams() {
        let c = ProfileConstants { c_prime: 1.0, lambda: 1.0, q: 1.0, k_cover: 4.0, k: 2.0 };
        let stream: Vec<StreamRound> =
            (1..=6).map(|n| StreamRound { mass: 0.1 / (n as f64).powi(4), log_inv_norm: n as f64 }).collect();
        let a = audit_case1(&stream, 1.0, &c);
        assert!(a.ok, "{a:?}");
        let b = audit_case2(&stream, 1.0, &c);
        assert!(b.ok, "{b:?}");
        let bad = vec![StreamRound { mass: 10.0, log_inv_norm: 1.0 }];
        assert!(!audit_case1(&bad, 1.0, &c).ok);
    }
}
