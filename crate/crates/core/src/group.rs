//! Weighted free groups and the geometry of their Cayley trees.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{fmt_q, parse_q, Q, Rate, Scalar};

/// One of the `2k` letters. Generator `i` is code `2i`, its inverse `2i + 1`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(pub u8);

impl Letter {
    pub fn gen(i: usize) -> Letter {
        Letter((2 * i) as u8)
    }

    pub fn gen_inv(i: usize) -> Letter {
        Letter((2 * i + 1) as u8)
    }

    pub fn inv(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }
}

/// A freely reduced word. The empty word is the identity.
///
/// Words double as cylinder labels: `C(w)` is the set of infinite reduced
/// words starting with `w`. The derived order is lexicographic with prefixes
/// sorting before their extensions, so cylinders under a common prefix are
/// contiguous in any sorted list.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Word {
        Word(Vec::new())
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Reduced product `self * other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut k = 0;
        let n = self.len();
        while k < n.min(other.len()) && self.0[n - 1 - k] == other.0[k].inv() {
            k += 1;
        }
        let mut out = Vec::with_capacity(n - k + other.len() - k);
        out.extend_from_slice(&self.0[..n - k]);
        out.extend_from_slice(&other.0[k..]);
        Word(out)
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn is_proper_prefix_of(&self, other: &Word) -> bool {
        self.len() < other.len() && other.starts_with(self)
    }

    pub fn lcp_len(&self, other: &Word) -> usize {
        self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// Drops the last letter.
    pub fn parent(&self) -> Option<Word> {
        if self.is_empty() {
            None
        } else {
            Some(self.prefix(self.len() - 1))
        }
    }

    /// Appends a letter that keeps the word reduced.
    pub fn child(&self, l: Letter) -> Word {
        debug_assert!(self.last() != Some(l.inv()));
        let mut v = self.0.clone();
        v.push(l);
        Word(v)
    }

    /// The canonical boundary point of `C(self)`: repeat the last letter
    /// (or the first generator for the identity). Returns the first `n`
    /// letters, `n >= len`.
    pub fn ray(&self, n: usize) -> Word {
        let mut v = self.0.clone();
        let l = self.last().unwrap_or(Letter(0));
        while v.len() < n {
            v.push(l);
        }
        Word(v)
    }

    /// Letter at position `i` of the canonical ray.
    pub fn ray_letter(&self, i: usize) -> Letter {
        self.0.get(i).copied().unwrap_or_else(|| self.last().unwrap_or(Letter(0)))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", default_name(l.generator()))?;
            if l.is_inverse() {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

fn default_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("g{i}")
    }
}

/// A point for Gromov products: a vertex of the tree or a boundary cylinder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Point {
    Vertex(Word),
    Boundary(Word),
}

/// Exponents of the conformal density and of the visual metric.
#[derive(Clone, Debug, PartialEq)]
pub struct VisualParams {
    pub alpha: Rate,
    pub eps: Rate,
}

impl VisualParams {
    pub fn new(alpha: Rate, eps: Rate) -> VisualParams {
        VisualParams { alpha, eps }
    }

    /// `Q = alpha / eps`.
    pub fn q_exponent(&self) -> f64 {
        self.alpha.value() / self.eps.value()
    }
}

fn common_denominator(weights: &[Q]) -> Option<(Vec<i64>, i64)> {
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    const LIMIT: i64 = 1 << 24;
    let mut den: i64 = 1;
    for w in weights {
        den = den.lcm(&w.denom().to_i64()?);
        if den > LIMIT {
            return None;
        }
    }
    let nums = weights
        .iter()
        .map(|w| (w * Q::from_integer(den.into())).to_integer().to_i64().filter(|n| *n <= LIMIT))
        .collect::<Option<Vec<i64>>>()?;
    Some((nums, den))
}

/// `F_k` with one positive rational weight per generator.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFreeGroup {
    weights: Vec<Q>,
    names: Vec<String>,
    /// Weights over a common denominator, when small enough for `i64`.
    scaled: Option<(Vec<i64>, i64)>,
}

impl WeightedFreeGroup {
    pub fn new(weights: Vec<Q>) -> Result<Self> {
        let names = (0..weights.len()).map(default_name).collect();
        Self::with_names(weights, names)
    }

    pub fn with_names(weights: Vec<Q>, names: Vec<String>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Input(format!("rank must be at least 2, got {}", weights.len())));
        }
        if weights.len() > 127 {
            return Err(Error::Input("rank above 127 is not supported".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
            return Err(Error::Input(format!("weights must be positive, got {}", fmt_q(w))));
        }
        if names.len() != weights.len() {
            return Err(Error::Input("one name per generator required".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) || n.contains('^') || n == "e" {
                return Err(Error::Input(format!("bad generator name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::Input(format!("duplicate generator name `{n}`")));
            }
        }
        let scaled = common_denominator(&weights);
        Ok(WeightedFreeGroup { weights, names, scaled })
    }

    /// Unit weights.
    pub fn unit(rank: usize) -> Result<Self> {
        Self::new(vec![Q::one(); rank])
    }

    /// Parses weights such as `["1", "3/2"]`.
    pub fn from_weight_strs(ws: &[&str]) -> Result<Self> {
        Self::new(ws.iter().map(|s| parse_q(s)).collect::<Result<_>>()?)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_letters(&self) -> usize {
        2 * self.rank()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.num_letters()).map(|c| Letter(c as u8))
    }

    pub fn equal_weights(&self) -> bool {
        self.weights.iter().all(|w| *w == self.weights[0])
    }

    pub fn weight(&self, l: Letter) -> &Q {
        &self.weights[l.generator()]
    }

    pub fn max_weight(&self) -> Q {
        self.weights.iter().max().cloned().unwrap_or_else(Q::zero)
    }

    pub fn min_weight(&self) -> Q {
        self.weights.iter().min().cloned().unwrap_or_else(Q::zero)
    }

    /// Reduces a raw letter sequence, rejecting letters outside the alphabet.
    pub fn reduce(&self, letters: &[Letter]) -> Result<Word> {
        if let Some(l) = letters.iter().find(|l| l.0 as usize >= self.num_letters()) {
            return Err(Error::UnknownLetter(format!("code {}", l.0)));
        }
        Ok(Word::reduce(letters.iter().copied()))
    }

    /// Parses `"a b^-1 a"`, `"ab⁻¹a"`, `""` or `"e"` and reduces the result.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let letters = self.tokenize(s)?;
        Ok(Word::reduce(letters))
    }

    fn tokenize(&self, s: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        let mut rest = s.trim();
        if rest == "e" {
            return Ok(out);
        }
        while !rest.is_empty() {
            rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '·' || c == '*');
            if rest.is_empty() {
                break;
            }
            if let Some(r) = rest.strip_prefix('e') {
                if r.is_empty() || r.starts_with(char::is_whitespace) {
                    if !self.names.iter().any(|n| n == "e") {
                        rest = r;
                        continue;
                    }
                }
            }
            let (gi, name_len) = self
                .names
                .iter()
                .enumerate()
                .filter(|(_, n)| rest.starts_with(n.as_str()))
                .max_by_key(|(_, n)| n.len())
                .map(|(i, n)| (i, n.len()))
                .ok_or_else(|| {
                    Error::UnknownLetter(rest.split_whitespace().next().unwrap_or(rest).to_string())
                })?;
            rest = &rest[name_len..];
            let mut inverse = false;
            for suffix in ["^-1", "⁻¹", "^{-1}"] {
                if let Some(r) = rest.strip_prefix(suffix) {
                    inverse = true;
                    rest = r;
                    break;
                }
            }
            out.push(if inverse { Letter::gen_inv(gi) } else { Letter::gen(gi) });
        }
        Ok(out)
    }

    /// Formats a word with this group's generator names.
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "e".into();
        }
        w.letters()
            .iter()
            .map(|l| {
                let n = &self.names[l.generator()];
                if l.is_inverse() {
                    format!("{n}^-1")
                } else {
                    n.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Weighted length `d(e, w)`.
    pub fn length(&self, w: &Word) -> Q {
        if let Some((nums, den)) = &self.scaled {
            let n: i64 = w.letters().iter().map(|l| nums[l.generator()]).sum();
            return if *den == 1 { Q::from_integer(n.into()) } else { Q::new(n.into(), (*den).into()) };
        }
        w.letters().iter().fold(Q::zero(), |acc, l| acc + self.weight(*l))
    }

    /// Weighted length of the first `n` letters of `w`'s canonical ray.
    pub fn ray_length(&self, w: &Word, n: usize) -> Q {
        (0..n).fold(Q::zero(), |acc, i| acc + self.weight(w.ray_letter(i)))
    }

    pub fn distance(&self, g: &Word, h: &Word) -> Q {
        self.length(&g.inverse().mul(h))
    }

    /// Reduced one-letter extensions of `w`.
    pub fn children(&self, w: &Word) -> Vec<Word> {
        let forbidden = w.last().map(|l| l.inv());
        self.letters().filter(|l| Some(*l) != forbidden).map(|l| w.child(l)).collect()
    }

    /// All reduced words with exactly `n` letters, in sorted order.
    pub fn sphere(&self, n: usize) -> Vec<Word> {
        let mut level = vec![Word::identity()];
        for _ in 0..n {
            level = level.iter().flat_map(|w| self.children(w)).collect();
        }
        level
    }

    /// All reduced words with at most `n` letters, by length then lexicographically.
    pub fn ball(&self, n: usize) -> Vec<Word> {
        let mut out = vec![Word::identity()];
        let mut level = vec![Word::identity()];
        for _ in 0..n {
            level = level.iter().flat_map(|w| self.children(w)).collect();
            out.extend(level.iter().cloned());
        }
        out
    }

    /// `g * C(c)` as a minimal list of cylinders.
    ///
    /// The cylinder `C(c)` is the set of ends beyond the edge `(c', c)` where
    /// `c'` is the parent of `c`; the image is the set of ends beyond
    /// `(g c', g c)`, which is a cylinder when `g c` is the farther endpoint
    /// and the complement of `C(g c')` otherwise.
    pub fn translate_cylinder(&self, g: &Word, c: &Word) -> Vec<Word> {
        let Some(parent) = c.parent() else {
            return vec![Word::identity()];
        };
        let v = g.mul(&parent);
        let w = g.mul(c);
        if w.len() > v.len() {
            vec![w]
        } else {
            self.complement(&v)
        }
    }

    /// Cylinders covering `∂X \ C(v)`: the siblings along the path to `v`.
    pub fn complement(&self, v: &Word) -> Vec<Word> {
        let mut out = Vec::new();
        for i in 0..v.len() {
            let u = v.prefix(i);
            let next = v.letters()[i];
            out.extend(self.children(&u).into_iter().filter(|c| c.last() != Some(next)));
        }
        out.sort();
        out
    }

    /// Gromov product of two vertices.
    pub fn vertex_product(&self, x: &Word, y: &Word, base: &Word) -> Q {
        let two = Q::from_integer(2.into());
        (self.distance(base, x) + self.distance(base, y) - self.distance(x, y)) / two
    }

    /// Gromov product `(x · y)_base`.
    ///
    /// A cylinder argument is accepted when the product is the same for every
    /// point of it; otherwise an ambiguity error names the depth needed.
    /// Nested distinct cylinders give the infimum over their points.
    pub fn gromov_product(&self, x: &Point, y: &Point, base: &Word) -> Result<Q> {
        match (x, y) {
            (Point::Vertex(a), Point::Vertex(b)) => Ok(self.vertex_product(a, b, base)),
            (Point::Vertex(v), Point::Boundary(c)) | (Point::Boundary(c), Point::Vertex(v)) => {
                self.check_boundary_arg(c, &[v, base])?;
                Ok(self.vertex_product(v, c, base))
            }
            (Point::Boundary(c1), Point::Boundary(c2)) => {
                if c1 == c2 {
                    return Err(Error::UndefinedProduct(format!(
                        "cylinder `{}` against itself",
                        self.format_word(c1)
                    )));
                }
                self.check_boundary_arg(c1, &[base])?;
                self.check_boundary_arg(c2, &[base])?;
                // The geodesic between the two ends runs through c1 and c2.
                Ok(self.vertex_product(c1, c2, base))
            }
        }
    }

    /// Errors unless every vertex in `others` lies outside the open subtree
    /// strictly beyond `c`.
    fn check_boundary_arg(&self, c: &Word, others: &[&Word]) -> Result<()> {
        let required = others
            .iter()
            .filter(|v| c.is_proper_prefix_of(v))
            .map(|v| v.len())
            .max();
        match required {
            Some(required) => Err(Error::Ambiguous { cylinder: self.format_word(c), required }),
            None => Ok(()),
        }
    }

    /// `rho_{q,z}(p) = d(q, z_o) - d(p, z_o)` for `z` in `C(cyl)`, where `z_o`
    /// is the branch point of `p`, `q`, `z`.
    pub fn busemann(&self, q: &Word, cyl: &Word, p: &Word) -> Result<Q> {
        if q == p {
            return Ok(Q::zero());
        }
        let prod = self.gromov_product(&Point::Vertex(q.clone()), &Point::Boundary(cyl.clone()), p)?;
        Ok(self.distance(p, q) - prod * Q::from_integer(2.into()))
    }

    /// True when `z -> rho_{q,z}(p)` is constant on `C(c)`.
    pub fn busemann_determined(&self, q: &Word, c: &Word, p: &Word) -> bool {
        q == p || !(c.is_proper_prefix_of(q) || c.is_proper_prefix_of(p))
    }

    /// Coarsest cylinder partition on which `z -> rho_{q,z}(p)` is constant,
    /// with the value on each cell.
    pub fn locally_constant_depth(&self, q: &Word, p: &Word) -> Vec<(Word, Q)> {
        let mut out = Vec::new();
        let mut stack = vec![Word::identity()];
        while let Some(c) = stack.pop() {
            if self.busemann_determined(q, &c, p) {
                let v = self.busemann(q, &c, p).expect("determined cell");
                out.push((c, v));
            } else {
                stack.extend(self.children(&c));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Visual distance `e^{-eps (x · y)_base}` between disjoint cylinders.
    pub fn visual_quasimetric<S: Scalar>(
        &self,
        x: &Word,
        y: &Word,
        base: &Word,
        params: &VisualParams,
    ) -> Result<S> {
        if x.starts_with(y) || y.starts_with(x) {
            return Err(Error::Overlapping(self.format_word(x), self.format_word(y)));
        }
        let prod = self.gromov_product(&Point::Boundary(x.clone()), &Point::Boundary(y.clone()), base)?;
        params.eps.exp_neg(&prod)
    }

    /// `U_p(gamma) = d(p, gamma^{-1} p)`.
    pub fn u_value(&self, gamma: &Word, base: &Word) -> Q {
        self.distance(base, &gamma.inverse().mul(base))
    }

    /// Shadow `O_base(gamma, D)`: the closed visual ball around `z+` (the end
    /// through `gamma^{-1} base`) of radius `e^{-eps (U - D)}`, as cylinders.
    pub fn shadow(&self, gamma: &Word, d: &Q, base: &Word) -> Result<Vec<Word>> {
        if gamma.is_empty() {
            return Err(Error::DegenerateSpike("shadow of the identity".into()));
        }
        if d.is_negative() {
            return Err(Error::Input("shadow margin must be nonnegative".into()));
        }
        // Work at the identity: translate by base^{-1}, take a prefix, translate back.
        let target = base.inverse().mul(&gamma.inverse()).mul(base);
        let threshold = self.length(&target) - d;
        let u = self.shortest_prefix_reaching(&target, &threshold);
        Ok(self.translate_cylinder(base, &u))
    }

    /// Shortest prefix `u` of the canonical ray of `w` with `|u| >= t`.
    pub fn shortest_prefix_reaching(&self, w: &Word, t: &Q) -> Word {
        let mut acc = Q::zero();
        let mut n = 0;
        while acc < *t {
            acc += self.weight(w.ray_letter(n));
            n += 1;
        }
        w.ray(n).prefix(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn f2() -> WeightedFreeGroup {
        WeightedFreeGroup::unit(2).unwrap()
    }

    #[test]
    fn reduce_and_parse() {
        let g = f2();
        assert_eq!(g.format_word(&g.parse_word("a b b^-1").unwrap()), "a");
        assert!(g.parse_word("").unwrap().is_empty());
        assert_eq!(g.format_word(&g.parse_word("a a⁻¹ a").unwrap()), "a");
        assert_eq!(g.format_word(&g.parse_word("ab⁻¹a").unwrap()), "a b^-1 a");
        assert!(matches!(g.parse_word("a z"), Err(Error::UnknownLetter(_))));
        assert!(g.reduce(&[Letter(9)]).is_err());
    }

    #[test]
    fn distances() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        assert_eq!(g.distance(&Word::identity(), &w("a b")), qi(2));
        assert_eq!(g.distance(&w("a"), &w("a")), qi(0));
        let h = WeightedFreeGroup::from_weight_strs(&["1", "3"]).unwrap();
        assert_eq!(h.distance(&Word::identity(), &h.parse_word("a b^-1 a").unwrap()), qi(5));
    }

    #[test]
    fn rejects_bad_groups() {
        assert!(WeightedFreeGroup::unit(1).is_err());
        assert!(WeightedFreeGroup::new(vec![qi(1), qi(0)]).is_err());
    }

    #[test]
    fn products() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        let e = Word::identity();
        let v = |s| Point::Vertex(w(s));
        let c = |s| Point::Boundary(w(s));
        assert_eq!(g.gromov_product(&v("a b"), &v("a b^-1"), &e).unwrap(), qi(1));
        assert_eq!(g.gromov_product(&v("a b a"), &v("a b a"), &e).unwrap(), qi(3));
        assert_eq!(g.gromov_product(&c("a b"), &c("b"), &w("a")).unwrap(), qi(0));
        assert!(matches!(g.gromov_product(&c("a"), &c("a"), &e), Err(Error::UndefinedProduct(_))));
        assert!(matches!(
            g.gromov_product(&c("a"), &v("a b"), &e),
            Err(Error::Ambiguous { required: 2, .. })
        ));
    }

    #[test]
    fn busemann_examples() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        let e = Word::identity();
        assert_eq!(g.busemann(&w("a"), &w("a"), &e).unwrap(), qi(-1));
        assert_eq!(g.busemann(&w("a"), &w("b"), &e).unwrap(), qi(1));
        assert_eq!(g.busemann(&e, &w("b a"), &e).unwrap(), qi(0));
        assert!(g.busemann(&w("a b"), &w("a"), &e).is_err());
    }

    #[test]
    fn locally_constant_partitions() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        let e = Word::identity();
        let cells = g.locally_constant_depth(&w("a"), &e);
        let names: Vec<_> = cells.iter().map(|(c, _)| g.format_word(c)).collect();
        assert_eq!(names, ["a", "a^-1", "b", "b^-1"]);
        assert_eq!(cells[0].1, qi(-1));
        assert_eq!(g.locally_constant_depth(&e, &e), vec![(e.clone(), qi(0))]);
        let cells = g.locally_constant_depth(&w("a b"), &e);
        assert_eq!(cells.len(), 3 + 3);
        let ab = cells.iter().find(|(c, _)| *c == w("a b")).unwrap();
        assert_eq!(ab.1, qi(-2));
        let aa = cells.iter().find(|(c, _)| *c == w("a a")).unwrap();
        assert_eq!(aa.1, qi(0));
    }

    #[test]
    fn visual_distances() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        let e = Word::identity();
        let p = VisualParams::new(Rate::real(1.0).unwrap(), Rate::real(1.0).unwrap());
        let d: f64 = g.visual_quasimetric(&w("a"), &w("b"), &e, &p).unwrap();
        assert_eq!(d, 1.0);
        let d: f64 = g.visual_quasimetric(&w("a b"), &w("a b^-1"), &e, &p).unwrap();
        assert!((d - (-1f64).exp()).abs() < 1e-15);
        assert!(g.visual_quasimetric::<f64>(&w("a"), &w("a b"), &e, &p).is_err());
    }

    #[test]
    fn shadows() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        let e = Word::identity();
        assert_eq!(g.shadow(&w("a^-1 b^-1"), &qi(0), &e).unwrap(), vec![w("b a")]);
        assert_eq!(g.shadow(&w("a^-1"), &qi(0), &e).unwrap(), vec![w("a")]);
        assert_eq!(g.shadow(&w("a^-1 b^-1"), &qi(2), &e).unwrap(), vec![e.clone()]);
        assert_eq!(g.shadow(&w("a^-1 b^-1"), &q(1, 2), &e).unwrap(), vec![w("b a")]);
        assert!(g.shadow(&e, &qi(0), &e).is_err());
    }

    #[test]
    fn translation_of_cylinders() {
        let g = f2();
        let w = |s| g.parse_word(s).unwrap();
        assert_eq!(g.translate_cylinder(&w("a"), &w("b")), vec![w("a b")]);
        assert_eq!(g.translate_cylinder(&w("a"), &w("a^-1 b")), vec![w("b")]);
        // a * C(a^-1) is everything except C(a).
        assert_eq!(g.translate_cylinder(&w("a"), &w("a^-1")), vec![w("a^-1"), w("b"), w("b^-1")]);
    }
}
