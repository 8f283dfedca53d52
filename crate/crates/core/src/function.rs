//! Functions on the boundary that are constant on the cells of a partition.

use crate::error::{Error, Result};
use crate::group::Word;
use crate::partition::Partition;
use crate::scalar::{smax, smin, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LocallyConstantFunction<S> {
    partition: Partition,
    values: Vec<S>,
}

pub type Lcf<S> = LocallyConstantFunction<S>;

impl<S: Scalar> LocallyConstantFunction<S> {
    pub fn new(partition: Partition, values: Vec<S>) -> Result<Self> {
        if partition.len() != values.len() {
            return Err(Error::Input(format!(
                "{} cells but {} values",
                partition.len(),
                values.len()
            )));
        }
        Ok(LocallyConstantFunction { partition, values })
    }

    pub fn constant(rank: usize, v: S) -> Self {
        LocallyConstantFunction { partition: Partition::trivial(rank), values: vec![v] }
    }

    /// Builds a function by evaluating `f` on each cell.
    pub fn from_fn(partition: Partition, mut f: impl FnMut(&Word) -> S) -> Self {
        let values = partition.cells().iter().map(&mut f).collect();
        LocallyConstantFunction { partition, values }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn rank(&self) -> usize {
        self.partition.rank()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.partition.cells().iter().zip(&self.values)
    }

    /// Value on `C(w)`; errors when `C(w)` is split by the partition and the
    /// function is not constant on it.
    pub fn value_on(&self, w: &Word) -> Result<&S> {
        if let Some(i) = self.partition.containing(w) {
            return Ok(&self.values[i]);
        }
        let r = self.partition.range(w);
        let first = &self.values[r.start];
        if self.values[r.clone()].iter().all(|v| v == first) {
            Ok(first)
        } else {
            let required = r.map(|i| self.partition.cells()[i].len()).max().unwrap_or(w.len());
            Err(Error::Ambiguous { cylinder: w.to_string(), required })
        }
    }

    /// Value at the canonical boundary point of `C(w)`.
    pub fn at_ray(&self, w: &Word) -> &S {
        &self.values[self.partition.containing_ray(w)]
    }

    /// Minimum and maximum over `C(u)`.
    pub fn bounds_on(&self, u: &Word) -> (S, S) {
        let r = self.partition.meeting(u);
        let vals = &self.values[r];
        let mut lo = vals[0].clone();
        let mut hi = vals[0].clone();
        for v in &vals[1..] {
            lo = smin(lo, v.clone());
            hi = smax(hi, v.clone());
        }
        (lo, hi)
    }

    pub fn sup(&self) -> S {
        self.values.iter().cloned().reduce(smax).expect("nonempty partition")
    }

    pub fn inf(&self) -> S {
        self.values.iter().cloned().reduce(smin).expect("nonempty partition")
    }

    /// Same function on a finer partition.
    pub fn refine_to(&self, finer: &Partition) -> Result<Self> {
        let mut values = Vec::with_capacity(finer.len());
        for c in finer.cells() {
            let i = self.partition.containing(c).ok_or_else(|| {
                Error::Input(format!("partition is not a refinement at `{c}`"))
            })?;
            values.push(self.values[i].clone());
        }
        Ok(LocallyConstantFunction { partition: finer.clone(), values })
    }

    /// Pointwise combination on the common refinement.
    pub fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        let p = self.partition.refine(&other.partition);
        let a = self.refine_to(&p).expect("common refinement");
        let b = other.refine_to(&p).expect("common refinement");
        let values = a.values.iter().zip(&b.values).map(|(x, y)| f(x, y)).collect();
        LocallyConstantFunction { partition: p, values }
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        LocallyConstantFunction {
            partition: self.partition.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() * b.clone())
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|v| v.clone() * k.clone())
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs_val())
    }

    /// `self <= other` on every cell.
    pub fn le(&self, other: &Self) -> bool {
        let d = self.zip_with(other, |a, b| b.clone() - a.clone());
        d.values.iter().all(|v| !(*v < S::zero()))
    }

    /// Merges sibling cells with equal values until none remain.
    pub fn coarsen(&self) -> Self {
        let rank = self.rank();
        let mut cells: Vec<Word> = self.partition.cells().to_vec();
        let mut values = self.values.clone();
        loop {
            let mut out_c: Vec<Word> = Vec::with_capacity(cells.len());
            let mut out_v: Vec<S> = Vec::with_capacity(cells.len());
            let mut changed = false;
            let mut i = 0;
            while i < cells.len() {
                let c = &cells[i];
                if let Some(parent) = c.parent() {
                    let n = if parent.is_empty() { 2 * rank } else { 2 * rank - 1 };
                    if i + n <= cells.len()
                        && cells[i..i + n].iter().all(|d| d.len() == c.len() && d.starts_with(&parent))
                        && values[i..i + n].iter().all(|v| *v == values[i])
                    {
                        out_c.push(parent);
                        out_v.push(values[i].clone());
                        i += n;
                        changed = true;
                        continue;
                    }
                }
                out_c.push(c.clone());
                out_v.push(values[i].clone());
                i += 1;
            }
            cells = out_c;
            values = out_v;
            if !changed {
                break;
            }
        }
        LocallyConstantFunction { partition: Partition::from_sorted_unchecked(rank, cells), values }
    }

    /// Exact equality as functions, independent of representation.
    pub fn same_function(&self, other: &Self) -> bool {
        let d = self.zip_with(other, |a, b| a.clone() - b.clone());
        d.values.iter().all(|v| v.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi, Q};

    #[test]
    fn refine_and_coarsen_round_trip() {
        let f = Lcf::<Q>::new(Partition::uniform(2, 1), vec![qi(3), q(1, 3), q(1, 3), q(1, 3)]).unwrap();
        let fine = f.refine_to(&Partition::uniform(2, 3)).unwrap();
        assert!(fine.same_function(&f));
        assert_eq!(fine.coarsen(), f);
        let one = Lcf::<Q>::constant(2, qi(1)).refine_to(&Partition::uniform(2, 2)).unwrap();
        assert_eq!(one.coarsen(), Lcf::constant(2, qi(1)));
    }

    #[test]
    fn arithmetic_on_common_refinement() {
        let a = Lcf::<Q>::new(Partition::uniform(2, 1), vec![qi(1), qi(2), qi(3), qi(4)]).unwrap();
        let b = Lcf::<Q>::constant(2, qi(1)).refine_to(&Partition::uniform(2, 2)).unwrap();
        let s = a.add(&b);
        assert_eq!(s.partition().len(), 12);
        assert_eq!(s.sup(), qi(5));
        assert_eq!(s.inf(), qi(2));
        assert!(b.le(&s));
        assert!(!s.le(&b));
        assert_eq!(*a.value_on(&Word::reduce([crate::group::Letter(2), crate::group::Letter(2)])).unwrap(), qi(3));
        assert!(a.value_on(&Word::identity()).is_err());
        assert_eq!(a.bounds_on(&Word::identity()), (qi(1), qi(4)));
    }
}
