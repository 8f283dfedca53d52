//! Finite cylinder partitions of the boundary.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::group::{Letter, Word};

/// A complete prefix-free set of cylinder labels, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    rank: usize,
    cells: Vec<Word>,
}

fn children(rank: usize, w: &Word) -> impl Iterator<Item = Word> + '_ {
    let forbidden = w.last().map(|l| l.inv());
    (0..2 * rank as u8).map(Letter).filter(move |l| Some(*l) != forbidden).map(move |l| w.child(l))
}

impl Partition {
    /// The single cell `C(e) = ∂X`.
    pub fn trivial(rank: usize) -> Partition {
        Partition { rank, cells: vec![Word::identity()] }
    }

    /// All cylinders of exactly `depth` letters.
    pub fn uniform(rank: usize, depth: usize) -> Partition {
        let mut cells = vec![Word::identity()];
        for _ in 0..depth {
            cells = cells.iter().flat_map(|w| children(rank, w)).collect();
        }
        Partition { rank, cells }
    }

    /// Validates and sorts an arbitrary cell list.
    pub fn from_cells(rank: usize, mut cells: Vec<Word>) -> Result<Partition> {
        cells.sort();
        for w in cells.windows(2) {
            if w[1].starts_with(&w[0]) {
                return Err(Error::Input(format!("cells `{}` and `{}` overlap", w[0], w[1])));
            }
        }
        for c in &cells {
            if c.letters().iter().any(|l| l.0 as usize >= 2 * rank) {
                return Err(Error::UnknownLetter(c.to_string()));
            }
            if c.letters().windows(2).any(|p| p[1] == p[0].inv()) {
                return Err(Error::Input(format!("cell `{c}` is not reduced")));
            }
        }
        let p = Partition { rank, cells };
        if !p.is_complete() {
            return Err(Error::Input("cells do not cover the boundary".into()));
        }
        Ok(p)
    }

    /// Assumes `cells` is sorted, prefix-free and complete.
    pub(crate) fn from_sorted_unchecked(rank: usize, cells: Vec<Word>) -> Partition {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1] && !w[1].starts_with(&w[0])));
        Partition { rank, cells }
    }

    /// Completeness: every cell's siblings are covered.
    fn is_complete(&self) -> bool {
        // Walk the trie: each internal node must have all its children covered.
        fn covered(p: &Partition, u: &Word) -> bool {
            let r = p.range(u);
            if r.is_empty() {
                return p.containing(u).is_some();
            }
            if r.len() == 1 && p.cells[r.start] == *u {
                return true;
            }
            children(p.rank, u).all(|c| covered(p, &c))
        }
        covered(self, &Word::identity())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cells(&self) -> &[Word] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.cells.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Index of the cell that contains `C(w)`, if `w` is at least as deep.
    pub fn containing(&self, w: &Word) -> Option<usize> {
        let i = self.cells.partition_point(|c| c <= w);
        if i == 0 {
            return None;
        }
        w.starts_with(&self.cells[i - 1]).then_some(i - 1)
    }

    /// Index of the cell containing the canonical ray through `w`.
    pub fn containing_ray(&self, w: &Word) -> usize {
        if let Some(i) = self.containing(w) {
            return i;
        }
        let depth = self.range(w).map(|i| self.cells[i].len()).max().unwrap_or(w.len());
        self.containing(&w.ray(depth)).expect("complete partition")
    }

    /// Indices of cells lying inside `C(u)`; empty when `C(u)` sits inside one cell.
    pub fn range(&self, u: &Word) -> Range<usize> {
        let start = self.cells.partition_point(|c| c < u);
        let end = self.cells.partition_point(|c| c < u || c.starts_with(u));
        start..end
    }

    /// Indices of cells meeting `C(u)`.
    pub fn meeting(&self, u: &Word) -> Range<usize> {
        match self.containing(u) {
            Some(i) => i..i + 1,
            None => self.range(u),
        }
    }

    /// Common refinement.
    pub fn refine(&self, other: &Partition) -> Partition {
        Partition::union_of(self.rank, [self, other])
    }

    /// Common refinement of many partitions.
    pub fn union_of<'a>(rank: usize, parts: impl IntoIterator<Item = &'a Partition>) -> Partition {
        let mut cells: Vec<Word> = parts.into_iter().flat_map(|p| p.cells.iter().cloned()).collect();
        Partition::from_cover(rank, &mut cells)
    }

    /// Finest partition from a union of complete cell lists.
    fn from_cover(rank: usize, cells: &mut Vec<Word>) -> Partition {
        cells.sort();
        cells.dedup();
        let mut out: Vec<Word> = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if i + 1 < cells.len() && cells[i + 1].starts_with(c) {
                continue;
            }
            out.push(c.clone());
        }
        Partition { rank, cells: out }
    }

    /// Refines until `C(w)` is a cell and every other cell is disjoint from it.
    pub fn along(&self, w: &Word) -> Partition {
        self.refine(&Partition::path(self.rank, w))
    }

    /// `C(w)` together with the siblings along the path to `w`.
    pub fn path(rank: usize, w: &Word) -> Partition {
        let mut cells = vec![w.clone()];
        for i in 0..w.len() {
            let u = w.prefix(i);
            let next = w.letters()[i];
            cells.extend(children(rank, &u).filter(|c| c.last() != Some(next)));
        }
        cells.sort();
        Partition { rank, cells }
    }

    /// Splits cells recursively while `split` says so.
    pub fn split_while(&self, mut split: impl FnMut(&Word) -> bool) -> Partition {
        let mut out = Vec::with_capacity(self.cells.len());
        let mut stack: Vec<Word> = self.cells.iter().rev().cloned().collect();
        while let Some(c) = stack.pop() {
            if split(&c) {
                let mut kids: Vec<Word> = children(self.rank, &c).collect();
                kids.reverse();
                stack.extend(kids);
            } else {
                out.push(c);
            }
        }
        Partition { rank: self.rank, cells: out }
    }

    /// Refines every cell to at least `depth` letters.
    pub fn to_depth(&self, depth: usize) -> Partition {
        self.split_while(|c| c.len() < depth)
    }

    pub fn is_refinement_of(&self, coarser: &Partition) -> bool {
        self.cells.iter().all(|c| coarser.containing(c).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::WeightedFreeGroup;

    #[test]
    fn uniform_partitions_are_complete() {
        let p = Partition::uniform(2, 3);
        assert_eq!(p.len(), 4 * 3 * 3);
        assert!(Partition::from_cells(2, p.cells().to_vec()).is_ok());
        let mut missing = p.cells().to_vec();
        missing.pop();
        assert!(Partition::from_cells(2, missing).is_err());
    }

    #[test]
    fn lookup_and_ranges() {
        let g = WeightedFreeGroup::unit(2).unwrap();
        let w = |s| g.parse_word(s).unwrap();
        let p = Partition::path(2, &w("a b"));
        assert_eq!(p.len(), 3 + 3);
        assert_eq!(p.cells()[p.containing(&w("a b a b")).unwrap()], w("a b"));
        assert_eq!(p.cells()[p.containing(&w("b a")).unwrap()], w("b"));
        assert!(p.containing(&w("a")).is_none());
        assert_eq!(p.range(&w("a")).len(), 3);
        assert_eq!(p.meeting(&w("b a")).len(), 1);
        assert_eq!(p.cells()[p.containing_ray(&w("a"))], w("a a"));
    }

    #[test]
    fn refinement_keeps_finer_cells() {
        let a = Partition::path(2, &Word::reduce([Letter(0), Letter(2)]));
        let b = Partition::uniform(2, 1);
        let r = a.refine(&b);
        assert_eq!(r, a);
        let c = Partition::path(2, &Word::reduce([Letter(3), Letter(3)]));
        let r = a.refine(&c);
        assert!(r.is_refinement_of(&a) && r.is_refinement_of(&c));
        assert!(Partition::from_cells(2, r.cells().to_vec()).is_ok());
    }

    #[test]
    fn split_to_depth() {
        let p = Partition::trivial(3).to_depth(2);
        assert_eq!(p, Partition::uniform(3, 2));
        assert_eq!(p.len(), 6 * 5);
    }
}
