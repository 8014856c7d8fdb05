//! Partitions of `{0..n-1}` in least-element kernel form.
//!
//! A [`Partition`] stores, for every element `x`, the least element of the
//! block containing `x`. Two partitions are equal as relations exactly when
//! their kernels are equal, so `Eq`/`Hash` are structural.
//!
//! The text form is bar notation: `|0,1,2|3,4,5|`, blocks ordered by least
//! element, elements ascending, no spaces.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest `n` for which [`enumerate_eq`] will run without an explicit bound.
pub const DEFAULT_EQ_BOUND: usize = 8;

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    /// Seeds the forest with the blocks of `p`.
    pub fn from_partition(p: &Partition) -> Self {
        let mut uf = UnionFind::new(p.len());
        for (x, &k) in p.kernel.iter().enumerate() {
            uf.union(x, k);
        }
        uf
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the classes of `x` and `y`. Returns `false` if they were
    /// already merged.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx;
        self.size[rx] += self.size[ry];
        true
    }

    pub fn same(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }

    pub fn into_partition(mut self) -> Partition {
        let n = self.len();
        let mut least = vec![usize::MAX; n];
        let mut kernel = Vec::with_capacity(n);
        for x in 0..n {
            let r = self.find(x);
            if least[r] == usize::MAX {
                least[r] = x;
            }
            kernel.push(least[r]);
        }
        Partition { kernel }
    }
}

/// Human-readable block form of a partition; also the JSON form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockList(pub Vec<Vec<usize>>);

/// An equivalence relation on `{0..n-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    kernel: Vec<usize>,
}

impl Partition {
    /// The identity relation.
    pub fn bottom(n: usize) -> Self {
        Partition {
            kernel: (0..n).collect(),
        }
    }

    /// The all relation.
    pub fn top(n: usize) -> Self {
        Partition { kernel: vec![0; n] }
    }

    /// Builds a partition from an arbitrary labelling: `x ~ y` iff
    /// `labels[x] == labels[y]`.
    pub fn from_labels<T: std::hash::Hash + Eq>(labels: &[T]) -> Self {
        let mut first: HashMap<&T, usize> = HashMap::with_capacity(labels.len());
        let kernel = labels
            .iter()
            .enumerate()
            .map(|(x, l)| *first.entry(l).or_insert(x))
            .collect();
        Partition { kernel }
    }

    /// Accepts a kernel sequence, checking that it is canonical.
    pub fn from_kernel(kernel: Vec<usize>) -> Result<Self> {
        for (x, &k) in kernel.iter().enumerate() {
            if k > x || kernel[k] != k {
                return Err(Error::InvalidPartition(format!(
                    "kernel entry {k} at {x} is not canonical"
                )));
            }
        }
        Ok(Partition { kernel })
    }

    /// Smallest equivalence relation containing `pairs`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut uf = UnionFind::new(n);
        for &(x, y) in pairs {
            for e in [x, y] {
                if e >= n {
                    return Err(Error::OutOfRange {
                        element: e,
                        size: n,
                    });
                }
            }
            uf.union(x, y);
        }
        Ok(uf.into_partition())
    }

    /// Builds a partition from its blocks, which must be disjoint and cover
    /// `{0..n-1}` where `n` is the total number of elements listed.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut kernel = vec![usize::MAX; n];
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let least = *block.iter().min().unwrap();
            for &x in block {
                if x >= n {
                    return Err(Error::OutOfRange {
                        element: x,
                        size: n,
                    });
                }
                if kernel[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "element {x} appears twice"
                    )));
                }
                kernel[x] = least;
            }
        }
        Ok(Partition { kernel })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn kernel(&self) -> &[usize] {
        &self.kernel
    }

    /// Least element of the block of `x`.
    pub fn class_of(&self, x: usize) -> usize {
        self.kernel[x]
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.kernel[x] == self.kernel[y]
    }

    pub fn num_blocks(&self) -> usize {
        self.kernel
            .iter()
            .enumerate()
            .filter(|&(x, &k)| x == k)
            .count()
    }

    pub fn is_bottom(&self) -> bool {
        self.kernel.iter().enumerate().all(|(x, &k)| x == k)
    }

    pub fn is_top(&self) -> bool {
        self.kernel.iter().all(|&k| k == 0)
    }

    /// Blocks ordered by least element, each sorted ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut slot = vec![usize::MAX; self.len()];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (x, &k) in self.kernel.iter().enumerate() {
            if x == k {
                slot[x] = blocks.len();
                blocks.push(vec![x]);
            } else {
                blocks[slot[k]].push(x);
            }
        }
        blocks
    }

    pub fn block_list(&self) -> BlockList {
        BlockList(self.blocks())
    }

    /// Block containing `x`, ascending.
    pub fn block_of(&self, x: usize) -> Vec<usize> {
        let k = self.kernel[x];
        (k..self.len()).filter(|&y| self.kernel[y] == k).collect()
    }

    fn check_size(&self, other: &Partition) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Blockwise intersection.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.check_size(other)?;
        let pairs: Vec<(usize, usize)> = self
            .kernel
            .iter()
            .zip(&other.kernel)
            .map(|(&a, &b)| (a, b))
            .collect();
        Ok(Partition::from_labels(&pairs))
    }

    /// Transitive closure of the union.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_size(other)?;
        let mut uf = UnionFind::from_partition(self);
        for (x, &k) in other.kernel.iter().enumerate() {
            uf.union(x, k);
        }
        Ok(uf.into_partition())
    }

    /// Refinement order: every block of `self` lies inside a block of `other`.
    pub fn leq(&self, other: &Partition) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.leq_unchecked(other))
    }

    pub(crate) fn leq_unchecked(&self, other: &Partition) -> bool {
        self.kernel
            .iter()
            .enumerate()
            .all(|(x, &k)| other.kernel[x] == other.kernel[k])
    }

    /// `self ∩ subset²`, re-indexed by position in `subset`.
    pub fn restrict(&self, subset: &[usize]) -> Result<Partition> {
        for (i, &s) in subset.iter().enumerate() {
            if s >= self.len() {
                return Err(Error::InvalidSubset(format!(
                    "element {s} out of range for size {}",
                    self.len()
                )));
            }
            if i > 0 && subset[i - 1] >= s {
                return Err(Error::InvalidSubset(
                    "subset must be strictly increasing".into(),
                ));
            }
        }
        let labels: Vec<usize> = subset.iter().map(|&s| self.kernel[s]).collect();
        Ok(Partition::from_labels(&labels))
    }

    /// Some pair related in exactly one of the two partitions, smallest first.
    pub fn first_difference(&self, other: &Partition) -> Option<(usize, usize)> {
        if self.len() != other.len() {
            return Some((0, 0));
        }
        let n = self.len();
        for y in 0..n {
            for x in 0..y {
                if self.related(x, y) != other.related(x, y) {
                    return Some((x, y));
                }
            }
        }
        None
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for block in self.blocks() {
            let mut first = true;
            for x in block {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
                first = false;
            }
            f.write_str("|")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses bar notation. Whitespace around elements is ignored, so the
    /// spaced form `| 0, 1 | 2 |` is accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = s
            .strip_prefix('|')
            .and_then(|t| {
                t.strip_suffix('|')
                    .or(if t.is_empty() { Some("") } else { None })
            })
            .ok_or_else(|| Error::Parse(format!("`{s}` is not in bar notation")))?;
        if inner.trim().is_empty() {
            return Ok(Partition::bottom(0));
        }
        let blocks = inner
            .split('|')
            .map(|block| {
                block
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Parse(format!("`{t}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::from_blocks(&blocks)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.block_list().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let blocks = BlockList::deserialize(deserializer)?;
        Partition::from_blocks(&blocks.0).map_err(serde::de::Error::custom)
    }
}

/// Restricted-growth-string enumeration of `Eq(n)` in lexicographic order.
pub struct EqIter {
    rgs: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl EqIter {
    pub fn new(n: usize) -> Self {
        EqIter {
            rgs: vec![0; n],
            maxes: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for EqIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = Partition::from_labels(&self.rgs);
        // advance: rightmost position that can still grow
        let n = self.rgs.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            // maxes[i] = max of rgs[0..i]
            if self.rgs[i] <= self.maxes[i] {
                self.rgs[i] += 1;
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.maxes[j] = self.maxes[j - 1].max(self.rgs[j - 1]);
                }
                break;
            }
        }
        Some(out)
    }
}

/// All partitions of `{0..n-1}`, bounded by [`DEFAULT_EQ_BOUND`].
pub fn enumerate_eq(n: usize) -> Result<Vec<Partition>> {
    enumerate_eq_bounded(n, DEFAULT_EQ_BOUND)
}

pub fn enumerate_eq_bounded(n: usize, bound: usize) -> Result<Vec<Partition>> {
    if n > bound {
        return Err(Error::BoundExceeded {
            requested: n,
            bound,
        });
    }
    Ok(EqIter::new(n).collect())
}

/// Bell number `B(n)`, saturating at `u128::MAX`.
pub fn bell(n: usize) -> u128 {
    // Bell triangle
    let mut row: Vec<u128> = vec![1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let prev = *next.last().unwrap();
            next.push(prev.saturating_add(v));
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn from_pairs_examples() {
        let q = Partition::from_pairs(6, &[(0, 3), (1, 4), (2, 5)]).unwrap();
        assert_eq!(q.to_string(), "|0,3|1,4|2,5|");
        assert_eq!(
            Partition::from_pairs(4, &[]).unwrap().to_string(),
            "|0|1|2|3|"
        );
        assert_eq!(
            Partition::from_pairs(3, &[(0, 1), (1, 2)])
                .unwrap()
                .to_string(),
            "|0,1,2|"
        );
        assert!(matches!(
            Partition::from_pairs(3, &[(0, 3)]),
            Err(Error::OutOfRange {
                element: 3,
                size: 3
            })
        ));
    }

    #[test]
    fn meet_join_examples() {
        let a = p("|0,1,2|3,4,5|");
        let b = p("|0,3|1,4|2,5|");
        assert_eq!(a.meet(&b).unwrap(), Partition::bottom(6));
        assert_eq!(a.join(&b).unwrap(), Partition::top(6));
        assert_eq!(a.meet(&a).unwrap(), a);
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(a.meet(&Partition::bottom(6)).unwrap(), Partition::bottom(6));
        assert_eq!(a.join(&Partition::bottom(6)).unwrap(), a);
        assert!(a.meet(&Partition::bottom(5)).is_err());
        assert!(a.join(&Partition::bottom(5)).is_err());
    }

    #[test]
    fn leq_examples() {
        let a = p("|0,1,2|3,4,5|");
        let b = p("|0,3|1,4|2,5|");
        assert!(Partition::bottom(6).leq(&b).unwrap());
        assert!(!b.leq(&a).unwrap());
        assert!(b.leq(&b).unwrap());
        assert!(a.leq(&Partition::bottom(4)).is_err());
    }

    #[test]
    fn enumerate_small() {
        assert_eq!(enumerate_eq(0).unwrap().len(), 1);
        assert_eq!(enumerate_eq(3).unwrap().len(), 5);
        assert_eq!(enumerate_eq(4).unwrap().len(), 15);
        assert!(matches!(
            enumerate_eq(9),
            Err(Error::BoundExceeded {
                requested: 9,
                bound: 8
            })
        ));
        let all = enumerate_eq(3).unwrap();
        let strs: Vec<String> = all.iter().map(|q| q.to_string()).collect();
        assert_eq!(
            strs,
            ["|0,1,2|", "|0,1|2|", "|0,2|1|", "|0|1,2|", "|0|1|2|"]
        );
    }

    #[test]
    fn bell_numbers() {
        let expect = [1u128, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in expect.iter().enumerate() {
            assert_eq!(bell(n), b);
        }
    }

    #[test]
    fn restrict_examples() {
        let a = p("|0,1,2|3,4,5|");
        assert_eq!(a.restrict(&[0, 3]).unwrap().to_string(), "|0|1|");
        assert_eq!(a.restrict(&[0, 1, 2, 3, 4, 5]).unwrap(), a);
        assert_eq!(
            Partition::top(6).restrict(&[1, 4, 5]).unwrap(),
            Partition::top(3)
        );
        assert!(a.restrict(&[3, 0]).is_err());
        assert!(a.restrict(&[0, 6]).is_err());
    }

    #[test]
    fn bar_notation_round_trip() {
        for s in [
            "|0,1,2|3,4,5|",
            "|0|",
            "|0,5,10|1,3|2,4,14|6,8|7,9,11,15|12,13|",
        ] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("| 0, 3 | 1, 4 | 2, 5 |").to_string(), "|0,3|1,4|2,5|");
        assert_eq!(p("|"), Partition::bottom(0));
        assert!("0,1|2".parse::<Partition>().is_err());
        assert!("|0,0|".parse::<Partition>().is_err());
        assert!("|0,2|".parse::<Partition>().is_err());
    }

    #[test]
    fn json_form() {
        let a = p("|0,1,2|3,4,5|");
        let js = serde_json::to_string(&a).unwrap();
        assert_eq!(js, "[[0,1,2],[3,4,5]]");
        let back: Partition = serde_json::from_str(&js).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Partition>("[[0,1],[1,2]]").is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(Partition::from_kernel(vec![0, 0, 2]).is_ok());
        assert!(Partition::from_kernel(vec![0, 2, 2]).is_err());
        assert!(Partition::from_kernel(vec![0, 0, 1]).is_err());
    }
}
