//! Abstract finite lattices.
//!
//! A [`FiniteLattice`] keeps its order as bitset rows (`up[i]` is the set of
//! elements above `i`, `down[i]` the set below). Joins and meets are derived
//! from those rows on demand.
//!
//! Isomorphism testing works on join-irreducible elements: a lattice
//! isomorphism is determined by where it sends them, so the search assigns
//! join-irreducibles one at a time, pruning with per-element invariants and
//! pairwise join invariants, and only then extends and checks the full map.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::partition::{bell, enumerate_eq_bounded, Partition, DEFAULT_EQ_BOUND};

/// Largest lattice [`product`] and [`shape_lattice`] will materialize.
pub const DEFAULT_MATERIALIZE_BUDGET: u128 = 4096;

#[derive(Clone, PartialEq, Eq, Hash)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// A finite lattice on elements `0..size`.
#[derive(Clone)]
pub struct FiniteLattice {
    size: usize,
    up: Vec<BitSet>,
    down: Vec<BitSet>,
    labels: Vec<Option<String>>,
    bottom: usize,
    top: usize,
    height: Vec<usize>,
    upper_covers: Vec<Vec<usize>>,
    lower_covers: Vec<Vec<usize>>,
}

impl std::fmt::Debug for FiniteLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteLattice")
            .field("size", &self.size)
            .field("covers", &self.covers())
            .finish()
    }
}

impl FiniteLattice {
    /// Builds a lattice from an order predicate, validating the partial order
    /// axioms and the existence of all joins and meets.
    pub fn from_leq(size: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let lat = Self::build(size, leq)?;
        lat.validate()?;
        Ok(lat)
    }

    /// Builds the lattice whose order is the reflexive-transitive closure of
    /// `relations` (typically covering pairs `(lower, upper)`).
    pub fn from_relations(size: usize, relations: &[(usize, usize)]) -> Result<Self> {
        let mut up: Vec<BitSet> = (0..size)
            .map(|i| {
                let mut b = BitSet::new(size);
                b.insert(i);
                b
            })
            .collect();
        for &(a, b) in relations {
            if a >= size || b >= size {
                return Err(Error::InvalidLattice(format!(
                    "pair ({a},{b}) out of range"
                )));
            }
            up[a].insert(b);
        }
        // Warshall over bitset rows
        for k in 0..size {
            for i in 0..size {
                if i != k && up[i].contains(k) {
                    let row = up[k].clone();
                    for (w, r) in up[i].words.iter_mut().zip(&row.words) {
                        *w |= r;
                    }
                }
            }
        }
        Self::from_leq(size, |a, b| up[a].contains(b))
    }

    /// The `k`-element chain.
    pub fn chain(k: usize) -> Self {
        Self::build(k, |a, b| a <= b).expect("chains are lattices")
    }

    /// Lattice of a family of partitions under refinement, labelled by bar
    /// notation. The family must be closed under meets and joins.
    pub fn from_partitions(elements: &[Partition]) -> Self {
        let mut lat = Self::build(elements.len(), |a, b| {
            elements[a].leq_unchecked(&elements[b])
        })
        .expect("congruence lattices are lattices");
        lat.labels = elements.iter().map(|p| Some(p.to_string())).collect();
        lat
    }

    fn build(size: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidLattice(
                "a lattice has at least one element".into(),
            ));
        }
        let mut up = vec![BitSet::new(size); size];
        let mut down = vec![BitSet::new(size); size];
        for a in 0..size {
            for b in 0..size {
                if leq(a, b) {
                    up[a].insert(b);
                    down[b].insert(a);
                }
            }
        }
        let bottom = (0..size)
            .find(|&i| up[i].count() == size)
            .ok_or_else(|| Error::InvalidLattice("no bottom element".into()))?;
        let top = (0..size)
            .find(|&i| down[i].count() == size)
            .ok_or_else(|| Error::InvalidLattice("no top element".into()))?;

        let mut upper_covers = vec![Vec::new(); size];
        let mut lower_covers = vec![Vec::new(); size];
        for a in 0..size {
            for b in up[a].iter() {
                if a == b {
                    continue;
                }
                // b covers a iff nothing strictly between
                let between = up[a].and(&down[b]);
                if between.count() == 2 {
                    upper_covers[a].push(b);
                    lower_covers[b].push(a);
                }
            }
        }
        // height = longest chain from bottom; process by down-set size
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by_key(|&i| down[i].count());
        let mut height = vec![0; size];
        for &b in &order {
            height[b] = lower_covers[b]
                .iter()
                .map(|&a| height[a] + 1)
                .max()
                .unwrap_or(0);
        }
        Ok(FiniteLattice {
            size,
            up,
            down,
            labels: vec![None; size],
            bottom,
            top,
            height,
            upper_covers,
            lower_covers,
        })
    }

    fn validate(&self) -> Result<()> {
        let n = self.size;
        for a in 0..n {
            if !self.up[a].contains(a) {
                return Err(Error::InvalidLattice(format!("{a} ≰ {a}")));
            }
            for b in self.up[a].iter() {
                if a != b && self.up[b].contains(a) {
                    return Err(Error::InvalidLattice(format!(
                        "{a} and {b} are mutually below"
                    )));
                }
                if !self.up[b].is_subset(&self.up[a]) {
                    return Err(Error::InvalidLattice("order is not transitive".into()));
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.try_join(a, b).is_none() {
                    return Err(Error::InvalidLattice(format!("{a} and {b} have no join")));
                }
                if self.try_meet(a, b).is_none() {
                    return Err(Error::InvalidLattice(format!("{a} and {b} have no meet")));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.up[a].contains(b)
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn height(&self, a: usize) -> usize {
        self.height[a]
    }

    pub fn label(&self, a: usize) -> Option<&str> {
        self.labels[a].as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.size);
        self.labels = labels.into_iter().map(Some).collect();
        self
    }

    pub fn upper_covers(&self, a: usize) -> &[usize] {
        &self.upper_covers[a]
    }

    pub fn lower_covers(&self, a: usize) -> &[usize] {
        &self.lower_covers[a]
    }

    fn try_join(&self, a: usize, b: usize) -> Option<usize> {
        let common = self.up[a].and(&self.up[b]);
        let c = common.count();
        let found = common.iter().find(|&x| self.up[x].count() == c);
        found
    }

    fn try_meet(&self, a: usize, b: usize) -> Option<usize> {
        let common = self.down[a].and(&self.down[b]);
        let c = common.count();
        let found = common.iter().find(|&x| self.down[x].count() == c);
        found
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.try_join(a, b).expect("lattice joins exist")
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.try_meet(a, b).expect("lattice meets exist")
    }

    /// Covering pairs `(lower, upper)`, sorted.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .upper_covers
            .iter()
            .enumerate()
            .flat_map(|(a, ups)| ups.iter().map(move |&b| (a, b)))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn join_irreducibles(&self) -> Vec<usize> {
        (0..self.size)
            .filter(|&a| self.lower_covers[a].len() == 1)
            .collect()
    }

    fn signature(&self, a: usize) -> (usize, usize, usize, usize, usize) {
        (
            self.height[a],
            self.down[a].count(),
            self.up[a].count(),
            self.lower_covers[a].len(),
            self.upper_covers[a].len(),
        )
    }

    /// Sublattice `{x : a ≤ x ≤ b}`, keeping labels.
    pub fn interval(&self, a: usize, b: usize) -> Result<FiniteLattice> {
        if !self.leq(a, b) {
            return Err(Error::InvalidLattice(format!("{a} ≰ {b}")));
        }
        let members: Vec<usize> = self.up[a].and(&self.down[b]).iter().collect();
        let mut lat = Self::build(members.len(), |i, j| self.leq(members[i], members[j]))?;
        lat.labels = members.iter().map(|&m| self.labels[m].clone()).collect();
        Ok(lat)
    }

    /// Graphviz rendering of the Hasse diagram, bottom at the bottom. Labels
    /// longer than `label_cap` fall back to the element index.
    pub fn to_dot(&self, name: &str, label_cap: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{name}\" {{");
        let _ = writeln!(out, "  rankdir=BT;");
        let _ = writeln!(out, "  node [shape=box, fontsize=10];");
        for a in 0..self.size {
            let label = match &self.labels[a] {
                Some(l) if l.len() <= label_cap => l.clone(),
                _ => a.to_string(),
            };
            let _ = writeln!(out, "  n{a} [label=\"{label}\"];");
        }
        let max_h = self.height.iter().copied().max().unwrap_or(0);
        for h in 0..=max_h {
            let same: Vec<String> = (0..self.size)
                .filter(|&a| self.height[a] == h)
                .map(|a| format!("n{a}"))
                .collect();
            let _ = writeln!(out, "  {{ rank=same; {}; }}", same.join("; "));
        }
        for (a, b) in self.covers() {
            let _ = writeln!(out, "  n{a} -> n{b} [arrowhead=none];");
        }
        out.push_str("}\n");
        out
    }
}

/// Transitive reduction of the order.
pub fn covers(lattice: &FiniteLattice) -> Vec<(usize, usize)> {
    lattice.covers()
}

pub fn interval(lattice: &FiniteLattice, a: usize, b: usize) -> Result<FiniteLattice> {
    lattice.interval(a, b)
}

/// Componentwise product; the empty product is the one-element lattice.
pub fn product(factors: &[FiniteLattice]) -> Result<FiniteLattice> {
    product_with_budget(factors, DEFAULT_MATERIALIZE_BUDGET)
}

pub fn product_with_budget(factors: &[FiniteLattice], budget: u128) -> Result<FiniteLattice> {
    let size = factors
        .iter()
        .fold(1u128, |acc, f| acc.saturating_mul(f.size as u128));
    if size > budget {
        return Err(Error::Budget { size, budget });
    }
    let size = size as usize;
    let decode = |mut i: usize| -> Vec<usize> {
        factors
            .iter()
            .map(|f| {
                let c = i % f.size;
                i /= f.size;
                c
            })
            .collect()
    };
    let coords: Vec<Vec<usize>> = (0..size).map(decode).collect();
    FiniteLattice::build(size, |a, b| {
        factors
            .iter()
            .zip(coords[a].iter().zip(&coords[b]))
            .all(|(f, (&x, &y))| f.leq(x, y))
    })
}

/// `Eq(k)` under refinement, labelled by bar notation.
pub fn eq_lattice(k: usize) -> Result<FiniteLattice> {
    eq_lattice_bounded(k, DEFAULT_EQ_BOUND)
}

pub fn eq_lattice_bounded(k: usize, bound: usize) -> Result<FiniteLattice> {
    let parts = enumerate_eq_bounded(k, bound)?;
    Ok(FiniteLattice::from_partitions(&parts))
}

/// A product `∏ Eq(block_size)^exponent`.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IntervalShape {
    pub factors: Vec<(usize, usize)>,
}

impl IntervalShape {
    pub fn new(factors: Vec<(usize, usize)>) -> Self {
        IntervalShape { factors }
    }

    pub fn trivial() -> Self {
        IntervalShape::default()
    }

    /// The interval `[lower, upper]` of `Eq(n)`: each block of `upper` that
    /// is a union of `k` blocks of `lower` contributes a factor `Eq(k)`.
    pub fn between(lower: &Partition, upper: &Partition) -> Result<Self> {
        if !lower.leq(upper)? {
            return Err(Error::InvalidPartition(format!("{lower} ≰ {upper}")));
        }
        let factors = upper
            .blocks()
            .iter()
            .map(|block| (block.iter().filter(|&&x| lower.class_of(x) == x).count(), 1))
            .collect();
        Ok(IntervalShape { factors })
    }

    /// Number of elements, saturating.
    pub fn size(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, &(k, e)| {
            let b = bell(k);
            (0..e).fold(acc, |a, _| a.saturating_mul(b))
        })
    }

    /// Nontrivial block sizes with multiplicity, sorted. Two shapes with the
    /// same normal form describe isomorphic lattices.
    pub fn normal_form(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .factors
            .iter()
            .filter(|&&(k, _)| k >= 2)
            .flat_map(|&(k, e)| std::iter::repeat_n(k, e))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn is_trivial(&self) -> bool {
        self.normal_form().is_empty()
    }
}

impl std::fmt::Display for IntervalShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nf = self.normal_form();
        if nf.is_empty() {
            return f.write_str("1");
        }
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < nf.len() {
            let j = nf[i..].iter().take_while(|&&k| k == nf[i]).count();
            parts.push(if j == 1 {
                format!("Eq({})", nf[i])
            } else {
                format!("Eq({})^{}", nf[i], j)
            });
            i += j;
        }
        f.write_str(&parts.join(" x "))
    }
}

/// Materializes the product described by `shape`.
pub fn shape_lattice(shape: &IntervalShape) -> Result<FiniteLattice> {
    shape_lattice_with_budget(shape, DEFAULT_MATERIALIZE_BUDGET)
}

pub fn shape_lattice_with_budget(shape: &IntervalShape, budget: u128) -> Result<FiniteLattice> {
    let size = shape.size();
    if size > budget {
        return Err(Error::Budget { size, budget });
    }
    let factors = shape
        .normal_form()
        .into_iter()
        .map(eq_lattice)
        .collect::<Result<Vec<_>>>()?;
    product_with_budget(&factors, budget)
}

/// Whether an order isomorphism exists.
pub fn isomorphic(l1: &FiniteLattice, l2: &FiniteLattice) -> bool {
    find_isomorphism(l1, l2).is_some()
}

/// An order isomorphism `l1 → l2`, as the image of each element.
pub fn find_isomorphism(l1: &FiniteLattice, l2: &FiniteLattice) -> Option<Vec<usize>> {
    if l1.size != l2.size {
        return None;
    }
    let mut s1: Vec<_> = (0..l1.size).map(|a| l1.signature(a)).collect();
    let mut s2: Vec<_> = (0..l2.size).map(|a| l2.signature(a)).collect();
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return None;
    }
    let mut ji1 = l1.join_irreducibles();
    let ji2 = l2.join_irreducibles();
    if ji1.len() != ji2.len() {
        return None;
    }
    ji1.sort_by_key(|&a| (l1.height[a], l1.down[a].count(), a));
    let mut search = IsoSearch {
        l1,
        l2,
        ji1: &ji1,
        ji2: &ji2,
        assigned: Vec::with_capacity(ji1.len()),
        used: vec![false; l2.size],
    };
    search.run()
}

struct IsoSearch<'a> {
    l1: &'a FiniteLattice,
    l2: &'a FiniteLattice,
    ji1: &'a [usize],
    ji2: &'a [usize],
    assigned: Vec<usize>,
    used: Vec<bool>,
}

impl IsoSearch<'_> {
    fn run(&mut self) -> Option<Vec<usize>> {
        let depth = self.assigned.len();
        if depth == self.ji1.len() {
            return self.extend();
        }
        let a = self.ji1[depth];
        let sig = self.l1.signature(a);
        for &b in self.ji2 {
            if self.used[b] || self.l2.signature(b) != sig || !self.consistent(depth, a, b) {
                continue;
            }
            self.used[b] = true;
            self.assigned.push(b);
            if let Some(found) = self.run() {
                return Some(found);
            }
            self.assigned.pop();
            self.used[b] = false;
        }
        None
    }

    fn consistent(&self, depth: usize, a: usize, b: usize) -> bool {
        let (l1, l2) = (self.l1, self.l2);
        for k in 0..depth {
            let (a2, b2) = (self.ji1[k], self.assigned[k]);
            if l1.leq(a, a2) != l2.leq(b, b2) || l1.leq(a2, a) != l2.leq(b2, b) {
                return false;
            }
            if l1.signature(l1.join(a, a2)) != l2.signature(l2.join(b, b2)) {
                return false;
            }
        }
        // a lies below a join of two earlier ones iff its image does
        for k in 0..depth {
            for m in k + 1..depth {
                let j1 = l1.join(self.ji1[k], self.ji1[m]);
                let j2 = l2.join(self.assigned[k], self.assigned[m]);
                if l1.leq(a, j1) != l2.leq(b, j2) {
                    return false;
                }
            }
        }
        true
    }

    fn extend(&self) -> Option<Vec<usize>> {
        let (l1, l2) = (self.l1, self.l2);
        let mut map = vec![0; l1.size];
        let mut hit = vec![false; l2.size];
        for x in 0..l1.size {
            let mut img = l2.bottom;
            for (k, &j) in self.ji1.iter().enumerate() {
                if l1.leq(j, x) {
                    img = l2.join(img, self.assigned[k]);
                }
            }
            if hit[img] {
                return None;
            }
            hit[img] = true;
            map[x] = img;
        }
        for x in 0..l1.size {
            for y in 0..l1.size {
                if l1.leq(x, y) != l2.leq(map[x], map[y]) {
                    return None;
                }
            }
        }
        Some(map)
    }
}
