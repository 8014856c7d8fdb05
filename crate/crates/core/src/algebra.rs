//! Finite unary algebras and their congruences.
//!
//! Congruence generation is a union-find fixpoint: whenever two classes are
//! merged through a pair `(x, y)`, every image pair `(f(x), f(y))` is queued.
//! Merging along these spanning pairs is enough, because applying a unary
//! map to a chain of related pairs gives a chain of image pairs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::FiniteLattice;
use crate::partition::{Partition, UnionFind};

/// A named total unary operation on `{0..n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub symbol: String,
    pub table: Vec<usize>,
}

/// A finite unary algebra on the universe `{0..n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraJson", into = "AlgebraJson")]
pub struct UnaryAlgebra {
    name: String,
    size: usize,
    ops: Vec<Operation>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    #[serde(default)]
    name: String,
    size: usize,
    #[serde(default)]
    operations: Vec<Operation>,
}

impl TryFrom<AlgebraJson> for UnaryAlgebra {
    type Error = Error;

    fn try_from(js: AlgebraJson) -> Result<Self> {
        UnaryAlgebra::new(js.name, js.size, js.operations)
    }
}

impl From<UnaryAlgebra> for AlgebraJson {
    fn from(a: UnaryAlgebra) -> Self {
        AlgebraJson {
            name: a.name,
            size: a.size,
            operations: a.ops,
        }
    }
}

impl UnaryAlgebra {
    pub fn new(name: impl Into<String>, size: usize, ops: Vec<Operation>) -> Result<Self> {
        let mut seen = HashSet::new();
        for op in &ops {
            if !seen.insert(op.symbol.as_str()) {
                return Err(Error::InvalidAlgebra(format!(
                    "duplicate symbol `{}`",
                    op.symbol
                )));
            }
            if op.table.len() != size {
                return Err(Error::InvalidAlgebra(format!(
                    "table of `{}` has length {}, expected {size}",
                    op.symbol,
                    op.table.len()
                )));
            }
            if let Some(&bad) = op.table.iter().find(|&&v| v >= size) {
                return Err(Error::OutOfRange { element: bad, size });
            }
        }
        Ok(UnaryAlgebra {
            name: name.into(),
            size,
            ops,
        })
    }

    /// G-set from bijective tables; operations are named `g0, g1, ...`.
    pub fn from_permutations(n: usize, perms: &[Vec<usize>]) -> Result<Self> {
        let mut ops = Vec::with_capacity(perms.len());
        for (i, perm) in perms.iter().enumerate() {
            if perm.len() != n {
                return Err(Error::NotBijective(i));
            }
            let mut hit = vec![false; n];
            for &v in perm {
                if v >= n || hit[v] {
                    return Err(Error::NotBijective(i));
                }
                hit[v] = true;
            }
            ops.push(Operation {
                symbol: format!("g{i}"),
                table: perm.clone(),
            });
        }
        UnaryAlgebra::new("gset", n, ops)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op(&self, symbol: &str) -> Result<&Operation> {
        self.ops
            .iter()
            .find(|o| o.symbol == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    fn check_partition(&self, p: &Partition) -> Result<()> {
        if p.len() != self.size {
            return Err(Error::SizeMismatch {
                left: p.len(),
                right: self.size,
            });
        }
        Ok(())
    }

    fn check_pairs(&self, pairs: &[(usize, usize)]) -> Result<()> {
        for &(x, y) in pairs {
            for e in [x, y] {
                if e >= self.size {
                    return Err(Error::OutOfRange {
                        element: e,
                        size: self.size,
                    });
                }
            }
        }
        Ok(())
    }

    /// Whether every operation maps related pairs to related pairs.
    pub fn respects(&self, p: &Partition) -> Result<bool> {
        self.check_partition(p)?;
        Ok(self.respects_unchecked(p))
    }

    pub(crate) fn respects_unchecked(&self, p: &Partition) -> bool {
        // enough to test each element against its block leader
        self.ops
            .iter()
            .all(|op| (0..self.size).all(|x| p.related(op.table[x], op.table[p.class_of(x)])))
    }

    /// Least congruence containing `pairs`.
    pub fn cg(&self, pairs: &[(usize, usize)]) -> Result<Partition> {
        self.check_pairs(pairs)?;
        Ok(self.cg_from(UnionFind::new(self.size), pairs.iter().copied()))
    }

    /// Least congruence above `p`.
    pub fn cg_partition(&self, p: &Partition) -> Result<Partition> {
        self.check_partition(p)?;
        let pairs = p.kernel().iter().enumerate().map(|(x, &k)| (x, k));
        Ok(self.cg_from(UnionFind::new(self.size), pairs))
    }

    fn cg_from(
        &self,
        mut uf: UnionFind,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Partition {
        let mut queue: VecDeque<(usize, usize)> = pairs.into_iter().collect();
        while let Some((x, y)) = queue.pop_front() {
            if uf.union(x, y) {
                for op in &self.ops {
                    let (fx, fy) = (op.table[x], op.table[y]);
                    if fx != fy {
                        queue.push_back((fx, fy));
                    }
                }
            }
        }
        uf.into_partition()
    }

    /// Full congruence lattice.
    pub fn con(&self) -> ConLattice {
        self.con_bounded(usize::MAX)
            .expect("unbounded congruence computation cannot exceed its budget")
    }

    /// Like [`con`](Self::con), failing once more than `budget` congruences
    /// have been found.
    pub fn con_bounded(&self, budget: usize) -> Result<ConLattice> {
        let n = self.size;
        let mut principals: Vec<Partition> = Vec::new();
        let mut seen_principal: HashSet<Partition> = HashSet::new();
        for y in 0..n {
            for x in 0..y {
                let p = self.cg_from(UnionFind::new(n), [(x, y)]);
                if seen_principal.insert(p.clone()) {
                    principals.push(p);
                }
            }
        }

        // FIFO join closure: every congruence is a join of principal ones, so
        // joining each discovered element with each principal congruence
        // reaches the whole lattice.
        let bottom = Partition::bottom(n);
        let mut elements: Vec<Partition> = vec![bottom.clone()];
        let mut index: HashSet<Partition> = HashSet::from([bottom]);
        let mut cursor = 0;
        while cursor < elements.len() {
            let current = elements[cursor].clone();
            cursor += 1;
            for p in &principals {
                if p.leq_unchecked(&current) {
                    continue;
                }
                let j = current.join(p).expect("same universe");
                if index.insert(j.clone()) {
                    elements.push(j);
                    if elements.len() > budget {
                        return Err(Error::Budget {
                            size: elements.len() as u128,
                            budget: budget as u128,
                        });
                    }
                }
            }
        }
        Ok(ConLattice::from_elements(self.clone(), elements))
    }

    /// Closure of the operations (and the identity) under composition.
    pub fn monoid1(&self) -> Monoid1 {
        let n = self.size;
        let identity: Vec<usize> = (0..n).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::from([identity.clone()]);
        let mut maps = vec![identity];
        let mut cursor = 0;
        while cursor < maps.len() {
            for op in &self.ops {
                // op ∘ maps[cursor]
                let composed: Vec<usize> = maps[cursor].iter().map(|&v| op.table[v]).collect();
                if seen.insert(composed.clone()) {
                    maps.push(composed);
                }
            }
            cursor += 1;
        }
        Monoid1 { maps }
    }

    /// Checks that `symbol` names an idempotent operation whose image is
    /// exactly `sub`, returning its table.
    pub fn retraction(&self, symbol: &str, sub: &[usize]) -> Result<&[usize]> {
        let e = &self.op(symbol)?.table;
        if (0..self.size).any(|x| e[e[x]] != e[x]) {
            return Err(Error::NotIdempotent(symbol.to_string()));
        }
        let mut image: Vec<usize> = e.clone();
        image.sort_unstable();
        image.dedup();
        if image != sub {
            return Err(Error::ImageMismatch {
                symbol: symbol.to_string(),
                image,
                expected: sub.to_vec(),
            });
        }
        Ok(e)
    }

    /// `β* = Cg(β)`: the congruence generated by `beta`, given on the
    /// re-indexed subset `sub`.
    pub fn star_of(&self, sub: &[usize], beta: &Partition) -> Result<Partition> {
        check_sub(self.size, sub, beta)?;
        let pairs: Vec<(usize, usize)> = beta
            .kernel()
            .iter()
            .enumerate()
            .map(|(i, &k)| (sub[i], sub[k]))
            .collect();
        self.cg(&pairs)
    }

    /// `β̂`: all pairs `(x, y)` with `(e f x, e f y) ∈ β` for every unary
    /// polynomial `f`. Constant polynomials contribute diagonal pairs only,
    /// so `f` ranges over [`monoid1`](Self::monoid1).
    pub fn hat_of(&self, sub: &[usize], e_symbol: &str, beta: &Partition) -> Result<Partition> {
        Residuation::new(self, sub, e_symbol)?.hat(beta)
    }

    /// Reduct on `sub = e(A)` whose operations are the distinct maps
    /// `(e f)|_sub` for `f` in the polynomial monoid.
    pub fn subreduct(&self, sub: &[usize], e_symbol: &str) -> Result<UnaryAlgebra> {
        Residuation::new(self, sub, e_symbol)?.subreduct()
    }
}

fn check_sub(size: usize, sub: &[usize], beta: &Partition) -> Result<()> {
    for (i, &s) in sub.iter().enumerate() {
        if s >= size {
            return Err(Error::InvalidSubset(format!("element {s} out of range")));
        }
        if i > 0 && sub[i - 1] >= s {
            return Err(Error::InvalidSubset(
                "subset must be strictly increasing".into(),
            ));
        }
    }
    if beta.len() != sub.len() {
        return Err(Error::SizeMismatch {
            left: beta.len(),
            right: sub.len(),
        });
    }
    Ok(())
}

impl fmt::Display for UnaryAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (size {})", self.name, self.size)?;
        for op in &self.ops {
            let row: Vec<String> = op.table.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}: {}", op.symbol, row.join(" "))?;
        }
        Ok(())
    }
}

/// Transformation monoid generated by an algebra's operations.
#[derive(Debug, Clone)]
pub struct Monoid1 {
    maps: Vec<Vec<usize>>,
}

impl Monoid1 {
    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn contains_identity(&self) -> bool {
        self.maps
            .iter()
            .any(|m| m.iter().enumerate().all(|(x, &v)| x == v))
    }

    /// One closure pass produces nothing new.
    pub fn is_closed(&self) -> bool {
        let set: HashSet<&Vec<usize>> = self.maps.iter().collect();
        self.maps.iter().all(|f| {
            self.maps.iter().all(|g| {
                let fg: Vec<usize> = g.iter().map(|&v| f[v]).collect();
                set.contains(&fg)
            })
        })
    }
}

/// Precomputed data for the `*` and `^` maps between `Con A` and the
/// congruences of the subreduct on `e(A)`.
#[derive(Debug, Clone)]
pub struct Residuation<'a> {
    ambient: &'a UnaryAlgebra,
    sub: Vec<usize>,
    position: Vec<Option<usize>>,
    retraction: Vec<usize>,
    monoid: Monoid1,
}

impl<'a> Residuation<'a> {
    pub fn new(ambient: &'a UnaryAlgebra, sub: &[usize], e_symbol: &str) -> Result<Self> {
        check_sub(ambient.size, sub, &Partition::bottom(sub.len()))?;
        let retraction = ambient.retraction(e_symbol, sub)?.to_vec();
        let mut position = vec![None; ambient.size];
        for (i, &s) in sub.iter().enumerate() {
            position[s] = Some(i);
        }
        Ok(Residuation {
            ambient,
            sub: sub.to_vec(),
            position,
            retraction,
            monoid: ambient.monoid1(),
        })
    }

    pub fn sub(&self) -> &[usize] {
        &self.sub
    }

    pub fn monoid(&self) -> &Monoid1 {
        &self.monoid
    }

    pub fn star(&self, beta: &Partition) -> Result<Partition> {
        self.ambient.star_of(&self.sub, beta)
    }

    pub fn hat(&self, beta: &Partition) -> Result<Partition> {
        check_sub(self.ambient.size, &self.sub, beta)?;
        let n = self.ambient.size;
        let class_in_sub = |y: usize| -> usize {
            let i = self.position[y].expect("retraction lands in sub");
            beta.class_of(i)
        };
        // intersect the kernels of x ↦ [e f x]_β over the monoid
        let mut current = Partition::top(n);
        for f in self.monoid.maps() {
            let labels: Vec<(usize, usize)> = (0..n)
                .map(|x| (current.class_of(x), class_in_sub(self.retraction[f[x]])))
                .collect();
            current = Partition::from_labels(&labels);
            if current.is_bottom() {
                break;
            }
        }
        Ok(current)
    }

    pub fn restrict(&self, alpha: &Partition) -> Result<Partition> {
        alpha.restrict(&self.sub)
    }

    pub fn subreduct(&self) -> Result<UnaryAlgebra> {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut ops = Vec::new();
        for f in self.monoid.maps() {
            let table: Vec<usize> = self
                .sub
                .iter()
                .map(|&s| self.position[self.retraction[f[s]]].expect("retraction lands in sub"))
                .collect();
            if seen.insert(table.clone()) {
                ops.push(Operation {
                    symbol: format!("p{}", ops.len()),
                    table,
                });
            }
        }
        UnaryAlgebra::new(format!("{}|sub", self.ambient.name), self.sub.len(), ops)
    }
}

/// All congruences of an algebra, ordered by block count (descending) and
/// then bar notation.
#[derive(Debug, Clone)]
pub struct ConLattice {
    algebra: UnaryAlgebra,
    elements: Vec<Partition>,
    index: HashMap<Partition, usize>,
    covers: Vec<Vec<usize>>,
}

impl ConLattice {
    fn from_elements(algebra: UnaryAlgebra, mut elements: Vec<Partition>) -> Self {
        let mut keyed: Vec<(usize, String, Partition)> = elements
            .drain(..)
            .map(|p| (p.num_blocks(), p.to_string(), p))
            .collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let elements: Vec<Partition> = keyed.into_iter().map(|(_, _, p)| p).collect();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let covers = upper_covers(&elements);
        ConLattice {
            algebra,
            elements,
            index,
            covers,
        }
    }

    pub fn algebra(&self) -> &UnaryAlgebra {
        &self.algebra
    }

    pub fn elements(&self) -> &[Partition] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &Partition) -> bool {
        self.index.contains_key(p)
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.elements[i].leq_unchecked(&self.elements[j])
    }

    /// Upper covers of each element, by index.
    pub fn covers(&self) -> &[Vec<usize>] {
        &self.covers
    }

    pub fn bottom(&self) -> &Partition {
        &self.elements[0]
    }

    pub fn top(&self) -> &Partition {
        self.elements
            .last()
            .expect("a congruence lattice is never empty")
    }

    /// Elements `x` with `lo ≤ x ≤ hi`.
    pub fn filter_between(&self, lo: &Partition, hi: &Partition) -> Vec<Partition> {
        self.elements
            .iter()
            .filter(|x| lo.leq_unchecked(x) && x.leq_unchecked(hi))
            .cloned()
            .collect()
    }

    /// Abstract lattice labelled by bar notation.
    pub fn to_lattice(&self) -> FiniteLattice {
        FiniteLattice::from_partitions(&self.elements)
    }
}

/// Upper covers of a family of partitions under refinement.
pub(crate) fn upper_covers(elements: &[Partition]) -> Vec<Vec<usize>> {
    let n = elements.len();
    let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && elements[i].leq_unchecked(&elements[j]) {
                above[i].push(j);
            }
        }
    }
    (0..n)
        .map(|i| {
            above[i]
                .iter()
                .copied()
                .filter(|&j| {
                    !above[i]
                        .iter()
                        .any(|&k| k != j && elements[k].leq_unchecked(&elements[j]))
                })
                .collect()
        })
        .collect()
}
