//! Overalgebra expansions of a base unary algebra.
//!
//! Both constructions glue copies `B_1, B_2, ...` of the base universe `B`
//! onto `B = B_0` and add idempotent maps retracting the whole universe onto
//! each copy. Copy `i` is described by an injection `copies[i]` from base
//! elements to ambient elements; `copies[0]` is the identity.
//!
//! * [`build_i`]: each copy meets `B` in a single tie-point.
//! * [`build_ii`]: copies form a chain, consecutive copies sharing one point.

mod construction_i;
mod construction_ii;

use serde::{Deserialize, Serialize};

use crate::algebra::UnaryAlgebra;
use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};

pub use construction_i::{
    build_i, build_i_with_bijections, formula_star_i, formula_tilde_i, predicted_shape_i, OverISpec,
};
pub use construction_ii::{
    build_ii, formula_star_ii, formula_tilde_ii, predicted_shape_ii, ChainLayout, OverIISpec,
};

/// How each copy of the base universe sits inside the ambient universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingMap {
    /// `copies[i][b]` is the ambient index of base element `b` in copy `i`.
    pub copies: Vec<Vec<usize>>,
    /// Sorted image of the base universe, always `0..n`.
    pub sub0: Vec<usize>,
    /// Sorted ambient indices of all tie-points.
    pub tie_elements: Vec<usize>,
}

impl EmbeddingMap {
    pub fn ambient_size(&self) -> usize {
        self.copies
            .iter()
            .flatten()
            .copied()
            .max()
            .map_or(0, |m| m + 1)
    }

    /// For every ambient element, the copies containing it (ascending).
    pub fn membership(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.ambient_size()];
        for (i, copy) in self.copies.iter().enumerate() {
            for &x in copy {
                members[x].push(i);
            }
        }
        members
    }

    /// Inverse of copy `i` on its image.
    pub fn inverse(&self, i: usize) -> Vec<Option<usize>> {
        let mut inv = vec![None; self.ambient_size()];
        for (b, &x) in self.copies[i].iter().enumerate() {
            inv[x] = Some(b);
        }
        inv
    }

    /// Image of `beta`'s class `class` in copy `i`.
    pub(crate) fn class_image(&self, i: usize, class: &[usize]) -> Vec<usize> {
        class.iter().map(|&b| self.copies[i][b]).collect()
    }

    /// Human-readable universe decomposition, one copy per line.
    pub fn describe(&self) -> String {
        self.copies
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let elems: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                format!("B{i} = {{{}}}", elems.join(", "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Originating construction of an [`OverResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "construction")]
pub enum OverSpec {
    #[serde(rename = "I")]
    I(OverISpec),
    #[serde(rename = "II")]
    II(OverIISpec),
}

/// An ambient algebra together with its embedding bookkeeping.
#[derive(Debug, Clone)]
pub struct OverResult {
    pub ambient: UnaryAlgebra,
    pub embedding: EmbeddingMap,
    pub spec: OverSpec,
}

impl OverResult {
    /// Symbol of the idempotent operation whose image is `sub0`.
    pub fn retraction_symbol(&self) -> &'static str {
        match self.spec {
            OverSpec::I(_) => "e0",
            OverSpec::II(_) => "q_0_0",
        }
    }

    pub fn sub0(&self) -> &[usize] {
        &self.embedding.sub0
    }

    pub fn base(&self) -> &UnaryAlgebra {
        match &self.spec {
            OverSpec::I(s) => &s.base,
            OverSpec::II(s) => &s.base,
        }
    }
}

/// Partition of the ambient universe generated by the given ambient blocks.
pub(crate) fn partition_from_groups(n: usize, groups: &[Vec<usize>]) -> Partition {
    let mut uf = UnionFind::new(n);
    for g in groups {
        for w in g.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    uf.into_partition()
}

pub(crate) fn require_congruence(base: &UnaryAlgebra, beta: &Partition) -> Result<()> {
    if !base.respects(beta)? {
        return Err(Error::NotCongruence);
    }
    Ok(())
}

/// Appends base operations composed with `e0`, named `<symbol>e0`.
pub(crate) fn push_base_ops(
    base: &UnaryAlgebra,
    e0: &[usize],
    ops: &mut Vec<crate::algebra::Operation>,
) {
    for f in base.ops() {
        ops.push(crate::algebra::Operation {
            symbol: format!("{}e0", f.symbol),
            table: e0.iter().map(|&b| f.table[b]).collect(),
        });
    }
}

/// Checks that `blocks` partitions exactly `expected` (in any order).
pub(crate) fn check_index_blocks(blocks: &[Vec<usize>], expected: &[usize]) -> Result<()> {
    let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
    if blocks.iter().any(Vec::is_empty) {
        return Err(Error::InvalidSpec("empty block in index partition".into()));
    }
    all.sort_unstable();
    let mut want = expected.to_vec();
    want.sort_unstable();
    if all != want {
        return Err(Error::InvalidSpec(format!(
            "blocks {blocks:?} do not partition {want:?}"
        )));
    }
    Ok(())
}
