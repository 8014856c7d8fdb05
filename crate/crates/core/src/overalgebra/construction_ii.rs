//! Construction II: a chain of copies `B_0, B_1, ..., B_{uK}`.
//!
//! With generating pairs `(a_1,b_1)..(a_{K-1},b_{K-1})`, copy `j = ℓ + i`
//! (`ℓ` a multiple of `K`, `0 < i < K`) has left tie `a_i` and right tie
//! `b_i`; copies at multiples of `K` have both ties at `a_1`. Consecutive
//! copies share exactly one point: the right tie of `B_{j-1}` is the left tie
//! of `B_j`.
//!
//! Numbering: `B_0 = {0..n-1}`; then for `j = 1..uK` the `n-1` non-shared
//! elements of `B_j` receive `n + (j-1)(n-1) ..` in increasing base order.

use serde::{Deserialize, Serialize};

use super::{
    check_index_blocks, partition_from_groups, push_base_ops, require_congruence, EmbeddingMap,
    OverResult, OverSpec,
};
use crate::algebra::{Operation, UnaryAlgebra};
use crate::error::{Error, Result};
use crate::lattice::IntervalShape;
use crate::partition::Partition;

/// Parameters of Construction II. `blocks` partitions `{0, K, 2K, ..., uK}`
/// where `K = gen_pairs.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverIISpec {
    pub base: UnaryAlgebra,
    #[serde(rename = "pairs")]
    pub gen_pairs: Vec<(usize, usize)>,
    pub u: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl OverIISpec {
    /// `blocks = None` selects the single block `{0, K, ..., uK}`.
    pub fn new(
        base: UnaryAlgebra,
        gen_pairs: Vec<(usize, usize)>,
        u: usize,
        blocks: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let k = gen_pairs.len() + 1;
        let blocks = blocks.unwrap_or_else(|| vec![(0..=u).map(|l| l * k).collect()]);
        let spec = OverIISpec {
            base,
            gen_pairs,
            u,
            blocks,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.size();
        if self.gen_pairs.is_empty() {
            return Err(Error::InvalidSpec(
                "at least one generating pair required".into(),
            ));
        }
        if self.u == 0 {
            return Err(Error::InvalidSpec("u must be at least 1".into()));
        }
        for &(a, b) in &self.gen_pairs {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::OutOfRange {
                        element: x,
                        size: n,
                    });
                }
            }
        }
        let k = self.k();
        let expected: Vec<usize> = (0..=self.u).map(|l| l * k).collect();
        check_index_blocks(&self.blocks, &expected)
    }

    pub fn k(&self) -> usize {
        self.gen_pairs.len() + 1
    }

    /// Index of the last copy, `uK`.
    pub fn last_copy(&self) -> usize {
        self.u * self.k()
    }

    pub fn ambient_size(&self) -> usize {
        self.base.size() + self.last_copy() * self.base.size().saturating_sub(1)
    }

    /// `β = Cg(gen_pairs)` in the base algebra.
    pub fn beta(&self) -> Result<Partition> {
        self.base.cg(&self.gen_pairs)
    }

    fn block_of(&self, l: usize) -> &[usize] {
        self.blocks
            .iter()
            .find(|b| b.contains(&l))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Placement of the copies and the defining clauses of each `e_j`.
#[derive(Debug, Clone)]
pub struct ChainLayout {
    spec: OverIISpec,
    /// Left tie-point (base element) of each copy.
    pub left: Vec<usize>,
    /// Right tie-point (base element) of each copy.
    pub right: Vec<usize>,
    pub embedding: EmbeddingMap,
    members: Vec<Vec<usize>>,
}

impl ChainLayout {
    pub fn new(spec: &OverIISpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.base.size();
        let k = spec.k();
        let last = spec.last_copy();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for j in 0..=last {
            let i = j % k;
            if i == 0 {
                let (a1, _) = spec.gen_pairs[0];
                left.push(a1);
                right.push(a1);
            } else {
                let (a, b) = spec.gen_pairs[i - 1];
                left.push(a);
                right.push(b);
            }
        }
        let mut copies: Vec<Vec<usize>> = vec![(0..n).collect()];
        for j in 1..=last {
            let shared = copies[j - 1][right[j - 1]];
            let mut next = n + (j - 1) * (n - 1);
            let copy = (0..n)
                .map(|b| {
                    if b == left[j] {
                        shared
                    } else {
                        next += 1;
                        next - 1
                    }
                })
                .collect();
            copies.push(copy);
        }
        let mut tie_elements: Vec<usize> = (0..=last)
            .flat_map(|j| [copies[j][left[j]], copies[j][right[j]]])
            .collect();
        tie_elements.sort_unstable();
        tie_elements.dedup();
        let embedding = EmbeddingMap {
            copies,
            sub0: (0..n).collect(),
            tie_elements,
        };
        let members = embedding.membership();
        Ok(ChainLayout {
            spec: spec.clone(),
            left,
            right,
            embedding,
            members,
        })
    }

    pub fn ambient_size(&self) -> usize {
        self.members.len()
    }

    /// Values of every clause of `e_j` applicable at ambient element `x`.
    /// The map is well defined at `x` iff all values agree.
    pub fn clause_values(&self, j: usize, x: usize) -> Vec<usize> {
        let k = self.spec.k();
        let copies = &self.embedding.copies;
        let inv = |c: usize| copies[c].iter().position(|&y| y == x);
        let mut out = Vec::new();
        if j.is_multiple_of(k) {
            let block = self.spec.block_of(j);
            let mut inside = false;
            for &c in &self.members[x] {
                if block.contains(&c) {
                    inside = true;
                    if let Some(b) = inv(c) {
                        out.push(copies[j][b]);
                    }
                }
            }
            if !inside {
                out.push(copies[j][self.left[j]]);
            }
        } else {
            for &c in &self.members[x] {
                out.push(match c.cmp(&j) {
                    std::cmp::Ordering::Less => copies[j][self.left[j]],
                    std::cmp::Ordering::Equal => x,
                    std::cmp::Ordering::Greater => copies[j][self.right[j]],
                });
            }
        }
        out
    }

    /// The table of `e_j`, failing if two clauses disagree anywhere.
    pub fn e_table(&self, j: usize) -> Result<Vec<usize>> {
        (0..self.ambient_size())
            .map(|x| {
                let mut values = self.clause_values(j, x);
                values.dedup();
                if values.len() == 1 {
                    Ok(values[0])
                } else {
                    values.sort_unstable();
                    values.dedup();
                    Err(Error::IllDefined {
                        symbol: format!("e{j}"),
                        element: x,
                        values,
                    })
                }
            })
            .collect()
    }
}

pub fn build_ii(spec: &OverIISpec) -> Result<OverResult> {
    let layout = ChainLayout::new(spec)?;
    let last = spec.last_copy();
    let size = layout.ambient_size();
    let e: Vec<Vec<usize>> = (0..=last)
        .map(|j| layout.e_table(j))
        .collect::<Result<_>>()?;

    let mut ops = Vec::new();
    push_base_ops(&spec.base, &e[0], &mut ops);
    for (i, ei) in e.iter().enumerate() {
        let inv = layout.embedding.inverse(i);
        let table = ei
            .iter()
            .map(|&y| inv[y].expect("e_i maps into B_i"))
            .collect();
        ops.push(Operation {
            symbol: format!("q_{i}_0"),
            table,
        });
    }
    for j in 1..=last {
        let copy = &layout.embedding.copies[j];
        ops.push(Operation {
            symbol: format!("q_0_{j}"),
            table: e[0].iter().map(|&b| copy[b]).collect(),
        });
    }

    let name = format!("{}-over-II", spec.base.name());
    let ambient = UnaryAlgebra::new(name, size, ops)?;
    Ok(OverResult {
        ambient,
        embedding: layout.embedding,
        spec: OverSpec::II(spec.clone()),
    })
}

fn check_beta(spec: &OverIISpec, beta: &Partition) -> Result<()> {
    require_congruence(&spec.base, beta)?;
    if let Some(&(a, b)) = spec.gen_pairs.iter().find(|&&(a, b)| !beta.related(a, b)) {
        return Err(Error::InvalidSpec(format!(
            "congruence {beta} does not contain generating pair ({a},{b})"
        )));
    }
    Ok(())
}

fn star_groups(layout: &ChainLayout, beta: &Partition) -> Vec<Vec<usize>> {
    let classes = beta.blocks();
    let emb = &layout.embedding;
    let mut groups = Vec::new();
    for j in 0..emb.copies.len() {
        for class in &classes {
            groups.push(emb.class_image(j, class));
        }
    }
    let mut ties = Vec::new();
    for j in 0..emb.copies.len() {
        debug_assert!(beta.related(layout.left[j], layout.right[j]));
        ties.extend(emb.class_image(j, &beta.block_of(layout.left[j])));
    }
    groups.push(ties);
    groups
}

/// Closed-form least congruence restricting to `beta`, for `beta` above the
/// generated congruence.
pub fn formula_star_ii(spec: &OverIISpec, beta: &Partition) -> Result<Partition> {
    let layout = ChainLayout::new(spec)?;
    check_beta(spec, beta)?;
    Ok(partition_from_groups(
        layout.ambient_size(),
        &star_groups(&layout, beta),
    ))
}

/// Closed-form greatest congruence restricting to `beta`, for `beta` above
/// the generated congruence.
pub fn formula_tilde_ii(spec: &OverIISpec, beta: &Partition) -> Result<Partition> {
    let layout = ChainLayout::new(spec)?;
    check_beta(spec, beta)?;
    let mut groups = star_groups(&layout, beta);
    for block in &spec.blocks {
        for class in beta.blocks() {
            groups.push(
                block
                    .iter()
                    .flat_map(|&l| layout.embedding.class_image(l, &class))
                    .collect(),
            );
        }
    }
    Ok(partition_from_groups(layout.ambient_size(), &groups))
}

/// Predicted fiber shape over `theta`: `∏_n Eq(|𝒯_n|)^{r-1}` when
/// `β ≤ theta < 1` (`r` classes), trivial otherwise.
pub fn predicted_shape_ii(spec: &OverIISpec, theta: &Partition) -> Result<IntervalShape> {
    spec.validate()?;
    require_congruence(&spec.base, theta)?;
    let beta = spec.beta()?;
    if !beta.leq(theta)? || theta.is_top() {
        return Ok(IntervalShape::trivial());
    }
    let r = theta.num_blocks();
    Ok(IntervalShape::new(
        spec.blocks.iter().map(|b| (b.len(), r - 1)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> UnaryAlgebra {
        UnaryAlgebra::from_permutations(6, &[vec![1, 2, 0, 4, 5, 3], vec![3, 5, 4, 0, 2, 1]])
            .unwrap()
    }

    fn fig8() -> OverIISpec {
        OverIISpec::new(s3(), vec![(0, 3)], 1, None).unwrap()
    }

    #[test]
    fn layout_and_size() {
        let layout = ChainLayout::new(&fig8()).unwrap();
        assert_eq!(layout.ambient_size(), 16);
        let c = &layout.embedding.copies;
        assert_eq!(c[1], vec![0, 6, 7, 8, 9, 10]);
        assert_eq!(c[2], vec![8, 11, 12, 13, 14, 15]);
        assert_eq!(layout.embedding.tie_elements, vec![0, 8]);
    }

    #[test]
    fn ops_are_well_defined_and_named() {
        let r = build_ii(&fig8()).unwrap();
        let symbols: Vec<&str> = r.ambient.ops().iter().map(|o| o.symbol.as_str()).collect();
        assert_eq!(
            symbols,
            ["g0e0", "g1e0", "q_0_0", "q_1_0", "q_2_0", "q_0_1", "q_0_2"]
        );
        let q00 = &r.ambient.op("q_0_0").unwrap().table;
        for x in 0..16 {
            assert_eq!(q00[q00[x]], q00[x]);
        }
        assert_eq!(&q00[..6], &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn clauses_agree_at_shared_points() {
        let layout = ChainLayout::new(&fig8()).unwrap();
        for j in 0..=2 {
            for &x in &layout.embedding.tie_elements {
                let mut v = layout.clause_values(j, x);
                v.dedup();
                assert_eq!(v.len(), 1, "e{j} at {x}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(OverIISpec::new(s3(), vec![], 1, None).is_err());
        assert!(OverIISpec::new(s3(), vec![(0, 3)], 0, None).is_err());
        assert!(OverIISpec::new(s3(), vec![(0, 6)], 1, None).is_err());
        assert!(OverIISpec::new(s3(), vec![(0, 3)], 1, Some(vec![vec![0, 1]])).is_err());
        assert!(OverIISpec::new(s3(), vec![(0, 3)], 2, Some(vec![vec![0, 4], vec![2]])).is_ok());
    }

    #[test]
    fn shapes() {
        let spec = fig8();
        let beta: Partition = "|0,3|1,4|2,5|".parse().unwrap();
        assert_eq!(
            predicted_shape_ii(&spec, &beta).unwrap().normal_form(),
            vec![2, 2]
        );
        assert!(predicted_shape_ii(&spec, &Partition::top(6))
            .unwrap()
            .is_trivial());
        assert!(predicted_shape_ii(&spec, &Partition::bottom(6))
            .unwrap()
            .is_trivial());
        assert!(formula_star_ii(&spec, &Partition::bottom(6)).is_err());
        assert_eq!(
            formula_star_ii(&spec, &Partition::top(6)).unwrap(),
            Partition::top(16)
        );
        assert_eq!(
            formula_tilde_ii(&spec, &Partition::top(6)).unwrap(),
            Partition::top(16)
        );
    }
}
