//! Construction I: copies `B_1..B_K` each meeting `B` at a tie-point.
//!
//! Element numbering: the fresh elements of `B_i` are
//! `n + (i-1)(n-1) + rank(b)`, where `rank(b)` counts the base elements below
//! `b` other than `t_i`. This matches the universes printed for the
//! right-regular `S_3`-set, e.g. tie-points `0, 2` give
//! `B_1 = {0,6,7,8,9,10}` and `B_2 = {11,12,2,13,14,15}`.

use serde::{Deserialize, Serialize};

use super::{
    check_index_blocks, partition_from_groups, push_base_ops, require_congruence, EmbeddingMap,
    OverResult, OverSpec,
};
use crate::algebra::{Operation, UnaryAlgebra};
use crate::error::{Error, Result};
use crate::lattice::IntervalShape;
use crate::partition::Partition;

/// Parameters of Construction I. `blocks` partitions the 1-based tie-point
/// indices `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverISpec {
    pub base: UnaryAlgebra,
    pub tiepoints: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

impl OverISpec {
    /// `blocks = None` selects the single block `{1..K}`.
    pub fn new(
        base: UnaryAlgebra,
        tiepoints: Vec<usize>,
        blocks: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let k = tiepoints.len();
        let blocks = blocks.unwrap_or_else(|| {
            if k == 0 {
                Vec::new()
            } else {
                vec![(1..=k).collect()]
            }
        });
        let spec = OverISpec {
            base,
            tiepoints,
            blocks,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.size();
        if let Some(&t) = self.tiepoints.iter().find(|&&t| t >= n) {
            return Err(Error::OutOfRange {
                element: t,
                size: n,
            });
        }
        let indices: Vec<usize> = (1..=self.k()).collect();
        check_index_blocks(&self.blocks, &indices)
    }

    pub fn k(&self) -> usize {
        self.tiepoints.len()
    }

    pub fn ambient_size(&self) -> usize {
        let n = self.base.size();
        if n == 0 {
            0
        } else {
            n + self.k() * (n - 1)
        }
    }

    /// The standard embedding, optionally twisted by permutations `sigma[i-1]`
    /// of the base fixing `t_i` (so `π_i = std_i ∘ σ_i`).
    fn embedding(&self, sigmas: Option<&[Vec<usize>]>) -> Result<EmbeddingMap> {
        let n = self.base.size();
        let mut copies: Vec<Vec<usize>> = vec![(0..n).collect()];
        for (idx, &t) in self.tiepoints.iter().enumerate() {
            let i = idx + 1;
            let offset = n + (i - 1) * (n.saturating_sub(1));
            let std: Vec<usize> = (0..n)
                .map(|b| match b.cmp(&t) {
                    std::cmp::Ordering::Equal => t,
                    std::cmp::Ordering::Less => offset + b,
                    std::cmp::Ordering::Greater => offset + b - 1,
                })
                .collect();
            let copy = match sigmas {
                None => std,
                Some(s) => {
                    let sigma = &s[idx];
                    let mut hit = vec![false; n];
                    for &v in sigma {
                        if v >= n || hit[v] {
                            return Err(Error::NotBijective(idx));
                        }
                        hit[v] = true;
                    }
                    if sigma.len() != n || sigma[t] != t {
                        return Err(Error::InvalidSpec(format!(
                            "bijection for copy {i} must fix tie-point {t}"
                        )));
                    }
                    sigma.iter().map(|&b| std[b]).collect()
                }
            };
            copies.push(copy);
        }
        let mut tie_elements = self.tiepoints.clone();
        tie_elements.sort_unstable();
        tie_elements.dedup();
        Ok(EmbeddingMap {
            copies,
            sub0: (0..n).collect(),
            tie_elements,
        })
    }

    /// `I_r`: indices `i` (1-based) with `t_i` in `class`.
    fn tie_indices_in(&self, beta: &Partition, class_leader: usize) -> Vec<usize> {
        self.tiepoints
            .iter()
            .enumerate()
            .filter(|&(_, &t)| beta.class_of(t) == class_leader)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

pub fn build_i(spec: &OverISpec) -> Result<OverResult> {
    build_in(spec, None)
}

/// Construction I with non-standard bijections `π_i`, given as permutations
/// `sigmas[i-1]` of the base universe that fix `t_i`.
pub fn build_i_with_bijections(spec: &OverISpec, sigmas: &[Vec<usize>]) -> Result<OverResult> {
    if sigmas.len() != spec.k() {
        return Err(Error::InvalidSpec(format!(
            "expected {} bijections, got {}",
            spec.k(),
            sigmas.len()
        )));
    }
    build_in(spec, Some(sigmas))
}

fn build_in(spec: &OverISpec, sigmas: Option<&[Vec<usize>]>) -> Result<OverResult> {
    spec.validate()?;
    let embedding = spec.embedding(sigmas)?;
    let size = spec.ambient_size();
    let members = embedding.membership();

    // e0(x) = π_ι(x)^{-1}(x), ι(x) the smallest copy containing x
    let mut e0 = vec![usize::MAX; size];
    for copy in &embedding.copies {
        for (b, &x) in copy.iter().enumerate() {
            if e0[x] == usize::MAX {
                e0[x] = b;
            }
        }
    }

    let mut ops = Vec::new();
    for (k, copy) in embedding.copies.iter().enumerate() {
        ops.push(Operation {
            symbol: format!("e{k}"),
            table: e0.iter().map(|&b| copy[b]).collect(),
        });
    }
    for (n_idx, block) in spec.blocks.iter().enumerate() {
        let mut table = Vec::with_capacity(size);
        for (x, copies_of_x) in members.iter().enumerate() {
            let hits: Vec<usize> = copies_of_x
                .iter()
                .filter(|&&i| i > 0 && block.contains(&i))
                .map(|&i| spec.tiepoints[i - 1])
                .collect();
            match hits.first() {
                None => table.push(x),
                Some(&t) => {
                    if hits.iter().any(|&h| h != t) {
                        return Err(Error::IllDefined {
                            symbol: format!("s{}", n_idx + 1),
                            element: x,
                            values: hits,
                        });
                    }
                    table.push(t);
                }
            }
        }
        ops.push(Operation {
            symbol: format!("s{}", n_idx + 1),
            table,
        });
    }
    push_base_ops(&spec.base, &e0, &mut ops);

    let name = format!("{}-over-I", spec.base.name());
    let ambient = UnaryAlgebra::new(name, size, ops)?;
    Ok(OverResult {
        ambient,
        embedding,
        spec: OverSpec::I(spec.clone()),
    })
}

fn star_groups(spec: &OverISpec, embedding: &EmbeddingMap, beta: &Partition) -> Vec<Vec<usize>> {
    let classes = beta.blocks();
    let mut groups = Vec::new();
    // β^k for k = 0..K
    for k in 0..=spec.k() {
        for class in &classes {
            groups.push(embedding.class_image(k, class));
        }
    }
    // (C_r ∪ ⋃_{i∈I_r} C_r^i)²
    for class in &classes {
        let mut g = class.clone();
        for i in spec.tie_indices_in(beta, class[0]) {
            g.extend(embedding.class_image(i, class));
        }
        groups.push(g);
    }
    groups
}

/// Closed-form least congruence of the ambient algebra restricting to `beta`.
pub fn formula_star_i(spec: &OverISpec, beta: &Partition) -> Result<Partition> {
    spec.validate()?;
    require_congruence(&spec.base, beta)?;
    let embedding = spec.embedding(None)?;
    Ok(partition_from_groups(
        spec.ambient_size(),
        &star_groups(spec, &embedding, beta),
    ))
}

/// Closed-form greatest congruence of the ambient algebra restricting to `beta`.
pub fn formula_tilde_i(spec: &OverISpec, beta: &Partition) -> Result<Partition> {
    spec.validate()?;
    require_congruence(&spec.base, beta)?;
    let embedding = spec.embedding(None)?;
    let classes = beta.blocks();
    let mut groups = star_groups(spec, &embedding, beta);
    for block in &spec.blocks {
        for class_r in &classes {
            let joined: Vec<usize> = spec
                .tie_indices_in(beta, class_r[0])
                .into_iter()
                .filter(|i| block.contains(i))
                .collect();
            for class_l in classes.iter().filter(|c| c[0] != class_r[0]) {
                let g: Vec<usize> = joined
                    .iter()
                    .flat_map(|&i| embedding.class_image(i, class_l))
                    .collect();
                groups.push(g);
            }
        }
    }
    Ok(partition_from_groups(spec.ambient_size(), &groups))
}

/// `∏_r ∏_n Eq(|𝒯_n ∩ I_r|)^{m-1}` for a base congruence with `m` classes.
pub fn predicted_shape_i(spec: &OverISpec, beta: &Partition) -> Result<IntervalShape> {
    spec.validate()?;
    require_congruence(&spec.base, beta)?;
    let classes = beta.blocks();
    let m = classes.len();
    let mut factors = Vec::new();
    for class in &classes {
        let ties = spec.tie_indices_in(beta, class[0]);
        for block in &spec.blocks {
            let count = ties.iter().filter(|i| block.contains(i)).count();
            factors.push((count, m.saturating_sub(1)));
        }
    }
    Ok(IntervalShape::new(factors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> UnaryAlgebra {
        UnaryAlgebra::from_permutations(6, &[vec![1, 2, 0, 4, 5, 3], vec![3, 5, 4, 0, 2, 1]])
            .unwrap()
    }

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn universe_for_ties_0_3() {
        let spec = OverISpec::new(s3(), vec![0, 3], None).unwrap();
        let r = build_i(&spec).unwrap();
        assert_eq!(r.ambient.size(), 16);
        assert_eq!(r.embedding.copies[1], vec![0, 6, 7, 8, 9, 10]);
        assert_eq!(r.embedding.copies[2], vec![11, 12, 13, 3, 14, 15]);
        assert_eq!(r.embedding.tie_elements, vec![0, 3]);
    }

    #[test]
    fn empty_tiepoints_give_the_base() {
        let spec = OverISpec::new(s3(), vec![], None).unwrap();
        let r = build_i(&spec).unwrap();
        assert_eq!(r.ambient.size(), 6);
        let symbols: Vec<&str> = r.ambient.ops().iter().map(|o| o.symbol.as_str()).collect();
        assert_eq!(symbols, ["e0", "g0e0", "g1e0"]);
        assert_eq!(r.ambient.op("e0").unwrap().table, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(r.ambient.con().elements(), s3().con().elements());
    }

    #[test]
    fn spec_validation() {
        assert!(OverISpec::new(s3(), vec![6], None).is_err());
        assert!(OverISpec::new(s3(), vec![0, 1], Some(vec![vec![1]])).is_err());
        assert!(OverISpec::new(s3(), vec![0, 1], Some(vec![vec![1], vec![1, 2]])).is_err());
        assert!(OverISpec::new(s3(), vec![0, 1], Some(vec![vec![0, 1]])).is_err());
        assert!(OverISpec::new(s3(), vec![0, 1], Some(vec![vec![2], vec![1]])).is_ok());
    }

    #[test]
    fn formulas_on_small_cases() {
        let spec = OverISpec::new(s3(), vec![0, 2], None).unwrap();
        let alpha = p("|0,1,2|3,4,5|");
        assert_eq!(
            formula_star_i(&spec, &alpha).unwrap().to_string(),
            "|0,1,2,6,7,11,12|3,4,5|8,9,10|13,14,15|"
        );
        assert_eq!(
            formula_tilde_i(&spec, &alpha).unwrap().to_string(),
            "|0,1,2,6,7,11,12|3,4,5|8,9,10,13,14,15|"
        );
        assert_eq!(
            formula_star_i(&spec, &Partition::bottom(6)).unwrap(),
            Partition::bottom(16)
        );
        assert_eq!(
            formula_tilde_i(&spec, &Partition::bottom(6)).unwrap(),
            Partition::bottom(16)
        );
        assert_eq!(
            formula_star_i(&spec, &p("|0,1|2|3|4|5|")),
            Err(Error::NotCongruence)
        );
        let shape = predicted_shape_i(&spec, &alpha).unwrap();
        assert_eq!(shape.normal_form(), vec![2]);
    }

    #[test]
    fn twisted_bijections_must_fix_ties() {
        let spec = OverISpec::new(s3(), vec![0], None).unwrap();
        assert!(build_i_with_bijections(&spec, &[vec![1, 0, 2, 3, 4, 5]]).is_err());
        let r = build_i_with_bijections(&spec, &[vec![0, 2, 1, 3, 4, 5]]).unwrap();
        assert_eq!(r.embedding.copies[1], vec![0, 7, 6, 8, 9, 10]);
    }
}
