//! Verification of fibers of the restriction map `Con A → Con B`.
//!
//! Ground truth is always the full congruence lattice of the ambient algebra:
//! its elements are grouped by their restriction to the subuniverse, and every
//! closed-form prediction is compared against those groups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ConLattice, Operation, Residuation, UnaryAlgebra};
use crate::error::Result;
use crate::lattice::{
    isomorphic, shape_lattice_with_budget, FiniteLattice, IntervalShape, DEFAULT_MATERIALIZE_BUDGET,
};
use crate::overalgebra::{
    build_i, build_ii, formula_star_i, formula_star_ii, formula_tilde_i, formula_tilde_ii,
    predicted_shape_i, predicted_shape_ii, OverIISpec, OverISpec,
};
use crate::partition::Partition;

/// Limits applied while verifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Maximum number of ambient congruences to enumerate.
    pub con_budget: usize,
    /// Largest predicted shape that is materialized for an isomorphism test.
    /// Larger fibers are compared by normal form only.
    pub materialize_budget: u128,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            con_budget: 1_000_000,
            materialize_budget: DEFAULT_MATERIALIZE_BUDGET,
        }
    }
}

/// How a fiber's shape was compared with its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeCheck {
    /// No prediction was made.
    None,
    /// Explicit lattice isomorphism.
    Isomorphism,
    /// Normal forms agree; the lattice was too large to materialize.
    ShapeVerified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberReport {
    pub beta: Partition,
    pub star: Partition,
    pub hat: Partition,
    #[serde(skip)]
    pub fiber: Vec<Partition>,
    pub fiber_size: usize,
    pub predicted: Option<IntervalShape>,
    pub predicted_size: Option<u128>,
    pub shape_match: bool,
    pub shape_check: ShapeCheck,
    pub exact_match: bool,
}

/// A failed assertion with the congruence where it happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub beta: Option<Partition>,
    pub expected: Option<Partition>,
    pub actual: Option<Partition>,
    /// A pair related in exactly one of `expected` and `actual`.
    pub witness: Option<(usize, usize)>,
}

impl Failure {
    fn new(check: impl Into<String>, beta: Option<&Partition>) -> Self {
        Failure {
            check: check.into(),
            beta: beta.cloned(),
            expected: None,
            actual: None,
            witness: None,
        }
    }

    fn mismatch(check: &str, beta: &Partition, expected: &Partition, actual: &Partition) -> Self {
        Failure {
            check: check.into(),
            beta: Some(beta.clone()),
            expected: Some(expected.clone()),
            actual: Some(actual.clone()),
            witness: expected.first_difference(actual),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: String,
    pub label: String,
    pub pass: bool,
    pub base_con_size: usize,
    pub ambient_con_size: usize,
    pub epimorphism_ok: bool,
    pub lemma_ok: bool,
    pub fibers: Vec<FiberReport>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    /// Fibers with more than one element.
    pub fn nontrivial(&self) -> impl Iterator<Item = &FiberReport> {
        self.fibers.iter().filter(|f| f.fiber_size > 1)
    }

    pub fn fiber_over(&self, beta: &Partition) -> Option<&FiberReport> {
        self.fibers.iter().find(|f| &f.beta == beta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn finish(mut self) -> Self {
        self.pass = self.failures.is_empty();
        self
    }
}

/// Predictions for one fiber, supplied by a theorem.
struct Prediction {
    star: Option<Partition>,
    tilde: Option<Partition>,
    shape: IntervalShape,
    /// Whether the fiber must be the full interval of `Eq(A)`.
    eq_filter: bool,
}

/// Shared engine: fibers of `Con ambient → Con base` along `sub`, checked
/// against the residuation maps and optional per-fiber predictions.
#[allow(clippy::too_many_arguments)]
fn analyze(
    theorem: &str,
    label: String,
    ambient: &UnaryAlgebra,
    sub: &[usize],
    e_symbol: &str,
    base: &UnaryAlgebra,
    opts: &VerifyOptions,
    predict: &dyn Fn(&Partition) -> Result<Option<Prediction>>,
) -> Result<VerifyReport> {
    let con_b = base.con();
    let con_a = ambient.con_bounded(opts.con_budget)?;
    let res = Residuation::new(ambient, sub, e_symbol)?;
    let mut report = VerifyReport {
        theorem: theorem.into(),
        label,
        pass: false,
        base_con_size: con_b.len(),
        ambient_con_size: con_a.len(),
        epimorphism_ok: true,
        lemma_ok: true,
        fibers: Vec::new(),
        failures: Vec::new(),
    };

    let restrictions = restrictions_into(&con_a, &con_b, sub, &mut report)?;
    check_homomorphism(&con_a, &con_b, sub, &restrictions, &mut report)?;

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); con_b.len()];
    for (a, r) in restrictions.iter().enumerate() {
        if let Some(b) = r {
            groups[*b].push(a);
        }
    }

    for (b, members) in groups.iter().enumerate() {
        let beta = &con_b.elements()[b];
        if members.is_empty() {
            report.epimorphism_ok = false;
            report
                .failures
                .push(Failure::new("restriction not onto", Some(beta)));
            continue;
        }
        let fiber: Vec<Partition> = members
            .iter()
            .map(|&a| con_a.elements()[a].clone())
            .collect();
        let fiber_report = check_fiber(beta, fiber, &con_a, &res, opts, predict, &mut report)?;
        report.fibers.push(fiber_report);
    }
    Ok(report.finish())
}

/// Index in `con_b` of each ambient congruence's restriction.
fn restrictions_into(
    con_a: &ConLattice,
    con_b: &ConLattice,
    sub: &[usize],
    report: &mut VerifyReport,
) -> Result<Vec<Option<usize>>> {
    con_a
        .elements()
        .iter()
        .map(|alpha| {
            let r = alpha.restrict(sub)?;
            let idx = con_b.index_of(&r);
            if idx.is_none() {
                report.epimorphism_ok = false;
                let mut f = Failure::new("restriction is not a base congruence", None);
                f.actual = Some(r);
                report.failures.push(f);
            }
            Ok(idx)
        })
        .collect()
}

/// Restriction preserves all binary meets and joins.
fn check_homomorphism(
    con_a: &ConLattice,
    con_b: &ConLattice,
    sub: &[usize],
    restrictions: &[Option<usize>],
    report: &mut VerifyReport,
) -> Result<()> {
    let elems = con_a.elements();
    let base = con_b.elements();
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            let (Some(ri), Some(rj)) = (restrictions[i], restrictions[j]) else {
                continue;
            };
            let meet = elems[i].meet(&elems[j])?;
            let join = elems[i].join(&elems[j])?;
            for (name, ambient_op, expected) in [
                ("meet", &meet, base[ri].meet(&base[rj])?),
                ("join", &join, base[ri].join(&base[rj])?),
            ] {
                let got = ambient_op.restrict(sub)?;
                if got != expected {
                    report.epimorphism_ok = false;
                    report.failures.push(Failure::mismatch(
                        &format!("restriction does not preserve {name}"),
                        &expected,
                        &expected,
                        &got,
                    ));
                    return Ok(());
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn check_fiber(
    beta: &Partition,
    fiber: Vec<Partition>,
    con_a: &ConLattice,
    res: &Residuation<'_>,
    opts: &VerifyOptions,
    predict: &dyn Fn(&Partition) -> Result<Option<Prediction>>,
    report: &mut VerifyReport,
) -> Result<FiberReport> {
    let star = res.star(beta)?;
    let hat = res.hat(beta)?;
    let min = fiber
        .iter()
        .find(|a| fiber.iter().all(|b| a.leq_unchecked(b)))
        .cloned();
    let max = fiber
        .iter()
        .find(|a| fiber.iter().all(|b| b.leq_unchecked(a)))
        .cloned();

    // residuation: fiber = [star, hat] in Con A
    match (&min, &max) {
        (Some(lo), Some(hi)) => {
            if lo != &star {
                report.lemma_ok = false;
                report.failures.push(Failure::mismatch(
                    "star is the least fiber element",
                    beta,
                    lo,
                    &star,
                ));
            }
            if hi != &hat {
                report.lemma_ok = false;
                report.failures.push(Failure::mismatch(
                    "hat is the greatest fiber element",
                    beta,
                    hi,
                    &hat,
                ));
            }
        }
        _ => {
            report.lemma_ok = false;
            report.failures.push(Failure::new(
                "fiber has no least or greatest element",
                Some(beta),
            ));
        }
    }
    if star.leq_unchecked(&hat) && con_a.filter_between(&star, &hat).len() != fiber.len() {
        report.lemma_ok = false;
        report.failures.push(Failure::new(
            "fiber differs from the interval [star, hat]",
            Some(beta),
        ));
    }

    let mut out = FiberReport {
        beta: beta.clone(),
        star: star.clone(),
        hat: hat.clone(),
        fiber_size: fiber.len(),
        fiber: Vec::new(),
        predicted: None,
        predicted_size: None,
        shape_match: true,
        shape_check: ShapeCheck::None,
        exact_match: true,
    };

    if let Some(pred) = predict(beta)? {
        if let Some(s) = &pred.star {
            if s != &star {
                out.exact_match = false;
                report.failures.push(Failure::mismatch(
                    "formula for the least element",
                    beta,
                    &star,
                    s,
                ));
            }
        }
        if let Some(t) = &pred.tilde {
            if t != &hat {
                out.exact_match = false;
                report.failures.push(Failure::mismatch(
                    "formula for the greatest element",
                    beta,
                    &hat,
                    t,
                ));
            }
        }
        if pred.eq_filter && star.leq_unchecked(&hat) {
            let full = IntervalShape::between(&star, &hat)?.size();
            if full != fiber.len() as u128 {
                report.failures.push(Failure::new(
                    "fiber is not every equivalence between its endpoints",
                    Some(beta),
                ));
            }
        }
        let (matched, how) = compare_shape(&fiber, &star, &hat, &pred.shape, opts)?;
        if !matched {
            report.failures.push(Failure::new(
                format!("fiber shape is not {}", pred.shape),
                Some(beta),
            ));
        }
        out.shape_match = matched;
        out.shape_check = how;
        out.predicted_size = Some(pred.shape.size());
        out.predicted = Some(pred.shape);
    }
    out.fiber = fiber;
    Ok(out)
}

fn compare_shape(
    fiber: &[Partition],
    star: &Partition,
    hat: &Partition,
    shape: &IntervalShape,
    opts: &VerifyOptions,
) -> Result<(bool, ShapeCheck)> {
    if shape.size() != fiber.len() as u128 {
        return Ok((false, ShapeCheck::Isomorphism));
    }
    if (fiber.len() as u128) <= opts.materialize_budget {
        let predicted = shape_lattice_with_budget(shape, opts.materialize_budget)?;
        let actual = FiniteLattice::from_partitions(fiber);
        return Ok((isomorphic(&actual, &predicted), ShapeCheck::Isomorphism));
    }
    let nf = star
        .leq_unchecked(hat)
        .then(|| IntervalShape::between(star, hat))
        .transpose()?
        .map(|s| s.normal_form());
    Ok((nf == Some(shape.normal_form()), ShapeCheck::ShapeVerified))
}

/// Residuation check for an arbitrary algebra with idempotent `e_symbol`
/// onto `sub`. The base is the induced algebra on `sub`.
pub fn check_residuation(
    ambient: &UnaryAlgebra,
    sub: &[usize],
    e_symbol: &str,
) -> Result<VerifyReport> {
    check_residuation_with(ambient, sub, e_symbol, &VerifyOptions::default())
}

pub fn check_residuation_with(
    ambient: &UnaryAlgebra,
    sub: &[usize],
    e_symbol: &str,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let base = ambient.subreduct(sub, e_symbol)?;
    analyze(
        "lemma",
        ambient.name().to_string(),
        ambient,
        sub,
        e_symbol,
        &base,
        opts,
        &|_| Ok(None),
    )
}

pub fn check_thm1(spec: &OverISpec) -> Result<VerifyReport> {
    check_thm1_with(spec, &VerifyOptions::default())
}

pub fn check_thm1_with(spec: &OverISpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    let built = build_i(spec)?;
    let label = format!("I tiepoints={:?} blocks={:?}", spec.tiepoints, spec.blocks);
    analyze(
        "1",
        label,
        &built.ambient,
        built.sub0(),
        built.retraction_symbol(),
        &spec.base,
        opts,
        &|beta| {
            Ok(Some(Prediction {
                star: Some(formula_star_i(spec, beta)?),
                tilde: Some(formula_tilde_i(spec, beta)?),
                shape: predicted_shape_i(spec, beta)?,
                eq_filter: true,
            }))
        },
    )
}

pub fn check_thm2_thm3(spec: &OverIISpec) -> Result<VerifyReport> {
    check_thm2_thm3_with(spec, &VerifyOptions::default())
}

/// Closed forms are checked for every `θ ≥ β`; the shape prediction (trivial
/// unless `β ≤ θ < 1`) for every `θ`.
pub fn check_thm2_thm3_with(spec: &OverIISpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    let built = build_ii(spec)?;
    let beta = spec.beta()?;
    let label = format!(
        "II pairs={:?} u={} blocks={:?}",
        spec.gen_pairs, spec.u, spec.blocks
    );
    analyze(
        "2+3",
        label,
        &built.ambient,
        built.sub0(),
        built.retraction_symbol(),
        &spec.base,
        opts,
        &|theta| {
            let above = beta.leq(theta)?;
            Ok(Some(Prediction {
                star: above.then(|| formula_star_ii(spec, theta)).transpose()?,
                tilde: above.then(|| formula_tilde_ii(spec, theta)).transpose()?,
                shape: predicted_shape_ii(spec, theta)?,
                eq_filter: true,
            }))
        },
    )
}

/// Size limits for random trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzBounds {
    pub max_base: usize,
    pub max_ops: usize,
    pub max_ambient: usize,
    /// Specs whose predicted `|Con A|` exceeds this are resampled.
    pub con_budget: u128,
}

impl Default for FuzzBounds {
    fn default() -> Self {
        FuzzBounds {
            max_base: 5,
            max_ops: 3,
            max_ambient: 30,
            con_budget: 400,
        }
    }
}

/// A randomly drawn construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FuzzCase {
    I(OverISpec),
    II(OverIISpec),
}

/// Runs `trials` random checks. Trial `i` depends only on `(seed, i)`;
/// even trials use Construction I, odd trials Construction II.
pub fn fuzz(seed: u64, trials: usize, bounds: FuzzBounds) -> Vec<VerifyReport> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let case = fuzz_case(seed, i, &bounds);
            let result = match &case {
                FuzzCase::I(spec) => check_thm1(spec),
                FuzzCase::II(spec) => check_thm2_thm3(spec),
            };
            let mut report = result.unwrap_or_else(|e| VerifyReport {
                theorem: match case {
                    FuzzCase::I(_) => "1".into(),
                    FuzzCase::II(_) => "2+3".into(),
                },
                label: String::new(),
                pass: false,
                base_con_size: 0,
                ambient_con_size: 0,
                epimorphism_ok: false,
                lemma_ok: false,
                fibers: Vec::new(),
                failures: vec![Failure::new(format!("error: {e}"), None)],
            });
            report.label = format!("seed={seed} trial={i} {}", report.label);
            report
        })
        .collect()
}

/// The spec used by trial `index`.
pub fn fuzz_case(seed: u64, index: usize, bounds: &FuzzBounds) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    loop {
        let case = if index.is_multiple_of(2) {
            random_spec_i(&mut rng, bounds).map(FuzzCase::I)
        } else {
            random_spec_ii(&mut rng, bounds).map(FuzzCase::II)
        };
        if let Some(case) = case {
            if predicted_con_size(&case).is_some_and(|s| s <= bounds.con_budget) {
                return case;
            }
        }
    }
}

/// `Σ_β |predicted fiber|`, which equals `|Con A|` when the theorems hold.
fn predicted_con_size(case: &FuzzCase) -> Option<u128> {
    let base = match case {
        FuzzCase::I(s) => &s.base,
        FuzzCase::II(s) => &s.base,
    };
    let mut total = 0u128;
    for beta in base.con().elements() {
        let shape = match case {
            FuzzCase::I(s) => predicted_shape_i(s, beta).ok()?,
            FuzzCase::II(s) => predicted_shape_ii(s, beta).ok()?,
        };
        total = total.saturating_add(shape.size());
    }
    Some(total)
}

pub fn random_algebra(rng: &mut impl Rng, n: usize, ops: usize) -> UnaryAlgebra {
    let ops = (0..ops)
        .map(|k| Operation {
            symbol: format!("f{k}"),
            table: (0..n).map(|_| rng.gen_range(0..n)).collect(),
        })
        .collect();
    UnaryAlgebra::new("random", n, ops).expect("tables in range")
}

/// Random labels in `0..max_label`, read as a partition of `items`.
fn random_blocks(rng: &mut impl Rng, items: &[usize]) -> Vec<Vec<usize>> {
    let labels: Vec<usize> = items
        .iter()
        .map(|_| rng.gen_range(0..items.len().max(1)))
        .collect();
    Partition::from_labels(&labels)
        .blocks()
        .into_iter()
        .map(|b| b.into_iter().map(|i| items[i]).collect())
        .collect()
}

fn random_spec_i(rng: &mut impl Rng, bounds: &FuzzBounds) -> Option<OverISpec> {
    let n = rng.gen_range(1..=bounds.max_base);
    let ops = rng.gen_range(1..=bounds.max_ops);
    let base = random_algebra(rng, n, ops);
    let max_k = if n == 1 {
        3
    } else {
        (bounds.max_ambient.checked_sub(n)? / (n - 1)).min(6)
    };
    let k = rng.gen_range(0..=max_k);
    let tiepoints: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
    let indices: Vec<usize> = (1..=k).collect();
    let blocks = random_blocks(rng, &indices);
    OverISpec::new(base, tiepoints, Some(blocks)).ok()
}

fn random_spec_ii(rng: &mut impl Rng, bounds: &FuzzBounds) -> Option<OverIISpec> {
    let n = rng.gen_range(1..=bounds.max_base);
    let ops = rng.gen_range(1..=bounds.max_ops);
    let base = random_algebra(rng, n, ops);
    let pairs = rng.gen_range(1..=2usize);
    let k = pairs + 1;
    let u = rng.gen_range(1..=2usize);
    if n + u * k * n.saturating_sub(1) > bounds.max_ambient {
        return None;
    }
    let gen_pairs: Vec<(usize, usize)> = (0..pairs)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .collect();
    let multiples: Vec<usize> = (0..=u).map(|l| l * k).collect();
    let blocks = random_blocks(rng, &multiples);
    OverIISpec::new(base, gen_pairs, u, Some(blocks)).ok()
}
