//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use conlat::lattice::{eq_lattice, isomorphic, product, FiniteLattice};
use conlat::overalgebra::{build_i, build_ii, OverIISpec, OverISpec, OverResult};
use conlat::partition::{bell, enumerate_eq, Partition};
use conlat::verify::{
    check_residuation, check_thm1, check_thm2_thm3, fuzz, FuzzBounds, VerifyReport,
};
use conlat::UnaryAlgebra;

/// Wall-clock limits per criterion.
const LIMIT_1: Duration = Duration::from_secs(1);
const LIMIT_2: Duration = Duration::from_secs(5);
const LIMIT_3: Duration = Duration::from_secs(5);
const LIMIT_4: Duration = Duration::from_secs(30);
const LIMIT_5: Duration = Duration::from_secs(300);
const LIMIT_6: Duration = Duration::from_secs(300);
const LIMIT_7: Duration = Duration::from_secs(120);
const LIMIT_8: Duration = Duration::from_secs(600);
const LIMIT_9: Duration = Duration::from_secs(10);

const FUZZ_SEED: u64 = 1;
const FUZZ_TRIALS: usize = 200;

type Check = Result<(), String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn s3() -> UnaryAlgebra {
    UnaryAlgebra::from_permutations(6, &[vec![1, 2, 0, 4, 5, 3], vec![3, 5, 4, 0, 2, 1]])
        .expect("valid permutations")
}

fn p(s: &str) -> Partition {
    s.parse().expect("valid bar notation")
}

fn over_i(ties: &[usize], blocks: Option<Vec<Vec<usize>>>) -> OverISpec {
    OverISpec::new(s3(), ties.to_vec(), blocks).expect("valid spec")
}

/// Nontrivial members of a congruence lattice as bar strings.
fn nontrivial(con: &[Partition]) -> BTreeSet<String> {
    con.iter()
        .filter(|c| !c.is_bottom() && !c.is_top())
        .map(|c| c.to_string())
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn two_pow(k: usize) -> FiniteLattice {
    product(&vec![FiniteLattice::chain(2); k]).expect("small product")
}

fn passed(report: &VerifyReport) -> Check {
    ensure!(
        report.pass,
        "{} {} failed: {:?}",
        report.theorem,
        report.label,
        report.failures.first()
    );
    Ok(())
}

/// Fiber over `beta` in `report`, as a lattice.
fn fiber_lattice(report: &VerifyReport, beta: &str) -> Result<FiniteLattice, String> {
    let f = report
        .fiber_over(&p(beta))
        .ok_or_else(|| format!("no fiber over {beta}"))?;
    Ok(FiniteLattice::from_partitions(&f.fiber))
}

fn fiber_is(report: &VerifyReport, beta: &str, expected: &FiniteLattice) -> Check {
    let l = fiber_lattice(report, beta)?;
    ensure!(
        isomorphic(&l, expected),
        "{}: fiber over {beta} has {} elements, expected a lattice of size {}",
        report.label,
        l.size(),
        expected.size()
    );
    Ok(())
}

fn criterion_1() -> Check {
    let con = s3().con();
    ensure!(con.len() == 6, "expected 6 congruences, got {}", con.len());
    let want = set(&[
        "|0,1,2|3,4,5|",
        "|0,3|1,4|2,5|",
        "|0,4|1,5|2,3|",
        "|0,5|1,3|2,4|",
    ]);
    ensure!(
        nontrivial(con.elements()) == want,
        "got {:?}",
        nontrivial(con.elements())
    );
    Ok(())
}

fn criterion_2() -> Check {
    let r = build_i(&over_i(&[0, 2], None)).map_err(|e| e.to_string())?;
    let rows: [(&str, [usize; 16]); 6] = [
        ("e0", [0, 1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 0, 1, 3, 4, 5]),
        ("e1", [0, 6, 7, 8, 9, 10, 6, 7, 8, 9, 10, 0, 6, 8, 9, 10]),
        (
            "e2",
            [11, 12, 2, 13, 14, 15, 12, 2, 13, 14, 15, 11, 12, 13, 14, 15],
        ),
        ("s1", [0, 1, 2, 3, 4, 5, 0, 0, 0, 0, 0, 2, 2, 2, 2, 2]),
        ("g0e0", [1, 2, 0, 4, 5, 3, 2, 0, 4, 5, 3, 1, 2, 4, 5, 3]),
        ("g1e0", [3, 5, 4, 0, 2, 1, 5, 4, 0, 2, 1, 3, 5, 0, 2, 1]),
    ];
    ensure!(r.ambient.ops().len() == 6, "expected 6 operations");
    for (symbol, row) in rows {
        let op = r.ambient.op(symbol).map_err(|e| e.to_string())?;
        ensure!(op.table == row, "row {symbol}: {:?}", op.table);
    }
    let con = r.ambient.con();
    ensure!(con.len() == 7, "expected 7 congruences, got {}", con.len());
    let want = set(&[
        "|0,1,2,6,7,11,12|3,4,5|8,9,10,13,14,15|",
        "|0,1,2,6,7,11,12|3,4,5|8,9,10|13,14,15|",
        "|0,3,8|1,4|2,5,15|6,9|7,10|11,13|12,14|",
        "|0,4,9|1,5|2,3,13|6,10|7,8|11,14|12,15|",
        DELTA_STAR_0_2,
    ]);
    ensure!(
        nontrivial(con.elements()) == want,
        "got {:?}",
        nontrivial(con.elements())
    );
    // The widely printed form of this congruence merges {7,9} and {11,15};
    // that relation is not compatible with e0 (7 ↦ 2 and 11 ↦ 0).
    let merged = p(DELTA_STAR_0_2_MERGED);
    ensure!(
        !r.ambient.respects(&merged).map_err(|e| e.to_string())?,
        "merged form unexpectedly a congruence"
    );
    let split = p(DELTA_STAR_0_2);
    ensure!(
        split
            .join(&Partition::from_pairs(16, &[(7, 11)]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            == merged,
        "corrected form differs by more than one split"
    );
    Ok(())
}

const DELTA_STAR_0_2: &str = "|0,5,10|1,3|2,4,14|6,8|7,9|11,15|12,13|";
const DELTA_STAR_0_2_MERGED: &str = "|0,5,10|1,3|2,4,14|6,8|7,9,11,15|12,13|";

fn criterion_3() -> Check {
    let r = build_i(&over_i(&[0, 3], None)).map_err(|e| e.to_string())?;
    let con = r.ambient.con();
    ensure!(con.len() == 9, "expected 9 congruences, got {}", con.len());
    let want = set(&[
        "|0,1,2,6,7|3,4,5,14,15|8,9,10|11,12,13|",
        "|0,3,8,11|1,4|2,5|6,9,12,14|7,10,13,15|",
        "|0,3,8,11|1,4|2,5|6,9,12,14|7,10|13,15|",
        "|0,3,8,11|1,4|2,5|6,9|7,10,13,15|12,14|",
        "|0,3,8,11|1,4|2,5|6,9|7,10|12,14|13,15|",
        "|0,4,9|1,5|2,3,13|6,10|7,8|11,14|12,15|",
        "|0,5,10|1,3,12|2,4|6,8|7,9|11,15|13,14|",
    ]);
    ensure!(
        nontrivial(con.elements()) == want,
        "got {:?}",
        nontrivial(con.elements())
    );
    Ok(())
}

const ALPHA: &str = "|0,1,2|3,4,5|";
const BETA: &str = "|0,3|1,4|2,5|";
const GAMMA: &str = "|0,4|1,5|2,3|";
const DELTA: &str = "|0,5|1,3|2,4|";

fn criterion_4() -> Check {
    let one = FiniteLattice::chain(1);
    let two = FiniteLattice::chain(2);
    let eq3 = eq_lattice(3).map_err(|e| e.to_string())?;
    let sq = two_pow(2);
    let eq3_sq = product(&[eq3.clone(), eq3.clone()]).map_err(|e| e.to_string())?;

    type Case = (
        &'static [usize],
        Option<Vec<Vec<usize>>>,
        usize,
        Vec<(&'static str, FiniteLattice)>,
    );
    let cases: Vec<Case> = vec![
        (
            &[0, 1],
            None,
            7,
            vec![
                (ALPHA, two.clone()),
                (BETA, one.clone()),
                (GAMMA, one.clone()),
                (DELTA, one.clone()),
            ],
        ),
        (
            &[0, 1, 2],
            None,
            10,
            vec![
                (ALPHA, eq3.clone()),
                (BETA, one.clone()),
                (GAMMA, one.clone()),
                (DELTA, one.clone()),
            ],
        ),
        (
            &[0, 2, 3],
            None,
            13,
            vec![
                (ALPHA, two.clone()),
                (BETA, sq.clone()),
                (GAMMA, sq.clone()),
                (DELTA, one.clone()),
            ],
        ),
        (
            &[0, 1, 2, 3],
            None,
            19,
            vec![
                (ALPHA, eq3.clone()),
                (BETA, sq.clone()),
                (GAMMA, sq.clone()),
                (DELTA, sq.clone()),
            ],
        ),
        (
            &[0, 2, 3, 5],
            None,
            30,
            vec![
                (ALPHA, sq.clone()),
                (BETA, two_pow(4)),
                (GAMMA, sq.clone()),
                (DELTA, sq.clone()),
            ],
        ),
        (
            &[0, 2, 3, 5],
            Some(vec![vec![1, 3], vec![2, 4]]),
            21,
            vec![
                (ALPHA, one.clone()),
                (BETA, two_pow(4)),
                (GAMMA, one.clone()),
                (DELTA, one.clone()),
            ],
        ),
        (
            &[0, 3, 2, 5],
            Some(vec![vec![1, 2], vec![3, 4]]),
            21,
            vec![
                (ALPHA, one.clone()),
                (BETA, two_pow(4)),
                (GAMMA, one.clone()),
                (DELTA, one.clone()),
            ],
        ),
        (
            &[0, 1, 2, 3, 4, 5],
            Some(vec![vec![1, 2, 3], vec![4, 5, 6]]),
            30,
            vec![
                (ALPHA, eq3_sq),
                (BETA, one.clone()),
                (GAMMA, one.clone()),
                (DELTA, one),
            ],
        ),
    ];
    for (ties, blocks, total, fibers) in cases {
        let report = check_thm1(&over_i(ties, blocks)).map_err(|e| e.to_string())?;
        passed(&report)?;
        ensure!(
            report.ambient_con_size == total,
            "{}: |Con A| = {}, expected {total}",
            report.label,
            report.ambient_con_size
        );
        for (beta, lattice) in &fibers {
            fiber_is(&report, beta, lattice)?;
        }
    }
    Ok(())
}

fn criterion_5() -> Check {
    let eq3 = eq_lattice(3).map_err(|e| e.to_string())?;
    let eq3_cubed = product(&[eq3.clone(), eq3.clone(), eq3]).map_err(|e| e.to_string())?;
    let spec = over_i(
        &[0, 1, 2, 0, 1, 2, 3, 4, 5],
        Some(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]),
    );
    let report = check_thm1(&spec).map_err(|e| e.to_string())?;
    passed(&report)?;
    ensure!(
        report.ambient_con_size == 130,
        "|Con A| = {}",
        report.ambient_con_size
    );
    ensure!(
        report.nontrivial().count() == 1,
        "more than one nontrivial fiber"
    );
    fiber_is(&report, ALPHA, &eq3_cubed)?;

    let spec = over_i(
        &[0, 3, 0, 3, 0, 3, 0, 3],
        Some(vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]]),
    );
    let report = check_thm1(&spec).map_err(|e| e.to_string())?;
    passed(&report)?;
    ensure!(
        report.ambient_con_size == 261,
        "|Con A| = {}",
        report.ambient_con_size
    );
    ensure!(
        report.nontrivial().count() == 1,
        "more than one nontrivial fiber"
    );
    fiber_is(&report, BETA, &two_pow(8))?;
    Ok(())
}

/// Every overalgebra built in criteria 2 through 5.
fn lemma_algebras() -> Vec<OverResult> {
    let specs = [
        over_i(&[0, 2], None),
        over_i(&[0, 3], None),
        over_i(&[0, 1], None),
        over_i(&[0, 1, 2], None),
        over_i(&[0, 2, 3], None),
        over_i(&[0, 1, 2, 3], None),
        over_i(&[0, 2, 3, 5], None),
        over_i(&[0, 2, 3, 5], Some(vec![vec![1, 3], vec![2, 4]])),
        over_i(&[0, 3, 2, 5], Some(vec![vec![1, 2], vec![3, 4]])),
        over_i(
            &[0, 1, 2, 3, 4, 5],
            Some(vec![vec![1, 2, 3], vec![4, 5, 6]]),
        ),
        over_i(
            &[0, 1, 2, 0, 1, 2, 3, 4, 5],
            Some(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]),
        ),
        over_i(
            &[0, 3, 0, 3, 0, 3, 0, 3],
            Some(vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]]),
        ),
    ];
    specs.iter().map(|s| build_i(s).expect("builds")).collect()
}

fn criterion_6() -> Check {
    for built in lemma_algebras() {
        let report = check_residuation(&built.ambient, built.sub0(), built.retraction_symbol())
            .map_err(|e| e.to_string())?;
        passed(&report)?;
        ensure!(report.epimorphism_ok && report.lemma_ok, "{}", report.label);
        let total: usize = report.fibers.iter().map(|f| f.fiber_size).sum();
        ensure!(
            total == report.ambient_con_size,
            "fiber sizes do not sum to |Con A|"
        );
        ensure!(
            report.fibers.len() == report.base_con_size,
            "restriction is not onto"
        );
    }
    Ok(())
}

fn criterion_7() -> Check {
    let beta = p(BETA);
    let cases: Vec<(usize, Vec<Vec<usize>>)> = vec![
        (1, vec![vec![0, 2]]),
        (1, vec![vec![0], vec![2]]),
        (2, vec![vec![0, 2, 4]]),
        (2, vec![vec![0], vec![2], vec![4]]),
        (2, vec![vec![0, 2], vec![4]]),
        (2, vec![vec![0, 4], vec![2]]),
    ];
    for (u, blocks) in cases {
        let spec = OverIISpec::new(s3(), vec![(0, 3)], u, Some(blocks.clone()))
            .map_err(|e| e.to_string())?;
        build_ii(&spec).map_err(|e| e.to_string())?;
        let report = check_thm2_thm3(&spec).map_err(|e| e.to_string())?;
        passed(&report)?;
        for f in &report.fibers {
            let expect_nontrivial =
                beta.leq(&f.beta).map_err(|e| e.to_string())? && !f.beta.is_top();
            let has_two_block = blocks.iter().any(|b| b.len() >= 2);
            ensure!(
                (f.fiber_size > 1) == (expect_nontrivial && has_two_block),
                "{}: fiber over {} has size {}",
                report.label,
                f.beta,
                f.fiber_size
            );
            ensure!(
                f.exact_match && f.shape_match,
                "{}: fiber over {}",
                report.label,
                f.beta
            );
        }
        if u == 1 && blocks == vec![vec![0, 2]] {
            ensure!(
                report.nontrivial().count() == 1,
                "expected one nontrivial fiber"
            );
            fiber_is(&report, BETA, &two_pow(2))?;
            ensure!(
                report.ambient_con_size == 9,
                "|Con A| = {}",
                report.ambient_con_size
            );
        }
    }
    Ok(())
}

fn criterion_8() -> Check {
    let bounds = FuzzBounds::default();
    let first = fuzz(FUZZ_SEED, FUZZ_TRIALS, bounds);
    ensure!(first.len() == FUZZ_TRIALS, "expected {FUZZ_TRIALS} reports");
    if let Some(bad) = first.iter().find(|r| !r.pass) {
        return Err(format!("{} failed: {:?}", bad.label, bad.failures.first()));
    }
    let interesting = first
        .iter()
        .filter(|r| r.nontrivial().next().is_some())
        .count();
    ensure!(
        interesting * 4 >= FUZZ_TRIALS,
        "only {interesting} trials produced a nontrivial fiber"
    );
    let again = fuzz(FUZZ_SEED, FUZZ_TRIALS, bounds);
    ensure!(first == again, "repeat run differs");
    Ok(())
}

fn criterion_9() -> Check {
    let eq4 = enumerate_eq(4).map_err(|e| e.to_string())?;
    ensure!(eq4.len() == 15, "|Eq(4)| = {}", eq4.len());
    let err = |e: conlat::Error| e.to_string();
    for a in &eq4 {
        ensure!(
            a.meet(a).map_err(err)? == *a && a.join(a).map_err(err)? == *a,
            "idempotence"
        );
        for b in &eq4 {
            let m = a.meet(b).map_err(err)?;
            let j = a.join(b).map_err(err)?;
            ensure!(m == b.meet(a).map_err(err)?, "meet commutes");
            ensure!(j == b.join(a).map_err(err)?, "join commutes");
            ensure!(a.meet(&j).map_err(err)? == *a, "absorption {a} {b}");
            ensure!(a.join(&m).map_err(err)? == *a, "absorption {a} {b}");
            ensure!(
                a.leq(b).map_err(err)? == (m == *a) && a.leq(b).map_err(err)? == (j == *b),
                "order agrees with meet and join"
            );
            for c in &eq4 {
                ensure!(
                    m.meet(c).map_err(err)? == a.meet(&b.meet(c).map_err(err)?).map_err(err)?,
                    "meet associates"
                );
                ensure!(
                    j.join(c).map_err(err)? == a.join(&b.join(c).map_err(err)?).map_err(err)?,
                    "join associates"
                );
            }
        }
    }
    // Bell numbers by the recurrence B(n+1) = Σ C(n,k) B(k)
    let mut bells: Vec<u128> = vec![1];
    for n in 0..6usize {
        let mut binom = 1u128;
        let mut next = 0u128;
        for k in 0..=n {
            next += binom * bells[k];
            binom = binom * (n - k) as u128 / (k + 1) as u128;
        }
        bells.push(next);
    }
    for (n, &b) in bells.iter().enumerate() {
        let count = enumerate_eq(n).map_err(err)?.len() as u128;
        ensure!(
            count == b && bell(n) == b,
            "Eq({n}) has {count} elements, Bell = {b}"
        );
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "congruences of the regular S3-set", LIMIT_1, criterion_1),
        (
            2,
            "tie-points 0,2: operation table and Con",
            LIMIT_2,
            criterion_2,
        ),
        (3, "tie-points 0,3: Con", LIMIT_3, criterion_3),
        (4, "tie-point sweep fiber shapes", LIMIT_4, criterion_4),
        (5, "repeated tie-points: 130 and 261", LIMIT_5, criterion_5),
        (
            6,
            "residuation and restriction epimorphism",
            LIMIT_6,
            criterion_6,
        ),
        (7, "chained construction fibers", LIMIT_7, criterion_7),
        (8, "seeded random trials", LIMIT_8, criterion_8),
        (9, "partition lattice kernel", LIMIT_9, criterion_9),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > limit {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("PASS criterion {id}: {name} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id}: {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
