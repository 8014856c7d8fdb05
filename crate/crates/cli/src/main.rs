//! `conlat`: congruence lattices of finite unary algebras from the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use conlat::overalgebra::{build_i, build_ii, OverResult};
use conlat::verify::{
    check_residuation_with, check_thm1_with, check_thm2_thm3_with, fuzz, FuzzBounds, VerifyOptions,
    VerifyReport,
};
use conlat::{OverIISpec, OverISpec, UnaryAlgebra};

const DEFAULT_MAX_UNIVERSE: usize = 64;
const DEFAULT_MAX_LATTICE: usize = 1_000_000;

#[derive(Parser)]
#[command(
    name = "conlat",
    version,
    about = "Congruence lattices of finite unary algebras"
)]
struct Cli {
    /// Largest universe accepted as input or produced by a construction.
    #[arg(long, env = "CONLAT_MAX_UNIVERSE", default_value_t = DEFAULT_MAX_UNIVERSE, global = true)]
    max_universe: usize,
    /// Largest congruence lattice that will be enumerated.
    #[arg(long, env = "CONLAT_MAX_LATTICE", default_value_t = DEFAULT_MAX_LATTICE, global = true)]
    max_lattice: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the congruence lattice of an algebra.
    Con {
        algebra: PathBuf,
        /// Print every congruence in bar notation.
        #[arg(long)]
        list: bool,
        /// Write the Hasse diagram as Graphviz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the lattice as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// DOT labels longer than this are replaced by indices and a legend.
        #[arg(long, default_value_t = 48)]
        label_cap: usize,
    },
    /// Build an overalgebra with single tie-points (Construction I).
    BuildI {
        algebra: Option<PathBuf>,
        /// Comma-separated tie-points, e.g. "0,2".
        #[arg(long, allow_hyphen_values = true)]
        tiepoints: Option<String>,
        /// Partition of tie-point indices 1..K, e.g. "1,2|3,4".
        #[arg(long)]
        blocks: Option<String>,
        /// JSON spec: {"base": algebra or path, "tiepoints": [...], "blocks": [[...]]}.
        #[arg(long, conflicts_with_all = ["algebra", "tiepoints", "blocks"])]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Embedding JSON path; defaults to `<out>.embedding.json`.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Build a chained overalgebra (Construction II).
    BuildIi {
        algebra: Option<PathBuf>,
        /// Generating pairs, e.g. "0:3,1:4".
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long, default_value_t = 1)]
        u: usize,
        /// Partition of {0, K, ..., uK}, e.g. "0,2|4".
        #[arg(long)]
        blocks: Option<String>,
        /// JSON spec: {"base": ..., "pairs": [[a,b],...], "u": u, "blocks": [[...]]}.
        #[arg(long, conflicts_with_all = ["algebra", "pairs", "blocks"])]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Verify fibers of the restriction map against the closed forms.
    Check {
        algebra: PathBuf,
        /// One of 1, 2, 3 or lemma.
        #[arg(long)]
        thm: String,
        #[arg(long)]
        tiepoints: Option<String>,
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long, default_value_t = 1)]
        u: usize,
        #[arg(long)]
        blocks: Option<String>,
        /// Retraction symbol for `--thm lemma` on a raw algebra.
        #[arg(long = "e")]
        e_symbol: Option<String>,
        /// Subuniverse for `--thm lemma`; defaults to the image of the retraction.
        #[arg(long)]
        sub: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a permutation algebra (G-set) from generator tables.
    Perms {
        #[arg(long)]
        n: usize,
        /// Generator table, e.g. "1,2,0,4,5,3". Repeatable.
        #[arg(long = "perm")]
        perms: Vec<String>,
        #[arg(long)]
        name: Option<String>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded random trials of both constructions.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad arguments or input files (exit 2).
    Input(String),
    /// A verification assertion failed (exit 1).
    Verify(String),
}

impl From<conlat::Error> for CliError {
    fn from(e: conlat::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// `println!` that exits quietly when stdout is a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(CliError::Input(format!("writing output: {e}")));
        }
    }};
}

fn input<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Input(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = Limits {
        universe: cli.max_universe,
        lattice: cli.max_lattice,
    };
    match run(cli.command, &limits) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

struct Limits {
    universe: usize,
    lattice: usize,
}

impl Limits {
    fn check_universe(&self, alg: &UnaryAlgebra) -> CliResult {
        if alg.size() > self.universe {
            return input(format!(
                "universe of size {} exceeds CONLAT_MAX_UNIVERSE = {}",
                alg.size(),
                self.universe
            ));
        }
        Ok(())
    }

    fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            con_budget: self.lattice,
            ..VerifyOptions::default()
        }
    }
}

fn run(command: Command, limits: &Limits) -> CliResult {
    match command {
        Command::Con {
            algebra,
            list,
            dot,
            json,
            label_cap,
        } => cmd_con(&algebra, list, dot, json, label_cap, limits),
        Command::BuildI {
            algebra,
            tiepoints,
            blocks,
            spec,
            out,
            embedding,
        } => {
            let spec = match spec {
                Some(path) => spec_i_from_json(&path)?,
                None => {
                    let base = load_required(algebra.as_deref())?;
                    spec_i_from_flags(base, tiepoints.as_deref(), blocks.as_deref())?
                }
            };
            limits.check_universe(&spec.base)?;
            guard_size(spec.ambient_size(), limits)?;
            write_build(&build_i(&spec)?, &out, embedding)
        }
        Command::BuildIi {
            algebra,
            pairs,
            u,
            blocks,
            spec,
            out,
            embedding,
        } => {
            let spec = match spec {
                Some(path) => spec_ii_from_json(&path)?,
                None => {
                    let base = load_required(algebra.as_deref())?;
                    spec_ii_from_flags(base, pairs.as_deref(), u, blocks.as_deref())?
                }
            };
            limits.check_universe(&spec.base)?;
            guard_size(spec.ambient_size(), limits)?;
            write_build(&build_ii(&spec)?, &out, embedding)
        }
        Command::Check {
            algebra,
            thm,
            tiepoints,
            pairs,
            u,
            blocks,
            e_symbol,
            sub,
            report,
        } => {
            let base = load_algebra(&algebra)?;
            limits.check_universe(&base)?;
            let opts = limits.verify_options();
            let result = match thm.as_str() {
                "1" => {
                    let spec = spec_i_from_flags(base, tiepoints.as_deref(), blocks.as_deref())?;
                    guard_size(spec.ambient_size(), limits)?;
                    check_thm1_with(&spec, &opts)?
                }
                "2" | "3" => {
                    let spec = spec_ii_from_flags(base, pairs.as_deref(), u, blocks.as_deref())?;
                    guard_size(spec.ambient_size(), limits)?;
                    check_thm2_thm3_with(&spec, &opts)?
                }
                "lemma" => {
                    let built = if tiepoints.is_some() {
                        let spec = spec_i_from_flags(
                            base.clone(),
                            tiepoints.as_deref(),
                            blocks.as_deref(),
                        )?;
                        guard_size(spec.ambient_size(), limits)?;
                        Some(build_i(&spec)?)
                    } else if pairs.is_some() {
                        let spec = spec_ii_from_flags(
                            base.clone(),
                            pairs.as_deref(),
                            u,
                            blocks.as_deref(),
                        )?;
                        guard_size(spec.ambient_size(), limits)?;
                        Some(build_ii(&spec)?)
                    } else {
                        None
                    };
                    match built {
                        Some(b) => check_residuation_with(
                            &b.ambient,
                            b.sub0(),
                            b.retraction_symbol(),
                            &opts,
                        )?,
                        None => {
                            let Some(e) = e_symbol else {
                                return input("--thm lemma needs --tiepoints, --pairs or --e");
                            };
                            let sub = match sub {
                                Some(s) => parse_list(&s)?,
                                None => image_of(&algebra_op(&base, &e)?),
                            };
                            check_residuation_with(&base, &sub, &e, &opts)?
                        }
                    }
                }
                other => return input(format!("unknown theorem {other:?}; use 1, 2, 3 or lemma")),
            };
            finish_report(&result, report.as_deref())
        }
        Command::Perms {
            n,
            perms,
            name,
            out,
        } => {
            let tables = perms
                .iter()
                .map(|p| parse_list(p))
                .collect::<CliResult<Vec<_>>>()?;
            if let Some(t) = tables.iter().find(|t| t.len() != n) {
                return input(format!("table {t:?} does not have length {n}"));
            }
            let mut alg = UnaryAlgebra::from_permutations(n, &tables)?;
            if let Some(name) = name {
                alg = alg.with_name(name);
            }
            let text = to_json(&alg);
            match out {
                Some(path) => write_file(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Fuzz {
            seed,
            trials,
            report,
        } => {
            let reports = fuzz(seed, trials, FuzzBounds::default());
            let failed: Vec<&VerifyReport> = reports.iter().filter(|r| !r.pass).collect();
            out!(
                "{} trials, {} passed, {} failed",
                reports.len(),
                reports.len() - failed.len(),
                failed.len()
            );
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
                write_file(&path, &(text + "\n"))?;
            }
            match failed.first() {
                None => Ok(()),
                Some(r) => Err(CliError::Verify(format!(
                    "{}: {:?}",
                    r.label,
                    r.failures.first()
                ))),
            }
        }
    }
}

fn guard_size(size: usize, limits: &Limits) -> CliResult {
    if size > limits.universe {
        return input(format!(
            "ambient universe of size {size} exceeds CONLAT_MAX_UNIVERSE = {}",
            limits.universe
        ));
    }
    Ok(())
}

fn cmd_con(
    path: &Path,
    list: bool,
    dot: Option<PathBuf>,
    json_out: Option<PathBuf>,
    label_cap: usize,
    limits: &Limits,
) -> CliResult {
    let alg = load_algebra(path)?;
    limits.check_universe(&alg)?;
    let con = alg.con_bounded(limits.lattice)?;
    if list {
        for c in con.elements() {
            out!("{c}");
        }
        eprintln!("{} congruences", con.len());
    } else {
        out!("{}", con.len());
    }
    if let Some(dot_path) = dot {
        let lattice = con.to_lattice();
        write_file(&dot_path, &lattice.to_dot(alg.name(), label_cap))?;
        if con
            .elements()
            .iter()
            .any(|c| c.to_string().len() > label_cap)
        {
            let mut legend = String::new();
            for (i, c) in con.elements().iter().enumerate() {
                let _ = writeln!(legend, "{i}\t{c}");
            }
            write_file(&legend_path(&dot_path), &legend)?;
        }
    }
    if let Some(json_path) = json_out {
        let covers: Vec<[usize; 2]> = con
            .covers()
            .iter()
            .enumerate()
            .flat_map(|(i, ups)| ups.iter().map(move |&j| [i, j]))
            .collect();
        let value = json!({
            "algebra": alg.name(),
            "size": alg.size(),
            "count": con.len(),
            "congruences": con.elements().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "covers": covers,
        });
        write_file(&json_path, &pretty(&value))?;
    }
    Ok(())
}

fn legend_path(dot: &Path) -> PathBuf {
    let mut s = dot.as_os_str().to_owned();
    s.push(".legend.txt");
    PathBuf::from(s)
}

fn write_build(built: &OverResult, out: &Path, embedding: Option<PathBuf>) -> CliResult {
    write_file(out, &to_json(&built.ambient))?;
    let emb_path = embedding.unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".embedding.json");
        PathBuf::from(s)
    });
    let emb = serde_json::to_value(&built.embedding).expect("embedding serializes");
    write_file(&emb_path, &pretty(&emb))?;
    out!("{}", built.embedding.describe());
    out!("|A| = {}", built.ambient.size());
    Ok(())
}

fn finish_report(report: &VerifyReport, path: Option<&Path>) -> CliResult {
    let json = json!({
        "theorem": report.theorem,
        "pass": report.pass,
        "base_con_size": report.base_con_size,
        "ambient_con_size": report.ambient_con_size,
        "epimorphism_ok": report.epimorphism_ok,
        "lemma_ok": report.lemma_ok,
        "fibers": report.fibers.iter().map(|f| json!({
            "beta": f.beta.to_string(),
            "star": f.star.to_string(),
            "hat": f.hat.to_string(),
            "fiber_size": f.fiber_size,
            "predicted_size": f.predicted_size,
            "predicted_shape": f.predicted.as_ref().map(|s| s.to_string()),
            "shape_match": f.shape_match,
            "shape_check": f.shape_check,
            "exact_match": f.exact_match,
        })).collect::<Vec<_>>(),
        "failures": report.failures,
    });
    if let Some(path) = path {
        write_file(path, &pretty(&json))?;
    }
    out!(
        "check {}: {} |Con B| = {}, |Con A| = {} = {}",
        report.theorem,
        if report.pass { "PASS" } else { "FAIL" },
        report.base_con_size,
        report.ambient_con_size,
        fiber_accounting(report)
    );
    for f in report.nontrivial() {
        let shape = f.predicted.as_ref().map(|s| s.to_string());
        out!(
            "  fiber over {}: {} elements{}",
            f.beta,
            f.fiber_size,
            shape
                .map(|s| format!(", predicted {s}"))
                .unwrap_or_default()
        );
    }
    match report.failures.first() {
        None => Ok(()),
        Some(f) => Err(CliError::Verify(format!(
            "{} at {} (witness {:?})",
            f.check,
            f.beta.as_ref().map(|b| b.to_string()).unwrap_or_default(),
            f.witness
        ))),
    }
}

/// `|Con A|` as a sum `count·size` over distinct fiber sizes.
fn fiber_accounting(report: &VerifyReport) -> String {
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &report.fibers {
        *by_size.entry(f.fiber_size).or_default() += 1;
    }
    by_size
        .iter()
        .map(|(size, count)| format!("{count}·{size}"))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn load_required(path: Option<&Path>) -> CliResult<UnaryAlgebra> {
    match path {
        Some(p) => load_algebra(p),
        None => input("an algebra path or --spec is required"),
    }
}

fn load_algebra(path: &Path) -> CliResult<UnaryAlgebra> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_spec_json(path: &Path) -> CliResult<(Value, UnaryAlgebra)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = match value.get("base") {
        Some(Value::String(rel)) => {
            let dir = path.parent().unwrap_or(Path::new("."));
            load_algebra(&dir.join(rel))?
        }
        Some(obj @ Value::Object(_)) => serde_json::from_value(obj.clone())
            .map_err(|e| CliError::Input(format!("base: {e}")))?,
        _ => return input("spec needs a \"base\" algebra object or path"),
    };
    Ok((value, base))
}

fn field<T: serde::de::DeserializeOwned>(value: &Value, key: &str) -> CliResult<Option<T>> {
    match value.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| CliError::Input(format!("{key}: {e}"))),
    }
}

fn spec_i_from_json(path: &Path) -> CliResult<OverISpec> {
    let (value, base) = load_spec_json(path)?;
    let ties: Vec<usize> = field(&value, "tiepoints")?.unwrap_or_default();
    let blocks: Option<Vec<Vec<usize>>> = field(&value, "blocks")?;
    Ok(OverISpec::new(base, ties, blocks)?)
}

fn spec_ii_from_json(path: &Path) -> CliResult<OverIISpec> {
    let (value, base) = load_spec_json(path)?;
    let pairs: Vec<(usize, usize)> = field(&value, "pairs")?.unwrap_or_default();
    let u: usize = field(&value, "u")?.unwrap_or(1);
    let blocks: Option<Vec<Vec<usize>>> = field(&value, "blocks")?;
    Ok(OverIISpec::new(base, pairs, u, blocks)?)
}

fn spec_i_from_flags(
    base: UnaryAlgebra,
    tiepoints: Option<&str>,
    blocks: Option<&str>,
) -> CliResult<OverISpec> {
    let ties = parse_list(tiepoints.unwrap_or(""))?;
    let blocks = blocks.map(parse_blocks).transpose()?;
    Ok(OverISpec::new(base, ties, blocks)?)
}

fn spec_ii_from_flags(
    base: UnaryAlgebra,
    pairs: Option<&str>,
    u: usize,
    blocks: Option<&str>,
) -> CliResult<OverIISpec> {
    let pairs = parse_pairs(pairs.unwrap_or(""))?;
    let blocks = blocks.map(parse_blocks).transpose()?;
    Ok(OverIISpec::new(base, pairs, u, blocks)?)
}

fn parse_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Input(format!("not a natural number: {t:?}")))
        })
        .collect()
}

/// `"1,2|3,4"`; surrounding bars are optional.
fn parse_blocks(s: &str) -> CliResult<Vec<Vec<usize>>> {
    s.split('|')
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .map(parse_list)
        .collect()
}

/// `"0:3,1:4"`.
fn parse_pairs(s: &str) -> CliResult<Vec<(usize, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| CliError::Input(format!("pair {t:?} is not of the form a:b")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Input(format!("not a natural number: {x:?}")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn algebra_op(alg: &UnaryAlgebra, symbol: &str) -> CliResult<Vec<usize>> {
    Ok(alg.op(symbol)?.table.clone())
}

fn image_of(table: &[usize]) -> Vec<usize> {
    let mut img = table.to_vec();
    img.sort_unstable();
    img.dedup();
    img
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializes") + "\n"
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("serializes") + "\n"
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
