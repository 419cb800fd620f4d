//! The `cstar` command line. [`dispatch`] parses arguments, runs one
//! subcommand and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success or positive decision |
//! | 2 | input error |
//! | 3 | negative decision |
//! | 4 | budget exhausted or inconclusive |

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use cstar_core::algebra::{
    commutant, conditional_expectation, validate_embedding, SubalgebraEmbedding, UnitImages,
};
use cstar_core::certificate::{verify_certificate, FullnessCertificate};
use cstar_core::fullness::{certificate_from_expectation, design_certificate, relatively_full};
use cstar_core::ksearch::{
    narrow_interval, search_unitary, spanning_family_min, SearchBudget, SearchResult, SearchStatus,
};
use cstar_core::orthogonality::{
    certify_nonorthogonal_conjugate, intertwiner_construct, NonOrthStatus, CONFIDENCE_THRESHOLD,
};
use cstar_core::tower::{
    build_uhf_tower, christensen_budget, parse_tower_json, propagate_fullness, regularity_check,
    verify_commuting_squares, verify_corollary_conditions, Tower, SQUARE_TOL,
};
use cstar_core::{ComplexMatrix, Error as CoreError, ToleranceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "cstar",
    version,
    about = "Relative fullness, non-orthogonality and UHF inclusion towers"
)]
struct Cli {
    /// Spectral floor: eigenvalues at or below it count as zero.
    #[arg(long, global = true)]
    tol_eig: Option<f64>,
    /// Tolerance for identities such as unitarity.
    #[arg(long, global = true)]
    tol_id: Option<f64>,
    /// Seed for randomized steps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Require an explicit --seed for randomized subcommands.
    #[arg(long, global = true)]
    ci: bool,
    /// Report destination; `-` prints to stdout.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    /// Report format (only json).
    #[arg(long, global = true, default_value = "json", value_parser = ["json"])]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embeddings of finite-dimensional algebras.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Relative fullness.
    #[command(subcommand)]
    Full(FullCmd),
    /// Everywhere non-orthogonality of conjugate matrix subalgebras.
    #[command(subcommand)]
    Nonorth(NonorthCmd),
    /// UHF inclusion towers.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Search for the least tensor dimension admitting a non-orthogonal conjugate.
    #[command(subcommand)]
    Ksearch(KsearchCmd),
}

#[derive(Subcommand, Debug)]
enum AlgebraCmd {
    /// Check the matrix-unit relations of an embedding file.
    Validate {
        #[arg(long)]
        emb: PathBuf,
    },
    /// Relative commutant of an embedding, as an embedding.
    Commutant {
        #[arg(long)]
        emb: PathBuf,
    },
    /// Conditional expectation of a matrix onto the relative commutant.
    Expect {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        a: PathBuf,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// File with `{"a": matrix, "embedding": embedding}`.
    #[arg(long, conflicts_with_all = ["a", "emb"])]
    instance: Option<PathBuf>,
    /// Matrix file (with --emb).
    #[arg(long, requires = "emb")]
    a: Option<PathBuf>,
    /// Embedding file (with --a).
    #[arg(long, requires = "a")]
    emb: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum FullCmd {
    /// Decide relative fullness; emits a witness projection when not full.
    Decide(InstanceArgs),
    /// Build a certificate `Σ xⱼ* a xⱼ ≥ margin`.
    Certify {
        #[command(flatten)]
        inst: InstanceArgs,
        /// `sampled` (Haar Riemann sums) or `design` (exact clock-and-shift twirl).
        #[arg(long, default_value = "sampled", value_parser = ["sampled", "design"])]
        method: String,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Check a certificate against an instance.
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        cert: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum NonorthCmd {
    /// The constructive unitary `u` with its projection `f` and corner map `ρ`.
    Intertwine {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
    },
    /// Certify or refute non-orthogonality of `M_d ⊗ 1` and `u*(M_d ⊗ 1)u`.
    Certify {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        /// Matrix file, or a report carrying `u` or `best_unitary`.
        #[arg(long)]
        u: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
}

#[derive(Subcommand, Debug)]
enum TowerCmd {
    /// Build a UHF tower from tensor factor sequences.
    Build {
        /// Comma-separated `k₁,k₂,…`.
        #[arg(long)]
        ks: String,
        /// Comma-separated `ℓ₁,ℓ₂,…` with `kᵢ | ℓᵢ`.
        #[arg(long)]
        ls: String,
        #[arg(long)]
        depth: usize,
    },
    /// Commuting squares, regularity and non-orthogonality conditions.
    Verify {
        #[arg(long)]
        tower: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Also report the expectation-compatibility residuals.
        #[arg(long)]
        expectations: bool,
    },
    /// Push a positive element up the tower until it is relatively full.
    Propagate {
        #[arg(long)]
        tower: PathBuf,
        /// 1-based level of the element.
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        a: PathBuf,
    },
    /// Tolerance schedule for the perturbation argument.
    Budget {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Random starts.
    #[arg(long, default_value_t = 4)]
    budget: usize,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    /// Append evidence rows to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum KsearchCmd {
    /// Search one `(d, k)`.
    Run {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Narrow the interval for the least `k`.
    Interval {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Least number of matrices whose images of every unit vector span.
    Spanning {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::NotFull { .. } => EXIT_NEGATIVE,
            CoreError::BudgetExhausted { .. } => EXIT_UNKNOWN,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::input(format!("malformed JSON: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Provenance embedded in every report.
#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub tolerances: ToleranceConfig,
    pub confidence_threshold: f64,
    pub square_tolerance: f64,
    /// SHA-256 of every input file, by path.
    pub input_digests: BTreeMap<String, String>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
}

struct Ctx {
    argv: Vec<String>,
    tol: ToleranceConfig,
    seed: Option<u64>,
    ci: bool,
    digests: BTreeMap<String, String>,
    start: Instant,
}

impl Ctx {
    fn seed(&self) -> CliResult<u64> {
        match (self.seed, self.ci) {
            (Some(s), _) => Ok(s),
            (None, false) => Ok(0),
            (None, true) => Err(CliError::input(
                "--seed is required with --ci for randomized subcommands",
            )),
        }
    }

    fn read(&mut self, path: &Path) -> CliResult<Value> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        self.digests.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::input(format!("{} is not UTF-8", path.display())))?;
        Ok(serde_json::from_str(text)?)
    }

    fn manifest(&self) -> RunManifest {
        RunManifest {
            command_line: self.argv.clone(),
            seed: self.seed,
            tolerances: self.tol,
            confidence_threshold: CONFIDENCE_THRESHOLD,
            square_tolerance: SQUARE_TOL,
            input_digests: self.digests.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Parses a comma-separated list of positive integers such as `2,2,6`.
pub fn parse_int_list(text: &str) -> Result<Vec<usize>, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err("empty list".into());
    }
    trimmed
        .split(',')
        .map(|part| {
            let p = part.trim();
            match p.parse::<usize>() {
                Ok(0) => Err(format!("entries must be positive, got {p:?}")),
                Ok(v) => Ok(v),
                Err(_) => Err(format!("not a positive integer: {p:?}")),
            }
        })
        .collect()
}

/// Takes `value[key]` when present, otherwise the value itself, so that
/// consumers accept both raw artifacts and the reports that carry them.
fn artifact<'v>(value: &'v Value, key: &str) -> &'v Value {
    value.get(key).unwrap_or(value)
}

fn decode<T: serde::de::DeserializeOwned>(value: &Value, key: &str) -> CliResult<T> {
    Ok(T::deserialize(artifact(value, key))?)
}

fn load_embedding(ctx: &mut Ctx, path: &Path) -> CliResult<SubalgebraEmbedding> {
    let raw: UnitImages = decode(&ctx.read(path)?, "embedding")?;
    Ok(SubalgebraEmbedding::from_unit_images(&raw, &ctx.tol)?)
}

fn load_matrix(ctx: &mut Ctx, path: &Path, key: &str) -> CliResult<ComplexMatrix> {
    decode(&ctx.read(path)?, key)
}

fn load_instance(
    ctx: &mut Ctx,
    inst: &InstanceArgs,
) -> CliResult<(ComplexMatrix, SubalgebraEmbedding)> {
    match (&inst.instance, &inst.a, &inst.emb) {
        (Some(p), _, _) => {
            let v = ctx.read(p)?;
            let a: ComplexMatrix = decode(&v, "a")?;
            let raw: UnitImages = decode(&v, "embedding")?;
            Ok((a, SubalgebraEmbedding::from_unit_images(&raw, &ctx.tol)?))
        }
        (None, Some(a), Some(e)) => {
            let a = load_matrix(ctx, a, "a")?;
            Ok((a, load_embedding(ctx, e)?))
        }
        _ => Err(CliError::input("give --instance, or both --a and --emb")),
    }
}

fn load_tower(ctx: &mut Ctx, path: &Path) -> CliResult<Tower> {
    let v = ctx.read(path)?;
    Ok(parse_tower_json(&artifact(&v, "tower").to_string())?)
}

fn append_csv(path: &Path, rows: &[String]) -> CliResult<()> {
    let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut text = String::new();
    if fresh {
        text.push_str(SearchResult::CSV_HEADER);
        text.push('\n');
    }
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn search_budget(s: &SearchArgs) -> SearchBudget {
    SearchBudget {
        starts: s.budget,
        iters: s.iters,
        ..SearchBudget::default()
    }
}

fn run_algebra(ctx: &mut Ctx, cmd: &AlgebraCmd) -> CliResult<(Value, i32)> {
    match cmd {
        AlgebraCmd::Validate { emb } => {
            let raw: UnitImages = decode(&ctx.read(emb)?, "embedding")?;
            let rep = validate_embedding(&raw, &ctx.tol)?;
            let code = if rep.valid { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((json!({ "validation": rep }), code))
        }
        AlgebraCmd::Commutant { emb } => {
            let e = load_embedding(ctx, emb)?;
            let dim = commutant(&e).dim();
            let c = e.commutant_embedding();
            Ok((
                json!({ "dimension": dim, "multiplicities": e.multiplicities(), "embedding": c.to_unit_images() }),
                EXIT_OK,
            ))
        }
        AlgebraCmd::Expect { emb, a } => {
            let e = load_embedding(ctx, emb)?;
            let a = load_matrix(ctx, a, "a")?;
            let x = conditional_expectation(&e, &a)?;
            Ok((json!({ "expectation": x }), EXIT_OK))
        }
    }
}

fn run_full(ctx: &mut Ctx, cmd: &FullCmd) -> CliResult<(Value, i32)> {
    match cmd {
        FullCmd::Decide(inst) => {
            let (a, emb) = load_instance(ctx, inst)?;
            let d = relatively_full(&a, &emb, &ctx.tol)?;
            let code = if d.is_full() { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((json!({ "decision": d }), code))
        }
        FullCmd::Certify {
            inst,
            method,
            margin,
            budget,
        } => {
            let (a, emb) = load_instance(ctx, inst)?;
            let cert = if method == "design" {
                design_certificate(&a, &emb, &ctx.tol)?
            } else {
                let seed = ctx.seed()?;
                let m = margin.unwrap_or(ctx.tol.cert_margin);
                certificate_from_expectation(&a, &emb, m, seed, *budget, &ctx.tol)?
            };
            let check = verify_certificate(&a, &cert, Some(&emb), &ctx.tol);
            let code = if check.valid { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((json!({ "certificate": cert, "check": check }), code))
        }
        FullCmd::Verify { inst, cert } => {
            let (a, emb) = load_instance(ctx, inst)?;
            let c: FullnessCertificate = decode(&ctx.read(cert)?, "certificate")?;
            let c = FullnessCertificate::new(c.elements, c.margin, c.kind)?;
            let check = verify_certificate(&a, &c, Some(&emb), &ctx.tol);
            let code = if check.valid { EXIT_OK } else { EXIT_NEGATIVE };
            Ok((json!({ "check": check }), code))
        }
    }
}

fn run_nonorth(ctx: &mut Ctx, cmd: &NonorthCmd) -> CliResult<(Value, i32)> {
    match cmd {
        NonorthCmd::Intertwine { d, k } => {
            let it = intertwiner_construct(*d, *k)?;
            Ok((
                json!({
                    "d": d, "k": k, "u": it.u, "f": it.f, "rho_units": it.rho_units,
                    "identity_residual": it.identity_residual(),
                }),
                EXIT_OK,
            ))
        }
        NonorthCmd::Certify { d, k, u, budget } => {
            let v = ctx.read(u)?;
            let key = if v.get("best_unitary").is_some() {
                "best_unitary"
            } else {
                "u"
            };
            let u: ComplexMatrix = decode(&v, key)?;
            let seed = ctx.seed()?;
            let rep = certify_nonorthogonal_conjugate(&u, *d, *k, *budget, seed, &ctx.tol)?;
            let code = match rep.status {
                NonOrthStatus::Certified => EXIT_OK,
                NonOrthStatus::Refuted => EXIT_NEGATIVE,
                NonOrthStatus::Unknown => EXIT_UNKNOWN,
            };
            Ok((json!({ "report": rep }), code))
        }
    }
}

fn run_tower(ctx: &mut Ctx, cmd: &TowerCmd) -> CliResult<(Value, i32)> {
    match cmd {
        TowerCmd::Build { ks, ls, depth } => {
            let ks = parse_int_list(ks).map_err(|e| CliError::input(format!("--ks: {e}")))?;
            let ls = parse_int_list(ls).map_err(|e| CliError::input(format!("--ls: {e}")))?;
            let seed = ctx.seed()?;
            let t = build_uhf_tower(&ks, &ls, *depth, seed)?;
            let tower: Value = serde_json::from_str(&t.to_json()?)?;
            let dims: Vec<usize> = t.levels.iter().map(|l| l.ambient_dim()).collect();
            Ok((
                json!({ "ambient_dims": dims, "log": t.log, "tower": tower }),
                EXIT_OK,
            ))
        }
        TowerCmd::Verify {
            tower,
            budget,
            expectations,
        } => {
            let t = load_tower(ctx, tower)?;
            let seed = ctx.seed()?;
            let squares = verify_commuting_squares(&t, *expectations)?;
            let regularity = (1..t.depth())
                .map(|n| regularity_check(&t, n, n + 1, &ctx.tol))
                .collect::<Result<Vec<_>, _>>()?;
            let corollary = verify_corollary_conditions(&t, *budget, seed, &ctx.tol)?;
            let structural = squares.passed && regularity.iter().all(|r| r.regular);
            let refuted = corollary.levels.iter().any(|l| l.report.is_refuted());
            let code = if !structural || refuted {
                EXIT_NEGATIVE
            } else if corollary.all_certified {
                EXIT_OK
            } else {
                EXIT_UNKNOWN
            };
            Ok((
                json!({ "squares": squares, "regularity": regularity, "corollary": corollary }),
                code,
            ))
        }
        TowerCmd::Propagate { tower, level, a } => {
            let t = load_tower(ctx, tower)?;
            let a = load_matrix(ctx, a, "a")?;
            let p = propagate_fullness(&t, *level, &a, &ctx.tol)?;
            let code = if p.level.is_some() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            Ok((json!({ "propagation": p }), code))
        }
        TowerCmd::Budget { n, eps } => {
            Ok((json!({ "budget": christensen_budget(*n, *eps)? }), EXIT_OK))
        }
    }
}

fn run_ksearch(ctx: &mut Ctx, cmd: &KsearchCmd) -> CliResult<(Value, i32)> {
    let seed = ctx.seed()?;
    match cmd {
        KsearchCmd::Run { d, k, search } => {
            let r = search_unitary(*d, *k, &search_budget(search), seed)?;
            if let Some(p) = &search.csv {
                append_csv(p, &[r.csv_row(seed)])?;
            }
            let code = match r.status {
                SearchStatus::WitnessFound => EXIT_OK,
                SearchStatus::InfeasibleByBound => EXIT_NEGATIVE,
                SearchStatus::NoWitnessFound => EXIT_UNKNOWN,
            };
            Ok((to_value(&r), code))
        }
        KsearchCmd::Interval { d, search } => {
            let budget = search_budget(search);
            let iv = narrow_interval(*d, &budget, seed)?;
            if let Some(p) = &search.csv {
                let rows: Vec<String> = iv
                    .evidence
                    .iter()
                    .map(|e| {
                        let status = to_value(&e.status);
                        format!(
                            "{},{},{},{:.6e},{},{}",
                            d,
                            e.k,
                            status.as_str().unwrap_or_default(),
                            e.margin,
                            budget.starts,
                            seed
                        )
                    })
                    .collect();
                append_csv(p, &rows)?;
            }
            Ok((json!({ "interval": iv }), EXIT_OK))
        }
        KsearchCmd::Spanning { d, search } => {
            let r = spanning_family_min(*d, &search_budget(search), seed)?;
            let code = if r.m_hi.is_some() {
                EXIT_OK
            } else {
                EXIT_UNKNOWN
            };
            Ok((json!({ "spanning": r }), code))
        }
    }
}

fn emit(out: &str, report: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report)?;
    if out == "-" {
        println!("{text}");
    } else {
        fs::write(out, text + "\n")
            .map_err(|e| CliError::input(format!("cannot write {out}: {e}")))?;
        println!("{out}");
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<i32> {
    let mut tol = ToleranceConfig::default();
    if let Some(v) = cli.tol_eig {
        tol.eig_floor = v;
    }
    if let Some(v) = cli.tol_id {
        tol.identity_tol = v;
    }
    tol.validate()?;
    let mut ctx = Ctx {
        argv,
        tol,
        seed: cli.seed,
        ci: cli.ci,
        digests: BTreeMap::new(),
        start: Instant::now(),
    };
    let (body, code) = match &cli.command {
        Command::Algebra(c) => run_algebra(&mut ctx, c)?,
        Command::Full(c) => run_full(&mut ctx, c)?,
        Command::Nonorth(c) => run_nonorth(&mut ctx, c)?,
        Command::Tower(c) => run_tower(&mut ctx, c)?,
        Command::Ksearch(c) => run_ksearch(&mut ctx, c)?,
    };
    let mut report = json!({ "manifest": ctx.manifest() });
    match body {
        Value::Object(map) => report.as_object_mut().expect("object").extend(map),
        other => {
            report["result"] = other;
        }
    }
    emit(&cli.out, &report)?;
    Ok(code)
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("2,2").unwrap(), vec![2, 2]);
        assert_eq!(parse_int_list(" 3 , 6 ").unwrap(), vec![3, 6]);
        assert!(parse_int_list("").is_err());
        assert!(parse_int_list("2,,3").is_err());
        assert!(parse_int_list("0").is_err());
        assert!(parse_int_list("-1").is_err());
        assert!(parse_int_list("99999999999999999999999").is_err());
    }

    #[test]
    fn artifact_unwraps_reports() {
        let v = json!({ "manifest": {}, "certificate": { "margin": 1.0 } });
        assert_eq!(artifact(&v, "certificate"), &json!({ "margin": 1.0 }));
        let raw = json!({ "margin": 1.0 });
        assert_eq!(artifact(&raw, "certificate"), &raw);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["cstar", "nonsense"]), EXIT_INPUT);
        assert_eq!(
            dispatch(["cstar", "tower", "build", "--ks", "2,x", "--ls", "6,6", "--depth", "1"]),
            EXIT_INPUT
        );
        assert_eq!(
            dispatch(["cstar", "--ci", "ksearch", "run", "--d", "5", "--k", "2"]),
            EXIT_INPUT
        );
    }
}
