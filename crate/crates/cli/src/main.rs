//! `latrans`: generate, check and count Latin squares from the command line.
//!
//! Exit codes: 0 on success, 1 when a checked invariant fails, 2 on usage,
//! parse or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use latin_transversals::bounds::{entropy_gap_report_with, upper_bound_log, verify_all_claims};
use latin_transversals::construction::{
    build_l_with, derive_params, pad_to, relaxed_params, special_transversals, BuildOptions, ConstructionParams,
};
use latin_transversals::counting::{count_exact_with, enumerate_transversals_with, estimate_sis_with, CountOptions, SisOrder, DEFAULT_GUARD};
use latin_transversals::experiment::{parse_config, pick_transversal, run_experiment};
use latin_transversals::hypercube::{from_square, transversal_from_square};
use latin_transversals::io::{parse_square_with, serialize_square_as, Format, ParseMode, SquareMetadata};
use latin_transversals::mols::{mols_pair_with, MolsOptions};
use latin_transversals::rng::derive_seed;
use latin_transversals::sampler::{uniform_random_square_with, SamplerConfig};
use latin_transversals::{cyclic_square, validate_latin, Error, LatinSquare};

/// Directory used for `--out` file names that are not absolute, and for
/// default report names when `--out` is absent.
const OUT_DIR_VAR: &str = "LATRANS_OUT_DIR";

#[derive(Parser)]
#[command(name = "latrans", version, about = "Latin squares, transversals and the entropy bound")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output encoding (reports: txt means CSV).
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Txt)]
    format: OutFormat,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run sequentially even when built with parallel support.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Txt,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Txt => Format::Txt,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Cyclic,
    Random,
    /// First square of an orthogonal pair.
    Mols,
    /// Second square of an orthogonal pair.
    Mate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WalkOrder {
    Fixed,
    MostConstrained,
}

impl From<WalkOrder> for SisOrder {
    fn from(o: WalkOrder) -> Self {
        match o {
            WalkOrder::Fixed => SisOrder::Fixed,
            WalkOrder::MostConstrained => SisOrder::MostConstrained,
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    b: usize,
    /// Block multiplier; derived from `b` when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Sampler chain length for random blocks (default 10 m³ for block order m).
    #[arg(long)]
    moves: Option<u64>,
    /// Symbol base written to the output file.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=1))]
    base: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Write a square: cyclic, uniformly random, or one of an orthogonal pair.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        n: usize,
        #[arg(long)]
        moves: Option<u64>,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=1))]
        base: u32,
        /// Time limit in seconds for the orthogonal-mate search.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
    },
    /// Check that a file holds a Latin square and list any violations.
    Validate { file: PathBuf },
    /// Count transversals exactly.
    Count {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: usize,
        /// Also list up to this many transversals (as column vectors).
        #[arg(long)]
        list: Option<usize>,
    },
    /// Estimate the transversal count by sequential importance sampling.
    Estimate {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = WalkOrder::Fixed)]
        order: WalkOrder,
    },
    /// Build the block-structured square for given `b` (and optionally `k`).
    Construct(ConstructArgs),
    /// Build the block-structured square and pad it to order `target`.
    Pad {
        #[command(flatten)]
        construct: ConstructArgs,
        #[arg(long)]
        target: usize,
    },
    /// Evaluate the entropy upper bound; with `--square`, compare to its exact count.
    Bounds {
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Orders to evaluate.
        #[arg(long, num_args = 1.., required_unless_present = "square")]
        n: Vec<u64>,
        #[arg(long)]
        square: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: usize,
    },
    /// Check both counting claims on every hyperplane for sampled transversals.
    VerifyClaims {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        pairs: usize,
    },
    /// Run an experiment config and write its report.
    Experiment { config: PathBuf },
}

enum Failure {
    Invariant(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    seed: u64,
    format: OutFormat,
    out: Option<PathBuf>,
    parallel: bool,
}

impl Ctx {
    fn write(&self, text: &str, default_name: Option<&str>) -> CmdResult {
        let dir = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from);
        let target = match (&self.out, &dir, default_name) {
            (Some(p), Some(d), _) if p.is_relative() => Some(d.join(p)),
            (Some(p), _, _) => Some(p.clone()),
            (None, Some(d), Some(name)) => Some(d.join(name)),
            _ => None,
        };
        match target {
            Some(path) => std::fs::write(&path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit(&self, value: serde_json::Value, text: String) -> CmdResult {
        match self.format {
            OutFormat::Json => self.write(&format!("{}\n", serde_json::to_string_pretty(&value).expect("json")), None),
            OutFormat::Txt => self.write(&text, None),
        }
    }

    fn emit_square(&self, square: &LatinSquare, base: u32, metadata: &SquareMetadata) -> CmdResult {
        self.write(&serialize_square_as(square, self.format.into(), base, metadata), None)
    }

    fn count_opts(&self, guard: usize) -> CountOptions {
        CountOptions { guard, parallel: self.parallel }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::Usage(format!("stdin: {e}")))
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn read_square(path: &Path) -> Result<LatinSquare, Failure> {
    let text = read_input(path)?;
    parse_square_with(&text, ParseMode::Strict)
        .map(|p| p.square)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn params(args: &ConstructArgs) -> Result<ConstructionParams, Failure> {
    Ok(match args.k {
        Some(k) => relaxed_params(args.b, k)?,
        None => derive_params(args.b)?,
    })
}

fn build_opts(ctx: &Ctx, args: &ConstructArgs) -> BuildOptions {
    BuildOptions { sampler: SamplerConfig { moves: args.moves }, parallel: ctx.parallel }
}

fn gen(ctx: &Ctx, kind: GenKind, n: usize, moves: Option<u64>, base: u32, timeout: u64) -> CmdResult {
    let mols = || mols_pair_with(n, &MolsOptions { timeout: Duration::from_secs(timeout), seed: ctx.seed });
    let (square, generator) = match kind {
        GenKind::Cyclic => (cyclic_square(n)?, "cyclic"),
        GenKind::Random => (uniform_random_square_with(n, ctx.seed, &SamplerConfig { moves })?, "jacobson-matthews"),
        GenKind::Mols => (mols()?.0, "orthogonal-pair"),
        GenKind::Mate => (mols()?.1, "orthogonal-mate"),
    };
    let seeded = matches!(kind, GenKind::Random) || (n % 4 == 2 && matches!(kind, GenKind::Mols | GenKind::Mate));
    let meta = SquareMetadata { seed: seeded.then_some(ctx.seed), generator: Some(generator.into()), special: vec![] };
    ctx.emit_square(&square, base, &meta)
}

fn validate(ctx: &Ctx, file: &Path) -> CmdResult {
    let text = read_input(file)?;
    let parsed = parse_square_with(&text, ParseMode::Lenient).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    let report = validate_latin(&parsed.square);
    let base = parsed.symbol_base as i64;
    let violations: Vec<serde_json::Value> = report
        .violations
        .iter()
        .map(|v| json!({"kind": format!("{:?}", v.kind), "row": v.row, "column": v.column, "symbol": v.symbol as i64 + base}))
        .collect();
    let mut text = format!("order {}\nvalid {}\n", parsed.square.order(), report.valid);
    for v in &report.violations {
        text.push_str(&format!("{:?} row {} column {} symbol {}\n", v.kind, v.row, v.column, v.symbol as i64 + base));
    }
    ctx.emit(json!({"order": parsed.square.order(), "valid": report.valid, "violations": violations}), text)?;
    if report.valid {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("{} violations", report.violations.len())))
    }
}

fn count(ctx: &Ctx, file: &Path, guard: usize, list: Option<usize>) -> CmdResult {
    let square = read_square(file)?;
    let opts = ctx.count_opts(guard);
    let result = count_exact_with(&square, &opts)?;
    let mut text = format!("count {}\nnodes {}\n", result.count, result.nodes_visited);
    let mut value = json!({"order": square.order(), "count": result.count.to_string(), "nodes_visited": result.nodes_visited});
    if let Some(limit) = list {
        let columns: Vec<Vec<usize>> = enumerate_transversals_with(&square, Some(limit), &opts)?.iter().map(|t| t.columns()).collect();
        for c in &columns {
            let line: Vec<String> = c.iter().map(usize::to_string).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        value["transversals"] = json!(columns);
    }
    ctx.emit(value, text)
}

fn estimate(ctx: &Ctx, file: &Path, samples: u64, order: WalkOrder) -> CmdResult {
    let square = read_square(file)?;
    let est = estimate_sis_with(&square, samples, ctx.seed, order.into(), ctx.parallel)?;
    let text = format!(
        "mean {}\nstderr {}\nlog_mean {}\nlog_stderr {}\nsamples {}\n",
        est.mean, est.stderr, est.log_mean, est.log_stderr, est.samples
    );
    let log_mean = if est.log_mean.is_finite() { json!(est.log_mean) } else { json!(est.log_mean.to_string()) };
    ctx.emit(
        json!({"order": square.order(), "mean": est.mean, "stderr": est.stderr, "log_mean": log_mean, "log_stderr": est.log_stderr, "samples": samples, "seed": ctx.seed}),
        text,
    )
}

fn construct(ctx: &Ctx, args: &ConstructArgs) -> CmdResult {
    let p = params(args)?;
    let bs = build_l_with(&p, ctx.seed, &build_opts(ctx, args))?;
    let mut special: Vec<(usize, usize)> = special_transversals(&bs).iter().flat_map(|t| t.positions.iter().copied()).collect();
    special.sort_unstable();
    let meta = SquareMetadata { seed: Some(ctx.seed), generator: Some(format!("construct b={} k={}", p.b, p.k)), special };
    ctx.emit_square(&bs.l, args.base, &meta)
}

fn pad(ctx: &Ctx, args: &ConstructArgs, target: usize) -> CmdResult {
    let p = params(args)?;
    let bs = build_l_with(&p, ctx.seed, &build_opts(ctx, args))?;
    let padded = pad_to(&bs, target)?;
    let meta = SquareMetadata { seed: Some(ctx.seed), generator: Some(format!("pad b={} k={} target={target}", p.b, p.k)), special: vec![] };
    ctx.emit_square(&padded.lprime, args.base, &meta)
}

fn bounds(ctx: &Ctx, d: u32, orders: &[u64], square: Option<&Path>, guard: usize) -> CmdResult {
    let mut rows = Vec::new();
    let mut text = String::from("d,n,log_upper,log_lower_target\n");
    for &n in orders {
        let b = upper_bound_log(d, n)?;
        text.push_str(&format!("{},{},{},{}\n", b.d, b.n, b.log_upper, b.log_lower_target));
        rows.push(json!(b));
    }
    let mut value = json!({"bounds": rows});
    let mut holds = true;
    if let Some(path) = square {
        let sq = read_square(path)?;
        let gap = entropy_gap_report_with(&sq, &ctx.count_opts(guard))?;
        holds = gap.holds;
        text.push_str(&format!("square order {}: log_count {} log_upper {} holds {}\n", sq.order(), gap.log_count, gap.log_upper, gap.holds));
        let log_count = if gap.log_count.is_finite() { json!(gap.log_count) } else { json!(gap.log_count.to_string()) };
        value["square"] = json!({"order": sq.order(), "log_count": log_count, "log_upper": gap.log_upper, "holds": gap.holds});
    }
    ctx.emit(value, text)?;
    if holds {
        Ok(())
    } else {
        Err(Failure::Invariant("exact count exceeds the upper bound".into()))
    }
}

fn verify_claims(ctx: &Ctx, file: &Path, pairs: usize) -> CmdResult {
    let square = read_square(file)?;
    let h = from_square(&square)?;
    let opts = ctx.count_opts(DEFAULT_GUARD);
    let mut checked = 0;
    let mut failures = Vec::new();
    for p in 0..pairs {
        let Some(t) = pick_transversal(&square, derive_seed(ctx.seed, &[p as u64]), &opts) else {
            break;
        };
        checked += 1;
        for r in verify_all_claims(&h, &transversal_from_square(&square, &t))? {
            failures.push(json!({"transversal": t.columns(), "report": r}));
        }
    }
    let text = format!("pairs_checked {checked}\nfailures {}\n", failures.len());
    let ok = failures.is_empty();
    ctx.emit(json!({"order": square.order(), "pairs_checked": checked, "failures": failures}), text)?;
    if checked == 0 {
        return Err(Failure::Invariant("square has no transversal to check".into()));
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Invariant("claim failures".into()))
    }
}

fn experiment(ctx: &Ctx, path: &Path) -> CmdResult {
    let text = read_input(path)?;
    let mut config = parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    config.parallel &= ctx.parallel;
    let report = run_experiment(&config)?;
    let (body, name) = match ctx.format {
        OutFormat::Txt => (report.to_csv(), "report.csv"),
        OutFormat::Json => {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).ok();
            (report.to_json(now), "report.json")
        }
    };
    ctx.write(&body, Some(name))?;
    if report.ok {
        Ok(())
    } else {
        let bad: Vec<&str> = report.rows.iter().filter(|r| !r.invariants_ok).map(|r| r.instance.as_str()).collect();
        Err(Failure::Invariant(format!("invariants failed for {}", bad.join(", "))))
    }
}

fn run(cli: Cli) -> CmdResult {
    let ctx = Ctx { seed: cli.seed, format: cli.format, out: cli.out, parallel: !cli.serial };
    match &cli.command {
        Command::Gen { kind, n, moves, base, timeout } => gen(&ctx, *kind, *n, *moves, *base, *timeout),
        Command::Validate { file } => validate(&ctx, file),
        Command::Count { file, guard, list } => count(&ctx, file, *guard, *list),
        Command::Estimate { file, samples, order } => estimate(&ctx, file, *samples, *order),
        Command::Construct(args) => construct(&ctx, args),
        Command::Pad { construct, target } => pad(&ctx, construct, *target),
        Command::Bounds { d, n, square, guard } => bounds(&ctx, *d, n, square.as_deref(), *guard),
        Command::VerifyClaims { file, pairs } => verify_claims(&ctx, file, *pairs),
        Command::Experiment { config } => experiment(&ctx, config),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("latrans: invariant failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("latrans: {msg}");
            ExitCode::from(2)
        }
    }
}
