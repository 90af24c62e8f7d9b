//! Command-line front end: solve instances, benchmark suites, inspect
//! LP relaxations, generate and validate instance files.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mkp::bench::{self, AggregateStats, RunResult};
use mkp::ea::{EaConfig, Mode, MutationPolicy};
use mkp::instance::{self, MkpInstance, ValueRange};
use mkp::lp::{self, LpStatus};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_DATA: u8 = 2;
const EXIT_LP: u8 = 3;
const EXIT_FLAGS: u8 = 4;

#[derive(Parser)]
#[command(name = "mkp", version, about = "Weight-coded evolutionary algorithms for the multidimensional knapsack problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm on one instance over several seeds and emit CSV
    Solve(SolveArgs),
    /// Run algorithms across all instances of one or more files
    Bench(BenchArgs),
    /// Print the LP relaxation (optionally hyperplane-constrained)
    Lp(LpArgs),
    /// Generate a random instance file in OR-Library format
    Gen(GenArgs),
    /// Check well-statedness of instances in a file
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Iwcea,
    Wcea,
}

impl AlgoArg {
    fn mode(self) -> Mode {
        match self {
            AlgoArg::Iwcea => Mode::Iwcea,
            AlgoArg::Wcea => Mode::Wcea,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    PerGene,
    SingleGene,
}

#[derive(Args, Clone)]
struct EaArgs {
    /// Population size
    #[arg(long, default_value_t = 100)]
    pop_size: usize,
    /// Evaluation budget per run (accepted candidates)
    #[arg(long, default_value_t = 1_000_000)]
    max_evals: u64,
    /// Log-normal biasing intensity (WCEA)
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Independent runs per instance
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Base seed; run i uses seed base+i
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads for independent runs
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the mode's default mutation policy
    #[arg(long, value_enum)]
    mutation: Option<MutationArg>,
    /// Consecutive duplicate rejections before a run stops as converged
    #[arg(long, default_value_t = 100_000)]
    duplicate_cap: u64,
}

impl EaArgs {
    fn config(&self, mode: Mode) -> Result<EaConfig, String> {
        if self.pop_size < 2 {
            return Err("--pop-size must be at least 2".into());
        }
        if self.max_evals < 1 {
            return Err("--max-evals must be at least 1".into());
        }
        if self.runs < 1 {
            return Err("--runs must be at least 1".into());
        }
        // also rejects NaN
        if self.gamma <= 0.0 || self.gamma.is_nan() {
            return Err("--gamma must be positive".into());
        }
        let mut cfg = EaConfig::new(mode, self.seed);
        cfg.pop_size = self.pop_size;
        cfg.max_evals = self.max_evals;
        cfg.gamma = self.gamma;
        cfg.duplicate_cap = self.duplicate_cap;
        if let Some(m) = self.mutation {
            cfg.mutation = match m {
                MutationArg::PerGene => MutationPolicy::PerGene,
                MutationArg::SingleGene => MutationPolicy::SingleGene,
            };
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (OR-Library token layout)
    #[arg(long)]
    instance: PathBuf,
    /// Instance index within the file
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, value_enum, default_value = "iwcea")]
    algo: AlgoArg,
    #[command(flatten)]
    ea: EaArgs,
    /// Write CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files; every instance in each file is run
    #[arg(long, required = true, num_args = 1..)]
    instance: Vec<PathBuf>,
    /// Algorithms to run (defaults to both)
    #[arg(long, value_enum, num_args = 1..)]
    algo: Option<Vec<AlgoArg>>,
    #[command(flatten)]
    ea: EaArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LpArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Add the cardinality constraint sum x_j = K
    #[arg(long)]
    hyperplane: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Tightness ratio in (0,1): capacities are alpha times the row sums
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    profit_min: u32,
    #[arg(long, default_value_t = 1000)]
    profit_max: u32,
    #[arg(long, default_value_t = 0)]
    cons_min: u32,
    #[arg(long, default_value_t = 1000)]
    cons_max: u32,
    /// Chu-Beasley style: profits correlated with average consumption
    #[arg(long, default_value_t = false)]
    cb_style: bool,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Repair violations (drop slack rows, fix oversized items to 0)
    /// and print the repaired instance
    #[arg(long, default_value_t = false)]
    preprocess: bool,
}

fn load_instances(path: &Path) -> Result<Vec<MkpInstance>, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_DATA
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "orlib".into());
    instance::parse_orlib_named(&text, &stem).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_DATA
    })
}

fn pick_instance(path: &Path, index: usize) -> Result<MkpInstance, u8> {
    let mut instances = load_instances(path)?;
    if index >= instances.len() {
        eprintln!(
            "error: {} holds {} instance(s), index {index} out of range",
            path.display(),
            instances.len()
        );
        return Err(EXIT_DATA);
    }
    Ok(instances.swap_remove(index))
}

fn require_well_stated(inst: &MkpInstance) -> Result<(), u8> {
    let report = instance::validate(inst);
    if !report.is_well_stated() {
        eprintln!("error: instance {} is not well-stated:", inst.name);
        print_violations(&report);
        eprintln!("hint: run `mkp validate --preprocess` to repair it");
        return Err(EXIT_DATA);
    }
    Ok(())
}

fn print_violations(report: &instance::ValidationReport) {
    for v in &report.violations {
        match v.kind {
            instance::ViolationKind::NonpositiveProfit => {
                eprintln!("  nonpositive profit at item {}", v.item)
            }
            instance::ViolationKind::ItemExceedsCapacity => eprintln!(
                "  item {} exceeds capacity of constraint {} on its own",
                v.item, v.constraint
            ),
            instance::ViolationKind::SlackConstraint => {
                eprintln!("  constraint {} is slack for the full item set", v.constraint)
            }
        }
    }
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), u8> {
    match output {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_DATA
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn solve_instance_runs(
    inst: &MkpInstance,
    mode: Mode,
    ea: &EaArgs,
) -> Result<(Vec<RunResult>, AggregateStats), u8> {
    let cfg = ea.config(mode).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })?;
    let results = bench::run_many(inst, &cfg, ea.runs, ea.seed, ea.jobs).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_LP
    })?;
    let agg = bench::aggregate(&results, inst.known_best).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_LP
    })?;
    Ok((results, agg))
}

fn cmd_solve(args: &SolveArgs) -> Result<(), u8> {
    let inst = pick_instance(&args.instance, args.index)?;
    require_well_stated(&inst)?;
    let (results, agg) = solve_instance_runs(&inst, args.algo.mode(), &args.ea)?;
    let mut out = bench::emit_runs_csv(&results).expect("nonempty results");
    out.push_str(&bench::emit_aggregate_csv(std::slice::from_ref(&agg)).expect("one aggregate"));
    emit(&args.output, &out)
}

fn cmd_bench(args: &BenchArgs) -> Result<(), u8> {
    let modes: Vec<Mode> = args
        .algo
        .clone()
        .unwrap_or_else(|| vec![AlgoArg::Iwcea, AlgoArg::Wcea])
        .into_iter()
        .map(AlgoArg::mode)
        .collect();
    let mut all_runs = Vec::new();
    let mut all_aggs = Vec::new();
    for path in &args.instance {
        for inst in load_instances(path)? {
            require_well_stated(&inst)?;
            for &mode in &modes {
                let (runs, agg) = solve_instance_runs(&inst, mode, &args.ea)?;
                all_runs.extend(runs);
                all_aggs.push(agg);
            }
        }
    }
    let mut out = bench::emit_runs_csv(&all_runs).expect("nonempty results");
    out.push_str(&bench::emit_aggregate_csv(&all_aggs).expect("nonempty aggregates"));
    emit(&args.output, &out)
}

fn cmd_lp(args: &LpArgs) -> Result<(), u8> {
    let inst = pick_instance(&args.instance, args.index)?;
    require_well_stated(&inst)?;
    let mut lp = lp::relax_mkp(&inst);
    if let Some(k) = args.hyperplane {
        lp = lp::with_hyperplane(&lp, k).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_FLAGS
        })?;
    }
    let sol = lp::solve(&lp).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_LP
    })?;
    println!("instance: {}", inst.name);
    println!("status: {:?}", sol.status);
    if sol.status != LpStatus::Optimal {
        return Ok(());
    }
    println!("objective: {:.9}", sol.objective);
    for (j, &x) in sol.x.iter().enumerate() {
        let fractional = x > 1e-9 && x < 1.0 - 1e-9;
        println!(
            "x[{j}] = {x:.9}{}",
            if fractional { "  (fractional)" } else { "" }
        );
    }
    for (i, &y) in sol.row_duals.iter().enumerate() {
        println!("dual[{i}] = {y:.9}");
    }
    if let Some(y) = sol.equality_dual {
        println!("dual[hyperplane] = {y:.9}");
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), u8> {
    if args.n < 1 || args.m < 1 {
        eprintln!("error: --n and --m must be at least 1");
        return Err(EXIT_FLAGS);
    }
    let result = if args.cb_style {
        instance::generate_cb_style(args.n, args.m, args.alpha, args.seed)
    } else {
        instance::generate_random(
            args.n,
            args.m,
            args.alpha,
            ValueRange::new(args.profit_min, args.profit_max),
            ValueRange::new(args.cons_min, args.cons_max),
            args.seed,
        )
    };
    let inst = result.map_err(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })?;
    let text = instance::serialize_orlib(std::slice::from_ref(&inst));
    emit(&args.out, &text)
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), u8> {
    let instances = load_instances(&args.instance)?;
    let mut any_bad = false;
    for inst in &instances {
        let report = instance::validate(inst);
        if report.is_well_stated() {
            println!("{}: well-stated", inst.name);
        } else {
            any_bad = true;
            println!("{}: {} violation(s)", inst.name, report.violations.len());
            print_violations(&report);
            if args.preprocess {
                match instance::preprocess(inst) {
                    Ok(pre) => {
                        println!(
                            "  repaired: dropped constraints {:?}, fixed items {:?}",
                            pre.dropped_constraints, pre.fixed_zero_items
                        );
                        print!("{}", instance::serialize_orlib(&[pre.instance]));
                    }
                    Err(e) => {
                        eprintln!("  cannot repair: {e}");
                        return Err(EXIT_DATA);
                    }
                }
            }
        }
    }
    if any_bad && !args.preprocess {
        return Err(EXIT_DATA);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not flag errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_FLAGS,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Lp(args) => cmd_lp(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(code) => ExitCode::from(code),
    }
}
