//! `jetspace` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible or degraded
//! result, 3 solver failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jetspace::error::Error;
use jetspace::harness::{
    constructive_vs_optimal, finiteness_experiment, two_point_finiteness_check, ExperimentConfig, ExperimentKind,
    FinitenessReport,
};
use jetspace::io::{
    self, BasisOutput, ExperimentOutput, FieldSpec, HellyInput, InstanceSpec, MetricInput, MetricOutput,
    SelectOutput, TreeInput, WhitneyOutput,
};
use jetspace::metric::ChainSearch;
use jetspace::selection::{
    bounded_constructive_selection, build_tree, constructive_selection, helly_check_containing,
    min_lambda_selection, selection_feasible, ConstructiveOptions, SelectionResult, TreeOptions, TreeStrategy,
};
use jetspace::whitney::{lipschitz_orlicz_norm, wg_feasibility_check};

#[derive(Parser)]
#[command(name = "jetspace", version, about = "Jet-space metrics, Whitney norms and Lipschitz selection")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input JSON file.
    #[arg(long, short)]
    input: PathBuf,
    /// Output file (default: stdout).
    #[arg(long, short, alias = "out")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Heuristic,
    Exhaustive,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Two-point quantity, one-point quantity and the chain-metric interval.
    Metric {
        #[command(flatten)]
        io: Io,
        /// Seed for the chain search; required when the input asks for one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Whitney–Glaeser and Lipschitz–Orlicz norms of a field.
    Whitney {
        #[command(flatten)]
        io: Io,
        /// Also check both conditions at this λ.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Lipschitz selection.
    Select {
        #[command(flatten)]
        io: Io,
        /// Feasibility at a fixed λ.
        #[arg(long, group = "mode")]
        lambda: Option<f64>,
        /// Optimal λ.
        #[arg(long, group = "mode")]
        min_lambda: bool,
        /// Tree construction under the subset hypothesis with this K.
        #[arg(long, group = "mode", value_name = "K")]
        constructive: Option<f64>,
        /// Tree construction inside the pointwise bound K.
        #[arg(long, group = "mode", value_name = "K")]
        bounded: Option<f64>,
        /// Accepted for uniformity; selection is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Required tree degree for the construction.
        #[arg(long)]
        tree_degree: Option<usize>,
    },
    /// Distortion tree with a high-degree vertex.
    Tree {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        required_degree: Option<usize>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Brute-force Helly check on a family of polytopes.
    Helly {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        subset_size: Option<usize>,
    },
    /// Seeded finiteness experiments.
    Experiment {
        /// Experiment configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Report file (default: stdout).
        #[arg(long, alias = "output")]
        out: Option<PathBuf>,
        /// Per-trial CSV (finiteness experiments only).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// JSON schemas of every input and output, and the basis order.
    Schema {
        #[arg(long, short, alias = "out")]
        output: Option<PathBuf>,
        /// With `--n`, print the multiindex order of P_k on ℝⁿ.
        #[arg(long, requires = "n")]
        k: Option<usize>,
        #[arg(long, requires = "k")]
        n: Option<usize>,
    },
}

/// A failure with its exit code.
struct Fail {
    code: u8,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) | Error::Bracket { .. } | Error::NotMonotone { .. } => 3,
            Error::Hypothesis(_) => 2,
            _ => 1,
        };
        Fail {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Fail {
    Fail {
        code: 1,
        message: message.into(),
    }
}

type Outcome = Result<u8, Fail>;

fn read(path: &Path) -> Result<Vec<u8>, Fail> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Fail> {
    let bytes = read(path)?;
    io::parse(&bytes).map_err(|e| {
        let mut f = Fail::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn emit<T: Serialize>(path: Option<&Path>, body: &T) -> Result<(), Fail> {
    write_out(path, &io::to_json(body)?)
}

fn metric(io_args: &Io, seed: Option<u64>) -> Outcome {
    let input: MetricInput = parse(&io_args.input)?;
    let (ctx, jets) = input.build()?;
    let (t0, t1) = (&jets[0], &jets[jets.len() - 1]);
    let chain_upper = match input.search {
        Some(s) => {
            let seed = seed.ok_or_else(|| usage("the chain search needs --seed"))?;
            let opts = ChainSearch {
                max_links: s.max_links,
                restarts: s.restarts,
                sweeps: s.sweeps,
                seed,
            };
            Some(ctx.chain_upper_bound_search(t0, t1, &opts)?)
        }
        None => None,
    };
    let contraction = match input.contraction_lambda {
        Some(l) => Some(ctx.chain_contraction_check(&jets, l)?),
        None => None,
    };
    let interval = ctx.chain_metric_bounds(t0, t1)?;
    let out = MetricOutput {
        d_prime: ctx.two_point_delta(t0, t1)?,
        one_point: ctx.one_point_delta(t0, t1)?,
        interval_lower: interval.lower,
        interval_upper: interval.upper,
        heuristic_upper: chain_upper,
        contraction,
    };
    emit(io_args.output.as_deref(), &out)?;
    eprintln!("d′ = {}, interval [{}, {}]", out.d_prime, out.interval_lower, out.interval_upper);
    let finite = out.d_prime.is_finite() && out.one_point.is_finite();
    let contraction_ok = out.contraction.as_ref().map_or(true, |c| !c.hypotheses_hold || c.conclusion_holds);
    Ok(if finite && contraction_ok { 0 } else { 2 })
}

fn whitney(io_args: &Io, lambda: Option<f64>) -> Outcome {
    let input: FieldSpec = parse(&io_args.input)?;
    let field = input.build()?;
    let norms = lipschitz_orlicz_norm(&field);
    let feasibility = match lambda.or(input.lambda) {
        Some(l) => Some(wg_feasibility_check(&field, l)?),
        None => None,
    };
    let out = WhitneyOutput { norms, feasibility };
    emit(io_args.output.as_deref(), &out)?;
    eprintln!("lambda_star = {}, sup_part = {}", out.norms.lambda_star, out.norms.sup_part);
    let feasible = out.feasibility.as_ref().map_or(true, |f| f.nd_ok && f.dp_ok);
    Ok(if out.norms.lambda_star.is_finite() && feasible { 0 } else { 2 })
}

fn selected(r: &SelectionResult) -> SelectOutput {
    SelectOutput {
        feasible: true,
        method: Some(r.method),
        lambda_used: Some(r.lambda_used),
        polys: Some(r.field.polys().iter().map(|p| p.coeffs().to_vec()).collect()),
        certificate: Some(r.certificate.clone()),
        hypothesis_violation: None,
    }
}

fn infeasible() -> SelectOutput {
    SelectOutput {
        feasible: false,
        method: None,
        lambda_used: None,
        polys: None,
        certificate: None,
        hypothesis_violation: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn select(
    io_args: &Io,
    lambda: Option<f64>,
    min_lambda: bool,
    constructive: Option<f64>,
    bounded: Option<f64>,
    tree_degree: Option<usize>,
) -> Outcome {
    let spec: InstanceSpec = parse(&io_args.input)?;
    let inst = spec.build()?;
    let opts = ConstructiveOptions {
        tree_degree,
        ..ConstructiveOptions::default()
    };
    let run = |k: f64, is_bounded: bool| -> Result<SelectOutput, Fail> {
        let r = if is_bounded {
            bounded_constructive_selection(&inst, k, opts)
        } else {
            constructive_selection(&inst, k, opts)
        };
        match r {
            Ok(r) => Ok(selected(&r)),
            Err(Error::Hypothesis(v)) => Ok(SelectOutput {
                hypothesis_violation: Some(*v),
                ..infeasible()
            }),
            Err(e) => Err(e.into()),
        }
    };
    let out = if let Some(l) = lambda {
        selection_feasible(&inst, l)?.map_or_else(infeasible, |r| selected(&r))
    } else if min_lambda {
        selected(&min_lambda_selection(&inst)?.1)
    } else if let Some(k) = constructive {
        run(k, false)?
    } else if let Some(k) = bounded {
        run(k, true)?
    } else {
        return Err(usage("select needs one of --lambda, --min-lambda, --constructive, --bounded"));
    };
    emit(io_args.output.as_deref(), &out)?;
    let ok = out.feasible && out.certificate.as_ref().is_some_and(|c| c.membership_ok);
    let ok = ok
        && out
            .certificate
            .as_ref()
            .and_then(|c| c.constructive.as_ref())
            .map_or(true, |c| c.bound_ok);
    match (&out.lambda_used, &out.hypothesis_violation) {
        (Some(l), _) => eprintln!("selection found, lambda = {l}"),
        (None, Some(v)) => eprintln!("hypothesis violated: {v}"),
        (None, None) => eprintln!("no selection at the given lambda"),
    }
    Ok(if ok { 0 } else { 2 })
}

fn tree(io_args: &Io, required: Option<usize>, strategy: Option<StrategyArg>) -> Outcome {
    let input: TreeInput = parse(&io_args.input)?;
    let strategy = match strategy {
        Some(StrategyArg::Heuristic) => TreeStrategy::Heuristic,
        Some(StrategyArg::Exhaustive) => TreeStrategy::Exhaustive,
        Some(StrategyArg::Auto) => TreeStrategy::Auto,
        None => input.strategy.unwrap_or(TreeStrategy::Heuristic),
    };
    let opts = TreeOptions {
        strategy,
        eta_budget: input.eta_budget,
    };
    let t = build_tree(&input.points, required.or(input.required_degree), opts)?;
    emit(io_args.output.as_deref(), &t)?;
    eprintln!("eta = {}, max degree {} (required {})", t.eta_observed, t.max_degree, t.required_degree);
    Ok(if t.degraded || !t.dominates { 2 } else { 0 })
}

fn helly(io_args: &Io, subset_size: Option<usize>) -> Outcome {
    let input: HellyInput = parse(&io_args.input)?;
    let size = subset_size.or(input.subset_size).unwrap_or(input.dim + 1);
    let r = helly_check_containing(&input.sets, input.dim, size, input.must_contain)?;
    emit(io_args.output.as_deref(), &r)?;
    eprintln!(
        "{} subfamilies checked; all intersect: {}; global: {}",
        r.subfamilies_checked, r.all_subfamilies_intersect, r.global_intersects
    );
    Ok(if r.global_intersects { 0 } else { 2 })
}

fn write_csv(path: &Path, report: &FinitenessReport) -> Result<(), Fail> {
    let mut w = csv::Writer::from_path(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    let fail = |e: csv::Error| usage(format!("{}: {e}", path.display()));
    w.write_record(["trial", "N_used", "subsets_feasible", "lambda_global", "gamma"])
        .map_err(fail)?;
    for t in &report.trials {
        w.write_record([
            t.trial.to_string(),
            t.n_used.to_string(),
            t.subsets_feasible.to_string(),
            t.lambda_global.to_string(),
            t.gamma.map_or_else(String::new, |g| g.to_string()),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn experiment(config: &Path, out: Option<&Path>, csv_path: Option<&Path>, seed: Option<u64>) -> Outcome {
    let mut cfg: ExperimentConfig = parse(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if csv_path.is_some() && cfg.experiment != ExperimentKind::Finiteness {
        return Err(usage("--csv is only available for finiteness experiments"));
    }
    let mut report = ExperimentOutput {
        experiment: cfg.experiment,
        finiteness: None,
        two_point: None,
        constructive: None,
    };
    let ok = match cfg.experiment {
        ExperimentKind::Finiteness => {
            let r = finiteness_experiment(&cfg)?;
            if let Some(p) = csv_path {
                write_csv(p, &r)?;
            }
            eprintln!(
                "N = {}, {} / {} trials with all subsets feasible, gamma_max = {:?}, {} counterexamples",
                r.n_used,
                r.all_subsets_feasible_count,
                r.trials_run,
                r.gamma_max,
                r.counterexamples.len()
            );
            let ok = r.counterexamples.is_empty();
            report.finiteness = Some(r);
            ok
        }
        ExperimentKind::TwoPoint => {
            let r = two_point_finiteness_check(&cfg)?;
            eprintln!("{} / {} trials agree", r.agreements, r.trials_run);
            let ok = r.violations == 0;
            report.two_point = Some(r);
            ok
        }
        ExperimentKind::Constructive => {
            let r = constructive_vs_optimal(&cfg)?;
            eprintln!("all checks passed: {}, ratio_max = {:?}", r.all_ok, r.ratio_max);
            let ok = r.all_ok;
            report.constructive = Some(r);
            ok
        }
    };
    emit(out, &report)?;
    Ok(if ok { 0 } else { 2 })
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Metric { io, seed } => metric(io, *seed),
        Command::Whitney { io, lambda } => whitney(io, *lambda),
        Command::Select {
            io,
            lambda,
            min_lambda,
            constructive,
            bounded,
            seed: _,
            tree_degree,
        } => select(io, *lambda, *min_lambda, *constructive, *bounded, *tree_degree),
        Command::Tree {
            io,
            required_degree,
            strategy,
        } => tree(io, *required_degree, *strategy),
        Command::Helly { io, subset_size } => helly(io, *subset_size),
        Command::Experiment { config, out, csv, seed } => experiment(config, out.as_deref(), csv.as_deref(), *seed),
        Command::Schema { output, k, n } => {
            let basis = match (k, n) {
                (Some(k), Some(n)) => Some(BasisOutput::new(*k, *n)?),
                _ => None,
            };
            emit(output.as_deref(), &io::schema_document(basis))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("JETS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            log::debug!("exit {}", f.code);
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
