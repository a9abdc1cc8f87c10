//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anytime_bn::abstraction::{SplitStrategy, WeightingPolicy};
use anytime_bn::anytime::{abstract_iter, AnytimeConfig, ClockMode, Control};
use anytime_bn::bench::{bench_policies, write_bench, BenchConfig};
use anytime_bn::inference::{evaluate_exact, marginals_by_enumeration};
use anytime_bn::io::{read_network, read_summary, write_network, write_trace_dir};
use anytime_bn::models::{gen_chain, gen_commuter, gen_traffic, ParamStyle, TrafficConfig};
use anytime_bn::network::{validate_network, Evidence, Network};
use anytime_bn::plot::render_plot;
use anytime_bn::Error;

#[derive(Debug, Parser)]
#[command(name = "anytime-bn", version, about = "Anytime Bayesian-network evaluation by state-space abstraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network document and print its topological order.
    Validate { net: PathBuf },
    /// Print exact marginals.
    Query {
        net: PathBuf,
        #[command(flatten)]
        evidence: EvidenceArgs,
        /// Use brute-force enumeration instead of variable elimination.
        #[arg(long)]
        oracle: bool,
    },
    /// Run iterative refinement and write summary.csv and nodes.csv.
    Anytime(AnytimeArgs),
    /// Generate a model network.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Compare the average and CF policies on random chains.
    BenchPolicies {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 64)]
        states: usize,
        #[arg(long, value_parser = parse_prior, default_value = "0.5,0.5")]
        root_prior: [f64; 2],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render summary.csv as an SVG line chart.
    Plot {
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EvidenceArgs {
    /// Observations as VAR=STATE, using state labels.
    #[arg(long, num_args = 1..)]
    evidence: Vec<String>,
}

#[derive(Debug, Args)]
struct AnytimeArgs {
    net: PathBuf,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[arg(long, value_enum, default_value_t = PolicyArg::Average)]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::PerNode)]
    strategy: StrategyArg,
    #[arg(long)]
    budget_ms: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Score every iteration against exact marginals of the full network.
    #[arg(long)]
    score: bool,
    /// Record the iteration index as elapsed time.
    #[arg(long)]
    fixed_clock: bool,
    /// Label for the run_id column; defaults to the network name.
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Average,
    Cf,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    PerNode,
    Single,
    Skew,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StyleArg {
    Uniform,
    Skewed,
    Deterministic,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    Commuter {
        #[arg(long, default_value_t = 8)]
        states: usize,
        #[arg(long, value_enum, default_value_t = StyleArg::Uniform)]
        style: StyleArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Traffic {
        #[arg(long, default_value_t = 5)]
        stages: usize,
        #[arg(long, default_value_t = 24)]
        states: usize,
        /// Dispersion as a fraction of each variable's range.
        #[arg(long, default_value_t = 0.1)]
        sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Chain {
        #[arg(long, default_value_t = 64)]
        states: usize,
        #[arg(long, value_parser = parse_prior, default_value = "0.5,0.5")]
        root_prior: [f64; 2],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_prior(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected p,q but got `{s}`"));
    }
    let p: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let q: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok([p, q])
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::StateSpaceTooLarge { .. } | Error::FactorTooLarge { .. } | Error::Io(_) => 3,
            Error::Csv(c) if c.is_io_error() => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn data_error(message: String) -> Failure {
    Failure { code: 2, message }
}

fn runtime_error(message: String) -> Failure {
    Failure { code: 3, message }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| data_error(format!("cannot read {}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    let (net, report) = read_network(&read_input(path)?)?;
    for w in &report.warnings {
        eprintln!(
            "warning: renormalized row {} of `{}` (sum {})",
            w.row, w.variable, w.sum
        );
    }
    Ok(net)
}

fn parse_evidence(net: &Network, args: &EvidenceArgs) -> Result<Evidence, Failure> {
    let mut pairs = Vec::new();
    for item in &args.evidence {
        let (var, state) = item
            .split_once('=')
            .ok_or_else(|| data_error(format!("evidence `{item}` is not VAR=STATE")))?;
        pairs.push((var, state));
    }
    Ok(Evidence::from_labels(net, pairs)?)
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| runtime_error(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { net } => validate(&net),
        Command::Query {
            net,
            evidence,
            oracle,
        } => query(&net, &evidence, oracle),
        Command::Anytime(args) => anytime(&args),
        Command::Gen(g) => generate(g),
        Command::BenchPolicies {
            trials,
            states,
            root_prior,
            seed,
            out,
        } => {
            eprintln!(
                "config: bench-policies trials={trials} states={states} root_prior={},{} seed={seed} out={}",
                root_prior[0],
                root_prior[1],
                out.display()
            );
            let rows = bench_policies(&BenchConfig {
                trials,
                states,
                root_prior,
                seed,
            })?;
            let mut buf = Vec::new();
            write_bench(&rows, &mut buf)?;
            write_output(&out, &String::from_utf8_lossy(&buf))
        }
        Command::Plot { summary, out } => {
            eprintln!("config: plot summary={} out={}", summary.display(), out.display());
            let rows = read_summary(read_input(&summary)?.as_bytes())?;
            let svg = render_plot(&rows)?;
            write_output(&out, &svg)
        }
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let mut draft = anytime_bn::io::parse_network(&read_input(path)?)?;
    let report = validate_network(&mut draft);
    for w in &report.warnings {
        println!(
            "warning: renormalized row {} of `{}` (sum {})",
            w.row, w.variable, w.sum
        );
    }
    if report.is_valid() {
        println!("valid: {} variables", draft.variables.len());
        println!("order: {}", report.order.join(", "));
        Ok(())
    } else {
        for e in &report.errors {
            println!("error: {e}");
        }
        Err(data_error(format!(
            "{} has {} violation(s)",
            path.display(),
            report.errors.len()
        )))
    }
}

fn query(path: &Path, args: &EvidenceArgs, oracle: bool) -> Result<(), Failure> {
    let net = load_network(path)?;
    let evidence = parse_evidence(&net, args)?;
    let marginals = if oracle {
        marginals_by_enumeration(&net, &evidence)?
    } else {
        evaluate_exact(&net, &evidence)?
    };
    for (v, var) in net.variables().iter().enumerate() {
        let cells: Vec<String> = var
            .states
            .iter()
            .zip(&marginals.probs[v])
            .map(|(s, p)| format!("{s}={p:.9}"))
            .collect();
        let tag = if marginals.evidence[v] { " (evidence)" } else { "" };
        println!("{}{tag}: {}", var.name, cells.join(" "));
    }
    Ok(())
}

fn anytime(args: &AnytimeArgs) -> Result<(), Failure> {
    let net = load_network(&args.net)?;
    let evidence = parse_evidence(&net, &args.evidence)?;
    let policy = match args.policy {
        PolicyArg::Average => WeightingPolicy::Average,
        PolicyArg::Cf => WeightingPolicy::Cf,
        PolicyArg::Exact => WeightingPolicy::exact_marginal(&net)?,
    };
    let strategy = match args.strategy {
        StrategyArg::PerNode => SplitStrategy::PerNode,
        StrategyArg::Single => SplitStrategy::SingleGlobal,
        StrategyArg::Skew => SplitStrategy::Skew,
    };
    let run_id = args.run_id.clone().unwrap_or_else(|| net.name().to_string());
    eprintln!(
        "config: anytime net={} evidence=[{}] policy={} strategy={} budget_ms={} max_iters={} score={} fixed_clock={} run_id={} out={}",
        args.net.display(),
        args.evidence.evidence.join(" "),
        policy.kind(),
        strategy,
        args.budget_ms.map_or("none".into(), |b| b.to_string()),
        args.max_iters.map_or("none".into(), |m| m.to_string()),
        args.score,
        args.fixed_clock,
        run_id,
        args.out.display()
    );

    let score_against = if args.score {
        Some(evaluate_exact(&net, &evidence)?)
    } else {
        None
    };
    let config = AnytimeConfig {
        policy,
        strategy,
        max_iterations: args.max_iters,
        budget: args.budget_ms.map(Duration::from_millis),
        score_against,
        clock: if args.fixed_clock {
            ClockMode::Fixed
        } else {
            ClockMode::Wall
        },
        ..Default::default()
    };
    let trace = abstract_iter(&net, &evidence, &config, |r| {
        let score = r
            .avg_relscore
            .map_or(String::new(), |s| format!(" avg_relscore={s:.6}"));
        println!(
            "iteration {} superstates={} elapsed_ms={:.3}{score}",
            r.iteration,
            r.total_superstates(),
            r.elapsed.as_secs_f64() * 1e3
        );
        Control::Continue
    })?;
    println!("terminated: {}", trace.termination);
    write_trace_dir(&trace, &run_id, &args.out).map_err(|e| runtime_error(e.to_string()))
}

fn generate(command: GenCommand) -> Result<(), Failure> {
    let (net, out) = match command {
        GenCommand::Commuter {
            states,
            style,
            seed,
            out,
        } => {
            let style = match style {
                StyleArg::Uniform => ParamStyle::Uniform,
                StyleArg::Skewed => ParamStyle::skewed(),
                StyleArg::Deterministic => ParamStyle::deterministic(),
            };
            eprintln!(
                "config: gen commuter states={states} style={style:?} seed={seed} out={}",
                out.display()
            );
            (gen_commuter(states, style, seed)?, out)
        }
        GenCommand::Traffic {
            stages,
            states,
            sd,
            seed,
            out,
        } => {
            let config = TrafficConfig::new(stages, states, sd, seed);
            eprintln!("config: gen traffic {config:?} out={}", out.display());
            (gen_traffic(&config)?, out)
        }
        GenCommand::Chain {
            states,
            root_prior,
            seed,
            out,
        } => {
            eprintln!(
                "config: gen chain states={states} root_prior={},{} seed={seed} out={}",
                root_prior[0],
                root_prior[1],
                out.display()
            );
            (gen_chain(states, root_prior, ParamStyle::Uniform, seed)?, out)
        }
    };
    write_output(&out, &write_network(&net))
}
