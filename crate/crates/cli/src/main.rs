use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blowup_core::counting::{count_canonical_copies, count_labeled_copies};
use blowup_core::experiment::{load_pattern, run_experiment, rows_to_csv, ExperimentConfig, ExperimentKind};
use blowup_core::finder::{find_blowup, find_blowup_partite};
use blowup_core::formats::{MaxBlowupJson, RichJson, WitnessJson};
use blowup_core::generate::{gen_blowup, gen_gnp, gen_random_coloring, rng};
use blowup_core::oracle::max_blowup_exact;
use blowup_core::ramsey::{find_monochromatic_rich_inflation, ramsey_blowup};
use blowup_core::rational;
use blowup_core::{
    Coloring, Error, FinderOptions, Graph, InflationCertificate, Mode, PartSystem, RamseyOptions, Result,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "blowup", version, about = "Large blowups of triangle-free patterns and monochromatic inflations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PatternArg {
    /// Pattern file or `builtin:{k2,p3,p4,c4,c5,petersen}`.
    #[arg(long)]
    pattern: String,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "adaptive")]
    mode: Mode,
    #[arg(long, default_value_t = 64)]
    retries: usize,
    /// Directory for the JSON output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Count labeled copies, or canonical copies with `--parts`.
    Count {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        graph: PathBuf,
        /// One part per line, whitespace-separated vertices.
        #[arg(long)]
        parts: Option<PathBuf>,
    },
    /// Find a blowup of the pattern in a graph.
    FindBlowup {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        graph: PathBuf,
        /// Restrict class `i` to part `i` of this file.
        #[arg(long)]
        parts: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Find a monochromatic blowup in an edge coloring.
    Ramsey {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_target: usize,
        /// Print the rich clique inflation instead of the blowup.
        #[arg(long)]
        rich: bool,
        /// Accuracy parameter of the rich inflation search.
        #[arg(long, default_value = "1/10")]
        eps: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Exact maximum blowup by branch and bound.
    OracleMax {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 64)]
        k_cap: usize,
        #[arg(long, default_value_t = 1_000_000_000)]
        node_budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate graphs and colorings.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run an experiment sweep and write versioned CSV plus witnesses.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Erdős–Rényi `G(n, p)`.
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The blowup `H[k]` with classes in index blocks.
    Blowup {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uniform random `q`-coloring of `K_N`.
    Coloring {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; the flags below build one when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "experiment")]
    name: String,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ExperimentKind>,
    #[arg(long)]
    pattern: Option<String>,
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Comma-separated edge probabilities.
    #[arg(long, value_delimiter = ',')]
    probabilities: Vec<String>,
    /// Comma-separated color counts.
    #[arg(long, value_delimiter = ',')]
    colors: Vec<usize>,
    /// Seeds as `a..b` or a comma-separated list.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, default_value = "adaptive")]
    mode: Mode,
    #[arg(long, default_value_t = 64)]
    retries: usize,
    #[arg(long, default_value_t = 1_000_000_000)]
    node_budget: u64,
    #[arg(long, default_value_t = 64)]
    k_cap: usize,
    #[arg(long, default_value_t = 0)]
    oracle_max_n: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown kind `{s}` (scaling, upper_bound, ramsey)"))
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidInput(format!("cannot parse seeds `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn read_graph(path: &Path) -> Result<Graph> {
    Graph::read(open(path)?)
}

fn read_parts(path: &Path, n: usize) -> Result<PartSystem> {
    PartSystem::read(n, open(path)?)
}

fn emit(value: &serde_json::Value, out: Option<&Path>, file: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), &text)?;
    }
    print_stdout(&format!("{text}\n"))
}

/// Writes to stdout, treating a closed pipe as success.
fn print_stdout(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_text(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = io::BufWriter::new(File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            if let Err(e) = write(&mut io::stdout().lock()) {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Count { pattern, graph, parts } => {
            let pattern = load_pattern(&pattern.pattern)?;
            let g = read_graph(&graph)?;
            let value = match parts {
                Some(path) => {
                    let parts = read_parts(&path, g.vertex_count())?;
                    let count = count_canonical_copies(&g, &pattern, &parts)?.count;
                    let cert = InflationCertificate::new(parts, count);
                    json!({ "pattern": pattern.name(), "canonical": cert.summary(), "min_part_size": cert.min_part_size })
                }
                None => {
                    let labeled = count_labeled_copies(&g, &pattern)?;
                    json!({ "pattern": pattern.name(), "n": g.vertex_count(), "labeled_count": labeled.to_string() })
                }
            };
            emit(&value, None, "")
        }
        Command::FindBlowup { pattern, graph, parts, search } => {
            let pattern = load_pattern(&pattern.pattern)?;
            let g = read_graph(&graph)?;
            let opts = FinderOptions {
                retries: search.retries,
                ..FinderOptions::default()
            };
            let mut r = rng(search.seed);
            let mode = search.mode.to_string();
            let value = match parts {
                Some(path) => {
                    let parts = read_parts(&path, g.vertex_count())?;
                    let w = find_blowup_partite(&g, &pattern, &parts, search.mode, &mut r, &opts)?;
                    let count = count_canonical_copies(&g, &pattern, &parts)?.count;
                    json!(&WitnessJson::new(&pattern, &w, &mode, search.seed, &InflationCertificate::new(parts, count)))
                }
                None => {
                    let rep = find_blowup(&g, &pattern, search.mode, &mut r, &opts)?;
                    let json = match &rep.certificate {
                        Some(cert) => WitnessJson::new(&pattern, &rep.witness, &mode, search.seed, cert),
                        None => WitnessJson::self_certified(&g, &pattern, &rep.witness, &mode, search.seed)?,
                    };
                    let mut v = json!(&json);
                    v["k_theory"] = json!(rep.k_theory);
                    v["route"] = json!(&rep.route);
                    v
                }
            };
            emit(&value, search.out.as_deref(), "witness.json")
        }
        Command::Ramsey { pattern, coloring, k_target, rich, eps, search } => {
            let pattern = load_pattern(&pattern.pattern)?;
            let coloring = Coloring::read(open(&coloring)?)?;
            let opts = RamseyOptions {
                retries: search.retries,
                finder: FinderOptions {
                    retries: search.retries,
                    ..FinderOptions::default()
                },
                ..RamseyOptions::default()
            };
            let mut r = rng(search.seed);
            let mode = search.mode.to_string();
            if rich {
                let eps = rational::parse(&eps)?;
                let found = find_monochromatic_rich_inflation(&coloring, pattern.vertex_count(), &eps, search.mode, &mut r, &opts)?;
                let mut v = json!(&RichJson::new(&found.rich, &mode, search.seed));
                v["rounds"] = json!(found.state.as_ref().map_or(0, |s| s.t));
                return emit(&v, search.out.as_deref(), "rich.json");
            }
            let rep = ramsey_blowup(&coloring, &pattern, k_target, search.mode, &mut r, &opts)?;
            let g = coloring.class_graph(rep.color);
            let mut v = json!(&WitnessJson::self_certified(g, &pattern, &rep.witness, &mode, search.seed)?);
            v["color"] = json!(rep.color);
            v["route"] = json!(&rep.route);
            emit(&v, search.out.as_deref(), "witness.json")
        }
        Command::OracleMax { pattern, graph, k_cap, node_budget, out } => {
            let pattern = load_pattern(&pattern.pattern)?;
            let g = read_graph(&graph)?;
            let result = max_blowup_exact(&g, &pattern, k_cap, node_budget);
            emit(&json!(&MaxBlowupJson::new(&g, &pattern, &result, 0)?), out.as_deref(), "max_blowup.json")?;
            if result.complete {
                Ok(())
            } else {
                Err(Error::BudgetExhausted(format!(
                    "search stopped after {} nodes; k_max = {} is a lower bound",
                    result.nodes_explored, result.k_max
                )))
            }
        }
        Command::Gen { what } => match what {
            GenCommand::Gnp { n, p, seed, out } => {
                let p = rational::to_f64(&rational::parse(&p)?);
                let g = gen_gnp(n, p, seed)?;
                write_text(out.as_deref(), |w| g.write(w))
            }
            GenCommand::Blowup { pattern, k, out } => {
                let pattern = load_pattern(&pattern.pattern)?;
                let g = gen_blowup(&pattern, k)?;
                write_text(out.as_deref(), |w| g.write(w))
            }
            GenCommand::Coloring { n, q, seed, out } => {
                let c = gen_random_coloring(n, q, seed)?;
                write_text(out.as_deref(), |w| c.write(w))
            }
        },
        Command::Experiment(args) => {
            let cfg = match &args.config {
                Some(path) => serde_json::from_reader(open(path)?)
                    .map_err(|e| Error::InvalidInput(format!("bad config: {e}")))?,
                None => ExperimentConfig {
                    name: args.name.clone(),
                    kind: args
                        .kind
                        .ok_or_else(|| Error::InvalidInput("--kind or --config is required".into()))?,
                    pattern: args
                        .pattern
                        .clone()
                        .ok_or_else(|| Error::InvalidInput("--pattern or --config is required".into()))?,
                    sizes: args.sizes.clone(),
                    probabilities: args.probabilities.clone(),
                    colors: args.colors.clone(),
                    seeds: parse_seeds(&args.seeds)?,
                    mode: args.mode,
                    retries: args.retries,
                    node_budget: args.node_budget,
                    tuple_budget: 100_000,
                    k_cap: args.k_cap,
                    oracle_max_n: args.oracle_max_n,
                    k_target: 2,
                },
            };
            let output = run_experiment(&cfg, Some(&args.out), args.workers)?;
            print_stdout(&rows_to_csv(&output.rows)?)?;
            if let Some(dir) = output.dir {
                eprintln!("wrote {}", dir.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
