use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use block_gossip::covering::{self, RowCovering};
use block_gossip::gossip;
use block_gossip::graph::{self, Graph};
use block_gossip::harness::{self, ExperimentConfig};
use block_gossip::Result;

#[derive(Parser)]
#[command(
    name = "block-gossip",
    version,
    about = "Block gossip and block Kaczmarz experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list.
    GenerateGraph(GenerateGraph),
    /// Build a row covering for a graph file and print its constants.
    BuildCovering(BuildCovering),
    /// Run one protocol: errors.csv, result.json, optionally collapse.csv.
    Run(Experiment),
    /// Run every protocol listed in `coverings`: compare.csv, compare.json.
    Compare(Experiment),
    /// Run one protocol over `p_grid`: errors_p{p}.csv per value, sweep.json.
    Sweep(Experiment),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Er,
    Lattice,
    Complete,
    Path,
}

#[derive(Args)]
struct GenerateGraph {
    #[arg(long, value_enum)]
    kind: GraphKind,
    /// Node count (er, complete, path).
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoveringKind {
    Ies,
    Clique,
    Path,
    Random,
}

#[derive(Args)]
struct BuildCovering {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    kind: CoveringKind,
    /// Path length in edges (path).
    #[arg(long)]
    length: Option<usize>,
    /// Block size (random).
    #[arg(long)]
    size: Option<usize>,
    /// Number of blocks before patching; defaults to the edge count.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Experiment {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Record trial 0's node values.
    #[arg(long)]
    collapse: bool,
}

impl Experiment {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.base_seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(iters) = self.iters {
            config.iterations = iters;
        }
        config.record_collapse |= self.collapse;
        config.check()?;
        Ok(config)
    }
}

fn missing(flag: &str) -> block_gossip::Error {
    block_gossip::Error::InvalidParameter(format!("--{flag} is required for this kind"))
}

fn generate_graph(args: &GenerateGraph) -> Result<()> {
    let n = || args.n.ok_or_else(|| missing("n"));
    let g = match args.kind {
        GraphKind::Er => graph::generate_erdos_renyi(n()?, args.p.ok_or_else(|| missing("p"))?, args.seed)?,
        GraphKind::Lattice => graph::generate_square_lattice(
            args.rows.ok_or_else(|| missing("rows"))?,
            args.cols.ok_or_else(|| missing("cols"))?,
        )?,
        GraphKind::Complete => graph::generate_complete(n()?)?,
        GraphKind::Path => graph::generate_path(n()?)?,
    };
    g.save(&args.out)?;
    println!(
        "{} nodes, {} edges -> {}",
        g.node_count(),
        g.edge_count(),
        args.out.display()
    );
    Ok(())
}

fn build_covering(args: &BuildCovering) -> Result<()> {
    let g = Graph::load(&args.graph)?;
    let count = args.count.unwrap_or(g.edge_count());
    let c: RowCovering = match args.kind {
        CoveringKind::Ies => covering::greedy_ies_cover(&g)?,
        CoveringKind::Clique => covering::greedy_clique_cover(&g)?,
        CoveringKind::Path => {
            covering::random_path_cover(&g, args.length.ok_or_else(|| missing("length"))?, count, args.seed)?
        }
        CoveringKind::Random => {
            covering::random_block_cover(&g, args.size.ok_or_else(|| missing("size"))?, count, args.seed)?
        }
    };
    covering::validate(&c)?;
    let k = covering::constants(&c, &g)?;
    c.save(&args.out)?;
    println!("d = {}", k.block_count);
    println!("alpha = {}", k.alpha);
    println!("beta = {}", k.beta);
    println!("r = {}", k.min_multiplicity);
    println!("R = {}", k.max_multiplicity);
    println!("M = {}", k.max_block_size);
    println!("rate = {}", gossip::gossip_rate_bound(&k, &g)?);
    Ok(())
}

fn report(files: &[PathBuf], started: Instant) {
    for f in files {
        println!("wrote {}", f.display());
    }
    println!("wall time {:.3} s", started.elapsed().as_secs_f64());
}

fn dispatch(cli: Cli) -> Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::GenerateGraph(args) => generate_graph(&args),
        Command::BuildCovering(args) => build_covering(&args),
        Command::Run(args) => {
            let (result, written) = harness::cmd_run(&args.load()?)?;
            println!(
                "rate = {}, horizon = {}, final mean error = {}",
                result.rate,
                result.horizon,
                result.aggregate.mean.last().copied().unwrap_or(f64::NAN)
            );
            report(&written.files, started);
            Ok(())
        }
        Command::Compare(args) => {
            let (result, written) = harness::cmd_compare(&args.load()?)?;
            for p in &result.protocols {
                println!(
                    "{}: rate = {}, final mean error = {}",
                    p.label, p.rate, p.final_mean_error
                );
            }
            for label in &result.excluded {
                println!("{label}: excluded (single block)");
            }
            report(&written.files, started);
            Ok(())
        }
        Command::Sweep(args) => {
            let (points, written) = harness::cmd_sweep(&args.load()?)?;
            for p in &points {
                println!(
                    "p = {}: rate = {}, final mean error = {}",
                    p.p, p.rate, p.final_mean_error
                );
            }
            report(&written.files, started);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
