//! Command-line front end: runs configured experiments, the built-in
//! verification suites, and the standalone graph generator.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opinion_dynamics::{generate, GraphKind, GraphSpec};

use config::{extract_out_dir, validate_config, ResolvedConfig};
use experiments::{run_experiment, Manifest};

#[derive(Parser)]
#[command(
    name = "opdyn",
    version,
    about = "Opinion-dynamics experiments under a limited influence budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or re-run a JSON manifest.
    Run(RunArgs),
    /// Run the built-in mean-field endpoint-ordering sweep.
    VerifyTrichotomy(OutArg),
    /// Run the built-in exact-distribution verification suite.
    Oracle(OutArg),
    /// Generate a graph and write it as an edge list.
    GraphGen(GraphGenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML config file or a previously emitted JSON manifest.
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (default: config's out_dir, else current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GraphGenArgs {
    /// Graph family: complete | d-regular | erdos-renyi | barabasi-albert | hub-spoke.
    #[arg(long)]
    kind: String,
    /// Number of nodes.
    #[arg(long)]
    nodes: usize,
    /// Degree (d-regular only).
    #[arg(long)]
    d: Option<usize>,
    /// Edge probability (erdos-renyi only).
    #[arg(long)]
    edge_prob: Option<f64>,
    /// Edges attached per new node (barabasi-albert only).
    #[arg(long)]
    m_attach: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file for the edge list.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::VerifyTrichotomy(args) => cmd_builtin("kind = \"trichotomy-sweep\"\n", &args.out),
        Command::Oracle(args) => cmd_builtin("kind = \"oracle-verify\"\n", &args.out),
        Command::GraphGen(args) => cmd_graph_gen(args),
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::FAILURE;
        }
    };

    let is_manifest = args.config.extension().is_some_and(|ext| ext == "json")
        || text.trim_start().starts_with('{');
    let (mut cfg, config_out_dir) = if is_manifest {
        match Manifest::from_json(&text) {
            Ok(manifest) => (manifest.config, None),
            Err(e) => {
                eprintln!(
                    "error: cannot parse manifest {}: {e}",
                    args.config.display()
                );
                return ExitCode::FAILURE;
            }
        }
    } else {
        match validate_config(&text) {
            Ok(cfg) => (cfg, extract_out_dir(&text)),
            Err(diags) => {
                for d in &diags {
                    eprintln!("error: {d}");
                }
                eprintln!(
                    "{} configuration error{} in {}",
                    diags.len(),
                    if diags.len() == 1 { "" } else { "s" },
                    args.config.display()
                );
                return ExitCode::from(2);
            }
        }
    };

    if let Some(seed) = args.seed {
        cfg.seed = seed;
        for g in &mut cfg.graphs {
            g.seed = seed;
        }
    }
    if let Some(trials) = args.trials {
        cfg.n_trials = trials;
    }

    let out_dir = args
        .out
        .or(config_out_dir.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    run_and_report(&cfg, &out_dir)
}

fn cmd_builtin(config_text: &str, out_dir: &Path) -> ExitCode {
    let cfg = validate_config(config_text).expect("built-in config is valid");
    run_and_report(&cfg, out_dir)
}

fn run_and_report(cfg: &ResolvedConfig, out_dir: &Path) -> ExitCode {
    match run_experiment(cfg, out_dir) {
        Ok(manifest) => {
            for file in &manifest.outputs {
                println!("wrote {}", out_dir.join(file).display());
            }
            println!(
                "wrote {}",
                out_dir.join(Manifest::file_name(cfg.kind)).display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_graph_gen(args: GraphGenArgs) -> ExitCode {
    let kind = match args.kind.as_str() {
        "complete" => GraphKind::Complete,
        "hub-spoke" => GraphKind::HubSpoke,
        "d-regular" => match args.d {
            Some(d) => GraphKind::DRegular { d },
            None => {
                eprintln!("error: --d is required for d-regular");
                return ExitCode::from(2);
            }
        },
        "erdos-renyi" => match args.edge_prob {
            Some(edge_prob) => GraphKind::ErdosRenyi { edge_prob },
            None => {
                eprintln!("error: --edge-prob is required for erdos-renyi");
                return ExitCode::from(2);
            }
        },
        "barabasi-albert" => match args.m_attach {
            Some(m_attach) => GraphKind::BarabasiAlbert { m_attach },
            None => {
                eprintln!("error: --m-attach is required for barabasi-albert");
                return ExitCode::from(2);
            }
        },
        other => {
            eprintln!(
                "error: unknown graph kind {other:?}; expected complete, d-regular, \
                 erdos-renyi, barabasi-albert, or hub-spoke"
            );
            return ExitCode::from(2);
        }
    };
    let spec = GraphSpec {
        kind,
        node_count: args.nodes,
        seed: args.seed,
    };
    let graph = match generate(&spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = std::fs::write(&args.out, graph.to_edge_list()) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }
    println!(
        "wrote {} nodes, {} edges to {}",
        graph.node_count(),
        graph.edge_count(),
        args.out.display()
    );
    ExitCode::SUCCESS
}
