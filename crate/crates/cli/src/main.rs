//! `evoform` command-line driver.
//!
//! Exit status: 0 on success, 1 on runtime errors, 2 on usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evoform_core::codec::{CodecConfig, DEFAULT_DEPTH};
use evoform_core::expression::{displace, emit_source, evaluate, genome_tree, ExpressionTree};
use evoform_core::harness::{parse_seeds, run_scenario, Scenario};
use evoform_core::mesh::{displace_mesh, export_obj, load_obj};
use evoform_core::{snippet, ChannelMask, GaParams, Genome, TimeParam, Vertex};
use evoform_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(
    name = "evoform",
    version,
    about = "Collaborative interactive evolution of vertex displacement programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the expression tree and shader snippet a genome decodes to.
    Decode {
        hex: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u32,
    },
    /// Evaluate a genome or snippet at one vertex.
    Eval {
        #[arg(required_unless_present = "snippet", conflicts_with = "snippet")]
        hex: Option<String>,
        /// Read a `p.<swizzle> = p.<swizzle> + (...);` statement from a file.
        #[arg(long)]
        snippet: Option<PathBuf>,
        #[arg(long, value_parser = parse_vertex, allow_hyphen_values = true)]
        vertex: Vertex,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        time: f64,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u32,
    },
    /// Displace every vertex of an OBJ mesh.
    Displace {
        obj: PathBuf,
        hex: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        time: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u32,
    },
    /// Run a simulated-user scenario and write per-generation best errors as CSV.
    Simulate {
        scenario: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's seed list, e.g. `1-5`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        generations: Option<u64>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        params: ParamFlags,
    },
}

/// GA parameter overrides, named as in config and scenario files.
#[derive(Debug, Args)]
struct ParamFlags {
    #[arg(long = "population_size", alias = "population-size")]
    population_size: Option<String>,
    #[arg(long = "crossover_rate", alias = "crossover-rate")]
    crossover_rate: Option<String>,
    #[arg(long = "mutation_rate", alias = "mutation-rate")]
    mutation_rate: Option<String>,
    #[arg(long = "scaling_c", alias = "scaling-c")]
    scaling_c: Option<String>,
    #[arg(long = "pick_fitness", alias = "pick-fitness")]
    pick_fitness: Option<String>,
    #[arg(long = "floor_fitness", alias = "floor-fitness")]
    floor_fitness: Option<String>,
    #[arg(long = "bias_generations", alias = "bias-generations")]
    bias_generations: Option<String>,
}

impl ParamFlags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields = [
            ("population_size", &self.population_size),
            ("crossover_rate", &self.crossover_rate),
            ("mutation_rate", &self.mutation_rate),
            ("scaling_c", &self.scaling_c),
            ("pick_fitness", &self.pick_fitness),
            ("floor_fitness", &self.floor_fitness),
            ("bias_generations", &self.bias_generations),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    fn apply(&self, params: &mut GaParams) -> Result<()> {
        for (key, value) in self.pairs() {
            params.set(key, value)?;
        }
        params.validate()?;
        Ok(())
    }
}

fn parse_vertex(text: &str) -> Result<Vertex, String> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad coordinate '{c}'"))
        })
        .collect::<Result<_, _>>()?;
    match coords[..] {
        [x, y, z] => Ok(Vertex::new(x, y, z)),
        _ => Err(format!("expected x,y,z, found '{text}'")),
    }
}

fn genome(hex: &str, depth: u32) -> Result<Genome> {
    let config = CodecConfig::new(depth)?;
    Genome::from_hex(hex.trim(), config)
        .with_context(|| format!("cannot decode genome at depth {depth}"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn coords(v: &Vertex) -> String {
    format!("{},{},{}", v.x, v.y, v.z)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Decode { hex, depth } => {
            let genome = genome(&hex, depth)?;
            let tree = genome_tree(&genome);
            println!("depth: {depth}");
            println!("space: {}", genome.space());
            println!("channels: {}", genome.channels());
            println!("tree: {}", tree.render());
            println!("{}", emit_source(&tree, genome.channels())?);
        }
        Command::Eval {
            hex,
            snippet: file,
            vertex,
            time,
            depth,
        } => {
            let (mask, tree): (ChannelMask, ExpressionTree) = match (hex, file) {
                (_, Some(path)) => snippet::parse_statement(&read(&path)?)
                    .with_context(|| format!("cannot parse {}", path.display()))?,
                (Some(hex), None) => {
                    let genome = genome(&hex, depth)?;
                    (genome.channels(), genome_tree(&genome))
                }
                (None, None) => bail!("a genome or --snippet is required"),
            };
            let t = TimeParam::new(time);
            println!("value: {}", evaluate(&tree, &vertex, t));
            println!("displaced: {}", coords(&displace(&tree, mask, &vertex, t)?));
        }
        Command::Displace {
            obj,
            hex,
            time,
            out,
            depth,
        } => {
            let mesh =
                load_obj(&read(&obj)?).with_context(|| format!("cannot load {}", obj.display()))?;
            let genome = genome(&hex, depth)?;
            let displaced = displace_mesh(
                &mesh,
                &genome_tree(&genome),
                genome.channels(),
                TimeParam::new(time),
            )?;
            std::fs::write(&out, export_obj(&displaced))
                .with_context(|| format!("cannot write {}", out.display()))?;
            eprintln!(
                "wrote {} vertices to {}",
                displaced.vertices().len(),
                out.display()
            );
        }
        Command::Simulate {
            scenario,
            out,
            seeds,
            generations,
            params,
        } => {
            let mut scenario = Scenario::parse(&read(&scenario)?)
                .with_context(|| format!("cannot load scenario {}", scenario.display()))?;
            if let Some(seeds) = seeds {
                scenario.seeds = parse_seeds(&seeds)?;
            }
            if let Some(g) = generations {
                scenario.generations = g;
            }
            params.apply(&mut scenario.params)?;
            scenario.validate()?;
            let csv = run_scenario(&scenario)?.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Serve {
            config,
            port,
            seed,
            params,
        } => {
            let mut cfg = match config {
                Some(path) => ServiceConfig::load(&path)?,
                None => ServiceConfig::default(),
            };
            cfg.apply_env(std::env::vars())?;
            if let Some(port) = port {
                cfg.port = port;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            params.apply(&mut cfg.params)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(evoform_service::serve(cfg))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
