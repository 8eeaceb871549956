use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use twnet::decomposition::PaddedPartition;
use twnet::fixtures::{exact_decomposition, min_degree_decomposition, EXACT_LIMIT};
use twnet::net::packing_profile;
use twnet::tree::{td_to_tree_partition, TreeDecomposition};
use twnet::verify::{default_gammas, verify_embedding, verify_pipeline, Metric, Status, VerifyConfig, DEFAULT_ORACLE_CAP};
use twnet::{Error, Pipeline, WeightedGraph};

#[derive(Parser)]
#[command(name = "twnet", version, about = "Tree-ordered nets, padded decompositions and sparse covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Weighted edge list (`p ge <n> <m>`, `e <u> <v> <w>`).
    #[arg(long)]
    graph: PathBuf,
    /// Tree decomposition in PACE `.td` format. Computed if omitted.
    #[arg(long)]
    td: Option<PathBuf>,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Scale {
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a tree decomposition into a tree partition of an isometric host.
    Convert {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
    },
    /// Build a tree-ordered net and report its packing profile.
    Net {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
    },
    /// Sample padded decompositions.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of samples, with seeds `seed, seed+1, ...`.
        #[arg(long, default_value_t = 1)]
        samples: u64,
    },
    /// Build a sparse cover.
    Cover {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
    },
    /// Build a padded partition cover.
    PartitionCover {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
    },
    /// Run every check and report.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Padding scale; repeat for several. Defaults to δ/4, δ/2, δ.
        #[arg(long)]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        /// Decomposition samples checked for validity.
        #[arg(long, default_value_t = 100)]
        samples: u64,
    },
    /// Monte Carlo padding probabilities over a grid of scales.
    PaddingEstimate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        gamma: Vec<f64>,
    },
}

fn located(path: &Path, e: Error) -> anyhow::Error {
    match e {
        Error::Parse { line: 0, message } => anyhow!("{}: {message}", path.display()),
        Error::Parse { line, message } => anyhow!("{}:{line}: {message}", path.display()),
        other => anyhow!("{}: {other}", path.display()),
    }
}

struct Loaded {
    graph: WeightedGraph,
    td: TreeDecomposition,
    td_source: &'static str,
}

fn load(input: &Input) -> anyhow::Result<Loaded> {
    let text = fs::read_to_string(&input.graph).with_context(|| format!("reading {}", input.graph.display()))?;
    let graph = WeightedGraph::parse_edge_list(&text).map_err(|e| located(&input.graph, e))?;
    let (td, td_source) = match &input.td {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (TreeDecomposition::parse_pace(&text, &graph).map_err(|e| located(path, e))?, "file")
        }
        None if graph.vertex_count() <= EXACT_LIMIT => (exact_decomposition(&graph)?, "exact"),
        None => (min_degree_decomposition(&graph)?, "min-degree"),
    };
    Ok(Loaded { graph, td, td_source })
}

fn pipeline(input: &Input, scale: &Scale) -> anyhow::Result<(Pipeline, &'static str)> {
    let l = load(input)?;
    Ok((Pipeline::new(l.graph, l.td, scale.delta, scale.alpha)?, l.td_source))
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn embedding_json(p: &Pipeline) -> Value {
    json!({
        "host_vertices": p.host().vertex_count(),
        "forward": p.embedding.forward,
        "origin": p.embedding.origin,
    })
}

fn convert(input: &Input, oracle_cap: usize) -> anyhow::Result<Value> {
    let l = load(input)?;
    let emb = td_to_tree_partition(&l.graph, &l.td)?;
    let metric = Metric::compute(&l.graph, oracle_cap);
    let report = verify_embedding(&l.graph, &l.td, &emb, &metric);
    let isometry = report.get("embedding.isometry").expect("isometry check");
    let status = |s: Status| if s == Status::Pass { "pass" } else { "fail" };
    let tp = &emb.partition;
    Ok(json!({
        "command": "convert",
        "vertices": l.graph.vertex_count(),
        "edges": l.graph.edge_count(),
        "td_source": l.td_source,
        "width": tp.width(),
        "width_report": emb.width_report(&l.td),
        "isometry": status(isometry.status),
        "isometry_max_error": isometry.measured,
        "oracle": metric.method,
        "checks": report.checks,
        "host": {
            "vertices": emb.host.vertex_count(),
            "edges": emb.host.edges().iter().map(|&(u, v, w)| json!([u, v, w])).collect::<Vec<_>>(),
        },
        "partition": {
            "bags": tp.bags(),
            "parent": tp.tree().parents(),
        },
        "forward": emb.forward,
        "origin": emb.origin,
    }))
}

fn net(input: &Input, scale: &Scale) -> anyhow::Result<Value> {
    let (p, td_source) = pipeline(input, scale)?;
    let net = p.net();
    let profile = packing_profile(p.host(), net, &net.net, p.delta, &[1.0, 2.0, 3.0, p.alpha])?;
    let mut projected: Vec<usize> = net.net.iter().map(|x| p.embedding.origin[x]).collect();
    projected.sort_unstable();
    projected.dedup();
    Ok(json!({
        "command": "net",
        "td_source": td_source,
        "embedding": embedding_json(&p),
        "net": p.build.export(),
        "packing": profile,
        "net_vertices": projected,
    }))
}

fn decompose(input: &Input, scale: &Scale, seed: u64, samples: u64) -> anyhow::Result<Value> {
    if samples == 0 {
        return Err(anyhow!("--samples must be at least 1"));
    }
    let (p, td_source) = pipeline(input, scale)?;
    let sampler = p.sampler()?;
    let partitions = (0..samples)
        .map(|i| p.sample(&sampler, seed.wrapping_add(i)).map(|(_, g)| g))
        .collect::<twnet::Result<Vec<PaddedPartition>>>()?;
    Ok(json!({
        "command": "decompose",
        "td_source": td_source,
        "params": sampler.params(),
        "partitions": partitions,
    }))
}

fn cover(input: &Input, scale: &Scale) -> anyhow::Result<Value> {
    let (p, td_source) = pipeline(input, scale)?;
    let (_, cover) = p.sparse_cover()?;
    Ok(json!({ "command": "cover", "td_source": td_source, "cover": cover }))
}

fn partition_cover(input: &Input, scale: &Scale) -> anyhow::Result<Value> {
    let (p, td_source) = pipeline(input, scale)?;
    let (_, pc) = p.partition_cover()?;
    Ok(json!({ "command": "partition-cover", "td_source": td_source, "partition_cover": pc }))
}

fn padding_estimate(input: &Input, scale: &Scale, seed: u64, trials: u64, gamma: &[f64]) -> anyhow::Result<Value> {
    let (p, td_source) = pipeline(input, scale)?;
    let sampler = p.sampler()?;
    let gammas = if gamma.is_empty() { default_gammas(sampler.params().delta_param) } else { gamma.to_vec() };
    let estimates = p.padding_estimate(&sampler, &gammas, trials, seed)?;
    Ok(json!({
        "command": "padding-estimate",
        "td_source": td_source,
        "seed": seed,
        "trials": trials,
        "params": sampler.params(),
        "estimates": estimates,
    }))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (out, value) = match &cli.command {
        Command::Convert { input, oracle_cap } => (&input.out, convert(input, *oracle_cap)?),
        Command::Net { input, scale } => (&input.out, net(input, scale)?),
        Command::Decompose { input, scale, seed, samples } => (&input.out, decompose(input, scale, *seed, *samples)?),
        Command::Cover { input, scale } => (&input.out, cover(input, scale)?),
        Command::PartitionCover { input, scale } => (&input.out, partition_cover(input, scale)?),
        Command::PaddingEstimate { input, scale, seed, trials, gamma } => {
            (&input.out, padding_estimate(input, scale, *seed, *trials, gamma)?)
        }
        Command::Verify { input, scale, seed, trials, gamma, oracle_cap, samples } => {
            if *trials == 0 {
                return Err(anyhow!("--trials must be at least 1"));
            }
            let (p, td_source) = pipeline(input, scale)?;
            let cfg = VerifyConfig {
                oracle_cap: *oracle_cap,
                seed: *seed,
                samples: *samples,
                trials: *trials,
                gammas: gamma.clone(),
            };
            let (report, method) = verify_pipeline(&p, &cfg)?;
            let count = |s: Status| report.checks.iter().filter(|c| c.status == s).count();
            let value = json!({
                "command": "verify",
                "td_source": td_source,
                "oracle": method,
                "passed": !report.has_failures(),
                "summary": { "pass": count(Status::Pass), "warn": count(Status::Warn), "fail": count(Status::Fail) },
                "checks": report.checks,
            });
            // the table goes wherever the JSON does not
            if input.out.is_some() {
                print!("{}", report.table());
            } else {
                eprint!("{}", report.table());
            }
            emit(input.out.as_deref(), &value)?;
            return Ok(if report.has_failures() { ExitCode::from(1) } else { ExitCode::SUCCESS });
        }
    };
    emit(out.as_deref(), &value)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
