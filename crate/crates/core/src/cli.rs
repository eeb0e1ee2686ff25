//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::graph::{dense_adjacency, load_graph, Graph};
use crate::ktuple::{cartesian_operator, k_factor_adjacency, k_point_adjacency, tuple_nodes};
use crate::model::{save_parameters, PoolVariant};
use crate::pe::{concatenation_pe, k_tuple_pe, node_mark_indices, product_pe, PEMatrix};
use crate::pipeline::{self, ForwardConfig};
use crate::product::{ProductGraphBundle, SamplingMask};
use crate::sparse::SparseAdjacency;
use crate::verify::{run_verify_jobs, VerifyScale};

#[derive(Debug, Parser)]
#[command(
    name = "subgraph-product",
    version,
    about = "Product-graph tools for node-marking subgraph GNNs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the product-graph adjacencies of a graph as COO text files.
    BuildProduct(BuildProductArgs),
    /// Compute a positional encoding.
    Pe(PeArgs),
    /// Print node-marking distance indices.
    Mark(MarkArgs),
    /// Run a seeded encoder + attention stack and print the pooled vector.
    Forward(ForwardArgs),
    /// Draw a subgraph sampling mask and report the masked adjacencies.
    Sample(SampleArgs),
    /// Run the self-verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct BuildProductArgs {
    /// Graph JSON file.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub tuple_order: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeVariant {
    Product,
    Concat,
    Tuple(usize),
}

impl FromStr for PeVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "product" => Ok(Self::Product),
            "concat" => Ok(Self::Concat),
            _ => s
                .strip_prefix("tuple:")
                .and_then(|k| k.parse().ok())
                .map(Self::Tuple)
                .ok_or_else(|| format!("expected product, concat or tuple:K, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct PeArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "product")]
    pub variant: PeVariant,
    /// Write the matrix here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MarkArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    pub graph: PathBuf,
    /// Product PE columns.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hidden width.
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = crate::model::sab::DEFAULT_HEADS)]
    pub heads: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value = "sum_sum")]
    pub pool: PoolVariant,
    #[arg(long)]
    pub sample_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    /// Save parameters to `<stem>.bin` and `<stem>.json`.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    /// Write the positional encoding used by the run.
    #[arg(long)]
    pub pe_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the masked adjacencies as COO files here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    pub scale: VerifyScale,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Runs a parsed command, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::BuildProduct(args) => build_product(&args),
        Command::Pe(args) => pe(&args),
        Command::Mark(args) => mark(&args),
        Command::Forward(args) => forward(&args),
        Command::Sample(args) => sample(&args),
        Command::Verify(args) => return verify(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_graph(path: &Path) -> Result<Graph> {
    load_graph(fs::File::open(path)?)
}

fn write_coo(dir: &Path, name: &str, adj: &SparseAdjacency) -> Result<()> {
    let path = dir.join(format!("{name}.coo"));
    fs::write(&path, adj.to_coo_string())?;
    println!("{} nnz={}", path.display(), adj.nnz());
    Ok(())
}

fn build_product(args: &BuildProductArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let order = args.tuple_order;
    if order < 2 {
        return Err(Error::Range(format!("tuple order must be at least 2, got {order}")));
    }
    if order > 2 {
        tuple_nodes(g.n(), order)?;
    }
    fs::create_dir_all(&args.out)?;
    if order == 2 {
        let bundle = ProductGraphBundle::new(&g);
        write_coo(&args.out, "internal", &bundle.internal)?;
        write_coo(&args.out, "external", &bundle.external)?;
        return write_coo(&args.out, "point", &bundle.point);
    }
    let a = dense_adjacency(&g);
    for slot in 0..order {
        let dense = k_factor_adjacency(a.view(), slot, order)?;
        write_coo(
            &args.out,
            &format!("slot_{}", slot + 1),
            &SparseAdjacency::from_dense(dense.view())?,
        )?;
    }
    let union = cartesian_operator(a.view(), order)?;
    write_coo(&args.out, "union", &SparseAdjacency::from_dense(union.view())?)?;
    for free in 1..=order {
        write_coo(
            &args.out,
            &format!("point_{free}"),
            &k_point_adjacency(g.n(), order, free)?,
        )?;
    }
    Ok(())
}

fn pe(args: &PeArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let pe: PEMatrix = match args.variant {
        PeVariant::Product => product_pe(&g, args.k)?,
        PeVariant::Concat => concatenation_pe(&g, args.k)?,
        PeVariant::Tuple(order) => k_tuple_pe(&g, order, args.k)?,
    };
    let labels: Vec<String> = pe.eigenvalues.iter().map(|x| x.to_string()).collect();
    println!("{}", labels.join(" "));
    match &args.out {
        Some(path) => fs::write(path, pe.to_text())?,
        None => print!("{}", pe.to_text()),
    }
    Ok(())
}

fn mark(args: &MarkArgs) -> Result<()> {
    let marks = node_mark_indices(&read_graph(&args.graph)?);
    match &args.out {
        Some(path) => fs::write(path, marks.to_text())?,
        None => print!("{}", marks.to_text()),
    }
    Ok(())
}

fn forward(args: &ForwardArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let config = ForwardConfig {
        pe_dim: args.k,
        width: args.d,
        heads: args.heads,
        layers: args.layers,
        pool: args.pool,
        seed: args.seed,
        ..ForwardConfig::default()
    };
    let model = config.build(&g)?;
    let mask = args
        .sample_ratio
        .map(|r| SamplingMask::sample(g.n(), r, args.sample_seed))
        .transpose()?;
    let (pooled, pe) = pipeline::forward_traced(&g, &model, &config, mask.as_ref())?;
    let values: Vec<String> = pooled.iter().map(|x| x.to_string()).collect();
    println!("{}", values.join(" "));
    if let Some(stem) = &args.params_out {
        save_parameters(&model, stem)?;
    }
    if let Some(path) = &args.pe_out {
        fs::write(path, pe.to_text())?;
    }
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let mask = SamplingMask::sample(g.n(), args.ratio, args.seed)?;
    let roots: Vec<String> = mask.sampled().iter().map(usize::to_string).collect();
    println!("{}", roots.join(" "));
    let masked = ProductGraphBundle::new(&g).masked(&mask)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_coo(dir, "internal", &masked.internal)?;
            write_coo(dir, "external", &masked.external)?;
            write_coo(dir, "point", &masked.point)?;
        }
        None => println!(
            "internal nnz={} external nnz={} point nnz={}",
            masked.internal.nnz(),
            masked.external.nnz(),
            masked.point.nnz()
        ),
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> i32 {
    let report = run_verify_jobs(args.scale, args.jobs);
    print!("{}", report.to_text());
    if report.passed() {
        0
    } else {
        for failure in report.failures() {
            eprintln!("check failed: {}", failure.name);
        }
        1
    }
}
