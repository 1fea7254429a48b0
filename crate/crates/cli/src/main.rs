use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use bipmap::bijection::validate_map;
use bipmap::continuum::{brownian_excursion, snake_head, snake_head_sequential, stable_label_field, stable_proxy_excursion, MAX_DENSE_GRID};
use bipmap::io::{
    decode_tree, encode_tree, read_law, read_map_records, read_tree_json, write_edge_list, write_jsonl_header,
    write_map_record, write_path_csv, write_tree_json, LawFile, LoadedLaw, MapRecord, MAP_SCHEMA,
};
use bipmap::labels::label_tree;
use bipmap::metrics::{radius_delta_profile, sample_replicate, scaling_sweep};
use bipmap::seed::{rng_for, Stage};
use bipmap::trees::{sample_conditioned, ConditioningSpec, OffspringSet};
use bipmap::weights::{make_stable_offspring, normalizer};

#[derive(Parser)]
#[command(name = "bipmap", version, about = "Critical Boltzmann bipartite maps: sampling and statistics")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight sequence utilities.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// Sample a size-conditioned labelled tree.
    SampleTree {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = TreeFormat::Json)]
        format: TreeFormat,
    },
    /// Sample maps as JSONL records.
    SampleMap {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        reps: u64,
    },
    /// Radius, root distance and sizes of every map in a JSONL file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Radius exponent sweep, one CSV row per replicate.
    ScalingSweep {
        #[arg(long)]
        law: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Cond::Vertices)]
        cond: Cond,
        /// Comma-separated sizes, e.g. 1e3,2e3,4e3.
        #[arg(long, value_delimiter = ',', value_parser = parse_size)]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
    /// Continuum reference path as CSV (t, X, H, L).
    ContinuumRef {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Number of jumps kept in the label series (alpha < 2).
        #[arg(long, default_value_t = 50)]
        jumps: usize,
        /// Jumps smaller than this (after rescaling) are ignored.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        /// Tail start of the offspring law used for the proxy walk.
        #[arg(long, default_value_t = 1)]
        cutoff: usize,
    },
    /// Convert between file formats.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: ExportFormat,
    },
}

#[derive(Subcommand)]
enum WeightsAction {
    /// Classify a weight sequence and describe its offspring law.
    Check { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Law file; the quadrangulation weights when absent.
    #[arg(long)]
    law: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Cond::Vertices)]
    cond: Cond,
    #[arg(long, value_parser = parse_size)]
    n: usize,
}

/// Size conditioning of the map.
#[derive(Clone, Copy, ValueEnum)]
enum Cond {
    /// `n - 1` edges: the tree has `n` vertices.
    Edges,
    /// `n + 1` vertices: the tree has `n` leaves.
    Vertices,
    /// `n` faces: the tree has `n` internal vertices.
    Faces,
}

impl Cond {
    fn set(self) -> OffspringSet {
        match self {
            Cond::Edges => OffspringSet::All,
            Cond::Vertices => OffspringSet::Leaves,
            Cond::Faces => OffspringSet::Internal,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Cond::Edges => "edges",
            Cond::Vertices => "vertices",
            Cond::Faces => "faces",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Json,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    /// Map JSONL to edge lists, one block per map.
    Edges,
    /// Tree JSON to the binary frame.
    TreeBin,
    /// Binary tree frame to JSON.
    TreeJson,
}

fn parse_size(s: &str) -> Result<usize, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if v < 1.0 || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("not a positive integer: {s}"));
    }
    Ok(v as usize)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_law(path: &Option<PathBuf>) -> Result<LoadedLaw> {
    let file = match path {
        Some(p) => read_law(open(p)?).with_context(|| format!("reading law {}", p.display()))?,
        None => LawFile::Finite { weights: [("2".to_string(), 1.0 / 12.0)].into() },
    };
    Ok(file.load()?)
}

/// The size relations between the conditioning and the map.
fn check_sizes(cond: Cond, n: usize, record: &MapRecord) -> Result<()> {
    let map = &record.map;
    let (what, got, want) = match cond {
        Cond::Edges => ("edges", map.edge_count(), n - 1),
        Cond::Vertices => ("vertices", map.vertex_count, n + 1),
        Cond::Faces => ("faces", map.faces().count(), n),
    };
    ensure!(got == want, "replicate {}: map has {got} {what}, expected {want}", record.replicate);
    let report = validate_map(map);
    ensure!(report.passed(), "replicate {}: {:?}", record.replicate, report.failures().collect::<Vec<_>>());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let seed = cli.seed;
    let mut out = output(&cli.out)?;
    match cli.command {
        Command::Weights { action: WeightsAction::Check { file } } => {
            let lf = read_law(open(&file)?)?;
            let q = lf.weights()?.context("weights check needs a weight sequence (finite or power_tail)")?;
            let report = bipmap::weights::classify(&q, 1e-10)?;
            let mut summary = serde_json::json!({ "report": report });
            if report.is_critical() {
                let law = bipmap::weights::offspring_law(&q, &report)?;
                summary["offspring"] = serde_json::json!({
                    "mean": law.mean(),
                    "variance": law.variance(),
                    "alpha": law.alpha(),
                    "leaf_mass": law.pmf(0),
                });
            }
            serde_json::to_writer_pretty(&mut out, &summary)?;
            writeln!(out)?;
            out.flush()?;
            if !report.is_critical() {
                std::process::exit(1);
            }
        }
        Command::SampleTree { run, format } => {
            let law = load_law(&run.law)?.law;
            let spec = ConditioningSpec::new(run.cond.set(), run.n);
            let tree = sample_conditioned(&law, &spec, &mut rng_for(seed, run.n as u64, 0, Stage::Tree))?;
            let lt = label_tree(&tree, &mut rng_for(seed, run.n as u64, 0, Stage::Labels));
            match format {
                TreeFormat::Json => {
                    write_tree_json(&mut out, &lt)?;
                    writeln!(out)?;
                }
                TreeFormat::Bin => out.write_all(&encode_tree(&lt))?,
            }
        }
        Command::SampleMap { run, reps } => {
            let law = load_law(&run.law)?.law;
            let spec = ConditioningSpec::new(run.cond.set(), run.n);
            let records = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let (_, map, _) = sample_replicate(&law, &spec, seed, rep)?;
                    let rec = MapRecord { seed, n: run.n, cond: run.cond.name().into(), replicate: rep, map };
                    check_sizes(run.cond, run.n, &rec)?;
                    Ok(rec)
                })
                .collect::<Result<Vec<_>>>()?;
            write_jsonl_header(&mut out, MAP_SCHEMA)?;
            for rec in &records {
                write_map_record(&mut out, rec)?;
            }
        }
        Command::Stats { input } => {
            let records = read_map_records(open(&input)?)?;
            writeln!(out, "seed,n,cond,replicate,vertices,edges,faces,radius,delta")?;
            for rec in records {
                let rp = radius_delta_profile(&rec.map);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    rec.seed,
                    rec.n,
                    rec.cond,
                    rec.replicate,
                    rec.map.vertex_count,
                    rec.map.edge_count(),
                    rec.map.faces().count(),
                    rp.radius,
                    rp.delta
                )?;
            }
        }
        Command::ScalingSweep { law, cond, ns, reps } => {
            ensure!(ns.len() >= 2, "a sweep needs at least two sizes");
            let law = load_law(&law)?.law;
            let result = scaling_sweep(&law, cond.set(), &ns, reps, seed)?;
            if result.few_replicates {
                eprintln!("warning: fewer than 100 replicates per size; error bars are unreliable");
            }
            writeln!(out, "seed,n,cond,replicate,zeta,radius,delta,leaves,runtime_secs,slope,slope_se")?;
            for r in &result.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                    r.seed,
                    r.n,
                    cond.name(),
                    r.replicate,
                    r.zeta,
                    r.radius,
                    r.delta,
                    r.leaves,
                    r.runtime_secs,
                    result.slope,
                    result.slope_se
                )?;
            }
            eprintln!("slope {:.4} ± {:.4}", result.slope, result.slope_se);
        }
        Command::ContinuumRef { alpha, grid, jumps, threshold, cutoff } => {
            let mut rng = rng_for(seed, grid as u64, 0, Stage::Continuum);
            let path = if alpha == 2.0 {
                let mut p = brownian_excursion(grid, &mut rng)?;
                p.l = if grid <= MAX_DENSE_GRID { snake_head(&p.h, &mut rng)? } else { snake_head_sequential(&p.h, &mut rng)? };
                p
            } else {
                let law = make_stable_offspring(alpha, cutoff)?;
                let mut p = stable_proxy_excursion(&law, grid, 100_000_000, &mut rng)?;
                let field = stable_label_field(&p, jumps, threshold, &mut rng)?;
                if let Some(w) = &field.warning {
                    eprintln!("warning: {w}");
                }
                eprintln!(
                    "jumps used {}, tail bound {:.4}, B_m {:.3}",
                    field.jumps.len(),
                    field.tail_bound,
                    normalizer(&law).b(grid as u64)
                );
                p.l = field.l;
                p
            };
            write_path_csv(&mut out, &path)?;
        }
        Command::Export { input, to } => match to {
            ExportFormat::Edges => {
                for (i, rec) in read_map_records(open(&input)?)?.iter().enumerate() {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    write_edge_list(&mut out, &rec.map)?;
                }
            }
            ExportFormat::TreeBin => out.write_all(&encode_tree(&read_tree_json(open(&input)?)?))?,
            ExportFormat::TreeJson => {
                let mut bytes = Vec::new();
                open(&input)?.read_to_end(&mut bytes)?;
                write_tree_json(&mut out, &decode_tree(&bytes)?)?;
                writeln!(out)?;
            }
        },
    }
    out.flush()?;
    Ok(())
}
