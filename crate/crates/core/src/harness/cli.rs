//! Command-line front end. Every command writes CSV (or binary files for
//! `gen` / `build`) and is reproducible from its flags and `--seed`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::eval::{cosine_ground_truth, evaluate, EvalReport};
use super::experiments::{
    assignment_rank_csv, linspace, run_assignment_report, run_cost_curve, run_roc, theory_cap_stats,
    theory_cost_curve, theory_mp, theory_roc, to_csv, AssignmentMethod, AssignmentReportConfig, CostConfig,
    CostValidation, RocConfig,
};
use super::io::{read_fvecs, read_id_lists, write_fvecs, write_id_lists};
use crate::assignment::{batch_assignment, random_assignment, spherical_kmeans, BatchConfig, BatchInner, KMeansConfig};
use crate::construction::ConstructionConfig;
use crate::error::{Error, Result};
use crate::model::{Construction, Dataset, QueryModel};
use crate::sampling::{make_clustered_dataset, make_query, make_uniform_dataset, Seed};
use crate::search::{
    binarize, build_index, query_binary, query_with, read_index, write_index, BinaryMode, QueryResult, Rerank,
    UnitSelection,
};

#[derive(Parser, Debug)]
#[command(name = "memvec", version, about = "Memory-vector group testing for similarity search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset or query set (fvecs).
    Gen(GenArgs),
    /// Assign vectors to memory units and write an MVIX index.
    Build(BuildArgs),
    /// Run queries against an index; one CSV row per query.
    Query(QueryArgs),
    /// Score query results against cosine ground truth.
    Eval(EvalArgs),
    /// Analytic tables.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Uniform,
    Clustered,
    Queries,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConstructionArg {
    Sum,
    Pinv,
    Both,
}

impl ConstructionArg {
    fn list(self) -> Vec<Construction> {
        match self {
            ConstructionArg::Sum => vec![Construction::Sum],
            ConstructionArg::Pinv => vec![Construction::Pinv],
            ConstructionArg::Both => Construction::ALL.to_vec(),
        }
    }

    fn single(self) -> Result<Construction> {
        match self {
            ConstructionArg::Sum => Ok(Construction::Sum),
            ConstructionArg::Pinv => Ok(Construction::Pinv),
            ConstructionArg::Both => Err(Error::Mode("a single construction is required here".into())),
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: GenKind,
    /// Number of vectors; split evenly across --clusters for `clustered`.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.9)]
    eta: f64,
    /// Dataset to plant queries on (`queries` kind).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Planted similarity; omit for unrelated uniform queries.
    #[arg(long)]
    alpha: Option<f64>,
    /// Cluster labels (`clustered`) or planted ids (`queries`) as ivecs.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AssignArg {
    Random,
    Kmeans,
    BatchKmeans,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    assign: AssignArg,
    #[arg(long, value_enum, default_value = "pinv")]
    construction: ConstructionArg,
    /// Unit size for random assignment.
    #[arg(long, default_value_t = 10)]
    unit_size: usize,
    /// Unit count for k-means (per batch for batch-kmeans); default N / unit-size.
    #[arg(long = "M", visible_alias = "m")]
    m: Option<usize>,
    /// Normalize k-means representatives in the assignment step.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 10_000)]
    batch_size: usize,
    #[arg(long, default_value_t = KMeansConfig::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BinaryArg {
    Symmetric,
    Asymmetric,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "top_units", required_unless_present = "top_units")]
    tau: Option<f64>,
    #[arg(long)]
    top_units: Option<usize>,
    /// Candidates written per query.
    #[arg(long, default_value_t = 100)]
    keep: usize,
    /// Scan units with sign sketches instead of real memory vectors.
    #[arg(long, value_enum)]
    binary: Option<BinaryArg>,
    /// Re-rank with the binary score instead of real inner products.
    #[arg(long, requires = "binary")]
    binary_rerank: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// CSV written by `query`.
    #[arg(long)]
    results: PathBuf,
    /// Ground-truth match lists (ivecs). Computed from --data/--queries when absent.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Also write the computed ground truth (ivecs).
    #[arg(long)]
    gt_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum TheoryCommand {
    /// Error rates along a threshold sweep.
    Roc {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "both")]
        construction: ConstructionArg,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative query cost `1/n + pfp` versus unit size.
    Cost {
        #[arg(long, default_value_t = 1000)]
        d: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9")]
        alpha0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        construction: ConstructionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cap moments and cap-conditioned score statistics.
    CapStats {
        #[arg(long, default_value_t = 512)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "-1,-0.5,0,0.3,0.6,0.9")]
        etas: Vec<f64>,
        #[arg(long, value_enum, default_value = "both")]
        construction: ConstructionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pinv norm inflation limit and its quadrature check.
    Mp {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
        c: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Empirical ROC next to the analytic one.
    Roc {
        #[arg(long, default_value_t = 1000)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.7)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "both")]
        construction: ConstructionArg,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost curves with realized cost at each minimizer.
    Cost {
        #[arg(long, default_value_t = 1000)]
        d: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.9")]
        alpha0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        construction: ConstructionArg,
        /// Vectors in the realized-cost measurement.
        #[arg(long, default_value_t = 100_000)]
        mc_n: usize,
        #[arg(long, default_value_t = 100)]
        mc_queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Imbalance and match concentration of assignment methods.
    Assignment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        alpha0: f64,
        #[arg(long = "M", visible_alias = "m")]
        m: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "random,sum-km,sum-km-norm,pinv-km,pinv-km-norm")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        top_units: usize,
        #[arg(long, default_value_t = 20)]
        max_rank: usize,
        #[arg(long, value_enum, default_value = "pinv")]
        random_construction: ConstructionArg,
        /// Per-rank match probabilities (long format CSV).
        #[arg(long)]
        rank_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 2 on usage errors, 1 on runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => File::create(p)?.write_all(text.as_bytes())?,
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            // The reader went away (`| head`); nothing left to do.
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Theory(t) => theory(t),
        Command::Experiment(e) => experiment(e),
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Domain(format!("missing --{flag}")))
}

fn gen(a: GenArgs) -> Result<()> {
    let seed = Seed(a.seed);
    match a.kind {
        GenKind::Uniform => {
            let data = make_uniform_dataset(a.n, need(a.d, "d")?, &mut seed.derive("uniform").rng())?;
            write_fvecs(&data, &a.out)
        }
        GenKind::Clustered => {
            if a.clusters == 0 || !a.n.is_multiple_of(a.clusters) {
                return Err(Error::Domain(format!(
                    "--n {} must be a positive multiple of --clusters {}",
                    a.n, a.clusters
                )));
            }
            let (data, labels) = make_clustered_dataset(
                a.clusters,
                a.n / a.clusters,
                need(a.d, "d")?,
                a.eta,
                &mut seed.derive("clustered").rng(),
            )?;
            if let Some(p) = &a.labels_out {
                write_id_lists(&labels.iter().map(|&l| vec![l]).collect::<Vec<_>>(), p)?;
            }
            write_fvecs(&data, &a.out)
        }
        GenKind::Queries => {
            let mut rng = seed.derive("queries").rng();
            match a.alpha {
                Some(alpha) => {
                    let data = read_fvecs(&need(a.data, "data")?)?;
                    let ids = rand::seq::index::sample(&mut rng, data.len(), a.n.min(data.len())).into_vec();
                    let qs = ids
                        .iter()
                        .map(|&id| make_query(&data, &QueryModel::planted(id, alpha)?, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    if let Some(p) = &a.labels_out {
                        write_id_lists(&ids.iter().map(|&i| vec![i]).collect::<Vec<_>>(), p)?;
                    }
                    write_fvecs(&Dataset::from_vectors(qs)?, &a.out)
                }
                None => {
                    let d = match (&a.d, &a.data) {
                        (Some(d), _) => *d,
                        (None, Some(p)) => read_fvecs(p)?.dim(),
                        (None, None) => return Err(Error::Domain("missing --d or --data".into())),
                    };
                    let qs = (0..a.n)
                        .map(|_| crate::sampling::sample_sphere(d, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    write_fvecs(&Dataset::from_vectors(qs)?, &a.out)
                }
            }
        }
    }
}

fn build(a: BuildArgs) -> Result<()> {
    let data = read_fvecs(&a.data)?;
    let kind = a.construction.single()?;
    let ccfg = ConstructionConfig::new(kind).with_ridge(a.ridge)?;
    let seed = Seed(a.seed);
    let default_m = data.len().div_ceil(a.unit_size.max(1));
    let kmeans = |m: usize| {
        let mut k = KMeansConfig::new(m, kind, a.normalize, seed);
        k.construction = ccfg;
        k.max_iters = a.max_iters;
        k
    };
    let partition = match a.assign {
        AssignArg::Random => random_assignment(data.len(), a.unit_size, &mut seed.derive("random").rng())?,
        AssignArg::Kmeans => spherical_kmeans(&data, &kmeans(a.m.unwrap_or(default_m)))?.partition,
        AssignArg::BatchKmeans => {
            let per_batch = a.m.unwrap_or_else(|| a.batch_size.min(data.len()).div_ceil(a.unit_size.max(1)));
            batch_assignment(
                &data,
                &BatchConfig {
                    batch_size: a.batch_size,
                    inner: BatchInner::KMeans(kmeans(per_batch)),
                    seed,
                },
            )?
        }
    };
    let index = build_index(&data, &partition, &ccfg)?;
    if !index.fallback_units.is_empty() {
        eprintln!("note: {} unit(s) used the fallback ridge", index.fallback_units.len());
    }
    let mut w = io::BufWriter::new(File::create(&a.out)?);
    write_index(&index, &mut w)
}

/// Header of the `query` CSV.
pub const QUERY_HEADER: &str = "query,complexity,complexity_ratio,positive_units,candidates";

fn query_row(q: usize, r: &QueryResult, keep: usize) -> String {
    let cands: Vec<String> = r
        .candidates
        .iter()
        .take(keep)
        .map(|(id, s)| format!("{id}:{s}"))
        .collect();
    format!(
        "{q},{},{},{},{}",
        r.complexity,
        r.complexity_ratio,
        r.positive_units.len(),
        cands.join(" ")
    )
}

fn query_cmd(a: QueryArgs) -> Result<()> {
    let index = read_index(BufReader::new(File::open(&a.index)?))?;
    let data = read_fvecs(&a.data)?;
    let queries = read_fvecs(&a.queries)?;
    let sel = match (a.tau, a.top_units) {
        (Some(t), _) => UnitSelection::Threshold(t),
        (None, Some(k)) => UnitSelection::TopUnits(k),
        (None, None) => return Err(Error::Domain("missing --tau or --top-units".into())),
    };
    let bindex = match a.binary {
        Some(_) => Some(binarize(&index, &data)?),
        None => None,
    };
    let mut out = String::from(QUERY_HEADER);
    out.push('\n');
    for (q, y) in queries.iter().enumerate() {
        let r = match (&bindex, a.binary) {
            (Some(b), Some(mode)) => {
                let mode = match mode {
                    BinaryArg::Symmetric => BinaryMode::Symmetric,
                    BinaryArg::Asymmetric => BinaryMode::Asymmetric,
                };
                let rerank = if a.binary_rerank { Rerank::Binary } else { Rerank::Real };
                query_binary(b, &data, y, sel, mode, rerank)?
            }
            _ => query_with(&index, &data, y, sel)?,
        };
        out.push_str(&query_row(q, &r, a.keep));
        out.push('\n');
    }
    emit(&out, a.out.as_deref())
}

/// Per-query `(complexity_ratio, candidate ids)` from a `query` CSV.
pub fn read_query_csv(path: &Path) -> Result<Vec<(f64, Vec<usize>)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let here = offset;
        offset += line.len() as u64 + 1;
        if lineno == 0 {
            if line != QUERY_HEADER {
                return Err(Error::Format {
                    offset: here,
                    msg: "unexpected header".into(),
                });
            }
            continue;
        }
        let bad = |msg: &str| Error::Format {
            offset: here,
            msg: format!("line {}: {msg}", lineno + 1),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let ratio: f64 = fields[2].parse().map_err(|_| bad("bad complexity_ratio"))?;
        let ids = fields[4]
            .split_whitespace()
            .map(|c| {
                c.split(':')
                    .next()
                    .and_then(|id| id.parse().ok())
                    .ok_or_else(|| bad("bad candidate"))
            })
            .collect::<Result<Vec<usize>>>()?;
        rows.push((ratio, ids));
    }
    Ok(rows)
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let results = read_query_csv(&a.results)?;
    let truth = match &a.gt {
        Some(p) => read_id_lists(p)?,
        None => {
            let data = read_fvecs(&need(a.data.clone(), "data (or --gt)")?)?;
            let queries = read_fvecs(&need(a.queries.clone(), "queries (or --gt)")?)?;
            let gt = cosine_ground_truth(&data, &queries, need(a.alpha0, "alpha0")?)?;
            if let Some(p) = &a.gt_out {
                write_id_lists(&gt, p)?;
            }
            gt
        }
    };
    let sorted: Vec<Vec<usize>> = truth
        .into_iter()
        .map(|mut l| {
            l.sort_unstable();
            l
        })
        .collect();
    let ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
    let lists: Vec<Vec<usize>> = results.into_iter().map(|r| r.1).collect();
    let report = evaluate(&lists, &ratios, &sorted)?;
    emit(&format!("{}\n{}\n", EvalReport::CSV_HEADER, report.csv_row()), a.out.as_deref())
}

fn theory(t: TheoryCommand) -> Result<()> {
    match t {
        TheoryCommand::Roc {
            d,
            n,
            alpha,
            construction,
            taus,
            out,
        } => {
            let taus = taus.unwrap_or_else(|| linspace(-0.5, 1.0, 61));
            emit(&to_csv(&theory_roc(d, n, alpha, &construction.list(), &taus)?), out.as_deref())
        }
        TheoryCommand::Cost {
            d,
            eps,
            alpha0,
            n_min,
            n_max,
            construction,
            out,
        } => {
            let cfg = CostConfig {
                d,
                eps,
                alpha0s: alpha0,
                n_min,
                n_max: n_max.unwrap_or((d / 2).max(n_min)),
                constructions: construction.list(),
            };
            emit(&to_csv(&theory_cost_curve(&cfg)?), out.as_deref())
        }
        TheoryCommand::CapStats {
            d,
            n,
            alpha,
            etas,
            construction,
            out,
        } => emit(
            &to_csv(&theory_cap_stats(d, n, alpha, &etas, &construction.list())?),
            out.as_deref(),
        ),
        TheoryCommand::Mp { c, out } => emit(&to_csv(&theory_mp(&c)?), out.as_deref()),
    }
}

fn experiment(e: ExperimentCommand) -> Result<()> {
    match e {
        ExperimentCommand::Roc {
            d,
            n,
            alpha,
            construction,
            trials,
            taus,
            seed,
            out,
        } => {
            let cfg = RocConfig {
                d,
                n,
                alpha,
                constructions: construction.list(),
                trials,
                taus: taus.unwrap_or_else(|| linspace(-0.5, 1.0, 61)),
                seed: Seed(seed),
            };
            emit(&to_csv(&run_roc(&cfg)?), out.as_deref())
        }
        ExperimentCommand::Cost {
            d,
            eps,
            alpha0,
            n_min,
            n_max,
            construction,
            mc_n,
            mc_queries,
            seed,
            out,
        } => {
            let cfg = CostConfig {
                d,
                eps,
                alpha0s: alpha0,
                n_min,
                n_max: n_max.unwrap_or((d / 2).max(n_min)),
                constructions: construction.list(),
            };
            let v = CostValidation {
                total: mc_n,
                queries: mc_queries,
                seed: Seed(seed),
            };
            emit(&to_csv(&run_cost_curve(&cfg, Some(&v))?), out.as_deref())
        }
        ExperimentCommand::Assignment {
            data,
            queries,
            alpha0,
            m,
            methods,
            seeds,
            top_units,
            max_rank,
            random_construction,
            rank_out,
            out,
        } => {
            let data = read_fvecs(&data)?;
            let queries = read_fvecs(&queries)?;
            let cfg = AssignmentReportConfig {
                methods: methods.iter().map(|s| s.parse()).collect::<Result<Vec<AssignmentMethod>>>()?,
                num_units: m.unwrap_or(data.len().div_ceil(10)),
                seeds,
                alpha0,
                top_units,
                max_rank,
                random_construction: random_construction.single()?,
            };
            let rows = run_assignment_report(&data, &queries, &cfg)?;
            if let Some(p) = &rank_out {
                emit(&assignment_rank_csv(&rows), Some(p))?;
            }
            emit(&to_csv(&rows), out.as_deref())
        }
    }
}
