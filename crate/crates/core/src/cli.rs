//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    load_dense, load_names, load_sparse, write_dense, write_sparse, DenseOptions, LabelColumn, LabeledDataset,
};
use crate::direction::{loadings_of, Classifier, SolverOptions};
use crate::engine::{diproperm, DppConfig, DppResult, DEFAULT_ALPHA};
use crate::error::{DppError, Result};
use crate::permute::{PermutationPlan, Scheme};
use crate::report::{emit_panels, emit_result_json, read_result_json, Panel, DEFAULT_PANELS};
use crate::synth::make_blobs;
use crate::unistat::Statistic;

#[derive(Debug, Parser)]
#[command(
    name = "diproperm",
    version,
    about = "Direction-projection-permutation two-sample test"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the test on a labelled dataset.
    Run(RunArgs),
    /// Print the largest loadings of the observed direction.
    Loadings(LoadingsArgs),
    /// Write diagnostic panels for a saved result.
    Report(ReportArgs),
    /// Generate a two-class Gaussian dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Data file (dense CSV or sparse `label index:value` lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Labels file, one -1/1 per line, for dense data without a label column.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted (.svm/.libsvm are sparse).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Dense data has a header row.
    #[arg(long)]
    pub header: bool,
    /// Dense label column: 0-based index or header name.
    #[arg(long)]
    pub label_column: Option<LabelColumn>,
    /// Variable names file, one per line.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Use only the first N rows.
    #[arg(long, value_name = "N")]
    pub first: Option<usize>,
    #[arg(long, default_value = "dwd")]
    pub classifier: Classifier,
    #[arg(long, default_value = "md")]
    pub stat: Statistic,
    #[arg(long, default_value = "balanced")]
    pub scheme: Scheme,
    /// Number of permutations.
    #[arg(short = 'B', default_value_t = 1000)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Worker threads (results do not depend on this).
    #[arg(long, env = "DPP_WORKERS")]
    pub workers: Option<usize>,
    /// Directory for result.json and the default panels.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep the scores of every permutation in the result.
    #[arg(long)]
    pub retain_all: bool,
    #[arg(long, default_value_t = SolverOptions::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct LoadingsArgs {
    /// Saved result.json.
    pub result: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub loadnum: usize,
    /// Variable names file, one per line.
    #[arg(long)]
    pub names: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Saved result.json.
    pub result: PathBuf,
    /// Comma-separated panels: obs, min, max, perm1, perm2, permdist.
    #[arg(long, value_delimiter = ',')]
    pub panels: Vec<Panel>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Distance between the class centres.
    #[arg(long, default_value_t = 8.0)]
    pub distance: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "dense")]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

fn guess_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("svm" | "libsvm") => Format::Sparse,
        _ => Format::Dense,
    }
}

pub fn load_dataset(args: &RunArgs) -> Result<LabeledDataset> {
    let format = args.format.unwrap_or_else(|| guess_format(&args.data));
    let mut ds = match format {
        Format::Sparse => load_sparse(&args.data)?,
        Format::Dense => {
            let opts = DenseOptions {
                has_header: args.header,
                label_column: args.label_column.clone(),
            };
            load_dense(&args.data, &opts, args.labels.as_deref())?
        }
    };
    if let Some(n) = args.first {
        ds = ds.head(n)?;
    }
    if let Some(path) = &args.names {
        ds = ds.with_feature_names(load_names(path)?)?;
    }
    Ok(ds)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `stat=... p=... z=... cutoff=...` with full precision.
pub fn summary_line(result: &DppResult) -> String {
    let z = result.z_score.map_or_else(|| "NA".to_string(), |z| z.to_string());
    format!(
        "stat={} p={} z={} cutoff={}",
        result.observed_statistic, result.p_value, z, result.cutoff
    )
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let config = DppConfig {
        classifier: args.classifier,
        statistic: args.stat,
        plan: PermutationPlan::new(args.scheme, args.permutations, args.seed)?,
        alpha: args.alpha,
        solver: SolverOptions {
            tol: args.tol,
            max_iter: args.max_iter,
            record_trace: false,
        },
        retain_all: args.retain_all,
    };
    config.validate()?;
    let ds = load_dataset(args)?;
    let result = diproperm(&ds, &config, args.workers.unwrap_or_else(default_workers))?;
    if let Some(dir) = &args.out {
        emit_panels(&result, &DEFAULT_PANELS, dir)?;
        emit_result_json(&result, &dir.join("result.json"))?;
    }
    writeln!(out, "{}", summary_line(&result)).map_err(|e| DppError::io("<stdout>", e))
}

fn loadings(args: &LoadingsArgs, out: &mut dyn Write) -> Result<()> {
    let result = read_result_json(&args.result)?;
    let names = match &args.names {
        Some(path) => Some(load_names(path)?),
        None => names_from_result(&result),
    };
    if let Some(n) = &names {
        if n.len() != result.n_features {
            return Err(DppError::DimensionMismatch {
                what: "variable name count",
                expected: result.n_features,
                found: n.len(),
            });
        }
    }
    let top = loadings_of(&result.observed_direction, args.loadnum, names.as_deref())?;
    let io = |e| DppError::io("<stdout>", e);
    writeln!(out, "rank,index,value,name").map_err(io)?;
    for (rank, l) in top.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            rank + 1,
            l.index,
            l.value,
            l.name.as_deref().unwrap_or("")
        )
        .map_err(io)?;
    }
    Ok(())
}

fn names_from_result(result: &DppResult) -> Option<Vec<String>> {
    let mut names = vec![None; result.n_features];
    for l in &result.loadings {
        if let Some(slot) = names.get_mut(l.index.wrapping_sub(1)) {
            slot.clone_from(&l.name);
        }
    }
    names.into_iter().collect()
}

fn report(args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let result = read_result_json(&args.result)?;
    let panels: &[Panel] = if args.panels.is_empty() {
        &DEFAULT_PANELS
    } else {
        &args.panels
    };
    for path in emit_panels(&result, panels, &args.out)? {
        writeln!(out, "{}", path.display()).map_err(|e| DppError::io("<stdout>", e))?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let ds = make_blobs(args.n, args.p, args.distance, args.sd, args.seed)?;
    match args.format {
        Format::Dense => write_dense(&ds, &args.out),
        Format::Sparse => write_sparse(&ds, &args.out),
    }
}

/// Executes a parsed command, writing normal output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run(a, out),
        Command::Loadings(a) => loadings(a, out),
        Command::Report(a) => report(a, out),
        Command::Synth(a) => synth(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_run_flags() {
        let cli = Cli::try_parse_from([
            "diproperm",
            "run",
            "--data",
            "x.svm",
            "--stat",
            "t",
            "--scheme",
            "unbalanced",
            "-B",
            "50",
            "--first",
            "20",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.stat, Statistic::T);
        assert_eq!(a.scheme, Scheme::Unbalanced);
        assert_eq!((a.permutations, a.first), (50, Some(20)));
        assert_eq!(guess_format(&a.data), Format::Sparse);
    }

    #[test]
    fn parses_panels() {
        let cli =
            Cli::try_parse_from(["diproperm", "report", "r.json", "--panels", "obs,perm2", "--out", "d"]).unwrap();
        let Command::Report(a) = cli.command else { panic!() };
        assert_eq!(a.panels, vec![Panel::Obs, Panel::Perm2]);
    }
}
