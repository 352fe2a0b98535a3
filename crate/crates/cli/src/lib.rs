//! Command-line front end: scene generation, filtering, evaluation,
//! comparison tables and benchmarks.

pub mod filters;
mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pcaac_core::cloud::{
    load_ply, load_predictions, load_xyz, save_ply, save_predictions, save_xyz, write_atomic,
};
use pcaac_core::metrics::{confusion, MetricsRow, CSV_HEADER};
use pcaac_core::scene::{describe, generate, load_spec, SceneSpec};
use pcaac_core::{Error, LabeledCloud};

pub use filters::{median_wall_ms, metrics_row, run_filter, Algo, FilterArgs};
pub use manifest::RunManifest;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "pcaac",
    version,
    about = "PCA-based adaptive clustering filter for point clouds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic scene.
    Gen(GenArgs),
    /// Run one filter over a cloud.
    Filter(FilterCmd),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Run several filters on one scene and tabulate their metrics.
    Compare(CompareArgs),
    /// Time filters and count their distance arithmetic across scene sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// Scene spec file; the built-in default scene when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SceneArgs {
    fn resolve(&self) -> anyhow::Result<SceneSpec> {
        let mut spec = match &self.spec {
            Some(p) => {
                load_spec(p).with_context(|| format!("reading scene spec {}", p.display()))?
            }
            None => SceneSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Point-count multiplier applied to the spec.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Output cloud (.ply or .xyz) with truth labels.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the resolved spec next to the output.
    #[arg(long)]
    pub write_spec: bool,
}

#[derive(Debug, Args)]
pub struct FilterCmd {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Filtered cloud; predicted labels go to `<output>.labels`.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub params: FilterArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Cloud carrying ground-truth labels.
    #[arg(long)]
    pub input: PathBuf,
    /// Predicted-label sidecar, one 0/1 per point.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Name written in the filter column.
    #[arg(long, default_value = "eval")]
    pub name: String,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scene with truth labels; generated from the spec when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Filters to run.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Algo::ROSTER)]
    pub algos: Vec<Algo>,
    /// Record wall time per filter (makes the table run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub params: FilterArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Approximate scene sizes in points.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 20_000, 40_000])]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Algo::ROSTER)]
    pub algos: Vec<Algo>,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub params: FilterArgs,
    /// Timed runs per filter after one warm-up; wall_ms is their median.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeats: u32,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_DATA,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    1
}

/// Caps the global worker pool from `PCAAC_THREADS` when set.
pub fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("PCAAC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("PCAAC_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("PCAAC_THREADS must be a positive integer, got 0");
        }
        // A pool already built (e.g. by an earlier call in tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Filter(a) => cmd_filter(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn is_ply(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

pub fn load_cloud(path: &Path) -> pcaac_core::Result<LabeledCloud> {
    if is_ply(path) {
        load_ply(path)
    } else {
        load_xyz(path)
    }
}

pub fn save_cloud(cloud: &LabeledCloud, path: &Path) -> pcaac_core::Result<()> {
    if is_ply(path) {
        save_ply(cloud, path)
    } else {
        save_xyz(cloud, path, cloud.truth().is_some())
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn cmd_gen(a: &GenArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(Error::Contract(format!("--scale must be positive, got {}", a.scale)).into());
    }
    let mut spec = a.scene.resolve()?;
    if a.scale != 1.0 {
        spec = spec.scaled(a.scale);
    }
    let cloud = generate(&spec)?;
    save_cloud(&cloud, &a.output)?;
    let mut outputs = vec![a.output.clone()];
    if a.write_spec {
        let p = sidecar(&a.output, "spec");
        write_atomic(&p, spec.to_spec_string().as_bytes())?;
        outputs.push(p);
    }
    let counts = describe(&spec)?;
    RunManifest::new(
        "gen",
        vec![],
        outputs,
        json!({ "spec": spec, "scale": a.scale, "features": counts }),
    )
    .finish(start)
    .write_for(&a.output)?;
    Ok(())
}

pub fn cmd_filter(a: &FilterCmd) -> anyhow::Result<()> {
    let start = Instant::now();
    let cloud = load_cloud(&a.input)?;
    let run = run_filter(a.algo, &cloud, &a.params)?;
    save_cloud(&run.filtered, &a.output)?;
    let labels = sidecar(&a.output, "labels");
    save_predictions(&run.predicted, &labels)?;
    RunManifest::new(
        "filter",
        vec![a.input.clone()],
        vec![a.output.clone(), labels],
        json!({
            "algo": a.algo,
            "parameters": a.params.describe(a.algo),
            "points_in": cloud.len(),
            "points_out": run.filtered.len(),
            "ops": run.ops,
            "regions": run.regions,
        }),
    )
    .finish(start)
    .write_for(&a.output)?;
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let cloud = load_cloud(&a.input)?;
    let truth = cloud.truth().ok_or_else(|| {
        Error::Contract(format!(
            "{} carries no ground-truth labels",
            a.input.display()
        ))
    })?;
    let predicted = load_predictions(&a.predicted)?;
    let counts = confusion(truth, &predicted)?;
    let row = MetricsRow {
        filter: a.name.clone(),
        parameters: String::new(),
        counts: Some(counts),
        ops: None,
        wall_ms: None,
        error: None,
    };
    emit(
        &format!("{CSV_HEADER}\n{}\n", row.to_csv()),
        a.output.as_deref(),
    )
}

/// Metrics rows sorted by F1, best first; rows without an F1 go last.
pub fn compare_rows(
    cloud: &LabeledCloud,
    algos: &[Algo],
    params: &FilterArgs,
    timing: bool,
) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = algos
        .iter()
        .map(|&a| metrics_row(a, cloud, params, timing))
        .collect();
    rows.sort_by(|x, y| match (x.f1(), y.f1()) {
        (Some(a), Some(b)) => b.total_cmp(&a),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    rows
}

pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

pub fn cmd_compare(a: &CompareArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let (cloud, source) = match &a.input {
        Some(p) => (load_cloud(p)?, json!(p)),
        None => {
            let spec = a.scene.resolve()?;
            (generate(&spec)?, json!({ "spec": spec }))
        }
    };
    if cloud.truth().is_none() {
        return Err(
            Error::Contract("compare needs a scene with ground-truth labels".into()).into(),
        );
    }
    let rows = compare_rows(&cloud, &a.algos, &a.params, a.timing);
    let csv = render_csv(&rows);
    emit(&csv, a.output.as_deref())?;
    if let Some(out) = &a.output {
        RunManifest::new(
            "compare",
            a.input.iter().cloned().collect(),
            vec![out.clone()],
            json!({ "scene": source, "algos": a.algos, "params": a.params, "timing": a.timing }),
        )
        .finish(start)
        .write_for(out)?;
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let base = a.scene.resolve()?;
    let base_total = describe(&base)?.total();
    if base_total == 0 {
        return Err(Error::Contract("bench needs a non-empty base scene".into()).into());
    }
    let mut rows = Vec::new();
    for &size in &a.sizes {
        let spec = base.scaled(size as f64 / base_total as f64);
        let cloud = generate(&spec)?;
        for &algo in &a.algos {
            let mut row = metrics_row(algo, &cloud, &a.params, false);
            if row.error.is_none() {
                row.wall_ms = Some(median_wall_ms(algo, &cloud, &a.params, a.repeats as usize)?);
            }
            row.parameters = format!("m={};{}", cloud.len(), row.parameters);
            rows.push(row);
        }
    }
    let csv = render_csv(&rows);
    emit(&csv, a.output.as_deref())?;
    if let Some(out) = &a.output {
        RunManifest::new(
            "bench",
            vec![],
            vec![out.clone()],
            json!({ "sizes": a.sizes, "algos": a.algos, "repeats": a.repeats, "params": a.params, "spec": base }),
        )
        .finish(start)
        .write_for(out)?;
    }
    Ok(())
}
