//! Filter roster shared by `filter`, `compare` and `bench`.

use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use pcaac_core::baseline::{
    dbscan3d_filter_counted, ror_filter_counted, sor_filter_counted, two_stage_sor_filter_counted,
    Dbscan3dParams, RorParams, SorParams,
};
use pcaac_core::cluster::{run_pcaac, PipelineConfig, RegionReport};
use pcaac_core::metrics::{confusion, MetricsRow, OpCounts};
use pcaac_core::{LabeledCloud, NeighborSearch, Prediction, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Pcaac,
    Sor,
    Sor2,
    Ror,
    Dbscan3d,
}

impl Algo {
    pub const ROSTER: [Algo; 5] = [
        Algo::Pcaac,
        Algo::Sor,
        Algo::Sor2,
        Algo::Ror,
        Algo::Dbscan3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Pcaac => "pcaac",
            Algo::Sor => "sor",
            Algo::Sor2 => "sor2",
            Algo::Ror => "ror",
            Algo::Dbscan3d => "dbscan3d",
        }
    }
}

/// Parameters for every filter. Baseline defaults mirror the PCAAC settings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FilterArgs {
    /// Number of cylinder shells.
    #[arg(long, default_value_t = 8)]
    pub t: usize,
    /// Clustering radius of the innermost shell, meters.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon1: f64,
    #[arg(long, default_value_t = 10)]
    pub minpts: usize,
    /// Minimum surviving cluster size.
    #[arg(long, default_value_t = 100)]
    pub psi: usize,
    #[arg(long, default_value_t = 50)]
    pub psi_min: usize,
    #[arg(long, default_value_t = 200)]
    pub psi_max: usize,
    /// Choose minpts per shell by silhouette score.
    #[arg(long)]
    pub tune_minpts: bool,
    /// Grow psi with sqrt(shell index), clamped to [psi-min, psi-max].
    #[arg(long)]
    pub psi_ramp: bool,
    /// Neighbor search used by every filter.
    #[arg(long, default_value = "grid")]
    pub search: NeighborSearch,
    #[arg(long, default_value_t = 10)]
    pub sor_k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sor_mult: f64,
    /// Second SOR pass; defaults to the first pass settings.
    #[arg(long)]
    pub sor2_k: Option<usize>,
    #[arg(long)]
    pub sor2_mult: Option<f64>,
    /// Defaults to --epsilon1.
    #[arg(long)]
    pub ror_radius: Option<f64>,
    /// Defaults to --minpts.
    #[arg(long)]
    pub ror_min: Option<usize>,
    /// Defaults to --epsilon1.
    #[arg(long)]
    pub db3_epsilon: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub db3_minpts: usize,
    /// Defaults to --psi.
    #[arg(long)]
    pub db3_psi: Option<usize>,
}

impl Default for FilterArgs {
    fn default() -> Self {
        let c = PipelineConfig::default();
        FilterArgs {
            t: c.t,
            epsilon1: c.epsilon_1,
            minpts: c.minpts_default,
            psi: c.psi_default,
            psi_min: c.psi_min,
            psi_max: c.psi_max,
            tune_minpts: c.tune_minpts,
            psi_ramp: c.psi_ramp,
            search: c.search,
            sor_k: 10,
            sor_mult: 1.0,
            sor2_k: None,
            sor2_mult: None,
            ror_radius: None,
            ror_min: None,
            db3_epsilon: None,
            db3_minpts: 10,
            db3_psi: None,
        }
    }
}

impl FilterArgs {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            t: self.t,
            epsilon_1: self.epsilon1,
            minpts_default: self.minpts,
            psi_default: self.psi,
            psi_min: self.psi_min,
            psi_max: self.psi_max,
            tune_minpts: self.tune_minpts,
            psi_ramp: self.psi_ramp,
            search: self.search,
            ..PipelineConfig::default()
        }
    }

    pub fn sor(&self) -> SorParams {
        SorParams {
            k_neighbors: self.sor_k,
            stddev_mult: self.sor_mult,
        }
    }

    pub fn sor2(&self) -> SorParams {
        SorParams {
            k_neighbors: self.sor2_k.unwrap_or(self.sor_k),
            stddev_mult: self.sor2_mult.unwrap_or(self.sor_mult),
        }
    }

    pub fn ror(&self) -> RorParams {
        RorParams {
            radius: self.ror_radius.unwrap_or(self.epsilon1),
            min_neighbors: self.ror_min.unwrap_or(self.minpts),
        }
    }

    pub fn dbscan3d(&self) -> Dbscan3dParams {
        Dbscan3dParams {
            epsilon: self.db3_epsilon.unwrap_or(self.epsilon1),
            minpts: self.db3_minpts,
            psi: self.db3_psi.unwrap_or(self.psi),
        }
    }

    /// The exact parameters a filter runs with, as `key=value;...`.
    pub fn describe(&self, algo: Algo) -> String {
        match algo {
            Algo::Pcaac => self.pipeline().describe(),
            Algo::Sor => format!("{};search={}", self.sor().describe(), self.search),
            Algo::Sor2 => format!(
                "pass1:{};pass2:{};search={}",
                self.sor().describe(),
                self.sor2().describe(),
                self.search
            ),
            Algo::Ror => format!("{};search={}", self.ror().describe(), self.search),
            Algo::Dbscan3d => format!("{};search={}", self.dbscan3d().describe(), self.search),
        }
    }
}

pub struct FilterRun {
    pub predicted: Vec<Prediction>,
    /// The filtered cloud; PCAAC survivors are restored from the principal
    /// plane, baseline survivors are copied unchanged.
    pub filtered: LabeledCloud,
    pub ops: OpCounts,
    pub wall_ms: f64,
    /// Per-shell diagnostics; empty for the baselines.
    pub regions: Vec<RegionReport>,
}

pub fn run_filter(algo: Algo, cloud: &LabeledCloud, args: &FilterArgs) -> Result<FilterRun> {
    let start = Instant::now();
    let pts = cloud.points();
    let mut ops = OpCounts::default();
    let mut regions = Vec::new();
    let (predicted, filtered) = match algo {
        Algo::Pcaac => {
            let out = run_pcaac(cloud, &args.pipeline())?;
            ops = out.ops;
            regions = out.regions;
            (out.predicted, Some(out.filtered))
        }
        Algo::Sor => (
            sor_filter_counted(pts, &args.sor(), args.search, &mut ops)?,
            None,
        ),
        Algo::Sor2 => (
            two_stage_sor_filter_counted(pts, &args.sor(), &args.sor2(), args.search, &mut ops)?,
            None,
        ),
        Algo::Ror => (
            ror_filter_counted(pts, &args.ror(), args.search, &mut ops)?,
            None,
        ),
        Algo::Dbscan3d => (
            dbscan3d_filter_counted(pts, &args.dbscan3d(), args.search, &mut ops)?,
            None,
        ),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let filtered = filtered.unwrap_or_else(|| {
        let kept: Vec<usize> = (0..cloud.len())
            .filter(|&i| !predicted[i].is_noise())
            .collect();
        cloud.select(&kept)
    });
    Ok(FilterRun {
        predicted,
        filtered,
        ops,
        wall_ms,
        regions,
    })
}

/// One metrics row for `algo` on a cloud with ground truth. Filter failures
/// become error rows instead of aborting.
pub fn metrics_row(
    algo: Algo,
    cloud: &LabeledCloud,
    args: &FilterArgs,
    timing: bool,
) -> MetricsRow {
    let mut row = MetricsRow {
        filter: algo.name().to_string(),
        parameters: args.describe(algo),
        counts: None,
        ops: None,
        wall_ms: None,
        error: None,
    };
    let outcome = run_filter(algo, cloud, args).and_then(|run| {
        let truth = cloud.truth().ok_or_else(|| {
            pcaac_core::Error::Contract("the scene has no ground-truth labels".into())
        })?;
        Ok((confusion(truth, &run.predicted)?, run))
    });
    match outcome {
        Ok((counts, run)) => {
            row.counts = Some(counts);
            row.ops = Some(run.ops);
            row.wall_ms = timing.then_some(run.wall_ms);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Median wall time of `repeats` runs, after one untimed warm-up run.
pub fn median_wall_ms(
    algo: Algo,
    cloud: &LabeledCloud,
    args: &FilterArgs,
    repeats: usize,
) -> Result<f64> {
    run_filter(algo, cloud, args)?;
    let mut times = (0..repeats.max(1))
        .map(|_| run_filter(algo, cloud, args).map(|r| r.wall_ms))
        .collect::<Result<Vec<f64>>>()?;
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    })
}
