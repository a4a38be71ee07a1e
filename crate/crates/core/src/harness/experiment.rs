//! Replicated density-estimation simulations.

use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::io;
use super::metrics::{grid_metrics, mean_and_se, metric_grid};
use super::truth::TrueDensity;
use crate::config::KeyValues;
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::priors::{Hyper, ModelSizePrior, SizeFamily};
use crate::summary::{Computation, Evaluation, Moments, PosteriorSummary, DEFAULT_TERM_CAP};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub density: TrueDensity,
    pub n: usize,
    pub order: usize,
    pub replications: usize,
    /// Sampled terms per `J` when exact enumeration is over the cap.
    pub draws: usize,
    pub seed: u64,
    pub size_prior: ModelSizePrior,
    pub alpha: Hyper,
    pub grid_size: usize,
    pub term_cap: f64,
    /// Adds credible bands (and second moments) at this level.
    pub band_level: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults: 25 replications, 3000 draws, geometric(1/2) on `J ∈ [5, 25]`,
    /// uniform Dirichlet, 100 grid points.
    pub fn new(density: TrueDensity, n: usize, order: usize) -> Result<Self> {
        Ok(Self {
            density,
            n,
            order,
            replications: 25,
            draws: 3000,
            seed: 1,
            size_prior: ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, 5, 25)?,
            alpha: Hyper::default(),
            grid_size: 100,
            term_cap: DEFAULT_TERM_CAP,
            band_level: None,
            output_dir: None,
        })
    }

    /// Reads `density`, `n`, `q`, `reps`, `N`, `seed`, `grid`, `band`,
    /// `out`, `cap` and the `J.*` / `theta.a` prior keys.
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let density: TrueDensity = kv.get("density").unwrap_or("mixture-51").parse()?;
        let mut c = Self::new(density, kv.parsed_or("n", 100)?, kv.parsed_or("q", 1)?)?;
        c.replications = kv.parsed_or("reps", c.replications)?;
        c.draws = kv.parsed_or("N", c.draws)?;
        c.seed = kv.parsed_or("seed", c.seed)?;
        c.grid_size = kv.parsed_or("grid", c.grid_size)?;
        c.term_cap = kv.parsed_or("cap", c.term_cap)?;
        c.band_level = kv.parsed("band")?;
        c.output_dir = kv.get("out").map(PathBuf::from);
        c.size_prior = ModelSizePrior::from_config(kv, 5, 25)?;
        if let Some(a) = kv.float_list("theta.a")? {
            c.alpha = if a.len() == 1 {
                Hyper::Scalar(a[0])
            } else {
                Hyper::PerCoordinate(a)
            };
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::invalid("grid size must be at least 2"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.draws < 2 {
            return Err(Error::invalid("need at least 2 sampled terms"));
        }
        Ok(())
    }

    fn model(&self) -> Result<DensityModel> {
        Ok(DensityModel::new(self.order, self.size_prior.clone(), self.alpha.clone())?
            .with_term_cap(self.term_cap))
    }
}

/// Seeds for the data and for term sampling in replication `index`.
pub fn replication_seeds(base: u64, index: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index as u64 + 1);
    (rng.next_u64(), rng.next_u64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub index: usize,
    pub data_seed: u64,
    pub l1: f64,
    pub l2: f64,
    pub seconds: f64,
    /// Average `band_high − band_low` over the grid, when bands were requested.
    pub band_width: Option<f64>,
    pub summary: PosteriorSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub replications: Vec<ReplicationResult>,
    pub mean_l1: f64,
    pub se_l1: f64,
    pub mean_l2: f64,
    pub se_l2: f64,
    pub mean_seconds: f64,
}

fn run_replication(config: &ExperimentConfig, model: &DensityModel, grid: &[f64], truth: &[f64], index: usize) -> Result<ReplicationResult> {
    let (data_seed, term_seed) = replication_seeds(config.seed, index);
    let start = Instant::now();
    let data = config.density.sample(config.n, data_seed)?;
    let moments = if config.band_level.is_some() {
        Moments::Second
    } else {
        Moments::First
    };
    let mut summary = model.posterior(
        &data,
        grid,
        moments,
        Evaluation::Auto {
            draws: config.draws,
            seed: term_seed,
        },
    )?;
    if let Some(level) = config.band_level {
        summary = summary.with_credible_band(level)?;
    }
    let seconds = start.elapsed().as_secs_f64();
    let errors = grid_metrics(&summary.mean, truth)?;
    let band_width = summary.band.as_ref().map(|b| {
        b.high.iter().zip(&b.low).map(|(h, l)| h - l).sum::<f64>() / b.high.len() as f64
    });
    if let Some(dir) = &config.output_dir {
        io::write_summary(&dir.join(format!("rep{index:03}_summary.csv")), &summary)?;
        io::write_j_weights(&dir.join(format!("rep{index:03}_j.csv")), &summary)?;
    }
    Ok(ReplicationResult {
        index,
        data_seed,
        l1: errors.l1,
        l2: errors.l2,
        seconds,
        band_width,
        summary,
    })
}

/// Runs all replications in parallel; results are ordered by replication.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let model = config.model()?;
    let grid = metric_grid(config.grid_size);
    let truth = grid
        .iter()
        .map(|&x| config.density.pdf(x))
        .collect::<Result<Vec<_>>>()?;
    let replications = (0..config.replications)
        .into_par_iter()
        .map(|i| run_replication(config, &model, &grid, &truth, i))
        .collect::<Result<Vec<_>>>()?;
    let l1: Vec<f64> = replications.iter().map(|r| r.l1).collect();
    let l2: Vec<f64> = replications.iter().map(|r| r.l2).collect();
    let (mean_l1, se_l1) = mean_and_se(&l1);
    let (mean_l2, se_l2) = mean_and_se(&l2);
    let mean_seconds = replications.iter().map(|r| r.seconds).sum::<f64>() / replications.len() as f64;
    let report = ExperimentReport {
        replications,
        mean_l1,
        se_l1,
        mean_l2,
        se_l2,
        mean_seconds,
    };
    if let Some(dir) = &config.output_dir {
        write_report(dir, config, &report)?;
    }
    Ok(report)
}

fn mode_label(c: Computation) -> String {
    match c {
        Computation::Exact => "exact".into(),
        Computation::MonteCarlo { draws } => format!("mc{draws}"),
    }
}

/// `metrics.csv` (per replication), `aggregate.csv`, and `timing.csv`; only
/// the last depends on the machine.
pub fn write_report(dir: &std::path::Path, config: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .replications
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.data_seed.to_string(),
                r.l1.to_string(),
                r.l2.to_string(),
                r.band_width.map(|w| w.to_string()).unwrap_or_default(),
                mode_label(r.summary.computation),
            ]
        })
        .collect();
    io::write_table(
        &dir.join("metrics.csv"),
        "replication,data_seed,l1,l2,band_width,mode",
        &rows,
    )?;
    io::write_table(
        &dir.join("aggregate.csv"),
        "density,n,q,reps,mean_l1,se_l1,mean_l2,se_l2",
        &[vec![
            config.density.name().to_string(),
            config.n.to_string(),
            config.order.to_string(),
            config.replications.to_string(),
            report.mean_l1.to_string(),
            report.se_l1.to_string(),
            report.mean_l2.to_string(),
            report.se_l2.to_string(),
        ]],
    )?;
    let timing: Vec<Vec<String>> = report
        .replications
        .iter()
        .map(|r| vec![r.index.to_string(), r.seconds.to_string()])
        .collect();
    io::write_table(&dir.join("timing.csv"), "replication,seconds", &timing)
}
