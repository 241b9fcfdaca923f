//! Deterministic experiment pipelines that reproduce the four result
//! figures as plot-ready CSV datasets plus a machine-readable summary.
//!
//! Every CSV starts with a `#`-prefixed metadata block (tool version, seed,
//! fisher mode, fit results, full config as one JSON line) followed by a
//! column-name row and data rows; floats are printed with 17 significant
//! digits so files are byte-identical across reruns and regenerable from
//! their own header.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_link_cascade, theoretical_moments, SystemParams};
use crate::crlb::{
    bayesian_crlb, classical_crlb, fisher_prior_trimmed, rayleigh_mle, rayleigh_pdf, FisherMode,
    FisherPrior, RayleighFit,
};
use crate::error::{Error, Result};
use crate::estimation::{closed_form_mse, empirical_mse, pilot_vector, MsePoint};
use crate::rng::{derive_stream, Seed};
use crate::signal::LinkId;

/// Everything one experiment run needs. All fields have defaults, so a
/// config file only has to override what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    /// Link under study (1, 2, or 3).
    pub link: LinkId,
    /// Subcarrier index the pipelines operate on.
    pub subcarrier: usize,
    /// Cascade samples for histogramming, fitting, and the Fisher sum.
    pub n_samples: usize,
    /// Monte Carlo trials per MSE sweep point.
    pub trials: usize,
    /// Total pilot block energies for the energy sweep (strictly increasing).
    pub energy_grid: Vec<f64>,
    /// Pilot lengths for the length sweep (strictly increasing).
    pub length_grid: Vec<usize>,
    /// IRS-1 sizes for the histogram/fit pipeline in `run_all`.
    pub hist_n1: Vec<usize>,
    /// Histogram bin count.
    pub hist_bins: usize,
    pub seed: Seed,
    /// Output directory; resolved by the CLI (flag, then config, then the
    /// IRS_EST_OUT environment variable, then "out").
    pub out_dir: Option<PathBuf>,
    pub fisher_mode: FisherMode,
    /// Fraction of smallest |J| samples dropped from the Fisher sum
    /// (0 = plain sample mean).
    pub fisher_trim: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::default(),
            link: LinkId::ViaIrs1,
            subcarrier: 0,
            n_samples: 100_000,
            trials: 100_000,
            energy_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            length_grid: vec![1, 2, 4, 8, 16],
            hist_n1: vec![5, 60],
            hist_bins: 60,
            seed: Seed(0),
            out_dir: None,
            fisher_mode: FisherMode::Magnitude,
            fisher_trim: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if let Err(e) = self.params.validate() {
            issues.push(e.to_string());
        }
        if self.n_samples == 0 {
            issues.push("n_samples must be >= 1".into());
        }
        if self.trials == 0 {
            issues.push("trials must be >= 1".into());
        }
        if self.hist_bins == 0 {
            issues.push("hist_bins must be >= 1".into());
        }
        if self.subcarrier >= self.params.n_subcarriers {
            issues.push(format!(
                "subcarrier ({}) must be below n_subcarriers ({})",
                self.subcarrier, self.params.n_subcarriers
            ));
        }
        if self.energy_grid.is_empty() {
            issues.push("energy_grid must be nonempty".into());
        }
        if !self.energy_grid.windows(2).all(|w| w[0] < w[1]) {
            issues.push("energy_grid must be strictly increasing".into());
        }
        if self.energy_grid.iter().any(|&e| !e.is_finite() || e <= 0.0) {
            issues.push("energy_grid values must be finite positive reals".into());
        }
        if self.length_grid.is_empty() {
            issues.push("length_grid must be nonempty".into());
        }
        if !self.length_grid.windows(2).all(|w| w[0] < w[1]) {
            issues.push("length_grid must be strictly increasing".into());
        }
        if self.length_grid.first().is_some_and(|&p| p == 0) {
            issues.push("length_grid values must be >= 1".into());
        }
        if self.hist_n1.is_empty() {
            issues.push("hist_n1 must be nonempty".into());
        }
        if self.hist_n1.contains(&0) {
            issues.push("hist_n1 values must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.fisher_trim) {
            issues.push(format!(
                "fisher_trim must lie in [0, 1), got {}",
                self.fisher_trim
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(issues.join("; ")))
        }
    }

    /// The directory outputs land in ("out" unless configured).
    pub fn effective_out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Result of the histogram/fit pipeline.
#[derive(Debug, Clone)]
pub struct HistFitOutput {
    pub fit: RayleighFit,
    pub fisher: FisherPrior,
    pub csv_path: PathBuf,
}

/// Result of one MSE sweep pipeline.
#[derive(Debug, Clone)]
pub struct MseSweepOutput {
    pub points: Vec<MsePoint>,
    pub fit: RayleighFit,
    pub fisher: FisherPrior,
    pub csv_path: PathBuf,
}

/// Per-pipeline entry of the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub name: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_stat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fisher_prior: Option<f64>,
}

/// Machine-readable report of a full `run_all`, also written as
/// `summary.json`. The embedded config echo is accepted back by
/// `--config`, so every run is regenerable from its summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub fisher_mode: FisherMode,
    pub config: ExperimentConfig,
    pub pipelines: Vec<PipelineReport>,
    #[serde(skip)]
    pub summary_path: PathBuf,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.pipelines.iter().all(|p| p.ok)
    }
}

// Pipeline label words; part of the determinism contract.
const PIPE_HIST: u64 = 1;
const PIPE_MSE_ENERGY: u64 = 2;
const PIPE_MSE_LENGTH: u64 = 3;
const ROLE_SAMPLE: u64 = 10;

/// 17-significant-digit decimal rendering used for every float column.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct CsvFile {
    path: PathBuf,
    buf: String,
}

impl CsvFile {
    fn new(path: PathBuf) -> Self {
        CsvFile {
            path,
            buf: String::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.buf.push_str(&format!("# {key}: {value}\n"));
    }

    fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    fn write(self) -> Result<PathBuf> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::File::create(&self.path).map_err(|e| Error::io(&self.path, e))?;
        f.write_all(self.buf.as_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn config_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

fn common_meta(csv: &mut CsvFile, cfg: &ExperimentConfig) {
    csv.meta("tool", "irs-chanest");
    csv.meta("version", crate::VERSION);
    csv.meta("seed", cfg.seed.0);
    csv.meta("link", cfg.link);
    csv.meta("fisher_mode", cfg.fisher_mode);
    csv.meta("fisher_trim", cfg.fisher_trim);
    csv.meta("config", config_json(cfg));
}

/// Draw `n_samples` of the configured link's cascade, in parallel over
/// per-sample derived streams (reduction order fixed by sample index).
fn cascade_samples(cfg: &ExperimentConfig, pipeline: u64) -> Vec<Complex64> {
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let stream = derive_stream(cfg.seed, &[pipeline, ROLE_SAMPLE, i as u64]);
            draw_link_cascade(&cfg.params, cfg.link, &stream, cfg.subcarrier)
        })
        .collect()
}

fn fit_and_fisher(
    cfg: &ExperimentConfig,
    samples: &[Complex64],
) -> Result<(RayleighFit, FisherPrior)> {
    let magnitudes: Vec<f64> = samples.iter().map(|j| j.norm()).collect();
    let fit = rayleigh_mle(&magnitudes)?;
    let fisher = fisher_prior_trimmed(samples, fit.b_hat, cfg.fisher_mode, cfg.fisher_trim)?;
    Ok((fit, fisher))
}

/// Histogram the link's cascade magnitude, fit a Rayleigh scale by maximum
/// likelihood, and emit bin edges, normalized counts, and the fitted
/// density at bin centers.
pub fn run_hist_fit(cfg: &ExperimentConfig) -> Result<HistFitOutput> {
    cfg.validate()?;
    let samples = cascade_samples(cfg, PIPE_HIST);
    let (fit, fisher) = fit_and_fisher(cfg, &samples)?;
    let magnitudes: Vec<f64> = samples.iter().map(|j| j.norm()).collect();

    let max = magnitudes.iter().copied().fold(0.0_f64, f64::max);
    let top = if max > 0.0 { max } else { 1.0 };
    let bins = cfg.hist_bins;
    let width = top / bins as f64;
    let mut counts = vec![0u64; bins];
    for &r in &magnitudes {
        let idx = ((r / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n = magnitudes.len() as f64;

    let mut csv = CsvFile::new(
        cfg.effective_out_dir()
            .join(format!("hist_fit_link{}_n1_{}.csv", cfg.link, cfg.params.n1)),
    );
    common_meta(&mut csv, cfg);
    csv.meta("n_samples", cfg.n_samples);
    csv.meta("b_hat", fmt_f64(fit.b_hat));
    csv.meta("ks_stat", fmt_f64(fit.ks_stat));
    csv.meta("fisher_prior", fmt_f64(fisher.value));
    csv.row(&[
        "bin_left".into(),
        "bin_right".into(),
        "bin_center".into(),
        "density".into(),
        "rayleigh_pdf".into(),
    ]);
    for (i, &count) in counts.iter().enumerate() {
        let left = i as f64 * width;
        let right = (i + 1) as f64 * width;
        let center = (i as f64 + 0.5) * width;
        csv.row(&[
            fmt_f64(left),
            fmt_f64(right),
            fmt_f64(center),
            fmt_f64(count as f64 / (n * width)),
            fmt_f64(rayleigh_pdf(center, fit.b_hat)),
        ]);
    }
    let csv_path = csv.write()?;
    Ok(HistFitOutput {
        fit,
        fisher,
        csv_path,
    })
}

fn write_mse_csv(
    cfg: &ExperimentConfig,
    name: &str,
    sweep_column: &str,
    points: &[MsePoint],
    fit: &RayleighFit,
    fisher: &FisherPrior,
) -> Result<PathBuf> {
    let mut csv = CsvFile::new(cfg.effective_out_dir().join(name));
    common_meta(&mut csv, cfg);
    csv.meta("trials", cfg.trials);
    csv.meta("b_hat", fmt_f64(fit.b_hat));
    csv.meta("ks_stat", fmt_f64(fit.ks_stat));
    csv.meta("fisher_prior", fmt_f64(fisher.value));
    csv.row(&[
        sweep_column.into(),
        "mse_closed_form".into(),
        "mse_empirical".into(),
        "crlb_bayesian".into(),
        "crlb_classical".into(),
    ]);
    for p in points {
        csv.row(&[
            fmt_f64(p.sweep_value),
            fmt_f64(p.closed_form),
            fmt_f64(p.empirical),
            fmt_f64(p.crlb_bayes),
            fmt_f64(p.crlb_classical),
        ]);
    }
    csv.write()
}

fn mse_point(
    cfg: &ExperimentConfig,
    params: &SystemParams,
    sweep_value: f64,
    var_j: f64,
    fisher: &FisherPrior,
) -> Result<MsePoint> {
    let x = pilot_vector(params, cfg.link, cfg.subcarrier, cfg.seed)?;
    let closed_form = closed_form_mse(&x, var_j, params.sigma2_noise)?;
    let empirical = empirical_mse(params, cfg.link, cfg.subcarrier, cfg.trials, cfg.seed)?;
    let crlb_bayes = bayesian_crlb(&x, params.sigma2_noise, fisher.value)?;
    let crlb_classical = classical_crlb(&x, params.sigma2_noise)?;
    Ok(MsePoint {
        sweep_value,
        closed_form,
        empirical,
        crlb_bayes,
        crlb_classical,
    })
}

/// MSE versus total pilot block energy at fixed pilot length: each grid
/// energy E is spread evenly over the block, so `x^H x = E`.
pub fn run_mse_vs_energy(cfg: &ExperimentConfig) -> Result<MseSweepOutput> {
    cfg.validate()?;
    let samples = cascade_samples(cfg, PIPE_MSE_ENERGY);
    let (fit, fisher) = fit_and_fisher(cfg, &samples)?;
    let var_j = theoretical_moments(&cfg.params).var(cfg.link);

    let pilot_len = cfg.params.pilot_len(cfg.link);
    let mut points = Vec::with_capacity(cfg.energy_grid.len());
    for &energy in &cfg.energy_grid {
        let mut params = cfg.params.clone();
        params.pilot_symbol_energy = energy / pilot_len as f64;
        points.push(mse_point(cfg, &params, energy, var_j, &fisher)?);
    }

    let csv_path = write_mse_csv(
        cfg,
        &format!("mse_vs_energy_link{}.csv", cfg.link),
        "pilot_energy",
        &points,
        &fit,
        &fisher,
    )?;
    Ok(MseSweepOutput {
        points,
        fit,
        fisher,
        csv_path,
    })
}

/// MSE versus pilot length at unit per-symbol energy, so `x^H x = P`.
pub fn run_mse_vs_length(cfg: &ExperimentConfig) -> Result<MseSweepOutput> {
    cfg.validate()?;
    let samples = cascade_samples(cfg, PIPE_MSE_LENGTH);
    let (fit, fisher) = fit_and_fisher(cfg, &samples)?;
    let var_j = theoretical_moments(&cfg.params).var(cfg.link);

    let mut points = Vec::with_capacity(cfg.length_grid.len());
    for &len in &cfg.length_grid {
        let mut params = cfg.params.clone();
        params.set_pilot_len(cfg.link, len);
        params.pilot_symbol_energy = 1.0;
        points.push(mse_point(cfg, &params, len as f64, var_j, &fisher)?);
    }

    let csv_path = write_mse_csv(
        cfg,
        &format!("mse_vs_length_link{}.csv", cfg.link),
        "pilot_length",
        &points,
        &fit,
        &fisher,
    )?;
    Ok(MseSweepOutput {
        points,
        fit,
        fisher,
        csv_path,
    })
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Run the histogram/fit pipeline for every configured IRS-1 size plus both
/// MSE sweeps, then write `summary.json`. Individual pipeline failures do
/// not abort the rest; the summary records which succeeded.
pub fn run_all(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out_dir = cfg.effective_out_dir();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let mut pipelines = Vec::new();

    for &n1 in &cfg.hist_n1 {
        let mut sub = cfg.clone();
        sub.params.n1 = n1;
        let name = format!("hist-fit-n1-{n1}");
        match run_hist_fit(&sub) {
            Ok(out) => pipelines.push(PipelineReport {
                name,
                ok: true,
                error: None,
                files: vec![path_string(&out.csv_path)],
                b_hat: Some(out.fit.b_hat),
                ks_stat: Some(out.fit.ks_stat),
                fisher_prior: Some(out.fisher.value),
            }),
            Err(e) => pipelines.push(PipelineReport {
                name,
                ok: false,
                error: Some(e.to_string()),
                files: vec![],
                b_hat: None,
                ks_stat: None,
                fisher_prior: None,
            }),
        }
    }

    match run_mse_vs_energy(cfg) {
        Ok(out) => pipelines.push(PipelineReport {
            name: "mse-vs-energy".into(),
            ok: true,
            error: None,
            files: vec![path_string(&out.csv_path)],
            b_hat: Some(out.fit.b_hat),
            ks_stat: Some(out.fit.ks_stat),
            fisher_prior: Some(out.fisher.value),
        }),
        Err(e) => pipelines.push(PipelineReport {
            name: "mse-vs-energy".into(),
            ok: false,
            error: Some(e.to_string()),
            files: vec![],
            b_hat: None,
            ks_stat: None,
            fisher_prior: None,
        }),
    }

    match run_mse_vs_length(cfg) {
        Ok(out) => pipelines.push(PipelineReport {
            name: "mse-vs-length".into(),
            ok: true,
            error: None,
            files: vec![path_string(&out.csv_path)],
            b_hat: Some(out.fit.b_hat),
            ks_stat: Some(out.fit.ks_stat),
            fisher_prior: Some(out.fisher.value),
        }),
        Err(e) => pipelines.push(PipelineReport {
            name: "mse-vs-length".into(),
            ok: false,
            error: Some(e.to_string()),
            files: vec![],
            b_hat: None,
            ks_stat: None,
            fisher_prior: None,
        }),
    }

    let summary_path = out_dir.join("summary.json");
    let summary = RunSummary {
        tool: "irs-chanest".into(),
        version: crate::VERSION.into(),
        seed: cfg.seed.0,
        fisher_mode: cfg.fisher_mode,
        config: cfg.clone(),
        pipelines,
        summary_path: summary_path.clone(),
    };
    let mut body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    body.push('\n');
    fs::write(&summary_path, body).map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary)
}
