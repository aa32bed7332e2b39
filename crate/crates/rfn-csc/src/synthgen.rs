//! Synthetic reflectivity and trace generation, plus the two benchmark
//! protocols the CLI exposes.

use crate::dictionary::{build_dictionary, ricker, ConvDictionary};
use crate::error::{Error, Result};
use crate::metrics::{corr_images, mse_code};
use crate::rfn::RfnKernel;
use crate::solvers::{
    solve_image, AmplitudeMode, BetaSchedule, SolverConfig, SolverKind, TauSchedule,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SAMPLE_INTERVAL: f64 = 0.004;
pub const SAMPLING_RATE: f64 = 250.0;

/// Bernoulli-Gaussian reflectivity ensemble with a minimal spike spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflectivityModel {
    /// Bernoulli firing probability per sample.
    pub p: f64,
    /// Amplitude standard deviation.
    pub sigma_r: f64,
    /// Amplitude mean.
    pub mu_r: f64,
    /// Minimal spacing between spikes, in samples.
    pub delta_k: usize,
    pub l_x: usize,
    /// Channel count.
    pub j: usize,
    pub seed: u64,
}

impl ReflectivityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InfeasibleModel(format!(
                "firing probability must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.delta_k == 0 {
            return Err(Error::InfeasibleModel("delta_k must be >= 1".into()));
        }
        if self.l_x == 0 || self.j == 0 {
            return Err(Error::InfeasibleModel("empty image requested".into()));
        }
        if !(self.sigma_r >= 0.0) {
            return Err(Error::InfeasibleModel("sigma_r must be nonnegative".into()));
        }
        Ok(())
    }

    /// Requested density saturates once p exceeds 1/delta_k; the rejection
    /// rule then caps the realized density below the request.
    pub fn density_saturated(&self) -> bool {
        self.p * self.delta_k as f64 > 1.0
    }
}

/// Additive white noise pinned to a target signal-to-noise ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Draws the reflectivity image. Spikes violating the minimal spacing are
/// rejected in favor of the earlier spike. Channels use independent
/// streams keyed by (seed, channel), so generation order is irrelevant.
pub fn gen_reflectivity(model: &ReflectivityModel) -> Result<Array2<f64>> {
    model.validate()?;
    let cols: Vec<Array1<f64>> = (0..model.j)
        .into_par_iter()
        .map(|channel| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(channel as u64 + 1);
            let mut col = Array1::zeros(model.l_x);
            let mut last: Option<usize> = None;
            for k in 0..model.l_x {
                if rng.gen::<f64>() < model.p {
                    let ok = match last {
                        Some(prev) => k - prev >= model.delta_k,
                        None => true,
                    };
                    if ok {
                        let amp: f64 = model.mu_r
                            + model.sigma_r * rng.sample::<f64, _>(rand_distr::StandardNormal);
                        col[k] = amp;
                        last = Some(k);
                    }
                }
            }
            col
        })
        .collect();
    let mut x = Array2::zeros((model.l_x, model.j));
    for (j, col) in cols.into_iter().enumerate() {
        x.column_mut(j).assign(&col);
    }
    Ok(x)
}

/// Y = D X (+ W), noise scaled so the image-level SNR hits the target.
pub fn gen_traces(
    x: &Array2<f64>,
    d: &ConvDictionary,
    noise: Option<&NoiseSpec>,
) -> Result<Array2<f64>> {
    if x.nrows() != d.n_atoms() {
        return Err(Error::InvalidParameter(format!(
            "code rows {} do not match {} atoms",
            x.nrows(),
            d.n_atoms()
        )));
    }
    let mut y = Array2::zeros((d.l_y(), x.ncols()));
    for j in 0..x.ncols() {
        y.column_mut(j).assign(&d.apply(x.column(j))?);
    }
    if let Some(spec) = noise {
        let signal_energy: f64 = y.iter().map(|v| v * v).sum();
        if signal_energy > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(u64::MAX); // distinct from reflectivity streams
            let mut w = Array2::zeros(y.dim());
            for v in w.iter_mut() {
                *v = rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            let noise_energy: f64 = w.iter().map(|v| v * v).sum();
            let scale = (signal_energy / (noise_energy * 10f64.powf(spec.snr_db / 10.0))).sqrt();
            y = &y + &w.mapv(|v| v * scale);
        }
    }
    Ok(y)
}

/// One benchmark row: wavelet scaling, separation, thresholds, window, and
/// the generator/solver settings that reproduce the published score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Row {
    pub omega0: f64,
    pub nu: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub l_h: usize,
    pub sigma_h: f64,
    /// Bernoulli density used for this row's ensemble.
    pub p: f64,
    /// Amplitude mode for the correction iterations.
    #[serde(default = "default_ls")]
    pub least_squares: bool,
    /// Clip levels per iteration, last repeating.
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    /// Keep only cluster peaks when thresholding.
    #[serde(default)]
    pub peak_only: bool,
}

fn default_tau() -> Vec<f64> {
    vec![0.4, 1.0]
}

fn default_ls() -> bool {
    true
}

impl Table1Row {
    /// Minimal spacing implied by the separation constant: ceil(F_s nu / omega0).
    pub fn delta_k(&self) -> usize {
        (SAMPLING_RATE * self.nu / self.omega0).ceil() as usize
    }
}

/// The five benchmark rows with their calibrated ensemble densities.
pub fn table1_rows_default() -> Vec<Table1Row> {
    let pi = std::f64::consts::PI;
    vec![
        Table1Row {
            omega0: 80.0 * pi,
            nu: 5.0,
            beta1: 0.95,
            beta2: 0.88,
            l_h: 11,
            sigma_h: 2.0,
            p: 0.2,
            least_squares: true,
            tau: vec![0.4, 1.0],
            peak_only: false,
        },
        Table1Row {
            omega0: 80.0 * pi,
            nu: 3.0,
            beta1: 0.95,
            beta2: 0.87,
            l_h: 11,
            sigma_h: 2.0,
            p: 0.12,
            least_squares: true,
            tau: vec![0.4, 1.0],
            peak_only: false,
        },
        Table1Row {
            omega0: 80.0 * pi,
            nu: 1.0,
            beta1: 0.80,
            beta2: 0.66,
            l_h: 9,
            sigma_h: 2.0,
            p: 0.22,
            least_squares: true,
            tau: vec![0.4, 1.0],
            peak_only: false,
        },
        Table1Row {
            omega0: 50.0 * pi,
            nu: 5.0,
            beta1: 0.98,
            beta2: 0.98,
            l_h: 17,
            sigma_h: 3.0,
            p: 0.21,
            least_squares: true,
            tau: vec![0.4, 1.0],
            peak_only: false,
        },
        Table1Row {
            omega0: 50.0 * pi,
            nu: 3.0,
            beta1: 0.98,
            beta2: 0.87,
            l_h: 17,
            sigma_h: 4.0,
            p: 0.115,
            least_squares: false,
            tau: vec![0.4, 1.0],
            peak_only: false,
        },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Result {
    pub row: Table1Row,
    pub delta_k: usize,
    pub rho_first: f64,
    pub rho: f64,
    pub mean_iterations: f64,
    pub realized_density: f64,
    /// Set when recovery is identically zero and the scores are undefined.
    pub degenerate: bool,
}

/// Shared protocol constants for the benchmark rows.
const BENCH_J: usize = 1000;
const BENCH_L_X: usize = 60;
const BENCH_SIGMA_R: f64 = 3.0;
const BENCH_STEP: f64 = 0.5;
const BENCH_MAX_ITERS: usize = 4;
const BENCH_STOP_TOL: f64 = 1e-4;
const BENCH_TAU: [f64; 2] = [0.4, 1.0];

fn row_config(row: &Table1Row) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::new(
        BetaSchedule::new(vec![row.beta1, row.beta2], 0.5)?,
        TauSchedule::new(row.tau.clone())?,
        RfnKernel::gaussian(row.l_h, row.sigma_h)?,
    )?;
    cfg.step = BENCH_STEP;
    cfg.max_iters = BENCH_MAX_ITERS;
    cfg.stop_tol = BENCH_STOP_TOL;
    cfg.amplitude_mode = if row.least_squares {
        AmplitudeMode::LeastSquares
    } else {
        AmplitudeMode::ResidualApprox
    };
    cfg.peak_only = row.peak_only;
    Ok(cfg)
}

/// Runs the benchmark rows at J=1000, L_x=60 and reports first-iteration
/// and final correlation scores plus the mean iteration count.
pub fn run_table1(rows: &[Table1Row], seed: u64) -> Result<Vec<Table1Result>> {
    run_table1_sized(rows, seed, BENCH_J)
}

/// Same protocol with a custom channel count (small counts for smoke runs).
pub fn run_table1_sized(rows: &[Table1Row], seed: u64, j: usize) -> Result<Vec<Table1Result>> {
    let mut out = Vec::with_capacity(rows.len());
    for (idx, row) in rows.iter().enumerate() {
        let model = ReflectivityModel {
            p: row.p,
            sigma_r: BENCH_SIGMA_R,
            mu_r: 0.0,
            delta_k: row.delta_k(),
            l_x: BENCH_L_X,
            j,
            seed: seed.wrapping_add(idx as u64),
        };
        let x = gen_reflectivity(&model)?;
        let d = build_dictionary(vec![ricker(row.omega0, SAMPLE_INTERVAL)?], BENCH_L_X)?;
        let y = gen_traces(&x, &d, None)?;
        let cfg = row_config(row)?;
        let solved = solve_image(&y, &d, &cfg, SolverKind::RfnIta)?;
        if let Some((col, msg)) = solved.failures.first() {
            return Err(Error::InvalidParameter(format!(
                "column {col} failed: {msg}"
            )));
        }
        let nnz = x.iter().filter(|&&v| v != 0.0).count();
        let degenerate = solved.x.iter().all(|&v| v == 0.0);
        let (rho_first, rho) = if degenerate {
            (0.0, 0.0)
        } else {
            (
                corr_images(&x, &solved.first_x).unwrap_or(0.0),
                corr_images(&x, &solved.x).unwrap_or(0.0),
            )
        };
        out.push(Table1Result {
            row: row.clone(),
            delta_k: row.delta_k(),
            rho_first,
            rho,
            mean_iterations: solved.mean_iterations,
            realized_density: nnz as f64 / (BENCH_L_X * j) as f64,
            degenerate,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub f0_hz: f64,
    pub mse: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// OLS slope of log(mse) against log(omega0).
    pub slope: f64,
}

const SWEEP_J: usize = 1200;
const SWEEP_P: f64 = 0.4;
const SWEEP_DELTA_K: usize = 5;
const SWEEP_L_H: usize = 11;
const SWEEP_SIGMA_H: f64 = 2.0;

/// Noise-robustness sweep over the dominant frequency: per frequency the
/// mean squared code error and correlation, plus the log-log error slope.
pub fn run_freq_sweep(f0_hz: &[f64], snr_db: f64, seed: u64) -> Result<SweepResult> {
    run_freq_sweep_sized(f0_hz, snr_db, seed, SWEEP_J)
}

pub fn run_freq_sweep_sized(
    f0_hz: &[f64],
    snr_db: f64,
    seed: u64,
    j: usize,
) -> Result<SweepResult> {
    if f0_hz.len() < 2 {
        return Err(Error::InvalidParameter(
            "sweep needs at least two frequencies".into(),
        ));
    }
    let mut points = Vec::with_capacity(f0_hz.len());
    for (idx, &f0) in f0_hz.iter().enumerate() {
        let omega0 = 2.0 * std::f64::consts::PI * f0;
        let model = ReflectivityModel {
            p: SWEEP_P,
            sigma_r: BENCH_SIGMA_R,
            mu_r: 0.0,
            delta_k: SWEEP_DELTA_K,
            l_x: BENCH_L_X,
            j,
            seed: seed.wrapping_add(1000 + idx as u64),
        };
        let x = gen_reflectivity(&model)?;
        let d = build_dictionary(vec![ricker(omega0, SAMPLE_INTERVAL)?], BENCH_L_X)?;
        let noise = NoiseSpec {
            snr_db,
            seed: seed.wrapping_add(2000 + idx as u64),
        };
        let y = gen_traces(&x, &d, Some(&noise))?;

        let beta1 = 1.22 - 0.01 * (f0 - 25.0);
        let mut cfg = SolverConfig::new(
            BetaSchedule::new(vec![beta1, beta1 + 0.2], 0.5)?,
            TauSchedule::new(BENCH_TAU.to_vec())?,
            RfnKernel::gaussian(SWEEP_L_H, SWEEP_SIGMA_H)?,
        )?;
        cfg.step = BENCH_STEP;
        cfg.max_iters = BENCH_MAX_ITERS;
        cfg.stop_tol = BENCH_STOP_TOL;
        cfg.amplitude_mode = AmplitudeMode::ResidualApprox;
        let solved = solve_image(&y, &d, &cfg, SolverKind::RfnIta)?;
        let mse = mse_code(&x, &solved.x)?;
        let rho = corr_images(&x, &solved.x).unwrap_or(0.0);
        points.push(SweepPoint {
            f0_hz: f0,
            mse,
            rho,
        });
    }

    // OLS fit of log(mse) on log(omega0)
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            (
                (2.0 * std::f64::consts::PI * p.f0_hz).ln(),
                p.mse.max(1e-300).ln(),
            )
        })
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(SweepResult { points, slope })
}
