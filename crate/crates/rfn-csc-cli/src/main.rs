//! Command-line driver: generate synthetic data, build dictionaries,
//! solve trace images, check recovery guarantees, and run the benchmark
//! suites to CSV.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use std::path::{Path, PathBuf};

use rfn_csc::dictionary::{
    build_dictionary, build_q_dictionary, make_ricker, ricker, ConvDictionary, QModelParams,
    Wavelet,
};
use rfn_csc::guarantees::{check_theorem1, check_theorem2, check_theorem3};
use rfn_csc::io::{read_trace_matrix, write_trace_matrix, Dtype, ExperimentConfig, KernelSection};
use rfn_csc::metrics::{corr_images, mse_code, reconstruction_score, support_corr};
use rfn_csc::rfn::{kernel_length_guidance, RfnKernel};
use rfn_csc::solvers::{
    solve_image, AmplitudeMode, BetaSchedule, SolverConfig, SolverKind, TauSchedule,
};
use rfn_csc::synthgen::{
    gen_reflectivity, gen_traces, run_freq_sweep_sized, run_table1_sized, table1_rows_default,
    NoiseSpec, ReflectivityModel,
};

#[derive(Parser)]
#[command(
    name = "rfncsc",
    version,
    about = "Convolutional sparse coding with receptive-field normalization"
)]
struct Cli {
    /// Worker threads for per-trace solves (falls back to RFNCSC_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reflectivity image and its traces.
    Synth(SynthArgs),
    /// Solve a trace image for its sparse code.
    Solve(SolveArgs),
    /// Run a benchmark suite to CSV.
    Bench(BenchArgs),
    /// Evaluate a support-recovery guarantee on a code image.
    Check(CheckArgs),
    /// Build and export an attenuated pulse bank.
    Qdict(QdictArgs),
    /// Print the header of a trace-matrix file.
    Info(InfoArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output prefix; writes <out>_x.rtm, <out>_y.rtm, <out>_manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Trace image to solve.
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Solver name: rfn-ita, support-detect, or ista.
    #[arg(long, default_value = "rfn-ita")]
    solver: String,
    /// Per-iteration shrinkage threshold for ista (lambda / c).
    #[arg(long, default_value_t = 0.14)]
    ista_beta: f64,
    #[arg(long, default_value_t = 100_000)]
    ista_max_iters: usize,
    /// Ground-truth code image for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output code image; the summary goes to <out>.summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite name: table1 or freqsweep.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20240711)]
    seed: u64,
    /// Channel count override (the full protocols use 1000 and 1200).
    #[arg(long)]
    j: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Code image; every column is checked.
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    theorem: u8,
    /// Worst noise norm over a data window (theorem 1).
    #[arg(long, default_value_t = 0.0)]
    eps_d: f64,
    /// Clip level in force (theorem 1).
    #[arg(long, default_value_t = 0.4)]
    tau: f64,
    /// Minimal spike spacing in samples (theorem 3).
    #[arg(long)]
    delta_k: Option<usize>,
    /// Write the JSON reports here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QdictArgs {
    /// Dominant radial frequency of the source pulse, rad/s.
    #[arg(long)]
    omega0: f64,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 0.004)]
    sample_interval: f64,
    /// Quality factor; "inf" exports the time-invariant bank.
    #[arg(long)]
    q: f64,
    #[arg(long)]
    l_x: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write a 64-bit payload instead of the default 32-bit.
    #[arg(long)]
    f64_payload: bool,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    file: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("RFNCSC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Check(a) => cmd_check(a),
        Command::Qdict(a) => cmd_qdict(a),
        Command::Info(a) => cmd_info(a),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    ExperimentConfig::from_json(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))
}

fn source_wavelet(cfg: &ExperimentConfig) -> Result<Wavelet> {
    match cfg.dictionary.kind.as_deref() {
        Some("impulse") => Ok(Wavelet::unit_impulse(cfg.dictionary.sample_interval)?),
        _ => Ok(match cfg.dictionary.half_width {
            Some(hw) => make_ricker(cfg.dictionary.omega0, cfg.dictionary.sample_interval, hw)?,
            None => ricker(cfg.dictionary.omega0, cfg.dictionary.sample_interval)?,
        }),
    }
}

fn dictionary_for(cfg: &ExperimentConfig, l_x: usize) -> Result<ConvDictionary> {
    let source = source_wavelet(cfg)?;
    Ok(match cfg.dictionary.q {
        Some(q) => {
            let params =
                QModelParams::new(q, cfg.dictionary.omega0, cfg.dictionary.sample_interval)?;
            build_q_dictionary(&source, &params, l_x)?
        }
        None => build_dictionary(vec![source], l_x)?,
    })
}

fn kernel_for(section: &KernelSection) -> Result<RfnKernel> {
    Ok(match section.shape.as_str() {
        "rectangular" => RfnKernel::rectangular(section.len)?,
        "gaussian" => RfnKernel::gaussian(
            section.len,
            section
                .sigma
                .ok_or_else(|| anyhow!("gaussian kernel requires sigma"))?,
        )?,
        other => bail!("unknown kernel shape {other:?}"),
    })
}

fn solver_config(cfg: &ExperimentConfig) -> Result<SolverConfig> {
    let mut sc = SolverConfig::new(
        BetaSchedule::new(cfg.solver.beta.clone(), cfg.solver.beta_decay)?,
        TauSchedule::new(cfg.rfn.tau.clone())?,
        kernel_for(&cfg.rfn.kernel)?,
    )?;
    sc.step = cfg.solver.step;
    sc.max_iters = cfg.solver.max_iters;
    sc.stop_tol = cfg.solver.stop_tol;
    sc.amplitude_mode = match cfg.solver.amplitude_mode.as_str() {
        "least-squares" => AmplitudeMode::LeastSquares,
        "projection" => AmplitudeMode::ProjectionApprox,
        "residual" => AmplitudeMode::ResidualApprox,
        "support-only" => AmplitudeMode::SupportOnly,
        other => bail!("unknown amplitude mode {other:?}"),
    };
    sc.validate()?;
    Ok(sc)
}

fn sample_interval_us(cfg: &ExperimentConfig) -> u32 {
    (cfg.dictionary.sample_interval * 1e6).round() as u32
}

fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.synth.seed = seed;
    }
    let model = ReflectivityModel {
        p: cfg.synth.p,
        sigma_r: cfg.synth.sigma_r,
        mu_r: cfg.synth.mu_r,
        delta_k: cfg.synth.delta_k,
        l_x: cfg.synth.l_x,
        j: cfg.synth.j,
        seed: cfg.synth.seed,
    };
    let x = gen_reflectivity(&model)?;
    let d = dictionary_for(&cfg, cfg.synth.l_x)?;
    let noise = cfg.synth.snr_db.map(|snr_db| NoiseSpec {
        snr_db,
        seed: cfg.synth.noise_seed.expect("validated"),
    });
    let y = gen_traces(&x, &d, noise.as_ref())?;

    let stem = args.out.to_string_lossy();
    let x_path = PathBuf::from(format!("{stem}_x.rtm"));
    let y_path = PathBuf::from(format!("{stem}_y.rtm"));
    let manifest_path = PathBuf::from(format!("{stem}_manifest.json"));
    let dtype = cfg.output_dtype();
    let us = sample_interval_us(&cfg);
    write_trace_matrix(&x_path, &x, dtype, us)?;
    write_trace_matrix(&y_path, &y, dtype, us)?;

    let nnz = x.iter().filter(|&&v| v != 0.0).count();
    let manifest = serde_json::json!({
        "config": cfg,
        "outputs": {
            "x": x_path.to_string_lossy(),
            "y": y_path.to_string_lossy(),
        },
        "realized_density": nnz as f64 / (x.len() as f64),
        "density_saturated": model.density_saturated(),
        "l_y": d.l_y(),
        "l_d": d.l_d,
    });
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    println!(
        "wrote {} ({}x{}), {} ({}x{}), {}",
        x_path.display(),
        x.nrows(),
        x.ncols(),
        y_path.display(),
        y.nrows(),
        y.ncols(),
        manifest_path.display()
    );
    Ok(0)
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let (y, meta) = read_trace_matrix(&args.y)?;
    let source = source_wavelet(&cfg)?;
    let l_d = source.len();
    let l_x = (y.nrows() + 1)
        .checked_sub(l_d)
        .ok_or_else(|| anyhow!("trace length {} shorter than the filter", y.nrows()))?;
    let d = dictionary_for(&cfg, l_x)?;
    if d.l_y() != y.nrows() {
        bail!(
            "dictionary rows {} do not match data rows {}",
            d.l_y(),
            y.nrows()
        );
    }
    let sc = solver_config(&cfg)?;
    if let Some(note) = kernel_length_guidance(&sc.kernel, d.l_d) {
        eprintln!("warning: {note}");
    }
    let kind = match args.solver.as_str() {
        "rfn-ita" => SolverKind::RfnIta,
        "support-detect" => SolverKind::SupportDetect,
        "ista" => SolverKind::Ista {
            beta: args.ista_beta,
            max_iters: args.ista_max_iters,
        },
        other => bail!("unknown solver {other:?}"),
    };
    let solved = solve_image(&y, &d, &sc, kind)?;
    write_trace_matrix(
        &args.out,
        &solved.x,
        cfg.output_dtype(),
        meta.sample_interval_us,
    )?;

    let mut summary = serde_json::json!({
        "solver": args.solver,
        "traces": y.ncols(),
        "mean_iterations": solved.mean_iterations,
        "failures": solved.failures.iter().map(|(j, m)| serde_json::json!({
            "column": j, "error": m,
        })).collect::<Vec<_>>(),
        "per_trace": solved.runs.iter().map(|r| serde_json::json!({
            "iterations": r.iterations_used,
            "residual_final": r.residual_norms.last().cloned().unwrap_or(0.0),
            "converged": r.converged,
        })).collect::<Vec<_>>(),
    });
    if let Some(truth_path) = &args.truth {
        let (truth, _) = read_trace_matrix(truth_path)?;
        let scores = serde_json::json!({
            "rho_x": corr_images(&truth, &solved.x).ok(),
            "rho_x_first": corr_images(&truth, &solved.first_x).ok(),
            "rho_support": support_corr(&truth, &solved.x).ok(),
            "rho_y": reconstruction_score(&y, &d, &solved.x).ok(),
            "mse": mse_code(&truth, &solved.x).ok(),
        });
        summary["scores"] = scores;
    }
    let summary_path = PathBuf::from(format!("{}.summary.json", args.out.to_string_lossy()));
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    println!(
        "wrote {} and {} (mean iterations {:.2})",
        args.out.display(),
        summary_path.display(),
        solved.mean_iterations
    );
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let mut w = csv::Writer::from_path(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    match args.suite.as_str() {
        "table1" => {
            let rows = table1_rows_default();
            let results = run_table1_sized(&rows, args.seed, args.j.unwrap_or(1000))?;
            w.write_record([
                "omega0", "nu", "beta1", "beta2", "L_h", "sigma_h", "rho1", "rho", "M_it",
            ])?;
            for r in &results {
                w.write_record([
                    format!("{}", r.row.omega0),
                    format!("{}", r.row.nu),
                    format!("{}", r.row.beta1),
                    format!("{}", r.row.beta2),
                    format!("{}", r.row.l_h),
                    format!("{}", r.row.sigma_h),
                    if r.degenerate {
                        "n/a".into()
                    } else {
                        format!("{:.4}", r.rho_first)
                    },
                    if r.degenerate {
                        "n/a".into()
                    } else {
                        format!("{:.4}", r.rho)
                    },
                    format!("{:.3}", r.mean_iterations),
                ])?;
            }
        }
        "freqsweep" => {
            let sweep = run_freq_sweep_sized(
                &[25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
                40.0,
                args.seed,
                args.j.unwrap_or(1200),
            )?;
            w.write_record(["f0_hz", "mse", "rho"])?;
            for p in &sweep.points {
                w.write_record([
                    format!("{}", p.f0_hz),
                    format!("{:.6}", p.mse),
                    format!("{:.4}", p.rho),
                ])?;
            }
            w.write_record(["slope", &format!("{:.4}", sweep.slope), ""])?;
        }
        other => bail!("unknown suite {other:?} (expected table1 or freqsweep)"),
    }
    w.flush()?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let (x, _) = read_trace_matrix(&args.x)?;
    let d = dictionary_for(&cfg, x.nrows())?;
    let kernel = kernel_for(&cfg.rfn.kernel)?;
    let mut reports = Vec::new();
    let mut all_hold = true;
    for j in 0..x.ncols() {
        let col = x.column(j).to_owned();
        let rep = match args.theorem {
            1 => {
                let rect = RfnKernel::rectangular(d.l_d)?;
                check_theorem1(col.view(), &d, &rect, args.eps_d, args.tau)?
            }
            2 => check_theorem2(col.view(), &d)?,
            3 => {
                let dk = args
                    .delta_k
                    .ok_or_else(|| anyhow!("--delta-k is required for theorem 3"))?;
                check_theorem3(col.view(), &d, &kernel, dk)?
            }
            other => bail!("unknown theorem {other} (expected 1, 2, or 3)"),
        };
        all_hold &= rep.condition_holds;
        reports.push(rep);
    }
    let text = serde_json::to_string_pretty(&reports)?;
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(if all_hold { 0 } else { 1 })
}

fn cmd_qdict(args: QdictArgs) -> Result<i32> {
    let source = ricker(args.omega0, args.sample_interval)?;
    let params = QModelParams::new(args.q, args.omega0, args.sample_interval)?;
    let d = build_q_dictionary(&source, &params, args.l_x)?;
    let mut m = Array2::zeros((d.l_y(), d.n_atoms()));
    for i in 0..d.n_atoms() {
        m.column_mut(i).assign(&d.column(i)?);
    }
    let dtype = if args.f64_payload {
        Dtype::F64
    } else {
        Dtype::F32
    };
    write_trace_matrix(
        &args.out,
        &m,
        dtype,
        (args.sample_interval * 1e6).round() as u32,
    )?;
    if d.truncation_warning {
        eprintln!("warning: some pulses were truncated below 99% energy");
    }
    println!(
        "wrote {} ({} columns, pulse length {})",
        args.out.display(),
        d.n_atoms(),
        d.l_d
    );
    Ok(0)
}

fn cmd_info(args: InfoArgs) -> Result<i32> {
    let (m, meta) = read_trace_matrix(&args.file)?;
    println!(
        "{}: {:?} {} rows x {} cols, sample interval {} us",
        args.file.display(),
        meta.dtype,
        meta.rows,
        meta.cols,
        meta.sample_interval_us
    );
    let energy: f64 = m.iter().map(|v| v * v).sum();
    println!("payload energy {energy:.6e}");
    Ok(0)
}
