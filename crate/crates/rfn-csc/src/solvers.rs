//! Sparse-code solvers: the receptive-field-normalized iterative
//! thresholding family, the classic shrinkage baseline, least-squares
//! amplitude refinement, and the fixed-parameter unrolled forward pass.

use crate::dictionary::ConvDictionary;
use crate::error::{Error, Result};
use crate::rfn::{clip_energy, local_energy, normalize, soft_threshold, RfnKernel};
use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

/// How detected support entries receive their amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMode {
    /// Solve the residual subsystem on the newly detected atoms.
    LeastSquares,
    /// Gate the norm-corrected projection of the residual.
    ProjectionApprox,
    /// Read the residual at each atom's center (single-filter banks only).
    ResidualApprox,
    /// Detection only; amplitudes come from the data at the end.
    SupportOnly,
}

/// Where the energy normalization is applied before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationMode {
    /// Divide each data sample by its clipped local energy, then project.
    #[default]
    Signal,
    /// Project first, then divide each atom's response by the clipped
    /// local energy at that atom's center.
    Projection,
}

/// Per-iteration detection thresholds: explicit leading values, then a
/// multiplicative decay of the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSchedule {
    pub explicit: Vec<f64>,
    pub decay: f64,
}

impl BetaSchedule {
    pub fn new(explicit: Vec<f64>, decay: f64) -> Result<Self> {
        if explicit.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one explicit threshold required".into(),
            ));
        }
        if explicit.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidParameter(
                "thresholds must be nonnegative".into(),
            ));
        }
        Ok(BetaSchedule { explicit, decay })
    }

    /// Threshold for 1-based iteration `iter`.
    pub fn at(&self, iter: usize) -> f64 {
        debug_assert!(iter >= 1);
        let n = self.explicit.len();
        if iter <= n {
            self.explicit[iter - 1]
        } else {
            self.explicit[n - 1] * self.decay.powi((iter - n) as i32)
        }
    }
}

/// Per-iteration clip levels; the last entry repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSchedule {
    pub levels: Vec<f64>,
}

impl TauSchedule {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one clip level required".into(),
            ));
        }
        if levels.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter(
                "clip levels must be positive".into(),
            ));
        }
        Ok(TauSchedule { levels })
    }

    pub fn at(&self, iter: usize) -> f64 {
        debug_assert!(iter >= 1);
        self.levels[(iter - 1).min(self.levels.len() - 1)]
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub beta: BetaSchedule,
    pub tau: TauSchedule,
    /// Correction step size in (0, 1]; the first iteration applies its
    /// amplitude estimate at full scale.
    pub step: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub amplitude_mode: AmplitudeMode,
    pub normalization: NormalizationMode,
    pub kernel: RfnKernel,
    /// Keep only local maxima of |detection response| within each run of
    /// adjacent fired atoms.
    pub peak_only: bool,
}

impl SolverConfig {
    pub fn new(beta: BetaSchedule, tau: TauSchedule, kernel: RfnKernel) -> Result<Self> {
        let cfg = SolverConfig {
            beta,
            tau,
            step: 0.5,
            max_iters: 4,
            stop_tol: 1e-4,
            amplitude_mode: AmplitudeMode::ResidualApprox,
            normalization: NormalizationMode::Signal,
            kernel,
            peak_only: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "step must lie in (0, 1], got {}",
                self.step
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "stop tolerance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub x: Array1<f64>,
    pub support: Vec<bool>,
    /// Index of the last iteration that changed the solution (min 1); a
    /// trailing iteration that only confirms convergence is not counted.
    pub iterations_used: usize,
    /// ||y - D x_theta||_2 recomputed from scratch at the top of each
    /// executed iteration (may hold one more entry than iterations_used).
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    pub first_iter_x: Array1<f64>,
    /// Set when any least-squares subsystem was rank deficient.
    pub rank_deficient: bool,
}

fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Minimum-norm least squares on the chosen support columns; zeros
/// elsewhere. Returns the solution and a rank-deficiency flag.
pub fn ls_refine(
    y: ArrayView1<f64>,
    d: &ConvDictionary,
    support: &[usize],
) -> Result<(Array1<f64>, bool)> {
    if y.len() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            d.l_y()
        )));
    }
    let mut x = Array1::zeros(d.n_atoms());
    if support.is_empty() {
        return Ok((x, false));
    }
    for &i in support {
        if i >= d.n_atoms() {
            return Err(Error::OutOfBounds(format!("support index {i}")));
        }
    }
    let rows = d.l_y();
    let cols = support.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    for (c, &i) in support.iter().enumerate() {
        let col = d.column(i)?;
        for r in 0..rows {
            a[(r, c)] = col[r];
        }
    }
    let b = nalgebra::DVector::from_iterator(rows, y.iter().cloned());
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * 1e-12 * rows.max(cols) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let sol = svd
        .solve(&b, tol)
        .map_err(|e| Error::InvalidParameter(format!("svd solve failed: {e}")))?;
    for (c, &i) in support.iter().enumerate() {
        x[i] = sol[c];
    }
    Ok((x, rank < cols))
}

/// Amplitudes read from the data at each support atom's center:
/// x[k] = y[k + (L_d-1)/2] / d_k[center].
pub fn signature_amplitude(
    y: ArrayView1<f64>,
    support: &[usize],
    d: &ConvDictionary,
) -> Result<Array1<f64>> {
    if d.n_filters() != 1 {
        return Err(Error::InvalidParameter(
            "center reads require a single-filter dictionary".into(),
        ));
    }
    if y.len() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            d.l_y()
        )));
    }
    let off = d.center_offset();
    let mut x = Array1::zeros(d.n_atoms());
    for &k in support {
        if k >= d.n_atoms() {
            return Err(Error::OutOfBounds(format!("support index {k}")));
        }
        let pos = k + off;
        if pos >= y.len() {
            return Err(Error::OutOfBounds(format!(
                "atom {k} centers at sample {pos} outside the data"
            )));
        }
        let col = d.column(k)?;
        let center = col[pos];
        if center == 0.0 {
            return Err(Error::DegenerateAtom(format!(
                "atom {k} has zero central value"
            )));
        }
        x[k] = y[pos] / center;
    }
    Ok(x)
}

/// Detection response |z| for the current residual under the configured
/// normalization, together with the clipped energy field denominator.
fn detection_response(
    residual: &Array1<f64>,
    d: &ConvDictionary,
    cfg: &SolverConfig,
    tau: f64,
) -> Result<Array1<f64>> {
    let field = clip_energy(&local_energy(residual.view(), &cfg.kernel), tau)?;
    let z = match cfg.normalization {
        NormalizationMode::Signal => {
            let normalized = normalize(residual.view(), &field);
            d.adjoint(normalized.view())?
        }
        NormalizationMode::Projection => {
            let mut z = d.adjoint(residual.view())?;
            let off = d.center_offset();
            for k in 0..z.len() {
                z[k] /= field.clipped[(k % d.l_x) + off];
            }
            z
        }
    };
    let norms = d.atom_norms();
    Ok(Array1::from_iter(
        z.iter().zip(norms.iter()).map(|(v, n)| v / n),
    ))
}

fn suppress_non_peaks(fired: &mut [bool], z: &Array1<f64>) {
    let n = fired.len();
    let mut i = 0;
    while i < n {
        if !fired[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && fired[i] {
            i += 1;
        }
        // keep only local maxima of |z| inside [start, i)
        for k in start..i {
            let v = z[k].abs();
            let left = if k > start { z[k - 1].abs() } else { 0.0 };
            let right = if k + 1 < i { z[k + 1].abs() } else { 0.0 };
            if v < left || v < right {
                fired[k] = false;
            }
        }
    }
}

/// Iterative thresholding with receptive-field normalization.
///
/// Each iteration recomputes the residual, measures and clips its local
/// energy, thresholds the normalized detection response, and assigns
/// amplitudes to the *newly* detected atoms per `cfg.amplitude_mode`.
/// The first iteration applies its estimate at full scale; later
/// corrections are damped by `cfg.step`. The run converges when an
/// iteration changes the solution by less than `cfg.stop_tol` (in
/// particular, when no new support appears).
pub fn rfn_ita(y: ArrayView1<f64>, d: &ConvDictionary, cfg: &SolverConfig) -> Result<SolverRun> {
    cfg.validate()?;
    if y.len() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            d.l_y()
        )));
    }
    if cfg.amplitude_mode == AmplitudeMode::SupportOnly {
        return rfn_support_detect(y, d, cfg);
    }
    if cfg.amplitude_mode == AmplitudeMode::ResidualApprox && d.n_filters() != 1 {
        return Err(Error::InvalidParameter(
            "residual reads require a single-filter dictionary".into(),
        ));
    }

    let n_atoms = d.n_atoms();
    let off = d.center_offset();
    let mut x: Array1<f64> = Array1::zeros(n_atoms);
    let mut first_iter_x = Array1::zeros(n_atoms);
    let mut detected = vec![false; n_atoms];
    let mut residual_norms = Vec::with_capacity(cfg.max_iters);
    let mut rank_deficient = false;
    let mut converged = false;
    let mut iterations_used = 0;

    for iter in 1..=cfg.max_iters {
        let residual = &y.to_owned() - &d.apply(x.view())?;
        residual_norms.push(l2(&residual));

        let z = detection_response(&residual, d, cfg, cfg.tau.at(iter))?;
        let beta = cfg.beta.at(iter);
        let mut fired: Vec<bool> = z.iter().map(|v| v.abs() >= beta).collect();
        if cfg.peak_only {
            suppress_non_peaks(&mut fired, &z);
        }
        let new_support: Vec<usize> = (0..n_atoms).filter(|&k| fired[k] && !detected[k]).collect();

        let mut dx: Array1<f64> = Array1::zeros(n_atoms);
        if !new_support.is_empty() {
            for &k in &new_support {
                detected[k] = true;
            }
            match cfg.amplitude_mode {
                AmplitudeMode::LeastSquares => {
                    let (sol, deficient) = ls_refine(residual.view(), d, &new_support)?;
                    rank_deficient |= deficient;
                    dx = sol;
                }
                AmplitudeMode::ProjectionApprox => {
                    let proj = d.adjoint(residual.view())?;
                    let norms = d.atom_norms();
                    for &k in &new_support {
                        dx[k] = proj[k] / (norms[k] * norms[k]);
                    }
                }
                AmplitudeMode::ResidualApprox => {
                    for &k in &new_support {
                        dx[k] = residual[k + off];
                    }
                }
                AmplitudeMode::SupportOnly => unreachable!(),
            }
        }

        let scale = if iter == 1 { 1.0 } else { cfg.step };
        let diff = scale * l2(&dx);
        if diff > 0.0 {
            x = &x + &dx.mapv(|v| v * scale);
            iterations_used = iter;
        }
        if iter == 1 {
            first_iter_x = x.clone();
            iterations_used = 1;
        }
        if diff < cfg.stop_tol {
            converged = true;
            break;
        }
    }

    let support = x.iter().map(|&v| v != 0.0).collect();
    Ok(SolverRun {
        x,
        support,
        iterations_used,
        residual_norms,
        converged,
        first_iter_x,
        rank_deficient,
    })
}

/// Support-detection variant: normalize the data once, accumulate damped
/// detection indicators against it, binarize at 0.5, and read final
/// amplitudes directly off the data.
pub fn rfn_support_detect(
    y: ArrayView1<f64>,
    d: &ConvDictionary,
    cfg: &SolverConfig,
) -> Result<SolverRun> {
    cfg.validate()?;
    if d.n_filters() != 1 {
        return Err(Error::InvalidParameter(
            "support detection requires a single-filter dictionary".into(),
        ));
    }
    if y.len() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            d.l_y()
        )));
    }
    let n_atoms = d.n_atoms();
    let norms = d.atom_norms();

    let field = clip_energy(&local_energy(y, &cfg.kernel), cfg.tau.at(1))?;
    let y_tilde = normalize(y, &field);

    let mut q: Array1<f64> = Array1::zeros(n_atoms);
    let mut first_iter_x = Array1::zeros(n_atoms);
    let mut residual_norms = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut iterations_used = 0;
    let mut prev_residual: Option<Array1<f64>> = None;

    for iter in 1..=cfg.max_iters {
        let residual = &y_tilde - &d.apply(q.view())?;
        residual_norms.push(l2(&residual));

        let mut z = d.adjoint(residual.view())?;
        for k in 0..n_atoms {
            z[k] /= norms[k];
        }
        let beta = cfg.beta.at(iter);
        let dq: Array1<f64> = z.mapv(|v| if v.abs() >= beta { 1.0 } else { 0.0 });
        if dq.iter().any(|&v| v != 0.0) {
            q = &q + &dq.mapv(|v| v * cfg.step);
            iterations_used = iter;
        }
        if iter == 1 {
            first_iter_x = binarized_amplitudes(&q, y, d)?;
            iterations_used = 1;
        }
        if let Some(prev) = &prev_residual {
            if l2(&(&residual - prev)) < cfg.stop_tol {
                converged = true;
                break;
            }
        }
        prev_residual = Some(residual);
    }

    let x = binarized_amplitudes(&q, y, d)?;
    let support = x.iter().map(|&v| v != 0.0).collect();
    Ok(SolverRun {
        x,
        support,
        iterations_used,
        residual_norms,
        converged,
        first_iter_x,
        rank_deficient: false,
    })
}

/// q binarized at 0.5, then x[k] = q_hat[k] * y[k] (the detection stage's
/// final line, which reads the raw data at the support index itself).
fn binarized_amplitudes(
    q: &Array1<f64>,
    y: ArrayView1<f64>,
    d: &ConvDictionary,
) -> Result<Array1<f64>> {
    let mut x = Array1::zeros(d.n_atoms());
    for k in 0..d.n_atoms() {
        if q[k] >= 0.5 {
            x[k] = y[k];
        }
    }
    Ok(x)
}

/// Power-iteration estimate of the largest eigenvalue of D^T D,
/// relative tolerance 1e-6.
pub fn spectral_norm_sq(d: &ConvDictionary) -> f64 {
    let n = d.n_atoms();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    // deterministic perturbation to avoid unlucky orthogonal starts
    for (i, e) in v.iter_mut().enumerate() {
        *e += 1e-3 * ((i % 7) as f64 - 3.0) / (n as f64).sqrt();
    }
    let mut lambda = 0.0;
    // the Rayleigh quotient stalls long before it converges on coherent
    // dictionaries, so the per-step change must be far below the target
    for _ in 0..200_000 {
        let w = d
            .adjoint(d.apply(v.view()).expect("dims agree").view())
            .expect("dims agree");
        let norm = l2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        let next = &w / norm;
        let new_lambda = next.dot(&d.adjoint(d.apply(next.view()).unwrap().view()).unwrap());
        let done = (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1e-300);
        lambda = new_lambda;
        v = next;
        if done {
            break;
        }
    }
    lambda
}

/// Classic iterative shrinkage: x <- S_{lambda/c}(x + D^T(y - Dx)/c).
///
/// `c` must exceed the largest eigenvalue of D^T D (checked against the
/// power-iteration estimate).
pub fn ista(
    y: ArrayView1<f64>,
    d: &ConvDictionary,
    lambda: f64,
    c: f64,
    max_iters: usize,
    stop_tol: f64,
) -> Result<SolverRun> {
    let lam_max = spectral_norm_sq(d);
    ista_with_bound(y, d, lambda, c, max_iters, stop_tol, lam_max)
}

/// Shrinkage iteration with a caller-supplied spectral bound estimate, so
/// image-level drivers estimate the bound once instead of per column.
fn ista_with_bound(
    y: ArrayView1<f64>,
    d: &ConvDictionary,
    lambda: f64,
    c: f64,
    max_iters: usize,
    stop_tol: f64,
    lam_max: f64,
) -> Result<SolverRun> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if y.len() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            d.l_y()
        )));
    }
    if c <= lam_max * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "c = {c} must exceed the spectral bound {lam_max}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
    }

    let mut x: Array1<f64> = Array1::zeros(d.n_atoms());
    let mut first_iter_x = Array1::zeros(d.n_atoms());
    let mut residual_norms = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;
    for iter in 1..=max_iters {
        let residual = &y.to_owned() - &d.apply(x.view())?;
        residual_norms.push(l2(&residual));
        let grad = d.adjoint(residual.view())?;
        let arg = &x + &grad.mapv(|g| g / c);
        let next = soft_threshold(arg.view(), lambda / c);
        let diff = l2(&(&next - &x));
        if diff > 0.0 {
            x = next;
            iterations_used = iter;
        }
        if iter == 1 {
            first_iter_x = x.clone();
            iterations_used = 1;
        }
        if diff < stop_tol {
            converged = true;
            break;
        }
    }
    let support = x.iter().map(|&v| v != 0.0).collect();
    Ok(SolverRun {
        x,
        support,
        iterations_used,
        residual_norms,
        converged,
        first_iter_x,
        rank_deficient: false,
    })
}

/// One layer of the unrolled forward pass.
#[derive(Debug, Clone)]
pub struct UnrolledLayer {
    pub dict: ConvDictionary,
    pub beta: f64,
    pub step: f64,
}

/// Fixed-parameter unrolled forward pass.
///
/// Layer theta computes the residual against the previous layer's
/// dictionary, soft-thresholds the projection of the energy-normalized
/// residual (no atom-norm correction), and gates center reads of the raw
/// residual by the soft response magnitude:
/// x <- step * |S_beta(D^T W r)| (.) r_centered + x.
pub fn unrolled_forward(
    y: ArrayView1<f64>,
    layers: &[UnrolledLayer],
    kernel: &RfnKernel,
    tau: &TauSchedule,
) -> Result<Array1<f64>> {
    if layers.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one layer required".into(),
        ));
    }
    let l_x = layers[0].dict.l_x;
    let l_y = layers[0].dict.l_y();
    if y.len() != l_y {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match L_y = {}",
            y.len(),
            l_y
        )));
    }
    for l in layers {
        if l.dict.n_filters() != 1 || l.dict.l_x != l_x || l.dict.l_y() != l_y {
            return Err(Error::InvalidParameter(
                "layer dictionaries must be single-filter and share dimensions".into(),
            ));
        }
    }

    let mut x: Array1<f64> = Array1::zeros(l_x);
    let mut prev_dict = &layers[0].dict;
    for (i, layer) in layers.iter().enumerate() {
        let residual = if i == 0 {
            y.to_owned()
        } else {
            &y.to_owned() - &prev_dict.apply(x.view())?
        };
        let field = clip_energy(&local_energy(residual.view(), kernel), tau.at(i + 1))?;
        let normalized = normalize(residual.view(), &field);
        let proj = layer.dict.adjoint(normalized.view())?;
        let gate = soft_threshold(proj.view(), layer.beta).mapv(f64::abs);
        let off = layer.dict.center_offset();
        for k in 0..l_x {
            x[k] += layer.step * gate[k] * residual[k + off];
        }
        prev_dict = &layer.dict;
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    RfnIta,
    SupportDetect,
    /// Shrinkage baseline; `beta` is the per-iteration threshold
    /// lambda / c, and c = 1.001 * spectral bound.
    Ista {
        beta: f64,
        max_iters: usize,
    },
}

/// Outcome of solving every column of an image.
#[derive(Debug)]
pub struct ImageSolve {
    pub x: Array2<f64>,
    pub first_x: Array2<f64>,
    pub runs: Vec<SolverRun>,
    /// Columns whose solve failed, with the failure text.
    pub failures: Vec<(usize, String)>,
    pub mean_iterations: f64,
}

/// Applies the chosen solver to every column independently (in parallel);
/// results are ordered by column index regardless of scheduling.
pub fn solve_image(
    y: &Array2<f64>,
    d: &ConvDictionary,
    cfg: &SolverConfig,
    kind: SolverKind,
) -> Result<ImageSolve> {
    if y.nrows() != d.l_y() {
        return Err(Error::InvalidParameter(format!(
            "image rows {} do not match L_y = {}",
            y.nrows(),
            d.l_y()
        )));
    }
    let (lambda, c, lam_max) = match kind {
        SolverKind::Ista { beta, .. } => {
            let lam = spectral_norm_sq(d);
            let c = 1.001 * lam;
            (beta * c, c, lam)
        }
        _ => (0.0, 0.0, 0.0),
    };
    let n_cols = y.ncols();
    let results: Vec<Result<SolverRun>> = (0..n_cols)
        .into_par_iter()
        .map(|j| {
            let col = y.column(j);
            match kind {
                SolverKind::RfnIta => rfn_ita(col, d, cfg),
                SolverKind::SupportDetect => rfn_support_detect(col, d, cfg),
                SolverKind::Ista { max_iters, .. } => {
                    ista_with_bound(col, d, lambda, c, max_iters, cfg.stop_tol, lam_max)
                }
            }
        })
        .collect();

    let mut x = Array2::zeros((d.n_atoms(), n_cols));
    let mut first_x = Array2::zeros((d.n_atoms(), n_cols));
    let mut runs = Vec::with_capacity(n_cols);
    let mut failures = Vec::new();
    let mut iter_sum = 0usize;
    let mut solved = 0usize;
    for (j, res) in results.into_iter().enumerate() {
        match res {
            Ok(run) => {
                x.column_mut(j).assign(&run.x);
                first_x.column_mut(j).assign(&run.first_iter_x);
                iter_sum += run.iterations_used;
                solved += 1;
                runs.push(run);
            }
            Err(e) => failures.push((j, e.to_string())),
        }
    }
    let mean_iterations = if solved > 0 {
        iter_sum as f64 / solved as f64
    } else {
        0.0
    };
    Ok(ImageSolve {
        x,
        first_x,
        runs,
        failures,
        mean_iterations,
    })
}
