//! Executable sufficient-condition checkers for first-iteration support
//! recovery, with the admissible detection-threshold interval each
//! condition implies.

use crate::dictionary::{mutual_coherence, ConvDictionary};
use crate::error::{Error, Result};
use crate::rfn::{clip_energy, local_energy, KernelShape, RfnKernel};
use ndarray::ArrayView1;
use serde::Serialize;

/// Window statistics of a sparse code over sliding coefficient stripes.
#[derive(Debug, Clone)]
pub struct StripeStats {
    /// Max nonzeros among all stripes (the stripe sparsity).
    pub s: usize,
    /// One entry per support index.
    pub per_support: Vec<SupportStripe>,
    /// Global min/max |x| over the support.
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone)]
pub struct SupportStripe {
    pub index: usize,
    pub value_abs: f64,
    /// Min/max |x| over the support entries inside this stripe.
    pub min_abs: f64,
    pub max_abs: f64,
    /// Sum of |x| over the stripe excluding the center entry.
    pub sum_others: f64,
}

/// Scans all coefficient windows of width L_s = L_h + L_d - 1 (per filter)
/// and collects the stripe sparsity plus per-support-stripe extremes.
pub fn stripe_stats(x: ArrayView1<f64>, l_h: usize, l_d: usize, m: usize) -> StripeStats {
    assert!(l_h % 2 == 1, "window length must be odd");
    assert!(m >= 1 && x.len() % m == 0);
    let l_x = x.len() / m;
    let l_s = l_h + l_d - 1;
    let half = (l_s - 1) / 2;

    let in_stripe = |center: usize, pos: usize| -> bool {
        let lo = center.saturating_sub(half);
        let hi = (center + half).min(l_x - 1);
        pos >= lo && pos <= hi
    };

    let mut s = 0usize;
    for center in 0..l_x {
        let mut count = 0usize;
        for p in 0..m {
            for l in 0..l_x {
                if x[p * l_x + l] != 0.0 && in_stripe(center, l) {
                    count += 1;
                }
            }
        }
        s = s.max(count);
    }

    let mut per_support = Vec::new();
    let mut x_min = f64::INFINITY;
    let mut x_max = 0.0f64;
    for i in 0..x.len() {
        if x[i] == 0.0 {
            continue;
        }
        let v = x[i].abs();
        x_min = x_min.min(v);
        x_max = x_max.max(v);
        let center = i % l_x;
        let mut min_abs = f64::INFINITY;
        let mut max_abs = 0.0f64;
        let mut total = 0.0;
        for p in 0..m {
            for l in 0..l_x {
                let xv = x[p * l_x + l];
                if xv != 0.0 && in_stripe(center, l) {
                    let a = xv.abs();
                    min_abs = min_abs.min(a);
                    max_abs = max_abs.max(a);
                    total += a;
                }
            }
        }
        per_support.push(SupportStripe {
            index: i,
            value_abs: v,
            min_abs,
            max_abs,
            sum_others: total - v,
        });
    }
    if per_support.is_empty() {
        x_min = 0.0;
    }
    StripeStats {
        s,
        per_support,
        x_min,
        x_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
}

/// Evaluated sufficient condition plus the detection-threshold interval it
/// admits.
#[derive(Debug, Clone, Serialize)]
pub struct GuaranteeReport {
    pub theorem: Theorem,
    pub condition_holds: bool,
    /// Evaluated left/right side of the headline condition.
    pub lhs: f64,
    pub rhs: f64,
    pub beta1_interval: Option<(f64, f64)>,
    pub inputs: InputsEcho,
    /// Worst observed deviation of the stationary-energy assumption,
    /// max_i || sigma_y[c_i] * a_i - d_i ||_2 over the support.
    pub a1_violation: Option<f64>,
    /// Per-pair threshold floor from the tighter windowed bound.
    pub c8b_floor: Option<f64>,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InputsEcho {
    pub mu: f64,
    pub s: usize,
    pub eps_d: f64,
    pub eps_s: f64,
    pub eps_d_inf: f64,
    pub tau: f64,
    pub h_d_nu: Option<f64>,
    pub h_d_min: Option<f64>,
    pub mu_windowed: Option<f64>,
}

fn fail(theorem: Theorem, inputs: InputsEcho, reason: &str) -> GuaranteeReport {
    GuaranteeReport {
        theorem,
        condition_holds: false,
        lhs: 0.0,
        rhs: f64::INFINITY,
        beta1_interval: None,
        inputs,
        a1_violation: None,
        c8b_floor: None,
        failure_reason: Some(reason.into()),
    }
}

/// Effective code once atoms are normalized: x_i scaled by ||d_i||.
fn normalized_code(x: ArrayView1<f64>, d: &ConvDictionary) -> Vec<f64> {
    x.iter()
        .zip(d.atom_norms().iter())
        .map(|(v, n)| v * n)
        .collect()
}

/// Noise-aware support recovery condition under a rectangular window the
/// width of the filter. `eps_d` is the worst noise norm over a window,
/// `tau` the clip level in force.
pub fn check_theorem1(
    x: ArrayView1<f64>,
    d: &ConvDictionary,
    kernel: &RfnKernel,
    eps_d: f64,
    tau: f64,
) -> Result<GuaranteeReport> {
    if kernel.shape != KernelShape::Rectangular || kernel.len() != d.l_d {
        return Err(Error::KernelShape(format!(
            "rectangular window of length L_d = {} required",
            d.l_d
        )));
    }
    if eps_d < 0.0 || !(tau > 0.0) {
        return Err(Error::InvalidParameter(
            "eps_d must be nonnegative and tau positive".into(),
        ));
    }
    let mu = mutual_coherence(d)?;
    let xn = normalized_code(x, d);
    let stats = stripe_stats(ArrayView1::from(&xn), kernel.len(), d.l_d, d.n_filters());
    let mut inputs = InputsEcho {
        mu,
        s: stats.s,
        eps_d,
        eps_s: eps_d / tau,
        eps_d_inf: if stats.x_min > 0.0 {
            eps_d / stats.x_min
        } else {
            f64::INFINITY
        },
        tau,
        ..Default::default()
    };
    if stats.per_support.is_empty() {
        return Ok(fail(Theorem::T1, inputs, "empty support"));
    }
    let s = stats.s as f64;
    let srip = 1.0 - (s - 1.0) * mu;
    if srip <= 0.0 {
        return Ok(fail(Theorem::T1, inputs, "sRIP denominator nonpositive"));
    }
    let denom = srip.sqrt() - inputs.eps_d_inf;
    if denom <= 0.0 {
        return Ok(fail(
            Theorem::T1,
            inputs.clone(),
            "noise exceeds the sRIP margin",
        ));
    }
    let eps_s = inputs.eps_s;

    // headline ratio condition, worst stripe
    let lhs = stats
        .per_support
        .iter()
        .map(|st| st.min_abs / (st.max_abs + eps_d / s))
        .fold(f64::INFINITY, f64::min);
    let rhs = (s * mu / (1.0 + mu)) * (1.0 + s.sqrt() / denom) + 2.0 * s * eps_s / (1.0 + mu);

    // admissible threshold window
    let lower = s.sqrt() * mu / denom + eps_s;
    let upper = stats
        .per_support
        .iter()
        .map(|st| (1.0 + mu) * st.min_abs / (s * st.max_abs + eps_d) - mu - eps_s)
        .fold(f64::INFINITY, f64::min);

    // stationary-energy diagnostic on the noise-free synthesis
    let y = d.apply(x)?;
    let field = clip_energy(&local_energy(y.view(), kernel), tau)?;
    let off = d.center_offset();
    let mut worst = 0.0f64;
    for st in &stats.per_support {
        let i = st.index;
        let center = (i % d.l_x) + off;
        let col = d.column(i)?;
        let sigma_c = field.clipped[center];
        let mut acc = 0.0;
        for r in 0..col.len() {
            if col[r] != 0.0 {
                let a_i = col[r] / field.clipped[r];
                let dev = sigma_c * a_i - col[r];
                acc += dev * dev;
            }
        }
        worst = worst.max(acc.sqrt());
    }
    inputs.eps_s = eps_s;

    let condition_holds = lhs > rhs && upper > lower;
    Ok(GuaranteeReport {
        theorem: Theorem::T1,
        condition_holds,
        lhs,
        rhs,
        beta1_interval: if condition_holds {
            Some((lower, upper))
        } else {
            None
        },
        inputs,
        a1_violation: Some(worst),
        c8b_floor: None,
        failure_reason: if condition_holds {
            None
        } else {
            Some("ratio condition or threshold window failed".into())
        },
    })
}

/// Separated noiseless case: stripe sparsity one and coherence below one
/// guarantee recovery for any amplitude ratio.
pub fn check_theorem2(x: ArrayView1<f64>, d: &ConvDictionary) -> Result<GuaranteeReport> {
    let mu = mutual_coherence(d)?;
    let xn = normalized_code(x, d);
    let stats = stripe_stats(ArrayView1::from(&xn), d.l_d, d.l_d, d.n_filters());
    let inputs = InputsEcho {
        mu,
        s: stats.s,
        ..Default::default()
    };
    if stats.per_support.is_empty() {
        return Ok(fail(Theorem::T2, inputs, "empty support"));
    }
    let condition_holds = stats.s == 1 && mu < 1.0;
    Ok(GuaranteeReport {
        theorem: Theorem::T2,
        condition_holds,
        lhs: stats.s as f64,
        rhs: 1.0,
        beta1_interval: if condition_holds {
            Some((mu, 1.0))
        } else {
            None
        },
        inputs,
        a1_violation: None,
        c8b_floor: None,
        failure_reason: if condition_holds {
            None
        } else {
            Some("stripe sparsity exceeds one".into())
        },
    })
}

/// Windowed atom norms per shift offset: ||H d(offset)||, atoms unit-norm.
fn windowed_shift_norms(d: &ConvDictionary, kernel: &RfnKernel) -> Vec<f64> {
    let l_d = d.l_d;
    let half_h = kernel.half_width() as isize;
    let center = (l_d as isize - 1) / 2;
    let max_off = (l_d - 1) as isize;
    let mut out = Vec::new();
    for off in 0..=max_off {
        let mut best = 0.0f64;
        for (p, f) in d.filters.iter().enumerate() {
            let norm = d.atom_norms()[p * d.l_x];
            let mut acc = 0.0;
            for r in -half_h..=half_h {
                let tap = r - off + center;
                if tap >= 0 && (tap as usize) < l_d {
                    let v = f.samples[tap as usize] / norm;
                    acc += kernel.at(r) * v * v;
                }
            }
            best = best.max(acc.sqrt());
        }
        out.push(best);
    }
    out
}

/// Largest windowed cross-product of distinct unit-norm atoms,
/// max |<H d_i, H d_j>|. The windowed Gram diagonal is carried separately
/// by the shift norms, so no re-normalization happens here.
fn windowed_coherence(d: &ConvDictionary, kernel: &RfnKernel) -> f64 {
    let half_h = kernel.half_width() as isize;
    let l_d = d.l_d as isize;
    let center = (l_d - 1) / 2;
    let mut best = 0.0f64;
    for (p, fp) in d.filters.iter().enumerate() {
        let np = d.atom_norms()[p * d.l_x];
        for (q, fq) in d.filters.iter().enumerate().skip(p) {
            let nq = d.atom_norms()[q * d.l_x];
            for lag in 0..l_d {
                if p == q && lag == 0 {
                    continue;
                }
                let mut dot = 0.0;
                for r in -half_h..=half_h {
                    let h = kernel.at(r);
                    let ta = r + center;
                    let tb = r - lag + center;
                    let va = if ta >= 0 && ta < l_d {
                        fp.samples[ta as usize] / np
                    } else {
                        0.0
                    };
                    let vb = if tb >= 0 && tb < l_d {
                        fq.samples[tb as usize] / nq
                    } else {
                        0.0
                    };
                    dot += h * va * vb;
                }
                best = best.max(dot.abs());
            }
        }
    }
    best
}

/// Attenuating-window support recovery condition. `delta_k` is the minimal
/// spike spacing in samples; use [`delta_k_from_nu`] to derive it from a
/// separation constant.
pub fn check_theorem3(
    x: ArrayView1<f64>,
    d: &ConvDictionary,
    kernel: &RfnKernel,
    delta_k: usize,
) -> Result<GuaranteeReport> {
    if !kernel.is_strictly_decreasing() {
        return Err(Error::KernelShape(
            "strictly decreasing window required".into(),
        ));
    }
    if kernel.len() != d.l_d {
        return Err(Error::KernelShape(format!(
            "window length {} must equal the filter length {}",
            kernel.len(),
            d.l_d
        )));
    }
    if delta_k == 0 {
        return Err(Error::InvalidParameter("delta_k must be >= 1".into()));
    }
    let mu = mutual_coherence(d)?;
    let xn = normalized_code(x, d);
    let stats = stripe_stats(ArrayView1::from(&xn), kernel.len(), d.l_d, d.n_filters());
    let mut inputs = InputsEcho {
        mu,
        s: stats.s,
        ..Default::default()
    };
    if stats.per_support.is_empty() {
        return Ok(fail(Theorem::T3, inputs, "empty support"));
    }

    // verify the claimed separation
    for p in 0..d.n_filters() {
        let mut last: Option<usize> = None;
        for l in 0..d.l_x {
            if x[p * d.l_x + l] != 0.0 {
                if let Some(prev) = last {
                    if l - prev < delta_k {
                        return Ok(fail(
                            Theorem::T3,
                            inputs,
                            "support violates the separation constant",
                        ));
                    }
                }
                last = Some(l);
            }
        }
    }

    let shift_norms = windowed_shift_norms(d, kernel);
    let h_d_nu = shift_norms[delta_k.min(shift_norms.len() - 1)];
    let h_d_min = shift_norms.iter().cloned().fold(f64::INFINITY, f64::min);
    inputs.h_d_nu = Some(h_d_nu);
    inputs.h_d_min = Some(h_d_min);
    inputs.mu_windowed = Some(windowed_coherence(d, kernel));
    if h_d_min <= 0.0 {
        return Ok(fail(
            Theorem::T3,
            inputs,
            "window annihilates a shifted atom",
        ));
    }

    let s = stats.s as f64;
    let lower = s.sqrt() * mu / h_d_min;
    let upper = stats
        .per_support
        .iter()
        .map(|st| {
            let o = st.sum_others;
            1.0 - (h_d_nu + mu) * o / (st.value_abs + h_d_nu * o)
        })
        .fold(f64::INFINITY, f64::min);

    // tighter per-pair floor: max over lags of sqrt(s) |corr(lag)| / ||H d(lag)||
    let mut c8b = 0.0f64;
    for (lag, hd) in shift_norms.iter().enumerate().skip(1) {
        if *hd <= 0.0 {
            continue;
        }
        let mut corr = 0.0f64;
        for (p, fp) in d.filters.iter().enumerate() {
            for (q, fq) in d.filters.iter().enumerate() {
                let np = d.atom_norms()[p * d.l_x];
                let nq = d.atom_norms()[q * d.l_x];
                let mut acc = 0.0;
                for i in 0..d.l_d {
                    if i + lag < d.l_d {
                        acc += fp.samples[i + lag] * fq.samples[i];
                    }
                }
                corr = corr.max((acc / (np * nq)).abs());
            }
        }
        c8b = c8b.max(s.sqrt() * corr / hd);
    }

    let condition_holds = lower < upper;
    Ok(GuaranteeReport {
        theorem: Theorem::T3,
        condition_holds,
        lhs: lower,
        rhs: upper,
        beta1_interval: if condition_holds {
            Some((lower, upper))
        } else {
            None
        },
        inputs,
        a1_violation: None,
        c8b_floor: Some(c8b),
        failure_reason: if condition_holds {
            None
        } else {
            Some("threshold window empty".into())
        },
    })
}

/// ceil(F_s * nu * sigma), the minimal spacing a separation constant
/// implies at sampling rate `fs` for kernel scale `sigma` (seconds).
pub fn delta_k_from_nu(fs: f64, nu: f64, sigma: f64) -> usize {
    (fs * nu * sigma).ceil().max(1.0) as usize
}

/// Energy-preservation envelope for a stripe: ((1 -/+ (s-1) mu) ||x||^2).
pub fn srip_bounds(d: &ConvDictionary, x_stripe: ArrayView1<f64>) -> Result<(f64, f64)> {
    let mu = mutual_coherence(d)?;
    let s = x_stripe.iter().filter(|&&v| v != 0.0).count() as f64;
    let energy: f64 = x_stripe.iter().map(|v| v * v).sum();
    let spread = (s - 1.0).max(0.0) * mu;
    Ok(((1.0 - spread) * energy, (1.0 + spread) * energy))
}
