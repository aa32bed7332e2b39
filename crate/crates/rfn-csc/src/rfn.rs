//! Receptive-field normalization: kernels, local energy fields, clipping,
//! and the elementwise threshold operators used by the solvers.

use crate::error::{Error, Result};
use ndarray::{Array1, ArrayView1};

/// Shape tag for a normalization kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    Rectangular,
    Gaussian { sigma: f64 },
    Custom,
}

/// Window `h[k]` used to measure local energy.
///
/// Axioms: odd length, nonnegative, even-symmetric, `h[0] = 1` is the
/// global maximum, finite sum. Checked on every construction path.
#[derive(Debug, Clone, PartialEq)]
pub struct RfnKernel {
    pub samples: Vec<f64>,
    pub shape: KernelShape,
}

impl RfnKernel {
    pub fn rectangular(len: usize) -> Result<Self> {
        make_kernel(KernelShape::Rectangular, len)
    }

    pub fn gaussian(len: usize, sigma: f64) -> Result<Self> {
        make_kernel(KernelShape::Gaussian { sigma }, len)
    }

    /// Validates an arbitrary window against the kernel axioms.
    pub fn custom(samples: Vec<f64>) -> Result<Self> {
        let k = RfnKernel {
            samples,
            shape: KernelShape::Custom,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn half_width(&self) -> usize {
        self.len() / 2
    }

    /// `h[k]` for signed offset `k` from the center; zero outside the window.
    pub fn at(&self, offset: isize) -> f64 {
        let c = self.half_width() as isize;
        let i = c + offset;
        if i < 0 || i >= self.len() as isize {
            0.0
        } else {
            self.samples[i as usize]
        }
    }

    /// True when the values strictly decrease away from the center
    /// (the attenuating-kernel premise of the windowed support guarantee).
    pub fn is_strictly_decreasing(&self) -> bool {
        let h = self.half_width();
        (0..h).all(|k| self.at(k as isize) > self.at(k as isize + 1))
    }

    fn validate(&self) -> Result<()> {
        if self.samples.is_empty() || self.samples.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel length must be odd and positive, got {}",
                self.samples.len()
            )));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::KernelInvariant("non-finite sample".into()));
        }
        if self.samples.iter().any(|&v| v < 0.0) {
            return Err(Error::KernelInvariant("negative sample".into()));
        }
        let c = self.half_width();
        if self.samples[c] != 1.0 {
            return Err(Error::KernelInvariant(format!(
                "center must be exactly 1, got {}",
                self.samples[c]
            )));
        }
        for k in 0..=c {
            if self.samples[c - k] != self.samples[c + k] {
                return Err(Error::KernelInvariant(format!("asymmetric at offset {k}")));
            }
            if self.samples[c + k] > 1.0 {
                return Err(Error::KernelInvariant(format!(
                    "value above center at offset {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Advisory check of the window-length rule of thumb against a filter
/// length: windows shorter than half the filter underweight the receptive
/// field. Never an error.
pub fn kernel_length_guidance(kernel: &RfnKernel, l_d: usize) -> Option<String> {
    if 2 * kernel.len() < l_d {
        Some(format!(
            "normalization window of {} samples is shorter than half the {}-sample filter",
            kernel.len(),
            l_d
        ))
    } else {
        None
    }
}

/// Builds a kernel of the requested shape and validates it.
pub fn make_kernel(shape: KernelShape, len: usize) -> Result<RfnKernel> {
    if len == 0 || len % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "kernel length must be odd and positive, got {len}"
        )));
    }
    let half = (len / 2) as isize;
    let samples = match &shape {
        KernelShape::Rectangular => vec![1.0; len],
        KernelShape::Gaussian { sigma } => {
            if *sigma <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            (-half..=half)
                .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
                .collect()
        }
        KernelShape::Custom => {
            return Err(Error::InvalidParameter(
                "custom kernels are built from explicit samples".into(),
            ))
        }
    };
    let k = RfnKernel { samples, shape };
    k.validate()?;
    Ok(k)
}

/// Local weighted energy plus its clipped companion.
#[derive(Debug, Clone)]
pub struct EnergyField {
    pub sigma: Array1<f64>,
    pub clipped: Array1<f64>,
    pub tau: f64,
}

/// sigma[k] = sqrt(sum_n h[n] y^2[k-n]), zero-padded at the edges.
pub fn local_energy(y: ArrayView1<f64>, kernel: &RfnKernel) -> Array1<f64> {
    let n = y.len();
    let half = kernel.half_width() as isize;
    let mut out = Array1::zeros(n);
    for k in 0..n as isize {
        let mut acc = 0.0;
        let lo = (k - half).max(0);
        let hi = (k + half).min(n as isize - 1);
        for j in lo..=hi {
            let w = kernel.at(k - j);
            let v = y[j as usize];
            acc += w * v * v;
        }
        out[k as usize] = acc.sqrt();
    }
    out
}

/// Keeps energies at or above `tau`, replaces the rest by 1 so that later
/// division leaves low-energy samples untouched.
pub fn clip_energy(sigma: &Array1<f64>, tau: f64) -> Result<EnergyField> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clip level must be positive, got {tau}"
        )));
    }
    let clipped = sigma.mapv(|s| if s >= tau { s } else { 1.0 });
    Ok(EnergyField {
        sigma: sigma.clone(),
        clipped,
        tau,
    })
}

/// Divides each sample by its clipped local energy.
pub fn normalize(r: ArrayView1<f64>, field: &EnergyField) -> Array1<f64> {
    Array1::from_iter(r.iter().zip(field.clipped.iter()).map(|(v, c)| v / c))
}

/// sign(z) * max(|z| - beta, 0), elementwise.
pub fn soft_threshold(z: ArrayView1<f64>, beta: f64) -> Array1<f64> {
    z.mapv(|v| {
        let m = v.abs() - beta;
        if m > 0.0 {
            v.signum() * m
        } else {
            0.0
        }
    })
}

/// z where |z| > beta (strict), else 0.
pub fn hard_threshold(z: ArrayView1<f64>, beta: f64) -> Array1<f64> {
    z.mapv(|v| if v.abs() > beta { v } else { 0.0 })
}

/// 1 where |z| >= beta (boundary inclusive), else 0.
pub fn threshold_indicator(z: ArrayView1<f64>, beta: f64) -> Array1<f64> {
    z.mapv(|v| if v.abs() >= beta { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn rectangular_length_one() {
        let k = RfnKernel::rectangular(1).unwrap();
        assert_eq!(k.samples, vec![1.0]);
    }

    #[test]
    fn gaussian_values() {
        let k = RfnKernel::gaussian(11, 2.0).unwrap();
        assert_eq!(k.at(0), 1.0);
        assert_relative_eq!(k.at(2), (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(k.at(-2), (-0.5f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn even_length_rejected() {
        assert!(RfnKernel::rectangular(4).is_err());
        assert!(RfnKernel::gaussian(0, 1.0).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(RfnKernel::custom(vec![0.5, 1.0, 0.5]).is_ok());
        // negative sample
        assert!(RfnKernel::custom(vec![-0.1, 1.0, -0.1]).is_err());
        // center not 1
        assert!(RfnKernel::custom(vec![0.5, 0.9, 0.5]).is_err());
        // asymmetric
        assert!(RfnKernel::custom(vec![0.4, 1.0, 0.5]).is_err());
        // off-center maximum
        assert!(RfnKernel::custom(vec![1.0, 1.0, 1.0, 1.0, 0.9]).is_err());
    }

    #[test]
    fn custom_random_violations_rejected() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let half = rng.gen_range(1..5usize);
            let mut s: Vec<f64> = (0..=half).map(|_| rng.gen_range(0.0..=1.0)).collect();
            s[0] = 1.0;
            let mut full: Vec<f64> = s.iter().skip(1).rev().cloned().collect();
            full.extend(s.iter().cloned());
            // valid symmetric kernel passes
            assert!(RfnKernel::custom(full.clone()).is_ok());
            // then break one axiom at random
            let c = full.len() / 2;
            match rng.gen_range(0..3) {
                0 => full[c] = 0.99,
                1 => full[0] = -full[0] - 0.1,
                _ => {
                    let i = rng.gen_range(0..c.max(1));
                    full[i] += 1.5; // exceeds center
                }
            }
            assert!(RfnKernel::custom(full).is_err());
        }
    }

    #[test]
    fn length_guidance_is_advisory() {
        let short = RfnKernel::rectangular(3).unwrap();
        assert!(kernel_length_guidance(&short, 9).is_some());
        let ok = RfnKernel::rectangular(5).unwrap();
        assert!(kernel_length_guidance(&ok, 9).is_none());
    }

    #[test]
    fn normalization_balances_isolated_events() {
        // an isolated scaled pulse normalized by its rectangular local
        // energy yields the same stripe regardless of amplitude; its
        // stripe norm sits near one (the per-sample division overweights
        // the pulse tails slightly, which direct computation quantifies)
        let taps = [
            -0.1243f64, -0.3652, -0.3719, 0.3842, 1.0, 0.3842, -0.3719, -0.3652, -0.1243,
        ];
        let l_d = taps.len();
        let kernel = RfnKernel::rectangular(l_d).unwrap();
        let center = 20;
        let stripe_norm = |a: f64| {
            let mut y = Array1::zeros(48);
            for (j, &t) in taps.iter().enumerate() {
                y[center - l_d / 2 + j] = a * t;
            }
            let field = clip_energy(&local_energy(y.view(), &kernel), 0.4).unwrap();
            let n = normalize(y.view(), &field);
            (0..l_d)
                .map(|j| n[center - l_d / 2 + j].powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let base = stripe_norm(1.0);
        for a in [2.0, 7.5, 100.0] {
            assert_relative_eq!(stripe_norm(a), base, max_relative = 1e-12);
        }
        assert!((base - 1.0).abs() < 0.05, "stripe norm {base}");
    }

    #[test]
    fn local_energy_zero_input() {
        let k = RfnKernel::gaussian(5, 1.0).unwrap();
        let y = Array1::zeros(8);
        assert!(local_energy(y.view(), &k).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn local_energy_stripe_norm() {
        // rectangular window of 3: sigma[1] = ||[3,4,0]|| = 5
        let k = RfnKernel::rectangular(3).unwrap();
        let y = array![3.0, 4.0, 0.0];
        let s = local_energy(y.view(), &k);
        assert_relative_eq!(s[1], 5.0, max_relative = 1e-15);
    }

    #[test]
    fn local_energy_homogeneous() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let k = RfnKernel::gaussian(7, 1.5).unwrap();
        let y = Array1::from_iter((0..40).map(|_| rng.gen_range(-2.0..2.0)));
        for &c in &[0.5, -3.0, 7.25] {
            let a = local_energy((&y * c).view(), &k);
            let b = local_energy(y.view(), &k).mapv(|v| v * c.abs());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn clip_branches() {
        let f = clip_energy(&array![0.1], 0.4).unwrap();
        assert_eq!(f.clipped[0], 1.0);
        let f = clip_energy(&array![0.4], 0.4).unwrap();
        assert_eq!(f.clipped[0], 0.4); // boundary keeps the energy
        let f = clip_energy(&array![2.5, 0.01], 1.0).unwrap();
        assert_eq!(f.clipped.to_vec(), vec![2.5, 1.0]);
        assert!(clip_energy(&array![1.0], 0.0).is_err());
    }

    #[test]
    fn normalize_cases() {
        let f = EnergyField {
            sigma: array![2.5, 0.1],
            clipped: array![2.5, 1.0],
            tau: 0.4,
        };
        let out = normalize(array![5.0, 0.0].view(), &f);
        assert_eq!(out.to_vec(), vec![2.0, 0.0]);
        // all-ones clip is the identity
        let f = EnergyField {
            sigma: array![0.0, 0.0, 0.0],
            clipped: array![1.0, 1.0, 1.0],
            tau: 0.4,
        };
        let y = array![1.5, -2.0, 0.25];
        assert_eq!(normalize(y.view(), &f).to_vec(), y.to_vec());
    }

    #[test]
    fn normalize_never_divides_below_clip_floor() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let k = RfnKernel::gaussian(9, 2.0).unwrap();
        for _ in 0..50 {
            let y = Array1::from_iter((0..30).map(|_| rng.gen_range(-1.0..1.0)));
            let tau = rng.gen_range(0.05..2.0);
            let f = clip_energy(&local_energy(y.view(), &k), tau).unwrap();
            let floor = tau.min(1.0);
            assert!(f.clipped.iter().all(|&c| c >= floor));
        }
    }

    #[test]
    fn soft_threshold_values() {
        let z = array![0.5, 2.0, -2.0];
        let out = soft_threshold(z.view(), 1.0);
        assert_eq!(out.to_vec(), vec![0.0, 1.0, -1.0]);
        let id = soft_threshold(z.view(), 0.0);
        assert_eq!(id.to_vec(), z.to_vec());
    }

    #[test]
    fn soft_threshold_relu_identity() {
        use rand::{Rng, SeedableRng};
        let relu = |v: f64| v.max(0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let z: f64 = rng.gen_range(-4.0..4.0);
            let beta: f64 = rng.gen_range(0.0..3.0);
            let s = soft_threshold(array![z].view(), beta)[0];
            assert_eq!(s, relu(z - beta) - relu(-z - beta));
        }
    }

    #[test]
    fn hard_threshold_strict_boundary() {
        assert_eq!(hard_threshold(array![1.0].view(), 1.0)[0], 0.0);
        assert_eq!(hard_threshold(array![1.5].view(), 1.0)[0], 1.5);
        assert_eq!(hard_threshold(array![-0.3].view(), 0.0)[0], -0.3);
    }

    #[test]
    fn indicator_inclusive_boundary() {
        assert_eq!(threshold_indicator(array![0.95].view(), 0.95)[0], 1.0);
        let out = threshold_indicator(array![-2.0, 0.1].view(), 1.0);
        assert_eq!(out.to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn indicator_joint_rescale_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let z = Array1::from_iter((0..12).map(|_| rng.gen_range(-3.0..3.0)));
            let beta: f64 = rng.gen_range(0.1..2.0);
            let c: f64 = rng.gen_range(0.1..10.0);
            let a = threshold_indicator(z.view(), beta);
            let b = threshold_indicator((&z * c).view(), beta * c);
            assert_eq!(a.to_vec(), b.to_vec());
        }
    }
}
