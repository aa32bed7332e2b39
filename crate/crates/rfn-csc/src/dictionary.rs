//! Convolutional dictionaries: source wavelets, attenuated pulse banks,
//! forward/adjoint application, and mutual coherence.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};
use rustfft::{num_complex::Complex, FftPlanner};

/// Sampled pulse with its time origin pinned to the center sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    pub samples: Vec<f64>,
    /// Sampling interval in seconds.
    pub sample_interval: f64,
    /// Index of the t = 0 sample; always the middle of an odd-length window.
    pub center_index: usize,
}

impl Wavelet {
    pub fn new(samples: Vec<f64>, sample_interval: f64) -> Result<Self> {
        if samples.is_empty() || samples.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "wavelet length must be odd and positive, got {}",
                samples.len()
            )));
        }
        if !(sample_interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        let center_index = samples.len() / 2;
        Ok(Wavelet {
            samples,
            sample_interval,
            center_index,
        })
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

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales all samples so the result has unit l2 norm.
    pub fn normalized(&self) -> Result<Wavelet> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::DegenerateAtom("zero-norm wavelet".into()));
        }
        let mut w = self.clone();
        for v in &mut w.samples {
            *v /= n;
        }
        Ok(w)
    }

    /// Unit impulse; the dictionary it generates is the identity.
    pub fn unit_impulse(sample_interval: f64) -> Result<Wavelet> {
        Wavelet::new(vec![1.0], sample_interval)
    }
}

/// g(t) = (1 - w0^2 t^2 / 2) exp(-w0^2 t^2 / 4), the zero-phase band-limited
/// source pulse used throughout.
pub fn ricker_value(omega0: f64, t: f64) -> f64 {
    let u2 = omega0 * omega0 * t * t;
    (1.0 - 0.5 * u2) * (-0.25 * u2).exp()
}

/// Default truncation half-width: the nearest sample to t = 4 / omega0.
pub fn default_half_width(omega0: f64, sample_interval: f64) -> usize {
    ((4.0 / (omega0 * sample_interval)).round() as usize).max(1)
}

/// Samples the Ricker pulse on a symmetric grid of 2*half_width + 1 points.
pub fn make_ricker(omega0: f64, sample_interval: f64, half_width: usize) -> Result<Wavelet> {
    if !(omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega0 must be positive, got {omega0}"
        )));
    }
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    if half_width == 0 {
        return Err(Error::InvalidParameter("half_width must be >= 1".into()));
    }
    let hw = half_width as isize;
    let samples = (-hw..=hw)
        .map(|k| ricker_value(omega0, k as f64 * sample_interval))
        .collect();
    Wavelet::new(samples, sample_interval)
}

/// Ricker with the default truncation.
pub fn ricker(omega0: f64, sample_interval: f64) -> Result<Wavelet> {
    make_ricker(
        omega0,
        sample_interval,
        default_half_width(omega0, sample_interval),
    )
}

/// Constant-Q attenuation model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QModelParams {
    /// Quality factor; `f64::INFINITY` degenerates to a pure delay.
    pub q: f64,
    /// Dominant radial frequency of the source pulse, rad/s.
    pub omega0: f64,
    pub sample_interval: f64,
}

impl QModelParams {
    pub fn new(q: f64, omega0: f64, sample_interval: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quality factor must be positive, got {q}"
            )));
        }
        if !(omega0 > 0.0) || !(sample_interval > 0.0) {
            return Err(Error::InvalidParameter(
                "omega0 and sample interval must be positive".into(),
            ));
        }
        Ok(QModelParams {
            q,
            omega0,
            sample_interval,
        })
    }

    /// gamma = (2/pi) atan(1/(2Q)); ~ 1/(pi Q) for large Q.
    pub fn gamma(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            std::f64::consts::FRAC_2_PI * (1.0 / (2.0 * self.q)).atan()
        }
    }
}

/// A synthesized attenuated pulse, re-centered at its own time origin.
#[derive(Debug, Clone)]
pub struct QPulse {
    pub wavelet: Wavelet,
    /// Set when the output window holds less than 99% of the pulse energy.
    pub truncation_warning: bool,
}

/// Propagates `source` to two-way travel time `travel_time` under the
/// constant-Q model and returns the pulse with the bulk delay removed.
///
/// The spectrum of the source is multiplied by the dispersion operator
/// exp(-j |w/w0|^-gamma w t_n + j w t_n) and the absorption operator
/// exp(-|w/w0|^-gamma w t_n / (2Q)) on a dense zero-padded frequency grid;
/// the |w/w0|^-gamma factor at w = 0 is taken as 1 (removable limit).
/// Negative frequencies are filled by conjugate symmetry so the output is
/// real for a real source.
pub fn make_q_pulse(
    source: &Wavelet,
    q: &QModelParams,
    travel_time: f64,
    out_len: usize,
) -> Result<QPulse> {
    if travel_time < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "travel time must be nonnegative, got {travel_time}"
        )));
    }
    if out_len == 0 || out_len % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "output length must be odd and positive, got {out_len}"
        )));
    }
    let ts = source.sample_interval;
    let out_hw = out_len / 2;

    // Pure delay: the operators collapse to 1 exactly.
    if travel_time == 0.0 || q.q.is_infinite() {
        let mut samples = vec![0.0; out_len];
        let mut truncated = false;
        for (j, &v) in source.samples.iter().enumerate() {
            let k = j as isize - source.center_index as isize;
            let i = k + out_hw as isize;
            if i >= 0 && i < out_len as isize {
                samples[i as usize] = v;
            } else if v != 0.0 {
                truncated = true;
            }
        }
        return Ok(QPulse {
            wavelet: Wavelet::new(samples, ts)?,
            truncation_warning: truncated,
        });
    }

    let n = (8 * out_len.max(source.len())).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (j, &v) in source.samples.iter().enumerate() {
        let k = j as isize - source.center_index as isize;
        buf[k.rem_euclid(n as isize) as usize] = Complex::new(v, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let gamma = q.gamma();
    let omega0 = q.omega0;
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * ts);
    // positive frequencies (and Nyquist, forced real); mirror the rest
    for i in 1..=n / 2 {
        let w = i as f64 * dw;
        let a = (w / omega0).powf(-gamma);
        let phase = (-a + 1.0) * w * travel_time;
        let amp = (-a * w * travel_time / (2.0 * q.q)).exp();
        let factor = Complex::from_polar(amp, phase);
        let u = buf[i] * factor;
        if i == n / 2 {
            buf[i] = Complex::new(u.re, 0.0);
        } else {
            buf[i] = u;
            buf[n - i] = u.conj();
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;

    let mut samples = vec![0.0; out_len];
    for (idx, s) in samples.iter_mut().enumerate() {
        let k = idx as isize - out_hw as isize;
        *s = buf[k.rem_euclid(n as isize) as usize].re * scale;
    }
    let window_energy: f64 = samples.iter().map(|v| v * v).sum();
    let total_energy: f64 = buf.iter().map(|c| (c.re * scale) * (c.re * scale)).sum();
    let truncation_warning = total_energy > 0.0 && window_energy < 0.99 * total_energy;

    Ok(QPulse {
        wavelet: Wavelet::new(samples, ts)?,
        truncation_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    TimeInvariant,
    TimeVariantQ,
}

/// Linear-convolution dictionary.
///
/// Column `(p, l)` of a time-invariant dictionary is filter `p` placed at
/// support location `l` (rows `l .. l + L_d`), so `L_y = L_x + L_d - 1` and
/// every atom carries the full filter. Time-variant banks store one pulse
/// per column explicitly, placed the same way.
#[derive(Debug, Clone)]
pub struct ConvDictionary {
    pub kind: DictionaryKind,
    pub filters: Vec<Wavelet>,
    /// Dense pulse bank for the time-variant kind: `columns[j]` is the pulse
    /// placed at support location `j`.
    columns: Option<Vec<Vec<f64>>>,
    pub l_x: usize,
    pub l_d: usize,
    atom_norms: Vec<f64>,
    pub truncation_warning: bool,
}

impl ConvDictionary {
    pub fn n_filters(&self) -> usize {
        match self.kind {
            DictionaryKind::TimeInvariant => self.filters.len(),
            DictionaryKind::TimeVariantQ => 1,
        }
    }

    pub fn l_y(&self) -> usize {
        self.l_x + self.l_d - 1
    }

    pub fn n_atoms(&self) -> usize {
        self.n_filters() * self.l_x
    }

    pub fn atom_norms(&self) -> &[f64] {
        &self.atom_norms
    }

    /// Offset from a support location to the sample its atom is centered on.
    pub fn center_offset(&self) -> usize {
        (self.l_d - 1) / 2
    }

    pub fn sample_interval(&self) -> f64 {
        self.filters[0].sample_interval
    }

    /// Taps of atom `i` (length `l_d`), without the placement shift.
    fn atom_taps(&self, i: usize) -> &[f64] {
        match self.kind {
            DictionaryKind::TimeInvariant => &self.filters[i / self.l_x].samples,
            DictionaryKind::TimeVariantQ => &self.columns.as_ref().unwrap()[i],
        }
    }

    /// Materializes column `i` as a dense length-`L_y` vector.
    pub fn column(&self, i: usize) -> Result<Array1<f64>> {
        if i >= self.n_atoms() {
            return Err(Error::OutOfBounds(format!(
                "atom {i} of {}",
                self.n_atoms()
            )));
        }
        let mut col = Array1::zeros(self.l_y());
        let shift = i % self.l_x;
        for (j, &v) in self.atom_taps(i).iter().enumerate() {
            col[shift + j] = v;
        }
        Ok(col)
    }

    /// Full dense matrix; intended for export and small-scale checks.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.l_y(), self.n_atoms()));
        for i in 0..self.n_atoms() {
            let col = self.column(i).expect("index in range");
            m.column_mut(i).assign(&col);
        }
        m
    }

    /// y = D x as a sum of per-filter linear convolutions.
    pub fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.n_atoms() {
            return Err(Error::InvalidParameter(format!(
                "code length {} does not match {} atoms",
                x.len(),
                self.n_atoms()
            )));
        }
        let mut y = Array1::zeros(self.l_y());
        match self.kind {
            DictionaryKind::TimeInvariant => {
                for (p, filt) in self.filters.iter().enumerate() {
                    for l in 0..self.l_x {
                        let xv = x[p * self.l_x + l];
                        if xv == 0.0 {
                            continue;
                        }
                        for (j, &d) in filt.samples.iter().enumerate() {
                            y[l + j] += xv * d;
                        }
                    }
                }
            }
            DictionaryKind::TimeVariantQ => {
                let cols = self.columns.as_ref().unwrap();
                for (l, &xv) in x.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    for (j, &d) in cols[l].iter().enumerate() {
                        y[l + j] += xv * d;
                    }
                }
            }
        }
        Ok(y)
    }

    /// D^T r: correlation of each filter with `r` at every shift.
    pub fn adjoint(&self, r: ArrayView1<f64>) -> Result<Array1<f64>> {
        if r.len() != self.l_y() {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match L_y = {}",
                r.len(),
                self.l_y()
            )));
        }
        let mut out = Array1::zeros(self.n_atoms());
        for i in 0..self.n_atoms() {
            let shift = i % self.l_x;
            let mut acc = 0.0;
            for (j, &d) in self.atom_taps(i).iter().enumerate() {
                acc += d * r[shift + j];
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

/// Builds a time-invariant dictionary from a filter bank.
pub fn build_dictionary(filters: Vec<Wavelet>, l_x: usize) -> Result<ConvDictionary> {
    if filters.is_empty() {
        return Err(Error::InvalidParameter("empty filter list".into()));
    }
    if l_x == 0 {
        return Err(Error::InvalidParameter("signal length must be >= 1".into()));
    }
    let ts = filters[0].sample_interval;
    let l_d = filters[0].len();
    for f in &filters {
        if f.sample_interval != ts {
            return Err(Error::InvalidParameter(
                "filters must share one sample interval".into(),
            ));
        }
        if f.len() != l_d {
            return Err(Error::InvalidParameter(
                "filters must share one length".into(),
            ));
        }
    }
    let mut atom_norms = Vec::with_capacity(filters.len() * l_x);
    for f in &filters {
        let n = f.norm();
        if n == 0.0 {
            return Err(Error::DegenerateAtom("zero-norm filter".into()));
        }
        atom_norms.extend(std::iter::repeat(n).take(l_x));
    }
    Ok(ConvDictionary {
        kind: DictionaryKind::TimeInvariant,
        filters,
        columns: None,
        l_x,
        l_d,
        atom_norms,
        truncation_warning: false,
    })
}

/// Builds the time-variant pulse bank: column `j` holds the source pulse
/// propagated to travel time `(j + 1) * T_s` and placed at location `j`.
///
/// The common pulse window is grown on the most-attenuated (last) pulse
/// until it captures 99.9% of that pulse's energy.
pub fn build_q_dictionary(
    source: &Wavelet,
    q: &QModelParams,
    l_x: usize,
) -> Result<ConvDictionary> {
    if l_x == 0 {
        return Err(Error::InvalidParameter("signal length must be >= 1".into()));
    }
    let ts = source.sample_interval;
    let t_max = l_x as f64 * ts;

    let mut out_len = source.len();
    loop {
        let probe = make_q_pulse(source, q, t_max, out_len)?;
        let energy: f64 = probe.wavelet.samples.iter().map(|v| v * v).sum();
        let wider = make_q_pulse(source, q, t_max, out_len + 2)?;
        let wider_energy: f64 = wider.wavelet.samples.iter().map(|v| v * v).sum();
        if energy >= 0.999 * wider_energy || out_len > 64 * source.len() {
            break;
        }
        out_len += 2;
    }

    let mut columns = Vec::with_capacity(l_x);
    let mut atom_norms = Vec::with_capacity(l_x);
    let mut truncation_warning = false;
    for j in 0..l_x {
        let t = (j + 1) as f64 * ts;
        let pulse = make_q_pulse(source, q, t, out_len)?;
        truncation_warning |= pulse.truncation_warning;
        let n = pulse.wavelet.norm();
        if n == 0.0 {
            return Err(Error::DegenerateAtom(format!("pulse {j} vanished")));
        }
        atom_norms.push(n);
        columns.push(pulse.wavelet.samples);
    }
    Ok(ConvDictionary {
        kind: DictionaryKind::TimeVariantQ,
        filters: vec![source.clone()],
        columns: Some(columns),
        l_x,
        l_d: out_len,
        atom_norms,
        truncation_warning,
    })
}

/// Largest absolute correlation coefficient over distinct atom pairs.
///
/// Time-invariant banks reduce to filter cross/auto-correlations over the
/// realizable shift range, excluding each filter's zero-lag with itself.
pub fn mutual_coherence(d: &ConvDictionary) -> Result<f64> {
    if d.n_atoms() < 2 {
        return Err(Error::InvalidParameter(
            "mutual coherence needs at least two atoms".into(),
        ));
    }
    if d.atom_norms.iter().any(|&n| n == 0.0) {
        return Err(Error::DegenerateAtom("zero-norm atom".into()));
    }
    let mut best: f64 = 0.0;
    match d.kind {
        DictionaryKind::TimeInvariant => {
            let max_lag = (d.l_d - 1).min(d.l_x - 1) as isize;
            let m = d.filters.len();
            for p in 0..m {
                for r in p..m {
                    let a = &d.filters[p].samples;
                    let b = &d.filters[r].samples;
                    let norm = d.filters[p].norm() * d.filters[r].norm();
                    let lag0 = if p == r { 1 } else { 0 };
                    for lag in lag0..=max_lag {
                        let mut acc = 0.0;
                        for i in 0..a.len() {
                            let j = i as isize + lag;
                            if j >= 0 && (j as usize) < b.len() {
                                acc += a[i] * b[j as usize];
                            }
                        }
                        best = best.max((acc / norm).abs());
                        if p != r && lag > 0 {
                            let mut acc = 0.0;
                            for i in 0..a.len() {
                                let j = i as isize - lag;
                                if j >= 0 && (j as usize) < b.len() {
                                    acc += a[i] * b[j as usize];
                                }
                            }
                            best = best.max((acc / norm).abs());
                        }
                    }
                }
            }
        }
        DictionaryKind::TimeVariantQ => {
            let cols = d.columns.as_ref().unwrap();
            for i in 0..d.l_x {
                for j in (i + 1)..d.l_x {
                    let lag = j - i;
                    if lag >= d.l_d {
                        break;
                    }
                    let a = &cols[i];
                    let b = &cols[j];
                    let mut acc = 0.0;
                    for k in lag..d.l_d {
                        acc += a[k] * b[k - lag];
                    }
                    best = best.max((acc / (d.atom_norms[i] * d.atom_norms[j])).abs());
                }
            }
        }
    }
    Ok(best.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TS: f64 = 0.004;

    #[test]
    fn ricker_peak_and_root() {
        let w0 = 80.0 * std::f64::consts::PI;
        assert_eq!(ricker_value(w0, 0.0), 1.0);
        let root = std::f64::consts::SQRT_2 / w0;
        assert!(ricker_value(w0, root).abs() < 1e-15);
    }

    #[test]
    fn ricker_sample_values() {
        // direct scalar evaluation at t = T_s for omega0 = 80 pi
        let w0 = 80.0 * std::f64::consts::PI;
        let w = ricker(w0, TS).unwrap();
        let u2 = w0 * w0 * TS * TS;
        let expected = (1.0 - 0.5 * u2) * (-0.25 * u2).exp();
        assert_relative_eq!(expected, 0.384_230_120_391, max_relative = 1e-9);
        assert_relative_eq!(
            w.samples[w.center_index + 1],
            expected,
            max_relative = 1e-15
        );
        assert_eq!(w.samples[w.center_index], 1.0);
    }

    #[test]
    fn ricker_even_symmetry() {
        let w = ricker(50.0 * std::f64::consts::PI, TS).unwrap();
        let c = w.center_index;
        for k in 0..=w.half_width() {
            assert_eq!(w.samples[c + k], w.samples[c - k]);
        }
    }

    #[test]
    fn ricker_default_widths() {
        assert_eq!(default_half_width(80.0 * std::f64::consts::PI, TS), 4);
        assert_eq!(default_half_width(50.0 * std::f64::consts::PI, TS), 6);
    }

    #[test]
    fn ricker_rejects_bad_parameters() {
        assert!(make_ricker(0.0, TS, 3).is_err());
        assert!(make_ricker(10.0, 0.0, 3).is_err());
        assert!(make_ricker(10.0, TS, 0).is_err());
    }

    fn q200() -> QModelParams {
        QModelParams::new(200.0, 80.0 * std::f64::consts::PI, TS).unwrap()
    }

    #[test]
    fn gamma_approximation() {
        for q in [10.0, 50.0, 200.0, 1e4] {
            let p = QModelParams::new(q, 1.0, TS).unwrap();
            let approx = 1.0 / (std::f64::consts::PI * q);
            assert!((p.gamma() - approx).abs() < 1e-3 * p.gamma());
        }
    }

    #[test]
    fn q_pulse_infinite_q_is_source() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let p = QModelParams::new(f64::INFINITY, 80.0 * std::f64::consts::PI, TS).unwrap();
        let out = make_q_pulse(&src, &p, 0.5, src.len()).unwrap();
        assert!(!out.truncation_warning);
        let diff: f64 = out
            .wavelet
            .samples
            .iter()
            .zip(&src.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff / src.norm() < 1e-6);
    }

    #[test]
    fn q_pulse_large_finite_q_matches_source() {
        // exercises the spectral path rather than the pure-delay shortcut
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let p = QModelParams::new(1e9, 80.0 * std::f64::consts::PI, TS).unwrap();
        let out = make_q_pulse(&src, &p, 0.5, src.len()).unwrap();
        let diff: f64 = out
            .wavelet
            .samples
            .iter()
            .zip(&src.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(
            diff / src.norm() < 1e-6,
            "relative error {}",
            diff / src.norm()
        );
    }

    #[test]
    fn q_pulse_zero_travel_time_exact() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let out = make_q_pulse(&src, &q200(), 0.0, src.len()).unwrap();
        assert_eq!(out.wavelet.samples, src.samples);
    }

    #[test]
    fn q_pulse_attenuates_and_shifts_spectrum_down() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let out = make_q_pulse(&src, &q200(), 0.6, 4 * src.len() + 1).unwrap();
        assert!(out.wavelet.norm() < src.norm());

        // oracle: dense zero-padded spectrum, energy-weighted centroid
        let centroid = |w: &Wavelet| {
            let n = 8192;
            let mut buf = vec![Complex::new(0.0, 0.0); n];
            for (j, &v) in w.samples.iter().enumerate() {
                buf[j] = Complex::new(v, 0.0);
            }
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let dw = 2.0 * std::f64::consts::PI / (n as f64 * TS);
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, c) in buf.iter().enumerate().take(n / 2) {
                let p = c.norm_sqr();
                num += i as f64 * dw * p;
                den += p;
            }
            num / den
        };
        let c = centroid(&out.wavelet);
        assert!(
            c < 80.0 * std::f64::consts::PI,
            "centroid {c} not below omega0"
        );
        assert!(c < centroid(&src));
    }

    #[test]
    fn q_pulse_truncation_warning() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        // a 3-sample window cannot hold a dispersed pulse
        let out = make_q_pulse(&src, &q200(), 0.6, 3).unwrap();
        assert!(out.truncation_warning);
    }

    #[test]
    fn identity_dictionary() {
        let d = build_dictionary(vec![Wavelet::unit_impulse(TS).unwrap()], 6).unwrap();
        assert_eq!(d.l_y(), 6);
        let dense = d.to_dense();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(dense[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        let r = Array1::from_iter((0..6).map(|i| i as f64));
        assert_eq!(d.adjoint(r.view()).unwrap().to_vec(), r.to_vec());
    }

    #[test]
    fn signature_dictionary_norms_equal() {
        let d =
            build_dictionary(vec![ricker(80.0 * std::f64::consts::PI, TS).unwrap()], 20).unwrap();
        let n0 = d.atom_norms()[0];
        assert!(d.atom_norms().iter().all(|&n| n == n0));
        assert_eq!(d.l_y(), 20 + d.l_d - 1);
    }

    #[test]
    fn two_filter_columns_match_dense_construction() {
        let w0 = 80.0 * std::f64::consts::PI;
        let f1 = ricker(w0, TS).unwrap();
        let f2 = make_ricker(w0 / 2.0, TS, f1.half_width()).unwrap();
        let d = build_dictionary(vec![f1.clone(), f2.clone()], 10).unwrap();
        assert_eq!(d.n_atoms(), 20);

        // oracle: explicit placement
        for (p, f) in [&f1, &f2].iter().enumerate() {
            for l in 0..10 {
                let i = p * 10 + l;
                let mut e = Array1::zeros(20);
                e[i] = 1.0;
                let col = d.apply(e.view()).unwrap();
                let mut expect = Array1::zeros(d.l_y());
                for (j, &v) in f.samples.iter().enumerate() {
                    expect[l + j] = v;
                }
                assert_eq!(col.to_vec(), expect.to_vec());
            }
        }
    }

    #[test]
    fn apply_zero_and_unit_vectors() {
        let d =
            build_dictionary(vec![ricker(80.0 * std::f64::consts::PI, TS).unwrap()], 12).unwrap();
        let y = d.apply(Array1::zeros(12).view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        let mut e = Array1::zeros(12);
        e[5] = 1.0;
        assert_eq!(
            d.apply(e.view()).unwrap().to_vec(),
            d.column(5).unwrap().to_vec()
        );
        assert!(d.apply(Array1::zeros(13).view()).is_err());
        assert!(d.adjoint(Array1::zeros(3).view()).is_err());
    }

    #[test]
    fn apply_adjoint_match_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w0 = 80.0 * std::f64::consts::PI;
        let d = build_dictionary(
            vec![
                ricker(w0, TS).unwrap(),
                make_ricker(w0 * 0.6, TS, 4).unwrap(),
            ],
            14,
        )
        .unwrap();
        let dense = d.to_dense();
        let x = Array1::from_iter((0..d.n_atoms()).map(|_| rng.gen_range(-2.0..2.0)));
        let y = d.apply(x.view()).unwrap();
        let y_dense = dense.dot(&x);
        for (a, b) in y.iter().zip(y_dense.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-13);
        }
        let r = Array1::from_iter((0..d.l_y()).map(|_| rng.gen_range(-2.0..2.0)));
        let z = d.adjoint(r.view()).unwrap();
        let z_dense = dense.t().dot(&r);
        for (a, b) in z.iter().zip(z_dense.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn adjointness_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = q200();
        let src = ricker(q.omega0, TS).unwrap();
        let dicts = vec![
            build_dictionary(vec![src.clone()], 16).unwrap(),
            build_q_dictionary(&src, &q, 16).unwrap(),
        ];
        for d in &dicts {
            for _ in 0..10 {
                let x = Array1::from_iter((0..d.n_atoms()).map(|_| rng.gen_range(-1.0..1.0)));
                let r = Array1::from_iter((0..d.l_y()).map(|_| rng.gen_range(-1.0..1.0)));
                let lhs = d.apply(x.view()).unwrap().dot(&r);
                let rhs = x.dot(&d.adjoint(r.view()).unwrap());
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn adjoint_of_own_column_is_norm_squared() {
        let d =
            build_dictionary(vec![ricker(80.0 * std::f64::consts::PI, TS).unwrap()], 12).unwrap();
        let col = d.column(6).unwrap();
        let z = d.adjoint(col.view()).unwrap();
        assert_relative_eq!(z[6], d.atom_norms()[6].powi(2), max_relative = 1e-12);
    }

    #[test]
    fn coherence_identity_zero() {
        let d = build_dictionary(vec![Wavelet::unit_impulse(TS).unwrap()], 8).unwrap();
        assert_eq!(mutual_coherence(&d).unwrap(), 0.0);
    }

    #[test]
    fn coherence_ricker_values() {
        // published operating points at F_s = 250 Hz
        let d50 =
            build_dictionary(vec![ricker(50.0 * std::f64::consts::PI, TS).unwrap()], 60).unwrap();
        let mu50 = mutual_coherence(&d50).unwrap();
        assert!((mu50 - 0.764).abs() <= 0.02, "mu50 = {mu50}");
        let d80 =
            build_dictionary(vec![ricker(80.0 * std::f64::consts::PI, TS).unwrap()], 60).unwrap();
        let mu80 = mutual_coherence(&d80).unwrap();
        assert!((mu80 - 0.585).abs() <= 0.02, "mu80 = {mu80}");
    }

    #[test]
    fn coherence_matches_dense_oracle_and_scale_invariant() {
        let w0 = 80.0 * std::f64::consts::PI;
        let f1 = ricker(w0, TS).unwrap();
        let f2 = make_ricker(w0 * 0.7, TS, 4).unwrap();
        let d = build_dictionary(vec![f1.clone(), f2.clone()], 12).unwrap();
        let mu = mutual_coherence(&d).unwrap();

        let dense = d.to_dense();
        let mut best: f64 = 0.0;
        for i in 0..d.n_atoms() {
            for j in (i + 1)..d.n_atoms() {
                let a = dense.column(i);
                let b = dense.column(j);
                let na = a.dot(&a).sqrt();
                let nb = b.dot(&b).sqrt();
                best = best.max((a.dot(&b) / (na * nb)).abs());
            }
        }
        assert_relative_eq!(mu, best, max_relative = 1e-12);
        assert!((0.0..=1.0).contains(&mu));

        let scale = |w: &Wavelet, c: f64| {
            Wavelet::new(w.samples.iter().map(|v| v * c).collect(), TS).unwrap()
        };
        let d2 = build_dictionary(vec![scale(&f1, 3.5), scale(&f2, 3.5)], 12).unwrap();
        assert_relative_eq!(mu, mutual_coherence(&d2).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn q_dictionary_infinite_q_matches_time_invariant() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let p = QModelParams::new(f64::INFINITY, 80.0 * std::f64::consts::PI, TS).unwrap();
        let dq = build_q_dictionary(&src, &p, 12).unwrap();
        let dt = build_dictionary(vec![src.clone()], 12).unwrap();
        assert_eq!(dq.l_d, dt.l_d);
        for i in 0..12 {
            let a = dq.column(i).unwrap();
            let b = dt.column(i).unwrap();
            let err: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!(err / b.dot(&b).sqrt() < 1e-6);
        }
    }

    #[test]
    fn q_dictionary_column_norms_non_increasing() {
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let d = build_q_dictionary(&src, &q200(), 40).unwrap();
        for w in d.atom_norms().windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "norms increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn q_dictionary_field_configuration_builds_clean() {
        // Q = 200, 40 Hz source, 300-sample traces at 4 ms
        let src = ricker(80.0 * std::f64::consts::PI, TS).unwrap();
        let d = build_q_dictionary(&src, &q200(), 300).unwrap();
        assert_eq!(d.n_atoms(), 300);
        assert!(!d.truncation_warning);
        assert_eq!(d.l_y(), 300 + d.l_d - 1);
    }
}
