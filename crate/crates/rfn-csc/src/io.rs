//! File formats: the binary trace-matrix container and the JSON
//! experiment-config schema.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"RFNTRCE1";

/// Payload element type of a trace-matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn code(self) -> u8 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            4 => Ok(Dtype::F32),
            8 => Ok(Dtype::F64),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        self.code() as usize
    }
}

/// Header of a trace-matrix file; traces are columns, payload is
/// column-major little-endian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceMatrixMeta {
    pub dtype: Dtype,
    pub rows: u32,
    pub cols: u32,
    pub sample_interval_us: u32,
}

/// Writes `m` column-major with the requested payload type. f32 payloads
/// round each value once on write (documented lossy).
pub fn write_trace_matrix(
    path: &Path,
    m: &Array2<f64>,
    dtype: Dtype,
    sample_interval_us: u32,
) -> Result<()> {
    let rows =
        u32::try_from(m.nrows()).map_err(|_| Error::InvalidParameter("too many rows".into()))?;
    let cols =
        u32::try_from(m.ncols()).map_err(|_| Error::InvalidParameter("too many cols".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[dtype.code()])?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&sample_interval_us.to_le_bytes())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            match dtype {
                Dtype::F32 => w.write_all(&(m[(i, j)] as f32).to_le_bytes())?,
                Dtype::F64 => w.write_all(&m[(i, j)].to_le_bytes())?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace-matrix file back as f64 (f32 payloads widen losslessly).
pub fn read_trace_matrix(path: &Path) -> Result<(Array2<f64>, TraceMatrixMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let dtype = Dtype::from_code(b1[0])?;
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let rows = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let cols = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let sample_interval_us = u32::from_le_bytes(b4);

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expect = rows * cols * dtype.size();
    if payload.len() != expect {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {expect}",
            payload.len()
        )));
    }
    let mut m = Array2::zeros((rows, cols));
    let mut off = 0;
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = match dtype {
                Dtype::F32 => {
                    let v = f32::from_le_bytes(payload[off..off + 4].try_into().unwrap());
                    off += 4;
                    v as f64
                }
                Dtype::F64 => {
                    let v = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
                    off += 8;
                    v
                }
            };
        }
    }
    Ok((
        m,
        TraceMatrixMeta {
            dtype,
            rows: rows as u32,
            cols: cols as u32,
            sample_interval_us,
        },
    ))
}

/// Experiment configuration document. Unknown keys are rejected so stale
/// configs fail loudly; seeds are mandatory wherever randomness enters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dictionary: DictionarySection,
    #[serde(default)]
    pub rfn: RfnSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub synth: SynthSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySection {
    /// "ricker" (default) or "impulse".
    #[serde(default)]
    pub kind: Option<String>,
    /// Dominant radial frequency of the source pulse, rad/s.
    pub omega0: f64,
    /// Sampling interval, seconds.
    pub sample_interval: f64,
    /// Optional truncation override, samples.
    #[serde(default)]
    pub half_width: Option<usize>,
    /// Optional quality factor; absence means the time-invariant bank.
    #[serde(default)]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfnSection {
    pub kernel: KernelSection,
    /// Clip levels per iteration, last repeating.
    pub tau: Vec<f64>,
}

impl Default for RfnSection {
    fn default() -> Self {
        RfnSection {
            kernel: KernelSection {
                shape: "gaussian".into(),
                len: 11,
                sigma: Some(2.0),
            },
            tau: vec![0.4, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    /// "rectangular" or "gaussian".
    pub shape: String,
    pub len: usize,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Explicit leading thresholds.
    pub beta: Vec<f64>,
    /// Decay factor applied past the explicit thresholds.
    pub beta_decay: f64,
    pub step: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
    /// "least-squares", "projection", "residual", or "support-only".
    pub amplitude_mode: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            beta: vec![0.95, 0.88],
            beta_decay: 0.5,
            step: 0.5,
            max_iters: 4,
            stop_tol: 1e-4,
            amplitude_mode: "residual".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub p: f64,
    pub sigma_r: f64,
    #[serde(default)]
    pub mu_r: f64,
    pub delta_k: usize,
    pub l_x: usize,
    pub j: usize,
    pub seed: u64,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// "f32" (default) or "f64" payload on write.
    #[serde(default)]
    pub dtype: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.synth.j == 0 || self.synth.l_x == 0 {
            return Err(Error::InvalidParameter(
                "synth image must have channels and samples".into(),
            ));
        }
        if self.synth.snr_db.is_some() && self.synth.noise_seed.is_none() {
            return Err(Error::InvalidParameter(
                "noise_seed is mandatory when snr_db is set".into(),
            ));
        }
        if let Some(kind) = &self.dictionary.kind {
            if kind != "ricker" && kind != "impulse" {
                return Err(Error::InvalidParameter(format!(
                    "unknown dictionary kind {kind:?}"
                )));
            }
        }
        match self.rfn.kernel.shape.as_str() {
            "rectangular" => {}
            "gaussian" => {
                if self.rfn.kernel.sigma.is_none() {
                    return Err(Error::InvalidParameter(
                        "gaussian kernel requires sigma".into(),
                    ));
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown kernel shape {other:?}"
                )))
            }
        }
        match self.solver.amplitude_mode.as_str() {
            "least-squares" | "projection" | "residual" | "support-only" => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown amplitude mode {other:?}"
                )))
            }
        }
        if let Some(d) = &self.output.dtype {
            if d != "f32" && d != "f64" {
                return Err(Error::InvalidParameter(format!("unknown dtype {d:?}")));
            }
        }
        Ok(())
    }

    pub fn output_dtype(&self) -> Dtype {
        match self.output.dtype.as_deref() {
            Some("f64") => Dtype::F64,
            _ => Dtype::F32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_bit_exact_f64() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Array2::from_shape_fn((17, 9), |_| rng.gen_range(-5.0..5.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rtm");
        write_trace_matrix(&path, &m, Dtype::F64, 4000).unwrap();
        let (back, meta) = read_trace_matrix(&path).unwrap();
        assert_eq!(m, back);
        assert_eq!(meta.rows, 17);
        assert_eq!(meta.cols, 9);
        assert_eq!(meta.sample_interval_us, 4000);
        assert_eq!(meta.dtype, Dtype::F64);
    }

    #[test]
    fn f32_payload_round_trips_after_one_rounding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = Array2::from_shape_fn((8, 3), |_| rng.gen_range(-5.0..5.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m32.rtm");
        write_trace_matrix(&path, &m, Dtype::F32, 4000).unwrap();
        let (once, _) = read_trace_matrix(&path).unwrap();
        // writing the already-rounded matrix again is bit-exact
        let path2 = dir.path().join("m32b.rtm");
        write_trace_matrix(&path2, &once, Dtype::F32, 4000).unwrap();
        let (twice, _) = read_trace_matrix(&path2).unwrap();
        assert_eq!(once, twice);
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.rtm");
        std::fs::write(&path, b"NOTMAGIC....").unwrap();
        assert!(read_trace_matrix(&path).is_err());

        // truncate a valid file
        let m = Array2::zeros((4, 4));
        let good = dir.path().join("good.rtm");
        write_trace_matrix(&good, &m, Dtype::F64, 1).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_trace_matrix(&path).is_err());
    }

    fn minimal_config() -> String {
        r#"{
            "dictionary": {"omega0": 251.327, "sample_interval": 0.004},
            "synth": {"p": 0.15, "sigma_r": 3.0, "delta_k": 5,
                      "l_x": 60, "j": 10, "seed": 7}
        }"#
        .to_string()
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(&minimal_config()).unwrap();
        assert_eq!(cfg.solver.max_iters, 4);
        assert_eq!(cfg.rfn.tau, vec![0.4, 1.0]);
        assert_eq!(cfg.output_dtype(), Dtype::F32);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = minimal_config().replace("\"seed\": 7", "\"seed\": 7, \"extra\": 1");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn config_requires_noise_seed_with_snr() {
        let text = minimal_config().replace("\"seed\": 7", "\"seed\": 7, \"snr_db\": 40.0");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = minimal_config().replace(
            "\"seed\": 7",
            "\"seed\": 7, \"snr_db\": 40.0, \"noise_seed\": 1",
        );
        assert!(ExperimentConfig::from_json(&text).is_ok());
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::from_json(&minimal_config()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&cfg).unwrap()
        );
    }
}
