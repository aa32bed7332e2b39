//! Recovery and reconstruction quality measures.

use crate::dictionary::ConvDictionary;
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::Serialize;

/// Bundle of the scores an experiment reports per run.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreSet {
    pub rho_x: Option<f64>,
    pub rho_x_first: Option<f64>,
    pub rho_y: Option<f64>,
    pub rho_support: Option<f64>,
    pub mse: f64,
    pub mean_iterations: f64,
}

/// Cosine similarity of the column-stacked images.
pub fn corr_images(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter(format!(
            "shape mismatch {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedScore("zero-norm image".into()));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Correlation of the nonzero-indicator images.
pub fn support_corr(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let ia = a.mapv(|v| if v != 0.0 { 1.0 } else { 0.0 });
    let ib = b.mapv(|v| if v != 0.0 { 1.0 } else { 0.0 });
    corr_images(&ia, &ib)
}

/// Mean over channels of the squared code error.
pub fn mse_code(x: &Array2<f64>, x_hat: &Array2<f64>) -> Result<f64> {
    if x.dim() != x_hat.dim() {
        return Err(Error::InvalidParameter(format!(
            "shape mismatch {:?} vs {:?}",
            x.dim(),
            x_hat.dim()
        )));
    }
    let j = x.ncols().max(1);
    let total: f64 = x
        .iter()
        .zip(x_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / j as f64)
}

/// Correlation between the data and its reconstruction from a code image.
pub fn reconstruction_score(
    y: &Array2<f64>,
    d: &ConvDictionary,
    x_hat: &Array2<f64>,
) -> Result<f64> {
    if x_hat.nrows() != d.n_atoms() {
        return Err(Error::InvalidParameter(format!(
            "code rows {} do not match {} atoms",
            x_hat.nrows(),
            d.n_atoms()
        )));
    }
    let mut y_hat = Array2::zeros((d.l_y(), x_hat.ncols()));
    for j in 0..x_hat.ncols() {
        y_hat.column_mut(j).assign(&d.apply(x_hat.column(j))?);
    }
    corr_images(y, &y_hat)
}
