//! Two-sided FIR Wiener smoothing across pilot groups.
//!
//! The autocorrelation matrix `K = K_p + σ_n I` of a random walk observed
//! relative to the window centre is block diagonal: samples before and after
//! the centre are uncorrelated, and the centre itself only carries noise. Both
//! side blocks equal `p · min(d1, d2) + σ_n I` over the distance `d` from the
//! centre, so one `l_w × l_w` Cholesky solve gives every tap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{RMat, C64};

/// Edge handling for groups whose window leaves the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// Drop missing taps and renormalise the rest to sum to one.
    #[default]
    Truncate,
    /// Repeat the first/last sample beyond the frame.
    HoldEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerFilter {
    /// One tap vector of length `2 l_w + 1` per β row.
    pub taps: Vec<Vec<f64>>,
    pub l_w: usize,
}

impl WienerFilter {
    /// Taps per row; rows with both variances zero fall back to the identity.
    pub fn new(l_w: usize, process_var: &[f64], noise_var: &[f64]) -> Result<Self> {
        let taps = process_var
            .iter()
            .zip(noise_var)
            .map(|(&p, &n)| match wiener_coefficients(l_w, p, n) {
                Err(Error::SingularK) => Ok(delta_taps(l_w)),
                other => other,
            })
            .collect::<Result<_>>()?;
        Ok(WienerFilter { taps, l_w })
    }
}

/// Unit centre tap.
pub fn delta_taps(l_w: usize) -> Vec<f64> {
    let mut t = vec![0.0; 2 * l_w + 1];
    t[l_w] = 1.0;
    t
}

/// `ω = K⁻¹1 / (1ᵀK⁻¹1)` for a walk with per-step variance `process_var`
/// observed in white noise of variance `noise_var`.
pub fn wiener_coefficients(l_w: usize, process_var: f64, noise_var: f64) -> Result<Vec<f64>> {
    if !(process_var >= 0.0 && noise_var >= 0.0) {
        return Err(Error::NonPositiveVariance(process_var.min(noise_var)));
    }
    if process_var == 0.0 && noise_var == 0.0 {
        return Err(Error::SingularK);
    }
    if noise_var == 0.0 || l_w == 0 {
        return Ok(delta_taps(l_w));
    }
    let side = DMatrix::from_fn(l_w, l_w, |a, b| {
        process_var * (a.min(b) + 1) as f64 + if a == b { noise_var } else { 0.0 }
    });
    let chol = side.cholesky().ok_or(Error::SingularK)?;
    let half = chol.solve(&DVector::from_element(l_w, 1.0));
    let mut x = vec![0.0; 2 * l_w + 1];
    x[l_w] = 1.0 / noise_var;
    for d in 1..=l_w {
        x[l_w - d] = half[d - 1];
        x[l_w + d] = half[d - 1];
    }
    let total: f64 = x.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::SingularK);
    }
    Ok(x.into_iter().map(|v| v / total).collect())
}

/// Generic FIR smoother over a sequence with the given edge policy.
fn smooth_generic<T>(x: &[T], taps: &[f64], boundary: BoundaryPolicy, zero: T) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = x.len() as isize;
    let l_w = (taps.len() / 2) as isize;
    (0..n)
        .map(|i| {
            let mut acc = zero;
            let mut wsum = 0.0;
            for (j, &w) in taps.iter().enumerate() {
                let idx = i + j as isize - l_w;
                let v = match boundary {
                    BoundaryPolicy::Truncate if idx < 0 || idx >= n => continue,
                    BoundaryPolicy::Truncate => x[idx as usize],
                    BoundaryPolicy::HoldEdge => x[idx.clamp(0, n - 1) as usize],
                };
                acc = acc + v * w;
                wsum += w;
            }
            acc * (1.0 / wsum)
        })
        .collect()
}

pub fn smooth_sequence(x: &[f64], taps: &[f64], boundary: BoundaryPolicy) -> Vec<f64> {
    smooth_generic(x, taps, boundary, 0.0)
}

pub fn smooth_complex(x: &[C64], taps: &[f64], boundary: BoundaryPolicy) -> Vec<C64> {
    smooth_generic(x, taps, boundary, C64::new(0.0, 0.0))
}

/// Smooths each β row with its own taps.
pub fn wiener_smooth(beta_hat: &RMat, filter: &WienerFilter, boundary: BoundaryPolicy) -> Result<RMat> {
    if filter.taps.len() != beta_hat.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} tap vectors for {} rows",
            filter.taps.len(),
            beta_hat.nrows()
        )));
    }
    let mut out = RMat::zeros(beta_hat.nrows(), beta_hat.ncols());
    for (q, taps) in filter.taps.iter().enumerate() {
        let row: Vec<f64> = beta_hat.row(q).iter().copied().collect();
        for (i, v) in smooth_sequence(&row, taps, boundary).into_iter().enumerate() {
            out[(q, i)] = v;
        }
    }
    Ok(out)
}
