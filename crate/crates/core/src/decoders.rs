//! Linear MMSE and exhaustive maximum-likelihood MIMO detection.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::{CMat, C64};

/// Largest candidate count the exhaustive search accepts.
pub const MLD_MAX_CANDIDATES: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub symbols: Vec<C64>,
    /// Constellation index per transmit antenna.
    pub indices: Vec<usize>,
    /// `‖y − H ŝ‖²` for MLD; `None` for MMSE.
    pub metric: Option<f64>,
}

/// Precomputed `(HᴴH + σ²I)⁻¹Hᴴ` for decoding many vectors with one channel.
#[derive(Debug, Clone)]
pub struct MmseFilter {
    w: CMat,
}

impl MmseFilter {
    pub fn new(h_eq: &CMat, sigma_n_sq: f64) -> Result<Self> {
        let (n_r, n_t) = h_eq.shape();
        if n_r < n_t {
            return Err(Error::ShapeMismatch(format!("MMSE needs n_r >= n_t, got {n_r}x{n_t}")));
        }
        let hh = h_eq.adjoint();
        let gram = &hh * h_eq + CMat::identity(n_t, n_t) * C64::new(sigma_n_sq, 0.0);
        let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lu = gram.lu();
        let det = lu.determinant().norm();
        if !(scale > 0.0) || !(det > 1e-12 * scale.powi(n_t as i32)) {
            return Err(Error::SingularSystem);
        }
        let inv = lu.try_inverse().ok_or(Error::SingularSystem)?;
        Ok(MmseFilter { w: inv * hh })
    }

    pub fn decode(&self, y: &DVector<C64>, constellation: &Constellation) -> DecodeResult {
        let soft = &self.w * y;
        let indices: Vec<usize> = soft.iter().map(|&z| constellation.nearest(z)).collect();
        let symbols = indices.iter().map(|&i| constellation.points[i]).collect();
        DecodeResult { symbols, indices, metric: None }
    }
}

pub fn mmse_decode(
    y: &DVector<C64>,
    h_eq: &CMat,
    sigma_n_sq: f64,
    constellation: &Constellation,
) -> Result<DecodeResult> {
    if y.len() != h_eq.nrows() {
        return Err(Error::LengthMismatch { left: y.len(), right: h_eq.nrows() });
    }
    Ok(MmseFilter::new(h_eq, sigma_n_sq)?.decode(y, constellation))
}

/// Exhaustive search; ties keep the lexicographically smallest index tuple
/// (first antenna most significant).
pub fn mld_decode(y: &DVector<C64>, h_eq: &CMat, constellation: &Constellation) -> Result<DecodeResult> {
    let (n_r, n_t) = h_eq.shape();
    if y.len() != n_r {
        return Err(Error::LengthMismatch { left: y.len(), right: n_r });
    }
    let m = constellation.len();
    let count = (m as u128).checked_pow(n_t as u32).unwrap_or(u128::MAX);
    if count > MLD_MAX_CANDIDATES {
        return Err(Error::SearchSpaceTooLarge(count));
    }
    // Column contributions H[:, l] · point, reused across candidates.
    let contrib: Vec<Vec<DVector<C64>>> = (0..n_t)
        .map(|l| constellation.points.iter().map(|&p| h_eq.column(l) * p).collect())
        .collect();
    let mut idx = vec![0usize; n_t];
    let mut best = idx.clone();
    let mut best_metric = f64::INFINITY;
    let mut resid = DVector::from_element(n_r, C64::new(0.0, 0.0));
    for _ in 0..count {
        resid.copy_from(y);
        for (l, &i) in idx.iter().enumerate() {
            resid -= &contrib[l][i];
        }
        let metric = resid.norm_squared();
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&idx);
        }
        for l in (0..n_t).rev() {
            idx[l] += 1;
            if idx[l] < m {
                break;
            }
            idx[l] = 0;
        }
    }
    let symbols = best.iter().map(|&i| constellation.points[i]).collect();
    Ok(DecodeResult { symbols, indices: best, metric: Some(best_metric) })
}
