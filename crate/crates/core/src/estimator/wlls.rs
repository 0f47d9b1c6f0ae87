//! Amplitude-weighted linear least squares for the `n_r + n_t − 1` phases.
//!
//! Angle vectors are stacked column-major (`l` outer, `k` inner), which is
//! nalgebra's storage order for an `n_r × n_t` matrix.

use crate::config::{FramePlan, SystemConfig};
use crate::error::{Error, Result};
use crate::RMat;

/// Relative singular-value cutoff for the pseudo-inverse.
pub const PINV_RCOND: f64 = 1e-10;

/// Stacked `[I_{n_r}, B_l]` row blocks; `B_l` selects transmit column `l`
/// for every `l < n_t` and is zero for the reference antenna.
pub fn build_c_matrix(n_r: usize, n_t: usize) -> RMat {
    let mut c = RMat::zeros(n_r * n_t, n_r + n_t - 1);
    for l in 0..n_t {
        for k in 0..n_r {
            let row = l * n_r + k;
            c[(row, k)] = 1.0;
            if l + 1 < n_t {
                c[(row, n_r + l)] = 1.0;
            }
        }
    }
    c
}

/// SVD pseudo-inverse and numerical rank at cutoff `rcond · σ_max`.
pub fn pinv_svd(m: &RMat, rcond: f64) -> (RMat, usize) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = rcond * s_max;
    let mut pinv = RMat::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            rank += 1;
            pinv += (v_t.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    (pinv, rank)
}

/// Everything the per-group solve and the smoother need from `|Ĥ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct WllsSystem {
    pub c: RMat,
    pub c_weighted: RMat,
    pub pinv_c_weighted: RMat,
    /// Column-major `|Ĥ|`, the weights applied to the angle vector.
    pub weights: Vec<f64>,
    pub noise_var: Vec<f64>,
    pub process_var: Vec<f64>,
}

impl WllsSystem {
    pub fn new(amp: &RMat, sigma_n_sq: f64, process_var: Vec<f64>) -> Result<Self> {
        let (n_r, n_t) = amp.shape();
        let q = n_r + n_t - 1;
        if process_var.len() != q {
            return Err(Error::LengthMismatch { left: process_var.len(), right: q });
        }
        let c = build_c_matrix(n_r, n_t);
        let weights: Vec<f64> = amp.as_slice().to_vec();
        let mut c_weighted = c.clone();
        for (r, &w) in weights.iter().enumerate() {
            c_weighted.row_mut(r).scale_mut(w);
        }
        let (pinv_c_weighted, rank) = pinv_svd(&c_weighted, PINV_RCOND);
        if rank < q {
            return Err(Error::RankDeficientWeights { rank, expected: q });
        }
        let mut sys = WllsSystem { c, c_weighted, pinv_c_weighted, weights, noise_var: Vec::new(), process_var };
        sys.noise_var = wlls_noise_variance(&sys, sigma_n_sq, n_t);
        Ok(sys)
    }

    pub fn n_params(&self) -> usize {
        self.c.ncols()
    }

    /// `β̂ = (C′)⁺ (|Ĥ| ⊙ α)` for one unwrapped angle matrix.
    pub fn solve_group(&self, angles: &RMat) -> Vec<f64> {
        let q = self.n_params();
        let mut out = vec![0.0; q];
        for (j, (&a, &w)) in angles.as_slice().iter().zip(&self.weights).enumerate() {
            let x = a * w;
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.pinv_c_weighted[(r, j)] * x;
            }
        }
        out
    }
}

/// `σ²_nW(q) = ‖row q of (C′)⁺‖² σ_n² / (2 n_t)`.
pub fn wlls_noise_variance(system: &WllsSystem, sigma_n_sq: f64, n_t: usize) -> Vec<f64> {
    system
        .pinv_c_weighted
        .row_iter()
        .map(|r| r.norm_squared() * sigma_n_sq / (2.0 * n_t as f64))
        .collect()
}

/// Phase-walk variance between adjacent groups for each β row.
pub fn inter_group_process_variance(config: &SystemConfig, plan: &FramePlan) -> Vec<f64> {
    let l_c = plan.l_c as f64;
    (0..config.n_r + config.n_t - 1)
        .map(|q| {
            if q < config.n_r {
                l_c * (config.sigma_dphi_sq + config.sigma_dpsi_sq)
            } else {
                l_c * 2.0 * config.sigma_dpsi_sq
            }
        })
        .collect()
}

/// Solves every group; returns a `(n_r + n_t − 1) × n_c` matrix.
pub fn wlls_solve(system: &WllsSystem, unwrapped: &[RMat]) -> RMat {
    let mut beta = RMat::zeros(system.n_params(), unwrapped.len());
    for (i, a) in unwrapped.iter().enumerate() {
        for (q, v) in system.solve_group(a).into_iter().enumerate() {
            beta[(q, i)] = v;
        }
    }
    beta
}
