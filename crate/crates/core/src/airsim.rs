//! Ground-truth simulation: Rayleigh channel, Wiener oscillator walks and
//! the received frame `y_m = Φ_m H Ψ_m s_m + n_m`.
//!
//! All per-symbol matrices are indexed by storage column (see
//! [`FramePlan::column`]); the prefix columns come first.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{FramePlan, PilotBlock, SystemConfig};
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::{CMat, RMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    #[serde(with = "crate::matjson::complex")]
    pub h: CMat,
    #[serde(with = "crate::matjson::real")]
    pub phi: RMat,
    #[serde(with = "crate::matjson::real")]
    pub psi: RMat,
    #[serde(with = "crate::matjson::real")]
    pub beta: RMat,
}

impl ChannelRealization {
    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// `Φ_m H Ψ_m` at storage column `col`.
    pub fn equivalent_channel(&self, col: usize) -> CMat {
        equivalent_channel(&self.h, &self.phi, &self.psi, col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub y: CMat,
    pub s: CMat,
}

/// Transmitted frame plus the constellation indices of its data symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub s: CMat,
    /// Data symbol indices, cell by cell, column by column, antenna-minor.
    pub data_index: Vec<u16>,
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// i.i.d. CN(0, 1) entries.
pub fn sample_channel<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> CMat {
    let mut h = CMat::zeros(n_r, n_t);
    for r in 0..n_r {
        for c in 0..n_t {
            h[(r, c)] = cn01(rng);
        }
    }
    h
}

/// `β` rows: `φ_k + ψ_{n_t}` for receivers, then `ψ_l − ψ_{n_t}` for `l < n_t`.
pub fn beta_from_phases(phi: &RMat, psi: &RMat) -> RMat {
    let n_r = phi.nrows();
    let n_t = psi.nrows();
    let cols = phi.ncols();
    let mut beta = RMat::zeros(n_r + n_t - 1, cols);
    for m in 0..cols {
        let reference = psi[(n_t - 1, m)];
        for k in 0..n_r {
            beta[(k, m)] = phi[(k, m)] + reference;
        }
        for l in 0..n_t - 1 {
            beta[(n_r + l, m)] = psi[(l, m)] - reference;
        }
    }
    beta
}

fn walk<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> RMat {
    use std::f64::consts::PI;
    let sd = var.sqrt();
    let mut w = RMat::zeros(rows, cols);
    for r in 0..rows {
        let mut x = rng.random_range(-PI..PI);
        w[(r, 0)] = x;
        for c in 1..cols {
            let d: f64 = StandardNormal.sample(rng);
            x += sd * d;
            w[(r, c)] = x;
        }
    }
    w
}

/// Wiener walks over all `l_f` columns with uniform initial phases.
pub fn sample_phase_walks<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> (RMat, RMat, RMat) {
    let phi = walk(config.n_r, config.l_f, config.sigma_dphi_sq, rng);
    let psi = walk(config.n_t, config.l_f, config.sigma_dpsi_sq, rng);
    let beta = beta_from_phases(&phi, &psi);
    (phi, psi, beta)
}

pub fn sample_realization<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    config: &SystemConfig,
    channel_rng: &mut R1,
    phase_rng: &mut R2,
) -> ChannelRealization {
    let h = sample_channel(config.n_r, config.n_t, channel_rng);
    let (phi, psi, beta) = sample_phase_walks(config, phase_rng);
    ChannelRealization { h, phi, psi, beta }
}

pub fn equivalent_channel(h: &CMat, phi: &RMat, psi: &RMat, col: usize) -> CMat {
    CMat::from_fn(h.nrows(), h.ncols(), |k, l| {
        h[(k, l)] * C64::from_polar(1.0, phi[(k, col)] + psi[(l, col)])
    })
}

/// Pilots in every group, uniform random data elsewhere, prefix = frame tail.
pub fn build_tx_frame<R: Rng + ?Sized>(
    config: &SystemConfig,
    plan: &FramePlan,
    pilot: &PilotBlock,
    rng: &mut R,
) -> TxFrame {
    let constellation = Constellation::new(config.modulation);
    let m = constellation.len();
    let n_t = config.n_t;
    let mut s = CMat::zeros(n_t, config.l_f);
    let mut data_index = Vec::with_capacity(plan.n_c * plan.l_d() * n_t);
    for i in 0..plan.n_c {
        for (j, col) in plan.pilot_columns(i).enumerate() {
            s.set_column(col, &pilot.s.column(j));
        }
        for col in plan.data_columns(i) {
            for l in 0..n_t {
                let idx = rng.random_range(0..m);
                data_index.push(idx as u16);
                s[(l, col)] = constellation.points[idx];
            }
        }
    }
    for c in 0..config.l_cp {
        let src = config.l_f - config.l_cp + c;
        let tail = s.column(src).clone_owned();
        s.set_column(c, &tail);
    }
    TxFrame { s, data_index }
}

/// Applies the channel symbol by symbol; `noise = None` gives a noiseless frame.
pub fn transmit<R: Rng + ?Sized>(
    h: &CMat,
    phi: &RMat,
    psi: &RMat,
    s: &CMat,
    sigma_n_sq: f64,
    noise: Option<&mut R>,
) -> Result<ReceivedFrame> {
    let (n_r, n_t) = h.shape();
    let cols = s.ncols();
    if s.nrows() != n_t || phi.shape() != (n_r, cols) || psi.shape() != (n_t, cols) {
        return Err(Error::ShapeMismatch(format!(
            "h {:?}, s {:?}, phi {:?}, psi {:?}",
            h.shape(),
            s.shape(),
            phi.shape(),
            psi.shape()
        )));
    }
    let mut y = CMat::zeros(n_r, cols);
    let mut tx = vec![C64::new(0.0, 0.0); n_t];
    for m in 0..cols {
        for l in 0..n_t {
            tx[l] = C64::from_polar(1.0, psi[(l, m)]) * s[(l, m)];
        }
        for k in 0..n_r {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n_t {
                acc += h[(k, l)] * tx[l];
            }
            y[(k, m)] = C64::from_polar(1.0, phi[(k, m)]) * acc;
        }
    }
    if let Some(rng) = noise {
        let sd = sigma_n_sq.sqrt();
        for v in y.iter_mut() {
            *v += cn01(rng) * sd;
        }
    }
    Ok(ReceivedFrame { y, s: s.clone() })
}
