//! Per-group least squares and channel-amplitude aggregation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{FramePlan, PilotBlock};
use crate::error::{Error, Result};
use crate::{wrap_angle, CMat, RMat};

/// LS estimate of one pilot group and its element-wise angle in `[-π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupObservation {
    pub h_hat_i: CMat,
    pub a_i: RMat,
}

/// `Ĥ_i = Y_i Sᴴ / n_t`.
pub fn per_group_ls(y_block: &CMat, pilot: &PilotBlock) -> Result<GroupObservation> {
    let n_t = pilot.n_t();
    if y_block.ncols() != n_t {
        return Err(Error::ShapeMismatch(format!(
            "pilot block has {} columns, pilot is {n_t}x{n_t}",
            y_block.ncols()
        )));
    }
    let h_hat_i = y_block * pilot.s.adjoint() / crate::C64::new(n_t as f64, 0.0);
    let a_i = h_hat_i.map(|z| wrap_angle(z.arg()));
    Ok(GroupObservation { h_hat_i, a_i })
}

/// LS observations for every pilot group of a received frame.
pub fn observe_groups(y: &CMat, plan: &FramePlan, pilot: &PilotBlock) -> Result<Vec<GroupObservation>> {
    if y.ncols() != plan.l_f {
        return Err(Error::ShapeMismatch(format!("frame has {} columns, expected {}", y.ncols(), plan.l_f)));
    }
    (0..plan.n_c)
        .map(|i| {
            let cols = plan.pilot_columns(i);
            per_group_ls(&y.columns(cols.start, cols.len()).clone_owned(), pilot)
        })
        .collect()
}

/// Mean of `|Ĥ_i|²` minus `σ_n² / n_t`, the per-entry noise power of `Ĥ_i`.
pub fn amplitude_sq_aggregate(groups: &[GroupObservation], sigma_n_sq: f64) -> Result<RMat> {
    let n_t = groups.first().ok_or(Error::EmptyInput("pilot groups"))?.h_hat_i.ncols();
    amplitude_sq_aggregate_with(groups, sigma_n_sq / n_t as f64)
}

/// As [`amplitude_sq_aggregate`] with an explicit subtracted noise constant.
pub fn amplitude_sq_aggregate_with(groups: &[GroupObservation], noise_correction: f64) -> Result<RMat> {
    let first = groups.first().ok_or(Error::EmptyInput("pilot groups"))?;
    let mut acc = RMat::zeros(first.h_hat_i.nrows(), first.h_hat_i.ncols());
    for g in groups {
        acc += g.h_hat_i.map(|z| z.norm_sqr());
    }
    Ok(acc.map(|x| x / groups.len() as f64 - noise_correction))
}

/// `sqrt(max(0, ·))` element-wise.
pub fn amplitude_finalize(amp_sq: &RMat) -> RMat {
    amp_sq.map(|x| x.max(0.0).sqrt())
}

/// Exponentially weighted running estimates for streaming operation.
///
/// The first update seeds the state directly; later updates apply
/// `x ← (1 − K) x + K x_new`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineState {
    #[serde(with = "crate::matjson::real")]
    pub amp_sq: RMat,
    #[serde(with = "crate::matjson::complex")]
    pub h_run: CMat,
    pub k_factor: f64,
    pub amp_updates: usize,
    pub h_updates: usize,
}

impl OnlineState {
    pub fn new(n_r: usize, n_t: usize, k_factor: f64) -> Result<Self> {
        if !(k_factor > 0.0 && k_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!("updating factor {k_factor} outside (0, 1]")));
        }
        Ok(OnlineState {
            amp_sq: RMat::zeros(n_r, n_t),
            h_run: CMat::zeros(n_r, n_t),
            k_factor,
            amp_updates: 0,
            h_updates: 0,
        })
    }

    /// Default updating factor `2 / (n_c + 1)`.
    pub fn default_k(n_c: usize) -> f64 {
        2.0 / (n_c as f64 + 1.0)
    }
}

fn blend<T>(old: &DMatrix<T>, new: &DMatrix<T>, k: f64, first: bool) -> DMatrix<T>
where
    T: nalgebra::Scalar + Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    if first {
        return new.clone();
    }
    old.zip_map(new, |a, b| a * (1.0 - k) + b * k)
}

pub fn amplitude_sq_online(state: &OnlineState, group: &GroupObservation, sigma_n_sq: f64) -> OnlineState {
    let n_t = group.h_hat_i.ncols() as f64;
    let sample = group.h_hat_i.map(|z| z.norm_sqr() - sigma_n_sq / n_t);
    OnlineState {
        amp_sq: blend(&state.amp_sq, &sample, state.k_factor, state.amp_updates == 0),
        amp_updates: state.amp_updates + 1,
        ..state.clone()
    }
}

pub fn average_channel_online(state: &OnlineState, group_estimate: &CMat) -> OnlineState {
    OnlineState {
        h_run: blend(&state.h_run, group_estimate, state.k_factor, state.h_updates == 0),
        h_updates: state.h_updates + 1,
        ..state.clone()
    }
}
