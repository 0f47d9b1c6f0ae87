//! Phase removal, channel averaging, interpolation and composition.

use crate::config::{FramePlan, PilotBlock};
use crate::error::{Error, Result};
use crate::{CMat, RMat, C64};

use super::amplitude::per_group_ls;

/// `diag(e^{s jβ_r}) · H · diag(e^{s jβ_t}, 1)` with `s = sign`.
pub fn rotate(h: &CMat, beta: &[f64], sign: f64) -> Result<CMat> {
    let (n_r, n_t) = h.shape();
    if beta.len() != n_r + n_t - 1 {
        return Err(Error::ShapeMismatch(format!(
            "{} phases for a {n_r}x{n_t} channel",
            beta.len()
        )));
    }
    Ok(CMat::from_fn(n_r, n_t, |k, l| {
        let t = if l + 1 < n_t { beta[n_r + l] } else { 0.0 };
        h[(k, l)] * C64::from_polar(1.0, sign * (beta[k] + t))
    }))
}

/// Removes the smoothed phases from one group's LS estimate.
pub fn recover_group_channel(y_block: &CMat, pilot: &PilotBlock, beta_smooth_col: &[f64]) -> Result<CMat> {
    let obs = per_group_ls(y_block, pilot)?;
    rotate(&obs.h_hat_i, beta_smooth_col, -1.0)
}

pub fn average_channel(recovered: &[CMat]) -> Result<CMat> {
    let first = recovered.first().ok_or(Error::EmptyInput("recovered groups"))?;
    let mut acc = CMat::zeros(first.nrows(), first.ncols());
    for h in recovered {
        acc += h;
    }
    Ok(acc / C64::new(recovered.len() as f64, 0.0))
}

/// Per-symbol phases over every storage column: linear between reference
/// symbols, held at the first/last reference outside them.
pub fn interpolate_beta(beta_smooth: &RMat, plan: &FramePlan) -> Result<RMat> {
    let n_c = beta_smooth.ncols();
    if n_c == 0 || n_c != plan.n_c {
        return Err(Error::ShapeMismatch(format!("{n_c} smoothed groups, plan has {}", plan.n_c)));
    }
    let q = beta_smooth.nrows();
    let first = plan.ref_index[0] as i64;
    let last = plan.ref_index[n_c - 1] as i64;
    let l_c = plan.l_c as i64;
    let mut out = RMat::zeros(q, plan.l_f);
    for col in 0..plan.l_f {
        let m = plan.symbol_at(col);
        if m <= first {
            out.set_column(col, &beta_smooth.column(0));
        } else if m >= last {
            out.set_column(col, &beta_smooth.column(n_c - 1));
        } else {
            let i = ((m - first) / l_c) as usize;
            let frac = (m - plan.ref_index[i] as i64) as f64 / l_c as f64;
            for r in 0..q {
                let a = beta_smooth[(r, i)];
                let b = beta_smooth[(r, i + 1)];
                out[(r, col)] = a + (b - a) * frac;
            }
        }
    }
    Ok(out)
}

/// `diag(e^{jβ′_r}) · Ĥ · diag(e^{jβ′_t}, 1)`.
pub fn compose_equivalent_channel(beta_interp_col: &[f64], h_hat: &CMat) -> Result<CMat> {
    rotate(h_hat, beta_interp_col, 1.0)
}
