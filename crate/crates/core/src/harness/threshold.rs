//! SNR needed to reach a target BER.

use crate::error::{Error, Result};

/// Hard-decision FEC threshold.
pub const HD_FEC_BER: f64 = 4.7e-3;

/// First crossing of `target` along increasing SNR, interpolated linearly in
/// `log10(BER)`. `None` if the curve never reaches it.
pub fn snr_at_ber(snr_db: &[f64], ber: &[f64], target: f64) -> Result<Option<f64>> {
    if snr_db.len() != ber.len() {
        return Err(Error::LengthMismatch { left: snr_db.len(), right: ber.len() });
    }
    if snr_db.is_empty() {
        return Err(Error::EmptyInput("ber curve"));
    }
    if !(target > 0.0) {
        return Err(Error::InvalidConfig(format!("target BER {target} must be positive")));
    }
    let mut pts: Vec<(f64, f64)> = snr_db.iter().copied().zip(ber.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts[0].1 <= target {
        return Ok(Some(pts[0].0));
    }
    let lt = target.log10();
    for w in pts.windows(2) {
        let ((x0, b0), (x1, b1)) = (w[0], w[1]);
        if b1 <= target {
            if b1 <= 0.0 {
                return Ok(Some(x1));
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            return Ok(Some(x0 + (lt - l0) / (l1 - l0) * (x1 - x0)));
        }
    }
    Ok(None)
}

/// `snr(curve) − snr(reference)` at `target`.
pub fn snr_penalty(snr_db: &[f64], ber: &[f64], reference: &[f64], target: f64) -> Result<Option<f64>> {
    Ok(match (snr_at_ber(snr_db, ber, target)?, snr_at_ber(snr_db, reference, target)?) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    })
}
