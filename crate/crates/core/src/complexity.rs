//! Per-symbol operation counts of the estimator.
//!
//! Counts are abstract complex multiplications (`*_mul`) and additions
//! (`*_add`) per transmitted symbol; `total = c_m · Σ mul + Σ add`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBreakdown {
    pub amp_mul: f64,
    pub amp_add: f64,
    pub wlls_mul: f64,
    pub wlls_add: f64,
    pub wiener_mul: f64,
    pub wiener_add: f64,
    pub hhat_mul: f64,
    pub hhat_add: f64,
    pub total: f64,
}

pub fn complexity_breakdown(
    n_r: usize,
    n_t: usize,
    l_c: usize,
    l_d: usize,
    l_f: usize,
    l_w: usize,
    c_m: f64,
) -> Result<ComplexityBreakdown> {
    if n_r == 0 || n_t == 0 || l_f == 0 || l_c == 0 {
        return Err(Error::InvalidConfig("complexity parameters must be positive".into()));
    }
    if l_c != n_t + l_d {
        return Err(Error::InvalidGeometry { l_c, n_t, l_d });
    }
    let (nr, nt, lc, ld, lf, lw) = (n_r as f64, n_t as f64, l_c as f64, l_d as f64, l_f as f64, l_w as f64);
    let q = nr + nt - 1.0;
    let taps = 2.0 * lw + 1.0;
    let nrt = nr * nt;

    let amp_mul = nr * nt * nt / lc + nrt / lc;
    let amp_add = nrt * (nt - 1.0) / lc + nrt / lc + nrt / lf;
    let wlls_mul = nrt / lc + q * nrt / lf + nrt * q * q / lf + nrt * q / lc;
    let wlls_add = nrt * q * q / lf + (nrt - 1.0) * q / lc;
    let wiener_mul = q * nrt / lf + taps * q / lc + (taps.powi(3) + taps) / lf + 2.0 * lw / lf;
    let wiener_add = q * (nrt - 1.0) / lf + 2.0 * lw * q / lc + (taps * 2.0 * lw + 2.0 * lw) / lf + 2.0 * lw / lf;
    let hhat_mul = (2.0 * nrt - nr) / lc + q * ld / lc + (2.0 * nrt - nr) * ld / lc;
    let hhat_add = nrt / lc + q * (1.0 + 2.0 * ld) / lc;

    let total = c_m * (amp_mul + wlls_mul + wiener_mul + hhat_mul) + amp_add + wlls_add + wiener_add + hhat_add;
    Ok(ComplexityBreakdown { amp_mul, amp_add, wlls_mul, wlls_add, wiener_mul, wiener_add, hhat_mul, hhat_add, total })
}

/// Breakdown at 10 % pilot rate (`l_c = 10 n_t`, `l_d = 9 n_t`).
pub fn complexity_at_tenth_pilot_rate(n: usize, l_f: usize, l_w: usize, c_m: f64) -> Result<ComplexityBreakdown> {
    complexity_breakdown(n, n, 10 * n, 9 * n, l_f, l_w, c_m)
}

/// Published per-symbol totals of competing trackers for 2×2, 4×4 and 8×8
/// links (`C_M = 1`), kept for side-by-side reports.
pub const LITERATURE_ROWS: [(&str, [f64; 3]); 6] = [
    ("EKF (single-stage)", [3.6e2, 3.7e3, 6.8e4]),
    ("EKF-EKS", [4.8e2, 5.1e3, 8.1e4]),
    ("EKF (joint channel-phase)", [1.2e3, 5.6e5, 2.8e8]),
    ("SPA-MAP", [5.9e3, 1.0e5, 1.1e7]),
    ("Online MAP", [5.1e6, 7.8e7, 1.1e9]),
    ("Offline MAP", [1.0e8, 1.5e9, 2.2e10]),
];

/// Writes the comparison table as CSV: one row per algorithm, one column
/// per antenna configuration.
pub fn write_table_csv<W: Write>(out: W, l_f: usize, c_m: f64, tap_half_widths: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "2x2", "4x4", "8x8"])?;
    for &l_w in tap_half_widths {
        let mut row = vec![format!("proposed (L_W={l_w})")];
        for n in [2, 4, 8] {
            row.push(format!("{:.6}", complexity_at_tenth_pilot_rate(n, l_f, l_w, c_m)?.total));
        }
        w.write_record(&row)?;
    }
    for (name, vals) in LITERATURE_ROWS {
        let mut row = vec![name.to_string()];
        row.extend(vals.iter().map(|v| format!("{v:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
