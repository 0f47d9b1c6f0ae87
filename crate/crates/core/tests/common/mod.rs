//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use pilotphase::airsim::sample_channel;
use pilotphase::crlb::{xi, CrlbProblem};
use pilotphase::modem::Constellation;
use pilotphase::{CMat, RMat, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Two-sided IIR Wiener smoother MSE by direct summation of its tap series
/// over groups `1 - half ..= 1 + half`.
pub fn wiener_series_mse(sigma_beta_sq: f64, sigma_pw_sq: f64, half: i64) -> f64 {
    let tau = sigma_pw_sq / sigma_beta_sq;
    let c = 1.0 + tau / 2.0;
    let kappa = c - (c * c - 1.0).sqrt();
    let scale = kappa * tau / (1.0 - kappa * kappa);
    let lo = 1 - half;
    let hi = 1 + half;
    let w = |i: i64| scale * kappa.powi((i - 1).unsigned_abs() as i32);
    let mut noise = 0.0;
    for i in lo..=hi {
        noise += w(i).powi(2);
    }
    // Walk increments after the reference group weigh the taps beyond them.
    let mut walk = 0.0;
    let mut tail = 0.0;
    for i in (2..=hi).rev() {
        tail += w(i);
        walk += tail * tail;
    }
    let mut head = 0.0;
    for i in lo..=0 {
        head += w(i);
        walk += head * head;
    }
    noise * sigma_beta_sq + walk * sigma_pw_sq
}

/// Random problem with CN(0, 1) channel and uniform transmit phases.
pub fn random_problem(n_r: usize, n_t: usize, sigma_n_sq: f64, sigma_d_sq: f64, rng: &mut ChaCha8Rng) -> CrlbProblem {
    let h = sample_channel(n_r, n_t, rng);
    let psi = (0..n_t).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    CrlbProblem::new(h, psi, sigma_n_sq, sigma_d_sq, sigma_d_sq)
}

/// One draw of the zero-mean part of the angular observations, `k`-major:
/// AWGN over `|h|` plus the pilot-group phase increments weighted by `ξ`
/// (increments before the reference symbol enter negatively, after it
/// positively).
pub fn angular_observation_draw(p: &CrlbProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n_r, n_t, m_i) = (p.n_r(), p.n_t(), p.m_i);
    let awgn = Normal::new(0.0, (p.sigma_n_sq / (2.0 * n_t as f64)).sqrt()).unwrap();
    let dphi = Normal::new(0.0, p.sigma_dphi_sq.sqrt()).unwrap();
    let dpsi = Normal::new(0.0, p.sigma_dpsi_sq.sqrt()).unwrap();
    // Increments indexed by 1-based symbol m' in 2..=n_t.
    let dp: Vec<Vec<f64>> = (0..n_r).map(|_| (0..=n_t).map(|_| dphi.sample(rng)).collect()).collect();
    let ds: Vec<Vec<f64>> = (0..n_t).map(|_| (0..=n_t).map(|_| dpsi.sample(rng)).collect()).collect();
    let mut out = Vec::with_capacity(n_r * n_t);
    for k in 0..n_r {
        for l in 0..n_t {
            let mut o = awgn.sample(rng) / p.h[(k, l)].norm();
            for l2 in 0..n_t {
                for m in 1..m_i {
                    let x = xi(p, k, l, l2, m - 1).unwrap();
                    for mp in (m + 1)..=m_i {
                        o -= x * (dp[k][mp] + ds[l2][mp]);
                    }
                }
                for m in (m_i + 1)..=n_t {
                    let x = xi(p, k, l, l2, m - 1).unwrap();
                    for mp in (m_i + 1)..=m {
                        o += x * (dp[k][mp] + ds[l2][mp]);
                    }
                }
            }
            out.push(o);
        }
    }
    out
}

/// Sample covariance and the standard error of each entry.
pub fn sample_covariance(draws: &[Vec<f64>]) -> (RMat, RMat) {
    let n = draws.len() as f64;
    let d = draws[0].len();
    let mut mean = vec![0.0; d];
    for x in draws {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut cov = RMat::zeros(d, d);
    let mut fourth = RMat::zeros(d, d);
    for x in draws {
        for i in 0..d {
            for j in 0..d {
                let p = (x[i] - mean[i]) * (x[j] - mean[j]);
                cov[(i, j)] += p;
                fourth[(i, j)] += p * p;
            }
        }
    }
    cov /= n - 1.0;
    let se = RMat::from_fn(d, d, |i, j| ((fourth[(i, j)] / n - cov[(i, j)].powi(2)) / n).max(0.0).sqrt());
    (cov, se)
}

/// Exhaustive search by recursion over antennas, independent of the
/// library's odometer loop; ties keep the first tuple visited.
pub fn brute_force_mld(y: &DVector<C64>, h: &CMat, c: &Constellation) -> (Vec<usize>, f64) {
    fn rec(
        l: usize,
        idx: &mut Vec<usize>,
        y: &DVector<C64>,
        h: &CMat,
        c: &Constellation,
        best: &mut (Vec<usize>, f64),
    ) {
        if l == h.ncols() {
            let s = DVector::from_iterator(idx.len(), idx.iter().map(|&i| c.points[i]));
            let d = (y - h * s).norm_squared();
            if d < best.1 {
                *best = (idx.clone(), d);
            }
            return;
        }
        for i in 0..c.len() {
            idx.push(i);
            rec(l + 1, idx, y, h, c, best);
            idx.pop();
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    rec(0, &mut Vec::new(), y, h, c, &mut best);
    best
}

pub fn cn_vector(n: usize, var: f64, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let g = Normal::new(0.0, (var / 2.0).sqrt()).unwrap();
    DVector::from_fn(n, |_, _| C64::new(g.sample(rng), g.sample(rng)))
}
