//! Cramér-Rao bounds for one-shot phase estimation from the angles of the
//! per-group LS observations, plus the element-wise Wiener bound.
//!
//! All indices are 0-based here: receive `k`, transmit `l`, `l2`, pilot
//! column `m`, parameter `q` (`q < n_r` are receive rows). The observation
//! vector is ordered `k`-major (`n_t · k + l`), unlike the WLLS angle stack.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::config::{pilot_block, PilotBlock};
use crate::error::{Error, Result};
use crate::{CMat, RMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CrlbInput", into = "CrlbInput")]
pub struct CrlbProblem {
    pub h: CMat,
    pub pilot: PilotBlock,
    /// Transmit phases at the reference symbol.
    pub psi_ref: Vec<f64>,
    pub sigma_n_sq: f64,
    pub sigma_dphi_sq: f64,
    pub sigma_dpsi_sq: f64,
    /// Reference symbol within the pilot group, 1-based (`⌈n_t / 2⌉`).
    pub m_i: usize,
}

/// JSON form of a problem; the pilot block and reference index are implied.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrlbInput {
    #[serde(with = "crate::matjson::complex")]
    pub h: CMat,
    pub psi_ref: Vec<f64>,
    pub sigma_n_sq: f64,
    pub sigma_dphi_sq: f64,
    pub sigma_dpsi_sq: f64,
}

impl From<CrlbInput> for CrlbProblem {
    fn from(i: CrlbInput) -> Self {
        CrlbProblem::new(i.h, i.psi_ref, i.sigma_n_sq, i.sigma_dphi_sq, i.sigma_dpsi_sq)
    }
}

impl From<CrlbProblem> for CrlbInput {
    fn from(p: CrlbProblem) -> Self {
        CrlbInput {
            h: p.h,
            psi_ref: p.psi_ref,
            sigma_n_sq: p.sigma_n_sq,
            sigma_dphi_sq: p.sigma_dphi_sq,
            sigma_dpsi_sq: p.sigma_dpsi_sq,
        }
    }
}

impl CrlbProblem {
    pub fn new(h: CMat, psi_ref: Vec<f64>, sigma_n_sq: f64, sigma_dphi_sq: f64, sigma_dpsi_sq: f64) -> Self {
        let n_t = h.ncols();
        CrlbProblem {
            h,
            pilot: pilot_block(n_t),
            psi_ref,
            sigma_n_sq,
            sigma_dphi_sq,
            sigma_dpsi_sq,
            m_i: n_t.div_ceil(2),
        }
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.n_r() + self.n_t() - 1
    }

    fn check(&self) -> Result<()> {
        if self.psi_ref.len() != self.n_t() || self.pilot.n_t() != self.n_t() {
            return Err(Error::ShapeMismatch(format!(
                "psi_ref has {} entries, pilot is {}, n_t = {}",
                self.psi_ref.len(),
                self.pilot.n_t(),
                self.n_t()
            )));
        }
        for k in 0..self.n_r() {
            for l in 0..self.n_t() {
                if self.h[(k, l)].norm() == 0.0 {
                    return Err(Error::ZeroAmplitude { k, l });
                }
            }
        }
        Ok(())
    }
}

/// `h_{k,l2} / (n_t h_{k,l}) · e^{j(ψ_l2 − ψ_l)} · s_{l2,m} s*_{l,m}`.
pub fn eta(p: &CrlbProblem, k: usize, l: usize, l2: usize, m: usize) -> C64 {
    let n_t = p.n_t() as f64;
    p.h[(k, l2)] / (p.h[(k, l)] * n_t)
        * C64::from_polar(1.0, p.psi_ref[l2] - p.psi_ref[l])
        * p.pilot.s[(l2, m)]
        * p.pilot.s[(l, m)].conj()
}

pub fn xi(p: &CrlbProblem, k: usize, l: usize, l2: usize, m: usize) -> Result<f64> {
    if p.h[(k, l)].norm() == 0.0 {
        return Err(Error::ZeroAmplitude { k, l });
    }
    Ok(eta(p, k, l, l2, m).re)
}

/// `∂ξ/∂β_q`: only transmit parameters enter, through `ψ_l2 − ψ_l`.
pub fn xi_derivative(p: &CrlbProblem, k: usize, l: usize, l2: usize, m: usize, q: usize) -> Result<f64> {
    if p.h[(k, l)].norm() == 0.0 {
        return Err(Error::ZeroAmplitude { k, l });
    }
    let n_r = p.n_r();
    if l == l2 || q < n_r {
        return Ok(0.0);
    }
    let t = q - n_r;
    let im = eta(p, k, l, l2, m).im;
    Ok(if l2 == t {
        -im
    } else if l == t {
        im
    } else {
        0.0
    })
}

/// `∂μ_υ/∂β`, rows `k`-major.
pub fn mean_jacobian(n_r: usize, n_t: usize) -> RMat {
    let mut j = RMat::zeros(n_r * n_t, n_r + n_t - 1);
    for k in 0..n_r {
        for l in 0..n_t {
            j[(k * n_t + l, k)] = 1.0;
            if l + 1 < n_t {
                j[(k * n_t + l, n_r + l)] = 1.0;
            }
        }
    }
    j
}

/// Partial sums of a per-symbol coefficient table over the symbols before
/// (`m < m′`) and after (`m ≥ m′`) each innovation index `m′`.
struct Accumulated {
    n_t: usize,
    /// `[k][l][l2][m′]`, entries only for innovations that reach the reference.
    before: Vec<f64>,
    after: Vec<f64>,
}

impl Accumulated {
    fn new(p: &CrlbProblem, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let (n_r, n_t, m_i) = (p.n_r(), p.n_t(), p.m_i);
        let size = n_r * n_t * n_t * n_t;
        let mut before = vec![0.0; size];
        let mut after = vec![0.0; size];
        for k in 0..n_r {
            for l in 0..n_t {
                for l2 in 0..n_t {
                    let base = ((k * n_t + l) * n_t + l2) * n_t;
                    // 1-based innovation index m′ stored at slot m′ − 1.
                    for mp in 2..=m_i {
                        before[base + mp - 1] = (0..mp - 1).map(|m| f(k, l, l2, m)).sum();
                    }
                    for mp in m_i + 1..=n_t {
                        after[base + mp - 1] = (mp - 1..n_t).map(|m| f(k, l, l2, m)).sum();
                    }
                }
            }
        }
        Accumulated { n_t, before, after }
    }

    fn get(&self, table: &[f64], k: usize, l: usize, l2: usize, mp: usize) -> f64 {
        table[((k * self.n_t + l) * self.n_t + l2) * self.n_t + mp]
    }
}

/// Phase-innovation part of the covariance with the two factors taken from
/// `a` and `b` (equal tables give the covariance, mixed give derivatives).
fn phase_terms(p: &CrlbProblem, a: &Accumulated, b: &Accumulated) -> RMat {
    let (n_r, n_t) = (p.n_r(), p.n_t());
    let n = n_r * n_t;
    let mut out = RMat::zeros(n, n);
    for k1 in 0..n_r {
        for l1 in 0..n_t {
            for k2 in 0..n_r {
                for l2 in 0..n_t {
                    let mut v = 0.0;
                    for (ta, tb) in [(&a.before, &b.before), (&a.after, &b.after)] {
                        for mp in 0..n_t {
                            let mut sa = 0.0;
                            let mut sb = 0.0;
                            let mut cross = 0.0;
                            for lp in 0..n_t {
                                let x = a.get(ta, k1, l1, lp, mp);
                                let y = b.get(tb, k2, l2, lp, mp);
                                sa += x;
                                sb += y;
                                cross += x * y;
                            }
                            if k1 == k2 {
                                v += p.sigma_dphi_sq * sa * sb;
                            }
                            v += p.sigma_dpsi_sq * cross;
                        }
                    }
                    out[(k1 * n_t + l1, k2 * n_t + l2)] = v;
                }
            }
        }
    }
    out
}

fn awgn_diagonal(p: &CrlbProblem) -> RMat {
    let (n_r, n_t) = (p.n_r(), p.n_t());
    let mut d = RMat::zeros(n_r * n_t, n_r * n_t);
    for k in 0..n_r {
        for l in 0..n_t {
            d[(k * n_t + l, k * n_t + l)] = p.sigma_n_sq / (2.0 * n_t as f64 * p.h[(k, l)].norm_sqr());
        }
    }
    d
}

fn xi_table(p: &CrlbProblem) -> Accumulated {
    Accumulated::new(p, |k, l, l2, m| eta(p, k, l, l2, m).re)
}

/// `Σ_υ`: AWGN diagonal plus receive and transmit innovation terms.
pub fn observation_covariance(p: &CrlbProblem) -> Result<RMat> {
    p.check()?;
    let x = xi_table(p);
    Ok(awgn_diagonal(p) + phase_terms(p, &x, &x))
}

/// `∂Σ_υ/∂β_q` by the product rule on each accumulated factor.
pub fn covariance_jacobian(p: &CrlbProblem, q: usize) -> Result<RMat> {
    p.check()?;
    if q >= p.n_params() {
        return Err(Error::ShapeMismatch(format!("parameter {q} of {}", p.n_params())));
    }
    let x = xi_table(p);
    let d = Accumulated::new(p, |k, l, l2, m| xi_derivative(p, k, l, l2, m, q).unwrap_or(0.0));
    Ok(phase_terms(p, &d, &x) + phase_terms(p, &x, &d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    pub sigma_upsilon: RMat,
    pub fim: RMat,
    pub crlb: Vec<f64>,
}

fn spd_inverse(m: &RMat, err: Error) -> Result<RMat> {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().map(|c| c.inverse()).ok_or(err)
}

fn crlb_from_fim(fim: &RMat) -> Result<Vec<f64>> {
    let inv = spd_inverse(fim, Error::SingularFim)?;
    Ok(inv.diagonal().iter().copied().collect())
}

/// Full FIM: mean term plus the covariance trace term.
pub fn fisher_information(p: &CrlbProblem) -> Result<FisherResult> {
    let sigma = observation_covariance(p)?;
    let s_inv = spd_inverse(&sigma, Error::SingularCovariance)?;
    let j = mean_jacobian(p.n_r(), p.n_t());
    let mut fim = j.transpose() * &s_inv * &j;
    let n_q = p.n_params();
    let prods: Vec<RMat> = (0..n_q)
        .map(|q| covariance_jacobian(p, q).map(|d| &s_inv * d))
        .collect::<Result<_>>()?;
    for a in 0..n_q {
        for b in a..n_q {
            let t = 0.5 * (&prods[a] * &prods[b]).trace();
            fim[(a, b)] += t;
            if a != b {
                fim[(b, a)] += t;
            }
        }
    }
    let crlb = crlb_from_fim(&fim)?;
    Ok(FisherResult { sigma_upsilon: sigma, fim, crlb })
}

/// Bound with every phase-noise term dropped.
pub fn crlb_low_snr(p: &CrlbProblem) -> Result<Vec<f64>> {
    p.check()?;
    let s_inv = spd_inverse(&awgn_diagonal(p), Error::SingularCovariance)?;
    let j = mean_jacobian(p.n_r(), p.n_t());
    crlb_from_fim(&(j.transpose() * s_inv * &j))
}

/// Floor covariance: no AWGN and only the `l2 = l` coefficients `1 / n_t`.
pub fn high_snr_covariance(p: &CrlbProblem) -> RMat {
    let (n_r, n_t, m_i) = (p.n_r(), p.n_t(), p.m_i);
    let nt = n_t as f64;
    let c2: f64 = (2..=m_i).map(|mp| ((mp - 1) as f64 / nt).powi(2)).sum::<f64>()
        + (m_i + 1..=n_t).map(|mp| ((n_t - mp + 1) as f64 / nt).powi(2)).sum::<f64>();
    let n = n_r * n_t;
    DMatrix::from_fn(n, n, |r, c| {
        let (k1, l1, k2, l2) = (r / n_t, r % n_t, c / n_t, c % n_t);
        let mut v = 0.0;
        if k1 == k2 {
            v += p.sigma_dphi_sq * c2;
        }
        if l1 == l2 {
            v += p.sigma_dpsi_sq * c2;
        }
        v
    })
}

/// Phase-noise floor of the bound, independent of `σ_n²`.
///
/// The floor covariance can be singular (for 2×2 it has a null direction).
/// Observations along such directions carry no noise; when the mean Jacobian
/// has no component there they carry no information either, and the bound
/// is taken on the range of `Σ`.
pub fn crlb_high_snr(p: &CrlbProblem) -> Result<Vec<f64>> {
    p.check()?;
    let sigma = high_snr_covariance(p);
    let j = mean_jacobian(p.n_r(), p.n_t());
    let eig = SymmetricEigen::new(sigma);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let tol = 1e-12 * max;
    let n = j.nrows();
    let mut pinv = RMat::zeros(n, n);
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        if e > tol {
            pinv += (v / e) * v.transpose();
        } else if (v.transpose() * &j).amax() > 1e-8 * j.amax() {
            return Err(Error::SingularCovariance);
        }
    }
    crlb_from_fim(&(j.transpose() * pinv * &j))
}

/// Closed-form MSE of the infinite two-sided Wiener smoother for a walk with
/// per-step variance `sigma_pw_sq` seen through one-shot noise `sigma_beta_sq`.
pub fn wiener_mse_bound(sigma_beta_sq: f64, sigma_pw_sq: f64) -> Result<f64> {
    for v in [sigma_beta_sq, sigma_pw_sq] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveVariance(v));
        }
    }
    Ok((4.0 / (sigma_pw_sq * sigma_beta_sq) + 1.0 / (sigma_beta_sq * sigma_beta_sq)).powf(-0.5))
}

/// Element-wise Wiener bound for every parameter.
pub fn wiener_bound_vector(crlb: &[f64], process_var: &[f64]) -> Result<Vec<f64>> {
    if crlb.len() != process_var.len() {
        return Err(Error::LengthMismatch { left: crlb.len(), right: process_var.len() });
    }
    crlb.iter().zip(process_var).map(|(&b, &p)| wiener_mse_bound(b, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airsim::sample_channel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n_r: usize, n_t: usize, seed: u64, sigma_n_sq: f64, pn: f64) -> CrlbProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(n_r, n_t, &mut rng);
        let psi = (0..n_t).map(|_| rng.random_range(-3.0..3.0)).collect();
        CrlbProblem::new(h, psi, sigma_n_sq, pn, pn)
    }

    fn scalar(sigma_n_sq: f64) -> CrlbProblem {
        CrlbProblem::new(CMat::from_element(1, 1, C64::new(1.0, 0.0)), vec![0.0], sigma_n_sq, 0.0, 0.0)
    }

    #[test]
    fn xi_diagonal_and_scalar() {
        let p = random_problem(3, 3, 1, 0.1, 1e-4);
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    assert!((xi(&p, k, l, l, m).unwrap() - 1.0 / 3.0).abs() < 1e-14);
                    for q in 0..p.n_params() {
                        assert_eq!(xi_derivative(&p, k, l, l, m, q).unwrap(), 0.0);
                    }
                }
            }
        }
        let s = random_problem(1, 1, 2, 0.1, 1e-4);
        assert!((xi(&s, 0, 0, 0, 0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn receive_parameters_do_not_enter_xi() {
        let p = random_problem(2, 2, 3, 0.1, 1e-4);
        for q in 0..2 {
            assert_eq!(xi_derivative(&p, 0, 0, 1, 0, q).unwrap(), 0.0);
            assert!(covariance_jacobian(&p, q).unwrap().amax() == 0.0);
        }
    }

    #[test]
    fn mean_jacobian_columns() {
        let j = mean_jacobian(2, 2);
        assert_eq!(j.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(j.column(2).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0, 0.0]);
        let j = mean_jacobian(4, 3);
        for q in 0..6 {
            let s: f64 = j.column(q).sum();
            assert_eq!(s, if q < 4 { 3.0 } else { 4.0 });
        }
    }

    #[test]
    fn jacobian_matches_c_matrix_up_to_row_order() {
        let (n_r, n_t) = (3, 2);
        let j = mean_jacobian(n_r, n_t);
        let c = crate::estimator::build_c_matrix(n_r, n_t);
        for k in 0..n_r {
            for l in 0..n_t {
                assert_eq!(j.row(k * n_t + l), c.row(l * n_r + k));
            }
        }
    }

    #[test]
    fn covariance_without_phase_noise_is_diagonal() {
        let p = random_problem(2, 3, 4, 0.2, 0.0);
        let s = observation_covariance(&p).unwrap();
        for k in 0..2 {
            for l in 0..3 {
                let r = k * 3 + l;
                assert!((s[(r, r)] - 0.2 / (6.0 * p.h[(k, l)].norm_sqr())).abs() < 1e-14);
            }
        }
        assert!((s.clone() - RMat::from_diagonal(&s.diagonal())).amax() == 0.0);
        for q in 0..p.n_params() {
            assert_eq!(covariance_jacobian(&p, q).unwrap().amax(), 0.0);
        }
    }

    #[test]
    fn scalar_bounds() {
        let p = scalar(0.3);
        let s = observation_covariance(&p).unwrap();
        assert!((s[(0, 0)] - 0.15).abs() < 1e-15);
        let f = fisher_information(&p).unwrap();
        assert!((f.fim[(0, 0)] - 2.0 / 0.3).abs() < 1e-12);
        assert!((f.crlb[0] - 0.15).abs() < 1e-15);
        assert!((crlb_low_snr(&p).unwrap()[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_rejected() {
        let mut p = random_problem(2, 2, 5, 0.1, 1e-4);
        p.h[(1, 0)] = C64::new(0.0, 0.0);
        assert!(matches!(observation_covariance(&p), Err(Error::ZeroAmplitude { k: 1, l: 0 })));
        assert!(matches!(xi(&p, 1, 0, 1, 0), Err(Error::ZeroAmplitude { .. })));
    }

    #[test]
    fn low_snr_scales_with_noise() {
        let p = random_problem(2, 2, 6, 0.1, 1e-4);
        let q = CrlbProblem { sigma_n_sq: 0.7, ..p.clone() };
        for (a, b) in crlb_low_snr(&p).unwrap().iter().zip(crlb_low_snr(&q).unwrap()) {
            assert!((b / a - 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn high_snr_floor() {
        let p = random_problem(2, 2, 7, 0.1, 1e-4);
        assert!(matches!(
            crlb_high_snr(&CrlbProblem { sigma_dphi_sq: 0.0, sigma_dpsi_sq: 0.0, ..p.clone() }),
            Err(Error::SingularCovariance)
        ));
        let a = crlb_high_snr(&p).unwrap();
        let b = crlb_high_snr(&CrlbProblem { sigma_n_sq: 5.0, ..p.clone() }).unwrap();
        assert_eq!(a, b);
        let c = crlb_high_snr(&CrlbProblem { sigma_dphi_sq: 1e-3, sigma_dpsi_sq: 1e-3, ..p.clone() }).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((y / x / 10.0 - 1.0).abs() < 1e-6);
        }
        let single = random_problem(3, 1, 8, 0.1, 1e-4);
        assert!(matches!(crlb_high_snr(&single), Err(Error::SingularCovariance)));
    }

    #[test]
    fn wiener_bound_values() {
        assert!((wiener_mse_bound(1e-3, 4e-3).unwrap() - 7.0711e-4).abs() < 1e-8);
        assert!((wiener_mse_bound(1e-3, 1e12).unwrap() / 1e-3 - 1.0).abs() < 1e-6);
        assert!(matches!(wiener_mse_bound(0.0, 1.0), Err(Error::NonPositiveVariance(_))));
        assert!(matches!(wiener_mse_bound(1.0, -1.0), Err(Error::NonPositiveVariance(_))));
    }

    #[test]
    fn problem_json_round_trip() {
        let p = random_problem(2, 2, 9, 0.1, 1e-4);
        let s = serde_json::to_string(&p).unwrap();
        let back: CrlbProblem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn covariance_psd_and_bounds_ordered(seed in 0u64..10_000, n_r in 1usize..5, n_t in 1usize..5, snr in -10.0f64..40.0) {
            let n_r = n_r.max(n_t);
            let p = random_problem(n_r, n_t, seed, 10f64.powf(-snr / 10.0), 1e-3);
            let s = observation_covariance(&p).unwrap();
            prop_assert!((&s - s.transpose()).amax() < 1e-14);
            let min = SymmetricEigen::new(s.clone()).eigenvalues.min();
            prop_assert!(min >= -1e-10 * s.trace());
            let f = fisher_information(&p).unwrap();
            prop_assert!((&f.fim - f.fim.transpose()).amax() < 1e-10 * f.fim.amax());
            prop_assert!(SymmetricEigen::new(f.fim.clone()).eigenvalues.min() > 0.0);
            let inv = f.fim.clone().try_inverse().unwrap();
            prop_assert!((&f.fim * inv - RMat::identity(p.n_params(), p.n_params())).amax() < 1e-8);
            let low = crlb_low_snr(&p).unwrap();
            for (full, lo) in f.crlb.iter().zip(&low) {
                prop_assert!(*full >= lo * (1.0 - 1e-9));
            }
        }

        #[test]
        fn wiener_bound_monotone(b in -6.0f64..-1.0, w in -6.0f64..-1.0) {
            let (b, w) = (10f64.powf(b), 10f64.powf(w));
            let v = wiener_mse_bound(b, w).unwrap();
            prop_assert!(v <= b);
            prop_assert!(wiener_mse_bound(b * 1.1, w).unwrap() > v);
            prop_assert!(wiener_mse_bound(b, w * 1.1).unwrap() > v);
        }
    }
}
