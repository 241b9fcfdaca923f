//! LMMSE estimation of the cascaded channels and the closed-form /
//! empirical MSE.
//!
//! Two algebraically equivalent estimator routes ship: the P x P
//! matrix-inverse form and the scalar form obtained from the push-through
//! identity. The scalar route is the production path; the matrix route
//! stays alive so the reduction is checked by tests rather than assumed.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{draw_link_cascade, theoretical_moments, SystemParams};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_inner, solve_hpd, CMat, CVec};
use crate::rng::{derive_stream, Seed};
use crate::signal::{transmit, LinkId, PilotBlock};

/// One LMMSE estimate of a cascaded channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmmseEstimate {
    pub link: LinkId,
    pub k: usize,
    pub j_hat: Complex64,
}

/// One row of an MSE sweep dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsePoint {
    /// Pilot energy or pilot length, depending on the sweep.
    pub sweep_value: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub crlb_bayes: f64,
    pub crlb_classical: f64,
}

fn check_noise(sigma2: f64) -> Result<()> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "noise variance must be a finite positive real, got {sigma2}"
        )));
    }
    Ok(())
}

fn check_var_j(var_j: f64) -> Result<()> {
    if !var_j.is_finite() || var_j <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "cascade variance must be a finite positive real, got {var_j}"
        )));
    }
    Ok(())
}

/// LMMSE estimate through the P x P covariance system:
/// `(var_j / phi_eff) x^H (var_j x x^H + sigma2 I)^{-1} y`,
/// realized with a Cholesky solve instead of an explicit inverse.
pub fn lmmse_matrix_form(
    x: &CVec,
    y: &CVec,
    phi_eff: Complex64,
    var_j: f64,
    sigma2: f64,
) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "lmmse_matrix_form",
            expected: x.len(),
            got: y.len(),
        });
    }
    check_noise(sigma2)?;
    check_var_j(var_j)?;
    let p = x.len();
    let r_yy = CMat::from_fn(p, p, |r, c| {
        let mut v = x[r] * x[c].conj() * var_j;
        if r == c {
            v += sigma2;
        }
        v
    })?;
    let z = solve_hpd(&r_yy, y)?;
    Ok(hermitian_inner(x, &z)? * (var_j / phi_eff))
}

/// LMMSE estimate through the scalar reduction:
/// `(var_j / phi_eff) (x^H y) / (var_j x^H x + sigma2)`.
pub fn lmmse_scalar_form(
    x: &CVec,
    y: &CVec,
    phi_eff: Complex64,
    var_j: f64,
    sigma2: f64,
) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "lmmse_scalar_form",
            expected: x.len(),
            got: y.len(),
        });
    }
    check_noise(sigma2)?;
    check_var_j(var_j)?;
    let num = hermitian_inner(x, y)?;
    Ok(num * (var_j / phi_eff) / (var_j * x.energy() + sigma2))
}

/// Closed-form estimation MSE: `1 / (x^H x / sigma2 + 1 / var_j)`.
///
/// With zero pilot energy there is no data term and the MSE is exactly the
/// prior variance.
pub fn closed_form_mse(x: &CVec, var_j: f64, sigma2: f64) -> Result<f64> {
    check_noise(sigma2)?;
    check_var_j(var_j)?;
    let energy = x.energy();
    if energy == 0.0 {
        return Ok(var_j);
    }
    Ok(1.0 / (energy / sigma2 + 1.0 / var_j))
}

// Label words for the streams empirical_mse derives from its seed.
const LBL_PILOT: u64 = 101;
const LBL_TRIAL: u64 = 102;
const LBL_NOISE: u64 = 103;

/// The pilot vector `empirical_mse` uses for `(link, k)`: one QPSK draw per
/// experiment, held fixed across trials and across sweep points (sweeping
/// the energy rescales the same constellation points).
pub fn pilot_vector(params: &SystemParams, link: LinkId, k: usize, seed: Seed) -> Result<CVec> {
    let mut stream = derive_stream(seed, &[LBL_PILOT, link.index() as u64, k as u64]);
    Ok(PilotBlock::draw(params, link, k, &mut stream)?.x)
}

/// Monte Carlo MSE of the scalar-form LMMSE estimator over independent
/// channel and noise draws with fixed pilots.
///
/// Trials run in parallel over per-trial derived streams and are reduced in
/// trial order, so the result does not depend on the worker count.
pub fn empirical_mse(
    params: &SystemParams,
    link: LinkId,
    k: usize,
    trials: usize,
    seed: Seed,
) -> Result<f64> {
    params.validate()?;
    check_noise(params.sigma2_noise)?;
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be >= 1".into()));
    }
    let var_j = theoretical_moments(params).var(link);
    check_var_j(var_j)?;

    let mut pilot_stream = derive_stream(seed, &[LBL_PILOT, link.index() as u64, k as u64]);
    let block = PilotBlock::draw(params, link, k, &mut pilot_stream)?;

    let sq_errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ch_stream = derive_stream(seed, &[LBL_TRIAL, t as u64]);
            let j = draw_link_cascade(params, link, &ch_stream, k);
            let mut noise =
                derive_stream(seed, &[LBL_NOISE, link.index() as u64, t as u64, k as u64]);
            let rx = transmit(&block, j, &mut noise, params.sigma2_noise);
            let j_hat = lmmse_scalar_form(&block.x, &rx.y, block.phi_eff, var_j, params.sigma2_noise)
                .expect("validated inputs");
            (j - j_hat).norm_sqr()
        })
        .collect();

    Ok(sq_errors.iter().sum::<f64>() / trials as f64)
}

/// Scalar-form estimate for one received block, tagged with its link and
/// subcarrier.
pub fn estimate_block(
    block: &PilotBlock,
    y: &CVec,
    var_j: f64,
    sigma2: f64,
) -> Result<LmmseEstimate> {
    Ok(LmmseEstimate {
        link: block.link,
        k: block.k,
        j_hat: lmmse_scalar_form(&block.x, y, block.phi_eff, var_j, sigma2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_cscg_vector, sample_qpsk};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_observation_gives_zero_estimate() {
        let x = CVec::new(vec![c(1.0, 0.0); 4]).unwrap();
        let y = CVec::zeros(4).unwrap();
        let m = lmmse_matrix_form(&x, &y, c(1.0, 0.0), 1.0, 1.0).unwrap();
        let s = lmmse_scalar_form(&x, &y, c(1.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(m, c(0.0, 0.0));
        assert_eq!(s, c(0.0, 0.0));
    }

    #[test]
    fn noiseless_limit_recovers_channel() {
        let mut stream = derive_stream(Seed(1), &[0]);
        let x = sample_qpsk(&mut stream, 4, 1.0).unwrap();
        let j = c(0.8, -1.3);
        let phi = Complex64::from_polar(1.0, 0.4);
        let y = CVec::from_fn(4, |p| phi * x[p] * j).unwrap();
        let scalar = lmmse_scalar_form(&x, &y, phi, 4.0, 1e-12).unwrap();
        let matrix = lmmse_matrix_form(&x, &y, phi, 4.0, 1e-12).unwrap();
        assert!((scalar - j).norm() < 1e-6, "{scalar:?} vs {j:?}");
        assert!((matrix - j).norm() < 1e-6, "{matrix:?} vs {j:?}");
    }

    #[test]
    fn scalar_shrinkage_case() {
        let x = CVec::new(vec![c(1.0, 0.0)]).unwrap();
        let y = CVec::new(vec![c(1.0, 0.0)]).unwrap();
        let est = lmmse_scalar_form(&x, &y, c(1.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(est, c(0.5, 0.0));
    }

    #[test]
    fn large_prior_variance_approaches_zero_forcing() {
        let x = CVec::new(vec![c(2.0, 1.0)]).unwrap();
        let y = CVec::new(vec![c(-0.5, 3.0)]).unwrap();
        let phi = c(0.0, 1.0);
        let est = lmmse_scalar_form(&x, &y, phi, 1e12, 1.0).unwrap();
        let zf = y[0] / (phi * x[0]);
        assert!((est - zf).norm() < 1e-9 * zf.norm(), "{est:?} vs {zf:?}");
    }

    #[test]
    fn closed_form_direct_values() {
        // x^H x = 4, sigma2 = 1, var_j = 1: MSE = 1/5.
        let x = CVec::new(vec![c(1.0, 0.0); 4]).unwrap();
        assert_eq!(closed_form_mse(&x, 1.0, 1.0).unwrap(), 0.2);

        // zero pilot energy: MSE equals the prior variance exactly.
        let z = CVec::zeros(3).unwrap();
        assert_eq!(closed_form_mse(&z, 1260.0, 1.0).unwrap(), 1260.0);
    }

    #[test]
    fn closed_form_matches_long_form_oracle() {
        // Long form: R_JJ - R_JY R_YY^{-1} R_YJ, through the P x P route.
        let mut stream = derive_stream(Seed(2), &[0]);
        for _ in 0..20 {
            let x = sample_cscg_vector(&mut stream, 6, 1.0).unwrap();
            let var_j = 3.7;
            let sigma2 = 0.9;
            let p = x.len();
            let r_yy = CMat::from_fn(p, p, |r, q| {
                let mut v = x[r] * x[q].conj() * var_j;
                if r == q {
                    v += sigma2;
                }
                v
            })
            .unwrap();
            let z = solve_hpd(&r_yy, &x).unwrap();
            let long = var_j - (hermitian_inner(&x, &z).unwrap() * var_j * var_j).re;
            let short = closed_form_mse(&x, var_j, sigma2).unwrap();
            assert!(
                (long - short).abs() <= 1e-12 * short,
                "{long} vs {short}"
            );
        }
    }

    #[test]
    fn closed_form_monotone_and_bounded() {
        let var_j = 2.5;
        let sigma2 = 1.3;
        let mut prev = f64::INFINITY;
        for e in [0.0_f64, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let x = CVec::new(vec![c(e.sqrt(), 0.0)]).unwrap();
            let mse = closed_form_mse(&x, var_j, sigma2).unwrap();
            assert!(mse <= var_j);
            assert!(mse < prev || e == 0.0);
            prev = mse;
        }
    }

    #[test]
    fn empirical_mse_is_deterministic() {
        let params = SystemParams {
            n1: 8,
            n2: 4,
            ..SystemParams::default()
        };
        let a = empirical_mse(&params, LinkId::ViaIrs1, 0, 1, Seed(5)).unwrap();
        let b = empirical_mse(&params, LinkId::ViaIrs1, 0, 1, Seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_mse_tracks_closed_form_on_all_links() {
        let params = SystemParams::default(); // n1 = 60, n2 = 32, P = Q = R = 4
        let trials = 100_000;
        let seed = Seed(7);
        let moments = theoretical_moments(&params);
        for link in LinkId::ALL {
            let emp = empirical_mse(&params, link, 0, trials, seed).unwrap();
            let x = pilot_vector(&params, link, 0, seed).unwrap();
            let closed = closed_form_mse(&x, moments.var(link), params.sigma2_noise).unwrap();
            let ratio = emp / closed;
            assert!(
                (0.97..=1.03).contains(&ratio),
                "link {link}: empirical/closed = {ratio} outside [0.97, 1.03]"
            );
        }
    }

    #[test]
    fn estimator_orthogonality() {
        // E{(J - J_hat) conj(J_hat)} ~ 0 for the LMMSE estimate.
        let params = SystemParams::default();
        let trials = 100_000usize;
        let seed = Seed(11);
        let var_j = theoretical_moments(&params).var_j1;
        let mut pilot_stream =
            derive_stream(seed, &[LBL_PILOT, LinkId::ViaIrs1.index() as u64, 0]);
        let block = PilotBlock::draw(&params, LinkId::ViaIrs1, 0, &mut pilot_stream).unwrap();
        let mut acc = c(0.0, 0.0);
        let mut acc_sq = 0.0;
        for t in 0..trials {
            let ch = derive_stream(seed, &[LBL_TRIAL, t as u64]);
            let j = draw_link_cascade(&params, LinkId::ViaIrs1, &ch, 0);
            let mut noise = derive_stream(seed, &[LBL_NOISE, 1, t as u64, 0]);
            let rx = transmit(&block, j, &mut noise, params.sigma2_noise);
            let j_hat =
                lmmse_scalar_form(&block.x, &rx.y, block.phi_eff, var_j, params.sigma2_noise)
                    .unwrap();
            let term = (j - j_hat) * j_hat.conj();
            acc += term;
            acc_sq += term.norm_sqr();
        }
        let mean = acc / trials as f64;
        let std = (acc_sq / trials as f64 - mean.norm_sqr()).sqrt();
        assert!(
            mean.norm() < 3.0 * std / (trials as f64).sqrt(),
            "orthogonality residual {} vs 3 sigma {}",
            mean.norm(),
            3.0 * std / (trials as f64).sqrt()
        );
    }

    #[test]
    fn estimate_block_tags_link_and_subcarrier() {
        let params = SystemParams::default();
        let mut stream = derive_stream(Seed(3), &[0]);
        let block = PilotBlock::draw(&params, LinkId::ViaIrs2, 5, &mut stream).unwrap();
        let y = CVec::from_fn(block.x.len(), |p| block.phi_eff * block.x[p] * c(1.5, -0.5))
            .unwrap();
        let est = estimate_block(&block, &y, 100.0, 1.0).unwrap();
        assert_eq!(est.link, LinkId::ViaIrs2);
        assert_eq!(est.k, 5);
        assert_eq!(
            est.j_hat,
            lmmse_scalar_form(&block.x, &y, block.phi_eff, 100.0, 1.0).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = CVec::new(vec![c(1.0, 0.0)]).unwrap();
        let y = CVec::zeros(2).unwrap();
        assert!(lmmse_matrix_form(&x, &y, c(1.0, 0.0), 1.0, 1.0).is_err());
        let y1 = CVec::zeros(1).unwrap();
        assert!(lmmse_scalar_form(&x, &y1, c(1.0, 0.0), 1.0, 0.0).is_err());
        assert!(closed_form_mse(&x, 0.0, 1.0).is_err());
        let params = SystemParams::default();
        assert!(empirical_mse(&params, LinkId::ViaIrs1, 0, 0, Seed(0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// The two estimator routes agree to 1e-10 relative.
        #[test]
        fn matrix_and_scalar_forms_agree(
            p in 1usize..=16,
            var_j in 0.05f64..50.0,
            sigma2 in 0.05f64..10.0,
            seed in 0u64..1_000_000,
        ) {
            let mut s = derive_stream(Seed(seed), &[55]);
            let x = sample_qpsk(&mut s, p, 1.0).unwrap();
            let y = sample_cscg_vector(&mut s, p, var_j + sigma2).unwrap();
            let phi = Complex64::from_polar(1.0, (seed % 628) as f64 / 100.0);
            let m = lmmse_matrix_form(&x, &y, phi, var_j, sigma2).unwrap();
            let sc = lmmse_scalar_form(&x, &y, phi, var_j, sigma2).unwrap();
            let rel = (m - sc).norm() / sc.norm().max(1e-300);
            prop_assert!(rel <= 1e-10, "relative difference {}", rel);
        }

        /// MSE never exceeds the prior variance.
        #[test]
        fn mse_bounded_by_prior(
            p in 1usize..=16,
            var_j in 0.05f64..100.0,
            sigma2 in 0.05f64..10.0,
            seed in 0u64..1_000_000,
        ) {
            let mut s = derive_stream(Seed(seed), &[56]);
            let x = sample_cscg_vector(&mut s, p, 1.0).unwrap();
            let mse = closed_form_mse(&x, var_j, sigma2).unwrap();
            prop_assert!(mse <= var_j);
            prop_assert!(mse >= 0.0);
        }
    }
}
