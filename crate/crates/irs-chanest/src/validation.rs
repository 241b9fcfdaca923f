//! Named invariant checks behind the `validate` subcommand: moment
//! identities, the executable push-through proof, estimator equivalence and
//! orthogonality, fit scales, characteristic-function agreement, bound
//! ordering, and byte-level determinism of the pipelines.

use std::fs;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{draw_link_cascade, theoretical_moments, SystemParams};
use crate::crlb::{
    bayesian_crlb, cf_grid, cf_sup_distance, classical_crlb, ks_statistic, rayleigh_mle,
};
use crate::error::Result;
use crate::estimation::{
    closed_form_mse, empirical_mse, lmmse_matrix_form, lmmse_scalar_form, pilot_vector,
};
use crate::experiments::{run_all, ExperimentConfig};
use crate::numerics::{hermitian_inner, push_through_residual, CVec};
use crate::rng::{derive_stream, sample_cscg_vector, sample_qpsk, Seed};
use crate::signal::{transmit, LinkId, PilotBlock};

/// Outcome of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    /// Measured values against their thresholds, human-readable.
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckReport { name, pass, detail }
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Run the full invariant suite. Failures are report content, not errors.
pub fn run_validation(seed: Seed) -> Vec<CheckReport> {
    vec![
        check_stream_independence(seed),
        check_cscg_moments(seed),
        check_qpsk_constellation(seed),
        check_cascade_moments(seed),
        check_push_through(seed),
        check_estimator_equivalence(seed),
        check_estimator_orthogonality(seed),
        check_mse_shape(seed),
        check_empirical_vs_closed_form(seed),
        check_rayleigh_scale(seed),
        check_ks_ordering(seed),
        check_cf_agreement(seed),
        check_bound_ordering(seed),
        check_determinism(seed),
    ]
}

fn check_stream_independence(seed: Seed) -> CheckReport {
    let n = 100_000;
    let mut a = derive_stream(seed, &[900, 0]);
    let mut b = derive_stream(seed, &[900, 1]);
    let xs: Vec<f64> = (0..n).map(|_| a.next_normal()).collect();
    let ys: Vec<f64> = (0..n).map(|_| b.next_normal()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..n {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx).powi(2);
        vy += (ys[i] - my).powi(2);
    }
    let rho = (cov / (vx.sqrt() * vy.sqrt())).abs();
    CheckReport::new(
        "stream-independence",
        rho < 0.02,
        format!("|rho| = {rho:.5} over {n} paired draws (bound 0.02)"),
    )
}

fn check_cscg_moments(seed: Seed) -> CheckReport {
    let n = 1_000_000;
    let mut s = derive_stream(seed, &[901]);
    let mut sum_sq = 0.0;
    let mut pseudo = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let z = s.next_cscg(4.0);
        sum_sq += z.norm_sqr();
        pseudo += z * z;
    }
    let var = sum_sq / n as f64;
    let pv = (pseudo / n as f64).norm();
    let pv_bound = 3.0 * 4.0 / (n as f64).sqrt();
    let pass = (var - 4.0).abs() / 4.0 < 0.0075 && pv < pv_bound;
    CheckReport::new(
        "cscg-moments",
        pass,
        format!(
            "sample variance {var:.4} (target 4 within 0.75%), pseudo-variance {pv:.5} (bound {pv_bound:.5})"
        ),
    )
}

fn check_qpsk_constellation(seed: Seed) -> CheckReport {
    let n = 100_000;
    let mut s = derive_stream(seed, &[902]);
    let x = sample_qpsk(&mut s, n, 1.0).expect("valid args");
    let mut counts = [0usize; 4];
    let mut worst_mod = 0.0_f64;
    for i in 0..n {
        let z = x[i];
        counts[usize::from(z.re < 0.0) | (usize::from(z.im < 0.0) << 1)] += 1;
        worst_mod = worst_mod.max((z.norm() - 1.0).abs());
    }
    let worst_freq = counts
        .iter()
        .map(|&c| (c as f64 / n as f64 - 0.25).abs())
        .fold(0.0, f64::max);
    let pass = worst_freq < 0.01 && worst_mod < 1e-12;
    CheckReport::new(
        "qpsk-constellation",
        pass,
        format!(
            "max quadrant frequency deviation {worst_freq:.5} (bound 0.01), max |modulus - 1| = {worst_mod:.2e}"
        ),
    )
}

fn sample_link_js(
    params: &SystemParams,
    link: LinkId,
    n: usize,
    seed: Seed,
    label: u64,
) -> Vec<Complex64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let stream = derive_stream(seed, &[label, i as u64]);
            draw_link_cascade(params, link, &stream, 0)
        })
        .collect()
}

fn check_cascade_moments(seed: Seed) -> CheckReport {
    // Unit entry variances: Var{J1} = N1, Var{J2} = N2, Var{J3} = N2 N1.
    let n = 100_000;
    let mut detail = Vec::new();
    let mut pass = true;
    for (link, label) in [
        (LinkId::ViaIrs1, 1100u64),
        (LinkId::ViaIrs2, 1200),
        (LinkId::ViaBoth, 1300),
    ] {
        for &size in &[1usize, 5, 60] {
            let params = SystemParams {
                n1: size,
                n2: size,
                sigma1_sq: 1.0,
                sigma2_sq: 1.0,
                sigma3_sq: 1.0,
                sigma4_sq: 1.0,
                sigma5_sq: 1.0,
                ..SystemParams::default()
            };
            let expect = theoretical_moments(&params).var(link);
            let js = sample_link_js(&params, link, n, seed, label + size as u64);
            let mean = js.iter().sum::<Complex64>() / n as f64;
            let var = js.iter().map(|j| j.norm_sqr()).sum::<f64>() / n as f64 - mean.norm_sqr();
            let mean_bound = 3.0 * (expect / n as f64).sqrt();
            let rel = (var - expect).abs() / expect;
            if mean.norm() >= mean_bound || rel >= 0.02 {
                pass = false;
            }
            detail.push(format!(
                "J{} size {size}: var {var:.3} vs {expect} (rel {rel:.4}), |mean| {:.4} (bound {mean_bound:.4})",
                link.index(),
                mean.norm()
            ));
        }
    }
    CheckReport::new("cascade-moments", pass, detail.join("; "))
}

/// 100 random (X, sigma_h2, sigma2) instances with P cycling through 1..=16.
fn prop2_instances(seed: Seed) -> Vec<(CVec, f64, f64)> {
    (0..100)
        .map(|i| {
            let mut s = derive_stream(seed, &[906, i as u64]);
            let p = (i % 16) + 1;
            let x = sample_cscg_vector(&mut s, p, 1.0).expect("valid args");
            let sigma_h2 = 0.05 + 10.0 * ((i as f64) / 99.0);
            let sigma2 = 0.1 + 2.0 * (((i * 7) % 100) as f64 / 99.0);
            (x, sigma_h2, sigma2)
        })
        .collect()
}

fn check_push_through(seed: Seed) -> CheckReport {
    let mut worst = 0.0_f64;
    for (x, sigma_h2, sigma2) in prop2_instances(seed) {
        let r = push_through_residual(&x, sigma_h2, sigma2).expect("valid instance");
        worst = worst.max(r);
    }
    CheckReport::new(
        "push-through-identity",
        worst <= 1e-12,
        format!("max residual {worst:.3e} over 100 instances, P in 1..=16 (bound 1e-12)"),
    )
}

fn check_estimator_equivalence(seed: Seed) -> CheckReport {
    let mut worst = 0.0_f64;
    for (i, (x, var_j, sigma2)) in prop2_instances(seed).into_iter().enumerate() {
        let mut s = derive_stream(seed, &[907, i as u64]);
        let y = sample_cscg_vector(&mut s, x.len(), 1.0).expect("valid args");
        let phi = Complex64::from_polar(1.0, i as f64 * 0.0628);
        let m = lmmse_matrix_form(&x, &y, phi, var_j, sigma2).expect("valid instance");
        let sc = lmmse_scalar_form(&x, &y, phi, var_j, sigma2).expect("valid instance");
        worst = worst.max((m - sc).norm() / sc.norm().max(1e-300));
    }
    CheckReport::new(
        "estimator-equivalence",
        worst <= 1e-10,
        format!("max |matrix - scalar| / |scalar| = {worst:.3e} over 100 instances (bound 1e-10)"),
    )
}

fn check_estimator_orthogonality(seed: Seed) -> CheckReport {
    let params = SystemParams::default();
    let trials = 100_000;
    let var_j = theoretical_moments(&params).var_j1;
    let mut pilot_stream = derive_stream(seed, &[908]);
    let block = PilotBlock::draw(&params, LinkId::ViaIrs1, 0, &mut pilot_stream).expect("valid");
    let terms: Vec<Complex64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ch = derive_stream(seed, &[909, t as u64]);
            let j = draw_link_cascade(&params, LinkId::ViaIrs1, &ch, 0);
            let mut noise = derive_stream(seed, &[910, t as u64]);
            let rx = transmit(&block, j, &mut noise, params.sigma2_noise);
            let j_hat =
                lmmse_scalar_form(&block.x, &rx.y, block.phi_eff, var_j, params.sigma2_noise)
                    .expect("valid");
            (j - j_hat) * j_hat.conj()
        })
        .collect();
    let mean = terms.iter().sum::<Complex64>() / trials as f64;
    let var = terms.iter().map(|t| t.norm_sqr()).sum::<f64>() / trials as f64 - mean.norm_sqr();
    let bound = 3.0 * var.sqrt() / (trials as f64).sqrt();
    CheckReport::new(
        "estimator-orthogonality",
        mean.norm() < bound,
        format!(
            "|E{{(J - Jhat) conj(Jhat)}}| = {:.4} (3-sigma bound {bound:.4}, {trials} trials)",
            mean.norm()
        ),
    )
}

fn check_mse_shape(_seed: Seed) -> CheckReport {
    let var_j = 1260.0;
    let sigma2 = 1.0;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut bounded = true;
    for e in [0.5_f64, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let x = CVec::new(vec![Complex64::new(e.sqrt(), 0.0)]).expect("nonempty");
        let mse = closed_form_mse(&x, var_j, sigma2).expect("valid");
        monotone &= mse < prev;
        bounded &= mse <= var_j;
        prev = mse;
    }
    let zero = closed_form_mse(&CVec::zeros(4).expect("nonempty"), var_j, sigma2).expect("valid");
    let zero_exact = zero == var_j;
    CheckReport::new(
        "mse-shape",
        monotone && bounded && zero_exact,
        format!(
            "strictly decreasing in x^H x: {monotone}; MSE <= var_j: {bounded}; zero-energy MSE == var_j exactly: {zero_exact}"
        ),
    )
}

fn check_empirical_vs_closed_form(seed: Seed) -> CheckReport {
    let params = SystemParams::default();
    let trials = 100_000;
    let emp = empirical_mse(&params, LinkId::ViaIrs1, 0, trials, seed).expect("valid");
    let x = pilot_vector(&params, LinkId::ViaIrs1, 0, seed).expect("valid");
    let var_j = theoretical_moments(&params).var_j1;
    let closed = closed_form_mse(&x, var_j, params.sigma2_noise).expect("valid");
    let ratio = emp / closed;
    CheckReport::new(
        "empirical-vs-closed-form",
        (0.97..=1.03).contains(&ratio),
        format!("empirical/closed-form = {ratio:.4} at {trials} trials (band [0.97, 1.03])"),
    )
}

fn hist_params(n1: usize) -> SystemParams {
    SystemParams {
        n1,
        ..SystemParams::default()
    }
}

fn check_rayleigh_scale(seed: Seed) -> CheckReport {
    let n = 100_000;
    let js60 = sample_link_js(&hist_params(60), LinkId::ViaIrs1, n, seed, 911);
    let js5 = sample_link_js(&hist_params(5), LinkId::ViaIrs1, n, seed, 912);
    let r60: Vec<f64> = js60.iter().map(|j| j.norm()).collect();
    let r5: Vec<f64> = js5.iter().map(|j| j.norm()).collect();
    let b60 = rayleigh_mle(&r60).expect("valid").b_hat;
    let b5 = rayleigh_mle(&r5).expect("valid").b_hat;
    let ratio = b60 / b5;
    let ratio_err = (ratio - 12.0_f64.sqrt()).abs() / 12.0_f64.sqrt();
    let pass =
        (24.6..=25.6).contains(&b60) && (7.10..=7.39).contains(&b5) && ratio_err < 0.02;
    CheckReport::new(
        "rayleigh-scale",
        pass,
        format!(
            "b_hat(n1=60) = {b60:.4} (band [24.6, 25.6]), b_hat(n1=5) = {b5:.4} (band [7.10, 7.39]), ratio {ratio:.4} vs sqrt(12) within {ratio_err:.4}"
        ),
    )
}

fn check_ks_ordering(seed: Seed) -> CheckReport {
    let n = 100_000;
    let r60: Vec<f64> = sample_link_js(&hist_params(60), LinkId::ViaIrs1, n, seed, 913)
        .iter()
        .map(|j| j.norm())
        .collect();
    let r5: Vec<f64> = sample_link_js(&hist_params(5), LinkId::ViaIrs1, n, seed, 914)
        .iter()
        .map(|j| j.norm())
        .collect();
    let f60 = rayleigh_mle(&r60).expect("valid");
    let f5 = rayleigh_mle(&r5).expect("valid");
    let d60 = ks_statistic(&r60, f60.b_hat).expect("valid");
    let d5 = ks_statistic(&r5, f5.b_hat).expect("valid");
    CheckReport::new(
        "ks-ordering",
        d60 < d5,
        format!("KS(n1=60) = {d60:.5} < KS(n1=5) = {d5:.5}: larger surfaces fit better"),
    )
}

fn check_cf_agreement(seed: Seed) -> CheckReport {
    let n = 100_000;
    let omegas: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
    let mut detail = Vec::new();
    let mut pass = true;
    for &s in &[1usize, 5, 60] {
        let samples: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let stream = derive_stream(seed, &[915, s as u64, i as u64]);
                let a = sample_cscg_vector(&mut stream.child(0), s, 1.0).expect("valid");
                let b = sample_cscg_vector(&mut stream.child(1), s, 1.0).expect("valid");
                hermitian_inner(&a, &b).expect("equal lengths")
            })
            .collect();
        let points = cf_grid(&samples, &omegas, 1.0, 1.0, s as u32).expect("valid");
        let sup = cf_sup_distance(&points);
        if sup >= 0.01 {
            pass = false;
        }
        detail.push(format!("S={s}: sup distance {sup:.5}"));
    }
    CheckReport::new(
        "cf-agreement",
        pass,
        format!("{} on 9x9 grid over [-2, 2]^2 (bound 0.01)", detail.join(", ")),
    )
}

fn check_bound_ordering(seed: Seed) -> CheckReport {
    let mut s = derive_stream(seed, &[916]);
    let mut ordered = true;
    let mut worst_eq = 0.0_f64;
    for p in 1..=8usize {
        let x = sample_qpsk(&mut s, p, 1.0).expect("valid");
        for f_prior in [1e-4, 1e-2, 1.0] {
            let b = bayesian_crlb(&x, 1.0, f_prior).expect("valid");
            let c = classical_crlb(&x, 1.0).expect("valid");
            ordered &= b <= c;
        }
        let var_j = 1260.0;
        let b = bayesian_crlb(&x, 1.0, 1.0 / var_j).expect("valid");
        let m = closed_form_mse(&x, var_j, 1.0).expect("valid");
        worst_eq = worst_eq.max((b - m).abs() / m);
    }
    CheckReport::new(
        "bound-ordering",
        ordered && worst_eq <= 1e-14,
        format!(
            "bayesian <= classical for f_prior > 0: {ordered}; max |bayes(1/var) - mse| / mse = {worst_eq:.2e} (bound 1e-14)"
        ),
    )
}

fn check_determinism(seed: Seed) -> CheckReport {
    let stamp = format!(
        "irs-chanest-validate-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    );
    let dir: PathBuf = std::env::temp_dir().join(stamp);
    let cfg = ExperimentConfig {
        params: SystemParams {
            n1: 6,
            n2: 3,
            ..SystemParams::default()
        },
        n_samples: 400,
        trials: 300,
        energy_grid: vec![1.0, 4.0],
        length_grid: vec![1, 4],
        hist_n1: vec![2, 6],
        hist_bins: 16,
        seed,
        out_dir: Some(dir.clone()),
        ..ExperimentConfig::default()
    };

    let run_with_threads = |threads: usize| -> Result<Vec<(String, Vec<u8>)>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool builds");
        let summary = pool.install(|| run_all(&cfg))?;
        let mut files = Vec::new();
        for p in &summary.pipelines {
            for f in &p.files {
                files.push((
                    f.clone(),
                    fs::read(f).map_err(|e| crate::error::Error::io(f.clone(), e))?,
                ));
            }
        }
        files.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(files)
    };

    let result = (|| -> Result<(bool, String)> {
        let first = run_with_threads(1)?;
        let second = run_with_threads(2)?;
        let identical = first == second;
        Ok((
            identical,
            format!(
                "{} CSVs byte-identical across 1-thread and 2-thread reruns: {identical}",
                first.len()
            ),
        ))
    })();
    let _ = fs::remove_dir_all(&dir);
    match result {
        Ok((pass, detail)) => CheckReport::new("determinism", pass, detail),
        Err(e) => CheckReport::new("determinism", false, format!("pipeline error: {e}")),
    }
}
