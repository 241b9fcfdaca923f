//! Per-subcarrier channel generation, the three cascaded scalar channels,
//! and their theoretical moments.
//!
//! All five channel objects are drawn directly in the frequency domain with
//! i.i.d. CSCG entries (cross-subcarrier correlation is not modelled in the
//! default experiments); [`cir_to_cfr`] covers the tap-domain view.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{transpose_inner, CMat, CVec};
use crate::rng::RngStream;
use crate::signal::LinkId;

/// Scalar model parameters.
///
/// Variance defaults are a moment-matched reconstruction: `sigma1_sq *
/// sigma2_sq = 21.0` makes the link-1 cascade magnitude Rayleigh-scale
/// about 25.1 at `n1 = 60` and 7.24 at `n1 = 5`. Reflection coefficients
/// are stored as phases, so unit modulus holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Subcarrier count N.
    pub n_subcarriers: usize,
    /// Reflecting elements on IRS-1.
    pub n1: usize,
    /// Reflecting elements on IRS-2.
    pub n2: usize,
    /// Channel tap count L (only used by the tap-domain view; L <= N).
    pub taps: usize,
    /// Frequency-domain noise variance.
    pub sigma2_noise: f64,
    /// Entry variance of the MU -> IRS-1 channel.
    pub sigma1_sq: f64,
    /// Entry variance of the IRS-1 -> BS channel.
    pub sigma2_sq: f64,
    /// Entry variance of the MU -> IRS-2 channel.
    pub sigma3_sq: f64,
    /// Entry variance of the IRS-2 -> BS channel.
    pub sigma4_sq: f64,
    /// Entry variance of the IRS-1 -> IRS-2 channel.
    pub sigma5_sq: f64,
    /// Phase of the common IRS-1 reflection coefficient (radians).
    pub phi1_rad: f64,
    /// Phase of the common IRS-2 reflection coefficient (radians).
    pub phi2_rad: f64,
    /// Pilot symbols per subcarrier for link 1.
    pub pilot_len_p: usize,
    /// Pilot symbols per subcarrier for link 2.
    pub pilot_len_q: usize,
    /// Pilot symbols per subcarrier for link 3.
    pub pilot_len_r: usize,
    /// Per-symbol pilot energy.
    pub pilot_symbol_energy: f64,
}

/// Product of the two link-1 entry variances used by the defaults.
pub const DEFAULT_SIGMA_PRODUCT: f64 = 21.0;

impl Default for SystemParams {
    fn default() -> Self {
        let s = DEFAULT_SIGMA_PRODUCT.sqrt();
        SystemParams {
            n_subcarriers: 64,
            n1: 60,
            n2: 32,
            taps: 4,
            sigma2_noise: 1.0,
            sigma1_sq: s,
            sigma2_sq: s,
            sigma3_sq: s,
            sigma4_sq: s,
            sigma5_sq: 1.0,
            phi1_rad: 0.0,
            phi2_rad: 0.0,
            pilot_len_p: 4,
            pilot_len_q: 4,
            pilot_len_r: 4,
            pilot_symbol_energy: 1.0,
        }
    }
}

impl SystemParams {
    /// Validate every field, reporting all problems in one message.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let counts: [(&str, usize); 7] = [
            ("n_subcarriers", self.n_subcarriers),
            ("n1", self.n1),
            ("n2", self.n2),
            ("taps", self.taps),
            ("pilot_len_p", self.pilot_len_p),
            ("pilot_len_q", self.pilot_len_q),
            ("pilot_len_r", self.pilot_len_r),
        ];
        for (name, v) in counts {
            if v == 0 {
                issues.push(format!("{name} must be >= 1"));
            }
        }
        if self.taps > self.n_subcarriers {
            issues.push(format!(
                "taps ({}) must not exceed n_subcarriers ({})",
                self.taps, self.n_subcarriers
            ));
        }
        let vars: [(&str, f64); 6] = [
            ("sigma2_noise", self.sigma2_noise),
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("sigma3_sq", self.sigma3_sq),
            ("sigma4_sq", self.sigma4_sq),
            ("sigma5_sq", self.sigma5_sq),
        ];
        for (name, v) in vars {
            if !v.is_finite() || v < 0.0 {
                issues.push(format!("{name} must be a finite nonnegative real, got {v}"));
            }
        }
        if !self.pilot_symbol_energy.is_finite() || self.pilot_symbol_energy <= 0.0 {
            issues.push(format!(
                "pilot_symbol_energy must be a finite positive real, got {}",
                self.pilot_symbol_energy
            ));
        }
        for (name, v) in [("phi1_rad", self.phi1_rad), ("phi2_rad", self.phi2_rad)] {
            if !v.is_finite() {
                issues.push(format!("{name} must be finite, got {v}"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(issues.join("; ")))
        }
    }

    /// IRS-1 reflection coefficient (unit modulus by construction).
    pub fn phi1(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi1_rad)
    }

    /// IRS-2 reflection coefficient (unit modulus by construction).
    pub fn phi2(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi2_rad)
    }

    /// Configured pilot count for a link.
    pub fn pilot_len(&self, link: LinkId) -> usize {
        match link {
            LinkId::ViaIrs1 => self.pilot_len_p,
            LinkId::ViaIrs2 => self.pilot_len_q,
            LinkId::ViaBoth => self.pilot_len_r,
        }
    }

    pub fn set_pilot_len(&mut self, link: LinkId, len: usize) {
        match link {
            LinkId::ViaIrs1 => self.pilot_len_p = len,
            LinkId::ViaIrs2 => self.pilot_len_q = len,
            LinkId::ViaBoth => self.pilot_len_r = len,
        }
    }
}

/// One draw of the five per-subcarrier channel objects.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// MU -> IRS-1, length n1.
    pub h_r1: CVec,
    /// IRS-1 -> BS, length n1.
    pub h_t1: CVec,
    /// MU -> IRS-2, length n2.
    pub h_r2: CVec,
    /// IRS-2 -> BS, length n2.
    pub h_t2: CVec,
    /// IRS-1 -> IRS-2, n2 x n1.
    pub g: CMat,
    /// Subcarrier index.
    pub subcarrier: usize,
}

/// The three cascaded scalar channels of one subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeTriple {
    pub j1: Complex64,
    pub j2: Complex64,
    pub j3: Complex64,
}

/// Theoretical first and second moments of the cascaded channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeMoments {
    /// Common mean of all three cascades (always zero).
    pub mean: Complex64,
    pub var_j1: f64,
    pub var_j2: f64,
    pub var_j3: f64,
}

// Child-stream roles for the five channel objects. Each object draws from
// its own derived stream, so partial draws reproduce full draws bit for bit.
const ROLE_H_R1: u64 = 1;
const ROLE_H_T1: u64 = 2;
const ROLE_H_R2: u64 = 3;
const ROLE_H_T2: u64 = 4;
const ROLE_G: u64 = 5;

fn cscg_vec(stream: &mut RngStream, n: usize, variance: f64) -> CVec {
    CVec::from_fn(n, |_| stream.next_cscg(variance)).expect("validated dimensions")
}

/// Draw one realization of all five channel objects for subcarrier `k`.
///
/// Expects `params.validate()` to have passed. Each object is sampled from
/// its own child stream of `stream`, keyed by `(k, role)`, so distinct
/// subcarriers and objects never share randomness.
pub fn draw_channels(params: &SystemParams, stream: &RngStream, k: usize) -> ChannelRealization {
    let base = stream.child(k as u64);
    let h_r1 = cscg_vec(&mut base.child(ROLE_H_R1), params.n1, params.sigma1_sq);
    let h_t1 = cscg_vec(&mut base.child(ROLE_H_T1), params.n1, params.sigma2_sq);
    let h_r2 = cscg_vec(&mut base.child(ROLE_H_R2), params.n2, params.sigma3_sq);
    let h_t2 = cscg_vec(&mut base.child(ROLE_H_T2), params.n2, params.sigma4_sq);
    let mut gs = base.child(ROLE_G);
    let g = CMat::from_fn(params.n2, params.n1, |_, _| gs.next_cscg(params.sigma5_sq))
        .expect("validated dimensions");
    ChannelRealization {
        h_r1,
        h_t1,
        h_r2,
        h_t2,
        g,
        subcarrier: k,
    }
}

/// Form the three cascaded channels from one realization.
pub fn cascade(ch: &ChannelRealization) -> Result<CascadeTriple> {
    let j1 = transpose_inner(&ch.h_t1, &ch.h_r1)?;
    let j2 = transpose_inner(&ch.h_t2, &ch.h_r2)?;
    let gh = ch.g.matvec(&ch.h_r1)?;
    let j3 = transpose_inner(&ch.h_t2, &gh)?;
    Ok(CascadeTriple { j1, j2, j3 })
}

/// Draw only the cascaded channel of one link, bit-identical to
/// `cascade(&draw_channels(..))` on that link but without materializing the
/// objects the link does not touch. This is the hot path of the Monte Carlo
/// loops.
pub fn draw_link_cascade(
    params: &SystemParams,
    link: LinkId,
    stream: &RngStream,
    k: usize,
) -> Complex64 {
    let base = stream.child(k as u64);
    match link {
        LinkId::ViaIrs1 => {
            let h_r1 = cscg_vec(&mut base.child(ROLE_H_R1), params.n1, params.sigma1_sq);
            let h_t1 = cscg_vec(&mut base.child(ROLE_H_T1), params.n1, params.sigma2_sq);
            transpose_inner(&h_t1, &h_r1).expect("equal lengths")
        }
        LinkId::ViaIrs2 => {
            let h_r2 = cscg_vec(&mut base.child(ROLE_H_R2), params.n2, params.sigma3_sq);
            let h_t2 = cscg_vec(&mut base.child(ROLE_H_T2), params.n2, params.sigma4_sq);
            transpose_inner(&h_t2, &h_r2).expect("equal lengths")
        }
        LinkId::ViaBoth => {
            let h_r1 = cscg_vec(&mut base.child(ROLE_H_R1), params.n1, params.sigma1_sq);
            let h_t2 = cscg_vec(&mut base.child(ROLE_H_T2), params.n2, params.sigma4_sq);
            let mut gs = base.child(ROLE_G);
            // Same row-major draw order and same summation order as the
            // matvec-then-inner route, so results match bitwise.
            let mut j3 = Complex64::new(0.0, 0.0);
            for n2 in 0..params.n2 {
                let mut row = Complex64::new(0.0, 0.0);
                for n1 in 0..params.n1 {
                    row += gs.next_cscg(params.sigma5_sq) * h_r1[n1];
                }
                j3 += h_t2[n2] * row;
            }
            j3
        }
    }
}

/// Zero mean plus the closed-form cascade variances
/// (N1 s1 s2, N2 s3 s4, N2 N1 s1 s4 s5).
pub fn theoretical_moments(params: &SystemParams) -> CascadeMoments {
    CascadeMoments {
        mean: Complex64::new(0.0, 0.0),
        var_j1: params.n1 as f64 * params.sigma1_sq * params.sigma2_sq,
        var_j2: params.n2 as f64 * params.sigma3_sq * params.sigma4_sq,
        var_j3: params.n2 as f64
            * params.n1 as f64
            * params.sigma1_sq
            * params.sigma4_sq
            * params.sigma5_sq,
    }
}

impl CascadeMoments {
    /// Variance of the requested link's cascade.
    pub fn var(&self, link: LinkId) -> f64 {
        match link {
            LinkId::ViaIrs1 => self.var_j1,
            LinkId::ViaIrs2 => self.var_j2,
            LinkId::ViaBoth => self.var_j3,
        }
    }
}

/// Unnormalized N-point DFT of the zero-padded tap vector
/// (channel impulse response -> channel frequency response).
pub fn cir_to_cfr(taps: &CVec, n: usize) -> Result<CVec> {
    if taps.len() > n {
        return Err(Error::InvalidParam(format!(
            "tap count {} exceeds subcarrier count {n}",
            taps.len()
        )));
    }
    let step = -2.0 * std::f64::consts::PI / n as f64;
    CVec::from_fn(n, |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, tap) in taps.iter().enumerate() {
            acc += tap * Complex64::from_polar(1.0, step * (k * l) as f64);
        }
        acc
    })
}
