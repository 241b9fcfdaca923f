//! Pilot transmission over the three cascaded links: per-link IRS on/off
//! schedule, effective reflection phase, and the per-subcarrier received
//! signal `y = phi_eff * x * J + v`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::numerics::CVec;
use crate::rng::{sample_qpsk, RngStream};

/// The three cascaded links, each estimated in its own pilot block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LinkId {
    /// MU -> IRS-1 -> BS (link 1).
    ViaIrs1,
    /// MU -> IRS-2 -> BS (link 2).
    ViaIrs2,
    /// MU -> IRS-1 -> IRS-2 -> BS (link 3).
    ViaBoth,
}

impl LinkId {
    pub const ALL: [LinkId; 3] = [LinkId::ViaIrs1, LinkId::ViaIrs2, LinkId::ViaBoth];

    /// 1-based link index, as used on the command line and in file names.
    pub fn index(self) -> u8 {
        match self {
            LinkId::ViaIrs1 => 1,
            LinkId::ViaIrs2 => 2,
            LinkId::ViaBoth => 3,
        }
    }
}

impl TryFrom<u8> for LinkId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(LinkId::ViaIrs1),
            2 => Ok(LinkId::ViaIrs2),
            3 => Ok(LinkId::ViaBoth),
            _ => Err(Error::InvalidParam("link must be 1, 2, or 3".into())),
        }
    }
}

impl From<LinkId> for u8 {
    fn from(l: LinkId) -> u8 {
        l.index()
    }
}

impl std::fmt::Display for LinkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Which IRS is switched on while a link's pilots are sent:
/// link 1 -> (on, off), link 2 -> (off, on), link 3 -> (on, on).
pub fn irs_schedule(link: LinkId) -> (bool, bool) {
    match link {
        LinkId::ViaIrs1 => (true, false),
        LinkId::ViaIrs2 => (false, true),
        LinkId::ViaBoth => (true, true),
    }
}

/// Effective reflection coefficient seen by a link's pilots:
/// phi1, phi2, or their product. Inputs are expected unit-modulus.
pub fn effective_phase(link: LinkId, phi1: Complex64, phi2: Complex64) -> Complex64 {
    debug_assert!((phi1.norm() - 1.0).abs() < 1e-9);
    debug_assert!((phi2.norm() - 1.0).abs() < 1e-9);
    match link {
        LinkId::ViaIrs1 => phi1,
        LinkId::ViaIrs2 => phi2,
        LinkId::ViaBoth => phi1 * phi2,
    }
}

/// Pilot vector for one link and subcarrier, with its effective phase.
#[derive(Debug, Clone)]
pub struct PilotBlock {
    pub link: LinkId,
    pub k: usize,
    pub x: CVec,
    pub phi_eff: Complex64,
}

impl PilotBlock {
    pub fn new(link: LinkId, k: usize, x: CVec, phi_eff: Complex64) -> Result<Self> {
        if (phi_eff.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "effective phase must be unit modulus, got |phi_eff| = {}",
                phi_eff.norm()
            )));
        }
        Ok(PilotBlock { link, k, x, phi_eff })
    }

    /// Draw the link's QPSK pilots from `stream` at the configured length
    /// and per-symbol energy.
    pub fn draw(
        params: &SystemParams,
        link: LinkId,
        k: usize,
        stream: &mut RngStream,
    ) -> Result<Self> {
        let x = sample_qpsk(stream, params.pilot_len(link), params.pilot_symbol_energy)?;
        PilotBlock::new(link, k, x, effective_phase(link, params.phi1(), params.phi2()))
    }
}

/// Noisy observation of one pilot block.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    pub link: LinkId,
    pub k: usize,
    pub y: CVec,
}

/// Push a pilot block through the cascaded channel `j` and add CN(0, sigma2)
/// noise drawn sequentially from `stream`.
pub fn transmit(
    block: &PilotBlock,
    j: Complex64,
    stream: &mut RngStream,
    sigma2_noise: f64,
) -> ReceivedBlock {
    let scale = block.phi_eff * j;
    let y = CVec::from_fn(block.x.len(), |p| {
        scale * block.x[p] + stream.next_cscg(sigma2_noise)
    })
    .expect("pilot block is nonempty");
    ReceivedBlock {
        link: block.link,
        k: block.k,
        y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_link_cascade, theoretical_moments};
    use crate::rng::{derive_stream, Seed};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn schedule_table() {
        assert_eq!(irs_schedule(LinkId::ViaIrs1), (true, false));
        assert_eq!(irs_schedule(LinkId::ViaIrs2), (false, true));
        assert_eq!(irs_schedule(LinkId::ViaBoth), (true, true));
    }

    #[test]
    fn effective_phase_cases() {
        let j = c(0.0, 1.0);
        assert_eq!(effective_phase(LinkId::ViaBoth, j, j), c(-1.0, 0.0));
        let p = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert_eq!(effective_phase(LinkId::ViaIrs1, p, j), p);
        assert_eq!(effective_phase(LinkId::ViaIrs2, p, c(1.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn link_index_round_trip() {
        for link in LinkId::ALL {
            assert_eq!(LinkId::try_from(link.index()).unwrap(), link);
        }
        let err = LinkId::try_from(4).unwrap_err().to_string();
        assert!(err.contains("link must be 1, 2, or 3"));
    }

    #[test]
    fn noiseless_transmit_is_exact() {
        let x = CVec::new(vec![c(1.0, 0.0); 4]).unwrap();
        let block = PilotBlock::new(LinkId::ViaIrs1, 0, x, c(1.0, 0.0)).unwrap();
        let mut s = derive_stream(Seed(0), &[0]);
        let rx = transmit(&block, c(2.0, 0.0), &mut s, 0.0);
        for p in 0..4 {
            assert_eq!(rx.y[p], c(2.0, 0.0));
        }
    }

    #[test]
    fn zero_pilots_give_pure_noise() {
        let n = 100_000;
        let x = CVec::zeros(n).unwrap();
        let block = PilotBlock::new(LinkId::ViaIrs1, 0, x, c(1.0, 0.0)).unwrap();
        let mut s = derive_stream(Seed(1), &[0]);
        let rx = transmit(&block, c(5.0, 5.0), &mut s, 2.0);
        let var = rx.y.energy() / n as f64;
        assert!(
            (var - 2.0).abs() / 2.0 < 0.02,
            "noise variance {var} not within 2% of 2.0"
        );
    }

    #[test]
    fn transmit_is_linear_in_j_for_pow2_scales() {
        let mut s = derive_stream(Seed(2), &[0]);
        let x = sample_qpsk(&mut s, 8, 1.0).unwrap();
        let block = PilotBlock::new(LinkId::ViaIrs2, 0, x, c(0.0, 1.0)).unwrap();
        let j = c(0.7, -0.3);
        let mut s0 = derive_stream(Seed(3), &[0]);
        let y1 = transmit(&block, j, &mut s0, 0.0);
        let mut s0 = derive_stream(Seed(3), &[0]);
        let y2 = transmit(&block, j * 4.0, &mut s0, 0.0);
        for p in 0..8 {
            assert_eq!(y2.y[p], y1.y[p] * 4.0);
        }
    }

    #[test]
    fn rejects_non_unit_phase() {
        let x = CVec::zeros(2).unwrap();
        assert!(PilotBlock::new(LinkId::ViaIrs1, 0, x, c(0.5, 0.0)).is_err());
    }

    #[test]
    fn received_power_matches_model() {
        // E{|y_p|^2} = symbol_energy * var_J + sigma2, within 3% at 1e5 trials.
        let params = SystemParams {
            n1: 5,
            sigma1_sq: 1.0,
            sigma2_sq: 1.0,
            pilot_len_p: 2,
            pilot_symbol_energy: 1.5,
            sigma2_noise: 0.8,
            ..SystemParams::default()
        };
        let var_j = theoretical_moments(&params).var_j1;
        let trials = 100_000;
        let mut pilot_stream = derive_stream(Seed(4), &[1]);
        let block = PilotBlock::draw(&params, LinkId::ViaIrs1, 0, &mut pilot_stream).unwrap();
        let mut acc = 0.0;
        for t in 0..trials {
            let ch_stream = derive_stream(Seed(4), &[2, t as u64]);
            let j = draw_link_cascade(&params, LinkId::ViaIrs1, &ch_stream, 0);
            let mut noise = derive_stream(Seed(4), &[3, t as u64]);
            let rx = transmit(&block, j, &mut noise, params.sigma2_noise);
            acc += rx.y.energy() / block.x.len() as f64;
        }
        let measured = acc / trials as f64;
        let expected = params.pilot_symbol_energy * var_j + params.sigma2_noise;
        assert!(
            (measured - expected).abs() / expected < 0.03,
            "per-entry power {measured} vs expected {expected}"
        );
    }
}
