//! Deterministic, splittable random sampling.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`] derived
//! from a master [`Seed`] and a label path (pipeline, trial, subcarrier,
//! role, ...). Streams with distinct labels are statistically independent,
//! and a stream's output depends only on `(seed, label)` — never on the
//! order in which streams are created or consumed — so trial loops can run
//! in parallel without changing any output byte.
//!
//! Generator choice, fixed per release: ChaCha8 keyed by a SplitMix64-style
//! hash of `(seed, label)`; standard normals come from `rand_distr`'s
//! ziggurat sampler (version pinned by `Cargo.lock`).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMat, CVec};

/// Master seed for a whole run. Identical seed + identical label always
/// reproduces the same sample sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// One independent random stream, fully identified by `(seed, label)`.
///
/// A stream is owned by exactly one execution context; create streams
/// anywhere and hand them off before use.
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: Seed,
    label: Vec<u64>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash `(seed, label)` into a 32-byte ChaCha key. Label words are absorbed
/// in order and the length is absorbed last, so `[0]` and `[0, 0]` derive
/// unrelated keys.
fn key_for(seed: Seed, label: &[u64]) -> [u8; 32] {
    let mut h = mix64(seed.0 ^ 0x243F_6A88_85A3_08D3);
    for &w in label {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    h = mix64(h.wrapping_add(GOLDEN) ^ (label.len() as u64));
    let mut key = [0u8; 32];
    let mut s = h;
    for chunk in key.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(s).to_le_bytes());
    }
    key
}

/// Derive the stream identified by `(seed, label)`.
pub fn derive_stream(seed: Seed, label: &[u64]) -> RngStream {
    RngStream {
        rng: ChaCha8Rng::from_seed(key_for(seed, label)),
        seed,
        label: label.to_vec(),
    }
}

impl RngStream {
    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn label(&self) -> &[u64] {
        &self.label
    }

    /// Derive a child stream labelled `label ++ [tag]`. Uses only the
    /// stream's identity, not its consumed state, so children are the same
    /// no matter when (or whether) the parent was used.
    pub fn child(&self, tag: u64) -> RngStream {
        let mut label = Vec::with_capacity(self.label.len() + 1);
        label.extend_from_slice(&self.label);
        label.push(tag);
        RngStream {
            rng: ChaCha8Rng::from_seed(key_for(self.seed, &label)),
            seed: self.seed,
            label,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Standard normal variate.
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// One CN(0, variance) draw: independent real/imaginary parts, each
    /// N(0, variance/2).
    pub fn next_cscg(&mut self, variance: f64) -> Complex64 {
        let s = (variance * 0.5).sqrt();
        Complex64::new(s * self.next_normal(), s * self.next_normal())
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::InvalidParam(format!(
            "variance must be a finite nonnegative real, got {variance}"
        )));
    }
    Ok(())
}

/// Sample a length-`n` vector with i.i.d. CN(0, variance) entries.
pub fn sample_cscg_vector(stream: &mut RngStream, n: usize, variance: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::InvalidParam("vector length must be >= 1".into()));
    }
    check_variance(variance)?;
    CVec::new((0..n).map(|_| stream.next_cscg(variance)).collect())
}

/// Sample a `rows x cols` matrix with i.i.d. CN(0, variance) entries,
/// filled row-major.
pub fn sample_cscg_matrix(
    stream: &mut RngStream,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<CMat> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParam(
            "matrix dimensions must be >= 1".into(),
        ));
    }
    check_variance(variance)?;
    CMat::new(
        rows,
        cols,
        (0..rows * cols).map(|_| stream.next_cscg(variance)).collect(),
    )
}

/// Sample `n` QPSK symbols, each uniform on {(+-1 +- j) * sqrt(energy/2)}.
pub fn sample_qpsk(stream: &mut RngStream, n: usize, symbol_energy: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::InvalidParam("pilot length must be >= 1".into()));
    }
    if !symbol_energy.is_finite() || symbol_energy <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "symbol energy must be a finite positive real, got {symbol_energy}"
        )));
    }
    let s = (symbol_energy * 0.5).sqrt();
    CVec::new(
        (0..n)
            .map(|_| {
                let bits = stream.next_u64();
                let re = if bits & 1 == 0 { s } else { -s };
                let im = if bits & 2 == 0 { s } else { -s };
                Complex64::new(re, im)
            })
            .collect(),
    )
}
