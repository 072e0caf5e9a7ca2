//! BPSK modulation, channel noise models and log-likelihood ratios.
//!
//! LLRs follow the `log P(c=1|y) / P(c=0|y)` convention. With the BPSK map
//! `0 -> +1`, `1 -> -1`, a positive channel sample is evidence for bit 0 and
//! yields a negative LLR.

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::frame_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    Awgn,
    #[serde(rename = "fading")]
    RayleighFading,
    Bursty,
}

impl ChannelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Awgn => "awgn",
            ChannelFamily::RayleighFading => "fading",
            ChannelFamily::Bursty => "bursty",
        }
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelFamily::Awgn),
            "fading" | "rayleigh" => Ok(ChannelFamily::RayleighFading),
            "bursty" | "burst" | "bursting" => Ok(ChannelFamily::Bursty),
            other => Err(Error::InvalidParams(format!("unknown channel {other:?}"))),
        }
    }
}

impl std::fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// LLR computed by the receiver on the bursty channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurstLlr {
    /// AWGN LLR with the nominal sigma; the receiver ignores the bursts.
    #[default]
    Mismatched,
    /// Exact LLR of the two-component Gaussian mixture.
    ExactMixture,
}

pub const DEFAULT_BURST_RHO: f64 = 0.1;
pub const DEFAULT_BURST_SCALE: f64 = std::f64::consts::SQRT_2;
/// Rayleigh scale parameter of the fading amplitudes; `E[h^2] = 2 scale^2`.
pub const DEFAULT_FADING_SCALE: f64 = 1.0;
/// Fading scale giving unit average received power, `E[h^2] = 1`.
pub const UNIT_POWER_FADING_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    /// Eb/N0 in dB.
    pub ebn0_db: f64,
    /// Code rate `k / n`; 1 for uncoded transmission.
    pub rate: f64,
    /// Burst probability per symbol (bursty channel only).
    pub rho: f64,
    /// Burst standard deviation as a multiple of sigma (bursty channel only).
    pub burst_scale: f64,
    pub burst_llr: BurstLlr,
    /// Rayleigh scale parameter (fading channel only).
    pub fading_scale: f64,
}

impl ChannelSpec {
    pub fn new(family: ChannelFamily, ebn0_db: f64, rate: f64) -> Self {
        ChannelSpec {
            family,
            ebn0_db,
            rate,
            rho: DEFAULT_BURST_RHO,
            burst_scale: DEFAULT_BURST_SCALE,
            burst_llr: BurstLlr::Mismatched,
            fading_scale: DEFAULT_FADING_SCALE,
        }
    }

    pub fn awgn(ebn0_db: f64, rate: f64) -> Self {
        Self::new(ChannelFamily::Awgn, ebn0_db, rate)
    }

    pub fn fading(ebn0_db: f64, rate: f64) -> Self {
        Self::new(ChannelFamily::RayleighFading, ebn0_db, rate)
    }

    pub fn bursty(ebn0_db: f64, rate: f64, rho: f64) -> Self {
        ChannelSpec {
            rho,
            ..Self::new(ChannelFamily::Bursty, ebn0_db, rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::InvalidParams(format!("rate {} outside (0, 1]", self.rate)));
        }
        if !self.ebn0_db.is_finite() {
            return Err(Error::InvalidParams("Eb/N0 must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParams(format!("burst probability {} outside [0, 1]", self.rho)));
        }
        if self.burst_scale.is_nan() || self.burst_scale <= 0.0 {
            return Err(Error::InvalidParams(format!("burst scale {} must be positive", self.burst_scale)));
        }
        if !(self.fading_scale > 0.0 && self.fading_scale.is_finite()) {
            return Err(Error::InvalidParams(format!("fading scale {} must be positive", self.fading_scale)));
        }
        Ok(())
    }

    /// Noise standard deviation.
    pub fn sigma(&self) -> Result<f64> {
        self.validate()?;
        sigma_from_ebn0(self.ebn0_db, self.rate)
    }
}

/// `sigma = (2 * rate * 10^(EbN0/10))^(-1/2)` for unit-energy BPSK.
pub fn sigma_from_ebn0(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParams(format!("rate {rate} outside (0, 1]")));
    }
    let sigma = (2.0 * rate * 10f64.powf(ebn0_db / 10.0)).powf(-0.5);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParams(format!("Eb/N0 {ebn0_db} dB gives sigma {sigma}")));
    }
    Ok(sigma)
}

/// BPSK: bit 0 -> +1, bit 1 -> -1.
pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// Channel outputs for a batch of frames.
#[derive(Clone, Debug)]
pub struct ReceivedBatch {
    /// `B x n` channel outputs.
    pub y: Array2<f64>,
    /// `B x n` fading amplitudes; present exactly for the fading channel.
    pub h: Option<Array2<f64>>,
    pub spec: ChannelSpec,
}

/// Passes one frame through the channel.
///
/// The noise vector is drawn first, then the channel-specific extra draws
/// (fading amplitudes, burst events), so bursty with `rho = 0` reproduces
/// AWGN sample for sample from the same stream.
pub fn transmit_frame<R: Rng + ?Sized>(
    symbols: ArrayView1<f64>,
    spec: &ChannelSpec,
    sigma: f64,
    rng: &mut R,
    mut y: ArrayViewMut1<f64>,
    fading: Option<ArrayViewMut1<f64>>,
) {
    for (yv, &s) in y.iter_mut().zip(symbols.iter()) {
        let e: f64 = rng.sample(StandardNormal);
        *yv = s + sigma * e;
    }
    match spec.family {
        ChannelFamily::Awgn => {}
        ChannelFamily::RayleighFading => {
            let mut hv = fading.expect("fading channel needs an amplitude buffer");
            for ((h, yv), &s) in hv.iter_mut().zip(y.iter_mut()).zip(symbols.iter()) {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                *h = spec.fading_scale * (a * a + b * b).sqrt();
                *yv += (*h - 1.0) * s;
            }
        }
        ChannelFamily::Bursty => {
            let burst_sigma = spec.burst_scale * sigma;
            for yv in y.iter_mut() {
                if rng.random::<f64>() < spec.rho {
                    let z: f64 = rng.sample(StandardNormal);
                    *yv += burst_sigma * z;
                }
            }
        }
    }
}

/// Transmits `B` modulated frames; frame `b` draws from substream
/// `first_stream + b` of `seed`.
pub fn transmit(symbols: ArrayView2<f64>, spec: &ChannelSpec, seed: u64, first_stream: u64) -> Result<ReceivedBatch> {
    let sigma = spec.sigma()?;
    let mut y = Array2::zeros(symbols.raw_dim());
    let mut h = match spec.family {
        ChannelFamily::RayleighFading => Some(Array2::zeros(symbols.raw_dim())),
        _ => None,
    };
    for (b, (s, yrow)) in symbols.outer_iter().zip(y.outer_iter_mut()).enumerate() {
        let mut rng = frame_rng(seed, first_stream + b as u64);
        let hrow = h.as_mut().map(|h| h.index_axis_mut(Axis(0), b));
        transmit_frame(s, spec, sigma, &mut rng, yrow, hrow);
    }
    Ok(ReceivedBatch { y, h, spec: *spec })
}

/// LLRs for one frame.
pub fn llr_frame(y: ArrayView1<f64>, fading: Option<ArrayView1<f64>>, spec: &ChannelSpec, sigma: f64, mut out: ArrayViewMut1<f64>) {
    let s2 = sigma * sigma;
    match (spec.family, fading) {
        (ChannelFamily::RayleighFading, Some(h)) => {
            Zip::from(&mut out).and(&y).and(&h).for_each(|l, &y, &h| *l = -2.0 * h * y / s2);
        }
        (ChannelFamily::Bursty, _) if spec.burst_llr == BurstLlr::ExactMixture => {
            let s2b = s2 * (1.0 + spec.burst_scale * spec.burst_scale);
            let rho = spec.rho;
            Zip::from(&mut out).and(&y).for_each(|l, &y| *l = mixture_llr(y, s2, s2b, rho));
        }
        _ => {
            Zip::from(&mut out).and(&y).for_each(|l, &y| *l = -2.0 * y / s2);
        }
    }
}

/// `log p(y | x=-1) - log p(y | x=+1)` for noise
/// `(1-rho) N(0, s2) + rho N(0, s2b)`.
fn mixture_llr(y: f64, s2: f64, s2b: f64, rho: f64) -> f64 {
    let log_comp = |x: f64| -> f64 {
        let a = (1.0 - rho).ln() - 0.5 * s2.ln() - (y - x).powi(2) / (2.0 * s2);
        if rho <= 0.0 {
            return a;
        }
        let b = rho.ln() - 0.5 * s2b.ln() - (y - x).powi(2) / (2.0 * s2b);
        if rho >= 1.0 {
            return b;
        }
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    };
    log_comp(-1.0) - log_comp(1.0)
}

/// LLR matrix for a received batch.
pub fn llr(batch: &ReceivedBatch) -> Result<Array2<f64>> {
    let sigma = batch.spec.sigma()?;
    let mut out = Array2::zeros(batch.y.raw_dim());
    for (b, (y, o)) in batch.y.outer_iter().zip(out.outer_iter_mut()).enumerate() {
        let h = batch.h.as_ref().map(|h| h.index_axis(Axis(0), b));
        llr_frame(y, h, &batch.spec, sigma, o);
    }
    Ok(out)
}

/// Modulated all-zero codeword repeated for `frames` frames of length `n`.
pub fn zero_codeword_symbols(frames: usize, n: usize) -> Array2<f64> {
    Array2::from_elem((frames, n), 1.0)
}
