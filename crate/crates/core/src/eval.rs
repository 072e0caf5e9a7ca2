//! Monte Carlo BER/FER measurement and curve comparison.
//!
//! Every frame of a simulation point draws its message (if any) and its
//! channel noise from a dedicated random substream indexed by the frame
//! number, and frames are committed in fixed-size batches. Counts therefore
//! depend only on the seed and the stopping rule, never on the number of
//! worker threads.

use std::io::{Read, Write};

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{llr_frame, modulate, transmit_frame, ChannelFamily, ChannelSpec};
use crate::code::ParityCheck;
use crate::decoder::{BpConfig, BpVariant, Tanner};
use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix};
use crate::rng::{frame_rng, mix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Transmit the all-zero codeword.
    #[default]
    ZeroCodeword,
    /// Encode uniformly random messages.
    RandomCodewords,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "zero_codeword" => Ok(EvalMode::ZeroCodeword),
            "random" | "random_codewords" => Ok(EvalMode::RandomCodewords),
            other => Err(Error::InvalidParams(format!("unknown evaluation mode {other:?}"))),
        }
    }
}

/// When to stop simulating one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub min_frames: u64,
    pub min_frame_errors: u64,
    /// Hard budget; reaching it first marks the point as exhausted.
    pub max_frames: u64,
    /// Frames committed between stopping-rule checks.
    pub batch_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_frames: 100_000,
            min_frame_errors: 50,
            max_frames: 10_000_000,
            batch_frames: 10_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_frames == 0 || self.max_frames == 0 {
            return Err(Error::InvalidParams("frame budget and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Counts for one (channel, SNR, decoder) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub channel: ChannelFamily,
    pub snr_db: f64,
    pub variant: BpVariant,
    pub iters: usize,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    /// `-ln(ber)`; absent when no bit error was observed.
    pub neg_ln_ber: Option<f64>,
    /// Sum over frames of the squared per-frame bit-error count.
    pub bit_errors_sq: u64,
    pub budget_exhausted: bool,
}

impl EvalPoint {
    /// Point estimate from raw counts for a code of length `n`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        spec: &ChannelSpec,
        variant: BpVariant,
        iters: usize,
        n: usize,
        frames: u64,
        bit_errors: u64,
        bit_errors_sq: u64,
        frame_errors: u64,
        budget_exhausted: bool,
    ) -> Self {
        let bits = frames as f64 * n as f64;
        let ber = if frames == 0 { 0.0 } else { bit_errors as f64 / bits };
        let fer = if frames == 0 { 0.0 } else { frame_errors as f64 / frames as f64 };
        EvalPoint {
            channel: spec.family,
            snr_db: spec.ebn0_db,
            variant,
            iters,
            frames,
            bit_errors,
            frame_errors,
            ber,
            fer,
            neg_ln_ber: (ber > 0.0).then(|| -ber.ln()),
            bit_errors_sq,
            budget_exhausted,
        }
    }

    /// Code length implied by the counts, if any error was seen.
    fn bits_per_frame(&self) -> Option<f64> {
        (self.ber > 0.0 && self.frames > 0).then(|| self.bit_errors as f64 / (self.ber * self.frames as f64))
    }

    /// Standard error of the BER estimate from the spread of per-frame
    /// error counts. Bit errors cluster within frames, so this is wider than
    /// the binomial figure.
    pub fn ber_std_error(&self) -> f64 {
        let Some(n) = self.bits_per_frame() else { return 0.0 };
        let f = self.frames as f64;
        let mean = self.bit_errors as f64 / f;
        let var = (self.bit_errors_sq as f64 / f - mean * mean).max(0.0) * f / (f - 1.0).max(1.0);
        (var / f).sqrt() / n
    }

    /// Binomial standard error of the BER treating bits as independent.
    pub fn ber_binomial_std_error(&self) -> f64 {
        let Some(n) = self.bits_per_frame() else { return 0.0 };
        let bits = self.frames as f64 * n;
        (self.ber * (1.0 - self.ber) / bits).sqrt()
    }

    /// Delta-method standard error of `-ln(ber)`.
    pub fn neg_ln_ber_std_error(&self) -> Option<f64> {
        (self.ber > 0.0).then(|| self.ber_std_error() / self.ber)
    }

    /// Wilson score interval for the BER at `z` standard deviations.
    pub fn ber_wilson(&self, z: f64) -> (f64, f64) {
        match self.bits_per_frame() {
            Some(n) => wilson_interval(self.bit_errors, (self.frames as f64 * n).round() as u64, z),
            None => (0.0, 0.0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub points: Vec<EvalPoint>,
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Theoretical BER of uncoded BPSK on AWGN.
pub fn uncoded_bpsk_ber(ebn0_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

fn point_seed(seed: u64, spec: &ChannelSpec) -> u64 {
    let family = match spec.family {
        ChannelFamily::Awgn => 1,
        ChannelFamily::RayleighFading => 2,
        ChannelFamily::Bursty => 3,
    };
    mix(mix(seed, family), spec.ebn0_db.to_bits())
}

#[derive(Clone, Copy, Default)]
struct Counts {
    bit_errors: u64,
    bit_errors_sq: u64,
    frame_errors: u64,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            bit_errors: self.bit_errors + o.bit_errors,
            bit_errors_sq: self.bit_errors_sq + o.bit_errors_sq,
            frame_errors: self.frame_errors + o.frame_errors,
        }
    }
}

struct FrameWork {
    edge: crate::decoder::EdgeWork,
    msg: Vec<u8>,
    symbols: Array1<f64>,
    y: Array1<f64>,
    h: Array1<f64>,
    llr: Array1<f64>,
    soft: Vec<f64>,
}

struct Simulator<'a> {
    n: usize,
    graph: Tanner,
    generator: Option<BitMatrix>,
    cfg: &'a BpConfig,
}

impl Simulator<'_> {
    fn work(&self) -> FrameWork {
        FrameWork {
            edge: self.graph.workspace(),
            msg: Vec::new(),
            symbols: Array1::ones(self.n),
            y: Array1::zeros(self.n),
            h: Array1::zeros(self.n),
            llr: Array1::zeros(self.n),
            soft: vec![0.0; self.n],
        }
    }

    fn frame(&self, spec: &ChannelSpec, sigma: f64, seed: u64, index: u64, w: &mut FrameWork) -> Counts {
        let mut rng = frame_rng(seed, index);
        let codeword = match &self.generator {
            Some(g) => {
                w.msg.clear();
                w.msg.extend((0..g.rows()).map(|_| u8::from(rng.random_bool(0.5))));
                let c = gf2::encode(g, &w.msg).expect("message length matches generator");
                w.symbols.assign(&ArrayView1::from(&modulate(&c)));
                Some(c)
            }
            None => None,
        };
        let fading = (spec.family == ChannelFamily::RayleighFading).then_some(w.h.view_mut());
        transmit_frame(w.symbols.view(), spec, sigma, &mut rng, w.y.view_mut(), fading);
        let fading = (spec.family == ChannelFamily::RayleighFading).then_some(w.h.view());
        llr_frame(w.y.view(), fading, spec, sigma, w.llr.view_mut());
        let llr = w.llr.as_slice().expect("contiguous");
        self.graph
            .decode_frame(llr, self.cfg, self.cfg.variant, &mut w.edge, &mut w.soft, |_, _| {});
        let errors = match &codeword {
            Some(c) => w.soft.iter().zip(c).filter(|&(&o, &b)| u8::from(o > 0.0) != b).count(),
            None => w.soft.iter().filter(|&&o| o > 0.0).count(),
        } as u64;
        Counts {
            bit_errors: errors,
            bit_errors_sq: errors * errors,
            frame_errors: u64::from(errors > 0),
        }
    }
}

/// Simulates every channel point in `specs` until `stop` is satisfied.
pub fn monte_carlo(
    code: &ParityCheck,
    specs: &[ChannelSpec],
    cfg: &BpConfig,
    stop: &StopRule,
    mode: EvalMode,
    seed: u64,
) -> Result<EvalReport> {
    cfg.validate()?;
    stop.validate()?;
    let generator = match mode {
        EvalMode::ZeroCodeword => None,
        EvalMode::RandomCodewords => Some(gf2::generator_from(code.matrix())?),
    };
    let sim = Simulator {
        n: code.n(),
        graph: Tanner::new(code.matrix()),
        generator,
        cfg,
    };
    let mut points = Vec::with_capacity(specs.len());
    for spec in specs {
        let sigma = spec.sigma()?;
        let pseed = point_seed(seed, spec);
        let mut frames = 0u64;
        let mut total = Counts::default();
        let exhausted = loop {
            if frames >= stop.min_frames && total.frame_errors >= stop.min_frame_errors {
                break false;
            }
            if frames >= stop.max_frames {
                break true;
            }
            let batch = stop.batch_frames.min(stop.max_frames - frames);
            let counts = (frames..frames + batch)
                .into_par_iter()
                .map_init(|| sim.work(), |w, f| sim.frame(spec, sigma, pseed, f, w))
                .reduce(Counts::default, Counts::add);
            total = total.add(counts);
            frames += batch;
        };
        log::info!(
            "{} {:.2} dB: {} frames, {} bit errors, {} frame errors",
            spec.family,
            spec.ebn0_db,
            frames,
            total.bit_errors,
            total.frame_errors
        );
        points.push(EvalPoint::from_counts(
            spec,
            cfg.variant,
            cfg.iterations,
            code.n(),
            frames,
            total.bit_errors,
            total.bit_errors_sq,
            total.frame_errors,
            exhausted,
        ));
    }
    Ok(EvalReport { points })
}

/// Bit errors of uncoded BPSK over `frames` frames of `n` bits.
pub fn simulate_uncoded(spec: &ChannelSpec, frames: u64, n: usize, seed: u64) -> Result<(u64, u64)> {
    let sigma = spec.sigma()?;
    let pseed = point_seed(seed, spec);
    let errors = (0..frames)
        .into_par_iter()
        .map_init(
            || (Array1::<f64>::ones(n), Array1::<f64>::zeros(n), Array1::<f64>::zeros(n), Array1::<f64>::zeros(n)),
            |(s, y, h, l), f| {
                let mut rng = frame_rng(pseed, f);
                let fading = (spec.family == ChannelFamily::RayleighFading).then_some(h.view_mut());
                transmit_frame(s.view(), spec, sigma, &mut rng, y.view_mut(), fading);
                let fading = (spec.family == ChannelFamily::RayleighFading).then_some(h.view());
                llr_frame(y.view(), fading, spec, sigma, l.view_mut());
                l.iter().filter(|&&x| x > 0.0).count() as u64
            },
        )
        .sum();
    Ok((errors, frames * n as u64))
}

/// Summary of the SNR gain of one BER curve over another.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainStats {
    pub mean_db: f64,
    pub std_db: f64,
    pub min_db: f64,
    pub max_db: f64,
}

pub const GAIN_LEVELS: usize = 50;

/// `(snr, log10 ber)` pairs sorted by SNR, skipping error-free points.
fn curve(report: &EvalReport) -> Result<Vec<(f64, f64)>> {
    if let Some(first) = report.points.first() {
        let mixed = report
            .points
            .iter()
            .any(|p| p.channel != first.channel || p.variant != first.variant || p.iters != first.iters);
        if mixed {
            return Err(Error::InvalidParams("report mixes channels, variants or iteration counts".into()));
        }
    }
    let mut pts: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter(|p| p.ber > 0.0)
        .map(|p| (p.snr_db, p.ber.log10()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(Error::InvalidParams("a BER curve needs at least two points with errors".into()));
    }
    Ok(pts)
}

/// Lowest SNR at which the piecewise-linear curve reaches `level`.
fn snr_at(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
        if level < lo || level > hi {
            return None;
        }
        if y0 == y1 {
            return Some(x0);
        }
        Some(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// SNR gain of `ours` over `base` across their common BER range.
///
/// Both curves are interpolated linearly in `log10(BER)`; the gain at each of
/// [`GAIN_LEVELS`] evenly spaced levels is `snr_base - snr_ours`.
pub fn db_gain(base: &EvalReport, ours: &EvalReport) -> Result<GainStats> {
    let (a, b) = (curve(base)?, curve(ours)?);
    let range = |c: &[(f64, f64)]| {
        c.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)))
    };
    let (alo, ahi) = range(&a);
    let (blo, bhi) = range(&b);
    let (lo, hi) = (alo.max(blo), ahi.min(bhi));
    if lo > hi {
        return Err(Error::NoOverlap);
    }
    let gains: Vec<f64> = (0..GAIN_LEVELS)
        .map(|i| {
            let level = if GAIN_LEVELS == 1 { lo } else { lo + (hi - lo) * i as f64 / (GAIN_LEVELS - 1) as f64 };
            let (sa, sb) = (snr_at(&a, level), snr_at(&b, level));
            sa.zip(sb).map(|(x, y)| x - y).ok_or(Error::NoOverlap)
        })
        .collect::<Result<_>>()?;
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gains.len() as f64;
    Ok(GainStats {
        mean_db: mean,
        std_db: var.sqrt(),
        min_db: gains.iter().copied().fold(f64::INFINITY, f64::min),
        max_db: gains.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::parse(line, format!("{kind:?}")),
    }
}

impl EvalReport {
    pub fn merge(&mut self, other: EvalReport) {
        self.points.extend(other.points);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.points.is_empty() {
            wtr.write_record(CSV_HEADER).map_err(csv_error)?;
        }
        for p in &self.points {
            wtr.serialize(p).map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_error)?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::parse(1, format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let points = rdr.deserialize().collect::<std::result::Result<Vec<EvalPoint>, _>>().map_err(csv_error)?;
        Ok(EvalReport { points })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Mean BER over all points.
    pub fn mean_ber(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().map(|p| p.ber).sum::<f64>() / self.points.len() as f64
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "channel",
    "snr_db",
    "variant",
    "iters",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "neg_ln_ber",
    "bit_errors_sq",
    "budget_exhausted",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(points: &[(f64, f64)]) -> EvalReport {
        EvalReport {
            points: points
                .iter()
                .map(|&(snr, ber)| EvalPoint {
                    channel: ChannelFamily::Awgn,
                    snr_db: snr,
                    variant: BpVariant::SumProduct,
                    iters: 5,
                    frames: 1000,
                    bit_errors: (ber * 32_000.0).round() as u64,
                    frame_errors: 10,
                    ber,
                    fer: 0.01,
                    neg_ln_ber: Some(-ber.ln()),
                    bit_errors_sq: 0,
                    budget_exhausted: false,
                })
                .collect(),
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(10, 1000, 1.96);
        assert!(lo < 0.01 && 0.01 < hi);
        assert_eq!(wilson_interval(0, 100, 1.96).0, 0.0);
        assert!(wilson_interval(0, 100, 1.96).1 > 0.0);
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
        assert!((uncoded_bpsk_ber(0.0) - 0.078_649_603_525_142_8).abs() < 1e-10);
    }

    #[test]
    fn gain_identity_and_shift() {
        let base = synthetic(&[(3.0, 1e-2), (4.0, 2e-3), (5.0, 3e-4), (6.0, 2e-5)]);
        let g = db_gain(&base, &base).unwrap();
        assert_eq!((g.mean_db, g.min_db, g.max_db), (0.0, 0.0, 0.0));
        let shifted = synthetic(&[(2.0, 1e-2), (3.0, 2e-3), (4.0, 3e-4), (5.0, 2e-5)]);
        let g = db_gain(&base, &shifted).unwrap();
        assert!((g.mean_db - 1.0).abs() < 1e-12 && (g.min_db - 1.0).abs() < 1e-12 && (g.max_db - 1.0).abs() < 1e-12);
        assert!(g.std_db < 1e-12);
    }

    #[test]
    fn gain_with_crossing_curves() {
        // base: log10 BER falls from -1 to -3 over 0..2 dB;
        // ours: from -1 at 0.5 dB to -3 at 1.5 dB (steeper, crosses at -2)
        let base = synthetic(&[(0.0, 1e-1), (2.0, 1e-3)]);
        let ours = synthetic(&[(0.5, 1e-1), (1.5, 1e-3)]);
        let g = db_gain(&base, &ours).unwrap();
        // at level -1: 0 - 0.5 = -0.5; at level -3: 2 - 1.5 = +0.5; linear in between
        assert!((g.min_db + 0.5).abs() < 1e-9);
        assert!((g.max_db - 0.5).abs() < 1e-9);
        assert!(g.mean_db.abs() < 1e-9);
        assert!(g.min_db < 0.0 && g.max_db > 0.0);
    }

    #[test]
    fn gain_without_overlap() {
        let a = synthetic(&[(0.0, 1e-1), (1.0, 1e-2)]);
        let b = synthetic(&[(5.0, 1e-4), (6.0, 1e-5)]);
        assert!(matches!(db_gain(&a, &b), Err(Error::NoOverlap)));
        let single = synthetic(&[(0.0, 1e-1)]);
        assert!(db_gain(&single, &a).is_err());
    }

    #[test]
    fn csv_golden_and_round_trip() {
        let spec = ChannelSpec::awgn(4.0, 0.5);
        let report = EvalReport {
            points: vec![
                EvalPoint::from_counts(&spec, BpVariant::SumProduct, 5, 8, 100, 16, 40, 7, false),
                EvalPoint::from_counts(&ChannelSpec::fading(6.5, 0.5), BpVariant::MinSum, 15, 8, 50, 0, 0, 0, true),
            ],
        };
        let csv = report.to_csv_string().unwrap();
        let golden = "channel,snr_db,variant,iters,frames,bit_errors,frame_errors,ber,fer,neg_ln_ber,bit_errors_sq,budget_exhausted\n\
                      awgn,4.0,sumproduct,5,100,16,7,0.02,0.07,3.912023005428146,40,false\n\
                      fading,6.5,minsum,15,50,0,0,0.0,0.0,,0,true\n";
        assert_eq!(csv, golden);
        assert_eq!(EvalReport::read_csv(csv.as_bytes()).unwrap(), report);
        assert_eq!(EvalReport::from_json(&report.to_json().unwrap()).unwrap(), report);
    }

    #[test]
    fn csv_errors() {
        let bad = "channel,snr_db,variant,iters,frames,bit_errors,frame_errors,ber,fer,neg_ln_ber,bit_errors_sq,budget_exhausted\nawgn,4.0,sumproduct,5\n";
        assert!(matches!(EvalReport::read_csv(bad.as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(EvalReport::read_csv("a,b\n1,2\n".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn hamming_at_high_snr_is_error_free() {
        let code = ParityCheck::hamming_7_4();
        let stop = StopRule {
            min_frames: 100_000,
            min_frame_errors: 50,
            max_frames: 100_000,
            batch_frames: 20_000,
        };
        let r = monte_carlo(&code, &[ChannelSpec::awgn(20.0, code.rate())], &BpConfig::default(), &stop, EvalMode::ZeroCodeword, 1).unwrap();
        let p = &r.points[0];
        assert_eq!((p.frames, p.bit_errors), (100_000, 0));
        assert!(p.budget_exhausted && p.neg_ln_ber.is_none());
    }

    #[test]
    fn stopping_rule_and_determinism() {
        let code = ParityCheck::hamming_7_4();
        let stop = StopRule {
            min_frames: 2_000,
            min_frame_errors: 50,
            max_frames: 1_000_000,
            batch_frames: 1_000,
        };
        let spec = ChannelSpec::awgn(2.0, code.rate());
        let a = monte_carlo(&code, &[spec], &BpConfig::default(), &stop, EvalMode::ZeroCodeword, 9).unwrap();
        let p = &a.points[0];
        assert!(p.frames >= 2_000 && p.frame_errors >= 50 && !p.budget_exhausted);
        assert_eq!(p.frames % 1_000, 0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| monte_carlo(&code, &[spec], &BpConfig::default(), &stop, EvalMode::ZeroCodeword, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn random_mode_needs_full_rank() {
        let code = ParityCheck::from_rows(&[[1u8, 1, 0], [1, 1, 0]]).unwrap();
        let r = monte_carlo(&code, &[ChannelSpec::awgn(3.0, 0.5)], &BpConfig::default(), &StopRule::default(), EvalMode::RandomCodewords, 0);
        assert!(matches!(r, Err(Error::RankDeficient { .. })));
    }
}
