//! Code optimisation by line search over sign flips.
//!
//! The parity-check matrix is parametrised by real values `omega` with
//! `H = bin(omega)`. Each iteration draws a batch of noisy all-zero frames,
//! takes the straight-through gradient of the decoding loss, and moves
//! `omega` along the negative gradient by the step that minimises the loss of
//! the binarised matrix. The only steps worth trying are those at which some
//! entry of `omega` crosses zero, so the search is over a finite grid.

use std::io::Write;
use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{llr_frame, transmit_frame, ChannelFamily, ChannelSpec};
use crate::code::ParityCheck;
use crate::decoder::{BpConfig, BpVariant};
use crate::error::{Error, Result};
use crate::eval::{monte_carlo, EvalMode, EvalReport, StopRule};
use crate::gf2::{self, BitMatrix};
use crate::grad::{binary_decode_loss, bin_matrix, evaluation_point, grad_wrt_h, omega_from, ste_mask, LossConfig, LossMode};
use crate::rng::{frame_rng, mix};

/// Factor applied to every candidate step so the targeted entry crosses zero
/// instead of landing on it.
pub const STEP_MARGIN: f64 = 1.0 + 1e-6;

/// Frames drawn before a low acceptance rate counts as starvation.
const STARVATION_MIN_DRAWN: u64 = 100_000;
const STARVATION_RATE: f64 = 1e-4;

const TAG_BATCH: u64 = 1;
const TAG_LINE_SEARCH_BATCH: u64 = 2;
const TAG_SOFT_H: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub batch_size: usize,
    /// Eb/N0 values in dB; each micro-batch uses one of them, drawn uniformly.
    pub snr_set: Vec<f64>,
    pub grid_limit: usize,
    pub bp_train_iters: usize,
    pub loss_mode: LossMode,
    pub channel: ChannelFamily,
    /// Keep only frames whose channel hard decision is not a codeword.
    pub syndrome_filter: bool,
    /// Freeze the identity block of a systematic `[I | P]` matrix.
    pub systematic_mask: bool,
    pub l1_lambda: f64,
    pub soft_h_eps: Option<f64>,
    /// Skip line-search candidates that lose rank.
    pub rank_guard: bool,
    pub seed: u64,
    /// Frames per micro-batch; all frames of a micro-batch share one SNR.
    pub micro_batch: usize,
    /// Evaluate line-search candidates on a second, independent batch.
    pub fresh_batch_line_search: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 20,
            batch_size: 200_000,
            snr_set: vec![3.0, 4.0, 5.0, 6.0, 7.0],
            grid_limit: 50,
            bp_train_iters: 5,
            loss_mode: LossMode::FinalIteration,
            channel: ChannelFamily::Awgn,
            syndrome_filter: true,
            systematic_mask: false,
            l1_lambda: 0.0,
            soft_h_eps: None,
            rank_guard: true,
            seed: 0x5EED,
            micro_batch: 1000,
            fresh_batch_line_search: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_limit == 0 || self.batch_size == 0 || self.micro_batch == 0 || self.bp_train_iters == 0 {
            return Err(Error::InvalidParams(
                "grid_limit, batch_size, micro_batch and bp_train_iters must be positive".into(),
            ));
        }
        if self.snr_set.is_empty() || self.snr_set.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParams("snr_set must be a non-empty list of finite values".into()));
        }
        if !(self.l1_lambda >= 0.0 && self.l1_lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("l1_lambda {} must be non-negative", self.l1_lambda)));
        }
        self.loss_config(0).validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn loss_config(&self, iter: u64) -> LossConfig {
        LossConfig {
            bp: BpConfig::new(self.bp_train_iters, BpVariant::SumProduct),
            loss_mode: self.loss_mode,
            soft_h_eps: self.soft_h_eps,
            seed: mix(mix(self.seed, TAG_SOFT_H), iter),
        }
    }
}

/// A training batch of LLRs.
#[derive(Clone, Debug)]
pub struct TrainingBatch {
    pub llr: Array2<f64>,
    /// Frames generated, including those rejected by the filter.
    pub drawn: u64,
}

fn has_nonzero_syndrome(rows: &[Vec<usize>], llr: &[f64]) -> bool {
    rows.iter()
        .any(|r| r.iter().fold(false, |acc, &v| acc ^ (llr[v] > 0.0)))
}

/// Draws `cfg.batch_size` LLR frames of the all-zero codeword for the code
/// `h`; `stream` selects an independent set of random streams.
pub fn sample_training_batch(h: &BitMatrix, cfg: &TrainConfig, stream: u64) -> Result<TrainingBatch> {
    cfg.validate()?;
    let n = h.cols();
    let rate = 1.0 - h.rows() as f64 / n as f64;
    let rows: Vec<Vec<usize>> = (0..h.rows()).map(|r| h.row_support(r)).collect();
    let base = mix(cfg.seed, stream);
    let round = rayon::current_num_threads().max(1) * 4;
    let micro = |index: u64| -> Result<(Vec<f64>, u64)> {
        let seed = mix(base, index);
        let snr = cfg.snr_set[frame_rng(seed, 0).random_range(0..cfg.snr_set.len())];
        let spec = ChannelSpec::new(cfg.channel, snr, rate);
        let sigma = spec.sigma()?;
        let symbols = Array1::<f64>::ones(n);
        let mut y = Array1::<f64>::zeros(n);
        let mut amp = Array1::<f64>::zeros(n);
        let mut l = Array1::<f64>::zeros(n);
        let mut kept = Vec::with_capacity(cfg.micro_batch * n);
        for f in 0..cfg.micro_batch as u64 {
            let mut rng = frame_rng(seed, f + 1);
            let fading = (cfg.channel == ChannelFamily::RayleighFading).then_some(amp.view_mut());
            transmit_frame(symbols.view(), &spec, sigma, &mut rng, y.view_mut(), fading);
            let fading = (cfg.channel == ChannelFamily::RayleighFading).then_some(amp.view());
            llr_frame(y.view(), fading, &spec, sigma, l.view_mut());
            let frame = l.as_slice().expect("contiguous");
            if !cfg.syndrome_filter || has_nonzero_syndrome(&rows, frame) {
                kept.extend_from_slice(frame);
            }
        }
        Ok((kept, cfg.micro_batch as u64))
    };

    let target = cfg.batch_size * n;
    let mut data = Vec::with_capacity(target);
    let mut drawn = 0u64;
    let mut next = 0u64;
    while data.len() < target {
        let parts = (next..next + round as u64)
            .into_par_iter()
            .map(micro)
            .collect::<Result<Vec<_>>>()?;
        next += round as u64;
        for (kept, d) in parts {
            if data.len() >= target {
                break;
            }
            drawn += d;
            let take = kept.len().min(target - data.len());
            data.extend_from_slice(&kept[..take]);
            let accepted = data.len() / n.max(1);
            if drawn >= STARVATION_MIN_DRAWN && (accepted as f64) < STARVATION_RATE * drawn as f64 {
                return Err(Error::FilterStarvation {
                    accepted,
                    drawn: drawn as usize,
                });
            }
        }
    }
    let llr = Array2::from_shape_vec((cfg.batch_size, n), data).expect("batch shape");
    Ok(TrainingBatch { llr, drawn })
}

/// Step sizes at which an entry of `omega` changes sign when moving along
/// `-g`, ascending, without exact duplicates, at most `limit` of them.
pub fn candidate_steps(omega: ArrayView2<f64>, g: ArrayView2<f64>, limit: usize) -> Result<Vec<f64>> {
    if omega.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            context: "gradient vs parameters",
            expected: omega.len(),
            got: g.len(),
        });
    }
    let mut steps: Vec<f64> = omega
        .iter()
        .zip(g.iter())
        .filter(|&(_, &gi)| gi != 0.0)
        .map(|(&w, &gi)| w / gi)
        .filter(|s| *s > 0.0 && s.is_finite())
        .collect();
    steps.sort_by(f64::total_cmp);
    steps.dedup();
    steps.truncate(limit);
    Ok(steps)
}

#[derive(Clone, Debug)]
pub struct LineSearchOutcome {
    /// Accepted step; 0 when no candidate beat the current matrix.
    pub lambda: f64,
    /// Position of the accepted step in the candidate list.
    pub lambda_index: Option<usize>,
    pub loss: f64,
    pub baseline_loss: f64,
    pub candidates: usize,
    pub rank_skipped: usize,
    pub omega_next: Array2<f64>,
}

fn regularized_loss(llr: ArrayView2<f64>, h: &BitMatrix, loss: &LossConfig, l1: f64) -> Result<f64> {
    let mut value = binary_decode_loss(llr, h, loss)?;
    if l1 > 0.0 {
        value += l1 * h.count_ones() as f64;
    }
    Ok(value)
}

/// Loss of the binarised matrix after each candidate step, keeping the best
/// one only if it strictly improves on the current matrix.
///
/// `required_rank` enables the rank guard.
pub fn line_search(
    omega: ArrayView2<f64>,
    g: ArrayView2<f64>,
    llr: ArrayView2<f64>,
    cfg: &TrainConfig,
    required_rank: Option<usize>,
) -> Result<LineSearchOutcome> {
    let loss_cfg = cfg.loss_config(0);
    let steps = candidate_steps(omega, g, cfg.grid_limit)?;
    let baseline = regularized_loss(llr, &bin_matrix(omega), &loss_cfg, cfg.l1_lambda)?;
    let (mut best, mut best_loss, mut skipped) = (None, baseline, 0);
    for (i, &s) in steps.iter().enumerate() {
        let moved = &omega - &(&g * (s * STEP_MARGIN));
        let h = bin_matrix(moved.view());
        if required_rank.is_some_and(|r| gf2::rank(&h) < r) {
            skipped += 1;
            continue;
        }
        let value = regularized_loss(llr, &h, &loss_cfg, cfg.l1_lambda)?;
        if value < best_loss {
            best = Some(i);
            best_loss = value;
        }
    }
    let (lambda, omega_next) = match best {
        Some(i) => (steps[i], &omega - &(&g * (steps[i] * STEP_MARGIN))),
        None => (0.0, omega.to_owned()),
    };
    Ok(LineSearchOutcome {
        lambda,
        lambda_index: best,
        loss: best_loss,
        baseline_loss: baseline,
        candidates: steps.len(),
        rank_skipped: skipped,
        omega_next,
    })
}

/// One row of the optimisation trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Loss of the accepted matrix on this iteration's batch.
    pub loss: f64,
    /// Loss of the matrix the iteration started from, on the same batch.
    pub baseline_loss: f64,
    pub lambda: f64,
    pub lambda_index: Option<usize>,
    pub candidates: usize,
    pub flipped: usize,
    pub density: f64,
    pub rank: usize,
    pub rank_skipped: usize,
    pub frames_drawn: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl TrainTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.records.is_empty() {
            wtr.write_record(TRACE_HEADER).map_err(|e| Error::Unsupported(e.to_string()))?;
        }
        for r in &self.records {
            wtr.serialize(r).map_err(|e| Error::Unsupported(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

pub const TRACE_HEADER: [&str; 12] = [
    "iteration",
    "loss",
    "baseline_loss",
    "lambda",
    "lambda_index",
    "candidates",
    "flipped",
    "density",
    "rank",
    "rank_skipped",
    "frames_drawn",
    "wall_time_s",
];

fn is_systematic(h: &BitMatrix) -> bool {
    let m = h.rows();
    (0..m).all(|r| (0..m).all(|c| h.get(r, c) == (r == c)))
}

fn count_flips(a: &BitMatrix, b: &BitMatrix) -> usize {
    let (m, n) = (a.rows(), a.cols());
    (0..m).map(|r| (0..n).filter(|&c| a.get(r, c) != b.get(r, c)).count()).sum()
}

/// Runs the optimiser from `h0`.
pub fn optimize(h0: &ParityCheck, cfg: &TrainConfig) -> Result<(ParityCheck, TrainTrace)> {
    cfg.validate()?;
    let (m, n) = (h0.checks(), h0.n());
    let required_rank = if cfg.rank_guard {
        let r = gf2::rank(h0.matrix());
        if r < m {
            return Err(Error::RankDeficient { rank: r, required: m });
        }
        Some(m)
    } else {
        None
    };
    if cfg.systematic_mask && !is_systematic(h0.matrix()) {
        return Err(Error::InvalidParams("systematic mask needs a matrix of the form [I | P]".into()));
    }

    let start = Instant::now();
    let mut omega = omega_from(h0.matrix());
    let mut current = h0.matrix().clone();
    let mut trace = TrainTrace::default();
    for iter in 0..cfg.max_iters {
        let batch = sample_training_batch(&current, cfg, mix(TAG_BATCH, iter as u64))?;
        let loss_cfg = cfg.loss_config(iter as u64);
        let at = evaluation_point(omega.view(), &loss_cfg);
        let mut gh = grad_wrt_h(batch.llr.view(), at.view(), &loss_cfg)?;
        if cfg.l1_lambda > 0.0 {
            gh += cfg.l1_lambda;
        }
        if cfg.systematic_mask {
            gh.slice_mut(s![.., ..m]).fill(0.0);
        }
        let g = gh * ste_mask(omega.view());

        let search_batch = if cfg.fresh_batch_line_search {
            sample_training_batch(&current, cfg, mix(TAG_LINE_SEARCH_BATCH, iter as u64))?.llr
        } else {
            batch.llr
        };
        let out = line_search(omega.view(), g.view(), search_batch.view(), cfg, required_rank)?;
        let next = bin_matrix(out.omega_next.view());
        let flipped = count_flips(&current, &next);
        trace.records.push(TraceRecord {
            iteration: iter,
            loss: out.loss,
            baseline_loss: out.baseline_loss,
            lambda: out.lambda,
            lambda_index: out.lambda_index,
            candidates: out.candidates,
            flipped,
            density: next.count_ones() as f64 / (m * n) as f64,
            rank: gf2::rank(&next),
            rank_skipped: out.rank_skipped,
            frames_drawn: batch.drawn,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "iteration {iter}: loss {:.6} -> {:.6}, lambda {:.3e}, {flipped} flips",
            out.baseline_loss,
            out.loss,
            out.lambda
        );
        omega = out.omega_next;
        current = next;
        if out.lambda_index.is_none() {
            trace.converged = true;
            break;
        }
    }
    Ok((ParityCheck::new(current)?, trace))
}

/// Hyperparameter grid for [`sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    /// Lowest training SNR; the training set keeps the base values at or
    /// above it.
    pub snr_lower_bounds: Vec<f64>,
    pub syndrome_filter: Vec<bool>,
    pub soft_h_eps: Vec<Option<f64>>,
    /// Largest number of configurations run; larger products are subsampled.
    pub max_configs: usize,
    pub validation_snrs: Vec<f64>,
    pub stop: StopRule,
    pub eval_iters: usize,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            snr_lower_bounds: vec![3.0, 4.0, 5.0],
            syndrome_filter: vec![true, false],
            soft_h_eps: vec![None, Some(1e-7)],
            max_configs: 15,
            validation_snrs: vec![4.0, 5.0, 6.0],
            stop: StopRule::default(),
            eval_iters: 5,
            seed: 0x5EED,
        }
    }
}

impl SweepGrid {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Training configurations derived from `base`, in grid order.
    pub fn configs(&self, base: &TrainConfig) -> Result<Vec<(SweepPoint, TrainConfig)>> {
        if self.snr_lower_bounds.is_empty() || self.syndrome_filter.is_empty() || self.soft_h_eps.is_empty() {
            return Err(Error::InvalidParams("every sweep axis needs at least one value".into()));
        }
        if self.max_configs == 0 || self.validation_snrs.is_empty() {
            return Err(Error::InvalidParams("sweep needs configurations and validation SNRs".into()));
        }
        let mut all = Vec::new();
        for &u in &self.snr_lower_bounds {
            for &filter in &self.syndrome_filter {
                for &eps in &self.soft_h_eps {
                    let point = SweepPoint {
                        index: all.len(),
                        snr_lower_bound: u,
                        syndrome_filter: filter,
                        soft_h_eps: eps,
                    };
                    let mut cfg = base.clone();
                    cfg.snr_set = base.snr_set.iter().copied().filter(|&s| s >= u).collect();
                    cfg.syndrome_filter = filter;
                    cfg.soft_h_eps = eps;
                    cfg.validate()?;
                    all.push((point, cfg));
                }
            }
        }
        if all.len() > self.max_configs {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let mut keep = sample(&mut rng, all.len(), self.max_configs).into_vec();
            keep.sort_unstable();
            let mut it = keep.into_iter().peekable();
            all = all
                .into_iter()
                .enumerate()
                .filter_map(|(i, c)| (it.peek() == Some(&i)).then(|| {
                    it.next();
                    c
                }))
                .collect();
        }
        Ok(all)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Position in the full grid product.
    pub index: usize,
    pub snr_lower_bound: f64,
    pub syndrome_filter: bool,
    pub soft_h_eps: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub point: SweepPoint,
    pub mean_ber: f64,
    pub code: ParityCheck,
    pub trace: TrainTrace,
    pub validation: EvalReport,
}

/// Optimises `h0` under every grid configuration, validates the results on
/// the same noise realisations, and ranks them by mean BER, best first.
pub fn sweep(h0: &ParityCheck, base: &TrainConfig, grid: &SweepGrid) -> Result<Vec<SweepEntry>> {
    let configs = grid.configs(base)?;
    let bp = BpConfig::new(grid.eval_iters, BpVariant::SumProduct);
    let mut entries = Vec::with_capacity(configs.len());
    for (point, cfg) in configs {
        let (code, trace) = optimize(h0, &cfg)?;
        let specs: Vec<ChannelSpec> = grid
            .validation_snrs
            .iter()
            .map(|&s| ChannelSpec::new(cfg.channel, s, code.rate()))
            .collect();
        let validation = monte_carlo(&code, &specs, &bp, &grid.stop, EvalMode::ZeroCodeword, grid.seed)?;
        entries.push(SweepEntry {
            point,
            mean_ber: validation.mean_ber(),
            code,
            trace,
            validation,
        });
    }
    entries.sort_by(|a, b| a.mean_ber.total_cmp(&b.mean_ber).then(a.point.index.cmp(&b.point.index)));
    Ok(entries)
}

#[derive(Serialize)]
struct RankingRow {
    rank: usize,
    config: usize,
    snr_lower_bound: f64,
    syndrome_filter: bool,
    soft_h_eps: Option<f64>,
    mean_ber: f64,
    iterations: usize,
    final_loss: Option<f64>,
    density: f64,
}

/// Ranking table, one row per configuration in ranked order.
pub fn write_ranking_csv<W: Write>(entries: &[SweepEntry], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for (rank, e) in entries.iter().enumerate() {
        let h = e.code.matrix();
        let row = RankingRow {
            rank: rank + 1,
            config: e.point.index,
            snr_lower_bound: e.point.snr_lower_bound,
            syndrome_filter: e.point.syndrome_filter,
            soft_h_eps: e.point.soft_h_eps,
            mean_ber: e.mean_ber,
            iterations: e.trace.records.len(),
            final_loss: e.trace.records.last().map(|r| r.loss),
            density: h.count_ones() as f64 / (h.rows() * h.cols()) as f64,
        };
        wtr.serialize(row).map_err(|e| Error::Unsupported(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::random_systematic;
    use ndarray::array;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            max_iters: 3,
            batch_size: 300,
            micro_batch: 100,
            grid_limit: 10,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn candidate_steps_by_hand() {
        let omega = array![[2.0, -1.0], [4.0, 1.0]];
        let g = array![[1.0, -2.0], [-1.0, 2.0]];
        assert_eq!(candidate_steps(omega.view(), g.view(), 50).unwrap(), vec![0.5, 2.0]);
        assert_eq!(candidate_steps(omega.view(), g.view(), 1).unwrap(), vec![0.5]);
        let away = array![[-1.0, 1.0], [-1.0, 1.0]];
        let g = array![[1.0, -1.0], [1.0, -1.0]];
        assert!(candidate_steps(away.view(), g.view(), 50).unwrap().is_empty());
        let zero = Array2::zeros((2, 2));
        assert!(candidate_steps(omega.view(), zero.view(), 50).unwrap().is_empty());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = TrainConfig::default();
        assert_eq!(TrainConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        let partial = TrainConfig::from_json(r#"{"max_iters": 3, "soft_h_eps": 1e-7}"#).unwrap();
        assert_eq!(partial.max_iters, 3);
        assert_eq!(partial.batch_size, 200_000);
        assert!(TrainConfig::from_json(r#"{"max_iter": 3}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"grid_limit": 0}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"snr_set": []}"#).is_err());
    }

    #[test]
    fn batch_without_filter_is_exact() {
        let code = ParityCheck::hamming_7_4();
        let cfg = TrainConfig {
            syndrome_filter: false,
            batch_size: 250,
            micro_batch: 100,
            ..TrainConfig::default()
        };
        let b = sample_training_batch(code.matrix(), &cfg, 0).unwrap();
        assert_eq!(b.llr.dim(), (250, 7));
        assert_eq!(b.drawn, 300);
        let again = sample_training_batch(code.matrix(), &cfg, 0).unwrap();
        assert_eq!(b.llr, again.llr);
    }

    #[test]
    fn filtered_frames_have_nonzero_syndrome() {
        let code = ParityCheck::hamming_7_4();
        let b = sample_training_batch(code.matrix(), &small_cfg(), 4).unwrap();
        assert_eq!(b.llr.nrows(), 300);
        assert!(b.drawn > 300);
        for row in b.llr.outer_iter() {
            let word: Vec<u8> = row.iter().map(|&x| u8::from(x > 0.0)).collect();
            assert!(!gf2::is_codeword(code.matrix(), &word).unwrap());
        }
    }

    #[test]
    fn starvation_at_high_snr() {
        let code = ParityCheck::hamming_7_4();
        let cfg = TrainConfig {
            snr_set: vec![20.0],
            batch_size: 10,
            ..TrainConfig::default()
        };
        assert!(matches!(
            sample_training_batch(code.matrix(), &cfg, 0),
            Err(Error::FilterStarvation { .. })
        ));
    }

    #[test]
    fn zero_iterations_return_input() {
        let code = random_systematic(12, 6, 0.3, 1).unwrap();
        let cfg = TrainConfig {
            max_iters: 0,
            ..small_cfg()
        };
        let (h, trace) = optimize(&code, &cfg).unwrap();
        assert_eq!(h, code);
        assert!(trace.records.is_empty());
    }

    #[test]
    fn accepted_steps_improve_and_flip() {
        let code = random_systematic(16, 8, 0.3, 2).unwrap();
        let (learned, trace) = optimize(&code, &small_cfg()).unwrap();
        for r in &trace.records {
            assert!(r.loss <= r.baseline_loss);
            if r.lambda > 0.0 {
                assert!(r.flipped >= 1);
            } else {
                assert_eq!(r.flipped, 0);
            }
            assert_eq!(r.rank, 8);
        }
        assert!(learned.is_full_rank());
    }

    #[test]
    fn systematic_block_is_frozen() {
        let code = random_systematic(16, 8, 0.3, 5).unwrap();
        let cfg = TrainConfig {
            systematic_mask: true,
            ..small_cfg()
        };
        let (learned, _) = optimize(&code, &cfg).unwrap();
        assert!(is_systematic(learned.matrix()));
        let not_sys = ParityCheck::from_rows(&[[0u8, 1, 1, 0], [1, 0, 0, 1]]).unwrap();
        assert!(optimize(&not_sys, &cfg).is_err());
    }

    #[test]
    fn zero_l1_matches_unregularized() {
        let code = random_systematic(16, 8, 0.3, 3).unwrap();
        let a = optimize(&code, &small_cfg()).unwrap();
        let cfg = TrainConfig {
            l1_lambda: 0.0,
            ..small_cfg()
        };
        let b = optimize(&code, &cfg).unwrap();
        assert_eq!(a.0, b.0);
        let strip = |t: &TrainTrace| t.records.iter().map(|r| (r.loss, r.lambda, r.flipped)).collect::<Vec<_>>();
        assert_eq!(strip(&a.1), strip(&b.1));
    }

    #[test]
    fn rank_guard_rejects_deficient_start() {
        let code = ParityCheck::from_rows(&[[1u8, 1, 0, 0], [1, 1, 0, 0]]).unwrap();
        assert!(matches!(optimize(&code, &small_cfg()), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn grid_subsampling_is_seeded() {
        let base = TrainConfig::default();
        let grid = SweepGrid {
            max_configs: 5,
            ..SweepGrid::default()
        };
        let a = grid.configs(&base).unwrap();
        let b = grid.configs(&base).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a.iter().map(|p| p.0).collect::<Vec<_>>(), b.iter().map(|p| p.0).collect::<Vec<_>>());
        assert!(a.windows(2).all(|w| w[0].0.index < w[1].0.index));
        let full = SweepGrid::default().configs(&base).unwrap();
        assert_eq!(full.len(), 12);
        assert_eq!(full[0].1.snr_set, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(full[11].1.snr_set, vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn sweep_ranks_ascending() {
        let code = random_systematic(12, 6, 0.3, 8).unwrap();
        let base = TrainConfig {
            max_iters: 2,
            batch_size: 200,
            micro_batch: 100,
            grid_limit: 5,
            ..TrainConfig::default()
        };
        let grid = SweepGrid {
            snr_lower_bounds: vec![3.0, 5.0],
            syndrome_filter: vec![true],
            soft_h_eps: vec![None],
            stop: StopRule {
                min_frames: 2000,
                min_frame_errors: 1,
                max_frames: 2000,
                batch_frames: 1000,
            },
            ..SweepGrid::default()
        };
        let ranked = sweep(&code, &base, &grid).unwrap();
        assert_eq!(ranked.len(), 2);
        assert!(ranked[0].mean_ber <= ranked[1].mean_ber);
        let mut buf = Vec::new();
        write_ranking_csv(&ranked, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rank,config,snr_lower_bound"));
        assert_eq!(text.lines().count(), 3);
    }
}
