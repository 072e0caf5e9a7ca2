//! Belief propagation decoders.
//!
//! Two implementations of the same flooding schedule are provided:
//!
//! * [`bp_decode`] works on the complete variable/check graph and masks
//!   messages with a real-valued `H`. It is the form the gradient module
//!   differentiates.
//! * [`edge_bp_decode`] and [`min_sum_decode`] pass messages along the edges
//!   of a binary Tanner graph only. They are the production decoders and the
//!   reference against which the tensor form is tested.
//!
//! Conventions shared by all decoders:
//!
//! * LLRs are `log P(1) / P(0)`; a decoded bit is 1 iff its output LLR is
//!   strictly positive.
//! * The check-node argument of `atanh` is clamped to `±(1 - clamp_eps)`.
//! * A check with a single neighbour sends a zero message.

mod edge;
mod tensor;

pub use edge::{check_update_min_sum, check_update_sum_product, EdgeWork, Tanner};
pub use tensor::bp_decode;
pub(crate) use tensor::{row_active, TensorTape, CLAMPED, KIND_DIV, KIND_OMIT};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::ParityCheck;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BpVariant {
    #[default]
    SumProduct,
    MinSum,
}

impl BpVariant {
    pub fn name(self) -> &'static str {
        match self {
            BpVariant::SumProduct => "sumproduct",
            BpVariant::MinSum => "minsum",
        }
    }
}

impl std::str::FromStr for BpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sumproduct" | "sp" => Ok(BpVariant::SumProduct),
            "minsum" | "ms" => Ok(BpVariant::MinSum),
            other => Err(Error::InvalidParams(format!("unknown decoder variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for BpVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    pub iterations: usize,
    pub variant: BpVariant,
    pub clamp_eps: f64,
    /// Optional bound on message magnitudes. Off by default.
    pub llr_clip: Option<f64>,
    pub emit_per_iteration: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            iterations: 5,
            variant: BpVariant::SumProduct,
            clamp_eps: DEFAULT_CLAMP_EPS,
            llr_clip: None,
            emit_per_iteration: false,
        }
    }
}

impl BpConfig {
    pub fn new(iterations: usize, variant: BpVariant) -> Self {
        BpConfig {
            iterations,
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParams("BP needs at least one iteration".into()));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.1) {
            return Err(Error::InvalidParams(format!("clamp_eps {} outside (0, 0.1)", self.clamp_eps)));
        }
        if let Some(c) = self.llr_clip {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidParams(format!("llr_clip {c} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// `B x n` output LLRs.
    pub soft: Array2<f64>,
    /// `B x n` decoded bits.
    pub hard: Array2<u8>,
    /// Soft outputs after each iteration, when requested.
    pub per_iteration: Option<Vec<Array2<f64>>>,
}

impl DecodeResult {
    fn from_flat(b: usize, n: usize, iterations: usize, soft: Vec<f64>, per_iter: Option<Vec<f64>>) -> Self {
        let soft = Array2::from_shape_vec((b, n), soft).expect("decoder output shape");
        let hard = hard_decision(soft.view());
        // per-frame layout is [t][v]; regroup into one matrix per iteration
        let per_iteration = per_iter.map(|flat| {
            (0..iterations)
                .map(|t| Array2::from_shape_fn((b, n), |(f, v)| flat[f * iterations * n + t * n + v]))
                .collect()
        });
        DecodeResult {
            soft,
            hard,
            per_iteration,
        }
    }
}

/// 1 where `soft > 0`, else 0.
pub fn hard_decision(soft: ArrayView2<f64>) -> Array2<u8> {
    soft.mapv(|x| u8::from(x > 0.0))
}

pub(crate) fn check_llr_shape(llr: &ArrayView2<f64>, n: usize) -> Result<()> {
    if llr.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "LLR columns vs code length",
            expected: n,
            got: llr.ncols(),
        });
    }
    if llr.iter().any(|v| v.is_nan()) {
        return Err(Error::NumericalFailure("NaN in input LLRs".into()));
    }
    Ok(())
}

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure("non-finite decoder output".into()))
    }
}

/// Sum-product BP on the Tanner graph of `code`.
pub fn edge_bp_decode(llr: ArrayView2<f64>, code: &ParityCheck, cfg: &BpConfig) -> Result<DecodeResult> {
    decode_edges(llr, code, cfg, BpVariant::SumProduct)
}

/// Min-sum BP on the Tanner graph of `code`.
pub fn min_sum_decode(llr: ArrayView2<f64>, code: &ParityCheck, cfg: &BpConfig) -> Result<DecodeResult> {
    decode_edges(llr, code, cfg, BpVariant::MinSum)
}

/// Decodes with the edge-based decoder selected by `cfg.variant`.
pub fn decode(llr: ArrayView2<f64>, code: &ParityCheck, cfg: &BpConfig) -> Result<DecodeResult> {
    decode_edges(llr, code, cfg, cfg.variant)
}

fn decode_edges(llr: ArrayView2<f64>, code: &ParityCheck, cfg: &BpConfig, variant: BpVariant) -> Result<DecodeResult> {
    cfg.validate()?;
    let n = code.n();
    check_llr_shape(&llr, n)?;
    let graph = Tanner::new(code.matrix());
    let b = llr.nrows();
    let t_max = cfg.iterations;
    let llr = llr.as_standard_layout();
    let input = llr.as_slice().expect("standard layout");
    let mut soft = vec![0.0; b * n];
    let mut per_iter = cfg.emit_per_iteration.then(|| vec![0.0; b * t_max * n]);

    let run = |work: &mut EdgeWork, l: &[f64], out: &mut [f64], iters: Option<&mut [f64]>| {
        match iters {
            Some(buf) => graph.decode_frame(l, cfg, variant, work, out, |t, o| {
                buf[t * n..(t + 1) * n].copy_from_slice(o)
            }),
            None => graph.decode_frame(l, cfg, variant, work, out, |_, _| {}),
        }
    };

    if n > 0 {
        match per_iter.as_mut() {
            Some(pi) => soft
                .par_chunks_mut(n)
                .zip(pi.par_chunks_mut(t_max * n))
                .zip(input.par_chunks(n))
                .for_each_init(|| graph.workspace(), |w, ((out, it), l)| run(w, l, out, Some(it))),
            None => soft
                .par_chunks_mut(n)
                .zip(input.par_chunks(n))
                .for_each_init(|| graph.workspace(), |w, (out, l)| run(w, l, out, None)),
        }
    }
    ensure_finite(&soft)?;
    Ok(DecodeResult::from_flat(b, n, t_max, soft, per_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hard_decision_ties_go_to_zero() {
        let h = hard_decision(array![[3.0, -0.1, 0.0]].view());
        assert_eq!(h, array![[1, 0, 0]]);
    }

    #[test]
    fn config_validation() {
        assert!(BpConfig::default().validate().is_ok());
        assert!(BpConfig::new(0, BpVariant::SumProduct).validate().is_err());
        let mut c = BpConfig::default();
        c.clamp_eps = 0.5;
        assert!(c.validate().is_err());
        c.clamp_eps = 1e-7;
        c.llr_clip = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("minsum".parse::<BpVariant>().unwrap(), BpVariant::MinSum);
        assert_eq!("sum-product".parse::<BpVariant>().unwrap(), BpVariant::SumProduct);
        assert!("bogus".parse::<BpVariant>().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let code = ParityCheck::hamming_7_4();
        let l = Array2::zeros((2, 6));
        assert!(matches!(
            decode(l.view(), &code, &BpConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn per_iteration_outputs_end_with_final() {
        let code = ParityCheck::hamming_7_4();
        let l = array![[-3.0, 1.0, -2.0, -1.5, -2.5, 0.5, -4.0], [1.0, 2.0, -1.0, 0.0, 0.3, -0.2, 1.1]];
        let mut cfg = BpConfig::new(4, BpVariant::SumProduct);
        cfg.emit_per_iteration = true;
        let r = decode(l.view(), &code, &cfg).unwrap();
        let per = r.per_iteration.unwrap();
        assert_eq!(per.len(), 4);
        assert_eq!(per[3], r.soft);
        cfg.iterations = 2;
        let r2 = decode(l.view(), &code, &cfg).unwrap();
        assert_eq!(r2.soft, per[1]);
    }
}
