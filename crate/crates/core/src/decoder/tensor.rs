//! Belief propagation over the complete bipartite graph, masked by `H`.
//!
//! Messages live in dense `(n-k) x n` arrays. For one iteration:
//!
//! ```text
//! a[j][i] = tanh(-Q[j][i] * H[j][i] / 2) + 1 - H[j][i]
//! R[j][i] = -2 atanh( prod_i' a[j][i'] / tanh(-Q[j][i] / 2) )
//! o[i]    = L[i] + sum_j R[j][i] * H[j][i]
//! Q[j][i] = o[i] - R[j][i]
//! ```
//!
//! with `Q = L` before the first iteration. LLRs are `log P(1) / P(0)`, so the
//! check update works on negated messages; for binary `H` this is the
//! classical rule `R = (-1)^d 2 atanh(prod_{i' != i} tanh(Q / 2))` for a row of
//! degree `d`, and plain `2 atanh(...)` on even-degree rows. When `|tanh(Q/2)|` is below the
//! clamp epsilon the excluded product is formed by omission instead of
//! division. Rows with fewer than two entries above 1/2 send zero messages.

use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{check_llr_shape, ensure_finite, BpConfig, BpVariant, DecodeResult};
use crate::error::{Error, Result};

pub(crate) const KIND_ZERO: u8 = 0;
pub(crate) const KIND_DIV: u8 = 1;
pub(crate) const KIND_OMIT: u8 = 2;
pub(crate) const CLAMPED: u8 = 4;

/// Rows that carry messages: at least two entries above 1/2.
pub(crate) fn row_active(h: &[f64], m: usize, n: usize) -> Vec<bool> {
    (0..m)
        .map(|j| h[j * n..(j + 1) * n].iter().filter(|&&x| x > 0.5).count() >= 2)
        .collect()
}

/// Intermediate values of one frame's forward pass, kept for the adjoint.
///
/// Arrays indexed by iteration hold `T * m * n` entries laid out `[t][j][i]`;
/// `o` holds `T * n` entries.
#[derive(Clone, Debug)]
pub(crate) struct TensorTape {
    pub m: usize,
    pub n: usize,
    pub iters: usize,
    pub q: Vec<f64>,
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub kind: Vec<u8>,
    pub o: Vec<f64>,
}

impl TensorTape {
    pub fn new(m: usize, n: usize, iters: usize) -> Self {
        let size = iters * m * n;
        TensorTape {
            m,
            n,
            iters,
            q: vec![0.0; size],
            a: vec![0.0; size],
            u: vec![0.0; size],
            z: vec![0.0; size],
            r: vec![0.0; size],
            kind: vec![0; size],
            o: vec![0.0; iters * n],
        }
    }

    pub fn output(&self, t: usize) -> &[f64] {
        &self.o[t * self.n..(t + 1) * self.n]
    }

    pub fn forward(&mut self, llr: &[f64], h: &[f64], active: &[bool], eps: f64, clip: f64) {
        let (m, n) = (self.m, self.n);
        let mn = m * n;
        let lim = 1.0 - eps;
        for j in 0..m {
            self.q[j * n..(j + 1) * n].copy_from_slice(llr);
        }
        for t in 0..self.iters {
            let base = t * mn;
            for j in 0..m {
                let row = base + j * n..base + (j + 1) * n;
                let hrow = &h[j * n..(j + 1) * n];
                let q = &self.q[row.clone()];
                let a = &mut self.a[row.clone()];
                let u = &mut self.u[row.clone()];
                let mut prod = 1.0;
                for i in 0..n {
                    let ui = (-0.5 * q[i]).tanh();
                    let hv = hrow[i];
                    let ai = if hv == 0.0 {
                        1.0
                    } else if hv == 1.0 {
                        ui
                    } else {
                        (-0.5 * q[i] * hv).tanh() + 1.0 - hv
                    };
                    u[i] = ui;
                    a[i] = ai;
                    prod *= ai;
                }
                let z = &mut self.z[row.clone()];
                let r = &mut self.r[row.clone()];
                let kind = &mut self.kind[row.clone()];
                if !active[j] {
                    z.iter_mut().for_each(|x| *x = 0.0);
                    r.iter_mut().for_each(|x| *x = 0.0);
                    kind.iter_mut().for_each(|x| *x = KIND_ZERO);
                    continue;
                }
                for i in 0..n {
                    let (zi, mut ki) = if u[i].abs() < eps {
                        let omitted = a
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != i)
                            .map(|(_, &x)| x)
                            .product::<f64>();
                        (omitted, KIND_OMIT)
                    } else {
                        (prod / u[i], KIND_DIV)
                    };
                    let c = if zi > lim {
                        ki |= CLAMPED;
                        lim
                    } else if zi < -lim {
                        ki |= CLAMPED;
                        -lim
                    } else {
                        zi
                    };
                    z[i] = zi;
                    kind[i] = ki;
                    r[i] = -((1.0 + c) / (1.0 - c)).ln().clamp(-clip, clip);
                }
            }
            let o = &mut self.o[t * n..(t + 1) * n];
            o.copy_from_slice(llr);
            for j in 0..m {
                let r = &self.r[base + j * n..base + (j + 1) * n];
                let hrow = &h[j * n..(j + 1) * n];
                for i in 0..n {
                    o[i] += r[i] * hrow[i];
                }
            }
            if t + 1 < self.iters {
                let next = &mut self.q[base + mn..base + 2 * mn];
                let r = &self.r[base..base + mn];
                for j in 0..m {
                    for i in 0..n {
                        next[j * n + i] = (o[i] - r[j * n + i]).clamp(-clip, clip);
                    }
                }
            }
        }
    }
}

/// Tensor sum-product BP with a real-valued, possibly non-binary `H`.
pub fn bp_decode(llr: ArrayView2<f64>, h: ArrayView2<f64>, cfg: &BpConfig) -> Result<DecodeResult> {
    cfg.validate()?;
    if cfg.variant != BpVariant::SumProduct {
        return Err(Error::Unsupported("the tensor decoder implements sum-product only".into()));
    }
    let (m, n) = h.dim();
    check_llr_shape(&llr, n)?;
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("parity-check entries must be finite".into()));
    }
    let h = h.as_standard_layout();
    let h = h.as_slice().expect("standard layout");
    let llr = llr.as_standard_layout();
    let input = llr.as_slice().expect("standard layout");
    let b = llr.nrows();
    let iters = cfg.iterations;
    let active = row_active(h, m, n);
    let clip = cfg.llr_clip.unwrap_or(f64::INFINITY);

    let mut soft = vec![0.0; b * n];
    let mut per_iter = cfg.emit_per_iteration.then(|| vec![0.0; b * iters * n]);
    if n > 0 {
        let new_tape = || TensorTape::new(m, n, iters);
        match per_iter.as_mut() {
            Some(pi) => soft
                .par_chunks_mut(n)
                .zip(pi.par_chunks_mut(iters * n))
                .zip(input.par_chunks(n))
                .for_each_init(new_tape, |tape, ((out, it), l)| {
                    tape.forward(l, h, &active, cfg.clamp_eps, clip);
                    out.copy_from_slice(tape.output(iters - 1));
                    it.copy_from_slice(&tape.o);
                }),
            None => soft
                .par_chunks_mut(n)
                .zip(input.par_chunks(n))
                .for_each_init(new_tape, |tape, (out, l)| {
                    tape.forward(l, h, &active, cfg.clamp_eps, clip);
                    out.copy_from_slice(tape.output(iters - 1));
                }),
        }
    }
    ensure_finite(&soft)?;
    Ok(DecodeResult::from_flat(b, n, iters, soft, per_iter))
}
