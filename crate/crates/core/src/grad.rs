//! Decoding loss and its gradient with respect to the parity-check matrix.
//!
//! The loss is the binary cross-entropy of the decoder output against the
//! all-zero codeword. Under the `log P(1)/P(0)` convention this is
//! `softplus(o)` summed over bits, averaged over frames.
//!
//! Gradients are computed by a hand-written adjoint of the tensor decoder:
//! the forward pass of each frame is recorded on a [`TensorTape`] and played
//! back in reverse. The binary parameter matrix is obtained from real
//! parameters `omega` through `bin(u) = (1 - sign(u)) / 2` with the
//! straight-through derivative `-1/2` on `|u| <= 1`.

use ndarray::{Array2, ArrayView2, CowArray, Ix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{check_llr_shape, row_active, BpConfig, BpVariant, EdgeWork, Tanner, TensorTape, CLAMPED, KIND_DIV, KIND_OMIT};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::reduce::{map_chunks, tree_fold};

const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// BCE of the last iteration's output.
    #[default]
    FinalIteration,
    /// BCE summed over the outputs of every iteration.
    SummedIterations,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub bp: BpConfig,
    pub loss_mode: LossMode,
    /// Magnitude of the signed perturbation placed on the zeros of `H`.
    pub soft_h_eps: Option<f64>,
    /// Seed for the perturbation signs.
    pub seed: u64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            bp: BpConfig::default(),
            loss_mode: LossMode::FinalIteration,
            soft_h_eps: None,
            seed: 0,
        }
    }
}

impl LossConfig {
    pub fn new(bp: BpConfig, loss_mode: LossMode) -> Self {
        LossConfig {
            bp,
            loss_mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bp.validate()?;
        if let Some(eps) = self.soft_h_eps {
            if !(eps > 0.0 && eps < 1e-3) {
                return Err(Error::InvalidParams(format!("soft_h_eps {eps} outside (0, 1e-3)")));
            }
        }
        Ok(())
    }

    fn counts(&self, t: usize) -> bool {
        match self.loss_mode {
            LossMode::FinalIteration => t + 1 == self.bp.iterations,
            LossMode::SummedIterations => true,
        }
    }
}

/// 1 where `omega < 0`, else 0.
pub fn bin(omega: ArrayView2<f64>) -> Array2<f64> {
    omega.mapv(|u| if u < 0.0 { 1.0 } else { 0.0 })
}

/// [`bin`] as a bit matrix.
pub fn bin_matrix(omega: ArrayView2<f64>) -> BitMatrix {
    let (m, n) = omega.dim();
    let mut h = BitMatrix::zeros(m, n);
    for ((j, i), &u) in omega.indexed_iter() {
        if u < 0.0 {
            h.set(j, i, true);
        }
    }
    h
}

/// Straight-through derivative of [`bin`]: -0.5 where `|omega| <= 1`.
pub fn ste_mask(omega: ArrayView2<f64>) -> Array2<f64> {
    omega.mapv(|u| if u.abs() <= 1.0 { -0.5 } else { 0.0 })
}

/// Parameters whose binarization is `h`: `1 - 2h`.
pub fn omega_from(h: &BitMatrix) -> Array2<f64> {
    Array2::from_shape_fn((h.rows(), h.cols()), |(j, i)| if h.get(j, i) { -1.0 } else { 1.0 })
}

/// Replaces the zeros of a binary `h` by `±eps` with signs drawn from a
/// seeded fair coin in row-major order.
pub fn soft_h(h: ArrayView2<f64>, eps: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    h.mapv(|x| {
        if x == 0.0 {
            if rng.random_bool(0.5) {
                -eps
            } else {
                eps
            }
        } else {
            x
        }
    })
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_loss_finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NumericalFailure(format!("loss evaluated to {loss}")))
    }
}

struct Prepared<'a> {
    llr: CowArray<'a, f64, Ix2>,
    h: Vec<f64>,
    active: Vec<bool>,
    m: usize,
    n: usize,
}

fn prepare<'a>(llr: ArrayView2<'a, f64>, h: ArrayView2<f64>, cfg: &LossConfig) -> Result<Prepared<'a>> {
    cfg.validate()?;
    if cfg.bp.variant != BpVariant::SumProduct {
        return Err(Error::Unsupported("gradients are defined for sum-product decoding only".into()));
    }
    if cfg.bp.llr_clip.is_some() {
        return Err(Error::Unsupported("gradients are not defined with message clipping".into()));
    }
    let (m, n) = h.dim();
    check_llr_shape(&llr, n)?;
    if llr.nrows() == 0 {
        return Err(Error::InvalidParams("empty LLR batch".into()));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("parity-check entries must be finite".into()));
    }
    let h: Vec<f64> = h.iter().copied().collect();
    let active = row_active(&h, m, n);
    Ok(Prepared {
        llr: if llr.is_standard_layout() {
            CowArray::from(llr)
        } else {
            CowArray::from(llr.to_owned())
        },
        h,
        active,
        m,
        n,
    })
}

fn frame_loss(tape: &TensorTape, cfg: &LossConfig) -> f64 {
    (0..tape.iters)
        .filter(|&t| cfg.counts(t))
        .map(|t| tape.output(t).iter().map(|&o| softplus(o)).sum::<f64>())
        .sum()
}

/// Mean BCE loss of the tensor decoder run with a real-valued `h`.
pub fn decode_loss(llr: ArrayView2<f64>, h: ArrayView2<f64>, cfg: &LossConfig) -> Result<f64> {
    let p = prepare(llr, h, cfg)?;
    let input = p.llr.as_slice().expect("standard layout");
    let b = p.llr.nrows();
    let parts = map_chunks(b, CHUNK, |frames| {
        let mut tape = TensorTape::new(p.m, p.n, cfg.bp.iterations);
        frames
            .map(|f| {
                tape.forward(&input[f * p.n..(f + 1) * p.n], &p.h, &p.active, cfg.bp.clamp_eps, f64::INFINITY);
                frame_loss(&tape, cfg)
            })
            .sum::<f64>()
    });
    check_loss_finite(tree_fold(parts, |a, c| a + c).unwrap_or(0.0) / b as f64)
}

/// Mean BCE loss of the edge-based decoder for a binary `h`.
///
/// Equal to [`decode_loss`] on the same binary matrix up to rounding, and
/// much cheaper for sparse matrices. Honors `cfg.bp.variant`.
pub fn binary_decode_loss(llr: ArrayView2<f64>, h: &BitMatrix, cfg: &LossConfig) -> Result<f64> {
    cfg.bp.validate()?;
    let n = h.cols();
    check_llr_shape(&llr, n)?;
    let b = llr.nrows();
    if b == 0 {
        return Err(Error::InvalidParams("empty LLR batch".into()));
    }
    let llr = llr.as_standard_layout();
    let input = llr.as_slice().expect("standard layout");
    let graph = Tanner::new(h);
    let parts = map_chunks(b, CHUNK, |frames| {
        let mut work: EdgeWork = graph.workspace();
        let mut soft = vec![0.0; n];
        let mut total = 0.0;
        for f in frames {
            graph.decode_frame(&input[f * n..(f + 1) * n], &cfg.bp, cfg.bp.variant, &mut work, &mut soft, |t, o| {
                if cfg.counts(t) {
                    total += o.iter().map(|&x| softplus(x)).sum::<f64>();
                }
            });
        }
        total
    });
    check_loss_finite(tree_fold(parts, |a, c| a + c).unwrap_or(0.0) / b as f64)
}

/// Loss and its gradient with respect to a real-valued `h`.
pub fn loss_and_grad_h(llr: ArrayView2<f64>, h: ArrayView2<f64>, cfg: &LossConfig) -> Result<(f64, Array2<f64>)> {
    let p = prepare(llr, h, cfg)?;
    let (m, n) = (p.m, p.n);
    let input = p.llr.as_slice().expect("standard layout");
    let b = p.llr.nrows();
    let parts = map_chunks(b, CHUNK, |frames| {
        let mut tape = TensorTape::new(m, n, cfg.bp.iterations);
        let mut back = Backward::new(m, n);
        let mut grad = vec![0.0; m * n];
        let mut loss = 0.0;
        for f in frames {
            tape.forward(&input[f * n..(f + 1) * n], &p.h, &p.active, cfg.bp.clamp_eps, f64::INFINITY);
            loss += frame_loss(&tape, cfg);
            back.run(&tape, &p.h, &p.active, cfg, &mut grad);
        }
        (loss, grad)
    });
    let (loss, grad) = tree_fold(parts, |(la, mut ga), (lb, gb)| {
        ga.iter_mut().zip(&gb).for_each(|(x, y)| *x += y);
        (la + lb, ga)
    })
    .expect("non-empty batch");
    let scale = 1.0 / b as f64;
    let grad = Array2::from_shape_vec((m, n), grad.into_iter().map(|g| g * scale).collect()).expect("gradient shape");
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure("non-finite gradient".into()));
    }
    Ok((check_loss_finite(loss * scale)?, grad))
}

/// Gradient of [`decode_loss`] with respect to `h`.
pub fn grad_wrt_h(llr: ArrayView2<f64>, h: ArrayView2<f64>, cfg: &LossConfig) -> Result<Array2<f64>> {
    loss_and_grad_h(llr, h, cfg).map(|(_, g)| g)
}

/// Branch taken by every tensor check message of every frame and iteration:
/// silent row, division, omission, and whether the `atanh` argument was
/// clamped. The loss is smooth wherever this pattern is constant.
pub fn branch_pattern(llr: ArrayView2<f64>, h: ArrayView2<f64>, cfg: &LossConfig) -> Result<Vec<u8>> {
    let p = prepare(llr, h, cfg)?;
    let input = p.llr.as_slice().expect("standard layout");
    let mut tape = TensorTape::new(p.m, p.n, cfg.bp.iterations);
    let mut out = Vec::with_capacity(p.llr.nrows() * tape.kind.len());
    for frame in input.chunks(p.n) {
        tape.forward(frame, &p.h, &p.active, cfg.bp.clamp_eps, f64::INFINITY);
        out.extend_from_slice(&tape.kind);
    }
    Ok(out)
}

/// The matrix at which the gradient for `omega` is evaluated: `bin(omega)`,
/// softened when `cfg.soft_h_eps` is set.
pub fn evaluation_point(omega: ArrayView2<f64>, cfg: &LossConfig) -> Array2<f64> {
    let h = bin(omega);
    match cfg.soft_h_eps {
        Some(eps) => soft_h(h.view(), eps, cfg.seed),
        None => h,
    }
}

/// Straight-through gradient with respect to `omega`.
pub fn grad_wrt_omega(llr: ArrayView2<f64>, omega: ArrayView2<f64>, cfg: &LossConfig) -> Result<Array2<f64>> {
    let h = evaluation_point(omega, cfg);
    let g = grad_wrt_h(llr, h.view(), cfg)?;
    Ok(g * ste_mask(omega))
}

/// Reverse sweep over one frame's tape.
struct Backward {
    /// Gradient with respect to the check inputs of the iteration after the
    /// one being processed.
    gq_next: Vec<f64>,
    gq: Vec<f64>,
    go: Vec<f64>,
    ga: Vec<f64>,
    suffix: Vec<f64>,
}

impl Backward {
    fn new(m: usize, n: usize) -> Self {
        Backward {
            gq_next: vec![0.0; m * n],
            gq: vec![0.0; m * n],
            go: vec![0.0; n],
            ga: vec![0.0; n],
            suffix: vec![0.0; n + 1],
        }
    }

    fn run(&mut self, tape: &TensorTape, h: &[f64], active: &[bool], cfg: &LossConfig, grad: &mut [f64]) {
        let (m, n) = (tape.m, tape.n);
        let mn = m * n;
        self.gq_next.iter_mut().for_each(|x| *x = 0.0);
        for t in (0..tape.iters).rev() {
            let base = t * mn;
            let o = tape.output(t);
            let r = &tape.r[base..base + mn];
            // output and next-iteration inputs both depend on o and R
            for i in 0..n {
                let mut g = if cfg.counts(t) { sigmoid(o[i]) } else { 0.0 };
                for j in 0..m {
                    g += self.gq_next[j * n + i];
                }
                self.go[i] = g;
            }
            self.gq.iter_mut().for_each(|x| *x = 0.0);
            for j in 0..m {
                let row = j * n..(j + 1) * n;
                let hrow = &h[row.clone()];
                for i in 0..n {
                    grad[j * n + i] += self.go[i] * r[j * n + i];
                }
                if !active[j] {
                    continue;
                }
                let q = &tape.q[base + row.start..base + row.end];
                let a = &tape.a[base + row.start..base + row.end];
                let u = &tape.u[base + row.start..base + row.end];
                let z = &tape.z[base + row.start..base + row.end];
                let kind = &tape.kind[base + row.start..base + row.end];
                let gq = &mut self.gq[row.clone()];
                let gq_next = &self.gq_next[row.clone()];
                self.ga.iter_mut().for_each(|x| *x = 0.0);
                let mut g_prod = 0.0;
                for i in 0..n {
                    let k = kind[i];
                    if k & CLAMPED != 0 || k & (KIND_DIV | KIND_OMIT) == 0 {
                        continue;
                    }
                    let g_r = self.go[i] * hrow[i] - gq_next[i];
                    let g_z = -g_r * 2.0 / (1.0 - z[i] * z[i]);
                    if k & KIND_DIV != 0 {
                        g_prod += g_z / u[i];
                        let g_u = -g_z * z[i] / u[i];
                        gq[i] -= g_u * (1.0 - u[i] * u[i]) * 0.5;
                    } else {
                        for p in 0..n {
                            if p == i {
                                continue;
                            }
                            let others: f64 = (0..n).filter(|&s| s != i && s != p).map(|s| a[s]).product();
                            self.ga[p] += g_z * others;
                        }
                    }
                }
                if g_prod != 0.0 {
                    // product of all a except one, without division
                    self.suffix[n] = 1.0;
                    for i in (0..n).rev() {
                        self.suffix[i] = self.suffix[i + 1] * a[i];
                    }
                    let mut prefix = 1.0;
                    for i in 0..n {
                        self.ga[i] += g_prod * prefix * self.suffix[i + 1];
                        prefix *= a[i];
                    }
                }
                for i in 0..n {
                    let g_a = self.ga[i];
                    if g_a == 0.0 {
                        continue;
                    }
                    let hv = hrow[i];
                    let th = if hv == 0.0 {
                        0.0
                    } else if hv == 1.0 {
                        u[i]
                    } else {
                        (-0.5 * q[i] * hv).tanh()
                    };
                    let s = 1.0 - th * th;
                    gq[i] -= g_a * s * hv * 0.5;
                    grad[j * n + i] -= g_a * (s * q[i] * 0.5 + 1.0);
                }
            }
            std::mem::swap(&mut self.gq, &mut self.gq_next);
        }
    }
}
