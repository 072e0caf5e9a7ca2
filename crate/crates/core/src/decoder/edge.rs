//! Sparse message passing over the edges of a Tanner graph.

use super::{BpConfig, BpVariant};
use crate::gf2::BitMatrix;

/// Edge lists of a binary parity-check matrix, in compressed form.
///
/// Edges are numbered check by check; `var_edges` lists, for every variable,
/// the numbers of its incident edges.
#[derive(Clone, Debug)]
pub struct Tanner {
    n: usize,
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    var_start: Vec<usize>,
    var_edges: Vec<usize>,
}

/// Per-thread scratch buffers for [`Tanner::decode_frame`].
#[derive(Clone, Debug)]
pub struct EdgeWork {
    q: Vec<f64>,
    r: Vec<f64>,
    scratch: Vec<f64>,
    out: Vec<f64>,
}

impl Tanner {
    pub fn new(h: &BitMatrix) -> Self {
        let (m, n) = (h.rows(), h.cols());
        let mut check_start = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for j in 0..m {
            edge_var.extend(h.row_support(j));
            check_start.push(edge_var.len());
        }
        let mut counts = vec![0usize; n + 1];
        for &v in &edge_var {
            counts[v + 1] += 1;
        }
        for v in 0..n {
            counts[v + 1] += counts[v];
        }
        let var_start = counts.clone();
        let mut fill = counts;
        let mut var_edges = vec![0; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        Tanner {
            n,
            check_start,
            edge_var,
            var_start,
            var_edges,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn checks(&self) -> usize {
        self.check_start.len() - 1
    }

    pub fn edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn workspace(&self) -> EdgeWork {
        let e = self.edges();
        let max_deg = self.check_start.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        EdgeWork {
            q: vec![0.0; e],
            r: vec![0.0; e],
            scratch: vec![0.0; 2 * max_deg],
            out: vec![0.0; self.n],
        }
    }

    /// Decodes one frame, writing the final output LLRs to `soft` and
    /// handing each iteration's output to `on_iter`.
    pub fn decode_frame(
        &self,
        llr: &[f64],
        cfg: &BpConfig,
        variant: BpVariant,
        work: &mut EdgeWork,
        soft: &mut [f64],
        mut on_iter: impl FnMut(usize, &[f64]),
    ) {
        debug_assert_eq!(llr.len(), self.n);
        let clip = cfg.llr_clip.unwrap_or(f64::INFINITY);
        let EdgeWork { q, r, scratch, out } = work;
        for (qe, &v) in q.iter_mut().zip(&self.edge_var) {
            *qe = llr[v];
        }
        for t in 0..cfg.iterations {
            for j in 0..self.checks() {
                let (s, e) = (self.check_start[j], self.check_start[j + 1]);
                match variant {
                    BpVariant::SumProduct => {
                        check_sum_product_into(&q[s..e], cfg.clamp_eps, &mut r[s..e], scratch)
                    }
                    BpVariant::MinSum => check_update_min_sum(&q[s..e], &mut r[s..e]),
                }
            }
            if clip.is_finite() {
                r.iter_mut().for_each(|x| *x = x.clamp(-clip, clip));
            }
            for v in 0..self.n {
                let edges = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let total = llr[v] + edges.iter().map(|&e| r[e]).sum::<f64>();
                out[v] = total;
                for &e in edges {
                    q[e] = (total - r[e]).clamp(-clip, clip);
                }
            }
            on_iter(t, out);
        }
        soft.copy_from_slice(out);
    }
}

/// Sum-product check update for `log P(1) / P(0)` messages:
/// `out[i] = -2 atanh(prod_{k != i} tanh(-q[k] / 2))` with the product clamped
/// to `±(1 - eps)`. A single incoming message gives
/// a zero output.
pub fn check_update_sum_product(q: &[f64], eps: f64, out: &mut [f64]) {
    let mut scratch = vec![0.0; 2 * q.len()];
    check_sum_product_into(q, eps, out, &mut scratch);
}

fn check_sum_product_into(q: &[f64], eps: f64, out: &mut [f64], scratch: &mut [f64]) {
    let d = q.len();
    if d <= 1 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let (t, suffix) = scratch[..2 * d].split_at_mut(d);
    for (ti, &qi) in t.iter_mut().zip(q) {
        *ti = (-0.5 * qi).tanh();
    }
    // suffix[i] = prod_{k > i} t[k]
    suffix[d - 1] = 1.0;
    for i in (0..d - 1).rev() {
        suffix[i] = suffix[i + 1] * t[i + 1];
    }
    let lim = 1.0 - eps;
    let mut prefix = 1.0;
    for i in 0..d {
        let p = (prefix * suffix[i]).clamp(-lim, lim);
        out[i] = -((1.0 + p) / (1.0 - p)).ln();
        prefix *= t[i];
    }
}

/// Min-sum check update: minimum magnitude over the other incoming messages,
/// with the sign of the sum-product update, `(-1)^d` times their sign product. A single incoming message gives a zero output.
pub fn check_update_min_sum(q: &[f64], out: &mut [f64]) {
    let d = q.len();
    if d <= 1 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, 0);
    let mut negative = d % 2 == 1;
    for (i, &x) in q.iter().enumerate() {
        let a = x.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            arg = i;
        } else if a < min2 {
            min2 = a;
        }
        negative ^= x < 0.0;
    }
    for (i, (o, &x)) in out.iter_mut().zip(q).enumerate() {
        let mag = if i == arg { min2 } else { min1 };
        let neg = negative ^ (x < 0.0);
        *o = if neg { -mag } else { mag };
    }
}
