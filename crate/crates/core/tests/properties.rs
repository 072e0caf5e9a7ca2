//! Decoders, girth and Monte Carlo evaluation against independent oracles.

use bpcodes::channel::{ChannelFamily, ChannelSpec};
use bpcodes::code::{girth, load_code, random_systematic, Girth, ParityCheck};
use bpcodes::decoder::{bp_decode, edge_bp_decode, BpConfig, BpVariant};
use bpcodes::eval::{monte_carlo, uncoded_bpsk_ber, EvalMode, StopRule};
use bpcodes::gf2::BitMatrix;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum-product in the probability domain: a check sends the probability
/// that the other bits have odd parity, `(1 - prod(1 - 2 p)) / 2`.
fn probability_domain_bp(llr: &[f64], h: &BitMatrix, iters: usize) -> Vec<f64> {
    let (m, n) = (h.rows(), h.cols());
    let prob_one = |l: f64| 1.0 / (1.0 + (-l).exp());
    let mut q = vec![vec![0.0; n]; m];
    for row in q.iter_mut() {
        row.copy_from_slice(llr);
    }
    let mut out = llr.to_vec();
    for _ in 0..iters {
        let mut r = vec![vec![0.0; n]; m];
        for j in 0..m {
            let support = h.row_support(j);
            if support.len() < 2 {
                continue;
            }
            for &i in &support {
                let even_bias: f64 = support.iter().filter(|&&k| k != i).map(|&k| 1.0 - 2.0 * prob_one(q[j][k])).product();
                let odd = (1.0 - even_bias) / 2.0;
                r[j][i] = (odd / (1.0 - odd)).ln();
            }
        }
        for i in 0..n {
            out[i] = llr[i] + (0..m).filter(|&j| h.get(j, i)).map(|j| r[j][i]).sum::<f64>();
        }
        for j in 0..m {
            for i in 0..n {
                q[j][i] = out[i] - r[j][i];
            }
        }
    }
    out
}

#[test]
fn decoders_match_probability_domain_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut odd_rows, mut degree_one, mut empty_cols) = (0, 0, 0);
    for _ in 0..150 {
        let m = rng.random_range(1..6);
        let n = rng.random_range(m + 1..11);
        let mut h = BitMatrix::zeros(m, n);
        for j in 0..m {
            for i in 0..n {
                h.set(j, i, rng.random_bool(0.45));
            }
        }
        odd_rows += (0..m).filter(|&j| h.row_weight(j) % 2 == 1 && h.row_weight(j) > 1).count();
        degree_one += (0..m).filter(|&j| h.row_weight(j) == 1).count();
        empty_cols += (0..n).filter(|&i| h.col_weight(i) == 0).count();
        let code = ParityCheck::new(h.clone()).unwrap();
        let t = rng.random_range(1..5);
        let llr = Array2::from_shape_fn((3, n), |_| rng.random_range(-3.0..3.0));
        let cfg = BpConfig::new(t, BpVariant::SumProduct);
        let edge = edge_bp_decode(llr.view(), &code, &cfg).unwrap();
        let tensor = bp_decode(llr.view(), code.to_real().view(), &cfg).unwrap();
        for (f, row) in llr.outer_iter().enumerate() {
            let expected = probability_domain_bp(row.as_slice().unwrap(), &h, t);
            for i in 0..n {
                let tol = 1e-7 * expected[i].abs().max(1.0);
                assert!((edge.soft[[f, i]] - expected[i]).abs() < tol, "edge {} vs {}", edge.soft[[f, i]], expected[i]);
                assert!((tensor.soft[[f, i]] - expected[i]).abs() < tol, "tensor {} vs {}", tensor.soft[[f, i]], expected[i]);
            }
        }
    }
    assert!(odd_rows > 0 && degree_one > 0 && empty_cols > 0);
}

/// Length of the shortest cycle, by depth-first enumeration of simple paths
/// that start and end at their smallest node, up to `limit` edges.
fn brute_force_girth(h: &BitMatrix, limit: usize) -> Option<usize> {
    let (m, n) = (h.rows(), h.cols());
    let mut adj = vec![Vec::new(); n + m];
    for j in 0..m {
        for i in h.row_support(j) {
            adj[i].push(n + j);
            adj[n + j].push(i);
        }
    }
    fn walk(adj: &[Vec<usize>], start: usize, u: usize, len: usize, limit: usize, seen: &mut [bool], best: &mut Option<usize>) {
        for &v in &adj[u] {
            if v == start && len >= 3 {
                *best = Some(best.map_or(len + 1, |b| b.min(len + 1)));
            } else if v > start && !seen[v] && len + 1 < limit && best.is_none_or(|b| len + 2 < b) {
                seen[v] = true;
                walk(adj, start, v, len + 1, limit, seen, best);
                seen[v] = false;
            }
        }
    }
    let mut best = None;
    let mut seen = vec![false; n + m];
    for s in 0..n + m {
        seen[s] = true;
        walk(&adj, s, s, 0, limit, &mut seen, &mut best);
        seen[s] = false;
    }
    best
}

#[test]
fn girth_of_fixture_ldpc_code() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../codes/ldpc_32_16.alist")).unwrap();
    let code = load_code(&text).unwrap();
    let fast = girth(code.matrix());
    let Girth::Cycle(g) = fast else { panic!("fixture has cycles") };
    assert_eq!(brute_force_girth(code.matrix(), g + 2), Some(g));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn girth_matches_enumeration(m in 1usize..6, n in 2usize..9, seed in any::<u64>(), p in 0.2f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = BitMatrix::zeros(m, n);
        for j in 0..m {
            for i in 0..n {
                h.set(j, i, rng.random_bool(p));
            }
        }
        let expected = brute_force_girth(&h, 2 * (m + n));
        match girth(&h) {
            Girth::Cycle(g) => prop_assert_eq!(Some(g), expected),
            Girth::Acyclic => prop_assert_eq!(None, expected),
        }
    }
}

fn quick_stop() -> StopRule {
    StopRule {
        min_frames: 4000,
        min_frame_errors: 20,
        max_frames: 200_000,
        batch_frames: 1000,
    }
}

#[test]
fn monte_carlo_ignores_worker_count() {
    let code = random_systematic(24, 12, 0.3, 9).unwrap();
    let specs: Vec<ChannelSpec> = [1.0, 2.0].iter().map(|&s| ChannelSpec::new(ChannelFamily::Awgn, s, code.rate())).collect();
    let cfg = BpConfig::new(5, BpVariant::SumProduct);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo(&code, &specs, &cfg, &quick_stop(), EvalMode::RandomCodewords, 5).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn ber_falls_with_snr() {
    let code = ParityCheck::hamming_7_4();
    let specs: Vec<ChannelSpec> = [0.0, 3.0, 6.0].iter().map(|&s| ChannelSpec::new(ChannelFamily::Awgn, s, code.rate())).collect();
    let report = monte_carlo(&code, &specs, &BpConfig::default(), &quick_stop(), EvalMode::ZeroCodeword, 1).unwrap();
    let bers: Vec<f64> = report.points.iter().map(|p| p.ber).collect();
    assert!(bers.windows(2).all(|w| w[0] > w[1]), "{bers:?}");
    let neg_ln: Vec<f64> = report.points.iter().map(|p| p.neg_ln_ber.unwrap()).collect();
    assert!(neg_ln.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn lone_degree_one_check_evaluates_like_uncoded_bpsk() {
    // a lone degree-1 check sends nothing: BP returns the channel LLRs, so
    // at rate 1 the BER is the uncoded one
    let mut h = BitMatrix::zeros(1, 16);
    h.set(0, 0, true);
    let code = ParityCheck::new(h).unwrap();
    let spec = ChannelSpec::new(ChannelFamily::Awgn, 2.0, 1.0);
    let stop = StopRule {
        min_frames: 20_000,
        ..quick_stop()
    };
    let report = monte_carlo(&code, &[spec], &BpConfig::new(1, BpVariant::SumProduct), &stop, EvalMode::ZeroCodeword, 3).unwrap();
    let p = &report.points[0];
    let expected = uncoded_bpsk_ber(2.0);
    assert!((p.ber - expected).abs() < 4.0 * p.ber_binomial_std_error(), "{} vs {expected}", p.ber);
}
