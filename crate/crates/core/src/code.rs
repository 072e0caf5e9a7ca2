//! Parity-check matrices: file formats, random initialisation and structural
//! statistics.
//!
//! Two text formats are understood:
//!
//! * **alist** (MacKay convention): `n m`, `max_col_deg max_row_deg`, the `n`
//!   column degrees, the `m` row degrees, then one 1-indexed adjacency list per
//!   column followed by one per row. Lists may or may not be zero-padded to the
//!   maximum degree.
//! * **dense**: `n m`, then `m` lines of `n` space-separated 0/1 values.
//!
//! [`load_code`] detects the format from the shape of the text.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix};

/// A binary linear block code given by its `(n-k) x n` parity-check matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheck {
    h: BitMatrix,
}

impl ParityCheck {
    /// Wraps `h`; requires fewer rows than columns. All-zero columns are
    /// accepted with a warning (such variables only see their channel LLR).
    pub fn new(h: BitMatrix) -> Result<Self> {
        if h.rows() >= h.cols() {
            return Err(Error::InvalidParams(format!(
                "parity-check matrix must have fewer rows than columns, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let empty = (0..h.cols()).filter(|&c| h.col_weight(c) == 0).count();
        if empty > 0 {
            log::warn!("parity-check matrix has {empty} all-zero column(s)");
        }
        Ok(ParityCheck { h })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        Self::new(BitMatrix::from_rows(rows)?)
    }

    /// The (7,4) Hamming code whose columns are all nonzero 3-bit vectors.
    pub fn hamming_7_4() -> Self {
        Self::from_rows(&[
            [1u8, 0, 1, 1, 1, 0, 0],
            [0, 1, 0, 1, 1, 1, 0],
            [0, 0, 1, 0, 1, 1, 1],
        ])
        .expect("valid Hamming matrix")
    }

    #[inline]
    pub fn matrix(&self) -> &BitMatrix {
        &self.h
    }

    pub fn into_matrix(self) -> BitMatrix {
        self.h
    }

    /// Block length.
    #[inline]
    pub fn n(&self) -> usize {
        self.h.cols()
    }

    /// Message length implied by the shape (`n` minus the number of checks).
    #[inline]
    pub fn k(&self) -> usize {
        self.h.cols() - self.h.rows()
    }

    #[inline]
    pub fn checks(&self) -> usize {
        self.h.rows()
    }

    /// Nominal rate `k / n`.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn is_full_rank(&self) -> bool {
        gf2::rank(&self.h) == self.h.rows()
    }

    pub fn has_empty_columns(&self) -> bool {
        (0..self.n()).any(|c| self.h.col_weight(c) == 0)
    }

    /// Entries as `f64` (0.0 / 1.0), row-major `(n-k) x n`.
    pub fn to_real(&self) -> ndarray::Array2<f64> {
        ndarray::Array2::from_shape_fn((self.checks(), self.n()), |(r, c)| if self.h.get(r, c) { 1.0 } else { 0.0 })
    }
}

/// Tanner-graph girth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Girth {
    /// Length of the shortest cycle; always even and at least 4.
    Cycle(usize),
    Acyclic,
}

impl std::fmt::Display for Girth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Girth::Cycle(g) => write!(f, "{g}"),
            Girth::Acyclic => write!(f, "acyclic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeStats {
    pub density: f64,
    pub ones: usize,
    pub girth: Girth,
    pub row_degrees: Vec<usize>,
    pub col_degrees: Vec<usize>,
}

pub fn stats(code: &ParityCheck) -> CodeStats {
    let h = code.matrix();
    let ones = h.count_ones();
    CodeStats {
        density: ones as f64 / (h.rows() * h.cols()) as f64,
        ones,
        girth: girth(h),
        row_degrees: (0..h.rows()).map(|r| h.row_weight(r)).collect(),
        col_degrees: (0..h.cols()).map(|c| h.col_weight(c)).collect(),
    }
}

/// Shortest cycle of the bipartite variable/check graph.
///
/// Breadth-first search from every node; a non-tree edge between depths `a`
/// and `b` closes a cycle of length at most `a + b + 1`, and the minimum over
/// all roots is exact. A simple cycle visits at most `min(n, n-k)` nodes of
/// each side, so the search depth is bounded by `min(n, n-k)`.
pub fn girth(h: &BitMatrix) -> Girth {
    let (m, n) = (h.rows(), h.cols());
    // nodes 0..n are variables, n..n+m are checks
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for r in 0..m {
        for c in h.row_support(r) {
            adj[c].push(n + r);
            adj[n + r].push(c);
        }
    }
    let cap = 2 * m.min(n);
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n + m];
    let mut parent = vec![usize::MAX; n + m];
    let mut queue = VecDeque::new();
    for root in 0..n + m {
        if adj[root].len() < 2 {
            continue;
        }
        dist.fill(usize::MAX);
        parent.fill(usize::MAX);
        dist[root] = 0;
        queue.clear();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            if 2 * dist[u] + 1 >= best.min(cap + 1) {
                break;
            }
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    best = best.min(dist[u] + dist[v] + 1);
                }
            }
        }
    }
    if best == usize::MAX {
        Girth::Acyclic
    } else {
        Girth::Cycle(best)
    }
}

/// Relative reduction of the number of ones, in percent:
/// `100 * (S_base - S_learned) / S_base`.
pub fn sparsity_delta(base: &ParityCheck, learned: &ParityCheck) -> Result<f64> {
    if base.checks() != learned.checks() || base.n() != learned.n() {
        return Err(Error::DimensionMismatch {
            context: "sparsity_delta",
            expected: base.checks() * base.n(),
            got: learned.checks() * learned.n(),
        });
    }
    let sb = base.matrix().count_ones();
    if sb == 0 {
        return Err(Error::DivisionByZero("base code has no ones"));
    }
    let so = learned.matrix().count_ones();
    Ok(100.0 * (sb as f64 - so as f64) / sb as f64)
}

/// `[I_{n-k} | P]` with `P` iid Bernoulli(`p`).
pub fn random_systematic(n: usize, k: usize, p: f64, seed: u64) -> Result<ParityCheck> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParams(format!("need 0 < k < n, got n={n}, k={k}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("Bernoulli rate {p} outside [0, 1]")));
    }
    let m = n - k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = BitMatrix::identity_padded(m, n);
    for r in 0..m {
        for c in m..n {
            if rng.random_bool(p) {
                h.set(r, c, true);
            }
        }
    }
    ParityCheck::new(h)
}

// ---------------------------------------------------------------------------
// Text formats

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.items.len() - self.pos
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map_or(0, |(l, _)| *l)
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let line = self.line();
        let (_, tok) = self
            .items
            .get(self.pos)
            .ok_or_else(|| Error::parse(line, format!("unexpected end of input reading {what}")))?;
        self.pos += 1;
        tok.parse()
            .map_err(|_| Error::parse(line, format!("expected non-negative integer for {what}, got {tok:?}")))
    }
}

/// Parses either format, choosing dense when the text after the header is
/// exactly `m` lines of `n` binary tokens.
pub fn load_code(text: &str) -> Result<ParityCheck> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if let Some(header) = lines.first() {
        let hdr: Vec<usize> = header.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if hdr.len() == 2 {
            let (n, m) = (hdr[0], hdr[1]);
            let dense_shape = lines.len() == m + 1
                && lines[1..].iter().all(|l| {
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    toks.len() == n && toks.iter().all(|t| *t == "0" || *t == "1")
                });
            if dense_shape && m > 0 {
                return load_dense(text);
            }
        }
    }
    load_alist(text)
}

pub fn load_alist(text: &str) -> Result<ParityCheck> {
    let mut tk = Tokens::new(text);
    let n = tk.next_usize("n")?;
    let m = tk.next_usize("m")?;
    if n == 0 || m == 0 {
        return Err(Error::parse(1, "matrix dimensions must be positive"));
    }
    let max_col = tk.next_usize("max column degree")?;
    let max_row = tk.next_usize("max row degree")?;
    let col_deg = (0..n).map(|_| tk.next_usize("column degree")).collect::<Result<Vec<_>>>()?;
    let row_deg = (0..m).map(|_| tk.next_usize("row degree")).collect::<Result<Vec<_>>>()?;
    if col_deg.iter().any(|&d| d > max_col) {
        return Err(Error::parse(tk.line(), "column degrees disagree with declared maximum"));
    }
    if row_deg.iter().any(|&d| d > max_row) {
        return Err(Error::parse(tk.line(), "row degrees disagree with declared maximum"));
    }
    let sum_col: usize = col_deg.iter().sum();
    let sum_row: usize = row_deg.iter().sum();
    if sum_col != sum_row {
        return Err(Error::parse(tk.line(), format!("column degrees sum to {sum_col}, row degrees to {sum_row}")));
    }
    let remaining = tk.remaining();
    let padded = if remaining == n * max_col + m * max_row {
        true
    } else if remaining == sum_col + sum_row {
        false
    } else {
        return Err(Error::parse(
            tk.line(),
            format!("adjacency lists have {remaining} entries, expected {} (padded) or {} (unpadded)", n * max_col + m * max_row, sum_col + sum_row),
        ));
    };

    let mut h = BitMatrix::zeros(m, n);
    for (c, &deg) in col_deg.iter().enumerate() {
        let width = if padded { max_col } else { deg };
        let mut seen = 0;
        for _ in 0..width {
            let line = tk.line();
            let idx = tk.next_usize("column adjacency")?;
            if idx == 0 {
                continue;
            }
            if idx > m {
                return Err(Error::parse(line, format!("check index {idx} out of range 1..={m}")));
            }
            if h.get(idx - 1, c) {
                return Err(Error::parse(line, format!("duplicate check index {idx} in column {}", c + 1)));
            }
            h.set(idx - 1, c, true);
            seen += 1;
        }
        if seen != deg {
            return Err(Error::parse(tk.line(), format!("column {} lists {seen} checks, degree says {deg}", c + 1)));
        }
    }
    for (r, &deg) in row_deg.iter().enumerate() {
        let width = if padded { max_row } else { deg };
        let mut seen = 0;
        for _ in 0..width {
            let line = tk.line();
            let idx = tk.next_usize("row adjacency")?;
            if idx == 0 {
                continue;
            }
            if idx > n {
                return Err(Error::parse(line, format!("variable index {idx} out of range 1..={n}")));
            }
            if !h.get(r, idx - 1) {
                return Err(Error::parse(line, format!("row {} lists variable {idx} absent from column lists", r + 1)));
            }
            seen += 1;
        }
        if seen != deg {
            return Err(Error::parse(tk.line(), format!("row {} lists {seen} variables, degree says {deg}", r + 1)));
        }
    }
    ParityCheck::new(h)
}

/// Canonical zero-padded alist text.
pub fn save_alist(code: &ParityCheck) -> String {
    let h = code.matrix();
    let (m, n) = (h.rows(), h.cols());
    let col_deg: Vec<usize> = (0..n).map(|c| h.col_weight(c)).collect();
    let row_deg: Vec<usize> = (0..m).map(|r| h.row_weight(r)).collect();
    let max_col = col_deg.iter().copied().max().unwrap_or(0);
    let max_row = row_deg.iter().copied().max().unwrap_or(0);
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&col_deg));
    let _ = writeln!(out, "{}", join(&row_deg));
    for c in 0..n {
        let mut idx: Vec<usize> = (0..m).filter(|&r| h.get(r, c)).map(|r| r + 1).collect();
        idx.resize(max_col, 0);
        let _ = writeln!(out, "{}", join(&idx));
    }
    for r in 0..m {
        let mut idx: Vec<usize> = h.row_support(r).into_iter().map(|c| c + 1).collect();
        idx.resize(max_row, 0);
        let _ = writeln!(out, "{}", join(&idx));
    }
    out
}

pub fn load_dense(text: &str) -> Result<ParityCheck> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (l0, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let hdr: Vec<&str> = header.split_whitespace().collect();
    if hdr.len() != 2 {
        return Err(Error::parse(l0 + 1, "header must be `n m`"));
    }
    let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::parse(l0 + 1, format!("bad header value {t:?}")));
    let (n, m) = (parse(hdr[0])?, parse(hdr[1])?);
    let mut rows = Vec::with_capacity(m);
    for (i, line) in lines {
        let row = line
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::parse(i + 1, format!("expected 0 or 1, got {t:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if row.len() != n {
            return Err(Error::parse(i + 1, format!("row has {} entries, expected {n}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != m || m == 0 {
        return Err(Error::parse(0, format!("expected {m} rows, found {}", rows.len())));
    }
    ParityCheck::from_rows(&rows)
}

pub fn save_dense(code: &ParityCheck) -> String {
    let h = code.matrix();
    let mut out = format!("{} {}\n", h.cols(), h.rows());
    for r in 0..h.rows() {
        let row: Vec<String> = h.row(r).iter().map(|b| b.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n";

    #[test]
    fn alist_fixture() {
        let code = load_alist(FIXTURE).unwrap();
        assert_eq!(code.matrix().to_dense(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(save_alist(&code), FIXTURE);
        assert_eq!(save_alist(&code), save_alist(&code));
    }

    #[test]
    fn alist_unpadded_is_accepted() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n";
        assert_eq!(load_alist(text).unwrap(), load_alist(FIXTURE).unwrap());
    }

    #[test]
    fn alist_index_out_of_range() {
        let bad = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 4\n";
        assert!(matches!(load_alist(bad), Err(Error::Parse { .. })));
        let bad_col = "3 2\n2 2\n1 2 1\n2 2\n3 0\n1 2\n2 0\n1 2\n2 3\n";
        assert!(matches!(load_alist(bad_col), Err(Error::Parse { .. })));
    }

    #[test]
    fn alist_degree_mismatch() {
        let bad = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 0\n2 0\n1 2\n2 3\n";
        assert!(matches!(load_alist(bad), Err(Error::Parse { .. })));
        assert!(matches!(load_alist("3 2\n2 2\n"), Err(Error::Parse { .. })));
        assert!(matches!(load_alist("x y"), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_column_serializes_with_zero_degree() {
        let code = ParityCheck::from_rows(&[[1u8, 0, 1], [1, 0, 0]]).unwrap();
        let text = save_alist(&code);
        assert!(text.lines().nth(2).unwrap().starts_with("2 0 1"));
        assert_eq!(text.lines().nth(5).unwrap(), "0 0");
        assert_eq!(load_alist(&text).unwrap(), code);
    }

    #[test]
    fn dense_format_and_detection() {
        let dense = "3 2\n1 1 0\n0 1 1\n";
        let a = load_dense(dense).unwrap();
        assert_eq!(a, load_alist(FIXTURE).unwrap());
        assert_eq!(load_code(dense).unwrap(), a);
        assert_eq!(load_code(FIXTURE).unwrap(), a);
        assert_eq!(save_dense(&a), dense);
        assert!(matches!(load_dense("3 2\n1 1 0\n0 2 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn random_systematic_extremes() {
        let z = random_systematic(6, 3, 0.0, 1).unwrap();
        let o = random_systematic(6, 3, 1.0, 1).unwrap();
        for r in 0..3 {
            for c in 0..6 {
                let ident = c < 3 && r == c;
                assert_eq!(z.matrix().get(r, c), ident);
                assert_eq!(o.matrix().get(r, c), ident || c >= 3);
            }
        }
        assert!(random_systematic(6, 6, 0.5, 1).is_err());
        assert!(random_systematic(6, 0, 0.5, 1).is_err());
        assert!(random_systematic(6, 3, 1.5, 1).is_err());
    }

    #[test]
    fn random_systematic_deterministic() {
        let a = random_systematic(64, 32, 0.25, 99).unwrap();
        let b = random_systematic(64, 32, 0.25, 99).unwrap();
        let c = random_systematic(64, 32, 0.25, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.is_full_rank());
    }

    #[test]
    fn stats_examples() {
        let s = stats(&ParityCheck::from_rows(&[[1u8, 1, 1], [1, 1, 0]]).unwrap());
        assert_eq!(s.girth, Girth::Cycle(4));
        let full = BitMatrix::from_rows(&[[1u8, 1], [1, 1]]).unwrap();
        assert_eq!(girth(&full), Girth::Cycle(4));
        let tree = stats(&ParityCheck::from_rows(&[[1u8, 1, 0], [0, 1, 1]]).unwrap());
        assert_eq!(tree.girth, Girth::Acyclic);
        assert!((tree.density - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(tree.row_degrees, vec![2, 2]);
        assert_eq!(tree.col_degrees, vec![1, 2, 1]);
        assert_eq!(stats(&ParityCheck::hamming_7_4()).girth, Girth::Cycle(4));
    }

    #[test]
    fn girth_of_a_six_cycle() {
        // variables 0,1,2 and checks a,b,c forming a single hexagon
        let h = BitMatrix::from_rows(&[[1u8, 1, 0, 0], [0, 1, 1, 0], [1, 0, 1, 0]]).unwrap();
        assert_eq!(girth(&h), Girth::Cycle(6));
    }

    #[test]
    fn sparsity_delta_examples() {
        let base = ParityCheck::from_rows(&[[1u8, 1, 1], [1, 1, 1]]).unwrap();
        assert_eq!(sparsity_delta(&base, &base).unwrap(), 0.0);
        let half = ParityCheck::from_rows(&[[1u8, 0, 1], [0, 1, 0]]).unwrap();
        assert_eq!(sparsity_delta(&base, &half).unwrap(), 50.0);
        let b2 = ParityCheck::from_rows(&[[1u8, 1, 1], [1, 1, 1]]).unwrap();
        let id = ParityCheck::from_rows(&[[1u8, 0, 1], [0, 1, 0]]).unwrap();
        assert_eq!(sparsity_delta(&b2, &id).unwrap(), 50.0);
        let zero = ParityCheck::from_rows(&[[0u8, 0, 0], [0, 0, 0]]).unwrap();
        assert!(matches!(sparsity_delta(&zero, &base), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn sparsity_delta_square_case() {
        // 2x2 all-ones vs identity, embedded in a 2x3 code with an empty column
        let base = ParityCheck::from_rows(&[[1u8, 1, 0], [1, 1, 0]]).unwrap();
        let learned = ParityCheck::from_rows(&[[1u8, 0, 0], [0, 1, 0]]).unwrap();
        assert_eq!(sparsity_delta(&base, &learned).unwrap(), 50.0);
    }

    proptest! {
        #[test]
        fn alist_round_trip(rows in (1usize..8, 2usize..14).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(0u8..2, c.max(r + 1)), r)
        })) {
            let code = ParityCheck::from_rows(&rows).unwrap();
            let text = save_alist(&code);
            prop_assert_eq!(load_alist(&text).unwrap(), code.clone());
            prop_assert_eq!(load_code(&save_dense(&code)).unwrap(), code);
        }
    }
}
