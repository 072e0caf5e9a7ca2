//! Dense GF(2) linear algebra.
//!
//! [`BitMatrix`] stores rows as packed `u64` words. Callers address single
//! bits by `(row, col)`; the packing is an internal detail.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// All-zero matrix. Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "BitMatrix needs rows >= 1 and cols >= 1");
        let words_per_row = cols.div_ceil(WORD);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// `rows x cols` matrix with ones on the leading diagonal.
    pub fn identity_padded(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::InvalidParams("matrix needs at least one row".into()));
        }
        let ncols = rows[0].as_ref().len();
        if ncols == 0 {
            return Err(Error::InvalidParams("matrix needs at least one column".into()));
        }
        let mut m = Self::zeros(nrows, ncols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "BitMatrix::from_rows",
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(r, c, true),
                    _ => return Err(Error::InvalidParams(format!("entry ({r},{c}) is {b}, not a bit"))),
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.words_per_row + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.words_per_row + c / WORD];
        let mask = 1u64 << (c % WORD);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words_per_row + c / WORD] ^= 1u64 << (c % WORD);
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words_per_row {
            self.data.swap(a * self.words_per_row + w, b * self.words_per_row + w);
        }
    }

    /// `row[dst] ^= row[src]`
    fn xor_row(&mut self, src: usize, dst: usize) {
        let wpr = self.words_per_row;
        for w in 0..wpr {
            let v = self.data[src * wpr + w];
            self.data[dst * wpr + w] ^= v;
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            let (x, y) = (self.get(r, a), self.get(r, b));
            if x != y {
                self.set(r, a, y);
                self.set(r, b, x);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    /// Row `r` as 0/1 values.
    pub fn row(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    /// Column `c` as 0/1 values.
    pub fn col(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c) as u8).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Matrix with column `p` taken from column `perm[p]` of `self`.
    pub fn permute_cols(&self, perm: &[usize]) -> BitMatrix {
        assert_eq!(perm.len(), self.cols);
        let mut out = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (p, &src) in perm.iter().enumerate() {
                if self.get(r, src) {
                    out.set(r, p, true);
                }
            }
        }
        out
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "BitMatrix::mul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let wpr = out.words_per_row;
                    for w in 0..wpr {
                        out.data[r * wpr + w] ^= other.data[k * other.words_per_row + w];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        write!(f, "]")
    }
}

/// Reduces `m` in place to reduced row echelon form restricted to pivot
/// search over columns `start..`, swapping columns into pivot position when
/// needed. Returns the rank and records column swaps in `perm`.
fn eliminate(m: &mut BitMatrix, perm: &mut [usize], allow_col_swaps: bool) -> usize {
    let mut rank = 0;
    let mut col = 0;
    while rank < m.rows && col < m.cols {
        let pivot = (rank..m.rows).find(|&r| m.get(r, col));
        let pivot = match pivot {
            Some(p) => Some((p, col)),
            None if allow_col_swaps => {
                // first later column with a usable pivot
                (col + 1..m.cols).find_map(|c| (rank..m.rows).find(|&r| m.get(r, c)).map(|r| (r, c)))
            }
            None => None,
        };
        match pivot {
            Some((pr, pc)) => {
                if pc != col {
                    m.swap_cols(col, pc);
                    perm.swap(col, pc);
                }
                m.swap_rows(rank, pr);
                for r in 0..m.rows {
                    if r != rank && m.get(r, col) {
                        m.xor_row(rank, r);
                    }
                }
                rank += 1;
                col += 1;
            }
            None => {
                if allow_col_swaps {
                    break;
                }
                col += 1;
            }
        }
    }
    rank
}

/// GF(2) rank by row reduction.
pub fn rank(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    let mut perm: Vec<usize> = (0..m.cols).collect();
    eliminate(&mut work, &mut perm, false)
}

/// Brings a full-row-rank `h` to the form `[I | P]`.
///
/// Returns the reduced matrix together with `col_perm`, where column `p` of
/// the result comes from column `col_perm[p]` of `h` (after row operations).
pub fn to_systematic(h: &BitMatrix) -> Result<(BitMatrix, Vec<usize>)> {
    let mut work = h.clone();
    let mut perm: Vec<usize> = (0..h.cols).collect();
    let r = eliminate(&mut work, &mut perm, true);
    if r < h.rows {
        return Err(Error::RankDeficient {
            rank: r,
            required: h.rows,
        });
    }
    Ok((work, perm))
}

/// Generator matrix `G` (k x n) with `G * H^T = 0`.
pub fn generator_from(h: &BitMatrix) -> Result<BitMatrix> {
    let (hs, perm) = to_systematic(h)?;
    let m = h.rows;
    let n = h.cols;
    if m >= n {
        return Err(Error::InvalidParams(format!("parity-check matrix {m}x{n} leaves no message bits")));
    }
    let k = n - m;
    // In permuted coordinates G_sys = [P^T | I_k].
    let mut g = BitMatrix::zeros(k, n);
    for row in 0..k {
        for j in 0..m {
            if hs.get(j, m + row) {
                g.set(row, perm[j], true);
            }
        }
        g.set(row, perm[m + row], true);
    }
    Ok(g)
}

/// `H * word` over GF(2).
pub fn syndrome(h: &BitMatrix, word: &[u8]) -> Result<Vec<u8>> {
    if word.len() != h.cols {
        return Err(Error::DimensionMismatch {
            context: "syndrome",
            expected: h.cols,
            got: word.len(),
        });
    }
    let packed = pack(word);
    Ok((0..h.rows)
        .map(|r| {
            let ones: u32 = h
                .row_words(r)
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            (ones & 1) as u8
        })
        .collect())
}

/// True when `H * word = 0`.
pub fn is_codeword(h: &BitMatrix, word: &[u8]) -> Result<bool> {
    Ok(syndrome(h, word)?.iter().all(|&s| s == 0))
}

/// `m * G` over GF(2).
pub fn encode(g: &BitMatrix, msg: &[u8]) -> Result<Vec<u8>> {
    if msg.len() != g.rows {
        return Err(Error::DimensionMismatch {
            context: "encode",
            expected: g.rows,
            got: msg.len(),
        });
    }
    let mut acc = vec![0u64; g.words_per_row];
    for (r, &b) in msg.iter().enumerate() {
        if b & 1 == 1 {
            for (a, w) in acc.iter_mut().zip(g.row_words(r)) {
                *a ^= w;
            }
        }
    }
    Ok((0..g.cols).map(|c| ((acc[c / WORD] >> (c % WORD)) & 1) as u8).collect())
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(WORD)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / WORD] |= 1 << (i % WORD);
        }
    }
    out
}
