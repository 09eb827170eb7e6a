//! Dense linear algebra over the chain ring Z/p^P.
//!
//! Everything reduces to a Smith-style elimination with full pivoting on
//! minimal valuation. Row operations are applied to an optional right-hand
//! side; column operations are recorded so kernels and module generators can
//! be read off.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Z/p^P with residues stored as u64.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueRing {
    p: u64,
    prec: u32,
    modulus: u64,
}

impl ResidueRing {
    pub fn new(p: u64, prec: u32) -> Result<Self> {
        if prec == 0 {
            return Err(Error::PrecisionExhausted("zero working precision".into()));
        }
        let mut m: u64 = 1;
        for _ in 0..prec {
            m = m
                .checked_mul(p)
                .filter(|&x| x < (1u64 << 62))
                .ok_or_else(|| Error::Unsupported(format!("{p}^{prec} does not fit a machine word")))?;
        }
        Ok(ResidueRing { p, prec, modulus: m })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.modulus < (1u64 << 32) {
            a * b % self.modulus
        } else {
            ((a as u128 * b as u128) % self.modulus as u128) as u64
        }
    }

    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.modulus as i64) as u64
    }

    pub fn from_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }

    /// Balanced representative in (-m/2, m/2].
    pub fn to_signed(&self, x: u64) -> i64 {
        if x > self.modulus / 2 {
            x as i64 - self.modulus as i64
        } else {
            x as i64
        }
    }

    pub fn pow_p(&self, e: u32) -> u64 {
        if e >= self.prec {
            return 0;
        }
        self.p.pow(e)
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a % self.modulus;
        let mut acc = 1 % self.modulus;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Valuation, with zero mapped to P.
    pub fn val(&self, mut x: u64) -> u32 {
        if x == 0 {
            return self.prec;
        }
        let mut v = 0;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.p)
    }

    pub fn inv_unit(&self, x: u64) -> Option<u64> {
        if !self.is_unit(x) {
            return None;
        }
        let (mut r0, mut r1) = (self.modulus as i128, x as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Some(self.from_i128(t0))
    }

    /// Split x = p^v * u with u a unit (u = 0 only for x = 0).
    pub fn split(&self, x: u64) -> (u32, u64) {
        if x == 0 {
            return (self.prec, 0);
        }
        let v = self.val(x);
        (v, x / self.p.pow(v))
    }
}

/// Row-major dense matrix of residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_columns(rows: usize, cols: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &x) in c.iter().enumerate() {
                m.data[i * m.cols + j] = x;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, ring: &ResidueRing, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .into_par_iter()
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| ring.add(acc, ring.mul(a, b)))
            })
            .collect()
    }

    pub fn mul(&self, ring: &ResidueRing, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        out.data
            .par_chunks_mut(other.cols.max(1))
            .enumerate()
            .for_each(|(i, orow)| {
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a == 0 {
                        continue;
                    }
                    for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                        *o = ring.add(*o, ring.mul(a, b));
                    }
                }
            });
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn vstack(blocks: &[Mat]) -> Mat {
        let cols = blocks.first().map(|b| b.cols).unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols);
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Mat { rows, cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

/// Result of the diagonal reduction `U A V = diag(p^v_0, p^v_1, ...)`.
#[derive(Clone, Debug)]
pub struct Smith {
    /// Pivot valuations, non-decreasing, all < P.
    pub pivots: Vec<u32>,
    /// The column transform V (cols × cols).
    pub col_transform: Mat,
    /// U applied to the right-hand side passed in, if any.
    pub rhs: Option<Mat>,
}

/// Diagonalize `a`, applying row operations to `rhs` too.
pub fn smith(ring: &ResidueRing, a: &Mat, rhs: Option<&Mat>) -> Smith {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut b = rhs.cloned();
    if let Some(b) = &b {
        assert_eq!(b.rows, m);
    }
    let mut v = Mat::identity(n);
    let mut pivots = Vec::new();
    for k in 0..m.min(n) {
        // full pivot search on minimal valuation
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for i in k..m {
            for j in k..n {
                let x = w.get(i, j);
                if x == 0 {
                    continue;
                }
                let vx = ring.val(x);
                if best.map(|(bv, _, _)| vx < bv).unwrap_or(true) {
                    best = Some((vx, i, j));
                    if vx == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((pv, pi, pj)) = best else { break };
        w.swap_rows(k, pi);
        if let Some(b) = b.as_mut() {
            b.swap_rows(k, pi);
        }
        w.swap_cols(k, pj);
        v.swap_cols(k, pj);

        // normalize the pivot to p^pv
        let (_, unit) = ring.split(w.get(k, k));
        let uinv = ring.inv_unit(unit).unwrap();
        for j in k..n {
            let x = w.get(k, j);
            w.set(k, j, ring.mul(x, uinv));
        }
        if let Some(b) = b.as_mut() {
            for j in 0..b.cols {
                let x = b.get(k, j);
                b.set(k, j, ring.mul(x, uinv));
            }
        }
        let scale = ring.p().pow(pv);

        // clear the pivot column below
        let pivot_row: Vec<u64> = w.row(k)[k..].to_vec();
        let factors: Vec<u64> = (0..m)
            .map(|i| if i > k { w.get(i, k) / scale } else { 0 })
            .collect();
        w.data
            .par_chunks_mut(n)
            .enumerate()
            .skip(k + 1)
            .for_each(|(i, row)| {
                let f = factors[i];
                if f == 0 {
                    return;
                }
                for (x, &pr) in row[k..].iter_mut().zip(&pivot_row) {
                    *x = ring.sub(*x, ring.mul(f, pr));
                }
            });
        if let Some(b) = b.as_mut() {
            let bc = b.cols;
            if bc > 0 {
                let brow: Vec<u64> = b.row(k).to_vec();
                b.data
                    .par_chunks_mut(bc)
                    .enumerate()
                    .skip(k + 1)
                    .for_each(|(i, row)| {
                        let f = factors[i];
                        if f == 0 {
                            return;
                        }
                        for (x, &pr) in row.iter_mut().zip(&brow) {
                            *x = ring.sub(*x, ring.mul(f, pr));
                        }
                    });
            }
        }

        // clear the pivot row to the right; only row k and V change
        let col_factors: Vec<(usize, u64)> = (k + 1..n)
            .filter_map(|j| {
                let x = w.get(k, j);
                (x != 0).then(|| (j, x / scale))
            })
            .collect();
        for &(j, _) in &col_factors {
            w.set(k, j, 0);
        }
        if !col_factors.is_empty() {
            v.data.par_chunks_mut(n).for_each(|row| {
                let base = row[k];
                if base == 0 {
                    return;
                }
                for &(j, f) in &col_factors {
                    row[j] = ring.sub(row[j], ring.mul(f, base));
                }
            });
        }
        pivots.push(pv);
    }
    Smith {
        pivots,
        col_transform: v,
        rhs: b,
    }
}

/// Generators of {x : A x = 0} as columns.
pub fn kernel(ring: &ResidueRing, a: &Mat) -> Vec<Vec<u64>> {
    let s = smith(ring, a, None);
    let n = a.cols;
    let mut gens = Vec::new();
    for i in 0..n {
        let col = s.col_transform.column(i);
        if i < s.pivots.len() {
            let pv = s.pivots[i];
            if pv == 0 {
                continue;
            }
            let f = ring.pow_p(ring.precision() - pv);
            gens.push(col.iter().map(|&x| ring.mul(x, f)).collect());
        } else {
            gens.push(col);
        }
    }
    gens
}

/// One solution of A x = b, or None when the system is inconsistent.
pub fn solve(ring: &ResidueRing, a: &Mat, b: &[u64]) -> Option<Vec<u64>> {
    let rhs = Mat::from_columns(a.rows, &[b.to_vec()]);
    let s = smith(ring, a, Some(&rhs));
    let ub = s.rhs.unwrap().column(0);
    let mut y = vec![0u64; a.cols];
    for (i, &x) in ub.iter().enumerate() {
        if i < s.pivots.len() {
            let pv = s.pivots[i];
            if ring.val(x) < pv {
                return None;
            }
            y[i] = x / ring.p().pow(pv);
        } else if x != 0 {
            return None;
        }
    }
    Some(s.col_transform.mul_vec(ring, &y))
}

/// A module that should be cyclic up to small torsion, given by generators.
#[derive(Clone, Debug)]
pub struct Line {
    /// Primitive generator of the dominant cyclic summand.
    pub generator: Vec<u64>,
    /// The generator is determined modulo p^(P − loss) up to a unit.
    pub loss: u32,
    /// Number of summands of maximal order.
    pub rank_mod_p: usize,
}

/// Decompose the span of `gens` (columns) and extract its dominant cyclic summand.
///
/// With Smith exponents v_0 ≤ v_1 ≤ …, the span is generated by p^{v_0}h
/// plus torsion sitting in p^{v_1}; h is then known modulo p^(v_1 − v_0).
pub fn free_line(ring: &ResidueRing, dim: usize, gens: &[Vec<u64>]) -> Result<Line> {
    let prec = ring.precision();
    if gens.is_empty() {
        return Err(Error::Rank {
            rank: 0,
            digits: prec,
            detail: "empty eigenspace".into(),
        });
    }
    let a = Mat::from_columns(dim, gens);
    let s = smith(ring, &a, None);
    let v0 = s.pivots.first().copied().unwrap_or(prec);
    if v0 >= prec {
        return Err(Error::Rank {
            rank: 0,
            digits: 0,
            detail: "eigenspace is zero at working precision".into(),
        });
    }
    let top = s.pivots.iter().filter(|&&v| v == v0).count();
    if top >= 2 {
        return Err(Error::Rank {
            rank: top,
            digits: prec - v0,
            detail: format!("torsion exponents {:?}", torsion(prec, &s.pivots)),
        });
    }
    let v1 = s.pivots.get(1).copied().unwrap_or(prec);
    let g = a.mul_vec(ring, &s.col_transform.column(0));
    let f = ring.p().pow(v0);
    debug_assert!(g.iter().all(|&x| x % f == 0));
    let generator = g.iter().map(|&x| x / f).collect();
    Ok(Line {
        generator,
        loss: prec - v1 + v0,
        rank_mod_p: top,
    })
}

fn torsion(prec: u32, pivots: &[u32]) -> Vec<u32> {
    pivots.iter().map(|&v| prec - v).collect()
}
