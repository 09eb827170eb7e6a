//! Integer 2×2 matrices, cusps of P^1(Q), and unimodular paths.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

/// (a b; c d) acting on cusps by x ↦ (ax + b)/(cx + d).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Matrix2 {
    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub const IDENTITY: Matrix2 = Matrix2::new(1, 0, 0, 1);
    /// Order four; swaps 0 and ∞.
    pub const SIGMA: Matrix2 = Matrix2::new(0, -1, 1, 0);
    /// Order three; cycles ∞ → 0 → 1 → ∞.
    pub const TAU: Matrix2 = Matrix2::new(0, -1, 1, -1);
    /// The involution x ↦ −x.
    pub const IOTA: Matrix2 = Matrix2::new(1, 0, 0, -1);

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Matrix2) -> Matrix2 {
        Matrix2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// (d −b; −c a); the inverse when det = 1.
    pub fn adjugate(&self) -> Matrix2 {
        Matrix2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn act(&self, x: &Cusp) -> Cusp {
        Cusp::new(self.a * x.num + self.b * x.den, self.c * x.num + self.d * x.den)
    }

    /// Divisor {g∞} − {g0} as a pair of cusps.
    pub fn image_of_base_path(&self) -> (Cusp, Cusp) {
        (Cusp::new(self.a, self.c), Cusp::new(self.b, self.d))
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

/// A cusp num/den in lowest terms with den ≥ 0; ∞ is 1/0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cusp {
    pub num: i64,
    pub den: i64,
}

impl Cusp {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(num != 0 || den != 0, "0/0 is not a cusp");
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 || (d == 0 && n < 0) {
            n = -n;
            d = -d;
        }
        Cusp { num: n, den: d }
    }

    pub fn infinity() -> Self {
        Cusp { num: 1, den: 0 }
    }

    pub fn integer(n: i64) -> Self {
        Cusp { num: n, den: 1 }
    }

    pub fn is_infinity(&self) -> bool {
        self.den == 0
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 0 {
            write!(f, "oo")
        } else if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Matrices h_k ∈ SL2(Z) with {x} − {∞} = Σ_k h_k({∞} − {0}), from the
/// continued-fraction convergents of x.
pub fn path_from_infinity(x: &Cusp) -> Vec<Matrix2> {
    if x.is_infinity() {
        return Vec::new();
    }
    let (mut num, mut den) = (x.num, x.den);
    // convergents p_k/q_k with p_{-1}/q_{-1} = 1/0
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p_prev2, mut q_prev2) = (0i64, 1i64);
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let a = Integer::div_floor(&num, &den);
        let p = a * p_prev + p_prev2;
        let q = a * q_prev + q_prev2;
        // p q_prev − p_prev q = (−1)^{k−1}; flip the second column to get det +1
        let e = if k.is_multiple_of(2) { -1 } else { 1 };
        out.push(Matrix2::new(p, e * p_prev, q, e * q_prev));
        let r = num - a * den;
        if r == 0 {
            break;
        }
        num = den;
        den = r;
        p_prev2 = p_prev;
        q_prev2 = q_prev;
        p_prev = p;
        q_prev = q;
        k += 1;
    }
    out
}

/// Γ_0(n)-equivalence of cusps: s1·b2 ≡ s2·b1 mod gcd(b1·b2, n) with a_i s_i ≡ 1 mod b_i.
pub fn gamma0_equivalent(x: &Cusp, y: &Cusp, n: i64) -> bool {
    let (a1, b1) = (x.num, x.den);
    let (a2, b2) = (y.num, y.den);
    let g = (b1 * b2).gcd(&n);
    let s = |a: i64, b: i64| -> i64 {
        if b == 0 {
            return 0;
        }
        let e = a.extended_gcd(&b);
        e.x.rem_euclid(b.max(1))
    };
    let s1 = s(a1, b1);
    let s2 = s(a2, b2);
    (s1 * b2 - s2 * b1).rem_euclid(g.max(1)) == 0 && b1.gcd(&n) == b2.gcd(&n)
}

/// Γ_1(m)-equivalence of primitive columns up to sign:
/// (X, Y) ~ ±(X', Y') iff Y' ≡ ±Y mod m and X' ≡ ±X mod gcd(Y, m), with the same sign.
/// Returns the sign that works, if any.
pub fn gamma1_column_sign(x: (i64, i64), y: (i64, i64), m: i64) -> Option<i64> {
    let g = x.1.gcd(&m);
    [1i64, -1].into_iter().find(|&s| (y.1 - s * x.1).rem_euclid(m) == 0 && (y.0 - s * x.0).rem_euclid(g.max(1)) == 0 && y.1.gcd(&m) == g)
}
