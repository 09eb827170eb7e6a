//! P^1(Z/n): right cosets of Γ_0(n) in SL2(Z), indexed by bottom rows.

use num_integer::Integer;

use super::cusp::Matrix2;

#[derive(Clone, Debug)]
pub struct P1 {
    n: u64,
    points: Vec<(u64, u64)>,
    /// (c, d) mod n ↦ index; usize::MAX off P^1
    index: Vec<usize>,
    lifts: Vec<Matrix2>,
}

impl P1 {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1);
        let nn = n as usize;
        let units: Vec<u64> = (1..=n).filter(|u| u.gcd(&n) == 1).map(|u| u % n).collect();
        let mut index = vec![usize::MAX; nn * nn];
        let mut points = Vec::new();
        let mut lifts = Vec::new();
        for c in 0..n {
            for d in 0..n {
                if c.gcd(&d).gcd(&n) != 1 || index[(c * n + d) as usize] != usize::MAX {
                    continue;
                }
                // (c, d) is the lexicographic minimum of its class since we scan in order
                let id = points.len();
                points.push((c, d));
                lifts.push(lift_to_sl2(c as i64, d as i64, n as i64));
                for &u in &units {
                    let key = ((u * c) % n * n + (u * d) % n) as usize;
                    index[key] = id;
                }
            }
        }
        P1 {
            n,
            points,
            index,
            lifts,
        }
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> (u64, u64) {
        self.points[i]
    }

    /// A matrix in SL2(Z) whose bottom row reduces to the i-th point.
    pub fn lift(&self, i: usize) -> Matrix2 {
        self.lifts[i]
    }

    pub fn index_of(&self, c: i64, d: i64) -> usize {
        let n = self.n as i64;
        let key = (c.rem_euclid(n) * n + d.rem_euclid(n)) as usize;
        let i = self.index[key];
        assert!(i != usize::MAX, "({c}:{d}) is not in P^1(Z/{n})");
        i
    }

    /// Coset of a matrix in SL2(Z), read from its bottom row.
    pub fn coset_of(&self, m: &Matrix2) -> usize {
        self.index_of(m.c, m.d)
    }
}

/// Lift a bottom row (c : d) with gcd(c, d, n) = 1 to SL2(Z).
fn lift_to_sl2(c: i64, d: i64, n: i64) -> Matrix2 {
    if n == 1 {
        return Matrix2::IDENTITY;
    }
    for t in 0.. {
        for s in 0..=t {
            let c1 = c + s * n;
            let d1 = d + (t - s) * n;
            if c1.gcd(&d1) == 1 {
                let e = d1.extended_gcd(&c1);
                // a d1 − b c1 = 1 with a = e.x, b = −e.y
                return Matrix2::new(e.x, -e.y, c1, d1);
            }
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi(n: u64) -> u64 {
        // index of Γ_0(n): n Π (1 + 1/q)
        let mut m = n;
        let mut out = n;
        let mut q = 2;
        while q * q <= m {
            if m.is_multiple_of(q) {
                out = out / q * (q + 1);
                while m.is_multiple_of(q) {
                    m /= q;
                }
            }
            q += 1;
        }
        if m > 1 {
            out = out / m * (m + 1);
        }
        out
    }

    #[test]
    fn coset_counts() {
        assert_eq!(P1::new(33).len(), 48);
        assert_eq!(P1::new(60).len(), 144);
        for n in 1..80 {
            assert_eq!(P1::new(n).len() as u64, psi(n), "n = {n}");
        }
    }

    #[test]
    fn lifts_are_consistent() {
        for n in [1u64, 2, 11, 33, 36, 60] {
            let p1 = P1::new(n);
            for i in 0..p1.len() {
                let g = p1.lift(i);
                assert_eq!(g.det(), 1);
                assert_eq!(p1.coset_of(&g), i);
            }
        }
    }
}
