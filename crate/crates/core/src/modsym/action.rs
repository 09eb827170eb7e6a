//! Right action of integer matrices on moment vectors.
//!
//! A vector v stands for the functional z^m ↦ v_m. The matrix g = (a b; c d)
//! sends a test function f to (a − cz)^w f((dz − b)/(a − cz)), so that
//! (v|g)_j = Σ_i C_{j,i} v_i with C_{j,i} the coefficient of z^i in
//! (dz − b)^j (a − cz)^{w − j}.
//!
//! Two coefficient modules share this formula:
//! * polynomial duals V_k: dimension k + 1, weight k, any integer matrix;
//! * truncated distributions in scaled coordinates y_j = p^j μ_j, where the
//!   matrix is multiplied by p^{j − i}; this needs p ∤ a and p | c.

use crate::error::{Error, Result};
use crate::linalg::{Mat, ResidueRing};

use super::cusp::Matrix2;

#[derive(Clone, Debug)]
pub struct MomentAction {
    ring: ResidueRing,
    weight: i64,
    dim: usize,
    scaled: bool,
    /// binom[n][m] mod p^P, n up to dim + |weight|
    binom: Vec<Vec<u64>>,
}

impl MomentAction {
    /// Dual of homogeneous polynomials of degree k.
    pub fn polynomial(ring: ResidueRing, k: u32) -> Self {
        Self::build(ring, k as i64, k as usize + 1, false)
    }

    /// Distributions of weight `weight` truncated to `moments` moments.
    pub fn distributions(ring: ResidueRing, weight: i64, moments: usize) -> Result<Self> {
        if moments == 0 {
            return Err(Error::Domain("at least one moment is needed".into()));
        }
        Ok(Self::build(ring, weight, moments, true))
    }

    fn build(ring: ResidueRing, weight: i64, dim: usize, scaled: bool) -> Self {
        let size = 2 * dim + weight.unsigned_abs() as usize + 2;
        let mut binom = vec![vec![0u64; size + 1]; size + 1];
        for n in 0..=size {
            binom[n][0] = 1 % ring.modulus();
            for m in 1..=n {
                binom[n][m] = ring.add(binom[n - 1][m - 1], if m < n { binom[n - 1][m] } else { 0 });
            }
        }
        MomentAction {
            ring,
            weight,
            dim,
            scaled,
            binom,
        }
    }

    pub fn ring(&self) -> &ResidueRing {
        &self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn is_distribution(&self) -> bool {
        self.scaled
    }

    /// Valuations p^{e_j} cutting out genuine vectors: y_j ≡ 0 mod p^j for distributions.
    pub fn lattice_exponents(&self) -> Vec<u32> {
        let prec = self.ring.precision();
        (0..self.dim)
            .map(|j| if self.scaled { (j as u32).min(prec) } else { 0 })
            .collect()
    }

    pub fn admissible(&self, g: &Matrix2) -> bool {
        if g.det() == 0 {
            return false;
        }
        if !self.scaled {
            return true;
        }
        let p = self.ring.p() as i64;
        g.a.rem_euclid(p) != 0 && g.c.rem_euclid(p) == 0
    }

    /// binom(e, m) for any integer e.
    fn gen_binom(&self, e: i64, m: usize) -> u64 {
        if e >= 0 {
            let e = e as usize;
            if m > e {
                0
            } else {
                self.binom[e][m]
            }
        } else {
            // binom(e, m) = (−1)^m binom(m − e − 1, m)
            let b = self.binom[m + (-e) as usize - 1][m];
            if m.is_multiple_of(2) {
                b
            } else {
                self.ring.neg(b)
            }
        }
    }

    /// Matrix of v ↦ v|g.
    pub fn matrix(&self, g: &Matrix2) -> Mat {
        assert!(self.admissible(g), "matrix {g} does not act on this module");
        let r = &self.ring;
        let dim = self.dim;
        let p = r.p() as i64;
        let (a, b, c, d) = (g.a, g.b, g.c, g.d);
        let n_pow = 2 * dim + self.weight.unsigned_abs() as usize + 1;
        let powers = |x: i64| -> Vec<u64> {
            let x = r.from_i64(x);
            let mut out = Vec::with_capacity(n_pow + 1);
            let mut cur = 1 % r.modulus();
            for _ in 0..=n_pow {
                out.push(cur);
                cur = r.mul(cur, x);
            }
            out
        };
        let d_pow = powers(d);
        let mb_pow = powers(-b);
        let a_pow = powers(a);
        let a_inv_pow = if a.rem_euclid(p) != 0 {
            Some(powers(r.to_signed(r.inv_unit(r.from_i64(a)).expect("unit"))))
        } else {
            None
        };
        // for distributions split −c = p^v c' and keep p^v apart
        let (cv, c_unit) = if self.scaled && c != 0 {
            let mut v = 0u32;
            let mut cc = -c;
            while cc % p == 0 {
                cc /= p;
                v += 1;
            }
            (v, cc)
        } else {
            (0, -c)
        };
        let mc_pow = powers(c_unit);
        let a_power = |e: i64| -> u64 {
            if e >= 0 {
                a_pow[e as usize]
            } else {
                a_inv_pow.as_ref().expect("negative power of a non-unit")[(-e) as usize]
            }
        };
        let prec = r.precision() as i64;
        let mut out = Mat::zeros(dim, dim);
        for j in 0..dim {
            let e = self.weight - j as i64;
            for l in 0..=j.min(dim - 1) {
                let left = r.mul(self.binom[j][l], r.mul(d_pow[l], mb_pow[j - l]));
                if left == 0 {
                    continue;
                }
                for i in l..dim {
                    let m = i - l;
                    if c == 0 && m > 0 {
                        break;
                    }
                    let bin = self.gen_binom(e, m);
                    if bin == 0 {
                        continue;
                    }
                    let mut term = r.mul(left, r.mul(bin, r.mul(a_power(e - m as i64), mc_pow[m])));
                    if self.scaled {
                        // p^{j−i} (−c)^m = p^{v m + j − i} (−c')^m, exponent ≥ j − l ≥ 0
                        let ex = cv as i64 * m as i64 + j as i64 - i as i64;
                        debug_assert!(ex >= 0);
                        if ex >= prec {
                            continue;
                        }
                        term = r.mul(term, r.pow_p(ex as u32));
                    }
                    out.set(j, i, r.add(out.get(j, i), term));
                }
            }
        }
        out
    }

    /// v ↦ v|g on a single vector.
    pub fn act(&self, g: &Matrix2, v: &[u64]) -> Vec<u64> {
        self.matrix(g).mul_vec(&self.ring, v)
    }

    /// Coordinates of the evaluation functional P ↦ Y^k P(X/Y) on V_k.
    pub fn evaluation_at(&self, x: i64, y: i64) -> Vec<u64> {
        let r = &self.ring;
        let k = self.dim - 1;
        let xs: Vec<u64> = (0..=k).scan(1 % r.modulus(), |s, _| {
            let cur = *s;
            *s = r.mul(*s, r.from_i64(x));
            Some(cur)
        })
        .collect();
        let ys: Vec<u64> = (0..=k).scan(1 % r.modulus(), |s, _| {
            let cur = *s;
            *s = r.mul(*s, r.from_i64(y));
            Some(cur)
        })
        .collect();
        (0..=k).map(|m| r.mul(xs[m], ys[k - m])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lattice_vec(act: &MomentAction, raw: &[u64]) -> Vec<u64> {
        let r = act.ring();
        raw.iter()
            .zip(act.lattice_exponents())
            .map(|(&x, e)| r.mul(x % r.modulus(), r.pow_p(e)))
            .collect()
    }

    #[test]
    fn polynomial_identity_and_sign() {
        let r = ResidueRing::new(5, 6).unwrap();
        let m = MomentAction::polynomial(r.clone(), 3);
        assert_eq!(m.matrix(&Matrix2::IDENTITY), Mat::identity(4));
        let minus = m.matrix(&Matrix2::new(-1, 0, 0, -1));
        let neg_id = {
            let mut x = Mat::zeros(4, 4);
            for i in 0..4 {
                x.set(i, i, r.neg(1));
            }
            x
        };
        assert_eq!(minus, neg_id);
    }

    #[test]
    fn evaluation_functional_transforms() {
        // v_{w} | g = v_{g^{-1} w} for g ∈ SL2
        let r = ResidueRing::new(7, 5).unwrap();
        let m = MomentAction::polynomial(r, 4);
        let g = Matrix2::new(2, 3, 5, 8);
        assert_eq!(g.det(), 1);
        let (x, y) = (3, -4);
        let gi = g.adjugate();
        let lhs = m.act(&g, &m.evaluation_at(x, y));
        let rhs = m.evaluation_at(gi.a * x + gi.b * y, gi.c * x + gi.d * y);
        assert_eq!(lhs, rhs);
    }

    proptest! {
        #[test]
        fn polynomial_is_right_action(a in -9i64..9, b in -9i64..9, c in -9i64..9, d in -9i64..9,
                                      e in -9i64..9, f in -9i64..9, g in -9i64..9, h in -9i64..9) {
            let r = ResidueRing::new(3, 8).unwrap();
            let m = MomentAction::polynomial(r.clone(), 4);
            let g1 = Matrix2::new(a, b, c, d);
            let g2 = Matrix2::new(e, f, g, h);
            prop_assume!(g1.det() != 0 && g2.det() != 0);
            let lhs = m.matrix(&g1.mul(&g2));
            let rhs = m.matrix(&g2).mul(&r, &m.matrix(&g1));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn distributions_right_action_on_lattice(
            a in 1i64..40, b in -30i64..30, c in -6i64..6, d in -30i64..30,
            e in 1i64..40, f in -30i64..30, g in -6i64..6, h in -30i64..30,
            weight in -4i64..6, raw in prop::collection::vec(0u64..1_000_000, 8)) {
            let p = 3i64;
            let g1 = Matrix2::new(a, b, p * c, d);
            let g2 = Matrix2::new(e, f, p * g, h);
            prop_assume!(a % p != 0 && e % p != 0 && g1.det() != 0 && g2.det() != 0);
            let r = ResidueRing::new(3, 8).unwrap();
            let m = MomentAction::distributions(r.clone(), weight, 8).unwrap();
            let v = lattice_vec(&m, &raw);
            let lhs = m.act(&g1.mul(&g2), &v);
            let rhs = m.act(&g2, &m.act(&g1, &v));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn distributions_reject_bad_matrices() {
        let r = ResidueRing::new(3, 4).unwrap();
        let m = MomentAction::distributions(r, 0, 4).unwrap();
        assert!(!m.admissible(&Matrix2::new(3, 0, 0, 1)));
        assert!(!m.admissible(&Matrix2::new(1, 0, 1, 1)));
        assert!(m.admissible(&Matrix2::new(1, 2, 0, 3)));
    }
}
