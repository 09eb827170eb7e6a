//! Truncated p-adic distributions on Z_p, stored by their moments.
//!
//! A distribution μ of weight w is recorded through m_j = μ(z^j) for j < M.
//! Moment j is trusted modulo p^(N − j) at base precision N (the filtration
//! rule); each moment also carries its own absolute precision, which every
//! operation lowers conservatively.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ResidueRing;
use crate::modsym::Matrix2;
use crate::padic::PadicNumber;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncDist {
    p: u64,
    weight: i64,
    base_prec: i64,
    moments: Vec<PadicNumber>,
}

fn binomial(n: &BigInt, m: usize) -> BigInt {
    // n(n−1)…(n−m+1)/m! for any integer n
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for t in 0..m {
        num *= n - BigInt::from(t);
        den *= BigInt::from(t + 1);
    }
    num / den
}

fn falling(j: usize, count: usize) -> BigInt {
    (0..count).fold(BigInt::one(), |acc, t| acc * BigInt::from(j as i64 - t as i64))
}

impl TruncDist {
    /// Moments are cut down to the filtration: moment j keeps at most N − j digits.
    pub fn new(p: u64, weight: i64, base_prec: i64, moments: Vec<PadicNumber>) -> Self {
        let moments = moments
            .into_iter()
            .enumerate()
            .map(|(j, m)| {
                let cap = (base_prec - j as i64).max(0);
                if m.precision() > cap {
                    m.with_precision(cap)
                } else {
                    m
                }
            })
            .collect();
        TruncDist {
            p,
            weight,
            base_prec,
            moments,
        }
    }

    pub fn zero(p: u64, weight: i64, moments: usize, base_prec: i64) -> Self {
        let ms = (0..moments).map(|_| PadicNumber::zero(p, base_prec)).collect();
        Self::new(p, weight, base_prec, ms)
    }

    pub fn from_ints(p: u64, weight: i64, base_prec: i64, moments: &[i64]) -> Self {
        let ms = moments.iter().map(|&m| PadicNumber::from_int(p, base_prec, m)).collect();
        Self::new(p, weight, base_prec, ms)
    }

    /// δ_c: m_i = c^i.
    pub fn dirac(c: &PadicNumber, weight: i64, moments: usize, base_prec: i64) -> Result<Self> {
        Self::dirac_deriv(c, 0, weight, moments, base_prec)
    }

    /// f ↦ f^{(j)}(c): m_i = i!/(i − j)!·c^{i − j} for i ≥ j.
    pub fn dirac_deriv(c: &PadicNumber, j: usize, weight: i64, moments: usize, base_prec: i64) -> Result<Self> {
        let p = c.p();
        if c.valuation().map(|v| v < 0).unwrap_or(false) {
            return Err(Error::Domain("dirac point must lie in Z_p".into()));
        }
        if j >= moments {
            return Err(Error::Domain(format!("derivative order {j} needs more than {moments} moments")));
        }
        let c = c.lift_precision(base_prec.max(c.precision()));
        let mut ms = Vec::with_capacity(moments);
        for i in 0..moments {
            if i < j {
                ms.push(PadicNumber::zero(p, base_prec));
            } else {
                let coef = PadicNumber::from_bigint(p, base_prec, &falling(i, j));
                if i == j {
                    ms.push(coef);
                } else {
                    ms.push(coef.mul_ref(&c.pow((i - j) as i64)?));
                }
            }
        }
        Ok(Self::new(p, weight, base_prec, ms))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn base_precision(&self) -> i64 {
        self.base_prec
    }

    pub fn num_moments(&self) -> usize {
        self.moments.len()
    }

    pub fn moment(&self, j: usize) -> &PadicNumber {
        &self.moments[j]
    }

    pub fn moments(&self) -> &[PadicNumber] {
        &self.moments
    }

    /// Trusted absolute precision of each moment.
    pub fn trusted(&self) -> Vec<i64> {
        self.moments.iter().map(|m| m.precision()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.moments.iter().all(|m| m.is_zero())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.p != other.p || self.weight != other.weight || self.moments.len() != other.moments.len() {
            return Err(Error::Domain("distributions of different shape".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let ms = self.moments.iter().zip(&other.moments).map(|(a, b)| a.add_ref(b)).collect();
        Ok(Self::new(self.p, self.weight, self.base_prec.min(other.base_prec), ms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let ms = self.moments.iter().zip(&other.moments).map(|(a, b)| a.sub_ref(b)).collect();
        Ok(Self::new(self.p, self.weight, self.base_prec.min(other.base_prec), ms))
    }

    pub fn scale(&self, c: &PadicNumber) -> Self {
        let ms = self.moments.iter().map(|m| m.mul_ref(c)).collect();
        Self::new(self.p, self.weight, self.base_prec, ms)
    }

    /// Equal on every digit both sides trust.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.same_shape(other).is_ok() && self.moments.iter().zip(&other.moments).all(|(a, b)| a.congruent(b))
    }

    /// μ ↦ μ|γ for γ = (a b; c d) with p ∤ a, p | c, det ≠ 0:
    /// m'_j = Σ_i C_{j,i} m_i, C_{j,i} the z^i coefficient of (dz − b)^j (a − cz)^{w−j}.
    pub fn act(&self, g: &Matrix2) -> Result<Self> {
        let p = self.p as i64;
        if g.det() == 0 || g.a.rem_euclid(p) == 0 || g.c.rem_euclid(p) != 0 {
            return Err(Error::Domain(format!("{g} is not in S_0({p})")));
        }
        let big_m = self.moments.len();
        let work = self.base_prec + 2 * big_m as i64 + 4;
        let pa = PadicNumber::from_int(self.p, work, g.a);
        let cv = if g.c == 0 {
            None
        } else {
            Some(crate::padic::int_valuation(self.p, &BigInt::from(g.c)))
        };
        let mut out = Vec::with_capacity(big_m);
        for j in 0..big_m {
            let e = self.weight - j as i64;
            let mut acc = PadicNumber::zero(self.p, work);
            for i in 0..big_m {
                let mut c = PadicNumber::zero(self.p, work);
                for l in 0..=j.min(i) {
                    let m = i - l;
                    if g.c == 0 && m > 0 {
                        continue;
                    }
                    let left = binomial(&BigInt::from(j), l)
                        * BigInt::from(g.d).pow(l as u32)
                        * BigInt::from(-g.b).pow((j - l) as u32);
                    let right = binomial(&BigInt::from(e), m) * BigInt::from(-g.c).pow(m as u32);
                    let term = PadicNumber::from_bigint(self.p, work, &(left * right));
                    c = c.add_ref(&term.mul_ref(&pa.pow(e - m as i64)?));
                }
                acc = acc.add_ref(&c.mul_ref(&self.moments[i]));
            }
            // moments beyond M enter through (−c)^{i−l} with i ≥ M, l ≤ j
            if let Some(v) = cv {
                let tail = v * (big_m - j) as i64;
                if acc.precision() > tail {
                    acc = acc.with_precision(tail);
                }
            }
            out.push(acc);
        }
        Ok(Self::new(self.p, self.weight, self.base_prec, out))
    }

    /// Θ_k: weight −2−k to weight k, (Θμ)_j = j(j−1)…(j−k) m_{j−k−1}.
    pub fn theta_k(&self, k: u32) -> Result<Self> {
        let k = k as usize;
        if self.weight != -2 - k as i64 {
            return Err(Error::Domain(format!("Θ_{k} needs weight {}", -2 - k as i64)));
        }
        if self.moments.len() <= k + 1 {
            return Err(Error::PrecisionExhausted(format!(
                "Θ_{k} needs more than {} moments",
                k + 1
            )));
        }
        let ms = (0..self.moments.len())
            .map(|j| {
                if j <= k {
                    PadicNumber::zero(self.p, self.base_prec)
                } else {
                    let f = PadicNumber::from_bigint(self.p, self.base_prec + 8, &falling(j, k + 1));
                    f.mul_ref(&self.moments[j - k - 1])
                }
            })
            .collect();
        Ok(Self::new(self.p, k as i64, self.base_prec, ms))
    }

    /// ρ_k: the first k + 1 moments, i.e. μ restricted to polynomials of degree ≤ k.
    pub fn rho_k(&self, k: u32) -> Result<Vec<PadicNumber>> {
        let k = k as usize;
        if self.moments.len() < k + 1 {
            return Err(Error::PrecisionExhausted(format!("ρ_{k} needs {} moments", k + 1)));
        }
        Ok(self.moments[..=k].to_vec())
    }

    /// Scaled coordinates y_j = p^j m_j mod p^P. Panics if some p^j m_j is
    /// not integral, i.e. the distribution is outside the lattice.
    pub fn to_scaled(&self, ring: &ResidueRing) -> Vec<u64> {
        let modulus = num_bigint::BigUint::from(ring.modulus());
        let p = num_bigint::BigUint::from(ring.p());
        self.moments
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let Some(v) = m.valuation() else { return 0 };
                let e = v + j as i64;
                assert!(e >= 0, "moment {j} is outside the lattice");
                if e >= ring.precision() as i64 {
                    return 0;
                }
                let big = (m.unit() * p.pow(e as u32)) % &modulus;
                big.try_into().expect("fits")
            })
            .collect()
    }

    /// Inverse of `to_scaled`; `loss` digits are dropped from the top.
    pub fn from_scaled(ring: &ResidueRing, weight: i64, ys: &[u64], loss: u32) -> Self {
        let p = ring.p();
        let prec = ring.precision() as i64 - loss as i64;
        let ms = ys
            .iter()
            .enumerate()
            .map(|(j, &y)| {
                // y_j is trusted modulo p^prec, so μ_j modulo p^(prec − j); a
                // cap ≤ 0 still carries the digits of negative valuation
                let cap = prec - j as i64;
                let y = y % p.pow(prec.max(0) as u32);
                PadicNumber::from_parts(p, cap, -(j as i64), num_bigint::BigUint::from(y))
            })
            .collect();
        Self::new(p, weight, prec, ms)
    }
}

/// Solve μ|(1 1; 0 1) − μ = ν. The equation for moment j involves
/// m_0..m_{j−1} with leading coefficient −j, so the top moment is free and is
/// pinned to 0.
pub fn solve_difference_equation(nu: &TruncDist) -> Result<TruncDist> {
    if !nu.moments[0].is_zero() {
        return Err(Error::Domain("difference equation needs total measure 0".into()));
    }
    let p = nu.p;
    let big_m = nu.moments.len();
    let mut ms: Vec<PadicNumber> = vec![PadicNumber::zero(p, nu.base_prec); big_m];
    for j in 1..big_m {
        // Σ_{i<j} C(j,i)(−1)^{j−i} m_i = ν_j
        let mut rest = nu.moments[j].clone();
        for (i, mi) in ms.iter().enumerate().take(j - 1) {
            let mut c = binomial(&BigInt::from(j), i);
            if (j - i) % 2 == 1 {
                c = -c;
            }
            rest = rest.sub_ref(&PadicNumber::from_bigint(p, nu.base_prec + 8, &c).mul_ref(mi));
        }
        let lead = PadicNumber::from_int(p, nu.base_prec + 8, -(j as i64));
        ms[j - 1] = rest.div_ref(&lead)?;
    }
    let mu = TruncDist::new(p, nu.weight, nu.base_prec, ms);
    let residual = mu.act(&Matrix2::new(1, 1, 0, 1))?.sub(&mu)?.sub(nu)?;
    if !residual.is_zero() {
        return Err(Error::PrecisionExhausted("difference equation residual is nonzero".into()));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modsym::MomentAction;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn pad(p: u64, prec: i64, n: i64) -> PadicNumber {
        PadicNumber::from_int(p, prec, n)
    }

    #[test]
    fn identity_and_translation() {
        let mu = TruncDist::from_ints(5, 0, 10, &[3, 1, 4, 1, 5, 9]);
        assert!(mu.act(&Matrix2::IDENTITY).unwrap().agrees_with(&mu));
        // (1 b; 0 1): m'_j = Σ_i C(j,i)(−b)^{j−i} m_i
        let b = 2i64;
        let moved = mu.act(&Matrix2::new(1, b, 0, 1)).unwrap();
        let raw = [3i64, 1, 4, 1, 5, 9];
        for j in 0..6 {
            let mut expect = BigInt::zero();
            for i in 0..=j {
                expect += binomial(&BigInt::from(j), i) * BigInt::from(-b).pow((j - i) as u32) * raw[i];
            }
            assert!(moved.moment(j).congruent(&PadicNumber::from_bigint(5, 10, &expect)), "j = {j}");
        }
    }

    #[test]
    fn negative_weight_lower_triangular() {
        // w = −2, γ = (1 0; p 1): m'_j = Σ_m binom(−2−j, m)(−p)^m m_{j+m}
        let p = 3u64;
        let raw = [1i64, 2, 3, 4, 5, 6, 7, 8];
        let mu = TruncDist::from_ints(p, -2, 12, &raw);
        let out = mu.act(&Matrix2::new(1, 0, p as i64, 1)).unwrap();
        for j in 0..raw.len() {
            let mut expect = BigInt::zero();
            for m in 0..raw.len() - j {
                expect += binomial(&BigInt::from(-2 - j as i64), m) * BigInt::from(-(p as i64)).pow(m as u32) * raw[j + m];
            }
            let e = PadicNumber::from_bigint(p, 12, &expect);
            assert!(out.moment(j).congruent(&e), "j = {j}");
            assert!(out.moment(j).precision() >= (raw.len() - j) as i64);
        }
    }

    #[test]
    fn from_scaled_keeps_negative_valuation_digits() {
        // y_3 = 9 mod 3^3 after one lost digit: μ_3 = 1/3 + O(3^0), not 0
        let ring = ResidueRing::new(3, 4).unwrap();
        let mu = TruncDist::from_scaled(&ring, 0, &[1, 0, 0, 9], 1);
        assert_eq!(mu.moment(3).valuation(), Some(-1));
        assert_eq!(mu.moment(3).precision(), 0);
        assert!(mu.moment(1).is_zero());
        assert_eq!(mu.to_scaled(&ResidueRing::new(3, 3).unwrap()), vec![1, 0, 0, 9]);
    }

    #[test]
    fn dirac_examples() {
        let d0 = TruncDist::dirac(&pad(5, 10, 0), 0, 5, 10).unwrap();
        assert_eq!(d0.moment(0), &pad(5, 10, 1));
        assert!((1..5).all(|i| d0.moment(i).is_zero()));
        let dd = TruncDist::dirac_deriv(&pad(5, 10, 0), 1, 0, 5, 10).unwrap();
        assert_eq!(dd.moment(1), &pad(5, 10, 1));
        assert!(dd.moment(0).is_zero() && dd.moment(2).is_zero());
        let d2 = TruncDist::dirac(&pad(5, 10, 2), 0, 5, 10).unwrap();
        assert_eq!(d2.moment(3), &pad(5, 10, 8));
        assert_eq!(d2.rho_k(0).unwrap(), vec![pad(5, 10, 1)]);
    }

    #[test]
    fn theta_examples() {
        let p = 5;
        let mu = TruncDist::from_ints(p, -2, 10, &[7, 3, 2, 9, 4]);
        let th = mu.theta_k(0).unwrap();
        for j in 1..5 {
            assert_eq!(th.moment(j), &pad(p, 10, j as i64 * [7, 3, 2, 9, 4][j - 1]));
        }
        // Θ δ_c = δ'_c
        let c = pad(p, 10, 3);
        let th = TruncDist::dirac(&c, -2, 6, 10).unwrap().theta_k(0).unwrap();
        let dd = TruncDist::dirac_deriv(&c, 1, 0, 6, 10).unwrap();
        assert!(th.agrees_with(&dd));
        assert!(TruncDist::zero(p, -2, 6, 10).theta_k(0).unwrap().is_zero());
        assert!(TruncDist::zero(p, -2, 1, 10).theta_k(0).is_err());
    }

    #[test]
    fn difference_equation_examples() {
        let p = 3;
        let zero = TruncDist::zero(p, 0, 8, 12);
        assert!(solve_difference_equation(&zero).unwrap().is_zero());
        let nu = TruncDist::dirac(&pad(p, 12, 1), 0, 8, 12)
            .unwrap()
            .sub(&TruncDist::dirac(&pad(p, 12, 0), 0, 8, 12).unwrap())
            .unwrap();
        let mu = solve_difference_equation(&nu).unwrap();
        // oracle: the same triangular system solved over Q
        let res = mu.act(&Matrix2::new(1, 1, 0, 1)).unwrap().sub(&mu).unwrap().sub(&nu).unwrap();
        assert!(res.is_zero());
        assert!(mu.moment(7).is_zero());
        let bad = TruncDist::dirac(&pad(p, 12, 1), 0, 8, 12).unwrap();
        assert!(solve_difference_equation(&bad).is_err());
    }

    #[test]
    fn matches_scaled_matrix_action() {
        let p = 3u64;
        let ring = ResidueRing::new(p, 10).unwrap();
        let act = MomentAction::distributions(ring.clone(), -3, 10).unwrap();
        let mu = TruncDist::from_ints(p, -3, 10, &[5, -2, 7, 1, 0, 3, 8, -6, 2, 1]);
        let g = Matrix2::new(4, 7, 6, 5);
        let lhs = mu.act(&g).unwrap();
        let rhs = TruncDist::from_scaled(&ring, -3, &act.act(&g, &mu.to_scaled(&ring)), 0);
        assert!(lhs.agrees_with(&rhs));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn right_action_law(a in 1i64..20, b in -20i64..20, c in -4i64..4, d in -20i64..20,
                            e in 1i64..20, f in -20i64..20, g in -4i64..4, h in -20i64..20,
                            w in -5i64..4, raw in prop::collection::vec(-500i64..500, 7)) {
            let p = 5i64;
            let g1 = Matrix2::new(a, b, p * c, d);
            let g2 = Matrix2::new(e, f, p * g, h);
            prop_assume!(a % p != 0 && e % p != 0 && g1.det() != 0 && g2.det() != 0);
            let mu = TruncDist::from_ints(5, w, 9, &raw);
            let lhs = mu.act(&g1).unwrap().act(&g2).unwrap();
            let rhs = mu.act(&g1.mul(&g2)).unwrap();
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn theta_intertwines_with_det_twist(a in 1i64..20, b in -20i64..20, c in -4i64..4, d in -20i64..20,
                                            k in 0u32..3, raw in prop::collection::vec(-500i64..500, 9)) {
            let p = 3i64;
            let g = Matrix2::new(a, b, p * c, d);
            prop_assume!(a % p != 0 && g.det() != 0);
            let mu = TruncDist::from_ints(3, -2 - k as i64, 12, &raw);
            let lhs = mu.theta_k(k).unwrap().act(&g).unwrap();
            let det = PadicNumber::from_int(3, 30, g.det()).pow(k as i64 + 1).unwrap();
            let rhs = mu.act(&g).unwrap().theta_k(k).unwrap().scale(&det);
            prop_assert!(lhs.agrees_with(&rhs));
            let rho = mu.theta_k(k).unwrap().rho_k(k).unwrap();
            prop_assert!(rho.iter().all(|m| m.is_zero()));
        }

        #[test]
        fn difference_residual_vanishes(raw in prop::collection::vec(-1000i64..1000, 9)) {
            let mut raw = raw;
            raw[0] = 0;
            let nu = TruncDist::from_ints(3, 0, 14, &raw);
            let mu = solve_difference_equation(&nu).unwrap();
            let res = mu.act(&Matrix2::new(1, 1, 0, 1)).unwrap().sub(&mu).unwrap().sub(&nu).unwrap();
            prop_assert!(res.is_zero());
        }

        #[test]
        fn trusted_digits_are_honest(a in 1i64..20, b in -20i64..20, c in -4i64..4, d in -20i64..20,
                                     raw in prop::collection::vec(-500i64..500, 7)) {
            // recompute with more moments and digits; every claimed digit must survive
            let p = 5i64;
            let g = Matrix2::new(a, b, p * c, d);
            prop_assume!(a % p != 0 && g.det() != 0);
            let mut longer = raw.clone();
            longer.extend([3, -1, 4, 1, -5]);
            let lo = TruncDist::from_ints(5, -1, 7, &raw).act(&g).unwrap();
            let hi = TruncDist::from_ints(5, -1, 12, &longer).act(&g).unwrap();
            for j in 0..7 {
                prop_assert!(lo.moment(j).congruent(hi.moment(j)), "moment {}", j);
            }
        }
    }
}
