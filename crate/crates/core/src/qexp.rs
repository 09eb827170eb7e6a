//! Truncated q-expansions of weight k+2 Eisenstein series and the operators
//! V_t, U_p, T_q on them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::Serialize;

use crate::characters::DirichletCharacter;
use crate::error::{domain, Result};
use crate::lfunc::gen_bernoulli_rational;
use crate::padic::PadicNumber;

/// Coefficients c_0..=c_bound of a form of weight k+2.
#[derive(Clone, Debug)]
pub struct QExpansion {
    pub k: u32,
    pub level: u64,
    pub nebentypus: DirichletCharacter,
    pub coeffs: Vec<PadicNumber>,
    /// Unit and critical roots of the Hecke polynomial at p, for new Eisenstein series.
    pub p_roots: Option<(PadicNumber, PadicNumber)>,
}

#[derive(Serialize)]
struct QExpansionDump<'a> {
    weight: u32,
    level: u64,
    bound: usize,
    coefficients: &'a [PadicNumber],
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

impl QExpansion {
    pub fn bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn p(&self) -> u64 {
        self.nebentypus.prime()
    }

    pub fn coeff(&self, n: usize) -> &PadicNumber {
        assert!(n <= self.bound(), "coefficient {n} is past the truncation bound");
        &self.coeffs[n]
    }

    fn prec(&self) -> i64 {
        self.nebentypus.precision()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&QExpansionDump {
            weight: self.k + 2,
            level: self.level,
            bound: self.bound(),
            coefficients: &self.coeffs,
        })
        .unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,valuation,unit,precision\n");
        for (n, c) in self.coeffs.iter().enumerate() {
            let v = c.valuation().map(|v| v.to_string()).unwrap_or_else(|| "inf".into());
            out.push_str(&format!("{n},{v},{},{}\n", c.unit(), c.precision()));
        }
        out
    }

    pub fn scale(&self, c: &PadicNumber) -> Self {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|x| x.mul_ref(c)).collect();
        out.p_roots = None;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let bound = self.bound().min(other.bound());
        let mut out = self.clone();
        out.coeffs = (0..=bound).map(|n| self.coeffs[n].sub_ref(&other.coeffs[n])).collect();
        out.level = self.level.lcm(&other.level);
        out.p_roots = None;
        out
    }

    /// f(z) ↦ f(tz).
    pub fn vt(&self, t: u64) -> Self {
        let p = self.p();
        let prec = self.prec();
        let coeffs = (0..=self.bound())
            .map(|n| {
                if (n as u64).is_multiple_of(t) {
                    self.coeffs[n / t as usize].clone()
                } else {
                    PadicNumber::zero(p, prec)
                }
            })
            .collect();
        QExpansion {
            k: self.k,
            level: self.level * t,
            nebentypus: self.nebentypus.clone(),
            coeffs,
            p_roots: None,
        }
    }

    /// c_n ↦ c_{nq}; the bound shrinks to ⌊B/q⌋.
    pub fn uq(&self, q: u64) -> Self {
        let b = self.bound() / q as usize;
        QExpansion {
            k: self.k,
            level: self.level.lcm(&q),
            nebentypus: self.nebentypus.clone(),
            coeffs: (0..=b).map(|n| self.coeffs[n * q as usize].clone()).collect(),
            p_roots: None,
        }
    }

    /// T_q for q prime to the level and to p.
    pub fn tq(&self, q: u64) -> Result<Self> {
        if self.level.is_multiple_of(q) || q == self.p() {
            return domain(format!("T_{q} needs q prime to the level and to p"));
        }
        let b = self.bound() / q as usize;
        let prec = self.prec();
        let p = self.p();
        let eps = self.nebentypus.eval(q as i64);
        let qk = PadicNumber::from_int(p, prec, q as i64).pow(self.k as i64 + 1)?;
        let factor = eps.mul_ref(&qk);
        let coeffs = (0..=b)
            .map(|n| {
                let mut c = self.coeffs[n * q as usize].clone();
                if (n as u64).is_multiple_of(q) {
                    c = c.add_ref(&factor.mul_ref(&self.coeffs[n / q as usize]));
                }
                c
            })
            .collect();
        Ok(QExpansion {
            k: self.k,
            level: self.level,
            nebentypus: self.nebentypus.clone(),
            coeffs,
            p_roots: None,
        })
    }

    /// Coefficient-wise comparison up to the smaller bound; returns the first
    /// index where `self` differs from `c·other`.
    pub fn first_mismatch_scaled(&self, other: &Self, c: &PadicNumber) -> Option<usize> {
        let bound = self.bound().min(other.bound());
        (0..=bound).find(|&n| self.coeffs[n] != other.coeffs[n].mul_ref(c))
    }
}

/// E_{k+2,ψ,τ} with c_n = Σ_{d|n} ψ(n/d)τ(d)d^{k+1}.
pub fn eisenstein_normal(k: u32, psi: &DirichletCharacter, tau: &DirichletCharacter, bound: usize) -> Result<QExpansion> {
    let psi = psi.primitive();
    let tau = tau.primitive();
    if psi.parity() * tau.parity() != if k.is_multiple_of(2) { 1 } else { -1 } {
        return domain("ψτ(−1) must equal (−1)^k");
    }
    if k == 0 && psi.is_trivial() && tau.is_trivial() {
        return domain("the weight two series with both characters trivial is not modular");
    }
    let p = psi.prime();
    let prec = psi.precision().min(tau.precision());
    let level = psi.modulus() * tau.modulus();
    let mut coeffs = Vec::with_capacity(bound + 1);
    let c0 = if psi.modulus() > 1 {
        PadicNumber::zero(p, prec)
    } else {
        let b = gen_bernoulli_rational(&tau, k as usize + 2)?;
        let q = -b / BigRational::from_integer(BigInt::from(2 * (k as i64 + 2)));
        PadicNumber::from_rational(p, prec, &q)?
    };
    coeffs.push(c0);
    for n in 1..=bound as i64 {
        let mut c = PadicNumber::zero(p, prec);
        for d in 1..=n {
            if n % d != 0 {
                continue;
            }
            let term = psi
                .eval(n / d)
                .mul_ref(&tau.eval(d))
                .mul_ref(&PadicNumber::from_int(p, prec, d).pow(k as i64 + 1)?);
            c = c.add_ref(&term);
        }
        coeffs.push(c);
    }
    let pp = p as i64;
    let unit_root = psi.eval(pp);
    let crit_root = tau.eval(pp).mul_ref(&PadicNumber::from_int(p, prec, pp).pow(k as i64 + 1)?);
    Ok(QExpansion {
        k,
        level,
        nebentypus: psi.product(&tau)?,
        coeffs,
        p_roots: Some((unit_root, crit_root)),
    })
}

/// E_{2,ℓ} = (ℓ−1)/24 + Σ_n (Σ_{d|n, ℓ∤d} d) q^n.
pub fn eisenstein_exceptional(ell: u64, p: u64, prec: i64, bound: usize) -> Result<QExpansion> {
    if !is_prime(ell) {
        return domain(format!("{ell} is not prime"));
    }
    if ell == p {
        return domain("ℓ must differ from p");
    }
    let mut coeffs = Vec::with_capacity(bound + 1);
    coeffs.push(PadicNumber::from_ratio(p, prec, &BigInt::from(ell - 1), &BigInt::from(24))?);
    for n in 1..=bound as u64 {
        let s: u64 = (1..=n).filter(|d| n % d == 0 && d % ell != 0).sum();
        coeffs.push(PadicNumber::from_int(p, prec, s as i64));
    }
    Ok(QExpansion {
        k: 0,
        level: ell,
        nebentypus: DirichletCharacter::trivial(ell, p, prec)?,
        coeffs,
        p_roots: Some((PadicNumber::one(p, prec), PadicNumber::from_int(p, prec, p as i64))),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stabilization {
    Ordinary,
    Critical,
}

/// f(z) − (other root)·f(pz); returns the form and its U_p-eigenvalue.
pub fn stabilize(f: &QExpansion, mode: Stabilization) -> Result<(QExpansion, PadicNumber)> {
    let Some((unit_root, crit_root)) = &f.p_roots else {
        return domain("stabilization needs a new Eisenstein series");
    };
    let (keep, other) = match mode {
        Stabilization::Ordinary => (unit_root, crit_root),
        Stabilization::Critical => (crit_root, unit_root),
    };
    let g = f.sub(&f.vt(f.p()).scale(other));
    Ok((g, keep.clone()))
}

/// The coefficients of E_{k+2,τ,ψ}(tz) against the Dirichlet convolution
/// (ψ(n)n^{k+1}) ∗ (τ(n)) ∗ (indicator of t); returns the first failing n.
pub fn convolution_check(k: u32, tau: &DirichletCharacter, psi: &DirichletCharacter, t: u64, bound: usize) -> Result<std::result::Result<(), usize>> {
    let e = eisenstein_normal(k, tau, psi, bound)?.vt(t);
    let p = psi.prime();
    let prec = psi.precision().min(tau.precision());
    let psi = psi.primitive();
    let tau = tau.primitive();
    let b: Vec<PadicNumber> = (0..=bound as i64)
        .map(|n| psi.eval(n).mul_ref(&PadicNumber::from_int(p, prec, n).pow(k as i64 + 1).unwrap()))
        .collect();
    for n in 1..=bound {
        // (b ∗ c ∗ d)(n) = Σ_{t | n} Σ_{d | n/t} b(d) c(n/(t d))
        let mut want = PadicNumber::zero(p, prec);
        if (n as u64).is_multiple_of(t) {
            let m = n / t as usize;
            for d in 1..=m {
                if m.is_multiple_of(d) {
                    want = want.add_ref(&b[d].mul_ref(&tau.eval((m / d) as i64)));
                }
            }
        }
        if e.coeffs[n] != want {
            return Ok(Err(n));
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 3;
    const N: i64 = 12;

    fn int(x: i64) -> PadicNumber {
        PadicNumber::from_int(P, N, x)
    }

    fn triv() -> DirichletCharacter {
        DirichletCharacter::trivial(1, P, N).unwrap()
    }

    #[test]
    fn e4_coefficients() {
        let e4 = eisenstein_normal(2, &triv(), &triv(), 10).unwrap();
        assert_eq!(*e4.coeff(0), PadicNumber::from_ratio(P, N, &1.into(), &240.into()).unwrap());
        assert_eq!(*e4.coeff(2), int(9));
        assert_eq!(*e4.coeff(1), int(1));
        assert!(eisenstein_normal(0, &triv(), &triv(), 10).is_err());
        let c3 = DirichletCharacter::quadratic(-3, 5, N).unwrap();
        let c4 = DirichletCharacter::quadratic(-4, 5, N).unwrap();
        let e = eisenstein_normal(0, &c3, &c4, 10).unwrap();
        assert!(e.coeff(0).is_zero());
        assert_eq!(*e.coeff(1), PadicNumber::one(5, N));
        assert!(eisenstein_normal(1, &c3, &c4, 10).is_err());
    }

    #[test]
    fn exceptional_coefficients() {
        let e = eisenstein_exceptional(11, P, N, 60).unwrap();
        assert_eq!(*e.coeff(0), PadicNumber::from_ratio(P, N, &5.into(), &12.into()).unwrap());
        assert_eq!(*e.coeff(2), int(3));
        assert_eq!(*e.coeff(11), int(1));
        assert!(eisenstein_exceptional(12, P, N, 10).is_err());
        let v = e.vt(3);
        assert_eq!(*v.coeff(3), int(1));
        assert!(v.coeff(1).is_zero() && v.coeff(2).is_zero());
        assert_eq!(v.bound(), 60);
    }

    #[test]
    fn up_vp_and_vt_laws() {
        let e = eisenstein_exceptional(11, P, N, 90).unwrap();
        let back = e.vt(P).uq(P);
        assert_eq!(back.first_mismatch_scaled(&e, &int(1)), None);
        assert_eq!(e.vt(1).first_mismatch_scaled(&e, &int(1)), None);
        let a = e.vt(2).vt(3);
        let b = e.vt(6);
        assert_eq!(a.first_mismatch_scaled(&b, &int(1)), None);
    }

    #[test]
    fn hecke_eigenvalues() {
        let e = eisenstein_exceptional(11, P, N, 150).unwrap();
        for (crit, label) in [(Stabilization::Critical, "crit"), (Stabilization::Ordinary, "ord")] {
            let (f, alpha) = stabilize(&e, crit).unwrap();
            assert_eq!(*f.coeff(1), int(1), "{label}");
            let t2 = f.tq(2).unwrap();
            assert!(t2.bound() >= 50);
            assert_eq!(t2.first_mismatch_scaled(&f, &int(3)), None, "{label}");
            assert_eq!(f.tq(5).unwrap().first_mismatch_scaled(&f, &int(6)), None, "{label}");
            assert_eq!(f.uq(P).first_mismatch_scaled(&f, &alpha), None, "{label}");
        }
        let (_, beta) = stabilize(&e, Stabilization::Critical).unwrap();
        assert_eq!(beta, int(3));
        assert!(e.tq(11).is_err());
        let zero = e.scale(&int(0));
        assert!(zero.tq(2).unwrap().coeffs.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn stabilizations_are_roots_of_hecke_polynomial() {
        let p = 5;
        let c3 = DirichletCharacter::quadratic(-3, p, N).unwrap();
        let c4 = DirichletCharacter::quadratic(-4, p, N).unwrap();
        let e = eisenstein_normal(0, &c3, &c4, 100).unwrap();
        let ap = e.coeff(p as usize).clone();
        let eps_p = e.nebentypus.eval(p as i64).mul_ref(&PadicNumber::from_int(p, N, p as i64));
        for mode in [Stabilization::Ordinary, Stabilization::Critical] {
            let (f, alpha) = stabilize(&e, mode).unwrap();
            assert_eq!(f.uq(p).first_mismatch_scaled(&f, &alpha), None);
            let poly = alpha.mul_ref(&alpha).sub_ref(&ap.mul_ref(&alpha)).add_ref(&eps_p);
            assert!(poly.is_zero());
        }
    }

    #[test]
    fn tl_is_ul_plus_vl() {
        // T_ℓ f = U_ℓ f + ε(ℓ)ℓ^{k+1} V_ℓ f coefficient-wise
        let e = eisenstein_exceptional(11, P, N, 120).unwrap();
        let t = e.tq(2).unwrap();
        let rhs_u = e.uq(2);
        let rhs_v = e.vt(2).scale(&int(2));
        for n in 0..=t.bound() {
            assert_eq!(t.coeffs[n], rhs_u.coeffs[n].add_ref(&rhs_v.coeffs[n]));
        }
    }

    #[test]
    fn convolution_identity() {
        let t1 = triv();
        assert_eq!(convolution_check(2, &t1, &t1, 1, 200).unwrap(), Ok(()));
        assert_eq!(convolution_check(2, &t1, &t1, 3, 200).unwrap(), Ok(()));
        let c3 = DirichletCharacter::quadratic(-3, 5, N).unwrap();
        let c4 = DirichletCharacter::quadratic(-4, 5, N).unwrap();
        assert_eq!(convolution_check(0, &c4, &c3, 2, 200).unwrap(), Ok(()));
    }

    #[test]
    fn dumps() {
        let e = eisenstein_exceptional(11, P, N, 5).unwrap();
        let csv = e.to_csv();
        assert_eq!(csv.lines().count(), 7);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["weight"], 2);
        assert_eq!(v["coefficients"].as_array().unwrap().len(), 6);
    }
}
