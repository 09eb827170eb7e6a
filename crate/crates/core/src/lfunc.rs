//! Bernoulli numbers, Kubota–Leopoldt p-adic L-functions, and the products
//! of them that the critical and ordinary factorizations predict.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::characters::DirichletCharacter;
use crate::error::{domain, Error, Result};
use crate::padic::{iwasawa_log, one_unit_part, teichmuller, unit_power, PadicNumber};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// B_0..=B_n with B_1 = −1/2.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binomial(m as u64 + 1, k as u64)) * bk;
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

pub fn bernoulli(n: usize) -> BigRational {
    bernoulli_numbers(n).pop().unwrap()
}

/// B_n(x) = Σ C(n,k) B_k x^(n−k).
pub fn bernoulli_poly(n: usize, x: &BigRational, table: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    let mut xp = BigRational::one();
    // accumulate from k = n down to 0 so x^(n-k) grows
    for k in (0..=n).rev() {
        acc += BigRational::from_integer(binomial(n as u64, k as u64)) * &table[k] * &xp;
        xp *= x;
    }
    acc
}

/// B_{n,χ} for a ±1-valued character, computed exactly from its primitive part.
pub fn gen_bernoulli_rational(chi: &DirichletCharacter, n: usize) -> Result<BigRational> {
    let prim = chi.primitive();
    let f = prim.modulus() as i64;
    let table = bernoulli_numbers(n);
    let mut acc = BigRational::zero();
    for a in 1..=f {
        let Some(v) = prim.sign(a) else {
            return Err(Error::Unsupported("exact Bernoulli numbers need a ±1-valued character".into()));
        };
        if v == 0 {
            continue;
        }
        acc += rat(v, 1) * bernoulli_poly(n, &rat(a, f), &table);
    }
    Ok(acc * BigRational::from_integer(BigInt::from(f).pow(n as u32)) / rat(f, 1))
}

/// B_{n,θ} for θ = (primitive part of ν)·ω^b, computed p-adically.
pub fn gen_bernoulli_twisted(nu: &DirichletCharacter, b: i64, n: usize, prec: i64) -> Result<PadicNumber> {
    let p = nu.prime();
    let prim = nu.primitive();
    let wild = b.rem_euclid(p as i64 - 1) != 0;
    let f = prim.modulus() as i64 * if wild { p as i64 } else { 1 };
    let table = bernoulli_numbers(n);
    // Bernoulli denominators can hold a few powers of p; keep guard digits.
    let work = prec + 4 + n as i64;
    let mut acc = PadicNumber::zero(p, work);
    for a in 1..=f {
        if a.gcd(&f) != 1 {
            continue;
        }
        let mut val = prim.with_precision(work).eval(a);
        if wild {
            val = val.mul_ref(&teichmuller(p, work, a)?.pow(b.rem_euclid(p as i64 - 1))?);
        }
        let bp = bernoulli_poly(n, &rat(a, f), &table);
        acc = acc.add_ref(&val.mul_ref(&PadicNumber::from_rational(p, work, &bp)?));
    }
    let scale = PadicNumber::from_ratio(p, work, &BigInt::from(f).pow(n as u32), &BigInt::from(f))?;
    Ok(acc.mul_ref(&scale).with_precision(prec))
}

/// B_{n,χ} for a tame character (values in Z_p).
pub fn gen_bernoulli(chi: &DirichletCharacter, n: usize) -> Result<PadicNumber> {
    gen_bernoulli_twisted(chi, 0, n, chi.precision())
}

/// L(ν, m) = −B_{1−m,ν}/(1−m) for m ≤ 0, exactly.
pub fn classical_l_nonpos_rational(nu: &DirichletCharacter, m: i64) -> Result<BigRational> {
    if m > 0 {
        return domain("only non-positive integers");
    }
    let n = (1 - m) as usize;
    Ok(-gen_bernoulli_rational(nu, n)? / rat(1 - m, 1))
}

pub fn classical_l_nonpos(nu: &DirichletCharacter, m: i64) -> Result<PadicNumber> {
    let q = classical_l_nonpos_rational(nu, m)?;
    PadicNumber::from_rational(nu.prime(), nu.precision(), &q)
}

/// σ = ω^a ⟨z⟩^s on Z_p^×.
#[derive(Clone, Debug)]
pub struct WeightChar {
    p: u64,
    a: i64,
    s: PadicNumber,
}

impl WeightChar {
    pub fn new(a: i64, s: PadicNumber) -> Self {
        let p = s.p();
        WeightChar {
            p,
            a: a.rem_euclid(p as i64 - 1),
            s,
        }
    }

    pub fn from_ints(p: u64, prec: i64, a: i64, s: i64) -> Self {
        Self::new(a, PadicNumber::from_int(p, prec, s))
    }

    /// The character z ↦ z^j.
    pub fn power(p: u64, prec: i64, j: i64) -> Self {
        Self::from_ints(p, prec, j, j)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn teich_exponent(&self) -> i64 {
        self.a
    }

    pub fn s(&self) -> &PadicNumber {
        &self.s
    }

    /// σ(−1).
    pub fn parity(&self) -> i64 {
        if self.a % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// σ·z^j.
    pub fn shift(&self, j: i64) -> Self {
        let jj = PadicNumber::from_int(self.p, self.s.precision(), j);
        WeightChar::new(self.a + j, self.s.add_ref(&jj))
    }

    pub fn eval_unit(&self, u: &PadicNumber) -> Result<PadicNumber> {
        if u.valuation() != Some(0) {
            return domain("weight characters live on Z_p^×");
        }
        let r = (u.unit() % self.p).try_into().unwrap_or(0u64) as i64;
        let w = teichmuller(self.p, u.precision(), r)?.pow(self.a)?;
        Ok(w.mul_ref(&unit_power(u, &self.s)?))
    }

    pub fn eval(&self, u: i64) -> Result<PadicNumber> {
        self.eval_unit(&PadicNumber::from_int(self.p, self.s.precision(), u))
    }

    pub fn describe(&self) -> String {
        format!("omega^{} <z>^{}", self.a, self.s.describe())
    }
}

/// Either a value or the marker for the two poles of ζ_p.
#[derive(Clone, Debug, Serialize)]
pub enum LValue {
    Finite(PadicNumber),
    Pole,
}

impl LValue {
    pub fn finite(self) -> Result<PadicNumber> {
        match self {
            LValue::Finite(x) => Ok(x),
            LValue::Pole => domain("evaluation at a pole"),
        }
    }

    pub fn is_pole(&self) -> bool {
        matches!(self, LValue::Pole)
    }
}

/// L(t) = pole/(t − 1) + regular, where t is the Iwasawa-style variable of
/// the convergent Bernoulli expansion and `pole` is present only for the
/// trivial twist.
#[derive(Clone, Debug)]
pub struct LaurentParts {
    pub pole: Option<PadicNumber>,
    pub regular: PadicNumber,
}

/// Σ x^n/(n+1)!, i.e. (e^x − 1)/x, for v(x) ≥ 1.
fn exp_quotient(x: &PadicNumber, work: i64) -> Result<PadicNumber> {
    let p = x.p();
    let mut sum = PadicNumber::one(p, work);
    if x.is_zero() {
        return Ok(sum);
    }
    let vx = x.valuation().unwrap();
    let mut term = PadicNumber::one(p, work);
    let mut n: i64 = 1;
    loop {
        // v(x^n/(n+1)!) >= n*vx - n/(p-1)
        if n * vx - n / (p as i64 - 1) > work {
            break;
        }
        term = term.mul_ref(x).div_ref(&PadicNumber::from_int(p, work, n + 1))?;
        sum = sum.add_ref(&term);
        n += 1;
    }
    Ok(sum)
}

fn floor_log(p: u64, n: i64) -> i64 {
    let mut k = 0;
    let mut x = n.max(1);
    while x >= p as i64 {
        x /= p as i64;
        k += 1;
    }
    k
}

/// The convergent expansion of L_p(t, θ) with θ = ν·ω^b at the point t, as
/// pole part plus regular part:
///
/// L(t) = (1/F) Σ_{a ≤ F, p∤a} θ(a) ⟨a⟩^{1−t} Σ_j C(1−t, j) (F/a)^j B_j / (t − 1).
///
/// The j = 0 piece is rewritten with (⟨a⟩^{1−t} − 1)/(t − 1) = −log⟨a⟩·E((1−t) log⟨a⟩)
/// and the j ≥ 1 pieces with C(1−t, j)/(t − 1) = −C(−t, j−1)/j, so only the trivial
/// twist keeps a genuine 1/(t − 1) term. The argument t is treated as exact.
pub fn kubota_leopoldt_laurent(nu: &DirichletCharacter, b: i64, t: &PadicNumber, prec: i64) -> Result<LaurentParts> {
    let p = nu.prime();
    if t.valuation().map(|v| v < 0).unwrap_or(false) {
        return domain("the variable must lie in Z_p");
    }
    let prim = nu.primitive();
    let big_f = prim.modulus() as i64 * p as i64;
    let twist_exp = b.rem_euclid(p as i64 - 1);
    let trivial = prim.modulus() == 1 && twist_exp == 0;
    let pi = p as i64;
    let work = (prec + 6) * (pi - 1) / (pi - 2) + 6;
    let t = t.lift_precision(work);
    let one_minus_t = PadicNumber::one(p, work).sub_ref(&t);
    let prim_w = prim.with_precision(work);

    struct Term {
        weight: PadicNumber,
        inv: PadicNumber,
    }
    let mut terms = Vec::new();
    let mut j0 = PadicNumber::zero(p, work);
    for a in 1..=big_f {
        if a % pi == 0 || a.gcd(&big_f) != 1 {
            continue;
        }
        let aa = PadicNumber::from_int(p, work, a);
        let theta = prim_w.eval(a).mul_ref(&teichmuller(p, work, a)?.pow(twist_exp)?);
        let la = iwasawa_log(&one_unit_part(&aa)?)?;
        let x = one_minus_t.mul_ref(&la);
        let e = exp_quotient(&x, work)?;
        j0 = j0.sub_ref(&theta.mul_ref(&la).mul_ref(&e));
        // θ(a)⟨a⟩^{1−t} = θ(a)(1 + x·E(x))
        let power = PadicNumber::one(p, work).add_ref(&x.mul_ref(&e));
        terms.push(Term {
            weight: theta.mul_ref(&power),
            inv: aa.inverse()?,
        });
    }

    let fpad = PadicNumber::from_int(p, work, big_f);
    let neg_t = t.neg_ref();
    let mut binom = PadicNumber::one(p, work); // C(−t, j−1)
    let mut fpow = PadicNumber::one(p, work);
    let mut weights: Vec<PadicNumber> = terms.iter().map(|tm| tm.weight.clone()).collect();
    let mut tail = PadicNumber::zero(p, work);
    let mut j: i64 = 1;
    let mut bern = bernoulli_numbers(8);
    loop {
        if j - 1 - floor_log(p, j) > work {
            break;
        }
        if j as usize >= bern.len() {
            bern = bernoulli_numbers(2 * bern.len());
        }
        fpow = fpow.mul_ref(&fpad);
        let mut inner = PadicNumber::zero(p, work);
        for (w, tm) in weights.iter_mut().zip(&terms) {
            *w = w.mul_ref(&tm.inv);
            inner = inner.add_ref(w);
        }
        let bj = &bern[j as usize];
        if !bj.is_zero() {
            let bjp = PadicNumber::from_rational(p, work, bj)?;
            let term = binom
                .mul_ref(&bjp)
                .mul_ref(&fpow)
                .mul_ref(&inner)
                .div_ref(&PadicNumber::from_int(p, work, j))?;
            tail = tail.sub_ref(&term);
        }
        // C(−t, j) = C(−t, j−1)·(−t − j + 1)/j
        let factor = neg_t.sub_ref(&PadicNumber::from_int(p, work, j - 1));
        binom = binom.mul_ref(&factor).div_ref(&PadicNumber::from_int(p, work, j))?;
        j += 1;
    }
    let regular = j0.add_ref(&tail).div_ref(&fpad)?;
    if regular.precision() < prec.min(1) {
        return Err(Error::PrecisionExhausted("Bernoulli expansion lost every digit".into()));
    }
    let pole = trivial.then(|| PadicNumber::from_ratio(p, prec, &BigInt::from(pi - 1), &BigInt::from(pi)).unwrap());
    Ok(LaurentParts {
        pole,
        regular: regular.with_precision(prec),
    })
}

/// Which Bernoulli-expansion twist and variable represent L_p(ν, σ).
///
/// For σ = ω^a⟨z⟩^s: when ν(−1)(−1)^a = −1 the value is the expansion for
/// ν·ω^{1−a} at t = s; otherwise it is the expansion for ν^{−1}·ω^a at t = 1 − s.
#[derive(Clone, Debug)]
pub struct Branch {
    pub twist: DirichletCharacter,
    pub teich: i64,
    pub t: PadicNumber,
    pub odd: bool,
}

pub fn branch(nu: &DirichletCharacter, sigma: &WeightChar) -> Branch {
    let p = sigma.p();
    let odd = nu.parity() * sigma.parity() == -1;
    if odd {
        Branch {
            twist: nu.clone(),
            teich: (1 - sigma.teich_exponent()).rem_euclid(p as i64 - 1),
            t: sigma.s().clone(),
            odd,
        }
    } else {
        Branch {
            twist: nu.inverse(),
            teich: sigma.teich_exponent(),
            t: PadicNumber::one(p, sigma.s().precision()).sub_ref(sigma.s()),
            odd,
        }
    }
}

/// L_p(ν, σ) at absolute precision `prec`.
pub fn kubota_leopoldt(nu: &DirichletCharacter, sigma: &WeightChar, prec: i64) -> Result<LValue> {
    if nu.prime() != sigma.p() {
        return domain("character and weight for different primes");
    }
    if nu.primitive().modulus().is_multiple_of(nu.prime()) {
        return domain("only tame characters");
    }
    let br = branch(nu, sigma);
    let parts = kubota_leopoldt_laurent(&br.twist, br.teich, &br.t, prec)?;
    match parts.pole {
        None => Ok(LValue::Finite(parts.regular)),
        Some(c) => {
            let d = br.t.sub_ref(&PadicNumber::one(sigma.p(), br.t.precision()));
            if d.is_zero() {
                return Ok(LValue::Pole);
            }
            Ok(LValue::Finite(parts.regular.add_ref(&c.div_ref(&d)?)))
        }
    }
}

pub fn zeta_p(sigma: &WeightChar, prec: i64) -> Result<LValue> {
    let triv = DirichletCharacter::trivial(1, sigma.p(), prec)?;
    kubota_leopoldt(&triv, sigma, prec)
}

/// log_p^{[k]}(σ) = s(s−1)⋯(s−k+1).
pub fn log_pk(k: u32, sigma: &WeightChar) -> PadicNumber {
    let p = sigma.p();
    let n = sigma.s().precision();
    let mut acc = PadicNumber::one(p, n);
    for i in 0..k as i64 {
        acc = acc.mul_ref(&sigma.s().sub_ref(&PadicNumber::from_int(p, n, i)));
    }
    acc
}

/// (p − 1)/(p log_p ℓ).
pub fn stevens_constant(p: u64, ell: i64, prec: i64) -> Result<PadicNumber> {
    let l = iwasawa_log(&one_unit_part(&PadicNumber::from_int(p, prec + 2, ell))?)?;
    let c = PadicNumber::from_ratio(p, prec + 2, &BigInt::from(p as i64 - 1), &BigInt::from(p as i64))?;
    c.div_ref(&l)
}

/// [c] · s (1 − ⟨ℓ⟩^{−s}) ζ_p(σz) ζ_p(σ) at σ = ⟨z⟩^s, with c the constant above
/// when `normalized`.
///
/// Both zeta factors have a simple pole at s = 0, so the product is assembled
/// from Laurent parts: with ζ_p(σz) = c₀/s + r₁, ζ_p(σ) = −c₀/s + r₂ and
/// 1 − ⟨ℓ⟩^{−s} = s·g(s), the whole expression is g(s)(c₀ + r₁s)(−c₀ + r₂s),
/// which is analytic at s = 0.
pub fn rhs_exceptional(ell: i64, s: &PadicNumber, normalized: bool, prec: i64) -> Result<PadicNumber> {
    let p = s.p();
    if ell.rem_euclid(p as i64) == 0 {
        return domain("ℓ must be prime to p");
    }
    let triv = DirichletCharacter::trivial(1, p, prec)?;
    let sigma = WeightChar::new(0, s.clone());
    let br_z = branch(&triv, &sigma.shift(1));
    let br_0 = branch(&triv, &sigma);
    debug_assert!(br_z.odd && !br_0.odd);
    let lz = kubota_leopoldt_laurent(&br_z.twist, br_z.teich, &br_z.t, prec)?;
    let l0 = kubota_leopoldt_laurent(&br_0.twist, br_0.teich, &br_0.t, prec)?;
    let c0 = lz.pole.clone().unwrap();
    let work = prec + 4;
    let sl = s.lift_precision(work);
    let log_ell = iwasawa_log(&one_unit_part(&PadicNumber::from_int(p, work, ell))?)?;
    // g(s) = (1 − e^{−s L})/s = L·E(−sL)
    let g = log_ell.mul_ref(&exp_quotient(&sl.mul_ref(&log_ell).neg_ref(), work)?);
    let left = c0.add_ref(&lz.regular.mul_ref(&sl));
    let right = c0.neg_ref().add_ref(&l0.regular.mul_ref(&sl));
    let mut val = g.mul_ref(&left).mul_ref(&right);
    if normalized {
        val = val.mul_ref(&stevens_constant(p, ell, work)?);
    }
    Ok(val.with_precision(prec))
}

/// σ^{−1}(R)·log^{[k+1]}(σ)·L_p(ψ, σz)·L_p(τ, σz^{−k}).
pub fn rhs_normal(psi: &DirichletCharacter, tau: &DirichletCharacter, k: u32, sigma: &WeightChar, prec: i64) -> Result<PadicNumber> {
    let r = tau.conductor() as i64;
    let sig_r = sigma.eval(r)?.inverse()?;
    let lp = kubota_leopoldt(psi, &sigma.shift(1), prec)?.finite()?;
    let lt = kubota_leopoldt(tau, &sigma.shift(-(k as i64)), prec)?.finite()?;
    Ok(sig_r.mul_ref(&log_pk(k + 1, sigma)).mul_ref(&lp).mul_ref(&lt).with_precision(prec))
}

/// (1 − σ^{−1}(ℓ)) ζ_p(σz) ζ_p(σ) for odd σ.
pub fn rhs_ordinary_exceptional(ell: i64, sigma: &WeightChar, prec: i64) -> Result<PadicNumber> {
    if sigma.parity() == 1 {
        return domain("the ordinary exceptional L-function vanishes identically on even characters");
    }
    let one = PadicNumber::one(sigma.p(), prec);
    let factor = one.sub_ref(&sigma.eval(ell)?.inverse()?);
    let a = zeta_p(&sigma.shift(1), prec)?.finite()?;
    let b = zeta_p(sigma, prec)?.finite()?;
    Ok(factor.mul_ref(&a).mul_ref(&b).with_precision(prec))
}

/// σ^{−1}(Q) L_p(ψ, σz) L_p(τ, σz^{−k}); the Gauss-sum constant is omitted.
pub fn rhs_ordinary_normal(psi: &DirichletCharacter, tau: &DirichletCharacter, k: u32, sigma: &WeightChar, prec: i64) -> Result<PadicNumber> {
    let q = psi.conductor() as i64;
    let sig_q = sigma.eval(q)?.inverse()?;
    let lp = kubota_leopoldt(psi, &sigma.shift(1), prec)?.finite()?;
    let lt = kubota_leopoldt(tau, &sigma.shift(-(k as i64)), prec)?.finite()?;
    Ok(sig_q.mul_ref(&lp).mul_ref(&lt).with_precision(prec))
}

/// Interpolation oracle: for σ = ω^{a−m}·z^m with m ≤ 0 on the odd branch,
/// L_p(ν, σ) = (1 − θ(p) p^{−m}) L(θ, m) with θ = ν ω^{m−a} primitive.
pub fn interpolation_value(nu: &DirichletCharacter, a: i64, m: i64, prec: i64) -> Result<PadicNumber> {
    let p = nu.prime();
    let b = (m - a).rem_euclid(p as i64 - 1);
    let n = (1 - m) as usize;
    let bern = gen_bernoulli_twisted(nu, b, n, prec + 4)?;
    let lval = bern.neg_ref().div_ref(&PadicNumber::from_int(p, prec + 4, 1 - m))?;
    let euler = if b == 0 {
        let nup = nu.primitive().with_precision(prec + 4).eval(p as i64);
        let pm = PadicNumber::from_int(p, prec + 4, p as i64).pow(-m)?;
        PadicNumber::one(p, prec + 4).sub_ref(&nup.mul_ref(&pm))
    } else {
        PadicNumber::one(p, prec + 4)
    };
    Ok(euler.mul_ref(&lval).with_precision(prec))
}

/// Exact-rational version of the oracle for σ = z^m and ±1-valued ν.
pub fn interpolation_value_rational(nu: &DirichletCharacter, m: i64) -> Result<BigRational> {
    let p = nu.prime() as i64;
    let prim = nu.primitive();
    let chi_p = prim.sign(p).ok_or_else(|| Error::Unsupported("needs a ±1-valued character".into()))?;
    let pm = BigRational::from_integer(BigInt::from(p).pow((-m) as u32));
    let euler = BigRational::one() - rat(chi_p, 1) * pm;
    Ok(euler * classical_l_nonpos_rational(&prim, m)?)
}
