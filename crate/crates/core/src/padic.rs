//! Finite-precision arithmetic in Q_p for odd primes p.
//!
//! A nonzero element is stored as `unit * p^val` with the unit known modulo
//! `p^(prec - val)`; `prec` is the absolute precision. Zero carries only its
//! absolute precision.

use std::cmp::{max, min};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub(crate) fn big_pow(p: u64, e: i64) -> BigUint {
    if e <= 0 {
        return BigUint::one();
    }
    BigUint::from(p).pow(e as u32)
}

/// p-adic valuation of a nonzero integer.
pub fn int_valuation(p: u64, n: &BigInt) -> i64 {
    assert!(!n.is_zero(), "valuation of zero");
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

fn strip_p(p: u64, n: &BigUint) -> (i64, BigUint) {
    let pb = BigUint::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    if m.is_one() {
        return BigUint::zero();
    }
    a.modinv(m).expect("inverse of a p-adic unit")
}

fn reduce_signed(n: &BigInt, m: &BigUint) -> BigUint {
    let mm = BigInt::from_biguint(Sign::Plus, m.clone());
    n.mod_floor(&mm).to_biguint().unwrap()
}

/// An element of Q_p known to a fixed absolute precision.
#[derive(Clone, Debug)]
pub struct PadicNumber {
    p: u64,
    prec: i64,
    val: Option<i64>,
    unit: BigUint,
}

impl PadicNumber {
    fn check_prime(p: u64) {
        assert!(p >= 3 && p % 2 == 1, "only odd primes are supported, got {p}");
    }

    pub fn zero(p: u64, prec: i64) -> Self {
        Self::check_prime(p);
        PadicNumber {
            p,
            prec,
            val: None,
            unit: BigUint::zero(),
        }
    }

    pub fn one(p: u64, prec: i64) -> Self {
        Self::from_int(p, prec, 1)
    }

    /// Build `raw * p^val` with `raw` taken modulo `p^(prec - val)`.
    pub fn from_parts(p: u64, prec: i64, val: i64, raw: BigUint) -> Self {
        Self::check_prime(p);
        if raw.is_zero() || val >= prec {
            return Self::zero(p, prec);
        }
        let (extra, u) = strip_p(p, &raw);
        let v = val + extra;
        if v >= prec {
            return Self::zero(p, prec);
        }
        let unit = u % big_pow(p, prec - v);
        PadicNumber {
            p,
            prec,
            val: Some(v),
            unit,
        }
    }

    pub fn from_int(p: u64, prec: i64, n: i64) -> Self {
        Self::from_bigint(p, prec, &BigInt::from(n))
    }

    pub fn from_bigint(p: u64, prec: i64, n: &BigInt) -> Self {
        Self::check_prime(p);
        if n.is_zero() {
            return Self::zero(p, prec);
        }
        let v = int_valuation(p, n);
        if v >= prec {
            return Self::zero(p, prec);
        }
        let m = big_pow(p, prec - v);
        let u = n / BigInt::from_biguint(Sign::Plus, big_pow(p, v));
        Self::from_parts(p, prec, v, reduce_signed(&u, &m))
    }

    /// Embed the rational number `num/den`.
    pub fn from_ratio(p: u64, prec: i64, num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.is_zero() {
            return domain("rational with zero denominator");
        }
        if num.is_zero() {
            return Ok(Self::zero(p, prec));
        }
        let vn = int_valuation(p, num);
        let vd = int_valuation(p, den);
        let v = vn - vd;
        if v >= prec {
            return Ok(Self::zero(p, prec));
        }
        let m = big_pow(p, prec - v);
        let un = reduce_signed(&(num / BigInt::from_biguint(Sign::Plus, big_pow(p, vn))), &m);
        let ud = reduce_signed(&(den / BigInt::from_biguint(Sign::Plus, big_pow(p, vd))), &m);
        let unit = (un * mod_inverse(&ud, &m)) % &m;
        Ok(Self::from_parts(p, prec, v, unit))
    }

    pub fn from_rational(p: u64, prec: i64, q: &num_rational::BigRational) -> Result<Self> {
        Self::from_ratio(p, prec, q.numer(), q.denom())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Absolute precision N: the element is known modulo p^N.
    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// None for zero.
    pub fn valuation(&self) -> Option<i64> {
        self.val
    }

    /// Valuation with zero mapped to its absolute precision.
    pub fn valuation_or_prec(&self) -> i64 {
        self.val.unwrap_or(self.prec)
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    pub fn relative_precision(&self) -> i64 {
        match self.val {
            Some(v) => self.prec - v,
            None => 0,
        }
    }

    /// Lower the absolute precision (never raises it).
    pub fn with_precision(&self, prec: i64) -> Self {
        let n = min(prec, self.prec);
        match self.val {
            None => Self::zero(self.p, n),
            Some(v) => Self::from_parts(self.p, n, v, self.unit.clone()),
        }
    }

    /// Pad with zero digits up to absolute precision `prec`. Only sound for
    /// elements that are exact (e.g. embedded integers).
    pub fn lift_precision(&self, prec: i64) -> Self {
        if prec <= self.prec {
            return self.with_precision(prec);
        }
        match self.val {
            None => Self::zero(self.p, prec),
            Some(v) => PadicNumber {
                p: self.p,
                prec,
                val: Some(v),
                unit: self.unit.clone(),
            },
        }
    }

    fn same_prime(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixing different primes");
    }

    pub fn add_ref(&self, other: &Self) -> Self {
        self.same_prime(other);
        let prec = min(self.prec, other.prec);
        match (self.val, other.val) {
            (None, _) => other.with_precision(prec),
            (_, None) => self.with_precision(prec),
            (Some(vx), Some(vy)) => {
                let m = min(vx, vy);
                if m >= prec {
                    return Self::zero(self.p, prec);
                }
                let raw = &self.unit * big_pow(self.p, vx - m) + &other.unit * big_pow(self.p, vy - m);
                Self::from_parts(self.p, prec, m, raw % big_pow(self.p, prec - m))
            }
        }
    }

    pub fn neg_ref(&self) -> Self {
        match self.val {
            None => self.clone(),
            Some(v) => {
                let m = big_pow(self.p, self.prec - v);
                let unit = (&m - &self.unit) % &m;
                PadicNumber {
                    p: self.p,
                    prec: self.prec,
                    val: Some(v),
                    unit,
                }
            }
        }
    }

    pub fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }

    pub fn mul_ref(&self, other: &Self) -> Self {
        self.same_prime(other);
        match (self.val, other.val) {
            (None, None) => Self::zero(self.p, self.prec + other.prec),
            (None, Some(vy)) => Self::zero(self.p, self.prec + vy),
            (Some(vx), None) => Self::zero(self.p, other.prec + vx),
            (Some(vx), Some(vy)) => {
                let rel = min(self.prec - vx, other.prec - vy);
                let m = big_pow(self.p, rel);
                let unit = (&self.unit * &other.unit) % &m;
                PadicNumber {
                    p: self.p,
                    prec: vx + vy + rel,
                    val: Some(vx + vy),
                    unit,
                }
            }
        }
    }

    pub fn div_ref(&self, other: &Self) -> Result<Self> {
        self.same_prime(other);
        let vy = match other.val {
            None => {
                return Err(Error::PrecisionExhausted(
                    "division by an element indistinguishable from zero".into(),
                ))
            }
            Some(v) => v,
        };
        match self.val {
            None => Ok(Self::zero(self.p, self.prec - vy)),
            Some(vx) => {
                let rel = min(self.prec - vx, other.prec - vy);
                let m = big_pow(self.p, rel);
                let unit = (&self.unit * mod_inverse(&(&other.unit % &m), &m)) % &m;
                Ok(PadicNumber {
                    p: self.p,
                    prec: vx - vy + rel,
                    val: Some(vx - vy),
                    unit,
                })
            }
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::one(self.p, self.relative_precision().max(1)).div_ref(self)
    }

    /// Multiply by an exact integer.
    pub fn scale_int(&self, n: i64) -> Self {
        if n == 0 {
            return Self::zero(self.p, self.prec);
        }
        let v = int_valuation(self.p, &BigInt::from(n));
        let rel = self.relative_precision().max(1);
        self.mul_ref(&Self::from_int(self.p, v + rel, n))
    }

    /// Integer power; negative exponents need a nonzero base.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inverse()?.pow(-e);
        }
        if e == 0 {
            return Ok(Self::one(self.p, self.relative_precision().max(1)));
        }
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul_ref(&base),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_ref(&base);
            }
        }
        Ok(result.unwrap())
    }

    /// Representative in [0, p^prec) when the valuation is non-negative.
    pub fn to_integer(&self) -> Option<BigUint> {
        match self.val {
            None => Some(BigUint::zero()),
            Some(v) if v >= 0 => Some(&self.unit * big_pow(self.p, v)),
            _ => None,
        }
    }

    /// Number of leading p-adic digits on which two numbers agree, capped by
    /// the smaller precision.
    pub fn agreement(&self, other: &Self) -> i64 {
        let cap = min(self.prec, other.prec);
        let d = self.sub_ref(other);
        min(d.valuation_or_prec(), cap)
    }

    /// Congruence modulo p^(min precision).
    pub fn congruent(&self, other: &Self) -> bool {
        self.sub_ref(other).is_zero()
    }

    /// Unit digits base p, little-endian, padded to the relative precision.
    pub fn unit_digits(&self) -> Vec<u64> {
        let mut out = Vec::new();
        if self.val.is_none() {
            return out;
        }
        let pb = BigUint::from(self.p);
        let mut u = self.unit.clone();
        for _ in 0..self.relative_precision() {
            let (q, r) = u.div_rem(&pb);
            out.push(r.to_u64().unwrap());
            u = q;
        }
        out
    }

    /// Balanced rational reconstruction is not attempted; this renders the
    /// element as `unit * p^val (mod p^prec)`.
    pub fn describe(&self) -> String {
        match self.val {
            None => format!("O({}^{})", self.p, self.prec),
            Some(v) => format!("{} * {}^{} + O({}^{})", self.unit, self.p, v, self.p, self.prec),
        }
    }

    /// Small-integer view of an element (used for character values ±1, etc.).
    pub fn to_signed_small(&self) -> Option<i64> {
        let n = self.to_integer()?;
        let m = big_pow(self.p, self.prec);
        let half = &m >> 1;
        if n > half {
            let neg = &m - &n;
            neg.to_i64().map(|x| -x)
        } else {
            n.to_i64()
        }
    }
}

impl PartialEq for PadicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.congruent(other)
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl Add for &PadicNumber {
    type Output = PadicNumber;
    fn add(self, rhs: &PadicNumber) -> PadicNumber {
        self.add_ref(rhs)
    }
}

impl Sub for &PadicNumber {
    type Output = PadicNumber;
    fn sub(self, rhs: &PadicNumber) -> PadicNumber {
        self.sub_ref(rhs)
    }
}

impl Mul for &PadicNumber {
    type Output = PadicNumber;
    fn mul(self, rhs: &PadicNumber) -> PadicNumber {
        self.mul_ref(rhs)
    }
}

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_ref()
    }
}

#[derive(Serialize, Deserialize)]
struct PadicRepr {
    p: u64,
    #[serde(rename = "N")]
    n: i64,
    valuation: Option<i64>,
    unit_digits: Vec<u64>,
}

impl Serialize for PadicNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PadicRepr {
            p: self.p,
            n: self.prec,
            valuation: self.val,
            unit_digits: self.unit_digits(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PadicRepr::deserialize(d)?;
        if r.p < 3 || r.p % 2 == 0 {
            return Err(serde::de::Error::custom("p must be an odd prime"));
        }
        match r.valuation {
            None => Ok(PadicNumber::zero(r.p, r.n)),
            Some(v) => {
                let mut u = BigUint::zero();
                for &dg in r.unit_digits.iter().rev() {
                    if dg >= r.p {
                        return Err(serde::de::Error::custom("digit out of range"));
                    }
                    u = u * r.p + dg;
                }
                if (&u % r.p).is_zero() {
                    return Err(serde::de::Error::custom("unit divisible by p"));
                }
                Ok(PadicNumber::from_parts(r.p, r.n, v, u))
            }
        }
    }
}

fn floor_log(p: u64, n: i64) -> i64 {
    let mut k = 0;
    let mut x = n.max(1) as u128;
    while x >= p as u128 {
        x /= p as u128;
        k += 1;
    }
    k
}

/// Teichmüller representative ω(u) at absolute precision `prec`.
pub fn teichmuller(p: u64, prec: i64, u: i64) -> Result<PadicNumber> {
    if u.rem_euclid(p as i64) == 0 {
        return domain(format!("Teichmüller lift of {u}, which is divisible by {p}"));
    }
    let m = big_pow(p, prec);
    let mut x = BigUint::from(u.rem_euclid(p as i64) as u64);
    let pb = BigUint::from(p);
    // x -> x^p gains one digit per step.
    for _ in 0..prec {
        let y = x.modpow(&pb, &m);
        if y == x {
            break;
        }
        x = y;
    }
    Ok(PadicNumber::from_parts(p, prec, 0, x))
}

/// ⟨u⟩ = u / ω(u).
pub fn one_unit_part(u: &PadicNumber) -> Result<PadicNumber> {
    if u.valuation() != Some(0) {
        return domain("one-unit part of a non-unit");
    }
    let r = (u.unit() % u.p()).to_i64().unwrap();
    let w = teichmuller(u.p(), u.precision(), r)?;
    u.div_ref(&w)
}

/// Iwasawa logarithm on 1 + pZ_p.
pub fn iwasawa_log(u: &PadicNumber) -> Result<PadicNumber> {
    let p = u.p();
    if u.valuation() != Some(0) || !(u.unit() % p).is_one() {
        return domain("Iwasawa log needs an argument congruent to 1 mod p");
    }
    let n = u.precision();
    let guard = floor_log(p, n + 8) + 2;
    let work = n + guard;
    let t = u.sub_ref(&PadicNumber::one(p, n)).lift_precision(work);
    if t.is_zero() {
        return Ok(PadicNumber::zero(p, n));
    }
    let vt = t.valuation().unwrap();
    let mut sum = PadicNumber::zero(p, work);
    let mut power = t.clone();
    let mut i: i64 = 1;
    // term i has valuation >= i*vt - floor_log(i); stop once that clears the work precision.
    while i * vt - floor_log(p, i) < work {
        let term = power.div_ref(&PadicNumber::from_int(p, work, i))?;
        sum = if i % 2 == 1 { sum.add_ref(&term) } else { sum.sub_ref(&term) };
        power = power.mul_ref(&t).with_precision(work);
        i += 1;
    }
    Ok(sum.with_precision(n))
}

/// exp on pZ_p.
pub fn exp(x: &PadicNumber) -> Result<PadicNumber> {
    let p = x.p();
    let n = x.precision();
    if x.is_zero() {
        return Ok(PadicNumber::one(p, max(n, 1)));
    }
    let vx = x.valuation().unwrap();
    if vx < 1 {
        return domain("exp is only implemented on pZ_p");
    }
    let guard = floor_log(p, n + 8) + 2 + n / (p as i64 - 1).max(1);
    let work = n + guard;
    let xl = x.lift_precision(work);
    let mut sum = PadicNumber::one(p, work);
    let mut term = PadicNumber::one(p, work);
    let mut k: i64 = 1;
    loop {
        // v(x^k / k!) >= k*vx - (k-1)/(p-1)
        let bound = k * vx - (k - 1) / (p as i64 - 1);
        if bound >= work {
            break;
        }
        term = term.mul_ref(&xl).div_ref(&PadicNumber::from_int(p, work, k))?;
        sum = sum.add_ref(&term);
        k += 1;
    }
    Ok(sum.with_precision(n))
}

/// ⟨u⟩^s for a unit u and s in Z_p.
pub fn unit_power(u: &PadicNumber, s: &PadicNumber) -> Result<PadicNumber> {
    if s.valuation().map(|v| v < 0).unwrap_or(false) {
        return domain("exponent must lie in Z_p");
    }
    let one = one_unit_part(u)?;
    let l = iwasawa_log(&one)?;
    exp(&s.mul_ref(&l))
}

/// Balanced lift into (-p^N/2, p^N/2] for elements of Z_p.
pub fn to_bigint_signed(x: &PadicNumber) -> Option<BigInt> {
    let n = x.to_integer()?;
    let m = big_pow(x.p(), x.precision());
    let half = &m >> 1;
    let n = BigInt::from_biguint(Sign::Plus, n);
    if n > BigInt::from_biguint(Sign::Plus, half) {
        Some(n - BigInt::from_biguint(Sign::Plus, m))
    } else {
        Some(n)
    }
}
