//! Tame Dirichlet characters with values in the Teichmüller subgroup of Z_p.

use std::collections::VecDeque;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::padic::{teichmuller, PadicNumber};

/// Kronecker symbol (d/n) for n ≥ 1.
pub fn kronecker(d: i64, n: i64) -> i64 {
    assert!(n >= 1);
    let mut n = n;
    let mut result = 1;
    while n % 2 == 0 {
        n /= 2;
        let r = d.rem_euclid(8);
        result *= match r {
            0 | 2 | 4 | 6 => 0,
            1 | 7 => 1,
            _ => -1,
        };
    }
    result * jacobi(d, n)
}

/// Jacobi symbol (a/n) for odd n ≥ 1.
pub fn jacobi(a: i64, n: i64) -> i64 {
    assert!(n >= 1 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

fn squarefree(n: i64) -> bool {
    let n = n.abs();
    let mut d = 2;
    while d * d <= n {
        if n % (d * d) == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

/// A character of (Z/m)^× with values ω(r) for residues r mod p.
///
/// Values are stored as residues mod p (0 off the unit group), which pins
/// down the Teichmüller lift uniquely; `eval` produces the p-adic value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirichletCharacter {
    modulus: u64,
    p: u64,
    prec: i64,
    residues: Vec<u64>,
}

/// JSON fixture format: images of chosen generators as residues mod p.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharacterDescriptor {
    pub modulus: u64,
    pub generators: Vec<u64>,
    pub images: Vec<u64>,
}

impl DirichletCharacter {
    pub fn trivial(modulus: u64, p: u64, prec: i64) -> Result<Self> {
        Self::from_fn(modulus, p, prec, |_| 1)
    }

    /// Kronecker character of a fundamental discriminant.
    pub fn quadratic(disc: i64, p: u64, prec: i64) -> Result<Self> {
        if !is_fundamental_discriminant(disc) {
            return domain(format!("{disc} is not a fundamental discriminant"));
        }
        if disc.rem_euclid(p as i64) == 0 {
            return domain(format!("discriminant {disc} is not prime to {p}"));
        }
        let m = disc.unsigned_abs();
        Self::from_fn(m, p, prec, |a| kronecker(disc, a as i64).rem_euclid(p as i64) as u64)
    }

    fn from_fn(modulus: u64, p: u64, prec: i64, f: impl Fn(u64) -> u64) -> Result<Self> {
        if modulus == 0 {
            return domain("modulus must be positive");
        }
        if modulus.gcd(&p) != 1 {
            return domain(format!("modulus {modulus} is not prime to {p}"));
        }
        let residues = (0..modulus)
            .map(|a| if a.gcd(&modulus) == 1 { f(a) % p } else { 0 })
            .collect();
        let c = DirichletCharacter {
            modulus,
            p,
            prec,
            residues,
        };
        c.check_multiplicative()?;
        Ok(c)
    }

    /// Build from generator images; the images must define a homomorphism.
    pub fn from_descriptor(desc: &CharacterDescriptor, p: u64, prec: i64) -> Result<Self> {
        let m = desc.modulus;
        if m == 0 || m.gcd(&p) != 1 {
            return domain("modulus must be positive and prime to p");
        }
        if desc.generators.len() != desc.images.len() {
            return domain("generator and image lists differ in length");
        }
        let mut table = vec![0u64; m as usize];
        table[(1 % m) as usize] = 1;
        let mut seen = vec![false; m as usize];
        seen[(1 % m) as usize] = true;
        let mut queue = VecDeque::from([1 % m]);
        while let Some(x) = queue.pop_front() {
            for (&g, &img) in desc.generators.iter().zip(&desc.images) {
                if img % p == 0 {
                    return domain("generator image must be a unit mod p");
                }
                let y = x * g % m;
                let val = table[x as usize] * img % p;
                if seen[y as usize] {
                    if table[y as usize] != val {
                        return domain("generator images do not define a character");
                    }
                } else {
                    seen[y as usize] = true;
                    table[y as usize] = val;
                    queue.push_back(y);
                }
            }
        }
        for a in 0..m {
            if a.gcd(&m) == 1 && !seen[a as usize] {
                return domain("generators do not span the unit group");
            }
        }
        let c = DirichletCharacter {
            modulus: m,
            p,
            prec,
            residues: table,
        };
        c.check_multiplicative()?;
        Ok(c)
    }

    fn check_multiplicative(&self) -> Result<()> {
        let m = self.modulus;
        for a in 0..m {
            for b in a..m {
                let lhs = self.residues[(a * b % m) as usize];
                let rhs = self.residues[a as usize] * self.residues[b as usize] % self.p;
                if lhs != rhs {
                    return domain("table is not multiplicative");
                }
            }
        }
        Ok(())
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// Residue of χ(n) mod p (0 when gcd(n, m) > 1).
    pub fn residue(&self, n: i64) -> u64 {
        self.residues[n.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn eval(&self, n: i64) -> PadicNumber {
        let r = self.residue(n);
        if r == 0 {
            PadicNumber::zero(self.p, self.prec)
        } else {
            teichmuller(self.p, self.prec, r as i64).expect("unit residue")
        }
    }

    /// χ(n) as an integer when the character is ±1-valued.
    pub fn sign(&self, n: i64) -> Option<i64> {
        match self.residue(n) {
            0 => Some(0),
            1 => Some(1),
            r if r == self.p - 1 => Some(-1),
            _ => None,
        }
    }

    pub fn is_quadratic_or_trivial(&self) -> bool {
        (0..self.modulus as i64).all(|a| self.sign(a).is_some())
    }

    pub fn is_trivial(&self) -> bool {
        (0..self.modulus).all(|a| a.gcd(&self.modulus) != 1 || self.residues[a as usize] == 1)
    }

    /// +1 for even, −1 for odd.
    pub fn parity(&self) -> i64 {
        if self.residue(-1) == 1 {
            1
        } else {
            -1
        }
    }

    pub fn conductor(&self) -> u64 {
        let m = self.modulus;
        for f in 1..=m {
            if !m.is_multiple_of(f) {
                continue;
            }
            let trivial_on_kernel = (0..m)
                .filter(|&a| a.gcd(&m) == 1 && a % f == 1 % f)
                .all(|a| self.residues[a as usize] == 1);
            if trivial_on_kernel {
                return f;
            }
        }
        m
    }

    pub fn primitive(&self) -> Self {
        let f = self.conductor();
        let m = self.modulus;
        let residues = (0..f)
            .map(|a| {
                if a.gcd(&f) != 1 {
                    return 0;
                }
                let mut x = a;
                while x.gcd(&m) != 1 {
                    x += f;
                }
                self.residues[(x % m) as usize]
            })
            .collect();
        DirichletCharacter {
            modulus: f,
            p: self.p,
            prec: self.prec,
            residues,
        }
    }

    /// Induce to a multiple of the modulus.
    pub fn lift(&self, modulus: u64) -> Result<Self> {
        if !modulus.is_multiple_of(self.modulus) {
            return domain(format!("{modulus} is not a multiple of {}", self.modulus));
        }
        Self::from_fn(modulus, self.p, self.prec, |a| self.residue(a as i64))
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.p != other.p {
            return domain("characters for different primes");
        }
        let m = self.modulus.lcm(&other.modulus);
        let p = self.p;
        let mut c = Self::from_fn(m, p, self.prec.min(other.prec), |a| {
            self.residue(a as i64) * other.residue(a as i64) % p
        })?;
        c.prec = self.prec.min(other.prec);
        Ok(c)
    }

    pub fn inverse(&self) -> Self {
        let p = self.p;
        let residues = self
            .residues
            .iter()
            .map(|&r| if r == 0 { 0 } else { mod_inv_small(r, p) })
            .collect();
        DirichletCharacter {
            modulus: self.modulus,
            p,
            prec: self.prec,
            residues,
        }
    }

    pub fn with_precision(&self, prec: i64) -> Self {
        let mut c = self.clone();
        c.prec = prec;
        c
    }

    /// Label used in reports, e.g. "chi_-3" or "1 mod 5".
    pub fn label(&self) -> String {
        if self.is_trivial() {
            return format!("trivial mod {}", self.modulus);
        }
        format!("character mod {} (conductor {})", self.modulus, self.conductor())
    }
}

fn mod_inv_small(a: u64, p: u64) -> u64 {
    let mut r = 1;
    for _ in 0..p - 2 {
        r = r * a % p;
    }
    r
}

/// Parse a character spec used by the CLI and fixtures: "1" (trivial),
/// or a fundamental discriminant such as "-3", "-4", "5".
pub fn parse_character(spec: &str, p: u64, prec: i64) -> Result<DirichletCharacter> {
    let trimmed = spec.trim();
    if trimmed == "1" || trimmed.eq_ignore_ascii_case("trivial") {
        return DirichletCharacter::trivial(1, p, prec);
    }
    match trimmed.parse::<i64>() {
        Ok(d) => DirichletCharacter::quadratic(d, p, prec),
        Err(_) => domain(format!("cannot parse character '{spec}'")),
    }
}
