//! Classical symbols with V_k coefficients: explicit boundary symbols
//! attached to Eisenstein series and eigensymbols found by linear algebra.

use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::linalg::ResidueRing;
use crate::qexp::Stabilization;

use super::action::MomentAction;
use super::cusp::{Cusp, Matrix2};
use super::space::{residue_of, HeckeOp, Presentation, Space, Symbol};

/// Symbols with values in V_k.
pub type ClassicalSymbol = Symbol;

pub fn build_presentation(n: u64) -> Arc<Presentation> {
    Arc::new(Presentation::new(n))
}

/// V_k-valued symbols of level n and the given nebentypus, computed mod p^prec.
pub fn classical_space(
    pres: Arc<Presentation>,
    k: u32,
    nebentypus: &DirichletCharacter,
    prec: u32,
) -> Result<Arc<Space>> {
    let ring = ResidueRing::new(nebentypus.prime(), prec)?;
    Space::new(pres, MomentAction::polynomial(ring, k), nebentypus)
}

/// How to scale an eigensymbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Value on {∞} − {0} paired with the constant 1 equals 1.
    Stevens,
    /// First unit coordinate equals 1.
    Integral,
    /// Generator as returned by the solver.
    None,
}

/// The Eisenstein system E_{k+2,ψ,τ}; the exceptional E_{2,ℓ} is ψ = 1 and τ
/// the principal character mod ℓ.
#[derive(Clone, Debug)]
pub struct EisensteinData {
    pub k: u32,
    pub psi: DirichletCharacter,
    pub tau: DirichletCharacter,
}

impl EisensteinData {
    pub fn new(k: u32, psi: DirichletCharacter, tau: DirichletCharacter) -> Result<Self> {
        if psi.prime() != tau.prime() {
            return Err(Error::Domain("characters over different primes".into()));
        }
        if psi.parity() * tau.parity() != if k.is_multiple_of(2) { 1 } else { -1 } {
            return Err(Error::Domain(format!(
                "ψτ(−1) must equal (−1)^k (ψ = {}, τ = {}, k = {k})",
                psi.label(),
                tau.label()
            )));
        }
        let m = psi.modulus() * tau.modulus();
        if m == 4 && k % 2 == 1 {
            return Err(Error::Unsupported("level 4 with odd k is a degenerate boundary case".into()));
        }
        Ok(EisensteinData { k, psi, tau })
    }

    pub fn exceptional(ell: u64, p: u64, prec: i64) -> Result<Self> {
        Self::new(
            0,
            DirichletCharacter::trivial(1, p, prec)?,
            DirichletCharacter::trivial(ell, p, prec)?,
        )
    }

    pub fn prime(&self) -> u64 {
        self.psi.prime()
    }

    /// M = Q·R.
    pub fn level(&self) -> u64 {
        self.psi.modulus() * self.tau.modulus()
    }

    /// ψτ as a character mod M.
    pub fn nebentypus(&self) -> Result<DirichletCharacter> {
        self.psi.product(&self.tau)
    }

    /// ψ(q) + τ(q) q^{k+1}: the T_q eigenvalue, also U_q for q | M.
    pub fn eigenvalue(&self, q: u64, ring: &ResidueRing) -> u64 {
        let a = residue_of(&self.psi, q as i64, ring);
        let b = residue_of(&self.tau, q as i64, ring);
        ring.add(a, ring.mul(b, ring.pow(ring.from_i64(q as i64), self.k as u64 + 1)))
    }

    /// U_p eigenvalue of the chosen p-stabilization: ψ(p) or τ(p)p^{k+1}.
    pub fn p_eigenvalue(&self, mode: Stabilization, ring: &ResidueRing) -> u64 {
        let p = self.prime() as i64;
        match mode {
            Stabilization::Ordinary => residue_of(&self.psi, p, ring),
            Stabilization::Critical => ring.mul(
                residue_of(&self.tau, p, ring),
                ring.pow(ring.from_i64(p), self.k as u64 + 1),
            ),
        }
    }

    /// ε(f) = ψ(−1), the ι-eigenvalue of the boundary symbol.
    pub fn sign(&self) -> i64 {
        self.psi.parity()
    }

    /// Value of the raised-level symbol φ^s on the cusp X/Y (primitive column).
    pub fn cusp_value(&self, module: &MomentAction, x: i64, y: i64, s: u64) -> Vec<u64> {
        let ring = module.ring();
        let q = self.psi.modulus() as i64;
        let r = self.tau.modulus() as i64;
        let m = q * r;
        if y.gcd(&m) != q || y.gcd(&(s as i64)) != 1 {
            return vec![0; module.dim()];
        }
        let psi_x = residue_of(&self.psi, x, ring);
        let inv = ring.inv_unit(psi_x).expect("ψ(x) is a unit");
        let mut coef = ring.mul(inv, residue_of(&self.tau, y / q, ring));
        // the orbits of (x, Qy) and (−x, −Qy) both contribute unless they coincide
        if q > 2 || r > 2 {
            coef = ring.mul(coef, 2);
        }
        module
            .evaluation_at(x, y)
            .into_iter()
            .map(|v| ring.mul(v, coef))
            .collect()
    }
}

/// Total symbol of a boundary function: cusp ↦ value.
pub type CuspFunction<'a> = Box<dyn Fn(&Cusp) -> Vec<u64> + Sync + 'a>;

/// φ^s_{k,ψ,τ} as a function on cusps.
pub fn boundary_function<'a>(data: &'a EisensteinData, module: &'a MomentAction, s: u64) -> CuspFunction<'a> {
    Box::new(move |c: &Cusp| data.cusp_value(module, c.num, c.den, s))
}

/// f ↦ f(t·)|(t 0; 0 1), i.e. t^{k+1} V_t without the scalar.
pub fn vt_function<'a>(f: CuspFunction<'a>, module: &'a MomentAction, t: i64) -> CuspFunction<'a> {
    let alpha = Matrix2::new(t, 0, 0, 1);
    let act = module.matrix(&alpha);
    let ring = module.ring().clone();
    Box::new(move |c: &Cusp| act.mul_vec(&ring, &f(&alpha.act(c))))
}

fn check_level(space: &Space, data: &EisensteinData) -> Result<()> {
    if !space.level().is_multiple_of(data.level()) {
        return Err(Error::Domain(format!(
            "Eisenstein level {} does not divide {}",
            data.level(),
            space.level()
        )));
    }
    if space.module().is_distribution() || space.module().dim() != data.k as usize + 1 {
        return Err(Error::Domain("space does not carry V_k coefficients".into()));
    }
    Ok(())
}

/// The boundary symbol φ^s_{k,ψ,τ} restricted to degree-zero divisors.
pub fn boundary_phi(space: &Arc<Space>, data: &EisensteinData, s: u64) -> Result<ClassicalSymbol> {
    check_level(space, data)?;
    let f = boundary_function(data, space.module(), s);
    Symbol::new(space.clone(), space.from_cusp_function(&*f))
}

/// φ_{0,ℓ}: ψ trivial, τ principal mod ℓ.
pub fn phi_0_ell(space: &Arc<Space>, ell: u64) -> Result<ClassicalSymbol> {
    let data = EisensteinData::exceptional(ell, space.ring().p(), space.ring().precision() as i64 + 2)?;
    boundary_phi(space, &data, 1)
}

/// p-stabilized boundary symbol at level divisible by Mp.
///
/// Ordinary: φ^p, with U_p-eigenvalue ψ(p). Critical: p^{k+1}·φ|C_p =
/// p^{k+1}φ − ψ(p)·φ(p·)|(p 0; 0 1), with U_p-eigenvalue τ(p)p^{k+1}. The
/// critical one carries an extra factor p^{k+1} so it stays integral.
pub fn stabilized_boundary_phi(space: &Arc<Space>, data: &EisensteinData, mode: Stabilization) -> Result<ClassicalSymbol> {
    check_level(space, data)?;
    let p = data.prime();
    if !space.level().is_multiple_of(data.level() * p) {
        return Err(Error::Domain("level must be divisible by M·p".into()));
    }
    let module = space.module();
    match mode {
        Stabilization::Ordinary => boundary_phi(space, data, p),
        Stabilization::Critical => {
            let ring = space.ring().clone();
            let base = boundary_function(data, module, 1);
            let shifted = vt_function(boundary_function(data, module, 1), module, p as i64);
            let scale = ring.pow(ring.from_i64(p as i64), data.k as u64 + 1);
            let psi_p = residue_of(&data.psi, p as i64, &ring);
            let f = move |c: &Cusp| -> Vec<u64> {
                base(c)
                    .iter()
                    .zip(shifted(c))
                    .map(|(&a, b)| ring.sub(ring.mul(scale, a), ring.mul(psi_p, b)))
                    .collect()
            };
            Symbol::new(space.clone(), space.from_cusp_function(&f))
        }
    }
}

/// Hecke conditions cutting out the stabilized Eisenstein system:
/// `aux` operators T_q for the smallest primes q ∤ n, U_ℓ for the primes ℓ | n
/// other than p, U_p = β, and ι = sign.
pub fn eisenstein_conditions(
    space: &Space,
    data: &EisensteinData,
    beta: u64,
    iota_sign: i64,
    aux: usize,
) -> Result<Vec<(HeckeOp, u64)>> {
    let ring = space.ring();
    let n = space.level();
    let p = ring.p();
    let mut out = Vec::new();
    for ell in prime_divisors(n) {
        if ell == p {
            continue;
        }
        if !data.level().is_multiple_of(ell) {
            return Err(Error::Unsupported(format!(
                "prime {ell} divides the level but not the Eisenstein level; raised-level systems beyond p are not covered"
            )));
        }
        out.push((space.hecke(ell), data.eigenvalue(ell, ring)));
    }
    if n.is_multiple_of(p) {
        out.push((space.hecke(p), beta));
    }
    let mut q = 2u64;
    let mut taken = 0;
    while taken < aux {
        if is_prime(q) && !n.is_multiple_of(q) && q != p {
            out.push((space.hecke(q), data.eigenvalue(q, ring)));
            taken += 1;
        }
        q += 1;
    }
    let s = if iota_sign >= 0 { 1 } else { ring.neg(1) };
    out.push((space.iota(), s));
    Ok(out)
}

pub(crate) fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

pub(crate) fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Divide every coordinate by p^v when possible; the top v digits are lost.
pub(crate) fn divide_by_p_power(ring: &ResidueRing, values: &[u64], v: u32) -> Option<Vec<u64>> {
    if v == 0 {
        return Some(values.to_vec());
    }
    let f = ring.p().pow(v);
    if values.iter().any(|&x| x % f != 0) {
        return None;
    }
    Some(values.iter().map(|&x| x / f).collect())
}

/// Scale `values` according to `mode`, given the normalizing coordinate.
/// Returns the scaled values and the digits lost.
pub(crate) fn normalize_values(
    ring: &ResidueRing,
    values: &[u64],
    anchor: u64,
    mode: Normalization,
) -> Result<(Vec<u64>, u32)> {
    match mode {
        Normalization::None => Ok((values.to_vec(), 0)),
        Normalization::Integral => {
            let u = values.iter().copied().find(|&x| ring.is_unit(x)).ok_or_else(|| {
                Error::PrecisionExhausted("generator has no unit coordinate".into())
            })?;
            let inv = ring.inv_unit(u).expect("unit");
            Ok((values.iter().map(|&x| ring.mul(x, inv)).collect(), 0))
        }
        Normalization::Stevens => {
            let (v, unit) = ring.split(anchor);
            if v >= ring.precision() {
                return Err(Error::Domain(
                    "value on {oo}-{0} vanishes at working precision; Stevens normalization is undefined".into(),
                ));
            }
            let inv = ring.inv_unit(unit).expect("unit");
            let scaled: Vec<u64> = values.iter().map(|&x| ring.mul(x, inv)).collect();
            let divided = divide_by_p_power(ring, &scaled, v).ok_or_else(|| {
                Error::PrecisionExhausted(format!(
                    "value on {{oo}}-{{0}} has valuation {v} but the symbol is not divisible by p^{v}"
                ))
            })?;
            Ok((divided, v))
        }
    }
}

/// Result of an eigensymbol computation.
#[derive(Clone, Debug)]
pub struct Eigensymbol {
    pub symbol: Symbol,
    /// Digits lost to torsion in the eigenmodule and to normalization.
    pub loss: u32,
}

/// Solve the joint eigen-system and normalize.
pub fn classical_eigensymbol(
    space: &Arc<Space>,
    conditions: &[(HeckeOp, u64)],
    normalization: Normalization,
) -> Result<Eigensymbol> {
    let line = space.eigen_line(conditions)?;
    let sym = Symbol::new(space.clone(), line.generator)?;
    let anchor = sym.base_value()[0];
    let (values, extra) = normalize_values(space.ring(), sym.values(), anchor, normalization)?;
    Ok(Eigensymbol {
        symbol: Symbol::new(space.clone(), values)?,
        loss: line.loss + extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(p: u64, prec: i64) -> (DirichletCharacter, DirichletCharacter) {
        (
            DirichletCharacter::quadratic(-3, p, prec).unwrap(),
            DirichletCharacter::quadratic(-4, p, prec).unwrap(),
        )
    }

    fn check_eigen_package(data: &EisensteinData, n: u64, prec: u32) {
        let neb = data.nebentypus().unwrap();
        let sp = classical_space(build_presentation(n), data.k, &neb, prec).unwrap();
        let phi = boundary_phi(&sp, data, 1).unwrap();
        assert!(!phi.is_zero());
        assert!(phi.satisfies_relations());
        let ring = sp.ring();
        for q in [2u64, 3, 5, 7, 11, 13] {
            if n.is_multiple_of(q) && !data.level().is_multiple_of(q) {
                continue;
            }
            assert!(phi.is_eigen(&sp.hecke(q), data.eigenvalue(q, ring)), "q = {q}");
        }
        let sign = if data.sign() == 1 { 1 } else { ring.neg(1) };
        assert!(phi.is_eigen(&sp.iota(), sign));
        for a in 1..n as i64 {
            if a.gcd(&(n as i64)) == 1 {
                assert!(phi.is_eigen(&sp.diamond(a).unwrap(), sp.character_residue(a)));
            }
        }
    }

    #[test]
    fn eigen_package_both_pairs() {
        let p = 5;
        let (m3, m4) = chars(p, 8);
        check_eigen_package(&EisensteinData::new(0, m3.clone(), m4.clone()).unwrap(), 12, 6);
        let triv = DirichletCharacter::trivial(1, p, 8).unwrap();
        check_eigen_package(&EisensteinData::new(1, triv, m3).unwrap(), 3, 6);
        let (m3, m4) = chars(7, 8);
        check_eigen_package(&EisensteinData::new(2, m4, m3).unwrap(), 12, 6);
        let triv = DirichletCharacter::trivial(1, 7, 8).unwrap();
        check_eigen_package(&EisensteinData::new(2, triv.clone(), triv).unwrap(), 1, 6);
    }

    #[test]
    fn phi_zero_ell_eigenvalues() {
        let triv = DirichletCharacter::trivial(1, 3, 8).unwrap();
        let sp = classical_space(build_presentation(11), 0, &triv, 6).unwrap();
        let phi = phi_0_ell(&sp, 11).unwrap();
        assert!(phi.is_eigen(&sp.hecke(2), 3));
        assert!(phi.is_eigen(&sp.hecke(5), 6));
        assert!(phi.is_eigen(&sp.hecke(7), 8));
        assert!(phi.is_eigen(&sp.hecke(11), 1));
        assert!(phi.is_eigen(&sp.iota(), 1));
    }

    #[test]
    fn sign_and_gamma1_invariance() {
        let (m3, _) = chars(7, 8);
        let data = EisensteinData::new(1, DirichletCharacter::trivial(1, 7, 8).unwrap(), m3).unwrap();
        let ring = ResidueRing::new(7, 5).unwrap();
        let module = MomentAction::polynomial(ring.clone(), 1);
        for (x, y) in [(1, 3), (2, 9), (5, 6), (-4, 3)] {
            let a = data.cusp_value(&module, x, y, 1);
            let b = data.cusp_value(&module, -x, -y, 1);
            assert_eq!(a, b.iter().map(|&v| ring.neg(v)).collect::<Vec<_>>());
        }
        // φ(γc)|γ = φ(c) for γ ∈ Γ_1(3)
        let gamma = Matrix2::new(4, 1, 3, 1);
        assert_eq!(gamma.det(), 1);
        for (x, y) in [(1, 3), (2, 9), (5, 6), (7, 1)] {
            let (gx, gy) = (gamma.a * x + gamma.b * y, gamma.c * x + gamma.d * y);
            let lhs = module.act(&gamma, &data.cusp_value(&module, gx, gy, 1));
            assert_eq!(lhs, data.cusp_value(&module, x, y, 1));
        }
    }

    #[test]
    fn vt_scaling_on_cusps() {
        // t^{k+1} (φ^s|V_ℓ)(c) = φ^s(c)·ψ^{-1}(ℓ) ℓ^k or ·τ^{-1}(ℓ)
        let p = 7;
        let (m3, m4) = chars(p, 8);
        let data = EisensteinData::new(0, m3, m4).unwrap();
        let ring = ResidueRing::new(p, 6).unwrap();
        let module = MomentAction::polynomial(ring.clone(), 0);
        let ell = 5i64;
        let f = vt_function(boundary_function(&data, &module, 1), &module, ell);
        let g = boundary_function(&data, &module, 1);
        let psi_inv = ring.inv_unit(residue_of(&data.psi, ell, &ring)).unwrap();
        let tau_inv = ring.inv_unit(residue_of(&data.tau, ell, &ring)).unwrap();
        for (x, y) in [(1, 3), (1, 15), (7, 3), (2, 15), (-1, 45), (4, 9)] {
            let c = Cusp::new(x, y);
            let expect = if y % ell != 0 { psi_inv } else { tau_inv };
            let lhs = f(&c);
            let rhs: Vec<u64> = g(&c).iter().map(|&v| ring.mul(v, expect)).collect();
            assert_eq!(lhs, rhs, "cusp {c}");
        }
    }

    #[test]
    fn stabilizations_at_level_33() {
        let p = 3;
        let data = EisensteinData::exceptional(11, p, 10).unwrap();
        let neb = data.nebentypus().unwrap();
        let sp = classical_space(build_presentation(33), 0, &neb, 8).unwrap();
        let crit = stabilized_boundary_phi(&sp, &data, Stabilization::Critical).unwrap();
        let ord = stabilized_boundary_phi(&sp, &data, Stabilization::Ordinary).unwrap();
        assert!(crit.is_eigen(&sp.hecke(3), 3));
        assert!(ord.is_eigen(&sp.hecke(3), 1));
        for s in [&crit, &ord] {
            assert!(s.is_eigen(&sp.hecke(2), 3));
            assert!(s.is_eigen(&sp.hecke(5), 6));
            assert!(s.is_eigen(&sp.hecke(11), 1));
            assert!(s.satisfies_relations());
        }
        // 3φ − φ(3·) = 2φ here, so the value on {∞} − {0} stays a unit
        assert_eq!(sp.ring().val(crit.base_value()[0]), 0);
    }

    #[test]
    fn critical_eigensymbol_matches_boundary() {
        let p = 3;
        let data = EisensteinData::exceptional(11, p, 10).unwrap();
        let neb = data.nebentypus().unwrap();
        let sp = classical_space(build_presentation(33), 0, &neb, 8).unwrap();
        let ring = sp.ring().clone();
        let beta = data.p_eigenvalue(Stabilization::Critical, &ring);
        assert_eq!(beta, 3);
        let conds = eisenstein_conditions(&sp, &data, beta, 1, 2).unwrap();
        let eig = classical_eigensymbol(&sp, &conds, Normalization::Stevens).unwrap();
        assert_eq!(eig.loss, 0);
        assert_eq!(eig.symbol.base_value(), vec![1]);
        assert!(eig.symbol.is_eigen(&sp.hecke(2), 3));
        // proportional to the explicit construction
        let crit = stabilized_boundary_phi(&sp, &data, Stabilization::Critical).unwrap();
        let anchor = crit.base_value()[0];
        let scaled = eig.symbol.scale(anchor);
        assert_eq!(scaled.values(), crit.values());
    }
}
