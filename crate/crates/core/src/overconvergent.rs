//! Overconvergent symbols: distribution-valued symbols on Γ_0(n) with p | n.
//!
//! Values are stored in scaled moment coordinates y_j = p^j μ_j modulo p^P,
//! P = min(M, N), which is exactly the approximation module where moment j
//! is known modulo p^(P − j).

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::characters::DirichletCharacter;
use crate::dist::TruncDist;
use crate::error::{Error, Result};
use crate::lfunc::WeightChar;
use crate::linalg::{solve, Mat, ResidueRing};
use crate::modsym::classical::{eisenstein_conditions, normalize_values, EisensteinData, Normalization};
use crate::modsym::space::residue_of;
use crate::modsym::{Cusp, HeckeOp, MomentAction, Presentation, Space, Symbol};
use crate::padic::{int_valuation, PadicNumber};
use crate::qexp::Stabilization;

/// Working precision of the approximation module with M moments at base precision N.
pub fn working_precision(moments: usize, base_prec: u32) -> u32 {
    (moments as u32).min(base_prec)
}

/// Distribution-valued symbols of weight `weight`.
pub fn distribution_space(
    pres: Arc<Presentation>,
    weight: i64,
    nebentypus: &DirichletCharacter,
    moments: usize,
    base_prec: u32,
) -> Result<Arc<Space>> {
    let ring = ResidueRing::new(nebentypus.prime(), working_precision(moments, base_prec))?;
    Space::new(pres, MomentAction::distributions(ring, weight, moments)?, nebentypus)
}

#[derive(Clone, Debug)]
pub struct OCSymbol {
    symbol: Symbol,
    base_prec: u32,
    loss: u32,
}

/// Serializable snapshot of an overconvergent symbol.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OCSymbolRecord {
    pub p: u64,
    pub level: u64,
    pub weight: i64,
    pub nebentypus: String,
    pub moments: usize,
    pub base_precision: u32,
    pub working_precision: u32,
    pub loss: u32,
    /// Cosets reduced to the lexicographic P^1 points, as a cheap presentation fingerprint.
    pub presentation_points: usize,
    pub values: Vec<u64>,
}

impl OCSymbol {
    pub fn new(symbol: Symbol, base_prec: u32, loss: u32) -> Result<Self> {
        if !symbol.space().module().is_distribution() {
            return Err(Error::Domain("overconvergent symbols need distribution coefficients".into()));
        }
        Ok(OCSymbol {
            symbol,
            base_prec,
            loss,
        })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn space(&self) -> &Arc<Space> {
        self.symbol.space()
    }

    pub fn ring(&self) -> &ResidueRing {
        self.symbol.ring()
    }

    pub fn p(&self) -> u64 {
        self.ring().p()
    }

    pub fn weight(&self) -> i64 {
        self.space().module().weight()
    }

    pub fn moments(&self) -> usize {
        self.space().dim()
    }

    pub fn base_precision(&self) -> u32 {
        self.base_prec
    }

    pub fn loss(&self) -> u32 {
        self.loss
    }

    /// Digits of the scaled coordinates that are trusted.
    pub fn trusted_digits(&self) -> u32 {
        self.ring().precision().saturating_sub(self.loss)
    }

    pub fn with_loss(&self, extra: u32) -> Self {
        OCSymbol {
            symbol: self.symbol.clone(),
            base_prec: self.base_prec,
            loss: self.loss + extra,
        }
    }

    /// Φ({x} − {y}) as a distribution.
    pub fn value(&self, x: &Cusp, y: &Cusp) -> TruncDist {
        let ys = self.symbol.eval(x, y);
        TruncDist::from_scaled(self.ring(), self.weight(), &ys, self.loss)
    }

    pub fn base_value(&self) -> TruncDist {
        self.value(&Cusp::infinity(), &Cusp::integer(0))
    }

    pub fn apply(&self, op: &HeckeOp) -> Self {
        OCSymbol {
            symbol: self.symbol.apply(op),
            base_prec: self.base_prec,
            loss: self.loss,
        }
    }

    pub fn apply_up(&self) -> Result<Self> {
        let p = self.p();
        if !self.space().level().is_multiple_of(p) {
            return Err(Error::Domain("U_p needs p | level".into()));
        }
        Ok(self.apply(&self.space().hecke(p)))
    }

    /// Equal modulo p^(trusted digits of either side).
    pub fn agrees_with(&self, other: &Self) -> bool {
        let digits = self.trusted_digits().min(other.trusted_digits());
        let m = self.p().pow(digits);
        self.symbol.values().iter().zip(other.symbol.values()).all(|(a, b)| a % m == b % m)
    }

    /// Manin relations hold on the trusted digits.
    pub fn satisfies_relations(&self) -> bool {
        let m = self.p().pow(self.trusted_digits());
        let rel = self.space().relation_matrix();
        rel.mul_vec(self.ring(), self.symbol.values()).iter().all(|x| x % m == 0)
    }

    /// Is Φ|op ≡ λΦ on the trusted digits?
    pub fn is_eigen(&self, op: &HeckeOp, lambda: u64) -> bool {
        let lhs = self.apply(op);
        let rhs = OCSymbol {
            symbol: self.symbol.scale(lambda),
            base_prec: self.base_prec,
            loss: self.loss,
        };
        lhs.agrees_with(&rhs)
    }

    /// ρ_k: restrict every value to polynomials of degree ≤ k, landing in V_k.
    pub fn rho_k(&self, classical: &Arc<Space>) -> Result<Symbol> {
        let k = classical.dim() - 1;
        if classical.module().is_distribution()
            || classical.module().weight() != self.weight()
            || classical.num_reps() != self.space().num_reps()
            || classical.level() != self.space().level()
        {
            return Err(Error::Domain("target is not the matching V_k space".into()));
        }
        let ring = self.ring();
        let target = classical.ring();
        let d = self.moments();
        if target.precision() + k as u32 > ring.precision() {
            return Err(Error::PrecisionExhausted(format!(
                "ρ_{k} to precision {} needs working precision {}",
                target.precision(),
                target.precision() + k as u32
            )));
        }
        let mut out = Vec::with_capacity(classical.unknowns());
        for r in 0..self.space().num_reps() {
            for j in 0..=k {
                let y = self.symbol.values()[r * d + j];
                // y_j = p^j μ_j on the lattice
                out.push((y / self.p().pow(j as u32)) % target.modulus());
            }
        }
        Symbol::new(classical.clone(), out)
    }

    pub fn to_record(&self) -> OCSymbolRecord {
        let sp = self.space();
        OCSymbolRecord {
            p: self.p(),
            level: sp.level(),
            weight: self.weight(),
            nebentypus: sp.nebentypus().label(),
            moments: self.moments(),
            base_precision: self.base_prec,
            working_precision: self.ring().precision(),
            loss: self.loss,
            presentation_points: sp.presentation().cosets(),
            values: self.symbol.values().to_vec(),
        }
    }

    /// Rebuild from a snapshot over a matching space.
    pub fn from_record(space: Arc<Space>, rec: &OCSymbolRecord) -> Result<Self> {
        if space.level() != rec.level
            || space.module().weight() != rec.weight
            || space.dim() != rec.moments
            || space.ring().precision() != rec.working_precision
            || space.presentation().cosets() != rec.presentation_points
        {
            return Err(Error::Input("snapshot does not match the space".into()));
        }
        OCSymbol::new(Symbol::new(space, rec.values.clone())?, rec.base_precision, rec.loss)
    }
}

/// Result of lifting a classical symbol: ρ_k(symbol) = p^denominator·φ.
#[derive(Clone, Debug)]
pub struct Lift {
    pub symbol: OCSymbol,
    /// Smallest e such that p^e·φ lifts to the integral approximation module.
    pub denominator: u32,
}

/// A distribution symbol whose ρ_k is p^e·φ for the least possible e, found by
/// one linear solve against the relations in lattice coordinates.
///
/// The integral module need not surject onto V_k-valued symbols: at weight 0
/// the boundary symbols typically only lift after multiplying by p.
pub fn lift_classical(phi: &Symbol, target: &Arc<Space>, base_prec: u32) -> Result<Lift> {
    let ring = target.ring();
    let k = phi.space().dim() - 1;
    let d = target.dim();
    if phi.space().level() != target.level() || phi.space().module().weight() != target.module().weight() {
        return Err(Error::Domain("classical and distribution spaces do not match".into()));
    }
    if d <= k {
        return Err(Error::PrecisionExhausted(format!("need more than {k} moments to lift")));
    }
    if phi.ring().precision() < ring.precision() {
        return Err(Error::PrecisionExhausted("classical symbol is known to fewer digits than the lift needs".into()));
    }
    if !phi.satisfies_relations() {
        return Err(Error::Input("classical symbol fails the Manin relations".into()));
    }
    let n = target.unknowns();
    let ex = target.module().lattice_exponents();
    let mut rel = target.relation_matrix();
    scale_columns(ring, &mut rel, &ex);
    let reps = target.num_reps();
    let mut proj = Mat::zeros(reps * (k + 1), n);
    let mut rhs = vec![0u64; rel.rows + reps * (k + 1)];
    for r in 0..reps {
        for j in 0..=k {
            let row = r * (k + 1) + j;
            proj.set(row, r * d + j, ring.pow_p(ex[j]));
            let c = phi.values()[r * (k + 1) + j] % ring.modulus();
            rhs[rel.rows + row] = ring.mul(c, ring.pow_p(ex[j]));
        }
    }
    let system = Mat::vstack(&[rel, proj]);
    for e in 0..ring.precision() {
        let scaled: Vec<u64> = rhs.iter().map(|&x| ring.mul(x, ring.pow_p(e))).collect();
        if let Some(z) = solve(ring, &system, &scaled) {
            let values = z
                .iter()
                .enumerate()
                .map(|(i, &x)| ring.mul(x, ring.pow_p(ex[i % d])))
                .collect();
            return Ok(Lift {
                symbol: OCSymbol::new(Symbol::new(target.clone(), values)?, base_prec, 0)?,
                denominator: e,
            });
        }
    }
    Err(Error::PrecisionExhausted("no multiple of the classical symbol lifts at the working precision".into()))
}

fn scale_columns(ring: &ResidueRing, m: &mut Mat, ex: &[u32]) {
    let d = ex.len();
    for c in 0..m.cols {
        let f = ring.pow_p(ex[c % d]);
        if f != 1 {
            for r in 0..m.rows {
                m.set(r, c, ring.mul(m.get(r, c), f));
            }
        }
    }
}

/// Iterate Φ ← α^{-1}·Φ|U_p from a lift of `phi` until it stops moving.
/// Returns the fixed point and the number of iterations used.
pub fn ordinary_eigenlift(
    phi: &Symbol,
    target: &Arc<Space>,
    alpha: u64,
    base_prec: u32,
    max_iterations: usize,
) -> Result<(OCSymbol, usize)> {
    let ring = target.ring();
    let inv = ring.inv_unit(alpha).ok_or_else(|| {
        Error::Domain("ordinary lifting needs a unit U_p eigenvalue".into())
    })?;
    let up = target.hecke(ring.p());
    let up_matrix = target.operator_matrix(&up);
    let start = lift_classical(phi, target, base_prec)?;
    if start.denominator > 0 {
        return Err(Error::PrecisionExhausted(format!(
            "the classical symbol only lifts after scaling by p^{}",
            start.denominator
        )));
    }
    let mut cur = start.symbol.symbol;
    for it in 1..=max_iterations {
        let next: Vec<u64> = up_matrix
            .mul_vec(ring, cur.values())
            .into_iter()
            .map(|x| ring.mul(x, inv))
            .collect();
        if next == cur.values() {
            return Ok((OCSymbol::new(cur, base_prec, 0)?, it));
        }
        cur = Symbol::new(target.clone(), next)?;
    }
    Err(Error::PrecisionExhausted(format!(
        "U_p iteration did not stabilize within {max_iterations} steps"
    )))
}

/// Parameters of a critical-slope eigensymbol solve.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveConfig {
    pub moments: usize,
    pub base_prec: u32,
    /// Number of T_q constraints at small good primes.
    pub aux: usize,
    pub normalization: Normalization,
}

impl SolveConfig {
    pub fn new(moments: usize, base_prec: u32) -> Self {
        SolveConfig {
            moments,
            base_prec,
            aux: 2,
            normalization: Normalization::Stevens,
        }
    }
}

/// The eigensymbol of `data` at level `pres` with U_p-eigenvalue of the
/// requested stabilization and ι-sign `iota_sign`, extracted as the kernel of
/// the stacked Hecke conditions on distribution symbols.
pub fn stabilized_eigensymbol(
    pres: Arc<Presentation>,
    data: &EisensteinData,
    mode: Stabilization,
    iota_sign: i64,
    cfg: &SolveConfig,
) -> Result<OCSymbol> {
    let p = data.prime();
    if !pres.level().is_multiple_of(data.level() * p) {
        return Err(Error::Domain(format!(
            "level {} is not divisible by M·p = {}",
            pres.level(),
            data.level() * p
        )));
    }
    let neb = data.nebentypus()?;
    let space = distribution_space(pres, data.k as i64, &neb, cfg.moments, cfg.base_prec)?;
    let ring = space.ring();
    let beta = data.p_eigenvalue(mode, ring);
    let conditions = eisenstein_conditions(&space, data, beta, iota_sign, cfg.aux)?;
    let line = space.eigen_line(&conditions)?;
    let sym = Symbol::new(space.clone(), line.generator)?;
    let anchor = sym.base_value()[0];
    let (values, extra) = normalize_values(ring, sym.values(), anchor, cfg.normalization)?;
    OCSymbol::new(Symbol::new(space, values)?, cfg.base_prec, line.loss + extra)
}

/// The critical-slope eigensymbol Φ_{f_β} with ι-sign ε(f).
pub fn critical_eigensymbol(pres: Arc<Presentation>, data: &EisensteinData, cfg: &SolveConfig) -> Result<OCSymbol> {
    stabilized_eigensymbol(pres, data, Stabilization::Critical, data.sign(), cfg)
}

/// Scaled moments of mult·ψ^{-1}(X)τ(Y/Q)·Y^w·δ_{X/Y} on the cusp X/Y, or 0
/// off the support (gcd(Y, M) ≠ Q or p | Y).
fn boundary_cusp_value(
    ring: &ResidueRing,
    weight: i64,
    dim: usize,
    psi: &DirichletCharacter,
    tau: &DirichletCharacter,
    x: i64,
    y: i64,
) -> Vec<u64> {
    let p = ring.p() as i64;
    let q = psi.modulus() as i64;
    let r = tau.modulus() as i64;
    if y.gcd(&(q * r)) != q || y.rem_euclid(p) == 0 {
        return vec![0; dim];
    }
    let inv_psi = ring.inv_unit(residue_of(psi, x, ring)).expect("ψ(x) is a unit");
    let mut coef = ring.mul(inv_psi, residue_of(tau, y / q, ring));
    if q > 2 || r > 2 {
        coef = ring.mul(coef, 2);
    }
    let yr = ring.from_i64(y);
    let y_inv = ring.inv_unit(yr).expect("Y is a unit");
    let y_w = if weight >= 0 {
        ring.pow(yr, weight as u64)
    } else {
        ring.pow(y_inv, weight.unsigned_abs())
    };
    // X/Y ∈ Z_p; scaled moment j is p^j (X/Y)^j Y^w
    let ratio = ring.mul(ring.from_i64(x), y_inv);
    let step = ring.mul(ratio, ring.pow_p(1.min(ring.precision())));
    let mut cur = ring.mul(coef, y_w);
    let mut out = Vec::with_capacity(dim);
    for _ in 0..dim {
        out.push(cur);
        cur = ring.mul(cur, step);
    }
    out
}

/// Φ_{w,ψ,τ}: the boundary distribution symbol supported on cusps X/Y with
/// p ∤ Y, level divisible by Q·R·p. Eigenvalues ψ(q) + τ(q)q^{w+1} for T_q,
/// ψ(p) for U_p and ψ(−1) for ι.
pub fn boundary_oc_symbol(
    pres: Arc<Presentation>,
    weight: i64,
    psi: &DirichletCharacter,
    tau: &DirichletCharacter,
    moments: usize,
    base_prec: u32,
) -> Result<OCSymbol> {
    if weight == -1 {
        return Err(Error::Unsupported("weight −1 has no boundary symbol of this shape".into()));
    }
    let p = psi.prime();
    if psi.parity() * tau.parity() != if weight.rem_euclid(2) == 0 { 1 } else { -1 } {
        return Err(Error::Domain("ψτ(−1) must equal (−1)^w".into()));
    }
    let m = psi.modulus() * tau.modulus();
    if !pres.level().is_multiple_of(m * p) {
        return Err(Error::Domain(format!("level must be divisible by {}", m * p)));
    }
    let neb = psi.product(tau)?;
    let space = distribution_space(pres, weight, &neb, moments, base_prec)?;
    let ring = space.ring().clone();
    let dim = space.dim();
    let f = |c: &Cusp| boundary_cusp_value(&ring, weight, dim, psi, tau, c.num, c.den);
    let values = space.from_cusp_function(&f);
    OCSymbol::new(Symbol::new(space, values)?, base_prec, 0)
}

/// Apply Θ_k value-wise: weight −2−k symbols to weight k symbols over the same presentation.
pub fn theta_symbol(phi: &OCSymbol, k: u32, target: &Arc<Space>) -> Result<OCSymbol> {
    if phi.weight() != -2 - k as i64 || target.module().weight() != k as i64 {
        return Err(Error::Domain("Θ_k maps weight −2−k to weight k".into()));
    }
    if target.dim() != phi.moments() || target.ring().precision() != phi.ring().precision() {
        return Err(Error::Domain("Θ_k target has a different approximation module".into()));
    }
    let ring = phi.ring();
    let d = phi.moments();
    let k = k as usize;
    let mut out = vec![0u64; phi.symbol.values().len()];
    for r in 0..phi.space().num_reps() {
        let block = &phi.symbol.values()[r * d..(r + 1) * d];
        for j in (k + 1)..d {
            // y'_j = p^j j(j−1)…(j−k) μ_{j−k−1} = p^{k+1}·j(j−1)…(j−k)·y_{j−k−1}
            let mut f = 1u64;
            for t in 0..=k {
                f = ring.mul(f, (j - t) as u64 % ring.modulus());
            }
            let y = block[j - k - 1];
            out[r * d + j] = ring.mul(ring.mul(f, y), ring.pow_p((k as u32 + 1).min(ring.precision())));
        }
    }
    OCSymbol::new(Symbol::new(target.clone(), out)?, phi.base_prec, phi.loss)
}

/// ∫ σ(pz − a) dν(z): the contribution of the disc −a + pZ_p.
pub fn disc_integral(nu: &TruncDist, a: i64, sigma: &WeightChar) -> Result<PadicNumber> {
    let p = sigma.p();
    if a.rem_euclid(p as i64) == 0 {
        return Ok(PadicNumber::zero(p, nu.base_precision()));
    }
    let s = sigma.s();
    let s_int = crate::padic::to_bigint_signed(s)
        .ok_or_else(|| Error::Domain("σ must have s ∈ Z_p".into()))?;
    let work = nu.base_precision() + 4;
    // σ(pz − a) = σ(−a)·⟨1 − pz/a⟩^s = σ(−a) Σ_n binom(s, n)(−p/a)^n z^n
    let minus_inv_a = PadicNumber::from_int(p, work, -a).inverse()?;
    let mut acc = PadicNumber::zero(p, work);
    let mut binom = BigInt::from(1);
    let mut fact_val = 0i64;
    let mut pow = PadicNumber::one(p, work);
    for n in 0..nu.num_moments() {
        if n > 0 {
            binom = binom * (&s_int - BigInt::from(n as i64 - 1)) / BigInt::from(n as i64);
            fact_val += int_valuation(p, &BigInt::from(n as i64));
            pow = pow.mul_ref(&minus_inv_a);
        }
        let b = PadicNumber::from_bigint(p, s.precision() - fact_val, &binom);
        // p^n m_n has the precision of the scaled coordinate
        let pn = PadicNumber::from_bigint(p, work + n as i64, &BigInt::from(p).pow(n as u32));
        let term = b.mul_ref(&pow).mul_ref(&pn.mul_ref(nu.moment(n)));
        acc = acc.add_ref(&term);
    }
    Ok(sigma.eval(-a)?.mul_ref(&acc))
}

/// Mellin transform over Z_p^× of μ = Φ({∞} − {0}) for a U_p-eigensymbol,
/// localized by βμ = Σ_a Φ({∞} − {a/p})|(1 a; 0 p); the a = 0 disc is pZ_p.
pub fn mellin_from_discs(discs: &[TruncDist], beta: &PadicNumber, sigma: &WeightChar) -> Result<PadicNumber> {
    if beta.is_zero() {
        return Err(Error::Domain("Mellin localization needs β ≠ 0".into()));
    }
    let p = sigma.p();
    if discs.len() != p as usize {
        return Err(Error::Domain(format!("need {p} disc distributions")));
    }
    let mut acc: Option<PadicNumber> = None;
    for (a, nu) in discs.iter().enumerate().skip(1) {
        let t = disc_integral(nu, a as i64, sigma)?;
        acc = Some(match acc {
            None => t,
            Some(x) => x.add_ref(&t),
        });
    }
    let acc = acc.unwrap_or_else(|| PadicNumber::zero(p, 0));
    acc.div_ref(beta)
}

/// L_p(Φ, σ) for a U_p-eigensymbol with eigenvalue β.
pub fn mellin_lp(phi: &OCSymbol, beta: &PadicNumber, sigma: &WeightChar) -> Result<PadicNumber> {
    let p = phi.p();
    if sigma.p() != p {
        return Err(Error::Domain("σ and Φ over different primes".into()));
    }
    let discs: Vec<TruncDist> = (0..p as i64)
        .map(|a| phi.value(&Cusp::infinity(), &Cusp::new(a, p as i64)))
        .collect();
    let val = mellin_from_discs(&discs, beta, sigma)?;
    let digits = phi.trusted_digits() as i64 - beta.valuation().unwrap_or(0);
    if digits <= 0 {
        return Err(Error::PrecisionExhausted("no trusted digits left after dividing by β".into()));
    }
    Ok(val.with_precision(digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modsym::classical::{build_presentation, classical_space, stabilized_boundary_phi};

    fn pad(p: u64, prec: i64, n: i64) -> PadicNumber {
        PadicNumber::from_int(p, prec, n)
    }

    #[test]
    fn mock_dirac_mellin() {
        let p = 3;
        let sigma = WeightChar::from_ints(p, 10, 1, 3);
        let zero = TruncDist::zero(p, 0, 6, 10);
        // pz − 2 = 1 at z = 1: the disc a = 2 carries δ_1
        let d1 = TruncDist::dirac(&pad(p, 10, 1), 0, 6, 10).unwrap();
        let discs = vec![zero.clone(), zero.clone(), d1];
        let v = mellin_from_discs(&discs, &pad(p, 10, 1), &sigma).unwrap();
        assert!(v.congruent(&pad(p, 10, 1)));
        // δ_0 lives in the disc pZ_p, which is dropped
        let d0 = TruncDist::dirac(&pad(p, 10, 0), 0, 6, 10).unwrap();
        let discs = vec![d0, zero.clone(), zero];
        assert!(mellin_from_discs(&discs, &pad(p, 10, 1), &sigma).unwrap().is_zero());
        assert!(mellin_from_discs(&discs, &pad(p, 10, 0), &sigma).is_err());
    }

    #[test]
    fn disc_integral_matches_point_evaluation() {
        // ν = δ_c on the disc a: the integral is σ(pc − a)
        let p = 5u64;
        let sigma = WeightChar::from_ints(p, 12, 3, 7);
        for (a, c) in [(1i64, 2i64), (3, 4), (4, 0)] {
            let nu = TruncDist::dirac(&pad(p, 12, c), 0, 12, 12).unwrap();
            let got = disc_integral(&nu, a, &sigma).unwrap();
            let want = sigma.eval(p as i64 * c - a).unwrap();
            assert!(got.congruent(&want), "a = {a}, c = {c}");
            assert!(got.precision() >= 10);
        }
    }

    fn level_33_setup(prec: u32) -> (Arc<Presentation>, EisensteinData) {
        let data = EisensteinData::exceptional(11, 3, prec as i64 + 4).unwrap();
        (build_presentation(33), data)
    }

    #[test]
    fn lift_and_project_round_trip() {
        let (pres, data) = level_33_setup(8);
        let neb = data.nebentypus().unwrap();
        let cl = classical_space(pres.clone(), 0, &neb, 8).unwrap();
        let phi = stabilized_boundary_phi(&cl, &data, Stabilization::Critical).unwrap();
        let oc = distribution_space(pres.clone(), 0, &neb, 8, 8).unwrap();
        let Lift { symbol: lift, denominator } = lift_classical(&phi, &oc, 8).unwrap();
        assert!(denominator <= 1);
        assert!(lift.symbol().satisfies_relations());
        let scaled = phi.scale(3u64.pow(denominator));
        assert_eq!(lift.rho_k(&cl).unwrap().values(), scaled.values());
        let zero = lift_classical(&Symbol::zero(cl.clone()), &oc, 8).unwrap();
        assert_eq!(zero.denominator, 0);
        assert!(zero.symbol.rho_k(&cl).unwrap().is_zero());
        // ρ commutes with U_p
        let up_then_rho = lift.apply_up().unwrap().rho_k(&cl).unwrap();
        assert_eq!(up_then_rho.values(), scaled.apply(&cl.hecke(3)).values());
    }

    #[test]
    fn ordinary_lift_is_a_fixed_point() {
        let (pres, data) = level_33_setup(8);
        let neb = data.nebentypus().unwrap();
        let cl = classical_space(pres.clone(), 0, &neb, 8).unwrap();
        let phi = stabilized_boundary_phi(&cl, &data, Stabilization::Ordinary).unwrap();
        let oc = distribution_space(pres.clone(), 0, &neb, 8, 8).unwrap();
        let (lift, iters) = ordinary_eigenlift(&phi, &oc, 1, 8, 40).unwrap();
        assert!(iters <= 12);
        assert!(lift.is_eigen(&oc.hecke(3), 1));
        assert_eq!(lift.rho_k(&cl).unwrap().values(), phi.values());
        // restarting from the fixed point stops after one step
        let (_, again) = ordinary_eigenlift(&lift.rho_k(&cl).unwrap(), &oc, 1, 8, 40).unwrap();
        assert!(again <= iters);
    }

    #[test]
    fn boundary_symbol_eigen_package() {
        let p = 3;
        let pres = build_presentation(33);
        let triv = DirichletCharacter::trivial(1, p, 12).unwrap();
        let tau = DirichletCharacter::trivial(11, p, 12).unwrap();
        for w in [0i64, -2, 2] {
            let phi = boundary_oc_symbol(pres.clone(), w, &triv, &tau, 8, 8).unwrap();
            let sp = phi.space().clone();
            let ring = sp.ring();
            assert!(phi.symbol().satisfies_relations(), "w = {w}");
            assert!(!phi.symbol().is_zero());
            for q in [2u64, 5, 7] {
                let ev = ring.add(1, ring.from_i128((q as i128).pow((w + 1).max(0) as u32)));
                if w + 1 >= 0 {
                    assert!(phi.is_eigen(&sp.hecke(q), ev), "w = {w}, q = {q}");
                } else {
                    let inv = ring.inv_unit(ring.pow(q % ring.modulus(), (-(w + 1)) as u64)).unwrap();
                    assert!(phi.is_eigen(&sp.hecke(q), ring.add(1, inv)), "w = {w}, q = {q}");
                }
            }
            assert!(phi.is_eigen(&sp.hecke(3), 1));
            assert!(phi.is_eigen(&sp.iota(), 1));
        }
        assert!(boundary_oc_symbol(pres, -1, &triv, &tau, 8, 8).is_err());
    }

    fn exceptional_solve(iota: i64, norm: Normalization) -> OCSymbol {
        let data = EisensteinData::exceptional(11, 3, 14).unwrap();
        let mut cfg = SolveConfig::new(8, 10);
        cfg.normalization = norm;
        stabilized_eigensymbol(build_presentation(33), &data, Stabilization::Critical, iota, &cfg).unwrap()
    }

    #[test]
    fn critical_eigensymbol_package() {
        let phi = exceptional_solve(1, Normalization::Stevens);
        let sp = phi.space().clone();
        let ring = sp.ring();
        assert!(phi.trusted_digits() >= 5);
        assert!(phi.satisfies_relations());
        assert!(phi.is_eigen(&sp.hecke(2), 3));
        assert!(phi.is_eigen(&sp.hecke(7), 8));
        assert!(phi.is_eigen(&sp.hecke(3), 3));
        assert!(phi.is_eigen(&sp.iota(), 1));
        assert!(phi.base_value().moment(0).congruent(&pad(3, 10, 1)));
        // ρ_0 is the Stevens-normalized classical critical boundary symbol
        let data = EisensteinData::exceptional(11, 3, 14).unwrap();
        let digits = phi.trusted_digits();
        let cl = classical_space(build_presentation(33), 0, &data.nebentypus().unwrap(), digits).unwrap();
        let classical = stabilized_boundary_phi(&cl, &data, Stabilization::Critical).unwrap();
        let anchor = classical.base_value()[0];
        let inv = cl.ring().inv_unit(anchor).unwrap();
        assert_eq!(phi.rho_k(&cl).unwrap().values(), classical.scale(inv).values());
        let _ = ring;
    }

    #[test]
    fn minus_part_is_supported_at_zero() {
        let minus = exceptional_solve(-1, Normalization::Integral);
        let p = 3u64;
        let beta = pad(p, 20, 3);
        for s in 0..3 {
            for a in [0i64, 1] {
                let l = mellin_lp(&minus, &beta, &WeightChar::from_ints(p, 20, a, s)).unwrap();
                assert!(l.is_zero(), "a = {a}, s = {s}");
            }
        }
        // Φ({∞} − {0}) is a multiple of the derivative of δ_0 on every trusted moment
        let base = minus.base_value();
        let shape = TruncDist::dirac_deriv(&pad(p, 20, 0), 1, 0, 8, 20).unwrap();
        let c = base.moment(1).clone();
        assert!(!c.is_zero());
        assert!(base.agrees_with(&shape.scale(&c)));
        for a in 1..3 {
            assert!(minus.value(&Cusp::infinity(), &Cusp::new(a, 3)).is_zero());
        }
    }

    #[test]
    fn theta_maps_boundary_symbol_onto_minus_critical_line() {
        // f = E_{3,1,χ_{−3}} at p = 7: Θ_1(Φ_{−3,χ_{−3},1}) carries the eigenvalues of f_β
        let p = 7u64;
        let pres = build_presentation(21);
        let chi = DirichletCharacter::quadratic(-3, p, 12).unwrap();
        let one = DirichletCharacter::trivial(1, p, 12).unwrap();
        let low = boundary_oc_symbol(pres.clone(), -3, &chi, &one, 6, 6).unwrap();
        let target = distribution_space(pres.clone(), 1, &chi, 6, 6).unwrap();
        let th = theta_symbol(&low, 1, &target).unwrap();
        let r = target.ring();
        assert!(!th.symbol().is_zero());
        assert!(th.satisfies_relations());
        let data = EisensteinData::new(1, one.clone(), chi.clone()).unwrap();
        for q in [2u64, 5, 11, 3] {
            assert!(th.is_eigen(&target.hecke(q), data.eigenvalue(q, r)), "q = {q}");
        }
        assert!(th.is_eigen(&target.hecke(p), data.p_eigenvalue(Stabilization::Critical, r)));
        assert!(th.is_eigen(&target.iota(), r.neg(1)));
        // ρ_1 ∘ Θ_1 = 0
        assert!(th.symbol().values().chunks(6).all(|b| b[0] == 0 && b[1] == 0));
        let mut cfg = SolveConfig::new(6, 6);
        cfg.normalization = Normalization::Integral;
        let minus = stabilized_eigensymbol(pres, &data, Stabilization::Critical, -1, &cfg).unwrap();
        let idx = minus.symbol().values().iter().position(|&x| r.is_unit(x)).unwrap();
        let c = r.mul(th.symbol().values()[idx], r.inv_unit(minus.symbol().values()[idx]).unwrap());
        let m = p.pow(minus.trusted_digits());
        assert!(m > 1);
        for (x, y) in th.symbol().values().iter().zip(minus.symbol().values()) {
            assert_eq!(x % m, r.mul(c, *y) % m);
        }
    }

    #[test]
    fn record_round_trip() {
        let pres = build_presentation(33);
        let triv = DirichletCharacter::trivial(1, 3, 10).unwrap();
        let tau = DirichletCharacter::trivial(11, 3, 10).unwrap();
        let phi = boundary_oc_symbol(pres, 0, &triv, &tau, 6, 6).unwrap();
        let rec = phi.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: OCSymbolRecord = serde_json::from_str(&json).unwrap();
        let again = OCSymbol::from_record(phi.space().clone(), &back).unwrap();
        assert_eq!(again.symbol().values(), phi.symbol().values());
    }
}
