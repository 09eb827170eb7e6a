//! Structural checks run by `critlp selftest`. Each suite is cheap (desk-scale
//! levels, few moments) and draws its random inputs from a seeded generator.

use std::sync::Arc;
use std::time::Instant;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SCHEMA_VERSION;
use crate::characters::DirichletCharacter;
use crate::dist::{solve_difference_equation, TruncDist};
use crate::error::{Error, Result};
use crate::lfunc::{interpolation_value_rational, kubota_leopoldt, WeightChar};
use crate::modsym::classical::{
    boundary_phi, build_presentation, classical_space, stabilized_boundary_phi, EisensteinData, Normalization,
};
use crate::modsym::{Matrix2, Space, Symbol};
use crate::overconvergent::{
    boundary_oc_symbol, distribution_space, stabilized_eigensymbol, theta_symbol, SolveConfig,
};
use crate::padic::PadicNumber;
use crate::qexp::{convolution_check, eisenstein_exceptional, stabilize, Stabilization};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SuiteRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SelftestReport {
    pub schema_version: u32,
    pub seed: u64,
    pub suites: Vec<SuiteRecord>,
}

impl SelftestReport {
    pub fn all_pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.suites
            .iter()
            .map(|s| format!("{} {}: {}", if s.pass { "PASS" } else { "FAIL" }, s.name, s.detail))
            .collect()
    }
}

type Suite = fn(&mut ChaCha8Rng) -> Result<String>;

/// Names in the order they run and appear in reports.
pub const SUITES: [&str; 7] = [
    "theta_exactness",
    "hecke_commutation",
    "boundary_eigen_package",
    "qexp_eigen_and_convolution",
    "difference_equation",
    "critical_rho_matches_classical",
    "kubota_leopoldt_sweep",
];

fn suite_fn(name: &str) -> Option<Suite> {
    Some(match name {
        "theta_exactness" => theta_exactness,
        "hecke_commutation" => hecke_commutation,
        "boundary_eigen_package" => boundary_eigen_package,
        "qexp_eigen_and_convolution" => qexp_suite,
        "difference_equation" => difference_equation,
        "critical_rho_matches_classical" => critical_rho,
        "kubota_leopoldt_sweep" => kl_sweep,
        _ => return None,
    })
}

/// Run one suite by name.
pub fn run_suite(name: &str, seed: u64, timings: bool) -> Result<SuiteRecord> {
    let f = suite_fn(name).ok_or_else(|| Error::Domain(format!("unknown suite '{name}'")))?;
    let idx = SUITES.iter().position(|s| *s == name).unwrap() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx));
    let start = Instant::now();
    let (pass, detail) = match f(&mut rng) {
        Ok(d) => (true, d),
        Err(e) => (false, e.to_string()),
    };
    Ok(SuiteRecord {
        name: name.into(),
        pass,
        detail,
        elapsed_ms: timings.then(|| start.elapsed().as_millis() as u64),
    })
}

pub fn selftest(seed: u64, timings: bool) -> SelftestReport {
    let suites = SUITES
        .par_iter()
        .map(|name| run_suite(name, seed, timings).expect("listed suite"))
        .collect();
    SelftestReport {
        schema_version: SCHEMA_VERSION,
        seed,
        suites,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Input(msg()))
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, p: i64) -> Matrix2 {
    loop {
        let g = Matrix2::new(
            rng.random_range(1..30),
            rng.random_range(-30..30),
            p * rng.random_range(-5..5),
            rng.random_range(-30..30),
        );
        if g.a % p != 0 && g.det() != 0 {
            return g;
        }
    }
}

fn random_ints(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-1000..1000)).collect()
}

/// Random element of the symbol module of `space`.
fn random_symbol(rng: &mut ChaCha8Rng, space: &Arc<Space>) -> Result<Symbol> {
    let ring = space.ring();
    let mut v = vec![0u64; space.unknowns()];
    for g in space.symbol_module() {
        let c = rng.random_range(0..ring.modulus());
        for (a, b) in v.iter_mut().zip(&g) {
            *a = ring.add(*a, ring.mul(c, *b));
        }
    }
    Symbol::new(space.clone(), v)
}

/// ρ_k∘Θ_k = 0 and Θ_k(μ|γ) = det(γ)^{k+1}·Θ_k(μ)|γ on random distributions;
/// Θ_1 is nonzero on a boundary symbol and lands in the kernel of ρ_1.
fn theta_exactness(rng: &mut ChaCha8Rng) -> Result<String> {
    let p = 3i64;
    let trials = 24;
    for _ in 0..trials {
        let k = rng.random_range(0..3u32);
        let g = random_matrix(rng, p);
        let mu = TruncDist::from_ints(p as u64, -2 - k as i64, 12, &random_ints(rng, 9));
        let th = mu.theta_k(k)?;
        ensure(th.rho_k(k)?.iter().all(|m| m.is_zero()), || "ρ_k∘Θ_k ≠ 0".into())?;
        let det = PadicNumber::from_int(p as u64, 30, g.det()).pow(k as i64 + 1)?;
        let lhs = th.act(&g)?;
        let rhs = mu.act(&g)?.theta_k(k)?.scale(&det);
        ensure(lhs.agrees_with(&rhs), || format!("det twist fails for k = {k}"))?;
    }
    let q = 7u64;
    let pres = build_presentation(21);
    let chi = DirichletCharacter::quadratic(-3, q, 10)?;
    let one = DirichletCharacter::trivial(1, q, 10)?;
    let low = boundary_oc_symbol(pres.clone(), -3, &chi, &one, 6, 6)?;
    let target = distribution_space(pres, 1, &chi, 6, 6)?;
    let th = theta_symbol(&low, 1, &target)?;
    ensure(!th.symbol().is_zero(), || "Θ_1 kills a boundary symbol".into())?;
    ensure(th.satisfies_relations(), || "Θ_1 image violates the relations".into())?;
    ensure(
        th.symbol().values().chunks(6).all(|b| b[0] == 0 && b[1] == 0),
        || "ρ_1∘Θ_1 ≠ 0 on symbols".into(),
    )?;
    Ok(format!("{trials} random distributions, one boundary symbol"))
}

/// [T_2, T_5] = [T_2, U_3] = 0 on random classical and distribution symbols at level 33.
fn hecke_commutation(rng: &mut ChaCha8Rng) -> Result<String> {
    let triv = DirichletCharacter::trivial(1, 3, 10)?;
    let pres = build_presentation(33);
    let spaces = [
        classical_space(pres.clone(), 0, &triv, 6)?,
        classical_space(pres.clone(), 2, &triv, 6)?,
        distribution_space(pres, 0, &triv, 5, 5)?,
    ];
    for sp in &spaces {
        let phi = random_symbol(rng, sp)?;
        let (t2, t5, u3) = (sp.hecke(2), sp.hecke(5), sp.hecke(3));
        ensure(phi.apply(&t2).apply(&t5).values() == phi.apply(&t5).apply(&t2).values(), || {
            "T_2 T_5 ≠ T_5 T_2".into()
        })?;
        ensure(phi.apply(&t2).apply(&u3).values() == phi.apply(&u3).apply(&t2).values(), || {
            "T_2 U_3 ≠ U_3 T_2".into()
        })?;
        ensure(phi.apply(&u3).satisfies_relations(), || "U_3 image violates the relations".into())?;
    }
    Ok(format!("{} spaces", spaces.len()))
}

fn check_eigen_package(data: &EisensteinData, level: u64, prec: u32) -> Result<()> {
    let neb = data.nebentypus()?;
    let sp = classical_space(build_presentation(level), data.k, &neb, prec)?;
    let phi = boundary_phi(&sp, data, 1)?;
    let ring = sp.ring();
    ensure(!phi.is_zero() && phi.satisfies_relations(), || "boundary symbol is not a nonzero symbol".into())?;
    for q in [2u64, 3, 5, 7, 11, 13] {
        if level.is_multiple_of(q) && !data.level().is_multiple_of(q) {
            continue;
        }
        ensure(phi.is_eigen(&sp.hecke(q), data.eigenvalue(q, ring)), || format!("T_{q} eigenvalue"))?;
    }
    let sign = if data.sign() == 1 { 1 } else { ring.neg(1) };
    ensure(phi.is_eigen(&sp.iota(), sign), || "ι sign".into())?;
    for a in (1..level as i64).filter(|a| a.gcd(&(level as i64)) == 1) {
        ensure(phi.is_eigen(&sp.diamond(a)?, sp.character_residue(a)), || format!("diamond ⟨{a}⟩"))?;
    }
    Ok(())
}

/// Hecke, ι and diamond eigenvalues of φ_{k,ψ,τ} for (χ_{−3}, χ_{−4}) in
/// both orders and for the exceptional pair.
fn boundary_eigen_package(_: &mut ChaCha8Rng) -> Result<String> {
    let p = 5;
    let c3 = DirichletCharacter::quadratic(-3, p, 8)?;
    let c4 = DirichletCharacter::quadratic(-4, p, 8)?;
    check_eigen_package(&EisensteinData::new(0, c3.clone(), c4.clone())?, 12, 6)?;
    check_eigen_package(&EisensteinData::new(0, c4, c3)?, 12, 6)?;
    check_eigen_package(&EisensteinData::exceptional(11, 3, 8)?, 11, 6)?;
    Ok("(χ_{−3}, χ_{−4}), (χ_{−4}, χ_{−3}), (1, 1_11)".into())
}

/// T_2, T_5 eigenvalues of both stabilizations of E_{2,11} for n ≤ 50 and the
/// divisor-sum convolution identity for n ≤ 200 (E_4 and E_{2,χ_{−4},χ_{−3}}).
fn qexp_suite(_: &mut ChaCha8Rng) -> Result<String> {
    let p = 3;
    let n = 12;
    let e = eisenstein_exceptional(11, p, n, 250)?;
    let int = |x: i64| PadicNumber::from_int(p, n, x);
    for mode in [Stabilization::Ordinary, Stabilization::Critical] {
        let (f, root) = stabilize(&e, mode)?;
        for (q, ev) in [(2u64, 3i64), (5, 6)] {
            let t = f.tq(q)?;
            ensure(t.bound() >= 50, || "T_q bound below 50".into())?;
            ensure(t.first_mismatch_scaled(&f, &int(ev)).is_none(), || format!("T_{q} on {mode:?}"))?;
        }
        ensure(f.uq(p).first_mismatch_scaled(&f, &root).is_none(), || format!("U_p on {mode:?}"))?;
    }
    let one = DirichletCharacter::trivial(1, p, n)?;
    for t in [1u64, 3] {
        if let Err(k) = convolution_check(2, &one, &one, t, 200)? {
            return Err(Error::Input(format!("convolution fails at n = {k} (t = {t})")));
        }
    }
    let c3 = DirichletCharacter::quadratic(-3, 5, n)?;
    let c4 = DirichletCharacter::quadratic(-4, 5, n)?;
    if let Err(k) = convolution_check(0, &c4, &c3, 2, 200)? {
        return Err(Error::Input(format!("convolution fails at n = {k} for (χ_{{−4}}, χ_{{−3}})")));
    }
    Ok("T_2, T_5, U_3 to n = 50; convolution to n = 200".into())
}

/// μ|(1 1; 0 1) − μ = ν up to the filtration for random ν with ν(1) = 0.
fn difference_equation(rng: &mut ChaCha8Rng) -> Result<String> {
    let trials = 24;
    for _ in 0..trials {
        let p = [3u64, 5, 7][rng.random_range(0..3)];
        let w = rng.random_range(-2..3);
        let mut raw = random_ints(rng, 9);
        raw[0] = 0;
        let nu = TruncDist::from_ints(p, w, 14, &raw);
        let mu = solve_difference_equation(&nu)?;
        let res = mu.act(&Matrix2::new(1, 1, 0, 1))?.sub(&mu)?.sub(&nu)?;
        ensure(res.is_zero(), || format!("residual nonzero at p = {p}, weight {w}"))?;
    }
    Ok(format!("{trials} random right-hand sides"))
}

/// ρ_0 of the Stevens-normalized critical eigensymbol of E_{2,11} at p = 3 is
/// the classical critical boundary symbol scaled to value 1 on {∞} − {0}.
fn critical_rho(_: &mut ChaCha8Rng) -> Result<String> {
    let data = EisensteinData::exceptional(11, 3, 14)?;
    let pres = build_presentation(33);
    let cfg = SolveConfig::new(8, 10);
    let phi = stabilized_eigensymbol(pres.clone(), &data, Stabilization::Critical, 1, &cfg)?;
    let digits = phi.trusted_digits();
    let cl = classical_space(pres, 0, &data.nebentypus()?, digits)?;
    let classical = stabilized_boundary_phi(&cl, &data, Stabilization::Critical)?;
    let inv = cl
        .ring()
        .inv_unit(classical.base_value()[0])
        .ok_or_else(|| Error::Input("classical anchor is not a unit".into()))?;
    ensure(phi.rho_k(&cl)?.values() == classical.scale(inv).values(), || {
        "ρ_0 differs from the normalized classical symbol".into()
    })?;
    debug_assert_eq!(cfg.normalization, Normalization::Stevens);
    Ok(format!("agree mod 3^{digits}"))
}

/// Kubota–Leopoldt values at σ = z^m against the exact Bernoulli formula
/// (1 − ν(p)p^{−m})·L(ν, m), modulo p^{N−2}.
fn kl_sweep(_: &mut ChaCha8Rng) -> Result<String> {
    let n = 12i64;
    let mut count = 0;
    for p in [7u64, 11] {
        for disc in [1i64, -3, -4, 5] {
            let nu = if disc == 1 {
                DirichletCharacter::trivial(1, p, n + 4)?
            } else {
                DirichletCharacter::quadratic(disc, p, n + 4)?
            };
            for m in -10i64..=0 {
                let sigma = WeightChar::power(p, n + 4, m);
                if nu.parity() * sigma.parity() != -1 {
                    continue;
                }
                let got = kubota_leopoldt(&nu, &sigma, n)?;
                if disc == 1 && m == 0 {
                    ensure(got.is_pole(), || format!("ζ_{p} has no pole at z^0"))?;
                    continue;
                }
                let want = PadicNumber::from_rational(p, n, &interpolation_value_rational(&nu, m)?)?;
                let got = got.finite()?;
                ensure(got.agreement(&want) >= n - 2, || format!("p = {p}, ν = {disc}, m = {m}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} interpolation points at p = 7, 11"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        let rep = selftest(7, false);
        assert_eq!(rep.suites.len(), SUITES.len());
        assert!(rep.all_pass(), "{:#?}", rep.summary_lines());
        let again = selftest(7, false);
        assert_eq!(rep.to_json(), again.to_json());
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 0, false).is_err());
    }
}
