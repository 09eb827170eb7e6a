//! Verification commands: compute both sides of each L-function identity,
//! compare them digit by digit and collect the outcome in a report.
//!
//! Setup problems (bad primes, wrong parity, indecent input) are returned as
//! `Err`; failures inside a pipeline become failing check records.

pub mod selftest;

use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{parse_character, DirichletCharacter};
use crate::dist::TruncDist;
use crate::error::{Error, Result};
use crate::lfunc::{kubota_leopoldt, rhs_exceptional, rhs_normal, rhs_ordinary_exceptional, rhs_ordinary_normal, LValue, WeightChar};
use crate::modsym::classical::{build_presentation, classical_space, stabilized_boundary_phi, EisensteinData, Normalization};
use crate::modsym::Cusp;
use crate::overconvergent::{
    distribution_space, mellin_lp, ordinary_eigenlift, stabilized_eigensymbol, OCSymbol, SolveConfig,
};
use crate::padic::PadicNumber;
use crate::qexp::Stabilization;

/// Bumped whenever a field of the JSON report changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Which Eisenstein series a check is about.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormSpec {
    /// E_{2,ℓ}: weight 2, level ℓ, trivial character.
    Exceptional { ell: u64 },
    /// E_{k+2,ψ,τ} with characters given by discriminant ("1" for trivial).
    Normal { psi: String, tau: String, k: u32 },
}

impl FormSpec {
    pub fn data(&self, p: u64, prec: i64) -> Result<EisensteinData> {
        match self {
            FormSpec::Exceptional { ell } => {
                if !is_prime(*ell) || *ell == p {
                    return Err(Error::Domain(format!("ℓ = {ell} must be a prime different from p = {p}")));
                }
                EisensteinData::exceptional(*ell, p, prec)
            }
            FormSpec::Normal { psi, tau, k } => {
                let psi = parse_character(psi, p, prec)?;
                let tau = parse_character(tau, p, prec)?;
                if psi.modulus() % p == 0 || tau.modulus() % p == 0 {
                    return Err(Error::Domain("characters must be tame at p".into()));
                }
                EisensteinData::new(*k, psi, tau)
            }
        }
    }
}

/// σ = ω^a·⟨z⟩^s with integer s.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SigmaSpec {
    pub a: i64,
    pub s: i64,
}

impl SigmaSpec {
    pub fn new(a: i64, s: i64) -> Self {
        SigmaSpec { a, s }
    }

    pub fn weight_char(&self, p: u64, prec: i64) -> WeightChar {
        WeightChar::from_ints(p, prec, self.a, self.s)
    }

    /// σ(−1) = (−1)^a.
    pub fn parity(&self) -> i64 {
        if self.a.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

/// Sorted and deduplicated, so that the order of the input list never
/// changes a report.
pub fn canonical_sigmas(p: u64, sigmas: &[SigmaSpec]) -> Vec<SigmaSpec> {
    let mut out: Vec<SigmaSpec> = sigmas
        .iter()
        .map(|x| SigmaSpec::new(x.a.rem_euclid(p as i64 - 1), x.s))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// A p-adic number as it appears in reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PadicValue {
    pub repr: String,
    pub valuation: Option<i64>,
    pub precision: i64,
    /// Base-p digits of the representative in [0, p^precision), lowest first.
    pub digits: Vec<u64>,
}

impl From<&PadicNumber> for PadicValue {
    fn from(x: &PadicNumber) -> Self {
        let digits = match x.valuation() {
            None => Vec::new(),
            Some(v) if v >= 0 => {
                let mut d = vec![0; v as usize];
                d.extend(x.unit_digits());
                d
            }
            Some(_) => x.unit_digits(),
        };
        PadicValue {
            repr: x.describe(),
            valuation: x.valuation(),
            precision: x.precision(),
            digits,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Domain,
    Precision,
    Rank,
    Unsupported,
    Input,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CheckError {
    pub kind: FailureKind,
    pub message: String,
}

impl From<&Error> for CheckError {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::Domain(_) => FailureKind::Domain,
            Error::PrecisionExhausted(_) => FailureKind::Precision,
            Error::Rank { .. } => FailureKind::Rank,
            Error::Unsupported(_) => FailureKind::Unsupported,
            Error::Input(_) => FailureKind::Input,
        };
        CheckError {
            kind,
            message: e.to_string(),
        }
    }
}

/// One comparison. `pass` is always `agreement >= required`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub p: u64,
    pub form: FormSpec,
    pub sigma: Option<SigmaSpec>,
    pub lhs: Option<PadicValue>,
    pub rhs: Option<PadicValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<PadicValue>,
    pub agreement: i64,
    pub required: i64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<CheckError>,
    /// Wall clock; only filled in when timings are requested, since it would
    /// make otherwise identical reports differ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl CheckRecord {
    fn new(name: &str, p: u64, form: &FormSpec, sigma: Option<SigmaSpec>) -> Self {
        CheckRecord {
            name: name.into(),
            p,
            form: form.clone(),
            sigma,
            lhs: None,
            rhs: None,
            ratio: None,
            agreement: 0,
            required: 1,
            pass: false,
            note: None,
            error: None,
            elapsed_ms: None,
        }
    }

    fn grade(mut self, agreement: i64, required: i64) -> Self {
        self.required = required.max(1);
        self.agreement = agreement.max(0);
        self.pass = self.agreement >= self.required;
        self
    }

    fn failed(mut self, e: &Error, required: i64) -> Self {
        self.error = Some(e.into());
        self.grade(0, required)
    }
}

/// Knobs shared by every command.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunConfig {
    /// Number of moments M of the approximation module.
    pub moments: usize,
    /// p-adic working precision N.
    pub prec: u32,
    /// Auxiliary T_q constraints in the eigensymbol solve.
    pub hecke_constraints: usize,
    /// Overrides the per-command digit requirement.
    pub required: Option<i64>,
    pub timings: bool,
    /// Seed for the randomized selftest inputs.
    pub seed: u64,
}

impl RunConfig {
    /// M = 12, N = 20 at p = 3; M = 10, N = 15 otherwise.
    pub fn defaults_for(p: u64) -> Self {
        let (moments, prec) = if p == 3 { (12, 20) } else { (10, 15) };
        RunConfig {
            moments,
            prec,
            hecke_constraints: 2,
            required: None,
            timings: false,
            seed: 0x5eed,
        }
    }

    fn solve_config(&self, normalization: Normalization) -> SolveConfig {
        SolveConfig {
            moments: self.moments,
            base_prec: self.prec,
            aux: self.hecke_constraints,
            normalization,
        }
    }

    fn elapsed(&self, start: Instant) -> Option<u64> {
        self.timings.then(|| start.elapsed().as_millis() as u64)
    }

    fn validate(&self) -> Result<()> {
        if self.moments < 2 || self.prec < 2 {
            return Err(Error::Domain("need at least 2 moments and 2 digits".into()));
        }
        if self.moments > 64 || self.prec > 60 {
            return Err(Error::Domain("moments ≤ 64 and precision ≤ 60".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConfigEcho {
    pub moments: usize,
    pub prec: u32,
    pub hecke_constraints: usize,
    pub normalization: Option<Normalization>,
}

/// Trusted-digit bookkeeping of the symbol behind the LHS.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SolveSummary {
    pub level: u64,
    pub weight: i64,
    pub iota_sign: i64,
    pub loss: u32,
    pub trusted_digits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub solves: Vec<SolveSummary>,
    pub checks: Vec<CheckRecord>,
    pub passed: usize,
    pub failed: usize,
}

impl VerificationReport {
    fn new(command: &str, config: ConfigEcho, solves: Vec<SolveSummary>, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            solves,
            failed: checks.len() - passed,
            passed,
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        !self.checks.is_empty() && self.failed == 0
    }

    /// 0 all pass, 1 some check failed, 2 a check hit a domain error,
    /// 3 a check ran out of precision.
    pub fn exit_code(&self) -> i32 {
        let kinds: Vec<FailureKind> = self.checks.iter().filter_map(|c| c.error.as_ref().map(|e| e.kind)).collect();
        if kinds.contains(&FailureKind::Precision) {
            3
        } else if kinds.contains(&FailureKind::Domain) {
            2
        } else if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let sigma = c.sigma.map(|s| format!(" σ=(a={}, s={})", s.a, s.s)).unwrap_or_default();
                let mut line = format!(
                    "{} {}{}: {} of {} digits",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    sigma,
                    c.agreement,
                    c.required
                );
                if let Some(r) = &c.ratio {
                    line.push_str(&format!(", ratio {}", r.repr));
                }
                if let Some(e) = &c.error {
                    line.push_str(&format!(" [{}]", e.message));
                }
                if let Some(n) = &c.note {
                    line.push_str(&format!(" ({n})"));
                }
                line
            })
            .collect()
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn check_prime(p: u64) -> Result<()> {
    if p < 3 || !is_prime(p) {
        return Err(Error::Domain(format!("p = {p} must be an odd prime")));
    }
    Ok(())
}

fn solve_summary(phi: &OCSymbol, level: u64, iota_sign: i64, elapsed_ms: Option<u64>) -> SolveSummary {
    SolveSummary {
        level,
        weight: phi.weight(),
        iota_sign,
        loss: phi.loss(),
        trusted_digits: phi.trusted_digits(),
        elapsed_ms,
    }
}

/// U_p-eigenvalue of the requested stabilization as a p-adic number.
fn p_eigenvalue(data: &EisensteinData, mode: Stabilization, prec: i64) -> Result<PadicNumber> {
    let p = data.prime();
    match mode {
        Stabilization::Ordinary => Ok(data.psi.with_precision(prec).eval(p as i64)),
        Stabilization::Critical => {
            let pk = PadicNumber::from_int(p, prec, p as i64).pow(data.k as i64 + 1)?;
            Ok(data.tau.with_precision(prec).eval(p as i64).mul_ref(&pk))
        }
    }
}

/// Digits on which x agrees with `reference`, counted from the leading digit of `reference`.
pub fn relative_agreement(x: &PadicNumber, reference: &PadicNumber) -> i64 {
    match reference.valuation() {
        None => 0,
        Some(v) => x.agreement(reference) - v,
    }
}

/// Solve for the critical eigensymbol of the given form and sign.
fn critical_solve(
    p: u64,
    data: &EisensteinData,
    iota_sign: i64,
    cfg: &RunConfig,
    normalization: Normalization,
) -> (Result<OCSymbol>, SolveSummary) {
    let level = data.level() * p;
    let start = Instant::now();
    let res = stabilized_eigensymbol(
        build_presentation(level),
        data,
        Stabilization::Critical,
        iota_sign,
        &cfg.solve_config(normalization),
    );
    let summary = match &res {
        Ok(phi) => solve_summary(phi, level, iota_sign, cfg.elapsed(start)),
        Err(_) => SolveSummary {
            level,
            weight: data.k as i64,
            iota_sign,
            loss: 0,
            trusted_digits: 0,
            elapsed_ms: cfg.elapsed(start),
        },
    };
    (res, summary)
}

/// LHS = L_p(E_{2,ℓ}^{crit}, ⟨z⟩^s) with Stevens normalization against
/// RHS = (p−1)/(p log_p ℓ)·s(1 − ⟨ℓ⟩^{−s})ζ_p(σz)ζ_p(σ).
pub fn verify_exceptional(p: u64, ell: u64, s_list: &[i64], cfg: &RunConfig) -> Result<VerificationReport> {
    check_prime(p)?;
    cfg.validate()?;
    let form = FormSpec::Exceptional { ell };
    let work = cfg.prec as i64 + 4;
    let data = form.data(p, work)?;
    let required = cfg.required.unwrap_or(if p == 3 { 5 } else { 4 });
    let sigmas = canonical_sigmas(p, &s_list.iter().map(|&s| SigmaSpec::new(0, s)).collect::<Vec<_>>());
    let (phi, summary) = critical_solve(p, &data, 1, cfg, Normalization::Stevens);
    let beta = p_eigenvalue(&data, Stabilization::Critical, work)?;
    let checks: Vec<CheckRecord> = sigmas
        .par_iter()
        .map(|&sig| {
            let start = Instant::now();
            let rec = CheckRecord::new("exceptional", p, &form, Some(sig));
            let out = (|| {
                let phi = phi.as_ref().map_err(Clone::clone)?;
                let lhs = mellin_lp(phi, &beta, &sig.weight_char(p, work))?;
                let rhs = rhs_exceptional(ell as i64, &PadicNumber::from_int(p, work, sig.s), true, work)?;
                Ok::<_, Error>((lhs, rhs))
            })();
            let mut rec = match out {
                Ok((lhs, rhs)) => {
                    let mut r = CheckRecord {
                        lhs: Some((&lhs).into()),
                        rhs: Some((&rhs).into()),
                        ratio: lhs.div_ref(&rhs).ok().map(|x| (&x).into()),
                        ..rec
                    };
                    if lhs.is_zero() && rhs.is_zero() {
                        r.note = Some("both sides vanish to working precision".into());
                    }
                    r.grade(lhs.agreement(&rhs), required)
                }
                Err(e) => rec.failed(&e, required),
            };
            rec.elapsed_ms = cfg.elapsed(start);
            rec
        })
        .collect();
    let config = ConfigEcho {
        moments: cfg.moments,
        prec: cfg.prec,
        hecke_constraints: cfg.hecke_constraints,
        normalization: Some(Normalization::Stevens),
    };
    Ok(VerificationReport::new("verify-exceptional", config, vec![summary], checks))
}

/// Index j when every trusted moment except the j-th vanishes, i.e. the
/// distribution is a multiple of the j-th derivative of δ_0.
fn dirac_derivative_at_zero(mu: &TruncDist) -> Option<usize> {
    let nonzero: Vec<usize> = (0..mu.num_moments()).filter(|&j| !mu.moment(j).is_zero()).collect();
    match nonzero.as_slice() {
        [j] => Some(*j),
        _ => None,
    }
}

/// L_p(f_β, σ) ≡ 0 on characters with σ(−1) = −ε(f), plus the support check
/// on the eigensymbol of sign −ε(f).
pub fn verify_vanishing(p: u64, form: &FormSpec, sigmas: &[SigmaSpec], cfg: &RunConfig) -> Result<VerificationReport> {
    check_prime(p)?;
    cfg.validate()?;
    let work = cfg.prec as i64 + 4;
    let data = form.data(p, work)?;
    let eps = data.sign();
    let sigmas = canonical_sigmas(p, sigmas);
    if sigmas.is_empty() {
        return Err(Error::Domain("empty σ list".into()));
    }
    if let Some(bad) = sigmas.iter().find(|s| s.parity() != -eps) {
        return Err(Error::Domain(format!(
            "σ = (a={}, s={}) has σ(−1) = ε(f); the vanishing statement is about σ(−1) = −ε(f)",
            bad.a, bad.s
        )));
    }
    let beta = p_eigenvalue(&data, Stabilization::Critical, work)?;
    let ((plus, s_plus), (minus, s_minus)) = rayon::join(
        || critical_solve(p, &data, eps, cfg, Normalization::Integral),
        || critical_solve(p, &data, -eps, cfg, Normalization::Integral),
    );
    let fallback = cfg.prec as i64;
    let mut checks: Vec<CheckRecord> = sigmas
        .par_iter()
        .map(|&sig| {
            let start = Instant::now();
            let rec = CheckRecord::new("vanishing", p, form, Some(sig));
            let out = plus
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|phi| mellin_lp(phi, &beta, &sig.weight_char(p, work)));
            let mut rec = match out {
                Ok(lhs) => {
                    let (agree, need) = (lhs.valuation_or_prec(), lhs.precision());
                    CheckRecord {
                        lhs: Some((&lhs).into()),
                        ..rec
                    }
                    .grade(agree, need)
                }
                Err(e) => rec.failed(&e, fallback),
            };
            rec.elapsed_ms = cfg.elapsed(start);
            rec
        })
        .collect();

    let start = Instant::now();
    let rec = CheckRecord::new("minus_part_support", p, form, None);
    let mut rec = match &minus {
        Err(e) => rec.failed(e, fallback),
        Ok(phi) => {
            let trusted = phi.trusted_digits() as i64;
            let base = phi.base_value();
            let shape = dirac_derivative_at_zero(&base);
            let off_zero = (1..p as i64).all(|a| phi.value(&Cusp::infinity(), &Cusp::new(a, p as i64)).is_zero());
            let mut mellin_zero = true;
            for sig in &sigmas {
                for flip in [0, 1] {
                    let s = SigmaSpec::new(sig.a + flip, sig.s);
                    match mellin_lp(phi, &beta, &s.weight_char(p, work)) {
                        Ok(v) => mellin_zero &= v.is_zero(),
                        Err(_) => mellin_zero = false,
                    }
                }
            }
            let mut rec = CheckRecord {
                note: Some(match shape {
                    Some(j) => format!("Φ({{∞}}−{{0}}) is a multiple of the order-{j} derivative of δ_0"),
                    None => "Φ({∞}−{0}) is not a multiple of a single δ_0 derivative".into(),
                }),
                ..rec
            };
            if let Some(j) = shape {
                rec.lhs = Some(base.moment(j).into());
            }
            let ok = shape.is_some() && off_zero && mellin_zero;
            rec.grade(if ok { trusted } else { 0 }, trusted)
        }
    };
    rec.elapsed_ms = cfg.elapsed(start);
    checks.push(rec);
    let config = ConfigEcho {
        moments: cfg.moments,
        prec: cfg.prec,
        hecke_constraints: cfg.hecke_constraints,
        normalization: Some(Normalization::Integral),
    };
    Ok(VerificationReport::new("verify-vanishing", config, vec![s_plus, s_minus], checks))
}

/// σ, its (LHS, RHS) pair or the error, and the elapsed milliseconds.
type Evaluated = (SigmaSpec, Result<(PadicNumber, Option<PadicNumber>)>, Option<u64>);

/// Per-σ records for a ratio-constancy test: σ of the `target` parity are
/// compared through LHS/RHS against the first of them; the rest must give LHS ≡ 0.
#[allow(clippy::too_many_arguments)]
fn ratio_records(
    name: &str,
    p: u64,
    form: &FormSpec,
    sigmas: &[SigmaSpec],
    target: i64,
    required: i64,
    cfg: &RunConfig,
    lhs_of: &(dyn Fn(&SigmaSpec) -> Result<PadicNumber> + Sync),
    rhs_of: &(dyn Fn(&SigmaSpec) -> Result<PadicNumber> + Sync),
) -> Vec<CheckRecord> {
    let evaluated: Vec<Evaluated> = sigmas
        .par_iter()
        .map(|sig| {
            let start = Instant::now();
            let out = (|| {
                let lhs = lhs_of(sig)?;
                let rhs = if sig.parity() == target { Some(rhs_of(sig)?) } else { None };
                Ok((lhs, rhs))
            })();
            (*sig, out, cfg.elapsed(start))
        })
        .collect();
    // reference: the first σ with both sides nonzero
    let reference = evaluated.iter().find_map(|(_, out, _)| match out {
        Ok((l, Some(r))) if !l.is_zero() && !r.is_zero() => l.div_ref(r).ok(),
        _ => None,
    });
    evaluated
        .into_iter()
        .map(|(sig, out, ms)| {
            let mut rec = match out {
                Err(e) => CheckRecord::new(name, p, form, Some(sig)).failed(&e, required),
                Ok((lhs, None)) => {
                    let rec = CheckRecord::new(&format!("{name}_opposite_parity"), p, form, Some(sig));
                    let (agree, need) = (lhs.valuation_or_prec(), lhs.precision());
                    CheckRecord {
                        lhs: Some((&lhs).into()),
                        ..rec
                    }
                    .grade(agree, need)
                }
                Ok((lhs, Some(rhs))) => {
                    let mut rec = CheckRecord {
                        lhs: Some((&lhs).into()),
                        rhs: Some((&rhs).into()),
                        ..CheckRecord::new(name, p, form, Some(sig))
                    };
                    if rhs.is_zero() {
                        // both sides must vanish together
                        rec.note = Some("RHS vanishes; LHS must vanish too".into());
                        let need = lhs.precision();
                        rec.grade(lhs.valuation_or_prec(), need.min(required))
                    } else if lhs.is_zero() {
                        rec.note = Some("LHS vanishes against a nonzero RHS".into());
                        rec.grade(0, required)
                    } else {
                        let ratio = lhs.div_ref(&rhs).expect("RHS is nonzero");
                        let agree = match &reference {
                            Some(r) => relative_agreement(&ratio, r),
                            None => 0,
                        };
                        rec.ratio = Some((&ratio).into());
                        rec.grade(agree, required)
                    }
                }
            };
            if reference.is_none() && rec.error.is_none() && rec.rhs.is_some() {
                rec.note.get_or_insert_with(|| "no σ with nonzero LHS and RHS".into());
                rec = rec.grade(0, required);
            }
            rec.elapsed_ms = ms;
            rec
        })
        .collect()
}

fn target_sigmas(p: u64, sigmas: &[SigmaSpec], target: i64) -> Result<Vec<SigmaSpec>> {
    let sigmas = canonical_sigmas(p, sigmas);
    if sigmas.iter().filter(|s| s.parity() == target).count() < 2 {
        return Err(Error::Domain(format!(
            "a ratio test needs at least two σ with σ(−1) = {target}"
        )));
    }
    Ok(sigmas)
}

/// Ratio L_p(f_α, σ)/[(1 − σ^{−1}(ℓ))ζ_p(σz)ζ_p(σ)] (exceptional) or
/// L_p(f_α, σ)/[σ^{−1}(Q)L_p(ψ, σz)L_p(τ, σz^{−k})] (normal) across σ.
/// The LHS comes from the U_p-iterated lift of the classical ordinary symbol.
pub fn verify_ordinary(p: u64, form: &FormSpec, sigmas: &[SigmaSpec], cfg: &RunConfig) -> Result<VerificationReport> {
    check_prime(p)?;
    cfg.validate()?;
    let work = cfg.prec as i64 + 4;
    let data = form.data(p, work)?;
    // the parity on which the right-hand side is not identically zero
    let target = match form {
        FormSpec::Exceptional { .. } => -1,
        FormSpec::Normal { .. } => data.sign(),
    };
    let sigmas = target_sigmas(p, sigmas, target)?;
    let required = cfg.required.unwrap_or(4);
    let level = data.level() * p;
    let pres = build_presentation(level);
    let neb = data.nebentypus()?;
    let start = Instant::now();
    let lifted = (|| {
        let cl = classical_space(pres.clone(), data.k, &neb, cfg.prec)?;
        let phi = stabilized_boundary_phi(&cl, &data, Stabilization::Ordinary)?;
        let oc = distribution_space(pres.clone(), data.k as i64, &neb, cfg.moments, cfg.prec)?;
        let alpha = data.p_eigenvalue(Stabilization::Ordinary, oc.ring());
        let (lift, _) = ordinary_eigenlift(&phi, &oc, alpha, cfg.prec, 4 * cfg.prec as usize + 8)?;
        Ok::<_, Error>(lift)
    })();
    let summary = match &lifted {
        Ok(phi) => solve_summary(phi, level, data.sign(), cfg.elapsed(start)),
        Err(_) => SolveSummary {
            level,
            weight: data.k as i64,
            iota_sign: data.sign(),
            loss: 0,
            trusted_digits: 0,
            elapsed_ms: cfg.elapsed(start),
        },
    };
    let alpha = p_eigenvalue(&data, Stabilization::Ordinary, work)?;
    let lhs_of = |sig: &SigmaSpec| -> Result<PadicNumber> {
        let phi = lifted.as_ref().map_err(Clone::clone)?;
        mellin_lp(phi, &alpha, &sig.weight_char(p, work))
    };
    let rhs_of = |sig: &SigmaSpec| -> Result<PadicNumber> {
        let w = sig.weight_char(p, work);
        match form {
            FormSpec::Exceptional { ell } => rhs_ordinary_exceptional(*ell as i64, &w, work),
            FormSpec::Normal { .. } => rhs_ordinary_normal(&data.psi, &data.tau, data.k, &w, work),
        }
    };
    let checks = ratio_records("ordinary_ratio", p, form, &sigmas, target, required, cfg, &lhs_of, &rhs_of);
    let config = ConfigEcho {
        moments: cfg.moments,
        prec: cfg.prec,
        hecke_constraints: 0,
        normalization: None,
    };
    Ok(VerificationReport::new("verify-ordinary", config, vec![summary], checks))
}

/// Whether the restriction of a character to (Z/ℓ^ν)^× is the same for ψ and τ.
fn same_local_component(psi: &DirichletCharacter, tau: &DirichletCharacter, ell_nu: u64) -> bool {
    let q = psi.modulus();
    let r = tau.modulus();
    // n ≡ x mod ℓ^ν and n ≡ 1 mod the prime-to-ℓ part of the modulus
    let lift = |x: u64, m: u64| -> i64 {
        let rest = m / ell_nu;
        (1..=m as i64)
            .find(|n| n.rem_euclid(ell_nu as i64) == x as i64 && n.rem_euclid(rest as i64) == 1 % rest as i64)
            .expect("CRT lift exists")
    };
    (1..ell_nu)
        .filter(|x| x.gcd(&ell_nu) == 1)
        .all(|x| psi.eval(lift(x, q)) == tau.eval(lift(x, r)))
}

/// A normal E_{2,ψ,τ} is indecent when some prime ℓ divides the conductors of
/// ψ and τ to the same positive order ν and the two characters agree on (Z/ℓ^ν)^×.
pub fn is_decent(data: &EisensteinData) -> bool {
    if data.k != 0 || data.psi.modulus() == 1 || data.tau.modulus() == 1 {
        return true;
    }
    let psi = data.psi.primitive();
    let tau = data.tau.primitive();
    let (q, r) = (psi.modulus(), tau.modulus());
    for ell in (2..=q.min(r)).filter(|&l| is_prime(l) && q % l == 0 && r % l == 0) {
        let order = |mut m: u64| {
            let mut e = 0;
            while m.is_multiple_of(ell) {
                m /= ell;
                e += 1;
            }
            e
        };
        let nu = order(q);
        if nu == order(r) && same_local_component(&psi, &tau, ell.pow(nu)) {
            return false;
        }
    }
    true
}

/// Up-to-unit test of L_p(f_β, σ) against σ^{−1}(R)·log^{[k+1]}(σ)·L_p(ψ, σz)·L_p(τ, σz^{−k}).
///
/// The eigensymbol is scaled to have a unit first coordinate: for odd ε(f)
/// the value on {∞} − {0} has zero constant moment.
pub fn verify_normal(p: u64, form: &FormSpec, sigmas: &[SigmaSpec], cfg: &RunConfig) -> Result<VerificationReport> {
    check_prime(p)?;
    cfg.validate()?;
    let FormSpec::Normal { .. } = form else {
        return Err(Error::Domain("verify-normal needs a pair of characters".into()));
    };
    let work = cfg.prec as i64 + 4;
    let data = form.data(p, work)?;
    if !is_decent(&data) {
        return Err(Error::Domain(
            "indecent Eisenstein series: k = 0 and ψ, τ agree on (Z/ℓ^ν)^× for a prime ℓ dividing both conductors exactly ν times; the critical eigenspace need not be a line".into(),
        ));
    }
    let target = data.sign();
    let sigmas = target_sigmas(p, sigmas, target)?;
    let required = cfg.required.unwrap_or(3);
    let (phi, summary) = critical_solve(p, &data, target, cfg, Normalization::Integral);
    let beta = p_eigenvalue(&data, Stabilization::Critical, work)?;
    let lhs_of = |sig: &SigmaSpec| -> Result<PadicNumber> {
        let phi = phi.as_ref().map_err(Clone::clone)?;
        mellin_lp(phi, &beta, &sig.weight_char(p, work))
    };
    let rhs_of = |sig: &SigmaSpec| rhs_normal(&data.psi, &data.tau, data.k, &sig.weight_char(p, work), work);
    let checks = ratio_records("normal_ratio", p, form, &sigmas, target, required, cfg, &lhs_of, &rhs_of);
    let config = ConfigEcho {
        moments: cfg.moments,
        prec: cfg.prec,
        hecke_constraints: cfg.hecke_constraints,
        normalization: Some(Normalization::Integral),
    };
    Ok(VerificationReport::new("verify-normal", config, vec![summary], checks))
}

/// Result of a single Kubota–Leopoldt evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LpEvalReport {
    pub schema_version: u32,
    pub p: u64,
    pub character: String,
    pub sigma: SigmaSpec,
    pub pole: bool,
    pub value: Option<PadicValue>,
    pub trusted_digits: Option<i64>,
}

impl LpEvalReport {
    pub fn text(&self) -> String {
        match &self.value {
            None => format!("L_p({}, ω^{}⟨z⟩^{}) : pole", self.character, self.sigma.a, self.sigma.s),
            Some(v) => format!(
                "L_p({}, ω^{}⟨z⟩^{}) = {}\nvaluation: {}\ntrusted digits: {}",
                self.character,
                self.sigma.a,
                self.sigma.s,
                v.repr,
                v.valuation.map(|x| x.to_string()).unwrap_or_else(|| "∞".into()),
                self.trusted_digits.unwrap_or(0)
            ),
        }
    }
}

/// L_p(ν, ω^a⟨z⟩^s).
pub fn lp_eval(p: u64, character: &str, sigma: SigmaSpec, prec: u32) -> Result<LpEvalReport> {
    check_prime(p)?;
    let nu = parse_character(character, p, prec as i64 + 4)?;
    let value = kubota_leopoldt(&nu, &sigma.weight_char(p, prec as i64 + 4), prec as i64)?;
    let (pole, value) = match value {
        LValue::Pole => (true, None),
        LValue::Finite(x) => (false, Some(x)),
    };
    Ok(LpEvalReport {
        schema_version: SCHEMA_VERSION,
        p,
        character: nu.label(),
        sigma,
        pole,
        trusted_digits: value.as_ref().map(|x| x.precision()),
        value: value.as_ref().map(Into::into),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(p: u64, moments: usize, prec: u32) -> RunConfig {
        RunConfig {
            moments,
            prec,
            ..RunConfig::defaults_for(p)
        }
    }

    #[test]
    fn padic_value_digits() {
        let x = PadicNumber::from_int(3, 5, 15);
        let v = PadicValue::from(&x);
        assert_eq!(v.digits, vec![0, 2, 1, 0, 0]);
        assert_eq!(v.valuation, Some(1));
        assert!(PadicValue::from(&PadicNumber::zero(3, 4)).digits.is_empty());
    }

    #[test]
    fn sigma_order_does_not_matter() {
        let a = canonical_sigmas(5, &[SigmaSpec::new(3, 1), SigmaSpec::new(1, 2), SigmaSpec::new(5, 2)]);
        let b = canonical_sigmas(5, &[SigmaSpec::new(1, 2), SigmaSpec::new(3, 1)]);
        assert_eq!(a, b);
    }

    #[test]
    fn decency() {
        let p = 5;
        let c3 = parse_character("-3", p, 8).unwrap();
        let c4 = parse_character("-4", p, 8).unwrap();
        let one = parse_character("1", p, 8).unwrap();
        assert!(is_decent(&EisensteinData::new(0, c3.clone(), c4.clone()).unwrap()));
        // χ_{−3} against itself: same conductor and same 3-component
        assert!(!is_decent(&EisensteinData::new(0, c3.clone(), c3.clone()).unwrap()));
        assert!(is_decent(&EisensteinData::new(1, one, c3.clone()).unwrap()));
        // χ_{−4} and χ_{−8}: both 2-power conductors, different orders
        let c8 = parse_character("-8", 3, 8).unwrap();
        let c4 = parse_character("-4", 3, 8).unwrap();
        assert!(is_decent(&EisensteinData::new(0, c4, c8).unwrap()));
        // χ_{−15} = χ_{−3}χ_5 paired with χ_{−3}: the 3-components agree
        let c15 = parse_character("-15", 7, 8).unwrap();
        let c3 = parse_character("-3", 7, 8).unwrap();
        assert!(!is_decent(&EisensteinData::new(0, c3.clone(), c15.clone()).unwrap()));
        assert!(!is_decent(&EisensteinData::new(0, c15, c3).unwrap()));
    }

    #[test]
    fn setup_errors_are_errors() {
        let cfg = quick(3, 6, 6);
        assert!(matches!(verify_exceptional(4, 11, &[1], &cfg), Err(Error::Domain(_))));
        assert!(matches!(verify_exceptional(3, 3, &[1], &cfg), Err(Error::Domain(_))));
        let form = FormSpec::Exceptional { ell: 11 };
        // even σ is on the wrong side for the vanishing statement
        assert!(verify_vanishing(3, &form, &[SigmaSpec::new(0, 1)], &cfg).is_err());
        // a single σ is not a ratio test
        assert!(verify_ordinary(3, &form, &[SigmaSpec::new(1, 1)], &cfg).is_err());
        let indecent = FormSpec::Normal {
            psi: "-3".into(),
            tau: "-3".into(),
            k: 0,
        };
        assert!(verify_normal(5, &indecent, &[SigmaSpec::new(1, 2), SigmaSpec::new(3, 1)], &cfg).is_err());
    }

    #[test]
    fn small_exceptional_report_is_deterministic() {
        let cfg = quick(3, 8, 10);
        let a = verify_exceptional(3, 11, &[2, 1], &cfg).unwrap();
        let b = verify_exceptional(3, 11, &[1, 2, 2], &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.checks.len(), 2);
        for c in &a.checks {
            assert_eq!(c.pass, c.agreement >= c.required);
            assert!(c.lhs.is_some() && c.rhs.is_some());
        }
        let back: VerificationReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn vanishing_small() {
        let cfg = quick(3, 8, 10);
        let form = FormSpec::Exceptional { ell: 11 };
        let rep = verify_vanishing(3, &form, &[SigmaSpec::new(1, 0), SigmaSpec::new(1, 2)], &cfg).unwrap();
        assert!(rep.all_pass(), "{:#?}", rep.summary_lines());
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn lp_eval_examples() {
        let r = lp_eval(5, "1", SigmaSpec::new(0, 0), 10).unwrap();
        assert!(r.pole);
        assert!(r.text().contains("pole"));
        let r = lp_eval(5, "-3", SigmaSpec::new(0, 0), 10).unwrap();
        let two_thirds = PadicNumber::from_ratio(5, 8, &2.into(), &3.into()).unwrap();
        assert_eq!(r.value.unwrap().digits[..8], PadicValue::from(&two_thirds).digits[..]);
    }

    #[test]
    fn exit_codes() {
        let form = FormSpec::Exceptional { ell: 11 };
        let mut rec = CheckRecord::new("x", 3, &form, None).grade(3, 2);
        let cfg = ConfigEcho {
            moments: 1,
            prec: 1,
            hecke_constraints: 0,
            normalization: None,
        };
        let ok = VerificationReport::new("t", cfg.clone(), vec![], vec![rec.clone()]);
        assert_eq!(ok.exit_code(), 0);
        rec = rec.grade(1, 2);
        assert_eq!(VerificationReport::new("t", cfg.clone(), vec![], vec![rec.clone()]).exit_code(), 1);
        let e = Error::PrecisionExhausted("x".into());
        let bad = rec.clone().failed(&e, 2);
        assert_eq!(VerificationReport::new("t", cfg.clone(), vec![], vec![rec, bad]).exit_code(), 3);
        assert_eq!(VerificationReport::new("t", cfg, vec![], vec![]).exit_code(), 1);
    }
}
