//! The exceptional series E_{2,ℓ} end to end, against oracles that do not go
//! through the overconvergent pipeline.

use critlp::lfunc::{rhs_exceptional, stevens_constant, WeightChar};
use critlp::modsym::classical::{build_presentation, EisensteinData};
use critlp::overconvergent::{critical_eigensymbol, mellin_lp, OCSymbol, SolveConfig};
use critlp::padic::{iwasawa_log, one_unit_part};
use critlp::PadicNumber;

fn solve(p: u64, ell: u64, moments: usize, prec: u32) -> OCSymbol {
    let data = EisensteinData::exceptional(ell, p, prec as i64 + 6).unwrap();
    critical_eigensymbol(build_presentation(ell * p), &data, &SolveConfig::new(moments, prec)).unwrap()
}

fn lp(phi: &OCSymbol, s: i64) -> PadicNumber {
    let p = phi.p();
    let beta = PadicNumber::from_int(p, 40, p as i64);
    mellin_lp(phi, &beta, &WeightChar::from_ints(p, 40, 0, s)).unwrap()
}

fn frac(p: u64, num: i64, den: i64) -> PadicNumber {
    PadicNumber::from_ratio(p, 40, &num.into(), &den.into()).unwrap()
}

/// At the trivial character, U_p-invariance alone gives
/// L_p = (1 − 1/β)·Φ({∞} − {0})(1) = 1 − 1/p under the Stevens normalization.
#[test]
fn value_at_trivial_character() {
    for (p, ell) in [(3u64, 11u64), (5, 7), (3, 7)] {
        let phi = solve(p, ell, 8, 10);
        let got = lp(&phi, 0);
        let want = frac(p, p as i64 - 1, p as i64);
        assert!(got.agreement(&want) >= got.precision(), "p={p} ℓ={ell}");
        assert!(got.precision() >= 5);
    }
}

/// With the constant (p − 1)/(p log_p ℓ) the right-hand side at s = 0 is
/// −(1 − 1/p)^3: the two simple poles of ζ_p cancel the double zero, so
/// neither side vanishes there.
#[test]
fn right_hand_side_at_zero() {
    for (p, ell) in [(3u64, 11i64), (5, 7)] {
        let zero = PadicNumber::from_int(p, 20, 0);
        let rhs = rhs_exceptional(ell, &zero, true, 14).unwrap();
        let q = frac(p, p as i64 - 1, p as i64);
        let want = q.mul_ref(&q).mul_ref(&q).neg_ref();
        assert!(rhs.agreement(&want) >= 12, "p={p}");
        assert!(!rhs.is_zero());
    }
}

/// The pipeline reproduces s(1 − ⟨ℓ⟩^{−s})ζ_p(σz)ζ_p(σ) up to the constant
/// −p/((p − 1) log_p ℓ), i.e. −p²/(p − 1)² times the constant (p − 1)/(p log_p ℓ).
#[test]
fn measured_constant() {
    for (p, ell, moments, prec, digits) in [(3u64, 11u64, 12usize, 20u32, 9i64), (5, 7, 10, 15, 7)] {
        let phi = solve(p, ell, moments, prec);
        let log_ell = iwasawa_log(&one_unit_part(&PadicNumber::from_int(p, 40, ell as i64)).unwrap()).unwrap();
        let c = frac(p, -(p as i64), p as i64 - 1).div_ref(&log_ell).unwrap();
        let m = p as i64 - 1;
        let stated = frac(p, -(p as i64) * p as i64, m * m).mul_ref(&stevens_constant(p, ell as i64, 30).unwrap());
        assert!(c.agreement(&stated) >= 20);
        for s in 1..=3 {
            let lhs = lp(&phi, s);
            let bare = rhs_exceptional(ell as i64, &PadicNumber::from_int(p, 40, s), false, 30).unwrap();
            let want = c.mul_ref(&bare);
            assert!(lhs.agreement(&want) >= digits, "p={p} s={s}: {}", lhs.agreement(&want));
        }
    }
}
