//! Properties of the critical-slope pipeline at small sizes.

use std::sync::OnceLock;

use critlp::lfunc::WeightChar;
use critlp::modsym::classical::{build_presentation, EisensteinData, Normalization};
use critlp::modsym::Symbol;
use critlp::overconvergent::{mellin_lp, stabilized_eigensymbol, OCSymbol, SolveConfig};
use critlp::qexp::Stabilization;
use critlp::verify::relative_agreement;
use critlp::PadicNumber;
use proptest::prelude::*;

fn solve(iota: i64, moments: usize, prec: u32, norm: Normalization) -> OCSymbol {
    let data = EisensteinData::exceptional(11, 3, prec as i64 + 6).unwrap();
    let mut cfg = SolveConfig::new(moments, prec);
    cfg.normalization = norm;
    stabilized_eigensymbol(build_presentation(33), &data, Stabilization::Critical, iota, &cfg).unwrap()
}

fn plus() -> &'static OCSymbol {
    static CELL: OnceLock<OCSymbol> = OnceLock::new();
    CELL.get_or_init(|| solve(1, 8, 10, Normalization::Stevens))
}

fn minus() -> &'static OCSymbol {
    static CELL: OnceLock<OCSymbol> = OnceLock::new();
    CELL.get_or_init(|| solve(-1, 8, 10, Normalization::Integral))
}

fn lp(phi: &OCSymbol, a: i64, s: i64) -> PadicNumber {
    let beta = PadicNumber::from_int(3, 30, 3);
    mellin_lp(phi, &beta, &WeightChar::from_ints(3, 30, a, s)).unwrap()
}

#[test]
fn parity_splitting() {
    for s in 0..4 {
        assert!(lp(plus(), 1, s).is_zero(), "odd σ, s = {s}");
        assert!(!lp(plus(), 0, s).is_zero(), "even σ, s = {s}");
    }
}

#[test]
fn zero_symbol_has_zero_transform() {
    let phi = plus();
    let zero = OCSymbol::new(Symbol::zero(phi.space().clone()), phi.base_precision(), phi.loss()).unwrap();
    for s in 0..3 {
        assert!(lp(&zero, 0, s).is_zero());
    }
}

#[test]
fn more_moments_keep_trusted_digits() {
    let bigger = solve(1, 10, 13, Normalization::Stevens);
    for s in 0..4 {
        let a = lp(plus(), 0, s);
        let b = lp(&bigger, 0, s);
        assert!(a.agreement(&b) >= a.precision(), "s = {s}");
        assert!(b.precision() > a.precision());
    }
}

#[test]
fn ratios_do_not_see_the_normalization() {
    let phi = plus();
    let unit = 7u64;
    let scaled = OCSymbol::new(phi.symbol().scale(unit), phi.base_precision(), phi.loss()).unwrap();
    let (a0, b0) = (lp(phi, 0, 1), lp(&scaled, 0, 1));
    for s in 2..4 {
        let r = lp(phi, 0, s).div_ref(&a0).unwrap();
        let q = lp(&scaled, 0, s).div_ref(&b0).unwrap();
        assert!(relative_agreement(&q, &r) >= r.relative_precision() - 1, "s = {s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The sign −ε(f) eigensymbol is supported at 0, so its transform vanishes everywhere.
    #[test]
    fn minus_symbol_transform_vanishes(a in 0i64..2, s in -20i64..20) {
        prop_assert!(lp(minus(), a, s).is_zero());
    }

    /// On the even side the transform is a nonzero analytic function of s:
    /// values at s and s + 2·3^4 agree to at least 4 digits.
    #[test]
    fn transform_is_continuous_in_s(s in -20i64..20) {
        let x = lp(plus(), 0, s);
        let y = lp(plus(), 0, s + 162);
        prop_assert!(x.agreement(&y) >= 4);
    }
}
