//! Fixtures shared by the criterion benches.

use critlp::dist::TruncDist;
use critlp::modsym::classical::{build_presentation, EisensteinData};
use critlp::overconvergent::{critical_eigensymbol, OCSymbol, SolveConfig};
use critlp::PadicNumber;

/// A distribution with moments 1, 2, ..., `moments` in weight 0.
pub fn sample_dist(p: u64, moments: usize, prec: i64) -> TruncDist {
    let m = (1..=moments as i64).map(|j| PadicNumber::from_int(p, prec, j)).collect();
    TruncDist::new(p, 0, prec, m)
}

/// Data for E_{2,ℓ} at level ℓp.
pub fn exceptional_data(p: u64, ell: u64, prec: u32) -> EisensteinData {
    EisensteinData::exceptional(ell, p, prec as i64 + 6).expect("valid exceptional data")
}

/// The critical eigensymbol of E_{2,ℓ} with `moments` moments.
pub fn critical_symbol(p: u64, ell: u64, moments: usize, prec: u32) -> OCSymbol {
    let data = exceptional_data(p, ell, prec);
    critical_eigensymbol(build_presentation(ell * p), &data, &SolveConfig::new(moments, prec)).expect("solve succeeds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(sample_dist(3, 6, 8).num_moments(), 6);
        assert_eq!(critical_symbol(3, 11, 6, 8).p(), 3);
    }
}
