//! Analytic MMSE cost of an arbitrary `NP` filter.

use super::covariance::{FilterModel, RangeAggregates};
use crate::linalg::{CMat, CVec};
use crate::waveform::PowerPrior;
use crate::error::Result;

/// `J(h) = rho - 2 Re(h^H r) + h^H R h` for one range cell, where
/// `R = R_t(ell) + R_c + R_n` and `r = rho(ell, q) (d(psi_q) (x) s)`.
pub struct CellCost<'a> {
    model: &'a FilterModel,
    aggregates: RangeAggregates,
    covariance: CMat,
}

impl<'a> CellCost<'a> {
    pub fn new(model: &'a FilterModel, ell: usize, prior: &PowerPrior) -> Result<Self> {
        let aggregates = model.range_aggregates(ell, prior)?;
        let covariance = model.covariance(&aggregates);
        Ok(Self {
            model,
            aggregates,
            covariance,
        })
    }

    pub fn covariance(&self) -> &CMat {
        &self.covariance
    }

    pub fn aggregates(&self) -> &RangeAggregates {
        &self.aggregates
    }

    pub fn cost(&self, q: usize, h: &CVec) -> f64 {
        let rho = self.aggregates.rho(0, q);
        let r = self.model.cross_correlation(&self.aggregates, q);
        rho - 2.0 * h.dotc(&r).re + h.dotc(&(&self.covariance * h)).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_hermitian;
    use crate::waveform::{lfm_waveform, DopplerGrid};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wiener_filter_minimizes_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = lfm_waveform(4, 1e-6, 2e6, 0.0).unwrap().samples().clone();
        let g = CMat::from_fn(2, 3, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.3));
        let model = FilterModel::new(&s, DopplerGrid::new(4).unwrap(), g, 0.5, 1.0).unwrap();
        let values = (0..20).map(|_| rng.random_range(0.0..2.0)).collect();
        let prior = PowerPrior::from_values(5, 4, values).unwrap();
        let cost = CellCost::new(&model, 3, &prior).unwrap();
        let r = model.cross_correlation(cost.aggregates(), 2);
        let h = solve_hermitian(cost.covariance().clone(), &r).unwrap();
        let best = cost.cost(2, &h);
        // closed form rho - r^H R^{-1} r
        assert!((best - (prior.get(3, 2) - r.dotc(&h).re)).abs() < 1e-12);
        for _ in 0..20 {
            let dh = CVec::from_fn(12, |_, _| {
                Complex64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))
            });
            assert!(cost.cost(2, &(&h + dh)) >= best);
        }
        assert_eq!(cost.cost(2, &CVec::zeros(12)), prior.get(3, 2));
    }
}
