//! Full-dimension adaptive multiple pulse compression.
//!
//! `h(ell, q) = (R_t(ell) + R_c + sigma_n^2 I)^{-1} rho(ell, q) (d(psi_q) (x) s)`.
//! The covariance does not depend on `q`, so it is factored once per range
//! cell and reused for all Doppler cells.

use std::time::Instant;

use num_complex::Complex64;

use super::covariance::{FilterModel, RangeAggregates};
use super::{Method, RangeDopplerMap};
use crate::error::{Error, Result};
use crate::linalg::{CVec, HermitianSolver};
use crate::scene::DataCube;
use crate::waveform::PowerPrior;

#[derive(Debug, Clone, PartialEq)]
pub struct AmpcFilter {
    pub h: CVec,
}

impl AmpcFilter {
    pub fn apply(&self, y: &CVec) -> Complex64 {
        self.h.dotc(y)
    }
}

pub(crate) fn check_cube(model: &FilterModel, cube: &DataCube, prior: &PowerPrior) -> Result<()> {
    let checks = [
        ("cube waveform length", model.num_samples(), cube.waveform_len()),
        ("cube pulses", model.pulses(), cube.pulses()),
        ("cube Doppler cells", model.grid().len(), cube.doppler_cells()),
        ("prior range cells", cube.range_cells(), prior.range_cells()),
        ("prior Doppler cells", model.grid().len(), prior.doppler_cells()),
    ];
    for (what, expected, got) in checks {
        if expected != got {
            return Err(Error::DimensionMismatch { what, expected, got });
        }
    }
    Ok(())
}

/// One range cell's factored covariance.
struct FactoredRange {
    solver: HermitianSolver,
}

impl FactoredRange {
    fn new(model: &FilterModel, agg: &RangeAggregates) -> Result<Self> {
        Ok(Self {
            solver: HermitianSolver::new(model.covariance(agg))?,
        })
    }

    fn filter(&self, model: &FilterModel, agg: &RangeAggregates, q: usize) -> AmpcFilter {
        let rho = agg.rho(0, q);
        let h = if rho == 0.0 {
            CVec::zeros(model.stacked_len())
        } else {
            self.solver.solve(&model.space_time_steering(q)) * Complex64::new(rho, 0.0)
        };
        AmpcFilter { h }
    }
}

/// AMPC estimate and filter for a single cell.
pub fn ampc_cell(
    model: &FilterModel,
    ell: usize,
    q: usize,
    cube: &DataCube,
    prior: &PowerPrior,
) -> Result<(Complex64, AmpcFilter)> {
    check_cube(model, cube, prior)?;
    let agg = model.range_aggregates(ell, prior)?;
    let filter = FactoredRange::new(model, &agg)
        .map_err(|e| e.at_cell(ell, q))?
        .filter(model, &agg, q);
    Ok((filter.apply(&cube.stacked(ell)), filter))
}

/// AMPC over every cell of the window.
pub fn ampc_map(model: &FilterModel, cube: &DataCube, prior: &PowerPrior) -> Result<RangeDopplerMap> {
    check_cube(model, cube, prior)?;
    let start = Instant::now();
    let (cells, q_len) = (cube.range_cells(), model.grid().len());
    let mut estimates = Vec::with_capacity(cells * q_len);
    for ell in 1..=cells {
        let agg = model.range_aggregates(ell, prior)?;
        let factored = FactoredRange::new(model, &agg).map_err(|e| e.at_cell(ell, 0))?;
        let y = cube.stacked(ell);
        for q in 0..q_len {
            estimates.push(factored.filter(model, &agg, q).apply(&y));
        }
    }
    let mut map = RangeDopplerMap::new(Method::Ampc, cells, q_len, estimates)?;
    map.metadata.elapsed = start.elapsed();
    Ok(map)
}
