//! Non-adaptive processors and the prior they seed.

use std::time::Instant;

use num_complex::Complex64;

use super::{Method, RangeDopplerMap};
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, kron, CVec};
use crate::scene::DataCube;
use crate::waveform::{DopplerGrid, PowerPrior};

/// Prior floor relative to the noise power.
pub const PRIOR_FLOOR: f64 = 1e-4;

fn check_cube(cube: &DataCube, s: &CVec, grid: &DopplerGrid) -> Result<()> {
    if cube.waveform_len() != s.len() {
        return Err(Error::DimensionMismatch {
            what: "cube waveform length",
            expected: s.len(),
            got: cube.waveform_len(),
        });
    }
    if cube.doppler_cells() != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "cube Doppler cells",
            expected: grid.len(),
            got: cube.doppler_cells(),
        });
    }
    Ok(())
}

/// Sequential pulse compression followed by MTD across pulses.
pub fn spc_mtd(cube: &DataCube, s: &CVec, grid: &DopplerGrid) -> Result<RangeDopplerMap> {
    check_cube(cube, s, grid)?;
    let start = Instant::now();
    let (pulses, cells, q_len) = (cube.pulses(), cube.range_cells(), grid.len());
    let scale = 1.0 / (s.norm_squared() * pulses as f64);

    // compressed[p][ell - 1] = s^H y_p(ell)
    let compressed: Vec<Vec<Complex64>> = (0..pulses)
        .map(|p| {
            (1..=cells)
                .map(|ell| {
                    s.iter()
                        .zip(cube.window(p, ell))
                        .map(|(a, y)| a.conj() * y)
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut estimates = Vec::with_capacity(cells * q_len);
    for ell in 0..cells {
        for q in 0..q_len {
            let psi = grid.psi(q);
            let x: Complex64 = compressed
                .iter()
                .enumerate()
                .map(|(p, row)| row[ell] * cis_cycles(-(p as f64) * psi))
                .sum();
            estimates.push(x * scale);
        }
    }
    let mut map = RangeDopplerMap::new(Method::SpcMtd, cells, q_len, estimates)?;
    map.metadata.elapsed = start.elapsed();
    Ok(map)
}

/// `(d(psi_q) (x) s) / (||s||^2 P)`, the normalized joint matched filter.
pub fn jrdmf_filter(s: &CVec, grid: &DopplerGrid, q: usize, pulses: usize) -> CVec {
    kron(&grid.steering(q, pulses), s) / Complex64::new(s.norm_squared() * pulses as f64, 0.0)
}

/// Joint range-Doppler matched filter applied to the stacked data.
pub fn jrdmf(cube: &DataCube, s: &CVec, grid: &DopplerGrid) -> Result<RangeDopplerMap> {
    check_cube(cube, s, grid)?;
    let start = Instant::now();
    let (pulses, cells, q_len) = (cube.pulses(), cube.range_cells(), grid.len());
    let filters: Vec<CVec> = (0..q_len).map(|q| jrdmf_filter(s, grid, q, pulses)).collect();
    let mut estimates = Vec::with_capacity(cells * q_len);
    for ell in 1..=cells {
        let y = cube.stacked(ell);
        estimates.extend(filters.iter().map(|h| h.dotc(&y)));
    }
    let mut map = RangeDopplerMap::new(Method::Jrdmf, cells, q_len, estimates)?;
    map.metadata.elapsed = start.elapsed();
    Ok(map)
}

/// `rho(ell, q) = max(|x(ell, q)|^2, 1e-4 sigma_n^2)`.
pub fn estimate_prior(map: &RangeDopplerMap, noise_power: f64) -> Result<PowerPrior> {
    let floor = PRIOR_FLOOR * noise_power;
    let values = map.powers().into_iter().map(|p| p.max(floor)).collect();
    PowerPrior::from_values(map.range_cells(), map.doppler_cells(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::lfm_waveform;

    fn unit_target_cube(ell0: usize, q0: usize) -> (DataCube, CVec, DopplerGrid) {
        let s = lfm_waveform(8, 2e-6, 4e6, 0.0).unwrap().samples().clone();
        let grid = DopplerGrid::new(8).unwrap();
        let mut cube = DataCube::zeros(4, 10, 8, 8, 2);
        for p in 0..4 {
            let phase = cis_cycles(p as f64 * grid.psi(q0));
            let row = &mut cube.pulse_mut(p)[ell0 - 1..ell0 - 1 + 8];
            for (y, v) in row.iter_mut().zip(s.iter()) {
                *y = v * phase;
            }
        }
        (cube, s, grid)
    }

    #[test]
    fn unit_target_peaks_at_one() {
        let (cube, s, grid) = unit_target_cube(6, 3);
        for map in [spc_mtd(&cube, &s, &grid).unwrap(), jrdmf(&cube, &s, &grid).unwrap()] {
            let peak = map.get(6, 3);
            assert!((peak - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(map.estimates().iter().all(|z| z.norm() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_cube_gives_zero_map() {
        let (_, s, grid) = unit_target_cube(1, 0);
        let cube = DataCube::zeros(4, 10, 8, 8, 2);
        assert!(spc_mtd(&cube, &s, &grid).unwrap().estimates().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(jrdmf(&cube, &s, &grid).unwrap().estimates().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn prior_floor_and_peak() {
        let (cube, s, grid) = unit_target_cube(4, 5);
        let map = spc_mtd(&cube, &s, &grid).unwrap();
        let prior = estimate_prior(&map, 2.0).unwrap();
        assert!((prior.get(4, 5) - 1.0).abs() < 1e-12);
        assert!(prior.values().iter().all(|&v| v >= 2e-4));

        let zero = RangeDopplerMap::new(Method::SpcMtd, 2, 3, vec![Complex64::new(0.0, 0.0); 6]).unwrap();
        let prior = estimate_prior(&zero, 1.0).unwrap();
        assert!(prior.values().iter().all(|&v| v == 1e-4));
    }

    #[test]
    fn mismatched_cube_is_rejected() {
        let (cube, _, grid) = unit_target_cube(1, 0);
        let short = CVec::from_element(4, Complex64::new(1.0, 0.0));
        assert!(spc_mtd(&cube, &short, &grid).is_err());
        assert!(jrdmf(&cube, &short, &DopplerGrid::new(7).unwrap()).is_err());
    }
}
