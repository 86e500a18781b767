//! Fixtures shared by the criterion benches: a reduced range-Doppler scene
//! with its designed dictionary, simulated cube and SPC prior.

use dfrc_core::array_beam::sidelobe_grid;
use dfrc_core::{
    design_cbm_dictionary, estimate_prior, lfm_waveform, select_pulse_weights, spc_mtd, synthesize,
    ArrayGeometry, BeamDesignSpec, BeamDictionary, ClutterField, CnrReference, DataCube, DopplerGrid,
    FilterModel, PowerPrior, Result, Scene, Target,
};

/// Scene dimensions for one fixture.
#[derive(Debug, Clone, Copy)]
pub struct Dims {
    pub samples: usize,
    pub pulses: usize,
    pub range_cells: usize,
    pub doppler_cells: usize,
    pub patches: usize,
}

impl Dims {
    /// `N = 16, P = 8, L = 40, Q = 16` with 100 clutter patches.
    pub const REDUCED: Dims = Dims {
        samples: 16,
        pulses: 8,
        range_cells: 40,
        doppler_cells: 16,
        patches: 100,
    };

    /// `N = 8, P = 4, L = 16, Q = 8` with 5 clutter patches.
    pub const SMALL: Dims = Dims {
        samples: 8,
        pulses: 4,
        range_cells: 16,
        doppler_cells: 8,
        patches: 5,
    };
}

pub fn design_spec() -> BeamDesignSpec {
    BeamDesignSpec {
        target_angle_deg: 0.0,
        comm_angle_deg: -50.0,
        sidelobe_region: vec![(-90.0, -5.0), (5.0, 90.0)],
        sll_levels: vec![10f64.powf(-25.0 / 20.0), 10f64.powf(-30.0 / 20.0)],
        phases: vec![0.0, std::f64::consts::PI],
    }
}

pub fn dictionary(geometry: &ArrayGeometry) -> Result<BeamDictionary> {
    design_cbm_dictionary(&design_spec(), geometry, 0.5)
}

pub fn design_grid() -> Vec<f64> {
    sidelobe_grid(&design_spec().sidelobe_region, 0.5).expect("valid region")
}

pub struct Fixture {
    pub model: FilterModel,
    pub cube: DataCube,
    pub prior: PowerPrior,
}

impl Fixture {
    /// `symbols = None` draws a random CBM stream; `Some` fixes it (all zeros
    /// for NCBM).
    pub fn new(dims: Dims, dict: &BeamDictionary, symbols: Option<&[usize]>, seed: u64) -> Result<Self> {
        let geometry = ArrayGeometry::new(dict.num_elements(), 0.5)?;
        let (weights, _) = select_pulse_weights(dict, symbols, dims.pulses, seed)?;
        let waveform = lfm_waveform(dims.samples, dims.samples as f64 * 0.125e-6, 4e6, 1e9)?;
        let s = waveform.samples();
        let grid = DopplerGrid::new(dims.doppler_cells)?;
        let clutter = ClutterField::with_cnr(
            dims.patches,
            (-60.0, 60.0),
            28.0,
            CnrReference::PerPatch,
            1.0,
            dict.weights(0),
            &geometry,
            s,
        )?;
        let q = dims.doppler_cells;
        let l = dims.range_cells;
        let targets = [(l * 9 / 20, q * 13 / 16, 10.0), (l * 5 / 8, q * 3 / 4, 5.0), (l / 2, q * 13 / 16, -5.0)]
            .into_iter()
            .map(|(range_cell, doppler_cell, snr_db)| Target {
                angle_deg: 0.0,
                range_cell,
                doppler_cell,
                snr_db,
            })
            .collect();
        let scene = Scene {
            targets,
            clutter,
            noise_power: 1.0,
        };
        let (cube, _) = synthesize(&scene, &weights, &geometry, s, &grid, l, seed)?;
        let prior = estimate_prior(&spc_mtd(&cube, s, &grid)?, 1.0)?;
        let model = FilterModel::from_transmit(s, grid, &weights, &geometry, &scene.clutter, 1.0)?;
        Ok(Self { model, cube, prior })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixture_builds() {
        let geometry = ArrayGeometry::new(10, 0.5).unwrap();
        let dict = dictionary(&geometry).unwrap();
        let fx = Fixture::new(Dims::SMALL, &dict, None, 3).unwrap();
        assert_eq!(fx.cube.range_cells(), 16);
        assert_eq!(fx.prior.doppler_cells(), 8);
        assert!(fx.model.has_clutter());
    }
}
