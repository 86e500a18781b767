//! Filter-only timing of AMPC and JRDAP under CBM and NCBM transmit streams.

use std::fmt;

use dfrc_core::{ampc_map, estimate_prior, jrdap_map, spc_mtd, Method};

use crate::config::{SceneConfig, TransmitMode};
use crate::error::Result;
use crate::pipeline::{Design, Setup};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkEntry {
    pub mode: TransmitMode,
    pub method: Method,
    pub cells: usize,
    pub repeats: usize,
    pub total_seconds: f64,
    pub seconds_per_cell: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub config_hash: String,
    pub seed: u64,
    /// `M, N, P, L, Q, N_c` of the timed configuration.
    pub descriptor: String,
    pub entries: Vec<BenchmarkEntry>,
}

impl BenchmarkReport {
    pub fn seconds_per_cell(&self, mode: TransmitMode, method: Method) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.mode == mode && e.method == method)
            .map(|e| e.seconds_per_cell)
    }
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# config_hash: {}", self.config_hash)?;
        writeln!(f, "# seed: {}", self.seed)?;
        writeln!(f, "# {}", self.descriptor)?;
        writeln!(f, "mode,method,cells,repeats,total_seconds,seconds_per_cell")?;
        for e in &self.entries {
            writeln!(
                f,
                "{},{},{},{},{:.6e},{:.6e}",
                e.mode.name(),
                e.method,
                e.cells,
                e.repeats,
                e.total_seconds,
                e.seconds_per_cell
            )?;
        }
        Ok(())
    }
}

/// Times full AMPC and JRDAP maps `processing.bench_repeats` times under
/// each transmit mode. Synthesis and prior estimation are excluded.
pub fn run_benchmark(config: &SceneConfig, allow_large_ampc: bool) -> Result<BenchmarkReport> {
    let design = Design::new(config)?;
    let repeats = config.processing.bench_repeats;
    let mut entries = Vec::new();
    for mode in [TransmitMode::Cbm, TransmitMode::Ncbm] {
        let mut c = config.clone();
        c.comm.mode = mode;
        c.comm.symbols = None;
        let setup = Setup::from_design(&c, design.clone(), config.seed)?;
        setup.check_ampc_size(allow_large_ampc)?;
        let cube = setup.simulate()?;
        let spc = spc_mtd(&cube, setup.waveform.samples(), &setup.grid)?;
        let prior = estimate_prior(&spc, c.noise_power())?;
        let options = setup.jrdap_options();
        let cells = spc.num_cells();
        for method in [Method::Ampc, Method::Jrdap] {
            let mut total = 0.0;
            for _ in 0..repeats {
                let map = match method {
                    Method::Ampc => ampc_map(&setup.model, &cube, &prior)?,
                    _ => jrdap_map(&setup.model, &cube, &prior, &options)?,
                };
                total += map.metadata.elapsed.as_secs_f64();
            }
            entries.push(BenchmarkEntry {
                mode,
                method,
                cells,
                repeats,
                total_seconds: total,
                seconds_per_cell: total / (repeats * cells) as f64,
            });
        }
    }
    Ok(BenchmarkReport {
        config_hash: config.hash(),
        seed: config.seed,
        descriptor: format!(
            "M={} N={} P={} L={} Q={} Nc={}",
            config.array.elements,
            config.waveform.samples,
            config.cpi.pulses,
            config.cpi.range_cells,
            config.cpi.doppler_cells,
            config.clutter.patches
        ),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    #[test]
    fn single_cell_time_is_total_time() {
        let mut c = SceneConfig::validation_default();
        c.cpi.range_cells = 1;
        c.cpi.doppler_cells = 1;
        c.targets.clear();
        c.processing.bench_repeats = 1;
        let report = run_benchmark(&c, false).unwrap();
        assert_eq!(report.entries.len(), 4);
        for e in &report.entries {
            assert_eq!(e.cells, 1);
            assert!(e.total_seconds > 0.0);
            assert_eq!(e.seconds_per_cell, e.total_seconds);
        }
    }

    #[test]
    fn refuses_large_ampc() {
        let c = SceneConfig::default();
        assert!(matches!(run_benchmark(&c, false), Err(CliError::Guard(_))));
    }
}
