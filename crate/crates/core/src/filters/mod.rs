//! Range-Doppler processors.
//!
//! Four estimators share the same second-order model of the received data
//! ([`FilterModel`]):
//!
//! - [`spc_mtd`]: per-pulse matched filtering followed by Doppler processing;
//! - [`jrdmf`]: the joint range-Doppler matched filter `(d (x) s)^H y`;
//! - [`ampc_map`]: the full `NP`-dimensional MMSE filter per cell;
//! - [`jrdap_map`]: the rank-one MMSE filter `h = v^* (x) u`, found by
//!   alternating between an `N`-dimensional range filter `u` and a
//!   `P`-dimensional Doppler filter `v`.
//!
//! All maps are scaled so that a unit-amplitude, perfectly aligned,
//! noise-free target yields `|x| = 1`.

mod ampc;
mod baseline;
mod cost;
mod covariance;
mod jrdap;
mod oracle;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use ampc::{ampc_cell, ampc_map, AmpcFilter};
pub use baseline::{estimate_prior, jrdmf, jrdmf_filter, spc_mtd, PRIOR_FLOOR};
pub use cost::CellCost;
pub use covariance::{FilterModel, RangeAggregates};
pub use jrdap::{jrdap_cell, jrdap_map, jrdap_map_with_factors, JrdapFactors, JrdapOptions};
pub use oracle::{mc_cost_oracle, mc_covariance_oracle, CovarianceComponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    SpcMtd,
    Jrdmf,
    Ampc,
    Jrdap,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SpcMtd, Method::Jrdmf, Method::Ampc, Method::Jrdap];

    pub fn name(self) -> &'static str {
        match self {
            Method::SpcMtd => "spc_mtd",
            Method::Jrdmf => "jrdmf",
            Method::Ampc => "ampc",
            Method::Jrdap => "jrdap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method '{s}' (expected spc_mtd, jrdmf, ampc or jrdap)"
                ))
            })
    }
}

/// Provenance and timing attached to a map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapMetadata {
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    /// Wall time of the filtering loop alone.
    pub elapsed: Duration,
}

/// `L x Q` complex estimates, indexed by 1-based range cell and 0-based
/// Doppler cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    method: Method,
    range_cells: usize,
    doppler_cells: usize,
    estimates: Vec<Complex64>,
    pub metadata: MapMetadata,
}

impl RangeDopplerMap {
    pub fn new(
        method: Method,
        range_cells: usize,
        doppler_cells: usize,
        estimates: Vec<Complex64>,
    ) -> Result<Self> {
        if estimates.len() != range_cells * doppler_cells {
            return Err(Error::DimensionMismatch {
                what: "range-Doppler map",
                expected: range_cells * doppler_cells,
                got: estimates.len(),
            });
        }
        if let Some(i) = estimates.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "non-finite estimate at range cell {}, Doppler cell {}",
                i / doppler_cells + 1,
                i % doppler_cells
            )));
        }
        Ok(Self {
            method,
            range_cells,
            doppler_cells,
            estimates,
            metadata: MapMetadata::default(),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn range_cells(&self) -> usize {
        self.range_cells
    }

    pub fn doppler_cells(&self) -> usize {
        self.doppler_cells
    }

    pub fn num_cells(&self) -> usize {
        self.estimates.len()
    }

    /// Row-major estimates, `(ell - 1) * Q + q`.
    pub fn estimates(&self) -> &[Complex64] {
        &self.estimates
    }

    pub fn get(&self, ell: usize, q: usize) -> Complex64 {
        assert!((1..=self.range_cells).contains(&ell) && q < self.doppler_cells);
        self.estimates[(ell - 1) * self.doppler_cells + q]
    }

    /// `|x(ell, q)|^2`, row-major.
    pub fn powers(&self) -> Vec<f64> {
        self.estimates.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `20 log10 |x(ell, q)|`, row-major.
    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.estimates.iter().map(|z| 20.0 * z.norm().log10()).collect()
    }

    pub fn seconds_per_cell(&self) -> f64 {
        self.metadata.elapsed.as_secs_f64() / self.num_cells() as f64
    }

    /// Text export: a `#` comment header, then `L` rows of `Q`
    /// comma-separated `20 log10 |x|` values.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# method: {}", self.method)?;
        if let Some(hash) = &self.metadata.config_hash {
            writeln!(out, "# config_hash: {hash}")?;
        }
        if let Some(seed) = self.metadata.seed {
            writeln!(out, "# seed: {seed}")?;
        }
        writeln!(
            out,
            "# {} range cells (rows, 1..={}) x {} Doppler cells (columns, 0..{}), 20log10|x|",
            self.range_cells, self.range_cells, self.doppler_cells, self.doppler_cells
        )?;
        for row in self.magnitudes_db().chunks(self.doppler_cells) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}
