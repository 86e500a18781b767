//! Uniform linear array geometry, beampatterns and the CBM weight dictionary.
//!
//! Each dictionary entry solves the minimax sidelobe problem
//!
//! ```text
//! minimize    max_{theta in sidelobe grid} |w^H a(theta)|
//! subject to  w^H a(theta_t) = 1
//!             w^H a(theta_c) = delta_k * exp(j * phi_k)
//! ```
//!
//! The equality constraints are eliminated exactly (`w = w0 + B z` with `B` an
//! orthonormal basis of their null space), so they hold to rounding error no
//! matter how far the sidelobe solver gets. The remaining unconstrained
//! complex Chebyshev problem in `z` is solved by [`minimax`].

mod io;
pub mod minimax;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, ZERO};

pub use io::{read_dictionary, write_dictionary};
pub use minimax::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
}

impl ArrayGeometry {
    /// `spacing` is the element spacing in wavelengths (d / lambda).
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::InvalidParameter(format!(
                "array needs at least 2 elements, got {num_elements}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing,
        })
    }

    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// `a(theta)` with element `m` equal to `exp(-j 2 pi m (d/lambda) sin theta)`.
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<CVec> {
    if !(-90.0..=90.0).contains(&theta_deg) {
        return Err(Error::AngleOutOfRange(theta_deg));
    }
    let phase = -2.0 * std::f64::consts::PI * geometry.spacing * theta_deg.to_radians().sin();
    Ok(CVec::from_fn(geometry.num_elements, |m, _| {
        Complex64::from_polar(1.0, phase * m as f64)
    }))
}

/// `w^H a(theta_i)` for every angle in `thetas_deg`.
pub fn beampattern(
    weights: &CVec,
    geometry: &ArrayGeometry,
    thetas_deg: &[f64],
) -> Result<Vec<Complex64>> {
    if weights.len() != geometry.num_elements {
        return Err(Error::DimensionMismatch {
            what: "beam weights",
            expected: geometry.num_elements,
            got: weights.len(),
        });
    }
    thetas_deg
        .iter()
        .map(|&t| Ok(weights.dotc(&steering_vector(geometry, t)?)))
        .collect()
}

/// Angle grid covering every interval `[lo, hi]` at `step` degrees,
/// endpoints included.
pub fn sidelobe_grid(region: &[(f64, f64)], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sidelobe grid step must be positive, got {step}"
        )));
    }
    let mut grid = Vec::new();
    for &(lo, hi) in region {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "sidelobe interval [{lo}, {hi}] is reversed"
            )));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        grid.extend((0..=count).map(|i| lo + i as f64 * step));
        if hi - (lo + count as f64 * step) > 1e-9 {
            grid.push(hi);
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamDesignSpec {
    pub target_angle_deg: f64,
    pub comm_angle_deg: f64,
    /// Sidelobe region as closed angle intervals in degrees.
    pub sidelobe_region: Vec<(f64, f64)>,
    /// Linear amplitudes toward the communication receiver, each in (0, 1).
    pub sll_levels: Vec<f64>,
    /// Phases toward the communication receiver, radians.
    pub phases: Vec<f64>,
}

impl BeamDesignSpec {
    pub fn num_symbols(&self) -> usize {
        self.sll_levels.len() * self.phases.len()
    }

    /// `(delta_k, phi_k)` pairs, level-major: `k = level_index * Q1 + phase_index`.
    pub fn symbol_table(&self) -> Vec<(f64, f64)> {
        self.sll_levels
            .iter()
            .flat_map(|&d| self.phases.iter().map(move |&p| (d, p)))
            .collect()
    }

    fn in_region(&self, theta: f64) -> bool {
        self.sidelobe_region
            .iter()
            .any(|&(lo, hi)| theta >= lo && theta <= hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sll_levels.is_empty() || self.phases.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one sidelobe level and one phase".into(),
            ));
        }
        if let Some(d) = self.sll_levels.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "communication sidelobe level {d} is not in (0, 1)"
            )));
        }
        if self.in_region(self.target_angle_deg) {
            return Err(Error::InvalidParameter(format!(
                "target angle {} deg lies inside the sidelobe region",
                self.target_angle_deg
            )));
        }
        if !self.in_region(self.comm_angle_deg) {
            return Err(Error::InvalidParameter(format!(
                "communication angle {} deg lies outside the sidelobe region",
                self.comm_angle_deg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    /// Linear amplitude toward the communication receiver.
    pub sll: f64,
    pub phase: f64,
    pub weights: CVec,
    /// Peak sidelobe level over the design grid, linear amplitude.
    pub achieved_psl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamDictionary {
    entries: Vec<DictionaryEntry>,
}

impl BeamDictionary {
    pub fn new(entries: Vec<DictionaryEntry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidParameter("empty beam dictionary".into()));
        };
        let m = first.weights.len();
        if let Some(bad) = entries.iter().find(|e| e.weights.len() != m) {
            return Err(Error::DimensionMismatch {
                what: "dictionary weight vector",
                expected: m,
                got: bad.weights.len(),
            });
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.entries[0].weights.len()
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn weights(&self, k: usize) -> &CVec {
        &self.entries[k].weights
    }

    pub fn achieved_psl(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.achieved_psl).collect()
    }
}

/// Result of a single constrained minimax design.
#[derive(Debug, Clone)]
pub struct BeamDesign {
    pub weights: CVec,
    /// Peak `|w^H a(theta)|` over the sidelobe grid (0 for an empty grid).
    pub psl: f64,
    /// Best PSL after each outer solver iteration.
    pub psl_trace: Vec<f64>,
}

/// Minimizes the peak sidelobe over `grid_deg` subject to
/// `w^H a(theta) = value` for every `(theta, value)` in `equalities`.
///
/// With an empty grid the minimum-norm feasible vector is returned.
pub fn design_weights(
    geometry: &ArrayGeometry,
    equalities: &[(f64, Complex64)],
    grid_deg: &[f64],
    options: &SolverOptions,
) -> Result<BeamDesign> {
    let m = geometry.num_elements;
    if equalities.is_empty() || equalities.len() >= m {
        return Err(Error::InvalidParameter(format!(
            "need between 1 and {} equality constraints, got {}",
            m - 1,
            equalities.len()
        )));
    }
    let constraint_vectors = equalities
        .iter()
        .map(|&(t, _)| steering_vector(geometry, t))
        .collect::<Result<Vec<_>>>()?;
    let a = CMat::from_columns(&constraint_vectors);
    // a^H w = conj(value)
    let rhs = CVec::from_iterator(equalities.len(), equalities.iter().map(|&(_, v)| v.conj()));

    let gram = a.adjoint() * &a;
    let gram_scale = gram.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let det_floor = 1e-8 * gram_scale.powi(equalities.len() as i32);
    if gram.clone().determinant().norm() <= det_floor {
        return Err(Error::Infeasible(
            "constraint steering vectors are linearly dependent (coincident or aliased angles)"
                .into(),
        ));
    }
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Infeasible("singular constraint Gram matrix".into()))?;
    let w0 = &a * coeffs;

    if grid_deg.is_empty() {
        return Ok(BeamDesign {
            weights: w0,
            psl: 0.0,
            psl_trace: Vec::new(),
        });
    }

    let basis = null_space_basis(&a);
    // Pattern at each grid angle: a_i^H w = a_i^H w0 + (a_i^H B) z.
    let mut offsets = Vec::with_capacity(grid_deg.len());
    let mut rows = CMat::zeros(grid_deg.len(), basis.ncols());
    for (i, &t) in grid_deg.iter().enumerate() {
        let ai = steering_vector(geometry, t)?;
        offsets.push(ai.dotc(&w0));
        let row = ai.adjoint() * &basis;
        rows.set_row(i, &row);
    }

    let solution = minimax::solve(&offsets, &rows, options).map_err(|e| match e {
        minimax::SolveFailure::NotConverged { iterations, best } => {
            let w = &w0 + &basis * &best.z;
            Error::NotConverged {
                iterations,
                best_psl_db: 20.0 * best.peak.log10(),
                best: w.iter().cloned().collect(),
            }
        }
    })?;
    let weights = &w0 + &basis * &solution.z;
    let psl = beampattern(&weights, geometry, grid_deg)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(BeamDesign {
        weights,
        psl,
        psl_trace: solution.peak_trace,
    })
}

/// Orthonormal basis of the orthogonal complement of the columns of `a`.
fn null_space_basis(a: &CMat) -> CMat {
    let m = a.nrows();
    let mut kept: Vec<CVec> = Vec::with_capacity(m);
    let mut complement: Vec<CVec> = Vec::with_capacity(m - a.ncols());
    let candidates = a
        .column_iter()
        .map(|c| c.into_owned())
        .chain((0..m).map(|i| {
            let mut e = CVec::zeros(m);
            e[i] = Complex64::new(1.0, 0.0);
            e
        }));
    for (idx, mut v) in candidates.enumerate() {
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= Complex64::new(norm, 0.0);
            if idx >= a.ncols() {
                complement.push(v.clone());
            }
            kept.push(v);
        }
        if kept.len() == m {
            break;
        }
    }
    CMat::from_columns(&complement)
}

/// Designs one weight vector per `(delta_k, phi_k)` symbol of `spec`.
pub fn design_cbm_dictionary(
    spec: &BeamDesignSpec,
    geometry: &ArrayGeometry,
    sidelobe_grid_step: f64,
) -> Result<BeamDictionary> {
    design_cbm_dictionary_with(spec, geometry, sidelobe_grid_step, &SolverOptions::default())
        .map(|(dict, _)| dict)
}

/// As [`design_cbm_dictionary`], also returning each entry's PSL trace.
pub fn design_cbm_dictionary_with(
    spec: &BeamDesignSpec,
    geometry: &ArrayGeometry,
    sidelobe_grid_step: f64,
    options: &SolverOptions,
) -> Result<(BeamDictionary, Vec<Vec<f64>>)> {
    spec.validate()?;
    let grid = sidelobe_grid(&spec.sidelobe_region, sidelobe_grid_step)?;
    let mut entries = Vec::with_capacity(spec.num_symbols());
    let mut traces = Vec::with_capacity(spec.num_symbols());
    for (sll, phase) in spec.symbol_table() {
        let equalities = [
            (spec.target_angle_deg, Complex64::new(1.0, 0.0)),
            (spec.comm_angle_deg, Complex64::from_polar(sll, phase)),
        ];
        let design = design_weights(geometry, &equalities, &grid, options)?;
        entries.push(DictionaryEntry {
            sll,
            phase,
            weights: design.weights,
            achieved_psl: design.psl,
        });
        traces.push(design.psl_trace);
    }
    Ok((BeamDictionary::new(entries)?, traces))
}

/// Uniform i.i.d. symbols in `[0, k)` from a seeded generator.
pub fn random_symbols(k: usize, num_pulses: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_pulses).map(|_| rng.random_range(0..k)).collect()
}

/// Per-pulse transmit weights `W = [w_1 .. w_P]` (M x P).
///
/// Column `p` is the dictionary entry indexed by `symbols[p]`. When no stream
/// is given, `num_pulses` symbols are drawn uniformly from `seed`. Returns the
/// weight matrix and the symbols actually used.
pub fn select_pulse_weights(
    dict: &BeamDictionary,
    symbols: Option<&[usize]>,
    num_pulses: usize,
    seed: u64,
) -> Result<(CMat, Vec<usize>)> {
    let symbols = match symbols {
        Some(s) => s.to_vec(),
        None => random_symbols(dict.len(), num_pulses, seed),
    };
    let mut w = CMat::from_element(dict.num_elements(), symbols.len(), ZERO);
    for (p, &k) in symbols.iter().enumerate() {
        if k >= dict.len() {
            return Err(Error::SymbolOutOfRange {
                symbol: k,
                pulse: p,
                size: dict.len(),
            });
        }
        w.set_column(p, dict.weights(k));
    }
    Ok((w, symbols))
}
