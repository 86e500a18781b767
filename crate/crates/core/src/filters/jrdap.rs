//! Joint range and Doppler adaptive processing.
//!
//! The MMSE filter is restricted to `h = v^* (x) u`, so that
//! `h^H y(ell) = u^H Y(ell) v`. For fixed `u` the cost is a `P`-dimensional
//! MMSE problem in `v`; for fixed `v` it is an `N`-dimensional one in `u`:
//!
//! ```text
//! v = (R~_t + R~_c + R~_n)^{-1} rho (s^H u) d^*
//! u~ = (R-_t + R-_c + R-_n)^{-1} rho (d^T v) s,   u = u~ / ||u~||
//! ```
//!
//! Normalizing `u` moves the scale `||u~||` into `v`, which leaves the
//! filter `h` (and therefore the cost) unchanged. Each half-step is an exact
//! minimization, so the cost is nonincreasing.

use std::time::Instant;

use num_complex::Complex64;

use super::ampc::check_cube;
use super::covariance::{FilterModel, RangeAggregates};
use super::{Method, RangeDopplerMap};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, CVec, HermitianSolver, ZERO};
use crate::scene::DataCube;
use crate::waveform::PowerPrior;

#[derive(Debug, Clone, PartialEq)]
pub struct JrdapOptions {
    /// Stop once `||u^i - u^{i-1}|| <= tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Unit-norm starting range filter; defaults to `s / ||s||`.
    pub initial_u: Option<CVec>,
}

impl Default for JrdapOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
            initial_u: None,
        }
    }
}

/// Converged factors of one cell together with per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct JrdapFactors {
    pub u: CVec,
    pub v: CVec,
    pub iterations_used: usize,
    /// MMSE cost at `(u^i, v^i)`.
    pub cost_trace: Vec<f64>,
    /// MMSE cost at `(u^{i-1}, v^i)`.
    pub half_step_trace: Vec<f64>,
    /// `||u^i - u^{i-1}||`.
    pub step_norms: Vec<f64>,
    /// `x^i = (u^i)^H Y v^i`.
    pub estimates: Vec<Complex64>,
    pub converged: bool,
}

impl JrdapFactors {
    /// The equivalent `NP` filter `v^* (x) u`.
    pub fn filter(&self) -> CVec {
        kron(&self.v.map(|z| z.conj()), &self.u)
    }

    pub fn estimate(&self) -> Complex64 {
        self.estimates.last().copied().unwrap_or(ZERO)
    }

    /// First iteration whose step norm is within `eta`.
    pub fn iterations_to(&self, eta: f64) -> Option<usize> {
        self.step_norms.iter().position(|&s| s <= eta).map(|i| i + 1)
    }
}

fn initial_u(model: &FilterModel, options: &JrdapOptions) -> Result<CVec> {
    match &options.initial_u {
        Some(u) => {
            if u.len() != model.num_samples() {
                return Err(Error::DimensionMismatch {
                    what: "initial range filter",
                    expected: model.num_samples(),
                    got: u.len(),
                });
            }
            if (u.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "initial range filter must have unit norm, got {}",
                    u.norm()
                )));
            }
            Ok(u.clone())
        }
        None => Ok(model.waveform().normalize()),
    }
}

/// `u^H Y v`.
fn bilinear(y: &CMat, u: &CVec, v: &CVec) -> Complex64 {
    u.dotc(&(y * v))
}

/// `R~_t + R~_c + R~_n` for the current `u`, with `powers = |s_n^H u|^2`.
fn range_step_matrix(model: &FilterModel, agg: &RangeAggregates, u: &CVec, powers: &[f64]) -> CMat {
    let p = model.pulses();
    let mut lagged = vec![ZERO; 2 * p - 1];
    for (row, w) in agg.coefficient_rows().zip(powers) {
        if *w == 0.0 {
            continue;
        }
        for (acc, c) in lagged.iter_mut().zip(row) {
            *acc += c * *w;
        }
    }
    let quad = model.clutter_power() * powers.iter().sum::<f64>();
    let gram = model.clutter_gram();
    let noise = model.noise_power() * u.norm_squared();
    CMat::from_fn(p, p, |a, b| {
        let mut z = lagged[b + p - 1 - a];
        if model.has_clutter() {
            z += gram[(b, a)] * quad;
        }
        if a == b {
            z.re += noise;
            z.im = 0.0;
        }
        z
    })
}

/// `R-_t + R-_c + R-_n` for the current `v`.
fn doppler_step_matrix(model: &FilterModel, agg: &RangeAggregates, v: &CVec) -> CMat {
    let clutter = model.clutter_power() * model.clutter_beam_power(v);
    let weights: Vec<f64> = model
        .doppler_shift_weights(agg, v)
        .into_iter()
        .map(|g| g + clutter)
        .collect();
    let mut m = model.family().weighted_outer_sum(&weights);
    let noise = model.noise_power() * v.norm_squared();
    for i in 0..m.nrows() {
        m[(i, i)].re += noise;
    }
    m
}

/// `rho - 2 Re(r^H x) + x^H A x`, evaluated at the computed `x` rather than
/// through the optimality shortcut `rho - Re(r^H x)`, whose rounding error
/// grows with the condition number of `A`.
fn quadratic_cost(rho: f64, a: &CMat, r: &CVec, x: &CVec) -> f64 {
    rho - 2.0 * r.dotc(x).re + x.dotc(&(a * x)).re
}

/// Alternating minimization for one cell, with `Y(ell)` given.
///
/// With `diagnostics` off, the cost traces are left empty and only the final
/// estimate is formed; the iterates are identical either way.
pub(crate) fn solve_cell(
    model: &FilterModel,
    agg: &RangeAggregates,
    q: usize,
    y: &CMat,
    options: &JrdapOptions,
    diagnostics: bool,
) -> Result<JrdapFactors> {
    let rho = agg.rho(0, q);
    let mut u = initial_u(model, options)?;
    let p = model.pulses();
    let d = model.grid().steering(q, p);
    let s = model.waveform();
    let mut out = JrdapFactors {
        u: u.clone(),
        v: CVec::zeros(p),
        iterations_used: 0,
        cost_trace: Vec::new(),
        half_step_trace: Vec::new(),
        step_norms: Vec::new(),
        estimates: Vec::new(),
        converged: false,
    };
    if rho == 0.0 {
        out.iterations_used = 1;
        out.cost_trace.push(0.0);
        out.half_step_trace.push(0.0);
        out.step_norms.push(0.0);
        out.estimates.push(ZERO);
        out.converged = true;
        return Ok(out);
    }

    let mut v = CVec::zeros(p);
    for iteration in 1..=options.max_iterations.max(1) {
        // v-step
        let corr = model.family().correlations(&u);
        let powers: Vec<f64> = corr.iter().map(|z| z.norm_sqr()).collect();
        let s_h_u = corr[model.num_samples() - 1];
        let r_v = d.map(|z| z.conj() * s_h_u * rho);
        let a_v = range_step_matrix(model, agg, &u, &powers);
        v = HermitianSolver::from_ref(&a_v)?.solve(&r_v);
        if diagnostics {
            out.half_step_trace.push(quadratic_cost(rho, &a_v, &r_v, &v));
        }

        // u-step
        let beta = d.transpose() * &v;
        let r_u = s * (beta[0] * rho);
        let a_u = doppler_step_matrix(model, agg, &v);
        let u_tilde = HermitianSolver::from_ref(&a_u)?.solve(&r_u);
        if diagnostics {
            out.cost_trace.push(quadratic_cost(rho, &a_u, &r_u, &u_tilde));
        }
        let scale = u_tilde.norm();
        out.iterations_used = iteration;
        if scale == 0.0 {
            // no cross-correlation left: the zero filter is optimal
            out.step_norms.push(0.0);
            out.estimates.push(ZERO);
            out.v = CVec::zeros(p);
            out.converged = true;
            return Ok(out);
        }
        let u_next = u_tilde / Complex64::new(scale, 0.0);
        v *= Complex64::new(scale, 0.0);
        let step = (&u_next - &u).norm();
        u = u_next;
        out.step_norms.push(step);
        if diagnostics {
            out.estimates.push(bilinear(y, &u, &v));
        }
        if step <= options.tolerance {
            out.converged = true;
            break;
        }
    }
    if !diagnostics {
        out.estimates.push(bilinear(y, &u, &v));
    }
    out.u = u;
    out.v = v;
    Ok(out)
}

/// JRDAP estimate and factors for a single cell.
pub fn jrdap_cell(
    model: &FilterModel,
    ell: usize,
    q: usize,
    cube: &DataCube,
    prior: &PowerPrior,
    options: &JrdapOptions,
) -> Result<(Complex64, JrdapFactors)> {
    check_cube(model, cube, prior)?;
    let agg = model.range_aggregates(ell, prior)?;
    let factors =
        solve_cell(model, &agg, q, &cube.matrix(ell), options, true).map_err(|e| e.at_cell(ell, q))?;
    Ok((factors.estimate(), factors))
}

/// JRDAP over every cell, also returning the per-cell factors
/// (row-major, `(ell - 1) * Q + q`).
pub fn jrdap_map_with_factors(
    model: &FilterModel,
    cube: &DataCube,
    prior: &PowerPrior,
    options: &JrdapOptions,
) -> Result<(RangeDopplerMap, Vec<JrdapFactors>)> {
    check_cube(model, cube, prior)?;
    let start = Instant::now();
    let (cells, q_len) = (cube.range_cells(), model.grid().len());
    let mut estimates = Vec::with_capacity(cells * q_len);
    let mut factors = Vec::with_capacity(cells * q_len);
    for ell in 1..=cells {
        let agg = model.range_aggregates(ell, prior)?;
        let y = cube.matrix(ell);
        for q in 0..q_len {
            let f = solve_cell(model, &agg, q, &y, options, true).map_err(|e| e.at_cell(ell, q))?;
            estimates.push(f.estimate());
            factors.push(f);
        }
    }
    let elapsed = start.elapsed();
    let mut map = RangeDopplerMap::new(Method::Jrdap, cells, q_len, estimates)?;
    map.metadata.elapsed = elapsed;
    Ok((map, factors))
}

/// JRDAP over every cell of the window.
pub fn jrdap_map(
    model: &FilterModel,
    cube: &DataCube,
    prior: &PowerPrior,
    options: &JrdapOptions,
) -> Result<RangeDopplerMap> {
    check_cube(model, cube, prior)?;
    let start = Instant::now();
    let (cells, q_len) = (cube.range_cells(), model.grid().len());
    let mut estimates = Vec::with_capacity(cells * q_len);
    for ell in 1..=cells {
        let agg = model.range_aggregates(ell, prior)?;
        let y = cube.matrix(ell);
        for q in 0..q_len {
            let f = solve_cell(model, &agg, q, &y, options, false).map_err(|e| e.at_cell(ell, q))?;
            estimates.push(f.estimate());
        }
    }
    let mut map = RangeDopplerMap::new(Method::Jrdap, cells, q_len, estimates)?;
    map.metadata.elapsed = start.elapsed();
    Ok(map)
}
