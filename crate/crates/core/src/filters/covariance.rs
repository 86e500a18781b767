//! Second-order model of the stacked data `y(ell)` and its projections onto
//! a fixed range filter `u` or Doppler filter `v`.
//!
//! With the prior `rho`, the target covariance is block-Toeplitz:
//!
//! ```text
//! R_t(ell)[l1, l2] = B_{l1 - l2},   B_d = sum_q Phi(ell, q) e^{j 2 pi d psi_q}
//!                                       = sum_n c_{n,d} s_n s_n^H,
//! c_{n,d} = sum_q rho(ell + n, q) e^{j 2 pi d psi_q}.
//! ```
//!
//! Storing the `(2N - 1) x (2P - 1)` coefficients `c_{n,d}` per range cell is
//! equivalent to storing the `2P - 1` distinct blocks `B_d`, and makes the
//! projections `u^H B_d u = sum_n c_{n,d} |s_n^H u|^2` cheap. Clutter blocks
//! are `K[l1, l2] Upsilon` with `K[l1, l2] = sum_i g_{i,l1} g_{i,l2}^*`.

use crate::array_beam::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, kron, CMat, CVec, ZERO};
use crate::scene::{clutter_modulation_coefficients, ClutterField};
use crate::waveform::{DopplerGrid, PowerPrior, ShiftFamily};
use num_complex::Complex64;

/// Everything the adaptive filters know about the scene besides the prior.
#[derive(Debug, Clone)]
pub struct FilterModel {
    family: ShiftFamily,
    samples: CVec,
    grid: DopplerGrid,
    pulses: usize,
    modulation: CMat,
    clutter_gram: CMat,
    clutter_power: f64,
    noise_power: f64,
    upsilon: CMat,
    // e^{j 2 pi d psi_q}, row d + P - 1, column q
    lag_phases: Vec<Complex64>,
    // row q is d(psi_q)^T
    doppler_steering: CMat,
}

impl FilterModel {
    /// `modulation` is the `N_c x P` matrix of `w_p^H a(theta_i)`.
    pub fn new(
        waveform: &CVec,
        grid: DopplerGrid,
        modulation: CMat,
        clutter_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let pulses = modulation.ncols();
        if waveform.len() < 2 {
            return Err(Error::InvalidParameter("waveform needs N >= 2 samples".into()));
        }
        if pulses == 0 {
            return Err(Error::InvalidParameter("need at least one pulse".into()));
        }
        if !(clutter_power >= 0.0 && noise_power >= 0.0) {
            return Err(Error::InvalidParameter(
                "clutter and noise powers must be nonnegative".into(),
            ));
        }
        let family = ShiftFamily::new(waveform);
        let upsilon = family.weighted_outer_sum(&vec![clutter_power; family.num_shifts()]);
        let clutter_gram = modulation.transpose() * modulation.map(|z| z.conj());
        let q_len = grid.len();
        let mut lag_phases = Vec::with_capacity((2 * pulses - 1) * q_len);
        for d in -(pulses as isize - 1)..pulses as isize {
            for q in 0..q_len {
                lag_phases.push(cis_cycles(d as f64 * grid.psi(q)));
            }
        }
        let doppler_steering = CMat::from_fn(q_len, pulses, |q, p| cis_cycles(p as f64 * grid.psi(q)));
        Ok(Self {
            family,
            samples: waveform.clone(),
            grid,
            pulses,
            modulation,
            clutter_gram,
            clutter_power,
            noise_power,
            upsilon,
            lag_phases,
            doppler_steering,
        })
    }

    /// Builds the model from the per-pulse transmit weights (`M x P`).
    pub fn from_transmit(
        waveform: &CVec,
        grid: DopplerGrid,
        weights: &CMat,
        geometry: &ArrayGeometry,
        clutter: &ClutterField,
        noise_power: f64,
    ) -> Result<Self> {
        let mut modulation = clutter_modulation_coefficients(weights, clutter, geometry)?;
        if clutter.is_empty() {
            modulation = CMat::zeros(0, weights.ncols());
        }
        Self::new(waveform, grid, modulation, clutter.patch_power, noise_power)
    }

    pub fn waveform(&self) -> &CVec {
        &self.samples
    }

    pub fn family(&self) -> &ShiftFamily {
        &self.family
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn grid(&self) -> &DopplerGrid {
        &self.grid
    }

    pub fn stacked_len(&self) -> usize {
        self.num_samples() * self.pulses
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn clutter_power(&self) -> f64 {
        self.clutter_power
    }

    /// `g_{i,p} = w_p^H a(theta_i)`.
    pub fn modulation(&self) -> &CMat {
        &self.modulation
    }

    /// `K[l1, l2] = sum_i g_{i,l1} g_{i,l2}^*`.
    pub fn clutter_gram(&self) -> &CMat {
        &self.clutter_gram
    }

    pub fn upsilon(&self) -> &CMat {
        &self.upsilon
    }

    pub fn has_clutter(&self) -> bool {
        self.clutter_power > 0.0 && self.modulation.nrows() > 0
    }

    /// `d(psi_q) (x) s`.
    pub fn space_time_steering(&self, q: usize) -> CVec {
        kron(&self.grid.steering(q, self.pulses), &self.samples)
    }

    /// Per-range-cell prior aggregates (the lag coefficients `c_{n,d}`).
    pub fn range_aggregates(&self, ell: usize, prior: &PowerPrior) -> Result<RangeAggregates> {
        if prior.doppler_cells() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                what: "prior Doppler cells",
                expected: self.grid.len(),
                got: prior.doppler_cells(),
            });
        }
        if !(1..=prior.range_cells()).contains(&ell) {
            return Err(Error::InvalidParameter(format!(
                "range cell {ell} outside 1..={}",
                prior.range_cells()
            )));
        }
        let n = self.num_samples() as isize;
        let q_len = self.grid.len();
        let lags = 2 * self.pulses - 1;
        let mut rho = Vec::with_capacity(self.family.num_shifts() * q_len);
        let mut coeffs = vec![ZERO; self.family.num_shifts() * lags];
        for (slot, shift) in (-(n - 1)..n).enumerate() {
            let row_start = rho.len();
            for q in 0..q_len {
                rho.push(prior.get(ell as isize + shift, q));
            }
            let row = &rho[row_start..];
            if row.iter().all(|&r| r == 0.0) {
                continue;
            }
            for lag in 0..lags {
                let phases = &self.lag_phases[lag * q_len..(lag + 1) * q_len];
                coeffs[slot * lags + lag] = row.iter().zip(phases).map(|(r, e)| e * *r).sum();
            }
        }
        Ok(RangeAggregates {
            ell,
            doppler_cells: q_len,
            pulses: self.pulses,
            rho,
            coeffs,
        })
    }

    /// `B_d = sum_q Phi(ell, q) e^{j 2 pi d psi_q}` for `|d| < P`.
    pub fn doppler_block(&self, agg: &RangeAggregates, lag: isize) -> CMat {
        self.family.weighted_outer_sum_complex(&agg.lag_coefficients(lag))
    }

    /// Target covariance `R_t(ell)` (`NP x NP`).
    pub fn assemble_rt(&self, agg: &RangeAggregates) -> CMat {
        let p = self.pulses as isize;
        let blocks: Vec<CMat> = (-(p - 1)..p).map(|d| self.doppler_block(agg, d)).collect();
        self.assemble_blocks(|l1, l2| blocks[(l1 as isize - l2 as isize + p - 1) as usize].clone())
    }

    /// Clutter covariance `R_c` (`NP x NP`), independent of the range cell.
    pub fn assemble_rc(&self) -> CMat {
        self.assemble_blocks(|l1, l2| &self.upsilon * self.clutter_gram[(l1, l2)])
    }

    /// `R_n = sigma_n^2 I`.
    pub fn noise_covariance(&self) -> CMat {
        CMat::from_diagonal_element(
            self.stacked_len(),
            self.stacked_len(),
            Complex64::new(self.noise_power, 0.0),
        )
    }

    /// `R_t(ell) + R_c + R_n`.
    pub fn covariance(&self, agg: &RangeAggregates) -> CMat {
        let mut r = self.assemble_rt(agg);
        if self.has_clutter() {
            r += self.assemble_rc();
        }
        for i in 0..r.nrows() {
            r[(i, i)].re += self.noise_power;
        }
        r
    }

    /// `E{y(ell) x^*(ell, q)} = rho(ell, q) (d(psi_q) (x) s)`.
    pub fn cross_correlation(&self, agg: &RangeAggregates, q: usize) -> CVec {
        self.space_time_steering(q) * Complex64::new(agg.rho(0, q), 0.0)
    }

    fn assemble_blocks(&self, block: impl Fn(usize, usize) -> CMat) -> CMat {
        let n = self.num_samples();
        let mut out = CMat::zeros(self.stacked_len(), self.stacked_len());
        for l1 in 0..self.pulses {
            for l2 in 0..self.pulses {
                out.view_mut((l1 * n, l2 * n), (n, n)).copy_from(&block(l1, l2));
            }
        }
        out
    }

    /// `R~_t[a, b] = u^H R_t[b, a] u` (`P x P`).
    pub fn range_projected_target(&self, agg: &RangeAggregates, u: &CVec) -> CMat {
        let powers = self.family.projection_powers(u);
        let p = self.pulses;
        let lagged: Vec<Complex64> = (-(p as isize - 1)..p as isize)
            .map(|d| {
                agg.lag_coefficients(d)
                    .iter()
                    .zip(&powers)
                    .map(|(c, w)| c * *w)
                    .sum()
            })
            .collect();
        CMat::from_fn(p, p, |a, b| lagged[b + p - 1 - a])
    }

    /// `R~_c[a, b] = K[b, a] u^H Upsilon u`.
    pub fn range_projected_clutter(&self, u: &CVec) -> CMat {
        let quad = self.clutter_power * self.family.projection_powers(u).iter().sum::<f64>();
        self.clutter_gram.transpose() * Complex64::new(quad, 0.0)
    }

    /// `R~_n = sigma_n^2 ||u||^2 I`.
    pub fn range_projected_noise(&self, u: &CVec) -> CMat {
        let p = self.pulses;
        CMat::from_diagonal_element(p, p, Complex64::new(self.noise_power * u.norm_squared(), 0.0))
    }

    /// `R-_t = sum_q |d(psi_q)^T v|^2 Phi(ell, q)` (`N x N`).
    pub fn doppler_projected_target(&self, agg: &RangeAggregates, v: &CVec) -> CMat {
        self.family.weighted_outer_sum(&self.doppler_shift_weights(agg, v))
    }

    /// `R-_c = sum_i |sum_p v_p g_{i,p}|^2 Upsilon`.
    pub fn doppler_projected_clutter(&self, v: &CVec) -> CMat {
        &self.upsilon * Complex64::new(self.clutter_beam_power(v), 0.0)
    }

    /// `R-_n = sigma_n^2 ||v||^2 I`.
    pub fn doppler_projected_noise(&self, v: &CVec) -> CMat {
        let n = self.num_samples();
        CMat::from_diagonal_element(n, n, Complex64::new(self.noise_power * v.norm_squared(), 0.0))
    }

    /// `|beta_q|^2 = |d(psi_q)^T v|^2` for every Doppler cell.
    pub(crate) fn doppler_responses(&self, v: &CVec) -> Vec<f64> {
        (&self.doppler_steering * v).iter().map(|b| b.norm_sqr()).collect()
    }

    /// `gamma_n = sum_q |beta_q|^2 rho(ell + n, q)`.
    pub(crate) fn doppler_shift_weights(&self, agg: &RangeAggregates, v: &CVec) -> Vec<f64> {
        let beta = self.doppler_responses(v);
        agg.rho
            .chunks(agg.doppler_cells)
            .map(|row| row.iter().zip(&beta).map(|(r, b)| r * b).sum())
            .collect()
    }

    /// `sum_i |sum_p v_p g_{i,p}|^2 = v^H K^T v`.
    pub(crate) fn clutter_beam_power(&self, v: &CVec) -> f64 {
        if !self.has_clutter() {
            return 0.0;
        }
        let k = &self.clutter_gram;
        let mut total = ZERO;
        for b in 0..self.pulses {
            let kv: Complex64 = (0..self.pulses).map(|a| k[(b, a)] * v[a].conj()).sum();
            total += kv * v[b];
        }
        total.re
    }
}

/// Prior-dependent quantities shared by all Doppler cells of one range cell.
#[derive(Debug, Clone)]
pub struct RangeAggregates {
    ell: usize,
    doppler_cells: usize,
    pulses: usize,
    // rho(ell + n, q), row n + N - 1
    rho: Vec<f64>,
    // c_{n,d}, row n + N - 1, column d + P - 1
    coeffs: Vec<Complex64>,
}

impl RangeAggregates {
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `rho(ell + shift, q)`.
    pub fn rho(&self, shift: isize, q: usize) -> f64 {
        let slots = self.rho.len() / self.doppler_cells;
        let slot = shift + (slots as isize - 1) / 2;
        self.rho[slot as usize * self.doppler_cells + q]
    }

    /// `c_{n,d}` for every shift `n`, at lag `d`.
    pub fn lag_coefficients(&self, lag: isize) -> Vec<Complex64> {
        let lags = 2 * self.pulses - 1;
        let col = (lag + self.pulses as isize - 1) as usize;
        assert!(col < lags, "lag {lag} outside +-{}", self.pulses - 1);
        self.coeffs.iter().skip(col).step_by(lags).cloned().collect()
    }

    pub(crate) fn coefficient_rows(&self) -> std::slice::Chunks<'_, Complex64> {
        self.coeffs.chunks(2 * self.pulses - 1)
    }
}
