//! Transmit waveform, its shift family and the range covariance builders.
//!
//! For a length-`N` pulse `s`, the shift `s_n` (`|n| < N`) is `s` delayed by
//! `n` samples inside an `N`-sample window, zero-filled:
//! `s_2 = [0, 0, s(0), .., s(N-3)]`, `s_-2 = [s(2), .., s(N-1), 0, 0]`.
//! Both per-cell range covariances are weighted sums of `s_n s_n^H`:
//!
//! ```text
//! Phi(l, q) = sum_n rho(n + l, q) s_n s_n^H
//! Upsilon   = sigma_c^2 sum_n s_n s_n^H
//! ```

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, CMat, CVec, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: CVec,
    pulse_width: f64,
    bandwidth: f64,
    start_frequency: f64,
}

impl Waveform {
    /// Wraps arbitrary samples (pulse parameters are informational only).
    pub fn from_samples(samples: CVec) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "waveform needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            pulse_width: f64::NAN,
            bandwidth: f64::NAN,
            start_frequency: f64::NAN,
        })
    }

    pub fn samples(&self) -> &CVec {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn pulse_width(&self) -> f64 {
        self.pulse_width
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn start_frequency(&self) -> f64 {
        self.start_frequency
    }

    /// `||s||^2`, the matched-filter gain of one pulse.
    pub fn energy(&self) -> f64 {
        self.samples.norm_squared()
    }

    /// One `re im` row per sample.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for z in self.samples.iter() {
            writeln!(out, "{:.16e} {:.16e}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// LFM pulse sampled at `t_i = i * tau / N`:
/// `s(i) = exp(j 2 pi (f0 t_i + B / (2 tau) t_i^2))`.
///
/// Phases are reduced modulo one cycle before evaluation, so a GHz start
/// frequency folds to baseband without precision loss.
pub fn lfm_waveform(n: usize, tau: f64, bandwidth: f64, f0: f64) -> Result<Waveform> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "waveform needs at least 2 samples, got {n}"
        )));
    }
    if !(tau > 0.0) || !(bandwidth >= 0.0) || !f0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid LFM parameters tau={tau}, B={bandwidth}, f0={f0}"
        )));
    }
    let rate = bandwidth / (2.0 * tau);
    let samples = CVec::from_fn(n, |i, _| {
        let t = i as f64 * tau / n as f64;
        let cycles = (f0 * t).rem_euclid(1.0) + (rate * t * t).rem_euclid(1.0);
        cis_cycles(cycles)
    });
    Ok(Waveform {
        samples,
        pulse_width: tau,
        bandwidth,
        start_frequency: f0,
    })
}

/// `s` shifted by `n` samples, zero-filled (see module docs).
pub fn shifted_waveform(s: &CVec, n: isize) -> CVec {
    let len = s.len() as isize;
    CVec::from_fn(s.len(), |i, _| {
        let src = i as isize - n;
        if (0..len).contains(&src) {
            s[src as usize]
        } else {
            ZERO
        }
    })
}

/// The `2N - 1` shifts of a pulse, with fast weighted outer-product sums.
///
/// Shift index `n` maps to slot `n + N - 1`.
#[derive(Debug, Clone)]
pub struct ShiftFamily {
    s: Vec<Complex64>,
}

impl ShiftFamily {
    pub fn new(s: &CVec) -> Self {
        Self {
            s: s.iter().cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn num_shifts(&self) -> usize {
        2 * self.s.len() - 1
    }

    pub fn shifts(&self) -> impl Iterator<Item = isize> {
        let n = self.s.len() as isize;
        -(n - 1)..n
    }

    pub fn samples(&self) -> CVec {
        CVec::from_column_slice(&self.s)
    }

    pub fn shifted(&self, n: isize) -> CVec {
        shifted_waveform(&self.samples(), n)
    }

    /// Row range `lo..hi` where `s_n` is nonzero.
    #[inline]
    fn support(&self, n: isize) -> (usize, usize) {
        let len = self.s.len() as isize;
        (n.max(0) as usize, (len + n.min(0)).max(0) as usize)
    }

    /// `sum_n weights[n + N - 1] * s_n s_n^H` for real weights (Hermitian result).
    pub fn weighted_outer_sum(&self, weights: &[f64]) -> CMat {
        assert_eq!(weights.len(), self.num_shifts());
        let len = self.s.len();
        let mut out = CMat::zeros(len, len);
        let data = out.as_mut_slice();
        for (slot, n) in self.shifts().enumerate() {
            let w = weights[slot];
            if w == 0.0 {
                continue;
            }
            let (lo, hi) = self.support(n);
            // s_n[i] = s[i - n] on lo..hi
            let src = &self.s[(lo as isize - n) as usize..(hi as isize - n) as usize];
            for j in lo..hi {
                let sj = src[j - lo].conj() * w;
                // lower triangle, i >= j
                let col = &mut data[j * len + j..j * len + hi];
                for (c, si) in col.iter_mut().zip(&src[j - lo..]) {
                    *c += si * sj;
                }
            }
        }
        for j in 0..len {
            for i in (j + 1)..len {
                let v = data[j * len + i];
                data[i * len + j] = v.conj();
            }
            let d = &mut data[j * len + j];
            *d = Complex64::new(d.re, 0.0);
        }
        out
    }

    /// `sum_n coeffs[n + N - 1] * s_n s_n^H` for complex coefficients.
    pub fn weighted_outer_sum_complex(&self, coeffs: &[Complex64]) -> CMat {
        assert_eq!(coeffs.len(), self.num_shifts());
        let len = self.s.len();
        let mut out = CMat::zeros(len, len);
        let data = out.as_mut_slice();
        for (slot, n) in self.shifts().enumerate() {
            let c = coeffs[slot];
            if c == ZERO {
                continue;
            }
            let (lo, hi) = self.support(n);
            let src = &self.s[(lo as isize - n) as usize..(hi as isize - n) as usize];
            for j in lo..hi {
                let sj = src[j - lo].conj() * c;
                let col = &mut data[j * len + lo..j * len + hi];
                for (out, si) in col.iter_mut().zip(src) {
                    *out += si * sj;
                }
            }
        }
        out
    }

    /// `s_n^H u` for every shift.
    pub fn correlations(&self, u: &CVec) -> Vec<Complex64> {
        self.shifts()
            .map(|n| {
                let (lo, hi) = self.support(n);
                let src = &self.s[(lo as isize - n) as usize..(hi as isize - n) as usize];
                src.iter()
                    .zip(&u.as_slice()[lo..hi])
                    .map(|(si, ui)| si.conj() * ui)
                    .sum()
            })
            .collect()
    }

    /// `|s_n^H u|^2` for every shift.
    pub fn projection_powers(&self, u: &CVec) -> Vec<f64> {
        self.correlations(u).iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Normalized Doppler grid `psi_q = -0.5 + q / Q`, `q = 0..Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DopplerGrid {
    cells: usize,
}

impl DopplerGrid {
    pub fn new(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("Doppler grid needs Q >= 1".into()));
        }
        Ok(Self { cells })
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn psi(&self, q: usize) -> f64 {
        -0.5 + q as f64 / self.cells as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.cells).map(|q| self.psi(q)).collect()
    }

    /// Temporal steering vector `d(psi_q) = [1, e^{j2 pi psi}, .., e^{j2 pi (P-1) psi}]`.
    pub fn steering(&self, q: usize, pulses: usize) -> CVec {
        doppler_steering(self, q, pulses)
    }
}

pub fn doppler_steering(grid: &DopplerGrid, q: usize, pulses: usize) -> CVec {
    assert!(q < grid.cells, "Doppler cell {q} outside grid of {}", grid.cells);
    let psi = grid.psi(q);
    CVec::from_fn(pulses, |p, _| cis_cycles(p as f64 * psi))
}

/// Power prior `rho(l, q)` over the processing window; zero outside `1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPrior {
    range_cells: usize,
    doppler_cells: usize,
    // row-major, (l - 1) * Q + q
    values: Vec<f64>,
}

impl PowerPrior {
    pub fn zeros(range_cells: usize, doppler_cells: usize) -> Self {
        Self {
            range_cells,
            doppler_cells,
            values: vec![0.0; range_cells * doppler_cells],
        }
    }

    pub fn from_values(range_cells: usize, doppler_cells: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != range_cells * doppler_cells {
            return Err(Error::DimensionMismatch {
                what: "power prior",
                expected: range_cells * doppler_cells,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "power prior entries must be nonnegative, found {v}"
            )));
        }
        Ok(Self {
            range_cells,
            doppler_cells,
            values,
        })
    }

    pub fn range_cells(&self) -> usize {
        self.range_cells
    }

    pub fn doppler_cells(&self) -> usize {
        self.doppler_cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `rho(ell, q)` for a 1-based range cell; zero outside the window.
    #[inline]
    pub fn get(&self, ell: isize, q: usize) -> f64 {
        if ell < 1 || ell > self.range_cells as isize {
            0.0
        } else {
            self.values[(ell as usize - 1) * self.doppler_cells + q]
        }
    }

    pub fn set(&mut self, ell: usize, q: usize, value: f64) {
        assert!(value >= 0.0);
        self.values[(ell - 1) * self.doppler_cells + q] = value;
    }

    /// `rho(n + ell, q)` for every shift `n` of a length-`n_samples` pulse.
    pub fn shift_weights(&self, ell: usize, q: usize, n_samples: usize) -> Vec<f64> {
        let n = n_samples as isize;
        (-(n - 1)..n).map(|k| self.get(ell as isize + k, q)).collect()
    }
}

/// `Phi(ell, q) = sum_n rho(n + ell, q) s_n s_n^H`.
pub fn build_phi(ell: usize, q: usize, prior: &PowerPrior, s: &CVec) -> CMat {
    ShiftFamily::new(s).weighted_outer_sum(&prior.shift_weights(ell, q, s.len()))
}

/// `Upsilon = sigma_c^2 sum_n s_n s_n^H`.
pub fn build_upsilon(s: &CVec, clutter_power: f64) -> CMat {
    let family = ShiftFamily::new(s);
    family.weighted_outer_sum(&vec![clutter_power; family.num_shifts()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, min_eigenvalue, trace_re};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn lfm_is_unit_modulus() {
        let w = lfm_waveform(32, 4e-6, 4e6, 1e9).unwrap();
        assert_eq!(w.len(), 32);
        assert!(w.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert!((w.samples().dotc(w.samples()).re - 32.0).abs() < 1e-12);
    }

    #[test]
    fn lfm_without_chirp_is_a_pure_tone() {
        // f0 = 1 MHz, t_i = i * 0.5 us -> half a cycle per sample
        let w = lfm_waveform(8, 4e-6, 0.0, 1e6).unwrap();
        for (i, z) in w.samples().iter().enumerate() {
            let expect = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn lfm_rejects_bad_parameters() {
        assert!(lfm_waveform(1, 4e-6, 4e6, 0.0).is_err());
        assert!(lfm_waveform(8, 0.0, 4e6, 0.0).is_err());
        assert!(lfm_waveform(8, 4e-6, -1.0, 0.0).is_err());
    }

    #[test]
    fn shift_examples() {
        let s = CVec::from_fn(5, |i, _| Complex64::new(i as f64 + 1.0, 0.0));
        assert_eq!(shifted_waveform(&s, 0), s);
        let re = |v: CVec| v.iter().map(|z| z.re).collect::<Vec<_>>();
        assert_eq!(re(shifted_waveform(&s, 2)), vec![0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(re(shifted_waveform(&s, -2)), vec![3.0, 4.0, 5.0, 0.0, 0.0]);
        assert_eq!(re(shifted_waveform(&s, 5)), vec![0.0; 5]);
        assert_eq!(re(shifted_waveform(&s, -7)), vec![0.0; 5]);
    }

    #[test]
    fn doppler_steering_examples() {
        let grid = DopplerGrid::new(4).unwrap();
        assert_eq!(grid.values(), vec![-0.5, -0.25, 0.0, 0.25]);
        let d0 = grid.steering(2, 5);
        assert!(d0.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let dh = grid.steering(0, 2);
        assert!((dh[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        for q in 0..4 {
            let d = grid.steering(q, 7);
            assert!(d.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
            assert!((d.norm_squared() - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_edge_cases() {
        let s = lfm_waveform(6, 4e-6, 4e6, 0.0).unwrap().samples().clone();
        let mut prior = PowerPrior::zeros(10, 4);
        assert_eq!(build_phi(5, 1, &prior, &s), CMat::zeros(6, 6));
        prior.set(5, 1, 1.0);
        let phi = build_phi(5, 1, &prior, &s);
        assert!((phi - &s * s.adjoint()).norm() < 1e-14);
    }

    fn naive_weighted_sum(s: &CVec, weight: impl Fn(isize) -> f64) -> CMat {
        let n = s.len() as isize;
        let mut out = CMat::zeros(s.len(), s.len());
        for k in -(n - 1)..n {
            let sk = shifted_waveform(s, k);
            for i in 0..s.len() {
                for j in 0..s.len() {
                    out[(i, j)] += sk[i] * sk[j].conj() * weight(k);
                }
            }
        }
        out
    }

    #[test]
    fn phi_matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_vec(&mut rng, 4);
        let values: Vec<f64> = (0..6 * 3).map(|_| rng.random_range(0.0..2.0)).collect();
        let prior = PowerPrior::from_values(6, 3, values).unwrap();
        for ell in 1..=6 {
            for q in 0..3 {
                let fast = build_phi(ell, q, &prior, &s);
                let naive = naive_weighted_sum(&s, |k| prior.get(ell as isize + k, q));
                assert!((fast - naive).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn upsilon_trace_and_naive() {
        let s = lfm_waveform(32, 4e-6, 4e6, 1e9).unwrap().samples().clone();
        let ups = build_upsilon(&s, 2.5);
        // sum_n (N - |n|) = N^2
        assert!((trace_re(&ups) - 2.5 * 32.0 * 32.0).abs() < 1e-9);
        assert_eq!(build_upsilon(&s, 0.0), CMat::zeros(32, 32));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_vec(&mut rng, 4);
        let naive = naive_weighted_sum(&r, |_| 0.7);
        assert!((build_upsilon(&r, 0.7) - naive).norm() < 1e-12);
    }

    #[test]
    fn complex_weighted_sum_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_vec(&mut rng, 5);
        let fam = ShiftFamily::new(&s);
        let coeffs: Vec<Complex64> = (0..fam.num_shifts())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = fam.weighted_outer_sum_complex(&coeffs);
        let mut naive = CMat::zeros(5, 5);
        for (slot, k) in fam.shifts().enumerate() {
            let sk = shifted_waveform(&s, k);
            naive += &sk * sk.adjoint() * coeffs[slot];
        }
        assert!((fast - naive).norm() < 1e-12);
    }

    #[test]
    fn correlations_match_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_vec(&mut rng, 6);
        let u = random_vec(&mut rng, 6);
        let fam = ShiftFamily::new(&s);
        for (c, k) in fam.correlations(&u).iter().zip(fam.shifts()) {
            assert!((c - shifted_waveform(&s, k).dotc(&u)).norm() < 1e-13);
        }
    }

    #[test]
    fn phi_and_upsilon_are_hermitian_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random_vec(&mut rng, 8);
        let values: Vec<f64> = (0..12 * 5).map(|_| rng.random_range(0.0..3.0)).collect();
        let prior = PowerPrior::from_values(12, 5, values).unwrap();
        for m in [build_phi(1, 0, &prior, &s), build_phi(7, 3, &prior, &s), build_upsilon(&s, 1.3)] {
            assert!(hermitian_defect(&m) <= 1e-12);
            assert!(min_eigenvalue(&m) >= -1e-10 * trace_re(&m));
        }
    }

    #[test]
    fn prior_rejects_negative_entries() {
        assert!(PowerPrior::from_values(1, 2, vec![0.0, -1.0]).is_err());
        assert!(PowerPrior::from_values(1, 2, vec![0.0]).is_err());
    }
}
