//! Scene description and synthesis of the received data cube.
//!
//! Pulse `p` (0-based here) of the received signal is
//!
//! ```text
//! y_p(m) = sum_targets  x * (w_p^H a(theta)) * e^{j 2 pi p psi} * s(m - l0)
//!        + sum_patches  (w_p^H a(theta_i)) * sum_k c_i(m - k) s(k)
//!        + n_p(m)
//! ```
//!
//! over fast-time samples `m = 1 ..= L + N - 1`. Clutter is stationary (zero
//! Doppler) and identical across pulses apart from the per-pulse transmit
//! modulation `w_p^H a(theta_i)`. Clutter responses are drawn on cells
//! `2 - N ..= L + N - 1` so that every received sample sees a full-length
//! clutter convolution.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array_beam::{steering_vector, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, CMat, CVec, ZERO};
use crate::waveform::DopplerGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub angle_deg: f64,
    /// 1-based range cell.
    pub range_cell: usize,
    pub doppler_cell: usize,
    /// Per-sample, pre-compression SNR: `10 log10(E|x|^2 / sigma_n^2)`.
    pub snr_db: f64,
}

/// What a clutter-to-noise ratio refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CnrReference {
    /// Received power of an average patch.
    #[default]
    PerPatch,
    /// Received power of all patches together.
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterField {
    pub num_patches: usize,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    /// Per-cell, per-patch response power `sigma_c^2`.
    pub patch_power: f64,
}

impl ClutterField {
    pub fn none() -> Self {
        Self {
            num_patches: 0,
            angle_min_deg: -60.0,
            angle_max_deg: 60.0,
            patch_power: 0.0,
        }
    }

    /// Patch azimuths, evenly spanning `[angle_min, angle_max]`.
    pub fn angles(&self) -> Vec<f64> {
        match self.num_patches {
            0 => Vec::new(),
            1 => vec![0.5 * (self.angle_min_deg + self.angle_max_deg)],
            n => (0..n)
                .map(|i| {
                    self.angle_min_deg
                        + (self.angle_max_deg - self.angle_min_deg) * i as f64 / (n - 1) as f64
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.num_patches == 0 || self.patch_power == 0.0
    }

    /// Chooses `sigma_c^2` so that the clutter power per received sample,
    /// when every pulse uses `reference_weights`, is `cnr_db` above
    /// `noise_power`. `reference` selects whether that power is the average
    /// over patches or their sum.
    #[allow(clippy::too_many_arguments)]
    pub fn with_cnr(
        num_patches: usize,
        angle_range_deg: (f64, f64),
        cnr_db: f64,
        reference: CnrReference,
        noise_power: f64,
        reference_weights: &CVec,
        geometry: &ArrayGeometry,
        waveform: &CVec,
    ) -> Result<Self> {
        let mut field = Self {
            num_patches,
            angle_min_deg: angle_range_deg.0,
            angle_max_deg: angle_range_deg.1,
            patch_power: 0.0,
        };
        if num_patches == 0 {
            return Ok(field);
        }
        let gain: f64 = field
            .angles()
            .iter()
            .map(|&t| Ok(reference_weights.dotc(&steering_vector(geometry, t)?).norm_sqr()))
            .sum::<Result<f64>>()?;
        if gain <= 0.0 {
            return Err(Error::InvalidParameter(
                "reference beam has no response over the clutter sector".into(),
            ));
        }
        let patches = match reference {
            CnrReference::PerPatch => num_patches as f64,
            CnrReference::Total => 1.0,
        };
        field.patch_power =
            patches * noise_power * 10f64.powf(cnr_db / 10.0) / (waveform.norm_squared() * gain);
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub clutter: ClutterField,
    pub noise_power: f64,
}

/// `g_{i,p} = w_p^H a(theta_i)`, one row per clutter patch, one column per pulse.
pub fn clutter_modulation_coefficients(
    weights: &CMat,
    clutter: &ClutterField,
    geometry: &ArrayGeometry,
) -> Result<CMat> {
    if weights.nrows() != geometry.num_elements() {
        return Err(Error::DimensionMismatch {
            what: "transmit weight rows",
            expected: geometry.num_elements(),
            got: weights.nrows(),
        });
    }
    let angles = clutter.angles();
    let mut g = CMat::zeros(angles.len(), weights.ncols());
    for (i, &theta) in angles.iter().enumerate() {
        let a = steering_vector(geometry, theta)?;
        for p in 0..weights.ncols() {
            g[(i, p)] = weights.column(p).dotc(&a);
        }
    }
    Ok(g)
}

/// Received samples `y_p(m)`, `p = 0..P`, `m = 1..=L+N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pulses: usize,
    range_cells: usize,
    waveform_len: usize,
    doppler_cells: usize,
    elements: usize,
    samples: Vec<Complex64>,
}

impl DataCube {
    pub fn zeros(
        pulses: usize,
        range_cells: usize,
        waveform_len: usize,
        doppler_cells: usize,
        elements: usize,
    ) -> Self {
        let fast = range_cells + waveform_len - 1;
        Self {
            pulses,
            range_cells,
            waveform_len,
            doppler_cells,
            elements,
            samples: vec![ZERO; pulses * fast],
        }
    }

    pub fn from_samples(
        pulses: usize,
        range_cells: usize,
        waveform_len: usize,
        doppler_cells: usize,
        elements: usize,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        let expected = pulses * (range_cells + waveform_len - 1);
        if samples.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "data cube samples",
                expected,
                got: samples.len(),
            });
        }
        Ok(Self {
            pulses,
            range_cells,
            waveform_len,
            doppler_cells,
            elements,
            samples,
        })
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn range_cells(&self) -> usize {
        self.range_cells
    }

    pub fn waveform_len(&self) -> usize {
        self.waveform_len
    }

    pub fn doppler_cells(&self) -> usize {
        self.doppler_cells
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn fast_time_len(&self) -> usize {
        self.range_cells + self.waveform_len - 1
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// All fast-time samples of pulse `p` (0-based).
    pub fn pulse(&self, p: usize) -> &[Complex64] {
        let fast = self.fast_time_len();
        &self.samples[p * fast..(p + 1) * fast]
    }

    pub fn pulse_mut(&mut self, p: usize) -> &mut [Complex64] {
        let fast = self.fast_time_len();
        &mut self.samples[p * fast..(p + 1) * fast]
    }

    /// `y_p(ell) = [y_p(ell), .., y_p(ell + N - 1)]` for 1-based `ell`.
    pub fn window(&self, p: usize, ell: usize) -> &[Complex64] {
        assert!((1..=self.range_cells).contains(&ell), "range cell {ell} outside 1..={}", self.range_cells);
        &self.pulse(p)[ell - 1..ell - 1 + self.waveform_len]
    }

    /// Stacked `y(ell)` of length `N P`: pulse-major blocks of `N` samples.
    pub fn stacked(&self, ell: usize) -> CVec {
        let n = self.waveform_len;
        let mut out = CVec::zeros(n * self.pulses);
        for p in 0..self.pulses {
            out.rows_mut(p * n, n)
                .copy_from_slice(self.window(p, ell));
        }
        out
    }

    /// `Y(ell)` (`N x P`), column `p` equal to `y_p(ell)`.
    pub fn matrix(&self, ell: usize) -> CMat {
        let n = self.waveform_len;
        let mut out = CMat::zeros(n, self.pulses);
        for p in 0..self.pulses {
            out.column_mut(p).copy_from_slice(self.window(p, ell));
        }
        out
    }

    /// Binary export: five little-endian `u64` (P, L, N, Q, M) followed by
    /// interleaved `re, im` little-endian `f64`, pulse-major.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        for v in [
            self.pulses,
            self.range_cells,
            self.waveform_len,
            self.doppler_cells,
            self.elements,
        ] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for z in &self.samples {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0usize; 5];
        for h in &mut header {
            input.read_exact(&mut word)?;
            *h = usize::try_from(u64::from_le_bytes(word))
                .map_err(|_| Error::InvalidParameter("cube header field too large".into()))?;
        }
        let [pulses, range_cells, waveform_len, doppler_cells, elements] = header;
        if waveform_len == 0 || range_cells == 0 {
            return Err(Error::InvalidParameter("cube header has zero L or N".into()));
        }
        let count = pulses * (range_cells + waveform_len - 1);
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            input.read_exact(&mut word)?;
            samples.push(Complex64::new(re, f64::from_le_bytes(word)));
        }
        Self::from_samples(pulses, range_cells, waveform_len, doppler_cells, elements, samples)
    }
}

/// The random draws behind one synthesized cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRealization {
    pub target_amplitudes: Vec<Complex64>,
    /// `clutter_responses[i][m + N - 2]` is `c_i(m)` for `m = 2 - N ..= L + N - 1`.
    pub clutter_responses: Vec<Vec<Complex64>>,
    /// Pulse-major `n_p(m)`, same layout as the cube.
    pub noise: Vec<Complex64>,
    pub seed: u64,
}

pub(crate) fn complex_gaussian(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let scale = (0.5 * power).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Synthesizes one CPI. `weights` is the `M x P` per-pulse transmit matrix.
pub fn synthesize(
    scene: &Scene,
    weights: &CMat,
    geometry: &ArrayGeometry,
    waveform: &CVec,
    grid: &DopplerGrid,
    range_cells: usize,
    seed: u64,
) -> Result<(DataCube, SceneRealization)> {
    let pulses = weights.ncols();
    let n = waveform.len();
    if weights.nrows() != geometry.num_elements() {
        return Err(Error::DimensionMismatch {
            what: "transmit weight rows",
            expected: geometry.num_elements(),
            got: weights.nrows(),
        });
    }
    if range_cells == 0 || n < 2 || pulses == 0 {
        return Err(Error::InvalidParameter(format!(
            "invalid cube dimensions P={pulses}, L={range_cells}, N={n}"
        )));
    }
    if !(scene.noise_power >= 0.0) || !(scene.clutter.patch_power >= 0.0) {
        return Err(Error::InvalidParameter("powers must be nonnegative".into()));
    }
    for t in &scene.targets {
        if !(1..=range_cells).contains(&t.range_cell) || t.doppler_cell >= grid.len() {
            return Err(Error::InvalidParameter(format!(
                "target at cell ({}, {}) outside the {}x{} grid",
                t.range_cell,
                t.doppler_cell,
                range_cells,
                grid.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cube = DataCube::zeros(pulses, range_cells, n, grid.len(), geometry.num_elements());
    let fast = cube.fast_time_len();

    let mut amplitudes = Vec::with_capacity(scene.targets.len());
    for t in &scene.targets {
        let power = scene.noise_power * 10f64.powf(t.snr_db / 10.0);
        let x = complex_gaussian(&mut rng, power);
        amplitudes.push(x);
        let a = steering_vector(geometry, t.angle_deg)?;
        let psi = grid.psi(t.doppler_cell);
        for p in 0..pulses {
            let scale = x * weights.column(p).dotc(&a) * cis_cycles(p as f64 * psi);
            let row = &mut cube.pulse_mut(p)[t.range_cell - 1..t.range_cell - 1 + n];
            for (y, s) in row.iter_mut().zip(waveform.iter()) {
                *y += scale * s;
            }
        }
    }

    let clutter_len = range_cells + 2 * n - 2;
    let modulation = clutter_modulation_coefficients(weights, &scene.clutter, geometry)?;
    let mut clutter_responses = Vec::with_capacity(scene.clutter.num_patches);
    let mut compressed = vec![ZERO; fast];
    for i in 0..scene.clutter.num_patches {
        let c: Vec<Complex64> = (0..clutter_len)
            .map(|_| complex_gaussian(&mut rng, scene.clutter.patch_power))
            .collect();
        // sample m (1-based j + 1) sees cells m - k, stored at j + N - 1 - k
        for (j, out) in compressed.iter_mut().enumerate() {
            *out = waveform
                .iter()
                .enumerate()
                .map(|(k, s)| c[j + n - 1 - k] * s)
                .sum();
        }
        for p in 0..pulses {
            let g = modulation[(i, p)];
            for (y, v) in cube.pulse_mut(p).iter_mut().zip(&compressed) {
                *y += g * v;
            }
        }
        clutter_responses.push(c);
    }

    let mut noise = Vec::with_capacity(pulses * fast);
    for p in 0..pulses {
        for y in cube.pulse_mut(p) {
            let v = complex_gaussian(&mut rng, scene.noise_power);
            *y += v;
            noise.push(v);
        }
    }

    Ok((
        cube,
        SceneRealization {
            target_amplitudes: amplitudes,
            clutter_responses,
            noise,
            seed,
        },
    ))
}
