//! Monte-Carlo oracles for the covariance model.
//!
//! These draw scene realizations straight from the signal model (random
//! responses convolved with the pulse, modulated per pulse) and average
//! sample statistics of the stacked window `y(ell)`. They do not use the
//! shifted-waveform family or any closed-form covariance.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::covariance::FilterModel;
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, CMat, CVec, ONE, ZERO};
use crate::scene::complex_gaussian;
use crate::waveform::PowerPrior;

const MIN_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceComponent {
    Target,
    Clutter,
    Noise,
}

/// One realization of each component's contribution to `y(ell)`, plus the
/// target response drawn at `(ell, q_of_interest)`.
struct WindowDraw {
    target: CVec,
    clutter: CVec,
    noise: CVec,
    x: Complex64,
}

struct Sampler<'a> {
    model: &'a FilterModel,
    ell: usize,
    prior: &'a PowerPrior,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    /// Cells `ell - N + 1 ..= ell + N - 1` can reach the window.
    fn cells(&self) -> impl Iterator<Item = isize> {
        let n = self.model.num_samples() as isize;
        let ell = self.ell as isize;
        (ell - n + 1)..(ell + n)
    }

    /// `out_p[j] = sum_k s(k) r_p(ell + j - k)` with `r_p` given on `cells()`.
    fn convolve(&self, responses: &[Vec<Complex64>]) -> CVec {
        let n = self.model.num_samples();
        let s = self.model.waveform();
        let mut out = CVec::zeros(n * self.model.pulses());
        for (p, r) in responses.iter().enumerate() {
            for j in 0..n {
                // r index of cell ell + j - k is (j - k) + n - 1
                out[p * n + j] = (0..n).map(|k| s[k] * r[j + n - 1 - k]).sum();
            }
        }
        out
    }

    fn draw(&mut self, q_of_interest: usize, components: [bool; 3]) -> WindowDraw {
        let pulses = self.model.pulses();
        let grid = *self.model.grid();
        let n = self.model.num_samples();
        let cells: Vec<isize> = self.cells().collect();
        let mut draw = WindowDraw {
            target: CVec::zeros(n * pulses),
            clutter: CVec::zeros(n * pulses),
            noise: CVec::zeros(n * pulses),
            x: ZERO,
        };

        if components[0] {
            let mut per_pulse = vec![vec![ZERO; cells.len()]; pulses];
            for (slot, &cell) in cells.iter().enumerate() {
                for q in 0..grid.len() {
                    let power = self.prior.get(cell, q);
                    if power == 0.0 {
                        continue;
                    }
                    let x = complex_gaussian(&mut self.rng, power);
                    if cell == self.ell as isize && q == q_of_interest {
                        draw.x = x;
                    }
                    for (p, row) in per_pulse.iter_mut().enumerate() {
                        row[slot] += x * cis_cycles(p as f64 * grid.psi(q));
                    }
                }
            }
            draw.target = self.convolve(&per_pulse);
        }

        if components[1] && self.model.has_clutter() {
            let g = self.model.modulation();
            let mut per_pulse = vec![vec![ZERO; cells.len()]; pulses];
            for i in 0..g.nrows() {
                let c: Vec<Complex64> = cells
                    .iter()
                    .map(|_| complex_gaussian(&mut self.rng, self.model.clutter_power()))
                    .collect();
                for (p, row) in per_pulse.iter_mut().enumerate() {
                    for (acc, ci) in row.iter_mut().zip(&c) {
                        *acc += g[(i, p)] * ci;
                    }
                }
            }
            draw.clutter = self.convolve(&per_pulse);
        }

        if components[2] {
            let power = self.model.noise_power();
            draw.noise = CVec::from_fn(n * pulses, |_, _| complex_gaussian(&mut self.rng, power));
        }
        draw
    }
}

fn sampler<'a>(
    model: &'a FilterModel,
    ell: usize,
    prior: &'a PowerPrior,
    num_draws: usize,
    seed: u64,
) -> Result<Sampler<'a>> {
    if num_draws < MIN_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo oracles need at least {MIN_DRAWS} draws, got {num_draws}"
        )));
    }
    model.range_aggregates(ell, prior)?;
    Ok(Sampler {
        model,
        ell,
        prior,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// Sample covariance `E{y y^H}` of one component of `y(ell)`.
pub fn mc_covariance_oracle(
    model: &FilterModel,
    component: CovarianceComponent,
    ell: usize,
    prior: &PowerPrior,
    num_draws: usize,
    seed: u64,
) -> Result<CMat> {
    let mut sampler = sampler(model, ell, prior, num_draws, seed)?;
    let dim = model.stacked_len();
    let mut acc = CMat::zeros(dim, dim);
    let mask = match component {
        CovarianceComponent::Target => [true, false, false],
        CovarianceComponent::Clutter => [false, true, false],
        CovarianceComponent::Noise => [false, false, true],
    };
    for _ in 0..num_draws {
        let draw = sampler.draw(0, mask);
        let y = match component {
            CovarianceComponent::Target => draw.target,
            CovarianceComponent::Clutter => draw.clutter,
            CovarianceComponent::Noise => draw.noise,
        };
        acc.ger(ONE, &y, &y.map(|z| z.conj()), ONE);
    }
    Ok(acc / Complex64::new(num_draws as f64, 0.0))
}

/// Sample mean of `|x(ell, q) - h^H y(ell)|^2` over full scene draws.
pub fn mc_cost_oracle(
    model: &FilterModel,
    ell: usize,
    q: usize,
    prior: &PowerPrior,
    h: &CVec,
    num_draws: usize,
    seed: u64,
) -> Result<f64> {
    if h.len() != model.stacked_len() {
        return Err(Error::DimensionMismatch {
            what: "filter length",
            expected: model.stacked_len(),
            got: h.len(),
        });
    }
    let mut sampler = sampler(model, ell, prior, num_draws, seed)?;
    let mut total = 0.0;
    for _ in 0..num_draws {
        let draw = sampler.draw(q, [true, true, true]);
        let y = draw.target + draw.clutter + draw.noise;
        total += (draw.x - h.dotc(&y)).norm_sqr();
    }
    Ok(total / num_draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{lfm_waveform, DopplerGrid};

    #[test]
    fn noise_oracle_is_white() {
        let s = lfm_waveform(4, 1e-6, 2e6, 0.0).unwrap().samples().clone();
        let model =
            FilterModel::new(&s, DopplerGrid::new(4).unwrap(), CMat::zeros(0, 2), 0.0, 2.0).unwrap();
        let prior = PowerPrior::zeros(4, 4);
        let r = mc_covariance_oracle(&model, CovarianceComponent::Noise, 2, &prior, 4000, 1).unwrap();
        // std of an off-diagonal sample mean is sigma^2 / sqrt(draws)
        let bound = 5.0 * 2.0 / (4000f64).sqrt();
        for i in 0..8 {
            assert!((r[(i, i)].re - 2.0).abs() < 2.0 * bound);
            for j in 0..i {
                assert!(r[(i, j)].norm() < bound);
            }
        }
    }

    #[test]
    fn too_few_draws_is_an_error() {
        let s = lfm_waveform(4, 1e-6, 2e6, 0.0).unwrap().samples().clone();
        let model =
            FilterModel::new(&s, DopplerGrid::new(4).unwrap(), CMat::zeros(0, 2), 0.0, 1.0).unwrap();
        let prior = PowerPrior::zeros(4, 4);
        assert!(mc_covariance_oracle(&model, CovarianceComponent::Noise, 1, &prior, 10, 0).is_err());
    }
}
