//! Complex Chebyshev (minimax) approximation by a log-barrier interior point
//! method.
//!
//! Solves
//!
//! ```text
//! minimize_{z in C^n}  max_i |alpha_i + beta_i^T z|
//! ```
//!
//! in its epigraph form `min t  s.t. |alpha_i + beta_i^T z| <= t`, i.e. a
//! second-order cone program with one 3-dimensional cone per grid angle.
//! Unknowns are stacked as the real vector `x = [Re z; Im z; t]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::CVec;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once the barrier duality-gap bound `m / tau` falls below this.
    pub gap_tolerance: f64,
    /// Barrier weight multiplier between centering steps.
    pub barrier_growth: f64,
    pub max_outer_iterations: usize,
    pub max_newton_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-10,
            barrier_growth: 10.0,
            max_outer_iterations: 60,
            max_newton_steps: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Incumbent {
    pub z: CVec,
    pub peak: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub z: CVec,
    pub peak: f64,
    /// Incumbent peak after each centering step; nonincreasing.
    pub peak_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub newton_steps: usize,
}

#[derive(Debug, Clone)]
pub enum SolveFailure {
    NotConverged { iterations: usize, best: Incumbent },
}

struct Problem {
    re_alpha: DVector<f64>,
    im_alpha: DVector<f64>,
    // d Re(r) / d [Re z; Im z] and d Im(r) / d [Re z; Im z], one row per angle
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    n: usize,
}

impl Problem {
    fn new(offsets: &[Complex64], rows: &DMatrix<Complex64>) -> Self {
        let g = offsets.len();
        let n = rows.ncols();
        let mut a = DMatrix::zeros(g, 2 * n);
        let mut b = DMatrix::zeros(g, 2 * n);
        for i in 0..g {
            for k in 0..n {
                let beta = rows[(i, k)];
                a[(i, k)] = beta.re;
                a[(i, n + k)] = -beta.im;
                b[(i, k)] = beta.im;
                b[(i, n + k)] = beta.re;
            }
        }
        Self {
            re_alpha: DVector::from_iterator(g, offsets.iter().map(|z| z.re)),
            im_alpha: DVector::from_iterator(g, offsets.iter().map(|z| z.im)),
            a,
            b,
            n,
        }
    }

    fn residuals(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (&self.re_alpha + &self.a * z, &self.im_alpha + &self.b * z)
    }

    fn peak(&self, z: &DVector<f64>) -> f64 {
        let (re, im) = self.residuals(z);
        re.iter()
            .zip(im.iter())
            .map(|(r, i)| r.hypot(*i))
            .fold(0.0, f64::max)
    }

    /// Slack `t^2 - |r_i|^2` per constraint, or `None` outside the cone
    /// interior `t > |r_i|`.
    fn slacks(&self, z: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        if t <= 0.0 {
            return None;
        }
        let (re, im) = self.residuals(z);
        let f = DVector::from_iterator(
            re.len(),
            re.iter().zip(im.iter()).map(|(r, i)| t * t - r * r - i * i),
        );
        if f.iter().all(|&v| v > 0.0) {
            Some((re, im, f))
        } else {
            None
        }
    }

    fn objective(&self, z: &DVector<f64>, t: f64, tau: f64) -> Option<f64> {
        let (_, _, f) = self.slacks(z, t)?;
        Some(tau * t - f.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn gradient_hessian(
        &self,
        z: &DVector<f64>,
        t: f64,
        tau: f64,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let (re, im, f) = self.slacks(z, t).expect("iterate is strictly feasible");
        let dim = 2 * self.n + 1;
        let g = f.len();
        let inv_f = f.map(|v| 1.0 / v);
        let inv_f2 = inv_f.component_mul(&inv_f);

        // gr_i = Re(r_i) a_i + Im(r_i) b_i, so that grad |r_i|^2 = 2 gr_i
        let mut gr = self.a.clone();
        for i in 0..g {
            let (rr, ri) = (re[i], im[i]);
            for k in 0..2 * self.n {
                gr[(i, k)] = rr * self.a[(i, k)] + ri * self.b[(i, k)];
            }
        }

        let mut grad = DVector::zeros(dim);
        let gz = gr.tr_mul(&inv_f) * 2.0;
        grad.rows_mut(0, 2 * self.n).copy_from(&gz);
        grad[2 * self.n] = tau - 2.0 * t * inv_f.sum();

        let mut hess = DMatrix::zeros(dim, dim);
        let mut scaled_gr = gr.clone();
        let mut scaled_a = self.a.clone();
        let mut scaled_b = self.b.clone();
        for i in 0..g {
            scaled_gr.row_mut(i).scale_mut(inv_f2[i]);
            scaled_a.row_mut(i).scale_mut(inv_f[i]);
            scaled_b.row_mut(i).scale_mut(inv_f[i]);
        }
        let zz = gr.tr_mul(&scaled_gr) * 4.0
            + self.a.tr_mul(&scaled_a) * 2.0
            + self.b.tr_mul(&scaled_b) * 2.0;
        hess.view_mut((0, 0), (2 * self.n, 2 * self.n)).copy_from(&zz);
        let zt = gr.tr_mul(&inv_f2) * (-4.0 * t);
        for k in 0..2 * self.n {
            hess[(k, 2 * self.n)] = zt[k];
            hess[(2 * self.n, k)] = zt[k];
        }
        hess[(2 * self.n, 2 * self.n)] =
            4.0 * t * t * inv_f2.sum() - 2.0 * inv_f.sum();
        (grad, hess)
    }
}

fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let neg = -grad;
    if let Some(chol) = hess.clone().cholesky() {
        return Some(chol.solve(&neg));
    }
    hess.lu().solve(&neg)
}

fn to_complex(z: &DVector<f64>, n: usize) -> CVec {
    CVec::from_fn(n, |k, _| Complex64::new(z[k], z[n + k]))
}

/// Minimizes `max_i |offsets[i] + rows.row(i) * z|` over complex `z`.
pub fn solve(
    offsets: &[Complex64],
    rows: &DMatrix<Complex64>,
    options: &SolverOptions,
) -> Result<Solution, SolveFailure> {
    let problem = Problem::new(offsets, rows);
    let n = problem.n;
    let m = offsets.len() as f64;

    let mut z = DVector::zeros(2 * n);
    let start_peak = problem.peak(&z);
    let mut t = 1.05 * start_peak + 1e-3;
    let mut tau = m / t;

    let mut best = Incumbent {
        z: to_complex(&z, n),
        peak: start_peak,
    };
    let mut peak_trace = Vec::new();
    let mut newton_steps = 0;

    for outer in 1..=options.max_outer_iterations {
        // centering
        for _ in 0..options.max_newton_steps {
            let (grad, hess) = problem.gradient_hessian(&z, t, tau);
            let Some(step) = newton_direction(hess, &grad) else {
                break;
            };
            newton_steps += 1;
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let current = problem
                .objective(&z, t, tau)
                .expect("iterate is strictly feasible");
            let dz = step.rows(0, 2 * n).into_owned();
            let dt = step[2 * n];
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-16 {
                let z_try = &z + &dz * s;
                let t_try = t + dt * s;
                if let Some(value) = problem.objective(&z_try, t_try, tau) {
                    if value <= current - 0.25 * s * decrement {
                        z = z_try;
                        t = t_try;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        let peak = problem.peak(&z);
        if peak < best.peak {
            best = Incumbent {
                z: to_complex(&z, n),
                peak,
            };
        }
        peak_trace.push(best.peak);

        if m / tau < options.gap_tolerance {
            return Ok(Solution {
                z: best.z,
                peak: best.peak,
                peak_trace,
                outer_iterations: outer,
                newton_steps,
            });
        }
        tau *= options.barrier_growth;
    }
    Err(SolveFailure::NotConverged {
        iterations: options.max_outer_iterations,
        best,
    })
}
