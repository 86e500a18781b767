//! Monte-Carlo and algebraic self-checks of the covariance model and the
//! filters, reported as pass/fail entries with their margins.

use std::fmt;

use dfrc_core::filters::{
    jrdap_map_with_factors, jrdmf_filter, mc_cost_oracle, mc_covariance_oracle, CellCost,
    CovarianceComponent,
};
use dfrc_core::linalg::{hermitian_defect, kron, min_eigenvalue, relative_frobenius, trace_re};
use dfrc_core::{ampc_cell, estimate_prior, jrdmf, spc_mtd, CVec, Complex64, DataCube, PowerPrior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SceneConfig;
use crate::error::Result;
use crate::pipeline::Setup;

/// Relative Frobenius tolerance for Monte-Carlo covariance and cost checks.
pub const MC_TOLERANCE: f64 = 0.05;
/// Exact algebraic identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Cost comparisons, relative to `rho(ell, q)`.
pub const COST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Measured worst-case deviation.
    pub value: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if value <= tolerance { Status::Pass } else { Status::Fail },
            value,
            tolerance,
            note: note.into(),
        }
    }

    fn skipped(name: &str, note: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            value: 0.0,
            tolerance: 0.0,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name.as_str())
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# config_hash: {}", self.config_hash)?;
        writeln!(f, "# seed: {}", self.seed)?;
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            if c.status == Status::Skipped {
                writeln!(f, "{tag} {:<28} {}", c.name, c.note)?;
            } else {
                writeln!(
                    f,
                    "{tag} {:<28} value {:.3e} <= {:.1e}  {}",
                    c.name, c.value, c.tolerance, c.note
                )?;
            }
        }
        Ok(())
    }
}

fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Shared inputs of the checks: one simulated cube and the prior it yields.
pub struct Fixture {
    pub setup: Setup,
    pub cube: DataCube,
    pub prior: PowerPrior,
}

impl Fixture {
    pub fn new(config: &SceneConfig) -> Result<Self> {
        let setup = Setup::new(config)?;
        let cube = setup.simulate()?;
        let spc = spc_mtd(&cube, setup.waveform.samples(), &setup.grid)?;
        let prior = estimate_prior(&spc, config.noise_power())?;
        Ok(Self { setup, cube, prior })
    }

    /// Middle of the window, so the covariance sees neighbours on both sides.
    pub fn probe_cell(&self) -> usize {
        self.setup.config.cpi.range_cells.div_ceil(2)
    }
}

/// Closed-form `R_t` / `R_c` / `R_n` against the Monte-Carlo oracle.
pub fn covariance_checks(fx: &Fixture) -> Result<Vec<Check>> {
    let model = &fx.setup.model;
    let ell = fx.probe_cell();
    let draws = fx.setup.config.processing.mc_draws;
    let seed = fx.setup.seed;
    let agg = model.range_aggregates(ell, &fx.prior)?;
    let note = format!("ell = {ell}, {draws} draws");

    let mut checks = Vec::new();
    let rt_mc = mc_covariance_oracle(model, CovarianceComponent::Target, ell, &fx.prior, draws, seed)?;
    checks.push(Check::at_most(
        "target covariance (MC)",
        relative_frobenius(&rt_mc, &model.assemble_rt(&agg)),
        MC_TOLERANCE,
        note.clone(),
    ));
    if model.has_clutter() {
        let rc_mc =
            mc_covariance_oracle(model, CovarianceComponent::Clutter, ell, &fx.prior, draws, seed + 1)?;
        checks.push(Check::at_most(
            "clutter covariance (MC)",
            relative_frobenius(&rc_mc, &model.assemble_rc()),
            MC_TOLERANCE,
            note.clone(),
        ));
    } else {
        checks.push(Check::skipped("clutter covariance (MC)", "no clutter in this configuration"));
    }
    let rn_mc = mc_covariance_oracle(model, CovarianceComponent::Noise, ell, &fx.prior, draws, seed + 2)?;
    checks.push(Check::at_most(
        "noise covariance (MC)",
        relative_frobenius(&rn_mc, &model.noise_covariance()),
        MC_TOLERANCE,
        note,
    ));
    Ok(checks)
}

/// Range- and Doppler-projected forms against contractions of the full
/// block matrices.
pub fn projection_checks(fx: &Fixture, trials: usize) -> Result<Vec<Check>> {
    let model = &fx.setup.model;
    let (n, p) = (model.num_samples(), model.pulses());
    let mut rng = ChaCha8Rng::seed_from_u64(fx.setup.seed ^ 0x7072_6f6a);
    let block = |m: &dfrc_core::CMat, a: usize, b: usize| m.view((a * n, b * n), (n, n)).into_owned();
    let rc = model.assemble_rc();
    let (mut t_u, mut c_u, mut n_u, mut t_v, mut c_v, mut n_v) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
    for trial in 0..trials {
        let ell = 1 + trial % fx.setup.config.cpi.range_cells;
        let agg = model.range_aggregates(ell, &fx.prior)?;
        let rt = model.assemble_rt(&agg);
        let scale = rt.norm().max(rc.norm()).max(model.noise_power()).max(f64::MIN_POSITIVE);
        let u = random_cvec(&mut rng, n);
        let v = random_cvec(&mut rng, p);

        let (rt_u, rc_u, rn_u) = (
            model.range_projected_target(&agg, &u),
            model.range_projected_clutter(&u),
            model.range_projected_noise(&u),
        );
        let un = u.norm_squared();
        for a in 0..p {
            for b in 0..p {
                let et = u.dotc(&(block(&rt, b, a) * &u));
                let ec = u.dotc(&(block(&rc, b, a) * &u));
                let en = if a == b { model.noise_power() * un } else { 0.0 };
                t_u = t_u.max((rt_u[(a, b)] - et).norm() / (scale * un));
                c_u = c_u.max((rc_u[(a, b)] - ec).norm() / (scale * un));
                n_u = n_u.max((rn_u[(a, b)] - en).norm() / (scale * un));
            }
        }

        let mut et = dfrc_core::CMat::zeros(n, n);
        let mut ec = dfrc_core::CMat::zeros(n, n);
        for l1 in 0..p {
            for l2 in 0..p {
                let w = v[l1] * v[l2].conj();
                et += block(&rt, l1, l2) * w;
                ec += block(&rc, l1, l2) * w;
            }
        }
        let en = dfrc_core::CMat::identity(n, n) * Complex64::new(model.noise_power() * v.norm_squared(), 0.0);
        let vn = v.norm_squared();
        t_v = t_v.max((model.doppler_projected_target(&agg, &v) - et).norm() / (scale * vn));
        c_v = c_v.max((model.doppler_projected_clutter(&v) - ec).norm() / (scale * vn));
        n_v = n_v.max((model.doppler_projected_noise(&v) - en).norm() / (scale * vn));
    }
    let note = format!("{trials} random (ell, u, v)");
    let mut checks = vec![Check::at_most("range-projected target", t_u, IDENTITY_TOLERANCE, note.clone())];
    if model.has_clutter() {
        checks.push(Check::at_most("range-projected clutter", c_u, IDENTITY_TOLERANCE, note.clone()));
    } else {
        checks.push(Check::skipped("range-projected clutter", "no clutter in this configuration"));
    }
    checks.push(Check::at_most("range-projected noise", n_u, IDENTITY_TOLERANCE, note.clone()));
    checks.push(Check::at_most("Doppler-projected target", t_v, IDENTITY_TOLERANCE, note.clone()));
    if model.has_clutter() {
        checks.push(Check::at_most("Doppler-projected clutter", c_v, IDENTITY_TOLERANCE, note.clone()));
    } else {
        checks.push(Check::skipped("Doppler-projected clutter", "no clutter in this configuration"));
    }
    checks.push(Check::at_most("Doppler-projected noise", n_v, IDENTITY_TOLERANCE, note));
    Ok(checks)
}

/// `(v^* (x) u)^H y(ell) = u^H Y(ell) v` on the simulated cube.
pub fn kronecker_check(fx: &Fixture, trials: usize) -> Check {
    let (n, p) = (fx.setup.model.num_samples(), fx.setup.model.pulses());
    let mut rng = ChaCha8Rng::seed_from_u64(fx.setup.seed ^ 0x6b72_6f6e);
    let mut worst = 0f64;
    for trial in 0..trials {
        let ell = 1 + trial % fx.cube.range_cells();
        let u = random_cvec(&mut rng, n);
        let v = random_cvec(&mut rng, p);
        let y = fx.cube.stacked(ell);
        let lhs = kron(&v.map(|z| z.conj()), &u).dotc(&y);
        let rhs = u.dotc(&(fx.cube.matrix(ell) * &v));
        let scale = u.norm() * v.norm() * y.norm();
        worst = worst.max((lhs - rhs).norm() / scale.max(f64::MIN_POSITIVE));
    }
    Check::at_most("Kronecker stacking", worst, 1e-12, format!("{trials} random (ell, u, v)"))
}

/// `J(gamma u, v / conj(gamma)) = J(u, v)`, analytically and through the
/// Monte-Carlo cost oracle; the oracle's mean cost must also match the
/// analytic one.
pub fn cost_checks(fx: &Fixture, trials: usize) -> Result<Vec<Check>> {
    let model = &fx.setup.model;
    let (n, p) = (model.num_samples(), model.pulses());
    let ell = fx.probe_cell();
    let cost = CellCost::new(model, ell, &fx.prior)?;
    let mut rng = ChaCha8Rng::seed_from_u64(fx.setup.seed ^ 0x7363_616c);
    let draws = fx.setup.config.processing.mc_draws;
    let mut analytic = 0f64;
    for _ in 0..trials {
        let q = rng.random_range(0..model.grid().len());
        let u = random_cvec(&mut rng, n);
        let v = random_cvec(&mut rng, p);
        let gamma = Complex64::from_polar(rng.random_range(0.1..10.0), rng.random_range(-3.0..3.0));
        let h = kron(&v.map(|z| z.conj()), &u);
        let hs = kron(&(v.map(|z| z.conj()) / gamma), &(&u * gamma));
        let j = cost.cost(q, &h);
        analytic = analytic.max((cost.cost(q, &hs) - j).abs() / j.abs().max(f64::MIN_POSITIVE));
    }

    let q = fx.setup.config.targets.first().map_or(0, |t| t.doppler_cell);
    let u = random_cvec(&mut rng, n);
    let v = random_cvec(&mut rng, p);
    let gamma = Complex64::from_polar(2.5, 1.1);
    // small-norm filters keep the MC variance comparable to the cost itself
    let h = kron(&v.map(|z| z.conj()), &u) / Complex64::new(u.norm() * v.norm() * (n * p) as f64, 0.0);
    let hs = kron(&(v.map(|z| z.conj()) / gamma), &(&u * gamma))
        / Complex64::new(u.norm() * v.norm() * (n * p) as f64, 0.0);
    let mc = mc_cost_oracle(model, ell, q, &fx.prior, &h, draws, fx.setup.seed + 3)?;
    let mc_scaled = mc_cost_oracle(model, ell, q, &fx.prior, &hs, draws, fx.setup.seed + 3)?;
    let exact = cost.cost(q, &h);

    Ok(vec![
        Check::at_most(
            "scale invariance (analytic)",
            analytic,
            IDENTITY_TOLERANCE,
            format!("{trials} random (q, u, v, gamma)"),
        ),
        Check::at_most(
            "scale invariance (MC)",
            (mc_scaled - mc).abs() / mc,
            IDENTITY_TOLERANCE,
            format!("ell = {ell}, q = {q}, same draws"),
        ),
        Check::at_most(
            "MC cost vs analytic cost",
            (mc - exact).abs() / exact,
            MC_TOLERANCE,
            format!("ell = {ell}, q = {q}, {draws} draws"),
        ),
    ])
}

/// Hermitian defect and most negative eigenvalue of every assembled
/// covariance in the window.
pub fn psd_check(fx: &Fixture) -> Result<Check> {
    let model = &fx.setup.model;
    let mut worst = 0f64;
    let mut blocks = vec![model.assemble_rc(), model.noise_covariance()];
    for ell in 1..=fx.setup.config.cpi.range_cells {
        let agg = model.range_aggregates(ell, &fx.prior)?;
        blocks.push(model.assemble_rt(&agg));
        blocks.push(model.covariance(&agg));
    }
    for m in &blocks {
        let scale = trace_re(m).max(f64::MIN_POSITIVE);
        worst = worst
            .max(hermitian_defect(m) / scale)
            .max((-min_eigenvalue(m)).max(0.0) / scale);
    }
    Ok(Check::at_most(
        "covariance Hermitian/PSD",
        worst,
        IDENTITY_TOLERANCE,
        format!("{} matrices, relative to trace", blocks.len()),
    ))
}

/// JRDAP cost chain `J(u^{i-1}, v^{i-1}) >= J(u^{i-1}, v^i) >= J(u^i, v^i)`
/// at every cell, and the filter ordering AMPC <= JRDAP <= JRDMF.
pub fn jrdap_checks(fx: &Fixture) -> Result<Vec<Check>> {
    let setup = &fx.setup;
    let model = &setup.model;
    let options = setup.jrdap_options();
    let (_, factors) = jrdap_map_with_factors(model, &fx.cube, &fx.prior, &options)?;
    let q_len = setup.grid.len();
    let mut chain = 0f64;
    let mut sandwich = 0f64;
    let mut gap = 0f64;
    for ell in 1..=fx.cube.range_cells() {
        let cost = CellCost::new(model, ell, &fx.prior)?;
        for q in 0..q_len {
            let f = &factors[(ell - 1) * q_len + q];
            let rho = fx.prior.get(ell as isize, q);
            let mut prev = rho;
            for (half, full) in f.half_step_trace.iter().zip(&f.cost_trace) {
                chain = chain.max((half - prev) / rho).max((full - half) / rho);
                prev = *full;
            }
            let (_, ampc) = ampc_cell(model, ell, q, &fx.cube, &fx.prior)?;
            let j_ampc = cost.cost(q, &ampc.h);
            let j_jrdap = cost.cost(q, &f.filter());
            let j_mf = cost.cost(q, &jrdmf_filter(setup.waveform.samples(), &setup.grid, q, model.pulses()));
            sandwich = sandwich.max((j_ampc - j_jrdap) / rho).max((j_jrdap - j_mf) / rho);
            gap = gap.max((j_jrdap - j_ampc) / rho);
        }
    }
    let cells = factors.len();
    Ok(vec![
        Check::at_most(
            "JRDAP cost monotone",
            chain,
            COST_TOLERANCE,
            format!("{cells} cells, increase relative to rho"),
        ),
        Check::at_most(
            "AMPC <= JRDAP <= JRDMF",
            sandwich,
            COST_TOLERANCE,
            format!("{cells} cells; largest JRDAP - AMPC gap {gap:.3e} rho"),
        ),
    ])
}

pub fn baseline_check(fx: &Fixture) -> Result<Check> {
    let s = fx.setup.waveform.samples();
    let a = spc_mtd(&fx.cube, s, &fx.setup.grid)?;
    let b = jrdmf(&fx.cube, s, &fx.setup.grid)?;
    Ok(Check::at_most(
        "JRDMF = SPC & MTD",
        max_relative_difference(a.estimates(), b.estimates()),
        IDENTITY_TOLERANCE,
        "entrywise",
    ))
}

pub fn max_relative_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).norm();
            if d == 0.0 {
                0.0
            } else {
                d / x.norm().max(y.norm())
            }
        })
        .fold(0.0, f64::max)
}

/// Rebuilding from the same configuration reproduces the cube and the
/// JRDAP map bit for bit.
pub fn determinism_check(fx: &Fixture) -> Result<Check> {
    let again = Fixture::new(&fx.setup.config)?;
    let options = fx.setup.jrdap_options();
    let (a, _) = jrdap_map_with_factors(&fx.setup.model, &fx.cube, &fx.prior, &options)?;
    let (b, _) = jrdap_map_with_factors(&again.setup.model, &again.cube, &again.prior, &options)?;
    let same = again.cube == fx.cube && a.estimates() == b.estimates() && again.setup.symbols == fx.setup.symbols;
    Ok(Check::at_most(
        "determinism under seed",
        if same { 0.0 } else { 1.0 },
        0.0,
        "cube, symbols and JRDAP map",
    ))
}

/// Runs every check on `config`.
pub fn run_validation(config: &SceneConfig) -> Result<ValidationReport> {
    let fx = Fixture::new(config)?;
    let mut checks = covariance_checks(&fx)?;
    checks.extend(projection_checks(&fx, 20)?);
    checks.push(kronecker_check(&fx, 100));
    checks.extend(cost_checks(&fx, 100)?);
    checks.push(psd_check(&fx)?);
    checks.extend(jrdap_checks(&fx)?);
    checks.push(baseline_check(&fx)?);
    checks.push(determinism_check(&fx)?);
    Ok(ValidationReport {
        config_hash: config.hash(),
        seed: config.seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(clutter: bool) -> SceneConfig {
        let mut c = SceneConfig::validation_default();
        c.processing.mc_draws = 4000;
        if !clutter {
            c.clutter.patches = 0;
        }
        c
    }

    #[test]
    fn clutter_free_config_skips_clutter_checks() {
        let fx = Fixture::new(&quick(false)).unwrap();
        let checks = projection_checks(&fx, 3).unwrap();
        let skipped: Vec<&str> = checks
            .iter()
            .filter(|c| c.status == Status::Skipped)
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(skipped, ["range-projected clutter", "Doppler-projected clutter"]);
        assert!(checks.iter().all(|c| c.status != Status::Fail));
    }

    #[test]
    fn algebraic_checks_pass_with_clutter() {
        let fx = Fixture::new(&quick(true)).unwrap();
        for c in projection_checks(&fx, 5).unwrap() {
            assert_eq!(c.status, Status::Pass, "{c:?}");
        }
        assert_eq!(kronecker_check(&fx, 20).status, Status::Pass);
        assert_eq!(psd_check(&fx).unwrap().status, Status::Pass);
        assert_eq!(baseline_check(&fx).unwrap().status, Status::Pass);
    }

    #[test]
    fn report_lists_failures() {
        let report = ValidationReport {
            config_hash: "h".into(),
            seed: 0,
            checks: vec![
                Check::at_most("a", 1.0, 0.5, ""),
                Check::at_most("b", 0.1, 0.5, ""),
                Check::skipped("c", "why"),
            ],
        };
        assert!(!report.passed());
        assert_eq!(report.failures(), ["a"]);
        let text = report.to_string();
        assert!(text.contains("FAIL a") && text.contains("PASS b") && text.contains("SKIP c"));
    }
}
