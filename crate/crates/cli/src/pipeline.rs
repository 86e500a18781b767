//! End-to-end runs: design, synthesis, processing and artifact export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dfrc_core::array_beam::write_dictionary;
use dfrc_core::filters::{jrdap_map_with_factors, JrdapFactors};
use dfrc_core::{
    ampc_map, design_cbm_dictionary, estimate_prior, jrdmf, lfm_waveform, select_pulse_weights,
    spc_mtd, synthesize, ArrayGeometry, BeamDesignSpec, BeamDictionary, ClutterField, CMat,
    DataCube, DopplerGrid, FilterModel, JrdapOptions, Method, PowerPrior, RangeDopplerMap, Scene,
    Target, Waveform,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{SceneConfig, TransmitMode};
use crate::error::{CliError, Result};

/// Largest `N P` for which full-dimension AMPC runs without an explicit
/// override.
pub const AMPC_SIZE_LIMIT: usize = 512;

/// Seed-independent part of a run: the array and its designed dictionary.
#[derive(Debug, Clone)]
pub struct Design {
    pub geometry: ArrayGeometry,
    pub spec: BeamDesignSpec,
    pub dictionary: BeamDictionary,
}

impl Design {
    pub fn new(config: &SceneConfig) -> Result<Self> {
        let geometry = ArrayGeometry::new(config.array.elements, config.array.spacing)?;
        let comm = &config.comm;
        let spec = BeamDesignSpec {
            target_angle_deg: comm.theta_t_deg,
            comm_angle_deg: comm.theta_c_deg,
            sidelobe_region: comm.sidelobe_region.iter().map(|[a, b]| (*a, *b)).collect(),
            sll_levels: comm.sll_db_list.iter().map(|db| 10f64.powf(db / 20.0)).collect(),
            phases: comm.phase_list.clone(),
        };
        let dictionary = design_cbm_dictionary(&spec, &geometry, comm.grid_step_deg)?;
        Ok(Self {
            geometry,
            spec,
            dictionary,
        })
    }
}

/// Everything needed to synthesize and process one CPI.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: SceneConfig,
    pub design: Design,
    pub seed: u64,
    pub symbols: Vec<usize>,
    /// `M x P` per-pulse transmit weights.
    pub weights: CMat,
    pub waveform: Waveform,
    pub grid: DopplerGrid,
    pub scene: Scene,
    pub model: FilterModel,
}

// Keeps the symbol stream independent of the scene draws, which use `seed`.
fn symbol_seed(seed: u64) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15)
}

impl Setup {
    pub fn new(config: &SceneConfig) -> Result<Self> {
        let design = Design::new(config)?;
        Self::from_design(config, design, config.seed)
    }

    /// Reuses an existing dictionary; `seed` drives the symbol stream and
    /// the scene draws.
    pub fn from_design(config: &SceneConfig, design: Design, seed: u64) -> Result<Self> {
        config.validate()?;
        let pulses = config.cpi.pulses;
        let symbols = match (&config.comm.symbols, config.comm.mode) {
            (Some(s), _) => Some(s.clone()),
            (None, TransmitMode::Ncbm) => Some(vec![0; pulses]),
            (None, TransmitMode::Cbm) => None,
        };
        let (weights, symbols) =
            select_pulse_weights(&design.dictionary, symbols.as_deref(), pulses, symbol_seed(seed))?;

        let wf = &config.waveform;
        let waveform = lfm_waveform(
            wf.samples,
            wf.tau_us * 1e-6,
            wf.bandwidth_mhz * 1e6,
            wf.f0_ghz * 1e9,
        )?;
        let grid = DopplerGrid::new(config.cpi.doppler_cells)?;
        let noise_power = config.noise_power();

        let c = &config.clutter;
        let clutter = if c.patches == 0 {
            ClutterField::none()
        } else {
            ClutterField::with_cnr(
                c.patches,
                (c.angle_min_deg, c.angle_max_deg),
                c.cnr_db,
                c.cnr_reference.into(),
                noise_power,
                design.dictionary.weights(0),
                &design.geometry,
                waveform.samples(),
            )?
        };
        let targets = config
            .targets
            .iter()
            .map(|t| Target {
                angle_deg: t.angle_deg,
                range_cell: t.range_cell,
                doppler_cell: t.doppler_cell,
                snr_db: t.snr_db,
            })
            .collect();
        let scene = Scene {
            targets,
            clutter,
            noise_power,
        };
        let model = FilterModel::from_transmit(
            waveform.samples(),
            grid,
            &weights,
            &design.geometry,
            &scene.clutter,
            noise_power,
        )?;
        Ok(Self {
            config: config.clone(),
            design,
            seed,
            symbols,
            weights,
            waveform,
            grid,
            scene,
            model,
        })
    }

    pub fn simulate(&self) -> Result<DataCube> {
        let (cube, _) = synthesize(
            &self.scene,
            &self.weights,
            &self.design.geometry,
            self.waveform.samples(),
            &self.grid,
            self.config.cpi.range_cells,
            self.seed,
        )?;
        Ok(cube)
    }

    pub fn jrdap_options(&self) -> JrdapOptions {
        JrdapOptions {
            tolerance: self.config.processing.eta,
            max_iterations: self.config.processing.max_iter,
            initial_u: None,
        }
    }

    /// Refuses full-dimension AMPC above [`AMPC_SIZE_LIMIT`] unless allowed.
    pub fn check_ampc_size(&self, allow_large: bool) -> Result<()> {
        let np = self.config.waveform.samples * self.config.cpi.pulses;
        if np > AMPC_SIZE_LIMIT && !allow_large {
            return Err(CliError::Guard(format!(
                "AMPC needs an N*P = {np} covariance factorization per range cell \
                 (limit {AMPC_SIZE_LIMIT}); reduce waveform.N or cpi.P, drop ampc from \
                 the methods, or pass --allow-large-ampc"
            )));
        }
        Ok(())
    }

    fn check_cube(&self, cube: &DataCube) -> Result<()> {
        let c = &self.config;
        let checks = [
            ("cpi.P", c.cpi.pulses, cube.pulses()),
            ("cpi.L", c.cpi.range_cells, cube.range_cells()),
            ("waveform.N", c.waveform.samples, cube.waveform_len()),
            ("cpi.Q", c.cpi.doppler_cells, cube.doppler_cells()),
        ];
        for (field, expected, got) in checks {
            if expected != got {
                return Err(CliError::Config {
                    field: field.into(),
                    msg: format!("cube has {got}, config has {expected}"),
                });
            }
        }
        Ok(())
    }
}

/// Maps and diagnostics from one processing run.
#[derive(Debug, Clone)]
pub struct ProcessOutput {
    /// In the order requested.
    pub maps: Vec<RangeDopplerMap>,
    /// SPC & MTD map; the prior source and the `x-bar` of the error trace.
    pub reference: RangeDopplerMap,
    /// Prior used by the final adaptive pass.
    pub prior: PowerPrior,
    pub jrdap_factors: Option<Vec<JrdapFactors>>,
}

impl ProcessOutput {
    pub fn map(&self, method: Method) -> Option<&RangeDopplerMap> {
        self.maps.iter().find(|m| m.method() == method)
    }
}

pub fn process(
    setup: &Setup,
    cube: &DataCube,
    methods: &[Method],
    allow_large_ampc: bool,
) -> Result<ProcessOutput> {
    setup.check_cube(cube)?;
    if methods.contains(&Method::Ampc) {
        setup.check_ampc_size(allow_large_ampc)?;
    }
    let s = setup.waveform.samples();
    let noise = setup.config.noise_power();
    let reference = spc_mtd(cube, s, &setup.grid)?;
    let mut prior = estimate_prior(&reference, noise)?;

    let options = setup.jrdap_options();
    let mut ampc = None;
    let mut jrdap = None;
    let passes = setup.config.processing.prior_passes;
    for pass in 0..passes {
        if methods.contains(&Method::Ampc) {
            ampc = Some(ampc_map(&setup.model, cube, &prior)?);
        }
        if methods.contains(&Method::Jrdap) {
            jrdap = Some(jrdap_map_with_factors(&setup.model, cube, &prior, &options)?);
        }
        if pass + 1 < passes {
            let adaptive = jrdap.as_ref().map(|(m, _)| m).or(ampc.as_ref());
            match adaptive {
                Some(m) => prior = estimate_prior(m, noise)?,
                None => break,
            }
        }
    }

    let mut jrdap_factors = None;
    let mut maps = Vec::with_capacity(methods.len());
    for &m in methods {
        let map = match m {
            Method::SpcMtd => reference.clone(),
            Method::Jrdmf => jrdmf(cube, s, &setup.grid)?,
            Method::Ampc => ampc.take().expect("AMPC ran"),
            Method::Jrdap => {
                let (map, factors) = jrdap.take().expect("JRDAP ran");
                jrdap_factors = Some(factors);
                map
            }
        };
        maps.push(map);
    }
    let hash = setup.config.hash();
    for map in &mut maps {
        map.metadata.config_hash = Some(hash.clone());
        map.metadata.seed = Some(setup.seed);
    }
    Ok(ProcessOutput {
        maps,
        reference,
        prior,
        jrdap_factors,
    })
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub cube: Option<PathBuf>,
    pub allow_large_ampc: bool,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config_hash: String,
    seed: u64,
    command: &'a str,
    symbols: &'a [usize],
    dictionary_psl_db: Vec<f64>,
    clutter_patch_power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cube_sha256: Option<String>,
    files: Vec<String>,
    config: &'a SceneConfig,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes through `body`, mapping I/O failures to the file path.
fn write_artifact<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::result::Result<(), dfrc_core::Error>,
{
    let mut w = create(path)?;
    body(&mut w).map_err(|e| match e {
        dfrc_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::Core(other),
    })?;
    finish(path, w)
}

fn header(w: &mut impl Write, kind: &str, setup: &Setup) -> std::io::Result<()> {
    writeln!(w, "# {kind}")?;
    writeln!(w, "# config_hash: {}", setup.config.hash())?;
    writeln!(w, "# seed: {}", setup.seed)
}

fn cube_digest(cube: &DataCube) -> Result<String> {
    let mut bytes = Vec::new();
    cube.write_binary(&mut bytes)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_manifest(
    dir: &Path,
    setup: &Setup,
    command: &str,
    cube: Option<&DataCube>,
    mut files: Vec<String>,
) -> Result<Artifacts> {
    files.push("manifest.toml".into());
    let manifest = Manifest {
        config_hash: setup.config.hash(),
        seed: setup.seed,
        command,
        symbols: &setup.symbols,
        dictionary_psl_db: setup
            .design
            .dictionary
            .achieved_psl()
            .iter()
            .map(|p| 20.0 * p.log10())
            .collect(),
        clutter_patch_power: setup.scene.clutter.patch_power,
        cube_sha256: cube.map(cube_digest).transpose()?,
        files: files.clone(),
        config: &setup.config,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(Artifacts {
        dir: dir.to_path_buf(),
        files,
    })
}

fn write_dictionary_file(dir: &Path, setup: &Setup) -> Result<String> {
    let name = "dictionary.txt";
    write_artifact(&dir.join(name), |w| {
        header(w, "dictionary", setup)?;
        write_dictionary(&setup.design.dictionary, w)
    })?;
    Ok(name.into())
}

/// `design`: the weight dictionary plus a manifest.
pub fn run_design(setup: &Setup, dir: &Path) -> Result<Artifacts> {
    ensure_dir(dir)?;
    let files = vec![write_dictionary_file(dir, setup)?];
    write_manifest(dir, setup, "design", None, files)
}

/// `simulate`: dictionary, waveform and the synthesized cube.
pub fn run_simulate(setup: &Setup, dir: &Path) -> Result<(Artifacts, DataCube)> {
    ensure_dir(dir)?;
    let cube = setup.simulate()?;
    let mut files = vec![write_dictionary_file(dir, setup)?];
    write_artifact(&dir.join("waveform.txt"), |w| {
        header(w, "waveform", setup)?;
        setup.waveform.write_text(w)
    })?;
    files.push("waveform.txt".into());
    write_artifact(&dir.join("cube.bin"), |w| cube.write_binary(w))?;
    files.push("cube.bin".into());
    let artifacts = write_manifest(dir, setup, "simulate", Some(&cube), files)?;
    Ok((artifacts, cube))
}

pub fn load_cube(path: &Path) -> Result<DataCube> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    DataCube::read_binary(std::io::BufReader::new(file)).map_err(|e| match e {
        dfrc_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::Core(other),
    })
}

/// `process`: runs the configured methods on a simulated or supplied cube
/// and writes maps, prior, convergence traces and timings.
pub fn run_pipeline(setup: &Setup, dir: &Path, options: &RunOptions) -> Result<(Artifacts, ProcessOutput)> {
    ensure_dir(dir)?;
    let methods = setup.config.methods()?;
    if methods.contains(&Method::Ampc) {
        setup.check_ampc_size(options.allow_large_ampc)?;
    }
    let mut files = vec![write_dictionary_file(dir, setup)?];
    write_artifact(&dir.join("waveform.txt"), |w| {
        header(w, "waveform", setup)?;
        setup.waveform.write_text(w)
    })?;
    files.push("waveform.txt".into());

    let cube = match &options.cube {
        Some(path) => load_cube(path)?,
        None => {
            let cube = setup.simulate()?;
            write_artifact(&dir.join("cube.bin"), |w| cube.write_binary(w))?;
            files.push("cube.bin".into());
            cube
        }
    };

    let out = process(setup, &cube, &methods, options.allow_large_ampc)?;
    for map in &out.maps {
        let name = format!("map_{}.txt", map.method());
        write_artifact(&dir.join(&name), |w| map.write_text(w))?;
        files.push(name);
    }

    write_artifact(&dir.join("prior.txt"), |w| {
        header(w, "power prior rho(ell, q), linear; rows ell = 1..=L, columns q = 0..Q", setup)?;
        write_rows(w, out.prior.values(), out.prior.doppler_cells(), |v| format!("{v:.6e}"))?;
        Ok(())
    })?;
    files.push("prior.txt".into());

    if let Some(factors) = &out.jrdap_factors {
        write_artifact(&dir.join("convergence.txt"), |w| {
            write_convergence(w, setup, factors)?;
            Ok(())
        })?;
        files.push("convergence.txt".into());
        write_artifact(&dir.join("error_trace.txt"), |w| {
            write_error_trace(w, setup, &out, factors)?;
            Ok(())
        })?;
        files.push("error_trace.txt".into());
    }

    write_artifact(&dir.join("benchmark.txt"), |w| {
        header(w, "filter-only timing (synthesis and I/O excluded)", setup)?;
        writeln!(w, "method,cells,total_seconds,seconds_per_cell")?;
        for map in &out.maps {
            writeln!(
                w,
                "{},{},{:.6e},{:.6e}",
                map.method(),
                map.num_cells(),
                map.metadata.elapsed.as_secs_f64(),
                map.seconds_per_cell()
            )?;
        }
        Ok(())
    })?;
    files.push("benchmark.txt".into());

    let artifacts = write_manifest(dir, setup, "process", Some(&cube), files)?;
    Ok((artifacts, out))
}

fn write_rows(
    w: &mut impl Write,
    values: &[f64],
    cols: usize,
    fmt: impl Fn(f64) -> String,
) -> std::io::Result<()> {
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn write_convergence(w: &mut impl Write, setup: &Setup, factors: &[JrdapFactors]) -> std::io::Result<()> {
    let q_len = setup.grid.len();
    let eta = setup.config.processing.eta;
    header(w, "JRDAP convergence per cell", setup)?;
    let within = |k: usize| factors.iter().filter(|f| f.iterations_to(eta).is_some_and(|i| i <= k)).count();
    writeln!(
        w,
        "# cells {}; step <= {eta:e} by iteration 2: {}, 3: {}, at exit: {}",
        factors.len(),
        within(2),
        within(3),
        factors.iter().filter(|f| f.converged).count()
    )?;
    writeln!(w, "ell,q,iterations,converged,first_cost,final_cost,final_step")?;
    for (idx, f) in factors.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{:.9e},{:.9e},{:.3e}",
            idx / q_len + 1,
            idx % q_len,
            f.iterations_used,
            f.converged,
            f.cost_trace.first().copied().unwrap_or(0.0),
            f.cost_trace.last().copied().unwrap_or(0.0),
            f.step_norms.last().copied().unwrap_or(0.0),
        )?;
    }
    Ok(())
}

/// `e^i = |x-bar - x^i|` per iteration at every target cell, with `x-bar`
/// the SPC & MTD estimate.
fn write_error_trace(
    w: &mut impl Write,
    setup: &Setup,
    out: &ProcessOutput,
    factors: &[JrdapFactors],
) -> std::io::Result<()> {
    let q_len = setup.grid.len();
    header(w, "JRDAP estimation error per iteration at target cells", setup)?;
    writeln!(w, "ell,q,iteration,error,cost,step")?;
    for t in &setup.config.targets {
        let f = &factors[(t.range_cell - 1) * q_len + t.doppler_cell];
        let reference = out.reference.get(t.range_cell, t.doppler_cell);
        for (i, x) in f.estimates.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{:.9e},{:.9e},{:.3e}",
                t.range_cell,
                t.doppler_cell,
                i + 1,
                (reference - x).norm(),
                f.cost_trace[i],
                f.step_norms[i]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SceneConfig {
        let mut c = SceneConfig::validation_default();
        c.comm.sll_db_list = vec![-25.0];
        c.comm.phase_list = vec![0.0];
        c
    }

    #[test]
    fn ncbm_uses_first_entry_everywhere() {
        let mut c = small();
        c.comm.phase_list = vec![0.0, std::f64::consts::PI];
        c.comm.mode = TransmitMode::Ncbm;
        let setup = Setup::new(&c).unwrap();
        assert!(setup.symbols.iter().all(|&s| s == 0));
    }

    #[test]
    fn symbol_stream_does_not_reuse_scene_seed() {
        let mut c = small();
        c.comm.phase_list = vec![0.0, 1.0, 2.0, 3.0];
        let setup = Setup::new(&c).unwrap();
        assert_ne!(
            setup.symbols,
            dfrc_core::array_beam::random_symbols(4, c.cpi.pulses, c.seed)
        );
    }

    #[test]
    fn ampc_guard() {
        let c = SceneConfig::default();
        let design = Design::new(&small()).unwrap();
        // the guard reads only the sizes
        let mut setup = Setup::from_design(&small(), design, 1).unwrap();
        setup.config.waveform.samples = c.waveform.samples;
        setup.config.cpi.pulses = c.cpi.pulses;
        assert!(matches!(setup.check_ampc_size(false), Err(CliError::Guard(_))));
        assert!(setup.check_ampc_size(true).is_ok());
    }

    #[test]
    fn process_returns_requested_maps_in_order() {
        let setup = Setup::new(&small()).unwrap();
        let cube = setup.simulate().unwrap();
        let out = process(&setup, &cube, &[Method::Jrdap, Method::SpcMtd, Method::Ampc], false).unwrap();
        let order: Vec<Method> = out.maps.iter().map(|m| m.method()).collect();
        assert_eq!(order, vec![Method::Jrdap, Method::SpcMtd, Method::Ampc]);
        assert_eq!(out.jrdap_factors.as_ref().unwrap().len(), 16 * 8);
        assert_eq!(out.map(Method::SpcMtd).unwrap().estimates(), out.reference.estimates());
    }

    #[test]
    fn extra_prior_passes_change_the_adaptive_map() {
        let mut c = small();
        let setup = Setup::new(&c).unwrap();
        let cube = setup.simulate().unwrap();
        let one = process(&setup, &cube, &[Method::Jrdap], false).unwrap();
        c.processing.prior_passes = 2;
        let setup2 = Setup::from_design(&c, setup.design.clone(), c.seed).unwrap();
        let two = process(&setup2, &cube, &[Method::Jrdap], false).unwrap();
        assert_ne!(one.prior, two.prior);
        assert_ne!(one.maps[0].estimates(), two.maps[0].estimates());
    }

    #[test]
    fn rejects_mismatched_cube() {
        let setup = Setup::new(&small()).unwrap();
        let cube = DataCube::zeros(4, 10, 8, 8, 10);
        match process(&setup, &cube, &[Method::SpcMtd], false) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "cpi.L"),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
