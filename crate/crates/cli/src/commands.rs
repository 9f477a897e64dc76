use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use dgpml::analysis::{damping_sweep, write_energy_csv, write_sweep_csv, EnergyTrace, RowStatus, SweepTable};
use dgpml::mesh::{parse_gmsh, BoundaryKind, Mesh, Region};
use dgpml::pml::{reference_sigma, AxisBox, DampingProfile, DampingShape, ShapeRegistry};
use dgpml::scenario::{FinalTime, ScenarioRegistry, Source};
use dgpml::solver::{PmlSetup, Simulation, SolverConfig};

use crate::config::{FinalTimeKeyword, FinalTimeSpec, PmlConfig, SigmaSpec, SimConfig, SweepConfig};
use crate::error::{AtStage, CliError, Failure, Stage};
use crate::output::{self, Manifest, RunInfo, SweepInfo};

/// Config, mesh and every derived quantity a command needs.
pub struct Plan {
    pub config: SimConfig,
    pub out_dir: PathBuf,
    mesh: Mesh,
    mesh_file: PathBuf,
    mesh_hash: String,
    source: Source,
    preset_time: Option<FinalTime>,
    termination: Option<BoundaryKind>,
    layer: Option<Layer>,
    t_f: f64,
}

/// Resolved absorbing layer.
struct Layer {
    config: PmlConfig,
    shape: Arc<dyn DampingShape>,
    widths: [f64; 3],
    sigma_max: [f64; 3],
}

impl Layer {
    fn profiles(&self, sigma_max: [f64; 3]) -> Result<[DampingProfile; 3], dgpml::Error> {
        let p = |d: usize| DampingProfile::new(self.shape.clone(), sigma_max[d], self.widths[d]);
        Ok([p(0)?, p(1)?, p(2)?])
    }
}

/// Reads and checks the config; `dir` is where a failure marker can go.
pub fn load(config_path: &Path, out_flag: Option<&Path>) -> Result<(SimConfig, PathBuf), (Option<PathBuf>, Failure)> {
    let base = config_path.parent().unwrap_or(Path::new("."));
    let fallback = out_flag.map(Path::to_path_buf);
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::io(config_path, e))
        .at(Stage::Config)
        .map_err(|f| (fallback.clone(), f))?;
    let config = SimConfig::parse(&text).at(Stage::Config).map_err(|f| (fallback.clone(), f))?;
    let out_dir = output::output_dir(out_flag, &config, base);
    config
        .validate()
        .at(Stage::Config)
        .map_err(|f| (Some(out_dir.clone()), f))?;
    Ok((config, out_dir))
}

fn measured_widths(mesh: &Mesh, interior: &AxisBox) -> [f64; 3] {
    match mesh.region_bounding_box(Region::Pml) {
        None => [0.0; 3],
        Some((lo, hi)) => {
            std::array::from_fn(|d| (interior.min[d] - lo[d]).max(hi[d] - interior.max[d]).max(0.0))
        }
    }
}

impl Plan {
    pub fn new(config: SimConfig, out_dir: PathBuf, base: &Path) -> Result<Self, Failure> {
        if config.order == 1 && config.cfl > 0.3 {
            log::warn!("order 1 is usually unstable above cfl 0.3 with the 1/N^2 step rule; cfl = {}", config.cfl);
        }
        let mesh_file = config.mesh_path(base);
        if !mesh_file.is_file() {
            return Err(CliError::Config(format!("mesh file {} does not exist", mesh_file.display())))
                .at(Stage::Config);
        }
        let bytes = fs::read(&mesh_file).map_err(|e| CliError::io(&mesh_file, e)).at(Stage::Mesh)?;
        let mesh_hash = output::blob_hash(&bytes);
        let text = String::from_utf8(bytes)
            .map_err(|_| dgpml::mesh::MeshError::Parse {
                line: 0,
                message: "mesh file is not UTF-8 text".into(),
            })
            .map_err(dgpml::Error::from)
            .at(Stage::Mesh)?;
        let mesh = parse_gmsh(&text).map_err(dgpml::Error::from).at(Stage::Mesh)?;
        let interior = AxisBox::from_interior(&mesh).at(Stage::Mesh)?;

        let (source, preset_time, preset_termination) = match (&config.scenario, &config.source) {
            (Some(s), _) => {
                let preset = ScenarioRegistry::default().get(&s.preset).at(Stage::Config)?;
                let setup = preset.setup(&config.medium, s.wavelength);
                (setup.source, Some(setup.final_time), setup.termination)
            }
            (None, Some(src)) => (*src, None, None),
            (None, None) => unreachable!("validated"),
        };

        let has_layer = mesh.count_region(Region::Pml) > 0;
        let layer = match (&config.pml, has_layer) {
            (Some(_), false) => {
                return Err(CliError::Config("[pml] given but the mesh has no pml elements".into()))
                    .at(Stage::Config)
            }
            (None, false) => None,
            (pml, true) => {
                let pml = pml.clone().unwrap_or_default();
                let shape = ShapeRegistry::default().get(&pml.shape).at(Stage::Config)?;
                let widths = pml.widths.unwrap_or_else(|| measured_widths(&mesh, &interior));
                let positive = widths.iter().cloned().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
                if !positive.is_finite() {
                    return Err(CliError::Config("could not measure a positive layer width".into()))
                        .at(Stage::Mesh);
                }
                let sigma_max = std::array::from_fn(|d| {
                    if widths[d] <= 0.0 {
                        return 0.0;
                    }
                    match pml.sigma_max {
                        SigmaSpec::Absolute(s) => s,
                        SigmaSpec::Multiplier(m) => m * reference_sigma(&config.medium, widths[d], pml.reflection),
                        SigmaSpec::TargetArea(a) => a / (shape.area_fraction() * widths[d]),
                    }
                });
                // Axes without a layer still need a valid profile; σ is zero there.
                let widths = widths.map(|w| if w > 0.0 { w } else { positive });
                Some(Layer {
                    config: pml,
                    shape,
                    widths,
                    sigma_max,
                })
            }
        };

        let termination = layer
            .as_ref()
            .and_then(|l| l.config.termination)
            .or(preset_termination.filter(|_| layer.is_some()));

        // Round trip across the narrowest interior extent and its layer.
        let axis = (0..3)
            .min_by(|&a, &b| interior.extent(a).total_cmp(&interior.extent(b)))
            .unwrap();
        let delta = layer.as_ref().map_or(0.0, |l| l.widths[axis]);
        let t_f = dgpml::analysis::t_f(interior.extent(axis), delta, &config.medium);

        Ok(Self {
            config,
            out_dir,
            mesh,
            mesh_file,
            mesh_hash,
            source,
            preset_time,
            termination,
            layer,
            t_f,
        })
    }

    fn final_time(&self) -> f64 {
        match (self.config.final_time, self.preset_time) {
            (Some(FinalTimeSpec::Seconds(t)), _) => t,
            (Some(FinalTimeSpec::Keyword(FinalTimeKeyword::RoundTrip)), _) | (None, None) => self.t_f,
            (None, Some(FinalTime::RoundTrip(m))) => m * self.t_f,
            (None, Some(FinalTime::Seconds(t))) => t,
        }
    }

    fn solver_config(&self, sigma_max: Option<[f64; 3]>, termination: Option<BoundaryKind>) -> Result<SolverConfig, dgpml::Error> {
        let c = &self.config;
        let pml = match &self.layer {
            None => None,
            Some(l) => Some(PmlSetup {
                profiles: l.profiles(sigma_max.unwrap_or(l.sigma_max))?,
                interior_box: None,
                coupling: l.config.phi_coupling,
                termination,
            }),
        };
        Ok(SolverConfig {
            order: c.order,
            cfl: c.cfl,
            medium: c.medium,
            pml,
            energy_mode: c.energy_mode,
            periodic_convention: c.periodic_convention,
        })
    }

    fn simulation(&self, sigma_max: Option<[f64; 3]>, termination: Option<BoundaryKind>, final_time: f64) -> Result<Simulation, dgpml::Error> {
        let cfg = self.solver_config(sigma_max, termination)?;
        let mut sim = Simulation::new(self.mesh.clone(), &cfg, final_time)?;
        if self.t_f < final_time {
            sim.add_stop(self.t_f);
        }
        sim.apply_source(&self.source, self.config.periodic_convention)?;
        Ok(sim)
    }

    fn run_info(&self, command: &'static str, sim: &Simulation, sigma_max: [f64; 3], termination: Option<BoundaryKind>) -> RunInfo {
        RunInfo {
            command,
            version: env!("CARGO_PKG_VERSION"),
            mesh_file: self.mesh_file.clone(),
            mesh_blob_sha256: self.mesh_hash.clone(),
            elements: sim.mesh.num_elements(),
            interior_elements: sim.mesh.count_region(Region::Interior),
            pml_elements: sim.mesh.count_region(Region::Pml),
            nodes_per_element: sim.elem.num_nodes,
            threads: rayon::current_num_threads(),
            dt: sim.clock.dt,
            steps: sim.clock.num_steps(),
            final_time: sim.clock.final_time,
            t_f: self.t_f,
            source: self.source,
            pml_widths: self.layer.as_ref().map_or([0.0; 3], |l| l.widths),
            sigma_max,
            termination,
            initial_energy: None,
            final_energy: None,
            energy_samples: None,
            snapshots: None,
        }
    }
}

pub fn run(plan: &Plan) -> Result<(), Failure> {
    let cfg = &plan.config;
    let sigma_max = plan.layer.as_ref().map_or([0.0; 3], |l| l.sigma_max);
    let mut sim = plan
        .simulation(None, plan.termination, plan.final_time())
        .at(Stage::Setup)?;
    let mut info = plan.run_info("run", &sim, sigma_max, plan.termination);
    log::info!("{} steps to t = {:.6e} s", info.steps, info.final_time);
    output::create_dir(&plan.out_dir).at(Stage::Output)?;

    let started = Instant::now();
    let mut trace = EnergyTrace::new(cfg.energy_mode);
    trace.push(sim.clock.time, sim.energy()).at(Stage::Run)?;
    let mut snapshots = 0;
    let mut snapshot = |sim: &Simulation| -> Result<(), Failure> {
        output::write_snapshot(&plan.out_dir, sim.clock.step_index, sim.node_coords(), &sim.state).at(Stage::Output)?;
        snapshots += 1;
        Ok(())
    };
    if cfg.snapshot_every > 0 {
        snapshot(&sim)?;
    }
    while !sim.clock.done() {
        sim.step().at(Stage::Run)?;
        let n = sim.clock.step_index;
        if n % cfg.energy_every == 0 || sim.clock.at_stop() {
            trace.push(sim.clock.time, sim.energy()).at(Stage::Run)?;
        }
        if cfg.snapshot_every > 0 && (n % cfg.snapshot_every == 0 || sim.clock.done()) {
            snapshot(&sim)?;
        }
    }
    log::info!(
        "{} steps in {:.2} s, final energy {:.6e}",
        sim.clock.step_index,
        started.elapsed().as_secs_f64(),
        sim.energy()
    );

    write_energy_csv(plan.out_dir.join(output::ENERGY_TRACE), &trace).at(Stage::Output)?;
    info.initial_energy = trace.energy.first().copied();
    info.final_energy = trace.last().map(|(_, e)| e);
    info.energy_samples = Some(trace.len());
    info.snapshots = (cfg.snapshot_every > 0).then_some(snapshots);
    let manifest = Manifest {
        run: info,
        sweep: None,
        config: cfg,
    };
    output::write_manifest(&plan.out_dir, &manifest).at(Stage::Output)
}

pub fn sweep(plan: &Plan) -> Result<SweepTable, Failure> {
    let cfg = &plan.config;
    let Some(layer) = &plan.layer else {
        return Err(CliError::Config("a sweep needs a mesh with pml elements".into())).at(Stage::Config);
    };
    if plan.termination.is_some_and(|t| t != BoundaryKind::Reflective) {
        log::warn!("sweep forces a reflective layer termination; the configured termination is ignored");
    }
    match cfg.final_time {
        Some(FinalTimeSpec::Seconds(t)) if t != plan.t_f => {
            log::warn!("sweep samples at t_f = {:.6e} s; final_time = {t} is ignored", plan.t_f)
        }
        _ => {}
    }
    let termination = Some(BoundaryKind::Reflective);
    let sweep_cfg = cfg.sweep.clone().unwrap_or(SweepConfig {
        multipliers: crate::config::DEFAULT_MULTIPLIERS.to_vec(),
    });

    // σ₀ ∝ 1/δ, so one multiplier gives every axis the same damping area.
    let sigma0 = layer.widths.map(|w| reference_sigma(&cfg.medium, w, layer.config.reflection));
    let width = layer.widths[0];
    let mut first: Option<Simulation> = None;
    let table = damping_sweep(
        layer.shape.clone(),
        width,
        sigma0[0],
        &sweep_cfg.multipliers,
        None,
        |profile| {
            let m = if sigma0[0] > 0.0 { profile.sigma_max / sigma0[0] } else { 0.0 };
            let sigma_max = sigma0.map(|s| m * s);
            let mut sim = plan.simulation(Some(sigma_max), termination, plan.t_f)?;
            sim.run()?;
            let e = sim.energy();
            log::info!("sigma_max {:.4e}: E(t_f) = {e:.6e}", profile.sigma_max);
            first.get_or_insert(sim);
            Ok(e)
        },
    )
    .at(Stage::Run)?;

    output::create_dir(&plan.out_dir).at(Stage::Output)?;
    write_sweep_csv(plan.out_dir.join(output::SWEEP_TABLE), &table).at(Stage::Output)?;
    let sim = match first {
        Some(s) => s,
        None => plan.simulation(None, termination, plan.t_f).at(Stage::Setup)?,
    };
    let mut info = plan.run_info("sweep", &sim, [0.0; 3], termination);
    info.final_time = plan.t_f;
    let manifest = Manifest {
        run: info,
        sweep: Some(SweepInfo {
            shape: table.shape.clone(),
            width,
            sigma0: sigma0[0],
            multipliers: table.rows.iter().map(|r| r.multiplier).collect(),
            baseline_energy: table.baseline_energy,
            rows: table.rows.len(),
            failed_rows: table.rows.iter().filter(|r| r.status == RowStatus::Failed).count(),
        }),
        config: cfg,
    };
    output::write_manifest(&plan.out_dir, &manifest).at(Stage::Output)?;
    Ok(table)
}
