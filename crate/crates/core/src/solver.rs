//! Assembled solver: mesh, operators, state, clock and diagnostics.

use crate::acoustics::{DgOperator, FieldState, MediumParams};
use crate::analysis::{EnergyMeter, EnergyMode, EnergyTrace};
use crate::error::{Error, Result};
use crate::mesh::{build_connectivity, geometric_factors, BoundaryKind, GeometricFactors, Mesh, Region};
use crate::pml::{build_sigma_nodal, AxisBox, DampingProfile, PhiCoupling, PmlState};
use crate::refelem::{build_reference_element, ReferenceElement};
use crate::scenario::{
    gaussian_initial_condition, PeriodicConvention, Source, SourceKind,
};
use crate::timeint::{compute_dt, LsrkIntegrator, SimClock};

#[derive(Debug, Clone)]
pub struct PmlSetup {
    /// Profiles along x, y, z.
    pub profiles: [DampingProfile; 3],
    /// Defaults to the bounding box of the interior elements.
    pub interior_box: Option<AxisBox>,
    pub coupling: PhiCoupling,
    /// Overrides the kind of boundary faces on layer elements.
    pub termination: Option<BoundaryKind>,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub order: usize,
    pub cfl: f64,
    pub medium: MediumParams,
    /// `None` runs the plain acoustic system with no auxiliary variables.
    pub pml: Option<PmlSetup>,
    pub energy_mode: EnergyMode,
    pub periodic_convention: PeriodicConvention,
}

impl SolverConfig {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            cfl: 0.95,
            medium: MediumParams::default(),
            pml: None,
            energy_mode: EnergyMode::NodalSum,
            periodic_convention: PeriodicConvention::Reduced,
        }
    }
}

pub struct Simulation {
    pub mesh: Mesh,
    pub elem: ReferenceElement,
    pub gf: GeometricFactors,
    pub operator: DgOperator,
    pub state: FieldState,
    pub pml: Option<PmlState>,
    pub clock: SimClock,
    pub medium: MediumParams,
    integrator: LsrkIntegrator,
    meter: EnergyMeter,
    /// Source profile and its timing, for periodic injection.
    periodic: Option<(Vec<f64>, Source, PeriodicConvention)>,
}

impl Simulation {
    /// Builds operators on `mesh` and a zero state; the clock runs to `final_time`.
    pub fn new(mut mesh: Mesh, config: &SolverConfig, final_time: f64) -> Result<Self> {
        config.medium.validate()?;
        if !(config.cfl > 0.0 && config.cfl.is_finite()) {
            return Err(Error::Config(format!("CFL must be positive, got {}", config.cfl)));
        }
        let elem = build_reference_element(config.order)?;
        if let Some(kind) = config.pml.as_ref().and_then(|p| p.termination) {
            mesh.set_boundary_kind(Region::Pml, kind);
        }
        let mesh = build_connectivity(mesh, &elem)?;
        let gf = geometric_factors(&mesh, &elem)?;
        let operator = DgOperator::new(&mesh, &gf, &elem, config.medium)?;
        let len = operator.len();

        let pml = match &config.pml {
            None => None,
            Some(setup) => {
                let ibox = match setup.interior_box {
                    Some(b) => b,
                    None => AxisBox::from_interior(&mesh)?,
                };
                let sigma = build_sigma_nodal(&mesh, &setup.profiles, &ibox)?;
                Some(PmlState::new(&mesh, sigma)?)
            }
        };
        let coupling = config.pml.as_ref().map(|p| p.coupling).unwrap_or_default();
        let integrator = LsrkIntegrator::new(len, pml.is_some(), coupling)?;
        let dt = compute_dt(&gf, &config.medium, config.order, config.cfl);
        let clock = SimClock::new(dt, final_time)?;
        let meter = EnergyMeter::new(&mesh, &elem, &config.medium, config.energy_mode);
        log::info!(
            "{} elements ({} pml), order {}, dt {:.6e} s",
            mesh.num_elements(),
            mesh.count_region(Region::Pml),
            config.order,
            dt
        );
        Ok(Self {
            mesh,
            elem,
            gf,
            operator,
            state: FieldState::zeros(len),
            pml,
            clock,
            medium: config.medium,
            integrator,
            meter,
            periodic: None,
        })
    }

    pub fn node_coords(&self) -> &[[f64; 3]] {
        &self
            .mesh
            .node_maps()
            .expect("connectivity is built on construction")
            .node_coords
    }

    /// Installs the source: a pulse sets the initial pressure, a periodic
    /// source starts from rest and injects after every step.
    pub fn apply_source(&mut self, source: &Source, convention: PeriodicConvention) -> Result<()> {
        source.validate()?;
        match source.kind {
            SourceKind::InitialPulse => {
                self.state = gaussian_initial_condition(source, &self.medium, self.node_coords());
                self.periodic = None;
            }
            SourceKind::Periodic => {
                self.state = FieldState::zeros(self.operator.len());
                let profile = self
                    .node_coords()
                    .iter()
                    .map(|&x| source.profile(&self.medium, x))
                    .collect();
                self.periodic = Some((profile, *source, convention));
            }
        }
        if let Some(p) = self.pml.as_mut() {
            p.phi.iter_mut().for_each(|f| f.fill(0.0));
        }
        Ok(())
    }

    /// Adds a time at which the clock lands exactly.
    pub fn add_stop(&mut self, t: f64) {
        self.clock = self.clock.clone().with_stop(t);
    }

    pub fn energy(&self) -> f64 {
        self.meter.measure(&self.state)
    }

    pub fn energy_mode(&self) -> EnergyMode {
        self.meter.mode()
    }

    /// Bytes held by state, auxiliary and residual arrays.
    pub fn storage_bytes(&self) -> usize {
        let len = self.operator.len();
        let state = 4 + if self.pml.is_some() { 3 } else { 0 };
        state * len * std::mem::size_of::<f64>() + self.integrator.register_bytes()
    }

    /// One clock step, then periodic injection using the step's start time.
    pub fn step(&mut self) -> Result<()> {
        let t0 = self.clock.time;
        let dt = self.clock.next_dt();
        self.integrator
            .step(&self.operator, &mut self.state, self.pml.as_mut(), dt, self.clock.step_index)?;
        if let Some((profile, source, convention)) = &self.periodic {
            let s = convention.phase(source.peak_frequency, t0).cos();
            self.state
                .pressure
                .iter_mut()
                .zip(profile)
                .for_each(|(p, q)| *p += s * q);
        }
        self.clock.advance();
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        while !self.clock.done() {
            self.step()?;
        }
        Ok(())
    }

    /// Runs to the end, sampling energy at the start, every `every` steps and
    /// at every clock stop. `observe` sees the simulation after each sample.
    pub fn run_traced(
        &mut self,
        every: usize,
        mut observe: impl FnMut(&Simulation) -> Result<()>,
    ) -> Result<EnergyTrace> {
        let mut trace = EnergyTrace::new(self.energy_mode());
        trace.push(self.clock.time, self.energy())?;
        observe(self)?;
        while !self.clock.done() {
            self.step()?;
            let periodic = every > 0 && self.clock.step_index % every == 0;
            if periodic || self.clock.at_stop() {
                trace.push(self.clock.time, self.energy())?;
                observe(self)?;
            }
        }
        Ok(trace)
    }
}
