use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acoustics::MediumParams;
use crate::error::{Error, Result};
use crate::mesh::BoundaryKind;

use super::{frequency_for_wavelength, Source, SourceKind};

/// Peak wavelengths (m) of the standard experiments; frequencies follow as `c/λ`.
pub const STANDARD_WAVELENGTHS: [f64; 3] = [1.0, 2.0 / 3.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalTime {
    /// Multiple of the round trip `(L + 2δ)/c` of the interior box.
    RoundTrip(f64),
    Seconds(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSetup {
    pub source: Source,
    /// Layer width, m.
    pub pml_width: f64,
    /// Boundary kind forced on the outer faces of layer elements; `None` keeps
    /// the mesh tags.
    pub termination: Option<BoundaryKind>,
    pub final_time: FinalTime,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup;
}

fn source(kind: SourceKind, medium: &MediumParams, wavelength: f64, position: [f64; 3]) -> Source {
    Source {
        kind,
        peak_frequency: frequency_for_wavelength(medium, wavelength),
        amplitude: 1.0,
        position,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CubePulse;

impl Scenario for CubePulse {
    fn name(&self) -> &'static str {
        "cube_pulse"
    }

    fn describe(&self) -> &'static str {
        "Gaussian pulse at the centre of a cube wrapped in a layer one wavelength wide"
    }

    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup {
        ScenarioSetup {
            source: source(SourceKind::InitialPulse, medium, wavelength, [0.0; 3]),
            pml_width: wavelength,
            termination: None,
            final_time: FinalTime::RoundTrip(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ElongatedGrazing;

impl Scenario for ElongatedGrazing {
    fn name(&self) -> &'static str {
        "elongated_grazing"
    }

    fn describe(&self) -> &'static str {
        "15 m x 5 m x 5 m interior, pulse shifted 5 m along x, absorbing termination"
    }

    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup {
        ScenarioSetup {
            source: source(SourceKind::InitialPulse, medium, wavelength, [-5.0, 0.0, 0.0]),
            pml_width: wavelength,
            termination: Some(BoundaryKind::Abc),
            final_time: FinalTime::Seconds(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LongPulse;

impl Scenario for LongPulse {
    fn name(&self) -> &'static str {
        "long_pulse"
    }

    fn describe(&self) -> &'static str {
        "Initial pulse followed for 2 s with an absorbing termination"
    }

    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup {
        ScenarioSetup {
            source: source(SourceKind::InitialPulse, medium, wavelength, [0.0; 3]),
            pml_width: wavelength,
            termination: Some(BoundaryKind::Abc),
            final_time: FinalTime::Seconds(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LongPeriodic;

impl Scenario for LongPeriodic {
    fn name(&self) -> &'static str {
        "long_periodic"
    }

    fn describe(&self) -> &'static str {
        "Gaussian source re-injected every step with a cosine envelope, 2 s"
    }

    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup {
        ScenarioSetup {
            source: source(SourceKind::Periodic, medium, wavelength, [0.0; 3]),
            pml_width: wavelength,
            termination: Some(BoundaryKind::Abc),
            final_time: FinalTime::Seconds(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Barrier;

impl Scenario for Barrier {
    fn name(&self) -> &'static str {
        "barrier"
    }

    fn describe(&self) -> &'static str {
        "Pulse next to reflective ground and obstacle surfaces taken from the mesh, 2 s"
    }

    fn setup(&self, medium: &MediumParams, wavelength: f64) -> ScenarioSetup {
        ScenarioSetup {
            source: source(SourceKind::InitialPulse, medium, wavelength, [0.0; 3]),
            pml_width: wavelength,
            termination: None,
            final_time: FinalTime::Seconds(2.0),
        }
    }
}

#[derive(Clone)]
pub struct ScenarioRegistry {
    presets: BTreeMap<&'static str, Arc<dyn Scenario>>,
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut reg = Self {
            presets: BTreeMap::new(),
        };
        reg.register(Arc::new(CubePulse));
        reg.register(Arc::new(ElongatedGrazing));
        reg.register(Arc::new(LongPulse));
        reg.register(Arc::new(LongPeriodic));
        reg.register(Arc::new(Barrier));
        reg
    }
}

impl ScenarioRegistry {
    pub fn register(&mut self, preset: Arc<dyn Scenario>) {
        self.presets.insert(preset.name(), preset);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Scenario>> {
        self.presets.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown scenario `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.presets.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_presets() {
        let reg = ScenarioRegistry::default();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(
            names,
            ["barrier", "cube_pulse", "elongated_grazing", "long_periodic", "long_pulse"]
        );
        assert!(reg.get("tunnel").is_err());
    }

    #[test]
    fn wavelength_keying() {
        let m = MediumParams::default();
        let reg = ScenarioRegistry::default();
        let cube = reg.get("cube_pulse").unwrap();
        for lambda in STANDARD_WAVELENGTHS {
            let s = cube.setup(&m, lambda);
            assert!((s.source.peak_frequency * lambda - 343.0).abs() < 1e-9);
            assert_eq!(s.pml_width, lambda);
        }
        let s = reg.get("elongated_grazing").unwrap().setup(&m, 1.0);
        assert_eq!(s.source.position, [-5.0, 0.0, 0.0]);
        assert_eq!(s.termination, Some(BoundaryKind::Abc));
        let p = reg.get("long_periodic").unwrap().setup(&m, 1.0);
        assert_eq!(p.source.kind, SourceKind::Periodic);
    }
}
