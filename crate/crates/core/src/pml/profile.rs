//! Damping ramps across the absorbing layer.
//!
//! A shape is a normalized ramp `ζ(ξ)` on `ξ ∈ [0, 1]` with `ζ(0) = 0`,
//! `ζ'(0) = 0`, `ζ(1) = 1`, non-decreasing. Shapes are registered by name and
//! picked from configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::acoustics::MediumParams;
use crate::error::{Error, Result};

pub trait DampingShape: Send + Sync {
    fn name(&self) -> &'static str;
    fn ramp(&self, xi: f64) -> f64;
    /// `∫₀¹ ζ(ξ) dξ`.
    fn area_fraction(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl DampingShape for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn ramp(&self, xi: f64) -> f64 {
        xi * xi
    }

    fn area_fraction(&self) -> f64 {
        1.0 / 3.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearSine;

impl DampingShape for LinearSine {
    fn name(&self) -> &'static str {
        "linear_sine"
    }

    fn ramp(&self, xi: f64) -> f64 {
        xi - (2.0 * PI * xi).sin() / (2.0 * PI)
    }

    fn area_fraction(&self) -> f64 {
        0.5
    }
}

/// Checks the interface and endpoint constraints on a sampled ramp.
pub fn validate_shape(shape: &dyn DampingShape) -> Result<()> {
    let bad = |what: &str| {
        Err(Error::Config(format!("damping shape `{}` violates {what}", shape.name())))
    };
    if shape.ramp(0.0).abs() > 1e-14 {
        return bad("zeta(0) = 0");
    }
    if (shape.ramp(1.0) - 1.0).abs() > 1e-12 {
        return bad("zeta(1) = 1");
    }
    let eps = 1e-6;
    if shape.ramp(eps) / eps > 10.0 * eps {
        return bad("zero slope at the interface");
    }
    let mut prev = 0.0;
    for i in 1..=1000 {
        let z = shape.ramp(i as f64 / 1000.0);
        if z < prev - 1e-14 {
            return bad("monotonicity");
        }
        prev = z;
    }
    Ok(())
}

#[derive(Clone)]
pub struct ShapeRegistry {
    shapes: BTreeMap<&'static str, Arc<dyn DampingShape>>,
}

impl Default for ShapeRegistry {
    fn default() -> Self {
        let mut reg = Self {
            shapes: BTreeMap::new(),
        };
        reg.register(Arc::new(Quadratic)).expect("builtin shape is valid");
        reg.register(Arc::new(LinearSine)).expect("builtin shape is valid");
        reg
    }
}

impl ShapeRegistry {
    pub fn register(&mut self, shape: Arc<dyn DampingShape>) -> Result<()> {
        validate_shape(shape.as_ref())?;
        self.shapes.insert(shape.name(), shape);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DampingShape>> {
        self.shapes.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown damping shape `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.shapes.keys().copied()
    }
}

/// Ramp, peak value and layer width along one direction.
#[derive(Clone)]
pub struct DampingProfile {
    pub shape: Arc<dyn DampingShape>,
    pub sigma_max: f64,
    pub width: f64,
}

impl fmt::Debug for DampingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DampingProfile")
            .field("shape", &self.shape.name())
            .field("sigma_max", &self.sigma_max)
            .field("width", &self.width)
            .finish()
    }
}

impl DampingProfile {
    pub fn new(shape: Arc<dyn DampingShape>, sigma_max: f64, width: f64) -> Result<Self> {
        if !(sigma_max >= 0.0 && sigma_max.is_finite()) {
            return Err(Error::Config(format!("sigma_max must be finite and >= 0, got {sigma_max}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!("layer width must be positive, got {width}")));
        }
        Ok(Self {
            shape,
            sigma_max,
            width,
        })
    }

    pub fn quadratic(sigma_max: f64, width: f64) -> Result<Self> {
        Self::new(Arc::new(Quadratic), sigma_max, width)
    }

    pub fn linear_sine(sigma_max: f64, width: f64) -> Result<Self> {
        Self::new(Arc::new(LinearSine), sigma_max, width)
    }
}

/// Whether `x` lies in `[0, δ]` up to roundoff; returns the clamped coordinate.
pub(crate) fn clamp_depth(profile: &DampingProfile, x: f64) -> Result<(f64, bool)> {
    let tol = 1e-9 * profile.width;
    if (0.0..=profile.width).contains(&x) {
        Ok((x, false))
    } else if x >= -tol && x <= profile.width + tol {
        Ok((x.clamp(0.0, profile.width), true))
    } else {
        Err(Error::Config(format!(
            "depth {x} lies outside the damping layer [0, {}]",
            profile.width
        )))
    }
}

/// `σ(x)` at depth `x` into the layer.
pub fn eval_damping(profile: &DampingProfile, x: f64) -> Result<f64> {
    let (x, clamped) = clamp_depth(profile, x)?;
    if clamped {
        log::warn!("damping depth clamped into [0, {}]", profile.width);
    }
    Ok(profile.sigma_max * profile.shape.ramp(x / profile.width))
}

/// `σ₀ = -(c/2) ln(R) / δ`.
pub fn reference_sigma(medium: &MediumParams, delta: f64, reflection_factor: f64) -> f64 {
    -0.5 * medium.sound_speed * reflection_factor.ln() / delta
}

/// `∫₀^δ σ(x) dx`.
pub fn damping_area(profile: &DampingProfile) -> f64 {
    profile.shape.area_fraction() * profile.sigma_max * profile.width
}
