//! Gaussian sources, the free-space reference solution and named experiment
//! presets.

mod presets;

use serde::{Deserialize, Serialize};

pub use presets::{
    Barrier, CubePulse, ElongatedGrazing, FinalTime, LongPeriodic, LongPulse, Scenario,
    ScenarioRegistry, ScenarioSetup, STANDARD_WAVELENGTHS,
};

use crate::acoustics::{FieldState, MediumParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    InitialPulse,
    Periodic,
}

/// How the periodic source phase is computed from `f_peak · t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicConvention {
    /// `cos(f t / 2π)`.
    #[default]
    Reduced,
    /// `cos(2π f t)`.
    Angular,
}

impl PeriodicConvention {
    pub fn phase(self, f_peak: f64, t: f64) -> f64 {
        match self {
            Self::Reduced => f_peak * t / (2.0 * std::f64::consts::PI),
            Self::Angular => 2.0 * std::f64::consts::PI * f_peak * t,
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    #[serde(default)]
    pub kind: SourceKind,
    /// Hz.
    pub peak_frequency: f64,
    /// Pa.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// m.
    #[serde(default)]
    pub position: [f64; 3],
}

impl Source {
    pub fn pulse(peak_frequency: f64, position: [f64; 3]) -> Self {
        Self {
            kind: SourceKind::InitialPulse,
            peak_frequency,
            amplitude: 1.0,
            position,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_frequency > 0.0 && self.peak_frequency.is_finite()) {
            return Err(Error::Config(format!(
                "peak frequency must be positive, got {}",
                self.peak_frequency
            )));
        }
        if !self.amplitude.is_finite() || self.position.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("source amplitude and position must be finite".into()));
        }
        Ok(())
    }

    /// Gaussian width `ω = c / (π √2 f_peak)`.
    pub fn width(&self, medium: &MediumParams) -> f64 {
        medium.sound_speed / (std::f64::consts::PI * std::f64::consts::SQRT_2 * self.peak_frequency)
    }

    pub fn distance(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.position[0], x[1] - self.position[1], x[2] - self.position[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// `p(x, 0) = P₀ exp(-r²/ω²)`.
    pub fn profile(&self, medium: &MediumParams, x: [f64; 3]) -> f64 {
        let w = self.width(medium);
        let r = self.distance(x);
        self.amplitude * (-(r * r) / (w * w)).exp()
    }
}

/// Peak frequency whose wavelength is `lambda`.
pub fn frequency_for_wavelength(medium: &MediumParams, lambda: f64) -> f64 {
    medium.sound_speed / lambda
}

/// Gaussian pressure at rest; velocity zero.
pub fn gaussian_initial_condition(
    source: &Source,
    medium: &MediumParams,
    node_coords: &[[f64; 3]],
) -> FieldState {
    let mut u = FieldState::zeros(node_coords.len());
    for (p, &x) in u.pressure.iter_mut().zip(node_coords) {
        *p = source.profile(medium, x);
    }
    u
}

/// `weight · p(x, 0) · cos(phase(f_peak, t))` at every node.
pub fn periodic_source_increment(
    source: &Source,
    medium: &MediumParams,
    node_coords: &[[f64; 3]],
    time: f64,
    weight: f64,
    convention: PeriodicConvention,
) -> Vec<f64> {
    let s = weight * convention.phase(source.peak_frequency, time).cos();
    node_coords
        .iter()
        .map(|&x| s * source.profile(medium, x))
        .collect()
}

/// `h(u) = u e^{-u²}` and its first four derivatives.
fn h_derivatives(u: f64) -> [f64; 5] {
    let e = (-u * u).exp();
    let u2 = u * u;
    [
        u * e,
        (1.0 - 2.0 * u2) * e,
        (-6.0 * u + 4.0 * u2 * u) * e,
        (-6.0 + 24.0 * u2 - 8.0 * u2 * u2) * e,
        (60.0 * u - 80.0 * u2 * u + 16.0 * u2 * u2 * u) * e,
    ]
}

/// Free-space pressure and radial velocity at distance `r` and time `t` for a
/// unit-amplitude Gaussian of width `w`.
fn spherical_pulse(r: f64, t: f64, c: f64, rho: f64, w: f64) -> (f64, f64) {
    let a = c * t;
    let ua = a / w;
    let p = if r < 1e-6 * w {
        let h = h_derivatives(ua);
        h[1] + r * r / (w * w) * h[3] / 6.0
    } else {
        let (m, pl) = (r - a, r + a);
        let (gm, gp) = ((-(m * m) / (w * w)).exp(), (-(pl * pl) / (w * w)).exp());
        (m * gm + pl * gp) / (2.0 * r)
    };
    // The near-field terms cancel like (w/r)² eps; switch to the series earlier.
    let v = if r < 1e-3 * w {
        let h = h_derivatives(ua);
        -(r * h[2] / (3.0 * w) + r.powi(3) * h[4] / (30.0 * w.powi(3))) / (rho * c)
    } else {
        let (m, pl) = (r - a, r + a);
        let (gm, gp) = ((-(m * m) / (w * w)).exp(), (-(pl * pl) / (w * w)).exp());
        let near = w * w / (2.0 * r);
        ((near + m) * gm - (near + pl) * gp) / (2.0 * rho * c * r)
    };
    (p, v)
}

/// Exact free-space field of an initial Gaussian pulse, valid until the
/// wavefront meets any boundary.
pub fn analytic_solution(
    source: &Source,
    medium: &MediumParams,
    node_coords: &[[f64; 3]],
    time: f64,
) -> FieldState {
    let w = source.width(medium);
    let (c, rho) = (medium.sound_speed, medium.density);
    let mut u = FieldState::zeros(node_coords.len());
    for (g, &x) in node_coords.iter().enumerate() {
        let r = source.distance(x);
        let (p, vr) = spherical_pulse(r, time, c, rho, w);
        // Small-r series give vr/r in closed form; direction via (x - x_s)/r.
        let dir = if r > 0.0 {
            [0, 1, 2].map(|d| (x[d] - source.position[d]) / r)
        } else {
            [0.0; 3]
        };
        u.set_node(
            g,
            [
                source.amplitude * p,
                source.amplitude * vr * dir[0],
                source.amplitude * vr * dir[1],
                source.amplitude * vr * dir[2],
            ],
        );
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::default()
    }

    #[test]
    fn pulse_width_for_343_hz() {
        let s = Source::pulse(343.0, [0.0; 3]);
        let w = s.width(&medium());
        assert!((w - 1.0 / (std::f64::consts::PI * 2f64.sqrt())).abs() < 1e-15);
        assert!((w - 0.2251).abs() < 1e-4);
    }

    #[test]
    fn initial_condition_values() {
        let s = Source::pulse(343.0, [1.0, 2.0, 3.0]);
        let w = s.width(&medium());
        let u = gaussian_initial_condition(&s, &medium(), &[[1.0, 2.0, 3.0], [1.0, 2.0 + w, 3.0]]);
        assert_eq!(u.pressure[0], 1.0);
        assert!((u.pressure[1] - (-1f64).exp()).abs() < 1e-15);
        assert!(u.velocity.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn periodic_increment() {
        let mut s = Source::pulse(343.0, [0.0; 3]);
        s.kind = SourceKind::Periodic;
        let m = medium();
        let w = s.width(&m);
        let nodes = [[0.0; 3], [0.3 * w, 0.0, 0.0], [40.0 * w, 0.0, 0.0]];
        let inc0 = periodic_source_increment(&s, &m, &nodes, 0.0, 1.0, PeriodicConvention::Reduced);
        for (i, x) in nodes.iter().enumerate() {
            assert_eq!(inc0[i], s.profile(&m, *x));
        }
        let t = std::f64::consts::PI.powi(2) / s.peak_frequency;
        let quarter = periodic_source_increment(&s, &m, &nodes, t, 1.0, PeriodicConvention::Reduced);
        assert!(quarter.iter().all(|v| v.abs() < 1e-15));
        assert!(inc0[2].abs() < 1e-300);
        let ang = periodic_source_increment(&s, &m, &nodes, 0.25 / 343.0, 1.0, PeriodicConvention::Angular);
        assert!(ang[0].abs() < 1e-15);
    }

    #[test]
    fn analytic_at_time_zero() {
        let s = Source::pulse(343.0, [0.2, -0.1, 0.4]);
        let m = medium();
        let nodes: Vec<[f64; 3]> = (0..10)
            .map(|i| [0.2 + 0.07 * i as f64, -0.1 + 0.013 * i as f64, 0.4 - 0.05 * i as f64])
            .chain([[0.2 + 1e-9, -0.1, 0.4]])
            .collect();
        let a = analytic_solution(&s, &m, &nodes, 0.0);
        let ic = gaussian_initial_condition(&s, &m, &nodes);
        for g in 0..nodes.len() {
            if s.distance(nodes[g]) > 1e-6 {
                assert!((a.pressure[g] - ic.pressure[g]).abs() < 1e-12);
            }
            for d in 0..3 {
                assert!(a.velocity[d][g].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn analytic_finite_at_source() {
        let s = Source::pulse(500.0, [0.0; 3]);
        let m = medium();
        for t in [0.0, 1e-4, 3e-4, 1e-3] {
            let u = analytic_solution(&s, &m, &[[0.0; 3], [1e-12, 0.0, 0.0]], t);
            assert!(u.pressure.iter().all(|p| p.is_finite()));
            assert!((u.pressure[0] - u.pressure[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let (c, rho, w) = (343.0, 1.2, 0.3);
        for t in [2e-4, 5e-4, 9e-4] {
            for r in [0.999e-6 * w, 1.001e-6 * w, 0.999e-3 * w, 1.001e-3 * w] {
                let (p1, v1) = spherical_pulse(r, t, c, rho, w);
                let (p2, v2) = spherical_pulse(r * 1.0000001, t, c, rho, w);
                assert!((p1 - p2).abs() < 1e-8, "{p1} {p2}");
                assert!((v1 - v2).abs() < 1e-8 * (1.0 / (rho * c)), "{v1} {v2}");
            }
        }
    }

    #[test]
    fn analytic_satisfies_wave_equations() {
        // Finite-difference residuals of p_t = -ρc² (r²v)_r / r² and v_t = -p_r / ρ.
        let (c, rho, w) = (343.0, 1.2, 0.25);
        for (r, t) in [(0.3, 4e-4), (0.8, 1.5e-3), (0.05, 2e-4), (1.5, 3e-3)] {
            let (hr, ht) = (1e-5, 1e-5 / c);
            let p = |r: f64, t: f64| spherical_pulse(r, t, c, rho, w).0;
            let v = |r: f64, t: f64| spherical_pulse(r, t, c, rho, w).1;
            let pt = (p(r, t + ht) - p(r, t - ht)) / (2.0 * ht);
            let vt = (v(r, t + ht) - v(r, t - ht)) / (2.0 * ht);
            let pr = (p(r + hr, t) - p(r - hr, t)) / (2.0 * hr);
            let flux = |r: f64| r * r * v(r, t);
            let div = (flux(r + hr) - flux(r - hr)) / (2.0 * hr) / (r * r);
            let scale_p = c / w;
            assert!((pt + rho * c * c * div).abs() < 1e-5 * scale_p, "p_t at r={r}");
            assert!((vt + pr / rho).abs() < 1e-5 * scale_p / (rho * c), "v_t at r={r}");
        }
    }

    #[test]
    fn analytic_causality() {
        let s = Source::pulse(343.0, [0.0; 3]);
        let m = medium();
        let w = s.width(&m);
        let t = 2e-3;
        let r = m.sound_speed * t + 6.0 * w + 1e-3;
        let u = analytic_solution(&s, &m, &[[r, 0.0, 0.0], [0.0, r * 1.5, 0.0]], t);
        assert!(u.pressure.iter().all(|p| p.abs() < 1e-14));
    }
}
