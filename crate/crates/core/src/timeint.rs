//! Five-stage fourth-order low-storage Runge-Kutta (Carpenter & Kennedy) with
//! the damping and auxiliary-variable stages fused into the residual update.
//!
//! Each variable keeps exactly two arrays: the state and one residual register.
//! Stage `α`: `k ← a_α k + Δt·rate(u)`, then `u ← u + b_α k`.

use rayon::prelude::*;

use crate::acoustics::{DgOperator, FieldState, MediumParams, Scratch};
use crate::error::{Error, Result};
use crate::mesh::GeometricFactors;
use crate::pml::{gamma_matrices, node_rates, PhiCoupling, PmlState};

pub const STAGES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsrkCoefficients {
    pub a: [f64; STAGES],
    pub b: [f64; STAGES],
    pub c: [f64; STAGES],
}

pub const LSRK54: LsrkCoefficients = LsrkCoefficients {
    a: [
        0.0,
        -567301805773.0 / 1357537059087.0,
        -2404267990393.0 / 2016746695238.0,
        -3550918686646.0 / 2091501179385.0,
        -1275806237668.0 / 842570457699.0,
    ],
    b: [
        1432997174477.0 / 9575080441755.0,
        5161836677717.0 / 13612068292357.0,
        1720146321549.0 / 2090206949498.0,
        3134564353537.0 / 4481467310338.0,
        2277821191437.0 / 14882151754819.0,
    ],
    c: [
        0.0,
        1432997174477.0 / 9575080441755.0,
        2526269341429.0 / 6820363962896.0,
        2006345519317.0 / 3224310063776.0,
        2802321613138.0 / 2924317926251.0,
    ],
};

/// Equivalent Butcher tableau `(A, b)`.
fn butcher(co: &LsrkCoefficients) -> ([[f64; STAGES]; STAGES], [f64; STAGES]) {
    // k and u as combinations of the stage evaluations F_j (times Δt).
    let mut k = [0.0; STAGES];
    let mut u = [0.0; STAGES];
    let mut a = [[0.0; STAGES]; STAGES];
    for i in 0..STAGES {
        a[i] = u;
        for j in 0..STAGES {
            k[j] *= co.a[i];
        }
        k[i] += 1.0;
        for j in 0..STAGES {
            u[j] += co.b[i] * k[j];
        }
    }
    (a, u)
}

impl LsrkCoefficients {
    /// Largest residual over the eight fourth-order conditions and the stage
    /// times `c_i = Σ_j A_ij`.
    pub fn order_residual(&self) -> f64 {
        let (a, b) = butcher(self);
        let n = STAGES;
        let c: Vec<f64> = (0..n).map(|i| a[i].iter().sum()).collect();
        let ac: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * c[j]).sum()).collect();
        let ac2: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * c[j] * c[j]).sum()).collect();
        let aac: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * ac[j]).sum()).collect();
        let dot = |x: &dyn Fn(usize) -> f64| (0..n).map(|i| b[i] * x(i)).sum::<f64>();
        let conditions = [
            dot(&|_| 1.0) - 1.0,
            dot(&|i| c[i]) - 0.5,
            dot(&|i| c[i] * c[i]) - 1.0 / 3.0,
            dot(&|i| ac[i]) - 1.0 / 6.0,
            dot(&|i| c[i].powi(3)) - 0.25,
            dot(&|i| c[i] * ac[i]) - 0.125,
            dot(&|i| ac2[i]) - 1.0 / 12.0,
            dot(&|i| aac[i]) - 1.0 / 24.0,
        ];
        let stage_times = (0..n).map(|i| (c[i] - self.c[i]).abs());
        conditions
            .iter()
            .map(|r| r.abs())
            .chain(stage_times)
            .fold(0.0, f64::max)
    }

    pub fn self_check(&self) -> Result<()> {
        let r = self.order_residual();
        if r < 1e-12 && self.a[0] == 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("Runge-Kutta coefficients fail order conditions ({r:.3e})")))
        }
    }
}

/// `Δt = CFL · min Δx / c / N²`.
pub fn compute_dt(gf: &GeometricFactors, medium: &MediumParams, order: usize, cfl: f64) -> f64 {
    dt_from_length(gf.min_char_length, medium.sound_speed, order, cfl)
}

pub fn dt_from_length(min_length: f64, sound_speed: f64, order: usize, cfl: f64) -> f64 {
    cfl * min_length / sound_speed / (order * order) as f64
}

/// Step counter. Steps have length `dt` except the ones shortened to land
/// exactly on a stop time or on `final_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimClock {
    pub dt: f64,
    pub step_index: usize,
    pub time: f64,
    pub final_time: f64,
    stops: Vec<f64>,
    /// Time and step index of the last stop reached, the origin of the grid.
    anchor: (f64, usize),
}

impl SimClock {
    pub fn new(dt: f64, final_time: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if !(final_time >= 0.0 && final_time.is_finite()) {
            return Err(Error::Config(format!("final time must be >= 0, got {final_time}")));
        }
        Ok(Self {
            dt,
            step_index: 0,
            time: 0.0,
            final_time,
            stops: Vec::new(),
            anchor: (0.0, 0),
        })
    }

    /// Adds an intermediate time that the clock must hit exactly.
    pub fn with_stop(mut self, t: f64) -> Self {
        if t > 0.0 && t < self.final_time {
            self.stops.push(t);
            self.stops.sort_by(f64::total_cmp);
            self.stops.dedup();
        }
        self
    }

    fn target(&self) -> f64 {
        let eps = 1e-9 * self.dt;
        self.stops
            .iter()
            .copied()
            .find(|&s| s > self.time + eps)
            .unwrap_or(self.final_time)
    }

    pub fn done(&self) -> bool {
        self.time >= self.final_time
    }

    /// Whether the current time is one of the stops or the final time.
    pub fn at_stop(&self) -> bool {
        self.time == self.final_time || self.stops.contains(&self.time)
    }

    /// Length of the next step; a remainder under 1e-9 dt is absorbed.
    pub fn next_dt(&self) -> f64 {
        let left = self.target() - self.time;
        if left <= self.dt * (1.0 + 1e-9) {
            left
        } else {
            self.dt
        }
    }

    pub fn advance(&mut self) {
        let target = self.target();
        let landed = self.next_dt() == target - self.time;
        self.step_index += 1;
        if landed {
            self.time = target;
            self.anchor = (target, self.step_index);
        } else {
            self.time = self.anchor.0 + (self.step_index - self.anchor.1) as f64 * self.dt;
        }
    }

    /// Total number of steps of the schedule.
    pub fn num_steps(&self) -> usize {
        let mut c = self.clone();
        c.time = 0.0;
        c.step_index = 0;
        c.anchor = (0.0, 0);
        let mut n = 0;
        while !c.done() {
            let left = c.target() - c.time;
            let whole = ((left / c.dt) * (1.0 - 1e-12)).floor().max(0.0) as usize;
            if whole > 1 {
                // Jump over the regular steps before the target.
                let skip = whole - 1;
                c.step_index += skip;
                c.time = c.anchor.0 + (c.step_index - c.anchor.1) as f64 * c.dt;
                n += skip;
            }
            c.advance();
            n += 1;
        }
        n
    }
}

/// Rates of one block of nodes (one element for the DG operator).
pub struct BlockRates<'s> {
    pub pressure: &'s [f64],
    pub velocity: [&'s [f64]; 3],
}

/// Undamped semi-discrete operator evaluated block by block.
pub trait SpatialOperator: Sync {
    type Scratch: Send;

    fn block_size(&self) -> usize;
    fn num_blocks(&self) -> usize;
    fn medium(&self) -> &MediumParams;
    fn scratch(&self) -> Self::Scratch;
    fn block_rates<'s>(&self, k: usize, state: &FieldState, scratch: &'s mut Self::Scratch) -> BlockRates<'s>;
}

impl SpatialOperator for DgOperator {
    type Scratch = Scratch;

    fn block_size(&self) -> usize {
        self.num_nodes()
    }

    fn num_blocks(&self) -> usize {
        self.num_elements()
    }

    fn medium(&self) -> &MediumParams {
        DgOperator::medium(self)
    }

    fn scratch(&self) -> Scratch {
        DgOperator::scratch(self)
    }

    fn block_rates<'s>(&self, k: usize, state: &FieldState, scratch: &'s mut Scratch) -> BlockRates<'s> {
        self.element_rates(k, state, scratch);
        let [vx, vy, vz] = &scratch.rate_v;
        BlockRates {
            pressure: &scratch.rate_p,
            velocity: [vx, vy, vz],
        }
    }
}

#[inline(always)]
fn fused(first: bool, a: f64, k: f64, inc: f64) -> f64 {
    if first {
        inc
    } else {
        a * k + inc
    }
}

/// Far above any physical field, and low enough that energy sums stay finite.
const FIELD_LIMIT: f64 = 1e100;

/// `u += b k` in parallel; false if any updated value is not finite or exceeds
/// [`FIELD_LIMIT`].
fn update(u: &mut [f64], k: &[f64], b: f64) -> bool {
    const CHUNK: usize = 4096;
    u.par_chunks_mut(CHUNK)
        .zip(k.par_chunks(CHUNK))
        .map(|(u, k)| {
            let mut ok = true;
            for (x, y) in u.iter_mut().zip(k) {
                *x += b * y;
                ok &= x.abs() < FIELD_LIMIT;
            }
            ok
        })
        .reduce(|| true, |x, y| x && y)
}

/// Residual registers and the stepping loop body.
#[derive(Debug, Clone)]
pub struct LsrkIntegrator {
    pub coefficients: LsrkCoefficients,
    pub coupling: PhiCoupling,
    residual: FieldState,
    residual_phi: Option<[Vec<f64>; 3]>,
}

impl LsrkIntegrator {
    pub fn new(len: usize, with_pml: bool, coupling: PhiCoupling) -> Result<Self> {
        LSRK54.self_check()?;
        Ok(Self {
            coefficients: LSRK54,
            coupling,
            residual: FieldState::zeros(len),
            residual_phi: with_pml.then(|| std::array::from_fn(|_| vec![0.0; len])),
        })
    }

    /// Number of nodal arrays held as residual registers.
    pub fn register_count(&self) -> usize {
        4 + if self.residual_phi.is_some() { 3 } else { 0 }
    }

    pub fn register_bytes(&self) -> usize {
        let len = self.residual.len();
        self.register_count() * len * std::mem::size_of::<f64>()
    }

    /// Advances `state` (and `pml`, when present) by one step of length `dt`.
    pub fn step<O: SpatialOperator>(
        &mut self,
        op: &O,
        state: &mut FieldState,
        mut pml: Option<&mut PmlState>,
        dt: f64,
        step_index: usize,
    ) -> Result<()> {
        let len = op.block_size() * op.num_blocks();
        state.check_shape(len)?;
        self.residual.check_shape(len)?;
        if pml.is_some() != self.residual_phi.is_some() {
            return Err(Error::Shape("integrator and pml state disagree on auxiliary registers".into()));
        }
        for stage in 0..STAGES {
            let a = self.coefficients.a[stage];
            let b = self.coefficients.b[stage];
            let first = stage == 0;
            match pml.as_deref() {
                None => self.acoustic_stage(op, state, a, dt, first),
                Some(p) => self.damped_stage(op, state, p, a, dt, first),
            }

            let mut ok = update(&mut state.pressure, &self.residual.pressure, b);
            for d in 0..3 {
                ok &= update(&mut state.velocity[d], &self.residual.velocity[d], b);
            }
            if let (Some(p), Some(kphi)) = (pml.as_deref_mut(), self.residual_phi.as_mut()) {
                if self.coupling == PhiCoupling::StageValue {
                    stage_value_phi(op, state, p, kphi, a, dt, first);
                }
                for d in 0..3 {
                    ok &= update(&mut p.phi[d], &kphi[d], b);
                }
            }
            if !ok {
                return Err(Error::Instability {
                    step: step_index,
                    stage,
                });
            }
        }
        Ok(())
    }

    fn acoustic_stage<O: SpatialOperator>(&mut self, op: &O, state: &FieldState, a: f64, dt: f64, first: bool) {
        let np = op.block_size();
        let [kx, ky, kz] = &mut self.residual.velocity;
        (
            self.residual.pressure.par_chunks_mut(np),
            kx.par_chunks_mut(np),
            ky.par_chunks_mut(np),
            kz.par_chunks_mut(np),
        )
            .into_par_iter()
            .enumerate()
            .for_each_init(
                || op.scratch(),
                |scr, (k, (kp, kx, ky, kz))| {
                    let r = op.block_rates(k, state, scr);
                    for i in 0..np {
                        kp[i] = fused(first, a, kp[i], dt * r.pressure[i]);
                        kx[i] = fused(first, a, kx[i], dt * r.velocity[0][i]);
                        ky[i] = fused(first, a, ky[i], dt * r.velocity[1][i]);
                        kz[i] = fused(first, a, kz[i], dt * r.velocity[2][i]);
                    }
                },
            );
    }

    fn damped_stage<O: SpatialOperator>(
        &mut self,
        op: &O,
        state: &FieldState,
        pml: &PmlState,
        a: f64,
        dt: f64,
        first: bool,
    ) {
        let np = op.block_size();
        let bulk = op.medium().bulk_modulus();
        let rate_coupling = self.coupling == PhiCoupling::Rate;
        let [kx, ky, kz] = &mut self.residual.velocity;
        let [fx, fy, fz] = self.residual_phi.as_mut().expect("checked by caller");
        (
            self.residual.pressure.par_chunks_mut(np),
            kx.par_chunks_mut(np),
            ky.par_chunks_mut(np),
            kz.par_chunks_mut(np),
            fx.par_chunks_mut(np),
            fy.par_chunks_mut(np),
            fz.par_chunks_mut(np),
        )
            .into_par_iter()
            .enumerate()
            .for_each_init(
                || op.scratch(),
                |scr, (k, (kp, kx, ky, kz, fx, fy, fz))| {
                    let r = op.block_rates(k, state, scr);
                    if !pml.active[k] {
                        for i in 0..np {
                            kp[i] = fused(first, a, kp[i], dt * r.pressure[i]);
                            kx[i] = fused(first, a, kx[i], dt * r.velocity[0][i]);
                            ky[i] = fused(first, a, ky[i], dt * r.velocity[1][i]);
                            kz[i] = fused(first, a, kz[i], dt * r.velocity[2][i]);
                        }
                        return;
                    }
                    let base = k * np;
                    for i in 0..np {
                        let g = base + i;
                        let lv = [r.velocity[0][i], r.velocity[1][i], r.velocity[2][i]];
                        let (damp, vt, phit) =
                            node_rates(pml.sigma_at(g), state.pressure[g], pml.phi_at(g), lv, bulk);
                        kp[i] = fused(first, a, kp[i], dt * (r.pressure[i] + damp));
                        kx[i] = fused(first, a, kx[i], dt * vt[0]);
                        ky[i] = fused(first, a, ky[i], dt * vt[1]);
                        kz[i] = fused(first, a, kz[i], dt * vt[2]);
                        if rate_coupling {
                            fx[i] = fused(first, a, fx[i], dt * phit[0]);
                            fy[i] = fused(first, a, fy[i], dt * phit[1]);
                            fz[i] = fused(first, a, fz[i], dt * phit[2]);
                        }
                    }
                },
            );
    }
}

/// Auxiliary residual from the freshly updated velocity stage value.
fn stage_value_phi<O: SpatialOperator>(
    op: &O,
    state: &FieldState,
    pml: &PmlState,
    kphi: &mut [Vec<f64>; 3],
    a: f64,
    dt: f64,
    first: bool,
) {
    let np = op.block_size();
    let bulk = op.medium().bulk_modulus();
    let [fx, fy, fz] = kphi;
    (fx.par_chunks_mut(np), fy.par_chunks_mut(np), fz.par_chunks_mut(np))
        .into_par_iter()
        .enumerate()
        .filter(|(k, _)| pml.active[*k])
        .for_each(|(k, (fx, fy, fz))| {
            for i in 0..np {
                let g = k * np + i;
                let (g1, g2) = gamma_matrices(pml.sigma_at(g));
                let phi = pml.phi_at(g);
                let out = [&mut fx[i], &mut fy[i], &mut fz[i]];
                for (d, slot) in out.into_iter().enumerate() {
                    let rate = -g1[d] * phi[d] + bulk * g2[d] * state.velocity[d][g];
                    *slot = fused(first, a, *slot, dt * rate);
                }
            }
        });
}
