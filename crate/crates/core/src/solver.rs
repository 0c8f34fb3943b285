//! Time integration of the incompressible Hookean system in Lagrangian
//! coordinates,
//!
//! ```text
//!     dtt Y - lap Y = -(grad X)^{-T} grad p,   det(grad X) = 1,
//! ```
//!
//! with the pressure determined as the Lagrange multiplier that kills the
//! second time derivative of the volume constraint: with `B = (grad X)^{-1}`
//! and `A = lap Y - B^T grad p`,
//!
//! ```text
//!     tr(B grad A) = tr(B grad V  B grad V).
//! ```
//!
//! The elliptic problem for `p` is solved by a fixed-point iteration
//! preconditioned by the flat Laplacian; the contraction factor is
//! O(|grad Y|), geometric in the small-data regime. Time stepping is
//! classical RK4 with a fixed step. Constraint drift is monitored, not
//! corrected, unless periodic re-projection is explicitly enabled.

use std::collections::VecDeque;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::grid::{Axis2, Grid};

/// Fraction of the box half-width that initial data may occupy.
pub const DATA_SUPPORT_LIMIT: f64 = 0.6;
/// Fraction of the box half-width the running solution must stay inside.
pub const RUN_SUPPORT_LIMIT: f64 = 0.8;

#[derive(Clone)]
pub struct SolverState {
    pub t: f64,
    pub y: VectorField2,
    pub v: VectorField2,
    /// Last solved pressure, reused as the next warm start.
    pub p: ScalarField,
}

/// One uniformly-spaced history record: displacement, velocity, acceleration
/// and the solved pressure.
#[derive(Clone)]
pub struct Sample {
    pub t: f64,
    pub y: VectorField2,
    pub v: VectorField2,
    pub a: VectorField2,
    pub p: ScalarField,
}

/// Ring buffer of samples at a fixed interval, wide enough for the temporal
/// stencils of the vector-field calculus.
pub struct History {
    dt_s: f64,
    capacity: usize,
    entries: VecDeque<Sample>,
}

impl History {
    pub fn new(dt_s: f64, capacity: usize) -> History {
        History {
            dt_s,
            capacity,
            entries: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &Sample {
        &self.entries[i]
    }

    pub fn push(&mut self, sample: Sample) {
        if let Some(last) = self.entries.back() {
            let gap = sample.t - last.t;
            let tol = 1e-12 * sample.t.abs().max(1.0);
            assert!(
                (gap - self.dt_s).abs() <= tol,
                "history spacing {gap} != {} at t = {}",
                self.dt_s,
                sample.t
            );
        }
        self.entries.push_back(sample);
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    /// Index of the sample at time `t`, if present.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.entries
            .iter()
            .position(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Checks that `center` has at least `radius` neighbors on both sides.
    pub fn check_window(&self, center: usize, radius: usize) -> Result<()> {
        if center < radius || center + radius >= self.entries.len() {
            return Err(Error::InsufficientHistory {
                t: self.entries.get(center).map(|s| s.t).unwrap_or(f64::NAN),
                available: self.entries.len(),
                needed: 2 * radius + 1,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverParams {
    pub dt: f64,
    pub t_max: f64,
    /// Relative L2 tolerance of the pressure fixed-point iteration.
    pub pressure_tol: f64,
    pub max_pressure_iter: usize,
    /// Sup-norm bound on `det(grad X) - 1` and on the first constraint
    /// derivative, checked after every step.
    pub drift_tolerance: f64,
    pub cfl_safety: f64,
    /// History sample interval, in steps.
    pub sample_every: usize,
    pub history_capacity: usize,
    /// Integrate `dtt Y = lap Y` with `p = 0` (free-wave mode).
    pub linearized: bool,
    /// Enforce the 0.8 L support bound after each step. Disable only for
    /// torus-periodic studies where wrap-around is acceptable.
    pub monitor_support: bool,
    /// Relative amplitude that counts as "support" for the monitor.
    pub support_tolerance: f64,
    /// If set, re-project the constraint every this many steps.
    pub reproject_every: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 0.05,
            t_max: 40.0,
            pressure_tol: 1e-10,
            max_pressure_iter: 50,
            drift_tolerance: 1e-8,
            cfl_safety: 0.5,
            sample_every: 8,
            history_capacity: 9,
            linearized: false,
            monitor_support: true,
            support_tolerance: 1e-4,
            reproject_every: None,
        }
    }
}

type Raw = Array2<f64>;
type Mat = [[Raw; 2]; 2];

fn mat_zeros(n: usize) -> Mat {
    [
        [Array2::zeros((n, n)), Array2::zeros((n, n))],
        [Array2::zeros((n, n)), Array2::zeros((n, n))],
    ]
}

/// `B = (I + grad Y)^{-1}` pointwise; errors if any determinant drops
/// below 1/2.
fn inverse_deformation(grad_y: &Mat) -> Result<(Mat, Raw)> {
    let n = grad_y[0][0].dim().0;
    let mut det = Array2::zeros((n, n));
    ndarray::Zip::from(&mut det)
        .and(&grad_y[0][0])
        .and(&grad_y[1][1])
        .and(&grad_y[0][1])
        .and(&grad_y[1][0])
        .for_each(|d, &g00, &g11, &g01, &g10| {
            *d = (1.0 + g00) * (1.0 + g11) - g01 * g10;
        });
    let min_det = det.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min_det < 0.5 {
        return Err(Error::NearSingular { min_det });
    }
    let mut b = mat_zeros(n);
    b[0][0] = (&grad_y[1][1] + 1.0) / &det;
    b[0][1] = -&grad_y[0][1] / &det;
    b[1][0] = -&grad_y[1][0] / &det;
    b[1][1] = (&grad_y[0][0] + 1.0) / &det;
    Ok((b, det))
}

pub struct RhsEval {
    /// dV/dt = lap Y - (grad X)^{-T} grad p.
    pub a: VectorField2,
    pub p: ScalarField,
    pub pressure_iters: usize,
}

/// Full right-hand side evaluation. Shares forward transforms of `Y`, `V`
/// across the gradient, Laplacian, and pressure assemblies; every pointwise
/// product that re-enters a spectral operator is dealiased.
pub fn eval_rhs(
    grid: &Arc<Grid>,
    y: &VectorField2,
    v: &VectorField2,
    p_guess: &ScalarField,
    params: &SolverParams,
) -> Result<RhsEval> {
    if params.linearized {
        return Ok(RhsEval {
            a: y.laplacian(),
            p: ScalarField::zeros(grid),
            pressure_iters: 0,
        });
    }
    let n = grid.n();
    let hat_y = [grid.forward(&y.comps[0].data), grid.forward(&y.comps[1].data)];
    let hat_v = [grid.forward(&v.comps[0].data), grid.forward(&v.comps[1].data)];

    // grad_y[i][j] = d_j Y^i, grad_v likewise; dlap[i][j] = d_i lap Y^j.
    let mut grad_y = mat_zeros(n);
    let mut grad_v = mat_zeros(n);
    let mut dlap = mat_zeros(n);
    for i in 0..2 {
        for (j, axis) in [Axis2::A1, Axis2::A2].into_iter().enumerate() {
            grad_y[i][j] = grid.deriv_from_hat(&hat_y[i], axis);
            grad_v[i][j] = grid.deriv_from_hat(&hat_v[i], axis);
            dlap[j][i] = grid.deriv_laplacian_from_hat(&hat_y[i], axis);
        }
    }
    let lap_y = [
        grid.laplacian_from_hat(&hat_y[0]),
        grid.laplacian_from_hat(&hat_y[1]),
    ];
    let (b, _det) = inverse_deformation(&grad_y)?;

    // g = tr(B grad lap Y) - tr(B grad V B grad V).
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..2 {
        for j in 0..2 {
            g += &(&b[i][j] * &dlap[i][j]);
        }
    }
    // N = B * grad V, then subtract tr(N N).
    let mut nm = mat_zeros(n);
    for i in 0..2 {
        for k in 0..2 {
            nm[i][k] = &(&b[i][0] * &grad_v[0][k]) + &(&b[i][1] * &grad_v[1][k]);
        }
    }
    for i in 0..2 {
        for k in 0..2 {
            g -= &(&nm[i][k] * &nm[k][i]);
        }
    }
    let g = grid.dealias(&g);

    // Fixed-point iteration on the spectral pressure.
    let mut hat_p = grid.forward(&p_guess.data);
    hat_p[[0, 0]] = Complex64::default();
    let g_scale = grid.l2_norm(&g).max(1e-300);
    let mut converged = false;
    let mut iters = 0;
    let mut residual = f64::INFINITY;
    let mut w_hat: [Array2<Complex64>; 2] = [
        Array2::from_elem((n, n), Complex64::default()),
        Array2::from_elem((n, n), Complex64::default()),
    ];
    for m in 0..params.max_pressure_iter {
        iters = m + 1;
        let dp = [
            grid.deriv_from_hat(&hat_p, Axis2::A1),
            grid.deriv_from_hat(&hat_p, Axis2::A2),
        ];
        // w_j = (B^T grad p)_j = B_{kj} d_k p, dealiased before differentiating.
        for (j, slot) in w_hat.iter_mut().enumerate() {
            let w = &(&b[0][j] * &dp[0]) + &(&b[1][j] * &dp[1]);
            let mut hat = grid.forward(&w);
            grid.dealias_hat(&mut hat);
            *slot = hat;
        }
        let mut t_of_p = Array2::<f64>::zeros((n, n));
        for (i, axis) in [Axis2::A1, Axis2::A2].into_iter().enumerate() {
            for j in 0..2 {
                t_of_p += &(&b[i][j] * &grid.deriv_from_hat(&w_hat[j], axis));
            }
        }
        let mut rho = grid.dealias(&(&g - &t_of_p));
        let mean = grid.mean(&rho);
        rho -= mean;
        residual = grid.l2_norm(&rho);
        if residual <= params.pressure_tol * g_scale {
            converged = true;
            break;
        }
        // p <- p + lap^{-1} rho.
        let mut hat_rho = grid.forward(&rho);
        for ((i, j), val) in hat_rho.indexed_iter_mut() {
            let k1 = grid.wavenumber(i);
            let k2 = grid.wavenumber(j);
            let kmag2 = k1 * k1 + k2 * k2;
            *val = if kmag2 == 0.0 {
                Complex64::default()
            } else {
                -*val / kmag2
            };
        }
        hat_p += &hat_rho;
    }
    if !converged {
        return Err(Error::NoConvergence {
            residual: residual / g_scale,
            iters,
            tol: params.pressure_tol,
        });
    }

    let w = [
        grid.inverse_real(w_hat[0].clone()),
        grid.inverse_real(w_hat[1].clone()),
    ];
    let a = VectorField2::new(
        ScalarField::from_array(grid, &lap_y[0] - &w[0]),
        ScalarField::from_array(grid, &lap_y[1] - &w[1]),
    );
    let p = ScalarField::from_array(grid, grid.inverse_real(hat_p));
    Ok(RhsEval { a, p, pressure_iters: iters })
}

/// Sup norms of the constraint defect `det(grad X) - 1` and of its first
/// time derivative `tr(B grad V)`.
pub fn measure_drift(grid: &Arc<Grid>, y: &VectorField2, v: &VectorField2) -> Result<(f64, f64)> {
    let n = grid.n();
    let hat_y = [grid.forward(&y.comps[0].data), grid.forward(&y.comps[1].data)];
    let hat_v = [grid.forward(&v.comps[0].data), grid.forward(&v.comps[1].data)];
    let mut grad_y = mat_zeros(n);
    let mut grad_v = mat_zeros(n);
    for i in 0..2 {
        for (j, axis) in [Axis2::A1, Axis2::A2].into_iter().enumerate() {
            grad_y[i][j] = grid.deriv_from_hat(&hat_y[i], axis);
            grad_v[i][j] = grid.deriv_from_hat(&hat_v[i], axis);
        }
    }
    let (b, det) = inverse_deformation(&grad_y)?;
    let drift_det = det.iter().map(|v| (v - 1.0).abs()).fold(0.0f64, f64::max);
    let mut tr = Array2::<f64>::zeros((n, n));
    for i in 0..2 {
        for j in 0..2 {
            tr += &(&b[i][j] * &grad_v[j][i]);
        }
    }
    let drift_v = tr.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    Ok((drift_det, drift_v))
}

/// Largest sample radius where the state exceeds `rel_threshold` times its
/// sup norm. The pressure is nonlocal, so solutions carry small algebraic
/// tails everywhere; the monitor flags wave-bulk arrival, not those tails.
pub fn support_radius(
    grid: &Arc<Grid>,
    y: &VectorField2,
    v: &VectorField2,
    rel_threshold: f64,
) -> f64 {
    let n = grid.n();
    let r = grid.radius();
    let scale = y.sup_norm().max(v.sup_norm()).max(1e-300);
    let floor = rel_threshold * scale;
    let mut radius: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mag = y.comps[0].data[[i, j]].abs()
                + y.comps[1].data[[i, j]].abs()
                + v.comps[0].data[[i, j]].abs()
                + v.comps[1].data[[i, j]].abs();
            if mag > floor {
                radius = radius.max(r[[i, j]]);
            }
        }
    }
    radius
}

pub struct Simulation {
    grid: Arc<Grid>,
    pub params: SolverParams,
    pub state: SolverState,
    pub history: History,
    step_index: u64,
    pub last_pressure_iters: usize,
}

impl Simulation {
    pub fn new(
        grid: &Arc<Grid>,
        y0: VectorField2,
        v0: VectorField2,
        params: SolverParams,
    ) -> Result<Simulation> {
        if params.dt > params.cfl_safety * grid.spacing() {
            return Err(Error::Config {
                field: "solver.dt".into(),
                reason: format!(
                    "dt = {} violates CFL bound {} (= {} * h)",
                    params.dt,
                    params.cfl_safety * grid.spacing(),
                    params.cfl_safety
                ),
            });
        }
        let state = SolverState {
            t: 0.0,
            y: y0,
            v: v0,
            p: ScalarField::zeros(grid),
        };
        let mut sim = Simulation {
            grid: grid.clone(),
            params,
            state,
            history: History::new(
                params.dt * params.sample_every as f64,
                params.history_capacity,
            ),
            step_index: 0,
            last_pressure_iters: 0,
        };
        sim.push_sample()?;
        Ok(sim)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    fn push_sample(&mut self) -> Result<()> {
        let eval = eval_rhs(
            &self.grid,
            &self.state.y,
            &self.state.v,
            &self.state.p,
            &self.params,
        )?;
        self.state.p = eval.p.clone();
        self.history.push(Sample {
            t: self.state.t,
            y: self.state.y.clone(),
            v: self.state.v.clone(),
            a: eval.a,
            p: eval.p,
        });
        Ok(())
    }

    /// One RK4 step, followed by the drift and support invariants.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.params.dt;
        let (y0, v0) = (self.state.y.clone(), self.state.v.clone());

        let k1 = eval_rhs(&self.grid, &y0, &v0, &self.state.p, &self.params)?;
        let y1 = &y0 + &v0.scaled(0.5 * dt);
        let v1 = &v0 + &k1.a.scaled(0.5 * dt);
        let k2 = eval_rhs(&self.grid, &y1, &v1, &k1.p, &self.params)?;
        let y2 = &y0 + &v1.scaled(0.5 * dt);
        let v2 = &v0 + &k2.a.scaled(0.5 * dt);
        let k3 = eval_rhs(&self.grid, &y2, &v2, &k2.p, &self.params)?;
        let y3 = &y0 + &v2.scaled(dt);
        let v3 = &v0 + &k3.a.scaled(dt);
        let k4 = eval_rhs(&self.grid, &y3, &v3, &k3.p, &self.params)?;

        let mut dy = v0.scaled(1.0);
        dy += &v1;
        dy += &v1;
        dy += &v2;
        dy += &v2;
        dy += &v3;
        let mut dv = k1.a.scaled(1.0);
        dv += &k2.a;
        dv += &k2.a;
        dv += &k3.a;
        dv += &k3.a;
        dv += &k4.a;

        self.state.y += &dy.scaled(dt / 6.0);
        self.state.v += &dv.scaled(dt / 6.0);
        self.step_index += 1;
        self.state.t = self.step_index as f64 * dt;
        self.state.p = k4.p;
        self.last_pressure_iters = k4.pressure_iters;

        if let Some(every) = self.params.reproject_every {
            if every > 0 && self.step_index % every as u64 == 0 {
                self.reproject()?;
            }
        }

        if !self.params.linearized {
            let (drift_det, drift_v) = measure_drift(&self.grid, &self.state.y, &self.state.v)?;
            let drift = drift_det.max(drift_v);
            if drift > self.params.drift_tolerance {
                return Err(Error::DriftExceeded {
                    drift,
                    tol: self.params.drift_tolerance,
                    t: self.state.t,
                });
            }
        }
        if self.params.monitor_support {
            let support = support_radius(
                &self.grid,
                &self.state.y,
                &self.state.v,
                self.params.support_tolerance,
            );
            let limit = RUN_SUPPORT_LIMIT * self.grid.half_width();
            if support > limit {
                return Err(Error::SupportViolation { radius: support, limit });
            }
        }

        if self.step_index % self.params.sample_every as u64 == 0 {
            self.push_sample()?;
        }
        Ok(())
    }

    /// Newton-type constraint repair: a gradient correction to `Y` driving
    /// `det(grad X) - 1` to zero.
    fn reproject(&mut self) -> Result<()> {
        for _ in 0..3 {
            let resid = crate::field::constraint_residual(&self.state.y);
            if resid.sup_norm() <= 0.1 * self.params.drift_tolerance {
                break;
            }
            let mut data = resid.data;
            let m = self.grid.mean(&data);
            data -= m;
            let u = self.grid.inverse_laplacian(&data)?;
            self.state.y.comps[0].data += &self.grid.derivative(&u, Axis2::A1);
            self.state.y.comps[1].data += &self.grid.derivative(&u, Axis2::A2);
        }
        Ok(())
    }
}

/// Truncated Gaussian bump: `exp(-32 s^2)` for `|s| < 1`, zero beyond. The
/// cut sits at `exp(-32) ~ 1e-14`, so the profile is compactly supported to
/// round-off while keeping a fast-decaying spectrum (the infinitely flat
/// `exp(-1/(1-s^2))` bump resolves far too slowly on desk-scale grids).
fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-32.0 * s * s).exp()
    } else {
        0.0
    }
}

fn bump_deriv(s: f64) -> f64 {
    if s.abs() < 1.0 {
        -64.0 * s * bump(s)
    } else {
        0.0
    }
}

/// An area-preserving angular shear: rotation by `theta(|y - c|)` about `c`.
/// The radial profile is compactly supported, so the map is the identity
/// outside a disk, and `det(grad map) = 1` pointwise exactly.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Twist {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl Twist {
    fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let theta = self.amplitude * bump(r / self.radius);
        if theta == 0.0 {
            return p;
        }
        let (s, c) = theta.sin_cos();
        [
            self.center[0] + c * d[0] - s * d[1],
            self.center[1] + s * d[0] + c * d[1],
        ]
    }
}

/// Compactly supported stream bump for the Eulerian velocity field.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StreamBump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl StreamBump {
    fn grad_psi(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r == 0.0 || r >= self.radius {
            return [0.0, 0.0];
        }
        let ds = self.amplitude * bump_deriv(r / self.radius) / self.radius;
        [ds * d[0] / r, ds * d[1] / r]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialDataSpec {
    /// Shear amplitude; also the velocity amplitude unless overridden.
    pub epsilon: f64,
    /// Separate velocity amplitude (the `epsilon = 0, w != 0` free-wave runs).
    #[serde(default)]
    pub velocity_amplitude: Option<f64>,
    pub seed: u64,
    #[serde(default = "default_twist_count")]
    pub twist_count: usize,
    #[serde(default = "default_bump_count")]
    pub stream_bump_count: usize,
    /// Feature centers are placed within this fraction of the half-width.
    #[serde(default = "default_placement")]
    pub placement_radius_fraction: f64,
    /// Maximum feature radius, as a fraction of the half-width.
    #[serde(default = "default_feature")]
    pub feature_radius_fraction: f64,
}

fn default_twist_count() -> usize {
    2
}
fn default_bump_count() -> usize {
    2
}
fn default_placement() -> f64 {
    0.03
}
fn default_feature() -> f64 {
    0.14
}

impl InitialDataSpec {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        InitialDataSpec {
            epsilon,
            velocity_amplitude: None,
            seed,
            twist_count: default_twist_count(),
            stream_bump_count: default_bump_count(),
            placement_radius_fraction: default_placement(),
            feature_radius_fraction: default_feature(),
        }
    }
}

pub struct InitialData {
    pub y0: VectorField2,
    pub v0: VectorField2,
    pub twists: Vec<Twist>,
    pub bumps: Vec<StreamBump>,
    /// Radius of the union of feature supports.
    pub support_radius: f64,
}

/// Builds `X0` as a composition of angular shears (volume-preserving by
/// construction) and `v0 = w(X0)` with Eulerian divergence-free `w`, so both
/// constraint derivatives vanish at `t = 0` up to discretization.
pub fn make_initial_data(grid: &Arc<Grid>, spec: &InitialDataSpec) -> Result<InitialData> {
    let l = grid.half_width();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp_v = spec.velocity_amplitude.unwrap_or(spec.epsilon);

    let mut twists = Vec::new();
    for _ in 0..spec.twist_count {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let dist = rng.gen_range(0.3..1.0) * spec.placement_radius_fraction * l;
        let radius = rng.gen_range(0.85..1.0) * spec.feature_radius_fraction * l;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        twists.push(Twist {
            center: [dist * angle.cos(), dist * angle.sin()],
            radius,
            amplitude: sign * spec.epsilon * rng.gen_range(0.6..1.0),
        });
    }
    let mut bumps = Vec::new();
    for _ in 0..spec.stream_bump_count {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let dist = rng.gen_range(0.0..1.0) * spec.placement_radius_fraction * l;
        let radius = rng.gen_range(0.85..1.0) * spec.feature_radius_fraction * l;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        bumps.push(StreamBump {
            center: [dist * angle.cos(), dist * angle.sin()],
            radius,
            amplitude: sign * amp_v * radius * rng.gen_range(0.6..1.0),
        });
    }

    let mut support_radius: f64 = 0.0;
    for t in &twists {
        support_radius =
            support_radius.max((t.center[0].powi(2) + t.center[1].powi(2)).sqrt() + t.radius);
    }
    for b in &bumps {
        support_radius =
            support_radius.max((b.center[0].powi(2) + b.center[1].powi(2)).sqrt() + b.radius);
    }
    let limit = DATA_SUPPORT_LIMIT * l;
    if support_radius > limit {
        return Err(Error::SupportViolation { radius: support_radius, limit });
    }

    let n = grid.n();
    let mut y0 = VectorField2::zeros(grid);
    let mut v0 = VectorField2::zeros(grid);
    for i in 0..n {
        for j in 0..n {
            let y = [grid.coord(i), grid.coord(j)];
            let mut x = y;
            for t in &twists {
                x = t.apply(x);
            }
            y0.comps[0].data[[i, j]] = x[0] - y[0];
            y0.comps[1].data[[i, j]] = x[1] - y[1];
            // w = perp-grad psi, evaluated at the deformed position.
            let mut gpsi = [0.0, 0.0];
            for b in &bumps {
                let g = b.grad_psi(x);
                gpsi[0] += g[0];
                gpsi[1] += g[1];
            }
            v0.comps[0].data[[i, j]] = -gpsi[1];
            v0.comps[1].data[[i, j]] = gpsi[0];
        }
    }
    Ok(InitialData { y0, v0, twists, bumps, support_radius })
}
