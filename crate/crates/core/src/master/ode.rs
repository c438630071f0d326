//! Time integration of `dp/dt = p Q(t)`.
//!
//! Two adaptive schemes share one driver: Dormand–Prince 5(4) for non-stiff
//! problems and a five-stage, L-stable, stiffly accurate SDIRK of order 4 for
//! generators whose rates span many decades (a series cascade easily covers
//! 30+ orders of magnitude). Implicit stages are solved exactly: by forward
//! substitution when the transition graph is acyclic, by dense LU otherwise.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};

use super::generator::Generator;
use crate::error::{Error, Result};

/// Largest state space for which a cyclic generator is factorized densely.
pub const MAX_DENSE_DIM: usize = 1024;

/// Above this `max exit rate × duration` the automatic choice goes implicit.
pub const STIFFNESS_THRESHOLD: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Explicit,
    Stiff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 2_000_000,
            method: Method::Auto,
        }
    }
}

/// Source of the generator at a given time.
pub(crate) trait Dynamics {
    fn at(&self, t: f64) -> Result<Cow<'_, Generator>>;
    fn is_constant(&self) -> bool;
}

pub(crate) struct Constant<'a>(pub &'a Generator);

impl Dynamics for Constant<'_> {
    fn at(&self, _t: f64) -> Result<Cow<'_, Generator>> {
        Ok(Cow::Borrowed(self.0))
    }
    fn is_constant(&self) -> bool {
        true
    }
}

pub(crate) struct Varying<F>(pub F);

impl<F: Fn(f64) -> Result<Generator>> Dynamics for Varying<F> {
    fn at(&self, t: f64) -> Result<Cow<'_, Generator>> {
        (self.0)(t).map(Cow::Owned)
    }
    fn is_constant(&self) -> bool {
        false
    }
}

/// Probability vectors at every `grid` time, starting from `p0` at `grid[0]`.
pub(crate) fn integrate(
    dynamics: &dyn Dynamics,
    p0: &[f64],
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    if grid.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("time grid must be strictly increasing"));
    }
    let t0 = grid[0];
    let span = grid[grid.len() - 1] - t0;
    let stiff = match opts.method {
        Method::Explicit => false,
        Method::Stiff => true,
        Method::Auto => {
            let probes = if dynamics.is_constant() { 1 } else { 33 };
            let mut fastest: f64 = 0.0;
            for k in 0..probes {
                let t = t0 + span * k as f64 / (probes.max(2) - 1) as f64;
                fastest = fastest.max(dynamics.at(t)?.max_exit_rate());
            }
            fastest * span > STIFFNESS_THRESHOLD
        }
    };
    let mut stepper: Box<dyn Stepper + '_> = if stiff {
        Box::new(Sdirk::new(dynamics)?)
    } else {
        Box::new(DormandPrince::new(dynamics))
    };

    let mut out = Vec::with_capacity(grid.len());
    let mut y = p0.to_vec();
    out.push(y.clone());
    let mut t = t0;
    let mut h = initial_step(dynamics.at(t0)?.as_ref(), span);
    let mut steps = 0usize;
    for &target in &grid[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Accuracy(format!(
                    "step budget of {} exhausted at t = {t:e}",
                    opts.max_steps
                )));
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let h_try = if clipped { remaining } else { h };
            let (y_new, err) = stepper.step(t, &y, h_try)?;
            let norm = error_norm(&y, &y_new, &err, opts);
            steps += 1;
            let order = stepper.error_order();
            if norm <= 1.0 {
                t = if clipped { target } else { t + h_try };
                y = y_new;
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-1.0 / order)).clamp(0.2, 5.0)
                };
                // a clipped step says nothing about the natural step length
                h = if clipped {
                    h.max(h_try * factor)
                } else {
                    h_try * factor
                };
            } else {
                let factor = if norm.is_finite() {
                    (0.9 * norm.powf(-1.0 / order)).clamp(0.2, 1.0)
                } else {
                    0.2
                };
                h = h_try * factor;
                if h <= f64::EPSILON * t.abs().max(span) * 1e-3 {
                    return Err(Error::Accuracy(format!("step size underflow at t = {t:e}")));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(q: &Generator, span: f64) -> f64 {
    let fastest = q.max_exit_rate();
    let guess = if fastest > 0.0 { 0.01 / fastest } else { span };
    guess.min(span * 1e-3).max(span * 1e-12)
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &SolverOptions) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..y.len() {
        let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        let r = (err[i] / scale).abs();
        if !r.is_finite() || !y_new[i].is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(r);
    }
    worst
}

trait Stepper {
    /// One trial step: new state and local error estimate.
    fn step(&mut self, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>;
    fn error_order(&self) -> f64;
}

// Dormand–Prince 5(4)
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct DormandPrince<'d> {
    dynamics: &'d dyn Dynamics,
}

impl<'d> DormandPrince<'d> {
    fn new(dynamics: &'d dyn Dynamics) -> Self {
        DormandPrince { dynamics }
    }
}

impl Stepper for DormandPrince<'_> {
    fn step(&mut self, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        for s in 0..7 {
            stage.copy_from_slice(y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = DP_A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        stage[i] += h * a * kj[i];
                    }
                }
            }
            let q = self.dynamics.at(t + DP_C[s] * h)?;
            q.apply(&stage, &mut k[s]);
        }
        // the seventh stage is evaluated at the fifth-order solution
        let y_new = stage;
        let mut err = vec![0.0; n];
        for (s, ks) in k.iter().enumerate() {
            for i in 0..n {
                err[i] += h * DP_E[s] * ks[i];
            }
        }
        Ok((y_new, err))
    }

    fn error_order(&self) -> f64 {
        5.0
    }
}

// SDIRK, order 4, embedded order 3, stiffly accurate, L-stable.
const SD_GAMMA: f64 = 0.25;
const SD_C: [f64; 5] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
const SD_A: [[f64; 5]; 5] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
// b − b̂
const SD_E: [f64; 5] = [-3.0 / 16.0, -27.0 / 32.0, 25.0 / 32.0, 0.0, 0.25];

/// Solver for `u (I − c Q) = rhs`.
enum StageSystem {
    Acyclic { order: Vec<usize> },
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl StageSystem {
    fn build(q: &Generator, c: f64, order: Option<&[usize]>) -> Result<Self> {
        if let Some(order) = order {
            return Ok(StageSystem::Acyclic {
                order: order.to_vec(),
            });
        }
        if let Some(order) = q.topological_order() {
            return Ok(StageSystem::Acyclic { order });
        }
        let dim = q.dim();
        if dim > MAX_DENSE_DIM {
            return Err(Error::Capacity(format!(
                "cyclic generator of dimension {dim} exceeds the implicit-solver limit {MAX_DENSE_DIM}"
            )));
        }
        // transpose so that the row-vector system becomes M x = rhs
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for to in 0..dim {
            m[(to, to)] += c * q.exit_rate(to);
            for (from, r) in q.incoming(to) {
                m[(to, from)] -= c * r;
            }
        }
        Ok(StageSystem::Dense(m.lu()))
    }

    fn solve(&self, q: &Generator, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            StageSystem::Acyclic { order } => {
                let mut u = vec![0.0; rhs.len()];
                for &s in order {
                    let gain: f64 = q.incoming(s).map(|(from, r)| r * u[from]).sum();
                    u[s] = (rhs[s] + c * gain) / (1.0 + c * q.exit_rate(s));
                }
                Ok(u)
            }
            StageSystem::Dense(lu) => {
                let b = DVector::from_column_slice(rhs);
                let x = lu
                    .solve(&b)
                    .ok_or_else(|| Error::Accuracy("singular implicit stage matrix".into()))?;
                Ok(x.iter().copied().collect())
            }
        }
    }
}

struct Sdirk<'d> {
    dynamics: &'d dyn Dynamics,
    /// Topological order of a constant acyclic generator.
    order: Option<Vec<usize>>,
    /// Dense factorization cache for a constant cyclic generator, keyed by step.
    cached: Option<(f64, StageSystem)>,
}

impl<'d> Sdirk<'d> {
    fn new(dynamics: &'d dyn Dynamics) -> Result<Self> {
        let order = if dynamics.is_constant() {
            dynamics.at(0.0)?.topological_order()
        } else {
            None
        };
        Ok(Sdirk {
            dynamics,
            order,
            cached: None,
        })
    }
}

impl Stepper for Sdirk<'_> {
    fn step(&mut self, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = y.len();
        let c = h * SD_GAMMA;
        let dynamics = self.dynamics;
        let constant = dynamics.is_constant();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(5);
        let mut u = Vec::new();
        let mut last: Option<(Cow<'_, Generator>, StageSystem)> = None;
        for s in 0..5 {
            let mut rhs = y.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let a = SD_A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        rhs[i] += h * a * kj[i];
                    }
                }
            }
            let q = dynamics.at(t + SD_C[s] * h)?;
            u = if constant && self.order.is_none() {
                if self.cached.as_ref().is_none_or(|(hc, _)| *hc != h) {
                    self.cached = Some((h, StageSystem::build(&q, c, None)?));
                }
                self.cached
                    .as_ref()
                    .expect("cache filled above")
                    .1
                    .solve(&q, c, &rhs)?
            } else {
                let sys = StageSystem::build(&q, c, self.order.as_deref())?;
                let u = sys.solve(&q, c, &rhs)?;
                last = Some((q, sys));
                u
            };
            // stage derivative recovered from the stage value
            k.push(u.iter().zip(&rhs).map(|(ui, ri)| (ui - ri) / c).collect());
        }
        let mut raw = vec![0.0; n];
        for (s, ks) in k.iter().enumerate() {
            if SD_E[s] != 0.0 {
                for i in 0..n {
                    raw[i] += h * SD_E[s] * ks[i];
                }
            }
        }
        // filter the estimate through the stage matrix to tame stiff components
        let err = match (&last, &self.cached) {
            (Some((q, sys)), _) => sys.solve(q, c, &raw)?,
            (None, Some((_, sys))) => sys.solve(dynamics.at(t + h)?.as_ref(), c, &raw)?,
            (None, None) => raw,
        };
        Ok((u, err))
    }

    fn error_order(&self) -> f64 {
        4.0
    }
}
