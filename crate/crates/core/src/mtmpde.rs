//! Split-step evolver for the MTM system
//!
//! ```text
//! i(u_t + u_x) + v + |v|²u = 0
//! i(v_t − v_x) + u + |u|²v = 0
//! ```
//!
//! Transport moves `u` right and `v` left by `τ`; whole-cell shifts are
//! index moves, fractional ones use an FFT phase ramp. The coupling flow
//! `u_t = i(v + |v|²u)`, `v_t = i(u + |u|²v)` is pointwise and conserves
//! `|u|² + |v|²`; it is integrated by RK4.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{sup_abs, Potential};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Splitting {
    Lie,
    #[default]
    Strang,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Fields vanish outside the grid.
    #[default]
    ZeroPad,
    /// The grid is one period.
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolverConfig {
    /// Time step; `0 < |dt| ≤ dx`. Negative steps run backwards.
    pub dt: f64,
    pub steps: usize,
    pub splitting: Splitting,
    pub boundary: Boundary,
    /// Diagnostics are recorded every this many steps (0: only at the ends).
    pub output_every: usize,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        EvolverConfig { dt: 0.01, steps: 100, splitting: Splitting::Strang, boundary: Boundary::ZeroPad, output_every: 0 }
    }
}

impl EvolverConfig {
    /// Step size `dx` (the exact-shift case) with the given splitting.
    pub fn matched(dx: f64, splitting: Splitting) -> Self {
        EvolverConfig { dt: dx, splitting, ..Default::default() }
    }
}

fn check_step(dt: f64, dx: f64) -> Result<()> {
    if !dt.is_finite() || dt == 0.0 || dt.abs() > dx * (1.0 + 1e-12) {
        return Err(Error::IncompatibleStep { dt, dx });
    }
    Ok(())
}

/// Shifts by arbitrary distances with cached FFT plans.
struct Shifter {
    n: usize,
    dx: f64,
    boundary: Boundary,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Shifter {
    fn new(n: usize, dx: f64, boundary: Boundary) -> Self {
        let len = match boundary {
            Boundary::ZeroPad => 2 * n,
            Boundary::Periodic => n,
        };
        let mut planner = FftPlanner::new();
        Shifter { n, dx, boundary, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    /// `f(x) ↦ f(x − d)` for a distance `d` (positive moves right).
    fn shift(&self, f: &mut Vec<C64>, d: f64) {
        let cells = d / self.dx;
        let whole = cells.round();
        let frac = cells - whole;
        if frac.abs() > 1e-12 {
            self.shift_fractional(f, frac);
        }
        self.shift_cells(f, whole as i64);
    }

    fn shift_cells(&self, f: &mut Vec<C64>, k: i64) {
        if k == 0 {
            return;
        }
        let n = self.n as i64;
        let zero = C64::new(0.0, 0.0);
        let old = std::mem::take(f);
        *f = (0..n)
            .map(|j| {
                let src = j - k;
                match self.boundary {
                    Boundary::Periodic => old[src.rem_euclid(n) as usize],
                    Boundary::ZeroPad => {
                        if (0..n).contains(&src) {
                            old[src as usize]
                        } else {
                            zero
                        }
                    }
                }
            })
            .collect();
    }

    fn shift_fractional(&self, f: &mut [C64], cells: f64) {
        let len = self.fwd.len();
        let mut buf = vec![C64::new(0.0, 0.0); len];
        buf[..self.n].copy_from_slice(f);
        self.fwd.process(&mut buf);
        for (q, b) in buf.iter_mut().enumerate() {
            // signed wavenumber index; the Nyquist mode gets a real factor
            let m = if 2 * q < len { q as f64 } else { q as f64 - len as f64 };
            let arg = -2.0 * std::f64::consts::PI * m * cells / len as f64;
            *b *= if 2 * q == len { C64::new(arg.cos(), 0.0) } else { C64::from_polar(1.0, arg) };
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        for (j, x) in f.iter_mut().enumerate() {
            *x = buf[j] * scale;
        }
    }
}

#[inline]
fn coupling_rhs(u: C64, v: C64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    (i * (v + v.norm_sqr() * u), i * (u + u.norm_sqr() * v))
}

/// Pointwise RK4 for the coupling flow over time `h`.
fn couple(u: &mut [C64], v: &mut [C64], h: f64) {
    u.par_iter_mut().zip(v.par_iter_mut()).with_min_len(256).for_each(|(u, v)| {
        let (u0, v0) = (*u, *v);
        let (k1u, k1v) = coupling_rhs(u0, v0);
        let (k2u, k2v) = coupling_rhs(u0 + 0.5 * h * k1u, v0 + 0.5 * h * k1v);
        let (k3u, k3v) = coupling_rhs(u0 + 0.5 * h * k2u, v0 + 0.5 * h * k2v);
        let (k4u, k4v) = coupling_rhs(u0 + h * k3u, v0 + h * k3v);
        *u = u0 + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        *v = v0 + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    });
}

/// One time step.
pub fn step(p: &Potential, cfg: &EvolverConfig) -> Result<Potential> {
    let dx = p.grid().dx();
    check_step(cfg.dt, dx)?;
    let sh = Shifter::new(p.grid().len(), dx, cfg.boundary);
    let (grid, mut u, mut v) = p.clone().into_fields();
    let dt = cfg.dt;
    match cfg.splitting {
        Splitting::Lie => {
            sh.shift(&mut u, dt);
            sh.shift(&mut v, -dt);
            couple(&mut u, &mut v, dt);
        }
        Splitting::Strang => {
            sh.shift(&mut u, 0.5 * dt);
            sh.shift(&mut v, -0.5 * dt);
            couple(&mut u, &mut v, dt);
            sh.shift(&mut u, 0.5 * dt);
            sh.shift(&mut v, -0.5 * dt);
        }
    }
    Potential::new(grid, u, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub charge: f64,
    pub max_u: f64,
    pub max_v: f64,
}

impl DiagnosticsRow {
    fn of(p: &Potential, t: f64) -> Self {
        DiagnosticsRow { t, charge: p.charge(), max_u: p.sup_u(), max_v: p.sup_v() }
    }
}

pub struct EvolveOutput {
    pub p: Potential,
    pub trace: Vec<DiagnosticsRow>,
}

/// Evolve to time `t_end` (may be negative). The step count is
/// `⌈|t_end|/|dt|⌉` and the step is shrunk to land exactly on `t_end`;
/// `cfg.steps` is ignored. Consecutive Strang half-shifts are fused.
pub fn evolve(p0: &Potential, t_end: f64, cfg: &EvolverConfig) -> Result<EvolveOutput> {
    let dx = p0.grid().dx();
    check_step(cfg.dt, dx)?;
    if !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("final time must be finite, got {t_end}")));
    }
    let mut trace = vec![DiagnosticsRow::of(p0, 0.0)];
    if t_end == 0.0 {
        return Ok(EvolveOutput { p: p0.clone(), trace });
    }
    let steps = (t_end.abs() / cfg.dt.abs() - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let sh = Shifter::new(p0.grid().len(), dx, cfg.boundary);
    let (grid, mut u, mut v) = p0.clone().into_fields();

    let mut pending = match cfg.splitting {
        Splitting::Strang => {
            sh.shift(&mut u, 0.5 * dt);
            sh.shift(&mut v, -0.5 * dt);
            0.5 * dt
        }
        Splitting::Lie => 0.0,
    };
    for s in 1..=steps {
        if cfg.splitting == Splitting::Lie {
            sh.shift(&mut u, dt);
            sh.shift(&mut v, -dt);
        }
        couple(&mut u, &mut v, dt);
        let last = s == steps;
        let record = last || (cfg.output_every > 0 && s % cfg.output_every == 0);
        if cfg.splitting == Splitting::Strang {
            if last {
                sh.shift(&mut u, pending);
                sh.shift(&mut v, -pending);
            } else if record {
                let (mut uu, mut vv) = (u.clone(), v.clone());
                sh.shift(&mut uu, pending);
                sh.shift(&mut vv, -pending);
                trace.push(DiagnosticsRow::of(&Potential::new(grid, uu, vv)?, s as f64 * dt));
            }
            if !last {
                sh.shift(&mut u, dt);
                sh.shift(&mut v, -dt);
                pending = 0.5 * dt;
            }
        } else if record && !last {
            trace.push(DiagnosticsRow::of(&Potential::new(grid, u.clone(), v.clone())?, s as f64 * dt));
        }
    }
    let p = Potential::new(grid, u, v)?;
    trace.push(DiagnosticsRow::of(&p, t_end));
    Ok(EvolveOutput { p, trace })
}

/// Relative charge drift over a diagnostics trace.
pub fn charge_drift(trace: &[DiagnosticsRow]) -> f64 {
    let q0 = trace.first().map(|r| r.charge).unwrap_or(0.0);
    let worst = trace.iter().map(|r| (r.charge - q0).abs()).fold(0.0, f64::max);
    if q0 > 0.0 {
        worst / q0
    } else {
        worst
    }
}

/// `max |f − g|` over two potentials on the same grid, relative to `g`.
pub fn relative_sup_distance(f: &Potential, g: &Potential) -> (f64, f64) {
    let (du, dv) = f.max_deviation(g);
    let su = sup_abs(g.u());
    let sv = sup_abs(g.v());
    (if su > 0.0 { du / su } else { du }, if sv > 0.0 { dv / sv } else { dv })
}
