//! Reconstruction of `(u, v)` from the two Riemann–Hilbert problems, and
//! the end-to-end pipelines built on it.
//!
//! With `M(0)` and `moment1 = lim s(M − I)` of each problem:
//! `u = M_I(0)₁₁ · conj(moment1_I₁₂)`, `v = M_II(0)₁₁ · conj(moment1_II₁₂)`,
//! `2iu′ + u|v|² + v = moment1_I₂₁ · M_I(0)₁₁`,
//! `−2iv′ + |u|²v + u = moment1_II₂₁ · M_II(0)₁₁`,
//! and `M_I(0)₁₁ = e^{−(i/2)g}`, `M_II(0)₁₁ = e^{(i/2)g}` with
//! `g(x) = ∫_x^∞ (|u|² + |v|²)`.

use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::direct::{compute_scattering, detect_spectrum_obstructions, DirectConfig, ObstructionReport, ScatteringSet};
use crate::error::{Error, Result};
use crate::lattice::{derivative, sup_abs, Potential, SpectralChart, SpectralGrid, Spacing, XGrid};
use crate::rhsolve::{solve_rhp_sweep, RhConfig, RhSolution, RhpChart};
use crate::spectra::{evolve_reflections, reflections_from_scattering, LadderReport, ReflectionSet};

#[derive(Clone, Debug)]
pub struct ReconstructionOutput {
    pub p: Potential,
    /// `u′` read from `moment1_I₂₁`.
    pub du: Vec<C64>,
    /// `v′` read from `moment1_II₂₁`.
    pub dv: Vec<C64>,
    /// `∫_x^∞ (|u|² + |v|²)` read from `arg M_I(0)₁₁`.
    pub gauge: Vec<f64>,
    /// Same quantity read from `arg M_II(0)₁₁`.
    pub gauge_ii: Vec<f64>,
    /// `max_x ||M_I(0)₁₁| − 1|` and the same for problem II.
    pub gauge_modulus_defect: (f64, f64),
    /// Largest discrete residual of any solve.
    pub max_residual: f64,
}

/// Continuous phase along x, starting from the principal value at the
/// right end (where the gauge vanishes).
fn unwrapped_phase(z: &[C64]) -> Vec<f64> {
    let n = z.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[n - 1] = z[n - 1].arg();
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] + (z[j] / z[j + 1]).arg();
    }
    out
}

fn modulus_defect(sols: &[RhSolution]) -> f64 {
    sols.iter().map(|s| (s.value0.get(0, 0).norm() - 1.0).abs()).fold(0.0, f64::max)
}

fn check_gauge(sols: &[RhSolution], xs: &[f64], tol: f64) -> Result<()> {
    for (s, &x) in sols.iter().zip(xs) {
        let m = s.value0.get(0, 0).norm();
        if (m - 1.0).abs() > tol {
            return Err(Error::GaugeInconsistent { x, modulus: m });
        }
    }
    Ok(())
}

/// `u`, the gauge, and the raw `2iu′ + u|v|² + v` from RHP I solutions.
pub fn recover_u(sols: &[RhSolution], xs: &[f64], gauge_tol: f64) -> Result<(Vec<C64>, Vec<C64>, Vec<f64>)> {
    check_gauge(sols, xs, gauge_tol)?;
    let u = sols.iter().map(|s| s.value0.get(0, 0) * s.moment1.get(0, 1).conj()).collect();
    let combo = sols.iter().map(|s| s.moment1.get(1, 0) * s.value0.get(0, 0)).collect();
    let m11: Vec<C64> = sols.iter().map(|s| s.value0.get(0, 0)).collect();
    let gauge = unwrapped_phase(&m11).into_iter().map(|p| -2.0 * p).collect();
    Ok((u, combo, gauge))
}

/// `v`, the gauge, and the raw `−2iv′ + |u|²v + u` from RHP II solutions.
pub fn recover_v(sols: &[RhSolution], xs: &[f64], gauge_tol: f64) -> Result<(Vec<C64>, Vec<C64>, Vec<f64>)> {
    check_gauge(sols, xs, gauge_tol)?;
    let v = sols.iter().map(|s| s.value0.get(0, 0) * s.moment1.get(0, 1).conj()).collect();
    let combo = sols.iter().map(|s| s.moment1.get(1, 0) * s.value0.get(0, 0)).collect();
    let m11: Vec<C64> = sols.iter().map(|s| s.value0.get(0, 0)).collect();
    let gauge = unwrapped_phase(&m11).into_iter().map(|p| 2.0 * p).collect();
    Ok((v, combo, gauge))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseConfig {
    pub rh: RhConfig,
    /// Allowed `||M(0)₁₁| − 1|` before the reconstruction is refused.
    pub gauge_tol: f64,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig { rh: RhConfig::default(), gauge_tol: 1e-4 }
    }
}

/// Solve both problems at every x of `grid` at time `t` and reconstruct.
pub fn inverse(rs: &ReflectionSet, grid: &XGrid, t: f64, cfg: &InverseConfig) -> Result<ReconstructionOutput> {
    let xs = grid.xs();
    // RHP II first: v is needed to unpack u′ from RHP I.
    let sol_ii = solve_rhp_sweep(rs, &xs, t, RhpChart::RhpII, cfg.rh)?;
    let sol_i = solve_rhp_sweep(rs, &xs, t, RhpChart::RhpI, cfg.rh)?;
    let (v, combo_v, gauge_ii) = recover_v(&sol_ii, &xs, cfg.gauge_tol)?;
    let (u, combo_u, gauge) = recover_u(&sol_i, &xs, cfg.gauge_tol)?;
    let two_i = C64::new(0.0, 2.0);
    let du = (0..u.len()).map(|j| (combo_u[j] - u[j] * v[j].norm_sqr() - v[j]) / two_i).collect();
    let dv = (0..u.len()).map(|j| -(combo_v[j] - u[j].norm_sqr() * v[j] - u[j]) / two_i).collect();
    let max_residual = sol_i.iter().chain(&sol_ii).map(|s| s.residual).fold(0.0, f64::max);
    Ok(ReconstructionOutput {
        p: Potential::new(*grid, u, v)?,
        du,
        dv,
        gauge,
        gauge_ii,
        gauge_modulus_defect: (modulus_defect(&sol_i), modulus_defect(&sol_ii)),
        max_residual,
    })
}

/// Full pipeline configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub z_max: f64,
    pub nodes: usize,
    pub spacing: Spacing,
    pub direct: DirectConfig,
    pub inverse: InverseConfig,
    /// Smallest `|a|` accepted on the grid.
    pub a_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            z_max: 16.0,
            nodes: 512,
            spacing: Spacing::Mapped,
            direct: DirectConfig::default(),
            inverse: InverseConfig::default(),
            a_threshold: 1e-3,
        }
    }
}

impl PipelineConfig {
    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::symmetric(self.z_max, self.nodes, self.spacing, SpectralChart::Z)
    }
}

/// Invariant defects and error norms of one round trip.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub t: f64,
    /// `‖u_rec − u₀‖_∞ / ‖u₀‖_∞` (absolute if `u₀ ≡ 0`); only meaningful at `t = 0`.
    pub rel_err_u: f64,
    pub rel_err_v: f64,
    pub max_wronskian_drift: f64,
    pub max_determinant_defect: f64,
    pub max_chart_defect: f64,
    pub limit_mismatch_zero: f64,
    pub limit_mismatch_infinity: f64,
    pub min_abs_a: f64,
    pub winding: i64,
    pub ladder: LadderReport,
    pub c0: f64,
    pub gauge_modulus_defect: f64,
    /// `max |g_I − g_II|`
    pub gauge_chart_defect: f64,
    /// `max |g_I − ∫_x^∞(|u_rec|² + |v_rec|²)|`
    pub gauge_charge_defect: f64,
    /// `max |u′_moment − u′_differenced|`, same for v.
    pub derivative_defect_u: f64,
    pub derivative_defect_v: f64,
    pub max_rh_residual: f64,
    pub seconds_direct: f64,
    pub seconds_inverse: f64,
}

pub struct RoundtripOutput {
    pub recon: ReconstructionOutput,
    pub scattering: ScatteringSet,
    pub reflections: ReflectionSet,
    pub obstruction: ObstructionReport,
    pub report: RoundtripReport,
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let s = sup_abs(b);
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Direct transform, spectral evolution to `t`, inverse transform on the
/// same x-grid.
pub fn roundtrip(p0: &Potential, t: f64, cfg: &PipelineConfig) -> Result<RoundtripOutput> {
    let grid = cfg.spectral_grid()?;
    let t0 = Instant::now();
    let ss = compute_scattering(p0, &grid, &cfg.direct)?;
    let obstruction = detect_spectrum_obstructions(&ss, cfg.a_threshold);
    let rs0 = reflections_from_scattering(&ss, cfg.a_threshold)?;
    let seconds_direct = t0.elapsed().as_secs_f64();
    let rs = evolve_reflections(&rs0, t);
    let t1 = Instant::now();
    let recon = inverse(&rs, p0.grid(), t, &cfg.inverse)?;
    let seconds_inverse = t1.elapsed().as_secs_f64();
    let report = build_report(p0, t, &ss, &rs, &obstruction, &recon, seconds_direct, seconds_inverse);
    Ok(RoundtripOutput { recon, scattering: ss, reflections: rs, obstruction, report })
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    p0: &Potential,
    t: f64,
    ss: &ScatteringSet,
    rs: &ReflectionSet,
    obstruction: &ObstructionReport,
    recon: &ReconstructionOutput,
    seconds_direct: f64,
    seconds_inverse: f64,
) -> RoundtripReport {
    let mx = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let h = ss.grid.half_len();
    let n = ss.grid.len();
    let p = &recon.p;
    let dx = p.grid().dx();
    let tail = p.tail_charge();
    RoundtripReport {
        t,
        rel_err_u: rel_err(p.u(), p0.u()),
        rel_err_v: rel_err(p.v(), p0.v()),
        max_wronskian_drift: mx(&ss.diagnostics.wronskian_drift),
        max_determinant_defect: mx(&ss.diagnostics.determinant_defect),
        max_chart_defect: mx(&ss.diagnostics.chart_defect),
        limit_mismatch_zero: (ss.a[h] - ss.a0).norm().max((ss.a[h - 1] - ss.a0).norm()),
        limit_mismatch_infinity: (ss.a[n - 1] - ss.ainf).norm().max((ss.a[0] - ss.ainf).norm()),
        min_abs_a: obstruction.min_abs_a,
        winding: obstruction.winding,
        ladder: rs.ladder_report(),
        c0: rs.c0(),
        gauge_modulus_defect: recon.gauge_modulus_defect.0.max(recon.gauge_modulus_defect.1),
        gauge_chart_defect: recon.gauge.iter().zip(&recon.gauge_ii).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        gauge_charge_defect: recon.gauge.iter().zip(&tail).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        derivative_defect_u: max_diff(&recon.du, &derivative(p.u(), dx)),
        derivative_defect_v: max_diff(&recon.dv, &derivative(p.v(), dx)),
        max_rh_residual: recon.max_residual,
        seconds_direct,
        seconds_inverse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_xgrid;

    #[test]
    fn zero_potential_round_trip_is_exact() {
        let p0 = Potential::zero(make_xgrid(5.0, 101).unwrap());
        let cfg = PipelineConfig { nodes: 64, ..Default::default() };
        let out = roundtrip(&p0, 0.0, &cfg).unwrap();
        assert!(out.recon.p.u().iter().chain(out.recon.p.v()).all(|z| *z == C64::new(0.0, 0.0)));
        assert!(out.recon.gauge.iter().all(|g| *g == 0.0));
        assert_eq!(out.report.rel_err_u, 0.0);
    }

    #[test]
    fn unwrap_follows_phase_through_branch_cut() {
        let z: Vec<C64> = (0..50).map(|j| C64::from_polar(1.0, 0.3 * j as f64)).collect();
        let p = unwrapped_phase(&z);
        for j in 0..49 {
            assert!((p[j + 1] - p[j] - 0.3).abs() < 1e-12);
        }
    }
}
