//! Reflection coefficients in both charts and their time evolution.
//!
//! On the z-grid `r̂₊ = b₋/a`, `r̂₋ = b₊/a`; on the reciprocal ω-grid
//! `r₊(ω) = r̂₋(1/ω)`, `r₋(ω) = r̂₊(1/ω)`. The ladders `r₊ = ωr₋` and
//! `r̂₊ = zr̂₋` hold by construction. The λ-chart coefficient is
//! `r(λ) = r̂₊(λ²)/λ`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::direct::{detect_spectrum_obstructions, ScatteringSet, Verdict};
use crate::error::{Error, Result};
use crate::lattice::{lambda_of, SpectralChart, SpectralGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSet {
    pub omega_grid: SpectralGrid,
    pub z_grid: SpectralGrid,
    /// `r₊(ω)`
    pub rp: Vec<C64>,
    /// `r₋(ω)`
    pub rm: Vec<C64>,
    /// `r̂₊(z)`
    pub rhp: Vec<C64>,
    /// `r̂₋(z)`
    pub rhm: Vec<C64>,
    pub t: f64,
}

/// Defects of the algebraic relations between the stored arrays.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    /// `max |r₊ − ωr₋|`
    pub omega_ladder: f64,
    /// `max |r̂₊ − zr̂₋|`
    pub z_ladder: f64,
    /// `max |r±(ω) − r̂∓(1/ω)|`
    pub cross_chart: f64,
}

impl ReflectionSet {
    /// All-zero reflection data on `z_grid` and its reciprocal.
    pub fn zero(z_grid: SpectralGrid) -> Self {
        let n = z_grid.len();
        let zero = vec![C64::new(0.0, 0.0); n];
        ReflectionSet {
            omega_grid: z_grid.reciprocal_of(),
            z_grid,
            rp: zero.clone(),
            rm: zero.clone(),
            rhp: zero.clone(),
            rhm: zero,
            t: 0.0,
        }
    }

    /// Build the set from `r̂₋` alone; every other array follows.
    pub fn from_rhm(z_grid: SpectralGrid, rhm: Vec<C64>, t: f64) -> Result<Self> {
        if z_grid.chart() != SpectralChart::Z {
            return Err(Error::InvalidArgument("reflection data need a Z-chart grid".into()));
        }
        if rhm.len() != z_grid.len() {
            return Err(Error::ShapeMismatch { expected: z_grid.len(), got: rhm.len() });
        }
        let rhp: Vec<C64> = rhm.iter().zip(z_grid.nodes()).map(|(r, z)| r * z).collect();
        let rp = (0..rhm.len()).map(|j| rhm[z_grid.mirror_index(j)]).collect();
        let rm = (0..rhm.len()).map(|j| rhp[z_grid.mirror_index(j)]).collect();
        Ok(ReflectionSet { omega_grid: z_grid.reciprocal_of(), z_grid, rp, rm, rhp, rhm, t })
    }

    pub fn ladder_report(&self) -> LadderReport {
        let om = self.omega_grid.nodes();
        let zs = self.z_grid.nodes();
        let mut rep = LadderReport::default();
        for j in 0..om.len() {
            rep.omega_ladder = rep.omega_ladder.max((self.rp[j] - om[j] * self.rm[j]).norm());
            rep.z_ladder = rep.z_ladder.max((self.rhp[j] - zs[j] * self.rhm[j]).norm());
            let m = self.z_grid.mirror_index(j);
            rep.cross_chart = rep
                .cross_chart
                .max((self.rp[j] - self.rhm[m]).norm())
                .max((self.rm[j] - self.rhp[m]).norm());
        }
        rep
    }

    /// `r(λ)` at every z-node, with `λ = √z`.
    pub fn r_lambda(&self) -> Vec<C64> {
        self.rhp.iter().zip(self.z_grid.nodes()).map(|(r, &z)| r / lambda_of(z)).collect()
    }

    /// `c₀ = √(min_{z<0} (1 − |r(λ)|²))`, the grid surrogate of the
    /// positivity bound on the imaginary λ-axis.
    pub fn c0(&self) -> f64 {
        let h = self.z_grid.half_len();
        (0..h)
            .map(|k| 1.0 - (self.rhp[k] * self.rhm[k]).norm())
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt()
    }

    /// Same data rescaled so that `max |r̂₋|` equals `target`.
    pub fn scaled_to_max(&self, target: f64) -> Self {
        let m = self.rhm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let f = if m > 0.0 { target / m } else { 0.0 };
        ReflectionSet {
            rp: self.rp.iter().map(|z| z * f).collect(),
            rm: self.rm.iter().map(|z| z * f).collect(),
            rhp: self.rhp.iter().map(|z| z * f).collect(),
            rhm: self.rhm.iter().map(|z| z * f).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        [&self.rp, &self.rm, &self.rhp, &self.rhm]
            .iter()
            .flat_map(|v| v.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Reflection coefficients from scattering data, refusing obstructed sets.
///
/// The stored `b±` are first reconciled onto the exact relation `b₋ = zb₊`
/// through `β = (λb₊ + b₋/λ)/2`, so the ladders hold to rounding.
pub fn reflections_from_scattering(ss: &ScatteringSet, a_threshold: f64) -> Result<ReflectionSet> {
    let rep = detect_spectrum_obstructions(ss, a_threshold);
    if rep.verdict == Verdict::Obstructed {
        return Err(Error::Obstructed { min_abs_a: rep.min_abs_a, winding: rep.winding });
    }
    let rhm = ss
        .grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let lam = lambda_of(z);
            let beta = 0.5 * (lam * ss.bp[k] + ss.bm[k] / lam);
            beta / lam / ss.a[k]
        })
        .collect();
    ReflectionSet::from_rhm(ss.grid.clone(), rhm, 0.0)
}

/// Advance reflection data by `dt`:
/// `r±(ω) ↦ r±(ω)e^{−i·dt(ω+1/ω)/2}`, `r̂±(z) ↦ r̂±(z)e^{−i·dt(z+1/z)/2}`.
pub fn evolve_reflections(rs: &ReflectionSet, dt: f64) -> ReflectionSet {
    let phase = |g: &SpectralGrid, k: usize| C64::from_polar(1.0, -0.5 * dt * g.sum_recip(k));
    let n = rs.z_grid.len();
    let mut out = rs.clone();
    for k in 0..n {
        let pw = phase(&rs.omega_grid, k);
        out.rp[k] *= pw;
        out.rm[k] *= pw;
        let pz = phase(&rs.z_grid, k);
        out.rhp[k] *= pz;
        out.rhm[k] *= pz;
    }
    out.t = rs.t + dt;
    out
}

/// Discrete weighted norms of one reflection coefficient on its grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReflectionNorms {
    /// `Ḣ¹(ℝ∖[−1,1])` seminorm.
    pub h1_outer: f64,
    /// `Ḣ^{1,1}([−1,1])` seminorm, derivative weighted by `(1+s²)`.
    pub h11_inner: f64,
    /// `L^{2,1}`: weight `(1+s²)`.
    pub l21: f64,
    /// `L^{2,−2}`: weight `s^{−4}`.
    pub l2m2: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReflectionNormReport {
    pub rp: ReflectionNorms,
    pub rm: ReflectionNorms,
    pub rhp: ReflectionNorms,
    pub rhm: ReflectionNorms,
}

fn coefficient_norms(f: &[C64], g: &SpectralGrid) -> ReflectionNorms {
    let s = g.nodes();
    let w = g.quadrature_weights();
    let h = g.half_len();
    let n = s.len();
    let mut acc = [0.0; 4];
    for k in 0..n {
        // centered difference within the half-line, one-sided at its ends
        let (lo, hi) = if k == 0 || k == h {
            (k, k + 1)
        } else if k == h - 1 || k == n - 1 {
            (k - 1, k)
        } else {
            (k - 1, k + 1)
        };
        let d = ((f[hi] - f[lo]) / (s[hi] - s[lo])).norm_sqr();
        let a = f[k].norm_sqr();
        let x2 = s[k] * s[k];
        if s[k].abs() > 1.0 {
            acc[0] += w[k] * d;
        } else {
            acc[1] += w[k] * (1.0 + x2) * d;
        }
        acc[2] += w[k] * (1.0 + x2) * a;
        acc[3] += w[k] * a / (x2 * x2);
    }
    ReflectionNorms { h1_outer: acc[0].sqrt(), h11_inner: acc[1].sqrt(), l21: acc[2].sqrt(), l2m2: acc[3].sqrt() }
}

pub fn reflection_norm_report(rs: &ReflectionSet) -> ReflectionNormReport {
    ReflectionNormReport {
        rp: coefficient_norms(&rs.rp, &rs.omega_grid),
        rm: coefficient_norms(&rs.rm, &rs.omega_grid),
        rhp: coefficient_norms(&rs.rhp, &rs.z_grid),
        rhm: coefficient_norms(&rs.rhm, &rs.z_grid),
    }
}
