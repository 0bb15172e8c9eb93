//! Direct scattering: Jost functions in both charts and the coefficients
//! `a`, `b₊`, `b₋` on a real spectral grid.
//!
//! With `z = λ²` the spectral problem takes the form `Ψ_x = 𝓛Ψ` with
//! `𝓛 = Q₁ + zQ₂ + (i/4)(z − 1/z)σ₃` (small-λ chart) or
//! `𝓛̂ = Q̂₁ + z⁻¹Q̂₂ + (i/4)(z − 1/z)σ₃` (large-λ chart). Both generators are
//! traceless, so a unimodular integrator keeps every Wronskian independent
//! of `x` up to rounding.
//!
//! The normalized Jost functions are `m = Ψe^{−iθ}`, `n = Ψe^{iθ}` with
//! `θ = x(z − 1/z)/4`; `m± → e₁` and `n± → e₂` as `x → ±∞`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{derivative, refine, sup_abs, trapezoid, truncation_tail, Potential, SpectralChart, SpectralGrid, TailReport, XGrid};
use crate::mat2::{wronskian, Mat2, Vec2, I, ONE, ZERO};

/// Which gauge of the spectral problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// Bounded near `z = 0`.
    SmallLambda,
    /// Bounded near `|z| = ∞`.
    LargeLambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JostKind {
    MMinus,
    MPlus,
    NMinus,
    NPlus,
}

impl JostKind {
    fn anchored_left(self) -> bool {
        matches!(self, JostKind::MMinus | JostKind::NMinus)
    }

    fn is_m(self) -> bool {
        matches!(self, JostKind::MMinus | JostKind::MPlus)
    }
}

/// `Q₁`, `Q₂` (or `Q̂₁`, `Q̂₂`) sampled on a refined copy of the x-grid.
///
/// Sample `i` of the refined arrays sits at `x0 + i·dx/(2·substeps)`, so the
/// endpoints and midpoints of every integration substep are available.
#[derive(Clone, Debug)]
pub struct CoefficientMatrices {
    chart: Chart,
    grid: XGrid,
    substeps: usize,
    q1: Vec<Mat2>,
    q2: Vec<Mat2>,
}

impl CoefficientMatrices {
    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn stride(&self) -> usize {
        2 * self.substeps
    }

    /// `Q₁` at base sample `j`.
    pub fn q1(&self, j: usize) -> Mat2 {
        self.q1[j * self.stride()]
    }

    /// `Q₂` at base sample `j`.
    pub fn q2(&self, j: usize) -> Mat2 {
        self.q2[j * self.stride()]
    }

    /// Full generator at refined sample `i`.
    #[inline]
    fn generator(&self, i: usize, z: f64) -> Mat2 {
        let zf = match self.chart {
            Chart::SmallLambda => z,
            Chart::LargeLambda => 1.0 / z,
        };
        let d = I * (0.25 * (z - 1.0 / z));
        let mut a = self.q1[i] + self.q2[i].scale_re(zf);
        a.0[0][0] += d;
        a.0[1][1] -= d;
        a
    }

    /// Propagator of `Ψ` across base cell `k` (from `x_k` to `x_{k+1}`),
    /// built from fourth-order Magnus substeps.
    fn cell_propagator(&self, k: usize, z: f64) -> Mat2 {
        let s = self.substeps;
        let h = self.grid.dx() / s as f64;
        let mut u = Mat2::IDENTITY;
        for q in 0..s {
            let i0 = (k * s + q) * 2;
            let a0 = self.generator(i0, z);
            let am = self.generator(i0 + 1, z);
            let a1 = self.generator(i0 + 2, z);
            let omega = (a0 + am.scale_re(4.0) + a1).scale_re(h / 6.0) - a0.commutator(&a1).scale_re(h * h / 12.0);
            u = omega.exp_traceless() * u;
        }
        u
    }
}

/// Build the coefficient fields with one Magnus substep per grid cell.
pub fn assemble_coefficients(p: &Potential, chart: Chart) -> CoefficientMatrices {
    assemble_coefficients_refined(p, chart, 1)
}

/// Build the coefficient fields with `substeps` Magnus substeps per cell.
/// Off-grid values of `u`, `v`, `u_x`, `v_x` come from local 8-point
/// interpolation of the samples and their high-order centered differences.
pub fn assemble_coefficients_refined(p: &Potential, chart: Chart, substeps: usize) -> CoefficientMatrices {
    let substeps = substeps.max(1);
    let grid = *p.grid();
    let factor = 2 * substeps;
    let ux = derivative(p.u(), grid.dx());
    let vx = derivative(p.v(), grid.dx());
    let u = refine(p.u(), factor);
    let v = refine(p.v(), factor);
    let ux = refine(&ux, factor);
    let vx = refine(&vx, factor);
    let half_i = I * 0.5;
    let quarter_i = I * 0.25;
    let mut q1 = Vec::with_capacity(u.len());
    let mut q2 = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let (u, v, ux, vx) = (u[i], v[i], ux[i], vx[i]);
        let rho = u.norm_sqr() + v.norm_sqr();
        match chart {
            Chart::SmallLambda => {
                q1.push(Mat2::new(
                    -quarter_i * rho,
                    half_i * u.conj(),
                    ux - half_i * u * v.norm_sqr() - half_i * v,
                    quarter_i * rho,
                ));
                let uvb = u * v.conj();
                q2.push(Mat2::new(uvb, -v.conj(), u + u * uvb, -uvb).scale(half_i));
            }
            Chart::LargeLambda => {
                q1.push(Mat2::new(
                    quarter_i * rho,
                    -half_i * v.conj(),
                    vx + half_i * u.norm_sqr() * v + half_i * u,
                    -quarter_i * rho,
                ));
                let ubv = u.conj() * v;
                q2.push(Mat2::new(ubv, -u.conj(), v + ubv * v, -ubv).scale(-half_i));
            }
        }
    }
    CoefficientMatrices { chart, grid, substeps, q1, q2 }
}

/// A normalized Jost solution traced over the x-grid.
#[derive(Clone, Debug)]
pub struct JostFrame {
    pub chart: Chart,
    pub kind: JostKind,
    pub znode: f64,
    /// Normalized values (`m` or `n`), one 2-vector per x sample.
    pub values: Vec<Vec2>,
    /// `sup_x |frame|`.
    pub sup_norm: f64,
}

/// Settings of the Jost integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JostConfig {
    /// Magnus substeps per grid cell.
    pub substeps: usize,
    /// Frame norms beyond this are treated as divergence.
    pub overflow_bound: f64,
}

impl Default for JostConfig {
    fn default() -> Self {
        JostConfig { substeps: 1, overflow_bound: 1e8 }
    }
}

#[inline]
fn theta(x: f64, z: f64) -> f64 {
    0.25 * x * (z - 1.0 / z)
}

fn check_node(z: f64) -> Result<()> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("spectral node must be finite and nonzero, got {z}")));
    }
    Ok(())
}

/// Integrate one normalized Jost function across the grid.
pub fn integrate_jost(cm: &CoefficientMatrices, znode: f64, kind: JostKind) -> Result<JostFrame> {
    integrate_jost_with(cm, znode, kind, &JostConfig::default())
}

pub fn integrate_jost_with(cm: &CoefficientMatrices, znode: f64, kind: JostKind, cfg: &JostConfig) -> Result<JostFrame> {
    check_node(znode)?;
    let grid = cm.grid();
    let n = grid.len();
    let sign = if kind.is_m() { 1.0 } else { -1.0 };
    let unit = if kind.is_m() { Vec2::E1 } else { Vec2::E2 };
    // Ψ = frame · e^{±iθ}
    let phase = |j: usize| C64::from_polar(1.0, sign * theta(grid.x(j), znode));
    let mut psi = vec![Vec2([ZERO, ZERO]); n];
    if kind.anchored_left() {
        psi[0] = unit.scale(phase(0));
        for k in 0..n - 1 {
            psi[k + 1] = cm.cell_propagator(k, znode).mul_vec(&psi[k]);
        }
    } else {
        psi[n - 1] = unit.scale(phase(n - 1));
        for k in (0..n - 1).rev() {
            psi[k] = cm.cell_propagator(k, znode).unimodular_inverse().mul_vec(&psi[k + 1]);
        }
    }
    let values: Vec<Vec2> = psi.iter().enumerate().map(|(j, p)| p.scale(phase(j).conj())).collect();
    let sup_norm = values.iter().map(Vec2::norm).fold(0.0, f64::max);
    if !(sup_norm <= cfg.overflow_bound) {
        return Err(Error::NonConvergence { z: znode, norm: sup_norm });
    }
    Ok(JostFrame { chart: cm.chart(), kind, znode, values, sup_norm })
}

/// Coefficients at one node as read off the Wronskians in one chart, each
/// evaluated at several x stations.
#[derive(Clone, Debug, PartialEq)]
pub struct WronskianSample {
    /// `(a, b₊, b₋)` at the reference station.
    pub a: C64,
    pub bp: C64,
    pub bm: C64,
    /// Largest station-to-station deviation of any of the three, relative
    /// to the product of the frame norms entering the Wronskian.
    pub drift: f64,
    /// `sup_x` of the four frame norms.
    pub sup_norm: f64,
}

/// `(a, b₊, b₋)` from the four normalized frames at `stations` (first one
/// is the reference).
///
/// In the small chart `a = W(Ψ_{m−}, Ψ_{n+})`, `b₊ = W(Ψ_{m+}, Ψ_{m−})`,
/// `conj(b₋) = W(Ψ_{n+}, Ψ_{n−})`. In the large chart the same Wronskians
/// produce `a`, `b₋` and `conj(b₊)`.
pub fn scattering_from_wronskians(
    m_minus: &JostFrame,
    m_plus: &JostFrame,
    n_minus: &JostFrame,
    n_plus: &JostFrame,
    grid: &XGrid,
    stations: &[usize],
) -> Result<WronskianSample> {
    let z = m_minus.znode;
    for f in [m_plus, n_minus, n_plus] {
        if f.znode != z || f.chart != m_minus.chart {
            return Err(Error::InvalidArgument("frames must share node and chart".into()));
        }
    }
    let at = |j: usize| {
        let ph = C64::from_polar(1.0, theta(grid.x(j), z));
        let e = |f: &JostFrame, s: f64| f.values[j].scale(if s > 0.0 { ph } else { ph.conj() });
        let (mm, mp, nm, np) = (e(m_minus, 1.0), e(m_plus, 1.0), e(n_minus, -1.0), e(n_plus, -1.0));
        [(wronskian(&mm, &np), mm.norm() * np.norm()), (wronskian(&mp, &mm), mp.norm() * mm.norm()), (wronskian(&np, &nm), np.norm() * nm.norm())]
    };
    let sup_norm = [m_minus, m_plus, n_minus, n_plus].iter().map(|f| f.sup_norm).fold(0.0, f64::max);
    let sample = from_station_values(stations.iter().map(|&j| at(j)).collect(), m_minus.chart, sup_norm);
    Ok(sample)
}

fn from_station_values(values: Vec<[(C64, f64); 3]>, chart: Chart, sup_norm: f64) -> WronskianSample {
    let reference = values[0];
    let mut drift: f64 = 0.0;
    for v in &values[1..] {
        for q in 0..3 {
            let scale = (reference[q].1 * v[q].1).sqrt().max(f64::MIN_POSITIVE);
            drift = drift.max((v[q].0 - reference[q].0).norm() / scale);
        }
    }
    let (a, w1, w2) = (reference[0].0, reference[1].0, reference[2].0.conj());
    let (bp, bm) = match chart {
        Chart::SmallLambda => (w1, w2),
        Chart::LargeLambda => (w2, w1),
    };
    WronskianSample { a, bp, bm, drift, sup_norm }
}

/// Sweep one node in one chart without storing whole frames.
fn sweep_node(cm: &CoefficientMatrices, z: f64, stations: &[usize], cfg: &JostConfig) -> Result<WronskianSample> {
    let grid = cm.grid();
    let n = grid.len();
    let props: Vec<Mat2> = (0..n - 1).map(|k| cm.cell_propagator(k, z)).collect();
    let ph = |j: usize| C64::from_polar(1.0, theta(grid.x(j), z));

    let mut fwd = vec![(Vec2([ZERO, ZERO]), Vec2([ZERO, ZERO])); stations.len()];
    let mut sup: f64 = 1.0;
    let mut mm = Vec2::E1.scale(ph(0));
    let mut nm = Vec2::E2.scale(ph(0).conj());
    for j in 0..n {
        if j > 0 {
            mm = props[j - 1].mul_vec(&mm);
            nm = props[j - 1].mul_vec(&nm);
            sup = sup.max(mm.norm()).max(nm.norm());
        }
        for (s, &st) in stations.iter().enumerate() {
            if st == j {
                fwd[s] = (mm, nm);
            }
        }
    }
    let mut bwd = vec![(Vec2([ZERO, ZERO]), Vec2([ZERO, ZERO])); stations.len()];
    let mut mp = Vec2::E1.scale(ph(n - 1));
    let mut np = Vec2::E2.scale(ph(n - 1).conj());
    for j in (0..n).rev() {
        if j < n - 1 {
            let inv = props[j].unimodular_inverse();
            mp = inv.mul_vec(&mp);
            np = inv.mul_vec(&np);
            sup = sup.max(mp.norm()).max(np.norm());
        }
        for (s, &st) in stations.iter().enumerate() {
            if st == j {
                bwd[s] = (mp, np);
            }
        }
    }
    if !(sup <= cfg.overflow_bound) {
        return Err(Error::NonConvergence { z, norm: sup });
    }
    let values = fwd
        .iter()
        .zip(&bwd)
        .map(|(&(mm, nm), &(mp, np))| {
            [(wronskian(&mm, &np), mm.norm() * np.norm()), (wronskian(&mp, &mm), mp.norm() * mm.norm()), (wronskian(&np, &nm), np.norm() * nm.norm())]
        })
        .collect();
    Ok(from_station_values(values, cm.chart(), sup))
}

/// `a₀ = exp(−(i/4)∫(|u|²+|v|²))` and `a_∞ = conj(a₀)`.
pub fn scattering_limits(p: &Potential) -> (C64, C64) {
    let a0 = C64::from_polar(1.0, -0.25 * p.charge());
    (a0, a0.conj())
}

/// Per-node diagnostics collected during a direct sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectDiagnostics {
    /// Wronskian station drift in the chart used for each node.
    pub wronskian_drift: Vec<f64>,
    /// `|a_small − a_large|` per node.
    pub chart_defect: Vec<f64>,
    /// `|a|² + b₊·conj(b₋) − 1` per node.
    pub determinant_defect: Vec<f64>,
    /// Largest frame norm seen anywhere in the sweep.
    pub max_frame_norm: f64,
    /// Edge content of the input fields.
    pub tail: TailReport,
}

/// `a`, `b₊`, `b₋` on a symmetric z-grid together with their limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSet {
    pub grid: SpectralGrid,
    pub a: Vec<C64>,
    pub bp: Vec<C64>,
    pub bm: Vec<C64>,
    pub a0: C64,
    pub ainf: C64,
    pub min_abs_a: f64,
    /// `a` from the small-λ chart at every node.
    pub a_small: Vec<C64>,
    /// `a` from the large-λ chart at every node.
    pub a_large: Vec<C64>,
    pub diagnostics: DirectDiagnostics,
}

impl ScatteringSet {
    /// Scattering data of the zero potential.
    pub fn trivial(grid: SpectralGrid) -> Self {
        let n = grid.len();
        ScatteringSet {
            a: vec![ONE; n],
            bp: vec![ZERO; n],
            bm: vec![ZERO; n],
            a0: ONE,
            ainf: ONE,
            min_abs_a: 1.0,
            a_small: vec![ONE; n],
            a_large: vec![ONE; n],
            diagnostics: DirectDiagnostics {
                wronskian_drift: vec![0.0; n],
                chart_defect: vec![0.0; n],
                determinant_defect: vec![0.0; n],
                max_frame_norm: 1.0,
                tail: TailReport::default(),
            },
            grid,
        }
    }
}

/// Settings of a full direct sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectConfig {
    pub jost: JostConfig,
    /// Station drift beyond this aborts the sweep.
    pub wronskian_tol: f64,
    /// Fraction of the half width treated as the truncation edge.
    pub tail_fraction: f64,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig { jost: JostConfig::default(), wronskian_tol: 1e-6, tail_fraction: 0.1 }
    }
}

/// Reference station `x = 0` and cross-check stations `x = ±half_width/2`.
pub fn wronskian_stations(grid: &XGrid) -> [usize; 3] {
    let c = 0.5 * (grid.x0() + grid.x_last());
    let hw = grid.half_width();
    [grid.nearest_index(c), grid.nearest_index(c - 0.5 * hw), grid.nearest_index(c + 0.5 * hw)]
}

/// Direct scattering on every node of a Z-chart grid, in parallel over nodes.
///
/// Both charts are integrated at every node; the small chart supplies the
/// values for `|z| ≤ 1` and the large chart for `|z| > 1`.
pub fn compute_scattering(p: &Potential, grid: &SpectralGrid, cfg: &DirectConfig) -> Result<ScatteringSet> {
    if grid.chart() != SpectralChart::Z {
        return Err(Error::InvalidArgument("direct scattering needs a Z-chart grid".into()));
    }
    if p.sup_u() == 0.0 && p.sup_v() == 0.0 {
        return Ok(ScatteringSet::trivial(grid.clone()));
    }
    let small = assemble_coefficients_refined(p, Chart::SmallLambda, cfg.jost.substeps);
    let large = assemble_coefficients_refined(p, Chart::LargeLambda, cfg.jost.substeps);
    let stations = wronskian_stations(p.grid());
    let per_node: Vec<(WronskianSample, WronskianSample)> = grid
        .nodes()
        .par_iter()
        .map(|&z| Ok((sweep_node(&small, z, &stations, &cfg.jost)?, sweep_node(&large, z, &stations, &cfg.jost)?)))
        .collect::<Result<_>>()?;

    let n = grid.len();
    let (a0, ainf) = scattering_limits(p);
    let mut a = Vec::with_capacity(n);
    let mut bp = Vec::with_capacity(n);
    let mut bm = Vec::with_capacity(n);
    let mut diag = DirectDiagnostics {
        tail: truncation_tail(p, cfg.tail_fraction),
        ..Default::default()
    };
    for (k, (s, l)) in per_node.iter().enumerate() {
        let z = grid.node(k);
        let use_ = if z.abs() <= 1.0 { s } else { l };
        if use_.drift > cfg.wronskian_tol {
            return Err(Error::WronskianDrift { z, drift: use_.drift });
        }
        a.push(use_.a);
        bp.push(use_.bp);
        bm.push(use_.bm);
        diag.wronskian_drift.push(use_.drift);
        diag.chart_defect.push((s.a - l.a).norm());
        diag.determinant_defect.push((use_.a.norm_sqr() + use_.bp * use_.bm.conj() - ONE).norm());
        diag.max_frame_norm = diag.max_frame_norm.max(s.sup_norm).max(l.sup_norm);
    }
    let min_abs_a = a.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    Ok(ScatteringSet {
        grid: grid.clone(),
        a_small: per_node.iter().map(|(s, _)| s.a).collect(),
        a_large: per_node.iter().map(|(_, l)| l.a).collect(),
        a,
        bp,
        bm,
        a0,
        ainf,
        min_abs_a,
        diagnostics: diag,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Ok,
    Obstructed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub min_abs_a: f64,
    pub winding: i64,
    pub verdict: Verdict,
}

/// Winding number of `a` along the real line, closed through the limit
/// values at `0` and `∞`.
pub fn winding_number(ss: &ScatteringSet) -> i64 {
    let h = ss.grid.half_len();
    let mut path: Vec<C64> = Vec::with_capacity(ss.a.len() + 3);
    path.push(ss.ainf);
    path.extend_from_slice(&ss.a[..h]);
    path.push(ss.a0);
    path.extend_from_slice(&ss.a[h..]);
    path.push(ss.ainf);
    let mut total = 0.0;
    for w in path.windows(2) {
        total += (w[1] / w[0]).arg();
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

pub fn detect_spectrum_obstructions(ss: &ScatteringSet, threshold: f64) -> ObstructionReport {
    let winding = winding_number(ss);
    let min_abs_a = ss.min_abs_a;
    let verdict = if min_abs_a >= threshold && winding == 0 && min_abs_a.is_finite() { Verdict::Ok } else { Verdict::Obstructed };
    ObstructionReport { min_abs_a, winding, verdict }
}

/// Second estimator of `a(z)` through the integral representations, using
/// `m₋` in the small chart or `m̂₋` in the large chart.
pub fn a_from_integral(p: &Potential, frame: &JostFrame) -> Result<C64> {
    if frame.kind != JostKind::MMinus {
        return Err(Error::InvalidArgument("integral representation needs an m₋ frame".into()));
    }
    let z = frame.znode;
    let (u, v) = (p.u(), p.v());
    let integrand: Vec<C64> = (0..u.len())
        .map(|j| {
            let [m1, m2] = frame.values[j].0;
            let rho = u[j].norm_sqr() + v[j].norm_sqr();
            match frame.chart {
                Chart::SmallLambda => rho * m1 - 2.0 * u[j].conj() * m2 - 2.0 * z * v[j].conj() * (u[j] * m1 - m2),
                Chart::LargeLambda => rho * m1 - 2.0 * v[j].conj() * m2 - 2.0 / z * u[j].conj() * (v[j] * m1 - m2),
            }
        })
        .collect();
    let dx = p.grid().dx();
    let re: Vec<f64> = integrand.iter().map(|c| c.re).collect();
    let im: Vec<f64> = integrand.iter().map(|c| c.im).collect();
    let integral = C64::new(trapezoid(&re, dx), trapezoid(&im, dx));
    let sign = match frame.chart {
        Chart::SmallLambda => -1.0,
        Chart::LargeLambda => 1.0,
    };
    Ok(ONE + sign * 0.25 * I * integral)
}

/// Matrices `C` with `m = C·m̂` and `n = D·n̂` at one x sample.
pub fn connection_matrices(u: C64, v: C64, z: f64) -> (Mat2, Mat2) {
    let c = Mat2::new(ONE, ZERO, u - v / z, C64::new(1.0 / z, 0.0));
    let d = Mat2::new(C64::new(z, 0.0), ZERO, u * z - v, ONE);
    (c, d)
}

/// Largest `|u|`, `|v|` of a potential, used to size overflow checks.
pub fn amplitude(p: &Potential) -> f64 {
    sup_abs(p.u()).max(sup_abs(p.v()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_xgrid, Spacing};

    fn gaussian(n: usize) -> Potential {
        Potential::gaussian(make_xgrid(10.0, n).unwrap(), 0.2, 0.1)
    }

    #[test]
    fn zero_potential_gives_zero_coefficients() {
        let p = Potential::zero(make_xgrid(5.0, 51).unwrap());
        for chart in [Chart::SmallLambda, Chart::LargeLambda] {
            let cm = assemble_coefficients(&p, chart);
            for j in 0..51 {
                assert_eq!(cm.q1(j), Mat2::ZERO);
                assert_eq!(cm.q2(j), Mat2::ZERO);
            }
            let f = integrate_jost(&cm, 0.7, JostKind::MMinus).unwrap();
            for v in &f.values {
                assert!((v.0[0] - ONE).norm() < 1e-13 && v.0[1].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn coefficient_entries_at_origin() {
        let g = make_xgrid(10.0, 2001).unwrap();
        let p = Potential::gaussian(g, 0.2, 0.0);
        let cm = assemble_coefficients(&p, Chart::SmallLambda);
        let q = cm.q1(1000);
        assert!((q.get(0, 1) - I * 0.1).norm() < 1e-15);
        assert!(q.get(1, 0).norm() < 1e-12);
    }

    #[test]
    fn coefficients_are_traceless() {
        let g = make_xgrid(3.0, 61).unwrap();
        let p = Potential::from_fn(g, |x| (C64::new(x.sin(), 0.3 * x).scale((-x * x).exp()), C64::new(0.2, -x.cos()).scale((-x * x).exp()))).unwrap();
        for chart in [Chart::SmallLambda, Chart::LargeLambda] {
            let cm = assemble_coefficients_refined(&p, chart, 2);
            for i in 0..cm.q1.len() {
                assert!(cm.q1[i].trace().norm() < 1e-15);
                assert!(cm.q2[i].trace().norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_zero_node() {
        let p = gaussian(101);
        let cm = assemble_coefficients(&p, Chart::SmallLambda);
        assert!(integrate_jost(&cm, 0.0, JostKind::MMinus).is_err());
    }

    #[test]
    fn charts_are_connected() {
        let p = gaussian(2001);
        let z = 0.6;
        let small = assemble_coefficients(&p, Chart::SmallLambda);
        let large = assemble_coefficients(&p, Chart::LargeLambda);
        for (k_small, is_m) in [(JostKind::MMinus, true), (JostKind::NPlus, false)] {
            let f = integrate_jost(&small, z, k_small).unwrap();
            let g = integrate_jost(&large, z, k_small).unwrap();
            for j in (0..2001).step_by(50) {
                let (c, d) = connection_matrices(p.u()[j], p.v()[j], z);
                let mapped = if is_m { c.mul_vec(&g.values[j]) } else { d.mul_vec(&g.values[j]) };
                let diff = Vec2([mapped.0[0] - f.values[j].0[0], mapped.0[1] - f.values[j].0[1]]);
                assert!(diff.norm() < 1e-9, "{k_small:?} j={j} {}", diff.norm());
            }
        }
    }

    #[test]
    fn limits_of_gaussian() {
        let g = make_xgrid(10.0, 4001).unwrap();
        let p = Potential::gaussian(g, 0.2, 0.0);
        let (a0, ainf) = scattering_limits(&p);
        let expected = C64::from_polar(1.0, -0.01 * (std::f64::consts::PI / 2.0).sqrt());
        assert!((a0 - expected).norm() < 1e-12);
        assert_eq!(ainf, a0.conj());
    }

    #[test]
    fn zero_potential_scattering() {
        let p = Potential::zero(make_xgrid(5.0, 101).unwrap());
        let grid = SpectralGrid::symmetric(8.0, 32, Spacing::Mapped, SpectralChart::Z).unwrap();
        let ss = compute_scattering(&p, &grid, &DirectConfig::default()).unwrap();
        for k in 0..32 {
            assert!((ss.a[k] - ONE).norm() < 1e-13);
            assert!(ss.bp[k].norm() < 1e-13 && ss.bm[k].norm() < 1e-13);
        }
        let rep = detect_spectrum_obstructions(&ss, 1e-3);
        assert_eq!(rep.verdict, Verdict::Ok);
        assert_eq!(rep.winding, 0);
    }

    #[test]
    fn sweep_agrees_with_full_frames() {
        let p = gaussian(1001);
        let cm = assemble_coefficients(&p, Chart::LargeLambda);
        let z = -2.5;
        let st = wronskian_stations(p.grid());
        let f = |k| integrate_jost(&cm, z, k).unwrap();
        let full = scattering_from_wronskians(&f(JostKind::MMinus), &f(JostKind::MPlus), &f(JostKind::NMinus), &f(JostKind::NPlus), p.grid(), &st).unwrap();
        let fast = sweep_node(&cm, z, &st, &JostConfig::default()).unwrap();
        assert!((full.a - fast.a).norm() < 1e-12);
        assert!((full.bp - fast.bp).norm() < 1e-12);
        assert!((full.bm - fast.bm).norm() < 1e-12);
    }

    #[test]
    fn integral_estimator_matches_wronskian() {
        let p = gaussian(2001);
        let st = wronskian_stations(p.grid());
        for (chart, z) in [(Chart::SmallLambda, 0.4), (Chart::LargeLambda, 3.0), (Chart::SmallLambda, -0.5)] {
            let cm = assemble_coefficients(&p, chart);
            let m = integrate_jost(&cm, z, JostKind::MMinus).unwrap();
            let a_int = a_from_integral(&p, &m).unwrap();
            let w = sweep_node(&cm, z, &st, &JostConfig::default()).unwrap();
            assert!((a_int - w.a).norm() < 1e-8, "{chart:?} {z}: {a_int} vs {}", w.a);
        }
    }
}
