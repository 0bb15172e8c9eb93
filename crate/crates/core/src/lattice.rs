//! Grids, field containers and discrete weighted norms.
//!
//! The physical line is sampled on a uniform [`XGrid`]. The spectral line
//! (`z = λ²` or `ω = 1/z`) is sampled on a [`SpectralGrid`] made of two
//! half-lines `(-z_max, -1/z_max)` and `(1/z_max, z_max)`, each uniform in a
//! parameter `p`. The default parameter is `p = s - 1/s`, in which the
//! spatial phase `e^{±ix(s-1/s)/2}` of the jump matrices is linear.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling `x_j = x0 + j·dx`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    x0: f64,
    dx: f64,
    n: usize,
}

impl XGrid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {dx}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidGrid("left endpoint is not finite".into()));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        Ok(XGrid { x0, dx, n })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Half of the covered length.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.n - 1) as f64 * self.dx
    }

    /// Index of the sample closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x0) / self.dx).round();
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Symmetric grid covering `[-half_width, half_width]` with `n` samples.
pub fn make_xgrid(half_width: f64, n: usize) -> Result<XGrid> {
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "half width must be positive, got {half_width}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
    }
    let dx = 2.0 * half_width / (n - 1) as f64;
    XGrid::new(-half_width, dx, n)
}

/// Which spectral variable a grid samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralChart {
    /// `z = λ²`
    Z,
    /// `ω = 1/z`
    Omega,
    /// `λ` itself (values only, never used as a contour)
    Lambda,
}

/// Node placement along each spectral half-line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Uniform in `p = s - 1/s`.
    #[default]
    Mapped,
    /// Uniform in `p = ±ln|s|`.
    Log,
}

impl Spacing {
    /// Node on the positive half-line for a non-negative parameter value.
    fn positive_node(self, p: f64) -> f64 {
        match self {
            Spacing::Mapped => 0.5 * p + (1.0 + 0.25 * p * p).sqrt(),
            Spacing::Log => p.exp(),
        }
    }

    fn param(self, s: f64) -> f64 {
        match self {
            Spacing::Mapped => s - 1.0 / s,
            Spacing::Log => {
                if s > 0.0 {
                    s.ln()
                } else {
                    -(-s).ln()
                }
            }
        }
    }

    /// `ds/dp` at node `s`.
    fn jacobian(self, s: f64) -> f64 {
        match self {
            Spacing::Mapped => s * s / (1.0 + s * s),
            Spacing::Log => s.abs(),
        }
    }

    fn half_range(self, z_max: f64) -> f64 {
        match self {
            Spacing::Mapped => z_max - 1.0 / z_max,
            Spacing::Log => z_max.ln(),
        }
    }
}

/// Symmetric, origin-punctured spectral grid.
///
/// Nodes `0..h` lie on the negative half-line and `h..2h` on the positive
/// one; each half is uniform in the spacing parameter, and the node set is
/// closed under `s ↦ -s` and `s ↦ 1/s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    nodes: Vec<f64>,
    params: Vec<f64>,
    chart: SpectralChart,
    spacing: Spacing,
    z_max: f64,
    step: f64,
}

impl SpectralGrid {
    /// `count` nodes (even, ≥ 4) with `|s| ∈ [1/z_max, z_max]`.
    pub fn symmetric(z_max: f64, count: usize, spacing: Spacing, chart: SpectralChart) -> Result<Self> {
        if !(z_max > 1.0) || !z_max.is_finite() {
            return Err(Error::InvalidGrid(format!("z_max must exceed 1, got {z_max}")));
        }
        if count < 4 || count % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "spectral node count must be even and at least 4, got {count}"
            )));
        }
        let h = count / 2;
        let range = spacing.half_range(z_max);
        let step = 2.0 * range / (h - 1) as f64;
        let params_half: Vec<f64> = (0..h).map(|k| -range + k as f64 * step).collect();

        // Upper half of each half-line computed directly, lower half by exact reciprocity.
        let mut positive = vec![0.0; h];
        for k in (0..h).rev() {
            let mirror = h - 1 - k;
            positive[k] = if k >= mirror {
                spacing.positive_node(params_half[k])
            } else {
                1.0 / positive[mirror]
            };
        }
        let mut nodes = Vec::with_capacity(count);
        nodes.extend(positive.iter().rev().map(|s| -s));
        nodes.extend(positive.iter().copied());
        let mut params = params_half.clone();
        params.extend(params_half);
        Ok(SpectralGrid { nodes, params, chart, spacing, z_max, step })
    }

    /// Grid of reciprocals, with the `Z`/`Omega` chart label swapped.
    pub fn reciprocal_of(&self) -> Self {
        let n = self.nodes.len();
        let nodes = (0..n).map(|k| 1.0 / self.nodes[self.mirror_index(k)]).collect();
        let chart = match self.chart {
            SpectralChart::Z => SpectralChart::Omega,
            SpectralChart::Omega => SpectralChart::Z,
            SpectralChart::Lambda => SpectralChart::Lambda,
        };
        SpectralGrid {
            nodes,
            params: self.params.clone(),
            chart,
            spacing: self.spacing,
            z_max: self.z_max,
            step: self.step,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn half_len(&self) -> usize {
        self.nodes.len() / 2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn chart(&self) -> SpectralChart {
        self.chart
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Uniform parameter step within each half-line.
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn param(&self, k: usize) -> f64 {
        self.params[k]
    }

    /// `ds/dp` at node `k`.
    #[inline]
    pub fn jacobian(&self, k: usize) -> f64 {
        self.spacing.jacobian(self.nodes[k])
    }

    /// Whether nodes `j` and `k` lie on the same half-line.
    #[inline]
    pub fn same_half(&self, j: usize, k: usize) -> bool {
        let h = self.half_len();
        (j < h) == (k < h)
    }

    /// Index of the node `1/s_k`.
    pub fn mirror_index(&self, k: usize) -> usize {
        let h = self.half_len();
        if k < h {
            h - 1 - k
        } else {
            3 * h - 1 - k
        }
    }

    /// Index of the node `-s_k`.
    pub fn negation_index(&self, k: usize) -> usize {
        self.nodes.len() - 1 - k
    }

    /// `s − 1/s` at node `k`, exact for the mapped spacing.
    #[inline]
    pub fn diff_recip(&self, k: usize) -> f64 {
        match self.spacing {
            Spacing::Mapped => self.params[k],
            Spacing::Log => {
                let s = self.nodes[k];
                s - 1.0 / s
            }
        }
    }

    /// `s + 1/s` at node `k`.
    #[inline]
    pub fn sum_recip(&self, k: usize) -> f64 {
        let d = self.diff_recip(k);
        (d * d + 4.0).sqrt().copysign(self.nodes[k])
    }

    /// Trapezoid weights for `∫ f(s) ds`, applied per half-line in the
    /// parameter variable.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = self.half_len();
        (0..self.len())
            .map(|k| {
                let end = k == 0 || k == h - 1 || k == h || k == 2 * h - 1;
                let w = self.step * self.jacobian(k);
                if end {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect()
    }

    /// `λ = √z` (principal branch; imaginary for negative nodes).
    pub fn lambda_values(&self) -> Vec<C64> {
        self.nodes.iter().map(|&z| lambda_of(z)).collect()
    }

    /// Consistency check used after deserialization.
    pub fn check_param(&self, k: usize) -> f64 {
        (self.spacing.param(self.nodes[k]) - self.params[k]).abs()
    }
}

/// Principal square root of a real spectral node.
pub fn lambda_of(z: f64) -> C64 {
    if z >= 0.0 {
        C64::new(z.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-z).sqrt())
    }
}

/// Complex fields `(u, v)` on an x-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    grid: XGrid,
    u: Vec<C64>,
    v: Vec<C64>,
}

fn all_finite(f: &[C64]) -> bool {
    f.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl Potential {
    pub fn new(grid: XGrid, u: Vec<C64>, v: Vec<C64>) -> Result<Self> {
        for f in [&u, &v] {
            if f.len() != grid.len() {
                return Err(Error::ShapeMismatch { expected: grid.len(), got: f.len() });
            }
        }
        if !all_finite(&u) {
            return Err(Error::NonFinite("u"));
        }
        if !all_finite(&v) {
            return Err(Error::NonFinite("v"));
        }
        Ok(Potential { grid, u, v })
    }

    pub fn zero(grid: XGrid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.len()];
        Potential { grid, u: z.clone(), v: z }
    }

    pub fn from_fn(grid: XGrid, f: impl Fn(f64) -> (C64, C64)) -> Result<Self> {
        let (u, v) = grid.xs().into_iter().map(f).unzip();
        Potential::new(grid, u, v)
    }

    /// `u = u_amp·e^{-x²}`, `v = v_amp·e^{-x²}`.
    pub fn gaussian(grid: XGrid, u_amp: f64, v_amp: f64) -> Self {
        Potential::from_fn(grid, |x| {
            let g = (-x * x).exp();
            (C64::new(u_amp * g, 0.0), C64::new(v_amp * g, 0.0))
        })
        .expect("gaussian samples are finite")
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn into_fields(self) -> (XGrid, Vec<C64>, Vec<C64>) {
        (self.grid, self.u, self.v)
    }

    /// `|u|² + |v|²` pointwise.
    pub fn density(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(u, v)| u.norm_sqr() + v.norm_sqr()).collect()
    }

    /// `∫ (|u|² + |v|²) dx` by the trapezoid rule.
    pub fn charge(&self) -> f64 {
        trapezoid(&self.density(), self.grid.dx)
    }

    /// `∫_x^∞ (|u|² + |v|²) dy` at every sample.
    pub fn tail_charge(&self) -> Vec<f64> {
        tail_integrals(&self.density(), self.grid.dx)
    }

    pub fn sup_u(&self) -> f64 {
        sup_abs(&self.u)
    }

    pub fn sup_v(&self) -> f64 {
        sup_abs(&self.v)
    }

    /// Largest pointwise deviation of either field from `other`.
    pub fn max_deviation(&self, other: &Potential) -> (f64, f64) {
        let du = self.u.iter().zip(&other.u).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let dv = self.v.iter().zip(&other.v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        (du, dv)
    }
}

pub fn sup_abs(f: &[C64]) -> f64 {
    f.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(f: &[f64], dx: f64) -> f64 {
    match f.len() {
        0 => 0.0,
        1 => 0.0,
        n => dx * (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1])),
    }
}

/// `∫_{x_j}^{x_end} f` by cumulative trapezoid, for every `j`.
pub fn tail_integrals(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for j in (0..n.saturating_sub(1)).rev() {
        out[j] = out[j + 1] + 0.5 * dx * (f[j] + f[j + 1]);
    }
    out
}

/// High-order centered first derivative.
///
/// Eighth order in the interior; the stencil shrinks towards the ends and
/// the two end samples use second-order one-sided differences.
pub fn derivative(f: &[C64], dx: f64) -> Vec<C64> {
    const STENCILS: [&[f64]; 4] = [
        &[0.5],
        &[2.0 / 3.0, -1.0 / 12.0],
        &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
    ];
    let n = f.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        if n == 2 {
            let d = (f[1] - f[0]) / dx;
            out[0] = d;
            out[1] = d;
        }
        return out;
    }
    out[0] = (f[0] * -3.0 + f[1] * 4.0 - f[2]) / (2.0 * dx);
    out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) / (2.0 * dx);
    for j in 1..n - 1 {
        let reach = j.min(n - 1 - j).min(4);
        let c = STENCILS[reach - 1];
        let mut acc = C64::new(0.0, 0.0);
        for (m, cm) in c.iter().enumerate() {
            acc += (f[j + m + 1] - f[j - m - 1]) * *cm;
        }
        out[j] = acc / dx;
    }
    out
}

/// Lagrange weights of the nodes `0..len` for evaluation at `t`.
fn lagrange_weights(len: usize, t: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let mut w = 1.0;
            for m in 0..len {
                if m != i {
                    w *= (t - m as f64) / (i as f64 - m as f64);
                }
            }
            w
        })
        .collect()
}

/// Refine uniform samples by `factor` using local 8-point Lagrange
/// interpolation; returns `(n-1)·factor + 1` samples that coincide with
/// the input at every `factor`-th position.
pub fn refine(f: &[C64], factor: usize) -> Vec<C64> {
    let n = f.len();
    if factor <= 1 || n < 2 {
        return f.to_vec();
    }
    let width = n.min(8);
    let mut out = Vec::with_capacity((n - 1) * factor + 1);
    // Weights depend only on (window offset, fraction), cache per fraction for the interior pattern.
    let interior: Vec<Vec<f64>> = (0..factor)
        .map(|q| lagrange_weights(width, (width / 2 - 1) as f64 + q as f64 / factor as f64))
        .collect();
    for j in 0..n - 1 {
        let start = (j as isize - (width as isize / 2 - 1)).clamp(0, (n - width) as isize) as usize;
        let rel = j - start;
        for q in 0..factor {
            if q == 0 {
                out.push(f[j]);
                continue;
            }
            let t = rel as f64 + q as f64 / factor as f64;
            let owned;
            let w: &[f64] = if rel == width / 2 - 1 {
                &interior[q]
            } else {
                owned = lagrange_weights(width, t);
                &owned
            };
            let mut acc = C64::new(0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                acc += f[start + i] * *wi;
            }
            out.push(acc);
        }
    }
    out.push(f[n - 1]);
    out
}

/// Discrete weighted norms of a field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `H¹`
    pub h1: f64,
    /// `H²`
    pub h2: f64,
    /// `H^{1,1}`
    pub h11: f64,
    /// `L^{2,1}`
    pub l21: f64,
}

/// Discrete `H¹`, `H²`, `H^{1,1}` and `L^{2,1}` norms with second-order
/// centered differences (one-sided at the ends) and trapezoid sums.
pub fn weighted_norms(f: &[C64], grid: &XGrid) -> Result<NormReport> {
    let n = grid.len();
    if f.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: f.len() });
    }
    let dx = grid.dx();
    let (d1, d2) = second_order_derivatives(f, dx);
    let xs = grid.xs();
    let abs2: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
    let d1sq: Vec<f64> = d1.iter().map(|z| z.norm_sqr()).collect();
    let d2sq: Vec<f64> = d2.iter().map(|z| z.norm_sqr()).collect();

    let h1_dens: Vec<f64> = abs2.iter().zip(&d1sq).map(|(a, b)| a + b).collect();
    let h2_dens: Vec<f64> = h1_dens.iter().zip(&d2sq).map(|(a, b)| a + b).collect();
    let h11_dens: Vec<f64> = h1_dens.iter().zip(&xs).map(|(a, x)| (1.0 + x * x) * a).collect();
    let l21_dens: Vec<f64> = abs2.iter().zip(&xs).map(|(a, x)| (1.0 + x * x) * a).collect();

    Ok(NormReport {
        h1: trapezoid(&h1_dens, dx).sqrt(),
        h2: trapezoid(&h2_dens, dx).sqrt(),
        h11: trapezoid(&h11_dens, dx).sqrt(),
        l21: trapezoid(&l21_dens, dx).sqrt(),
    })
}

fn second_order_derivatives(f: &[C64], dx: f64) -> (Vec<C64>, Vec<C64>) {
    let n = f.len();
    let zero = C64::new(0.0, 0.0);
    let mut d1 = vec![zero; n];
    let mut d2 = vec![zero; n];
    if n == 2 {
        let d = (f[1] - f[0]) / dx;
        return (vec![d, d], d2);
    }
    for j in 1..n - 1 {
        d1[j] = (f[j + 1] - f[j - 1]) / (2.0 * dx);
        d2[j] = (f[j + 1] - f[j] * 2.0 + f[j - 1]) / (dx * dx);
    }
    d1[0] = (f[0] * -3.0 + f[1] * 4.0 - f[2]) / (2.0 * dx);
    d1[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) / (2.0 * dx);
    if n >= 4 {
        d2[0] = (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) / (dx * dx);
        d2[n - 1] = (f[n - 1] * 2.0 - f[n - 2] * 5.0 + f[n - 3] * 4.0 - f[n - 4]) / (dx * dx);
    } else {
        d2[0] = d2[1];
        d2[n - 1] = d2[n - 2];
    }
    (d1, d2)
}

/// How much of the fields lives near the truncation edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Fraction of the half width treated as the edge region.
    pub edge_fraction: f64,
    /// `L²` norm of `(u, v)` restricted to the edge region.
    pub l2_tail: f64,
    /// Largest `|u|` or `|v|` at the two end samples.
    pub end_values: f64,
}

pub fn truncation_tail(p: &Potential, edge_fraction: f64) -> TailReport {
    let g = p.grid();
    let cut = g.half_width() * (1.0 - edge_fraction);
    let dens: Vec<f64> = p
        .density()
        .into_iter()
        .enumerate()
        .map(|(j, d)| if g.x(j).abs() >= cut { d } else { 0.0 })
        .collect();
    let n = g.len();
    let end_values = [p.u[0], p.u[n - 1], p.v[0], p.v[n - 1]]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    TailReport { edge_fraction, l2_tail: trapezoid(&dens, g.dx()).sqrt(), end_values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xgrid_small_examples() {
        let g = make_xgrid(10.0, 5).unwrap();
        assert_eq!(g.xs(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        let g = make_xgrid(1.0, 2).unwrap();
        assert_eq!(g.xs(), vec![-1.0, 1.0]);
        assert_eq!(g.dx(), 2.0);
        let g = make_xgrid(20.0, 4001).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert!(g.x(2000).abs() < 1e-12);
    }

    #[test]
    fn xgrid_rejects_bad_input() {
        assert!(make_xgrid(0.0, 10).is_err());
        assert!(make_xgrid(-1.0, 10).is_err());
        assert!(make_xgrid(1.0, 1).is_err());
        assert!(XGrid::new(0.0, 0.0, 4).is_err());
    }

    #[test]
    fn spectral_grid_structure() {
        for spacing in [Spacing::Mapped, Spacing::Log] {
            let g = SpectralGrid::symmetric(16.0, 64, spacing, SpectralChart::Z).unwrap();
            let s = g.nodes();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&x| x != 0.0));
            assert!((s[0] + 16.0).abs() < 1e-12 && (s[63] - 16.0).abs() < 1e-12);
            assert!((s[32] - 1.0 / 16.0).abs() < 1e-14);
            for k in 0..64 {
                assert_eq!(s[g.negation_index(k)], -s[k]);
                assert!((s[g.mirror_index(k)] * s[k] - 1.0).abs() < 1e-15);
                assert!(g.check_param(k) < 1e-12);
            }
        }
    }

    #[test]
    fn mapped_params_are_uniform() {
        let g = SpectralGrid::symmetric(16.0, 512, Spacing::Mapped, SpectralChart::Z).unwrap();
        for k in 1..256 {
            let d = g.param(k) - g.param(k - 1);
            assert!((d - g.step()).abs() < 1e-12);
        }
        assert!((g.step() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_is_an_involution() {
        let g = SpectralGrid::symmetric(16.0, 128, Spacing::Mapped, SpectralChart::Z).unwrap();
        let w = g.reciprocal_of();
        assert_eq!(w.chart(), SpectralChart::Omega);
        let back = w.reciprocal_of();
        assert_eq!(back.chart(), SpectralChart::Z);
        for (a, b) in g.nodes().iter().zip(back.nodes()) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
    }

    #[test]
    fn quadrature_weights_integrate_rational() {
        // ∫_{S} ds/(1+s²)² over both half-lines of the truncated contour.
        let g = SpectralGrid::symmetric(64.0, 1024, Spacing::Mapped, SpectralChart::Z).unwrap();
        let w = g.quadrature_weights();
        let num: f64 = g.nodes().iter().zip(&w).map(|(s, w)| w / (1.0 + s * s).powi(2)).sum();
        let prim = |s: f64| 0.5 * (s / (1.0 + s * s) + s.atan());
        let exact = 2.0 * (prim(64.0) - prim(1.0 / 64.0));
        assert!((num - exact).abs() < 1e-6, "{num} vs {exact}");
    }

    #[test]
    fn potential_validates() {
        let g = make_xgrid(1.0, 3).unwrap();
        let z = C64::new(0.0, 0.0);
        assert!(Potential::new(g, vec![z; 2], vec![z; 3]).is_err());
        assert!(Potential::new(g, vec![z, C64::new(f64::NAN, 0.0), z], vec![z; 3]).is_err());
        assert!(Potential::new(g, vec![z; 3], vec![z; 3]).is_ok());
    }

    #[test]
    fn derivative_is_high_order() {
        let g = make_xgrid(10.0, 2001).unwrap();
        let f: Vec<C64> = g.xs().iter().map(|x| C64::new((-x * x).exp(), 0.0)).collect();
        let d = derivative(&f, g.dx());
        let err = g
            .xs()
            .iter()
            .zip(&d)
            .map(|(x, d)| (d.re + 2.0 * x * (-x * x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn refine_reproduces_smooth_function() {
        let g = make_xgrid(8.0, 801).unwrap();
        let f: Vec<C64> = g.xs().iter().map(|x| C64::new((-x * x).exp(), x.sin() * (-x * x).exp())).collect();
        let r = refine(&f, 4);
        assert_eq!(r.len(), 800 * 4 + 1);
        let mut err: f64 = 0.0;
        for (i, val) in r.iter().enumerate() {
            let x = -8.0 + i as f64 * g.dx() / 4.0;
            let exact = C64::new((-x * x).exp(), x.sin() * (-x * x).exp());
            err = err.max((val - exact).norm());
        }
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = make_xgrid(10.0, 101).unwrap();
        let r = weighted_norms(&vec![C64::new(0.0, 0.0); 101], &g).unwrap();
        assert_eq!(r, NormReport::default());
    }

    #[test]
    fn gaussian_l21_norm() {
        // Oracle: ∫(1+x²)e^{-2x²}dx = √(π/2)(1 + 1/4), checked by adaptive Simpson.
        let g = make_xgrid(10.0, 4001).unwrap();
        let f: Vec<C64> = g.xs().iter().map(|x| C64::new((-x * x).exp(), 0.0)).collect();
        let r = weighted_norms(&f, &g).unwrap();
        let oracle = simpson(|x| (1.0 + x * x) * (-2.0 * x * x).exp(), -10.0, 10.0, 20000);
        let closed = (std::f64::consts::PI / 2.0).sqrt() * 1.25;
        assert!((oracle - closed).abs() < 1e-12);
        assert!((r.l21 * r.l21 - closed).abs() < 1e-10, "{}", r.l21 * r.l21);
        assert!(r.h2 >= r.h1);
    }

    #[test]
    fn norms_reject_shape_mismatch() {
        let g = make_xgrid(1.0, 5).unwrap();
        assert!(weighted_norms(&[C64::new(1.0, 0.0); 4], &g).is_err());
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
        }
        s * h / 3.0
    }

    fn field_strategy() -> impl Strategy<Value = Vec<C64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 33).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous(f in field_strategy(), c in -3.0f64..3.0) {
            let g = make_xgrid(4.0, 33).unwrap();
            let a = weighted_norms(&f, &g).unwrap();
            let scaled: Vec<C64> = f.iter().map(|z| z * c).collect();
            let b = weighted_norms(&scaled, &g).unwrap();
            for (x, y) in [(a.h1, b.h1), (a.h2, b.h2), (a.h11, b.h11), (a.l21, b.l21)] {
                prop_assert!((y - c.abs() * x).abs() <= 1e-12 * (1.0 + x));
            }
        }

        #[test]
        fn norms_satisfy_triangle_inequality(f in field_strategy(), h in field_strategy()) {
            let g = make_xgrid(4.0, 33).unwrap();
            let sum: Vec<C64> = f.iter().zip(&h).map(|(a, b)| a + b).collect();
            let (a, b, s) = (weighted_norms(&f, &g).unwrap(), weighted_norms(&h, &g).unwrap(), weighted_norms(&sum, &g).unwrap());
            prop_assert!(s.h1 <= a.h1 + b.h1 + 1e-12);
            prop_assert!(s.h2 <= a.h2 + b.h2 + 1e-12);
            prop_assert!(s.h11 <= a.h11 + b.h11 + 1e-12);
            prop_assert!(s.l21 <= a.l21 + b.l21 + 1e-12);
        }
    }
}
