//! Riemann–Hilbert problems on the real line in Beals–Coifman form.
//!
//! The unknown `μ = M₋` solves `μ = I + P⁻[μR]` on the contour. The
//! Cauchy projectors are discretized on the spectral grid:
//! `P±f = ±½f + (1/2πi)·Wf`, where `W` approximates the principal value
//! integral `PV∫ f(s)/(s − t) ds`. Within a half-line `W` is the
//! alternating-point rule in the grid parameter (exact for band-limited
//! integrands); across halves it is the plain trapezoid rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SpectralChart, SpectralGrid, Spacing};
use crate::mat2::{Mat2, I, ONE, ZERO};
use crate::spectra::ReflectionSet;

/// Discrete principal-value Cauchy operator on a spectral grid.
#[derive(Clone, Debug)]
pub struct CauchyOperator {
    contour: SpectralGrid,
    /// `W[j, k]`, real.
    w: DMatrix<f64>,
}

impl CauchyOperator {
    pub fn new(contour: &SpectralGrid) -> Self {
        let n = contour.len();
        let s = contour.nodes();
        let step = contour.step();
        let qw = contour.quadrature_weights();
        let mut w = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                w[(j, k)] = if contour.same_half(j, k) {
                    let off = k as i64 - j as i64;
                    if off % 2 == 0 {
                        0.0
                    } else {
                        match contour.spacing() {
                            // 2Δ·s'(p_k)/(s_k − s_j) with s_k − s_j = (p_k − p_j)/(1 + 1/(s_k s_j))
                            Spacing::Mapped => 2.0 / off as f64 * (s[k] * s[k] + s[k] / s[j]) / (1.0 + s[k] * s[k]),
                            Spacing::Log => 2.0 * step * contour.jacobian(k) / (s[k] - s[j]),
                        }
                    }
                } else {
                    qw[k] / (s[k] - s[j])
                };
            }
        }
        CauchyOperator { contour: contour.clone(), w }
    }

    pub fn contour(&self) -> &SpectralGrid {
        &self.contour
    }

    pub fn len(&self) -> usize {
        self.contour.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contour.is_empty()
    }

    /// `(1/2πi)·W` applied to each column of `cols` (N × m complex).
    fn hilbert_cols(&self, cols: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.len();
        let m = cols.ncols();
        let mut packed = DMatrix::<f64>::zeros(n, 2 * m);
        for c in 0..m {
            for j in 0..n {
                packed[(j, 2 * c)] = cols[(j, c)].re;
                packed[(j, 2 * c + 1)] = cols[(j, c)].im;
            }
        }
        let prod = &self.w * packed;
        let scale = C64::new(0.0, -1.0 / (2.0 * PI));
        DMatrix::from_fn(n, m, |j, c| C64::new(prod[(j, 2 * c)], prod[(j, 2 * c + 1)]) * scale)
    }

    /// `P±` applied to several columns at once.
    fn project_cols(&self, cols: &DMatrix<C64>, sign: Sign) -> DMatrix<C64> {
        let half = match sign {
            Sign::Plus => 0.5,
            Sign::Minus => -0.5,
        };
        let mut out = self.hilbert_cols(cols);
        out += cols * C64::new(half, 0.0);
        out
    }

    /// `P±[f]` at the contour nodes.
    pub fn project(&self, f: &[C64], sign: Sign) -> Result<Vec<C64>> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), got: f.len() });
        }
        let cols = DMatrix::from_column_slice(f.len(), 1, f);
        Ok(self.project_cols(&cols, sign).column(0).iter().copied().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Discrete `P±[f]` on `contour`.
pub fn cauchy_projector(f: &[C64], contour: &SpectralGrid, sign: Sign) -> Result<Vec<C64>> {
    CauchyOperator::new(contour).project(f, sign)
}

/// Which Riemann–Hilbert problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhpChart {
    /// On the ω-contour, reconstructs `u`.
    RhpI,
    /// On the z-contour, reconstructs `v`.
    RhpII,
}

#[derive(Clone, Debug)]
pub struct JumpData {
    pub contour: SpectralGrid,
    pub r: Vec<Mat2>,
    pub x: f64,
    pub t: f64,
    pub chart: RhpChart,
}

/// Jump matrices at `(x, t)`. Reflection data stamped at time `rs.t` are
/// advanced to `t` inside the phase.
///
/// RHP I: `R = [[r₊·conj(r₋), conj(r₋)e^{−iφ}], [r₊e^{iφ}, 0]]`,
/// `φ = (ω − 1/ω)x/2 − τ(ω + 1/ω)/2`.
/// RHP II: `R = [[0, −conj(r̂₋)e^{iψ}], [−r̂₊e^{−iψ}, r̂₊·conj(r̂₋)]]`,
/// `ψ = (z − 1/z)x/2 + τ(z + 1/z)/2`.
pub fn assemble_jump(rs: &ReflectionSet, x: f64, t: f64, chart: RhpChart) -> JumpData {
    let tau = t - rs.t;
    let (contour, r) = match chart {
        RhpChart::RhpI => {
            let g = &rs.omega_grid;
            let r = (0..g.len())
                .map(|k| {
                    let phi = 0.5 * (g.diff_recip(k) * x - tau * g.sum_recip(k));
                    let e = C64::from_polar(1.0, phi);
                    let (rp, rmc) = (rs.rp[k], rs.rm[k].conj());
                    Mat2::new(rp * rmc, rmc * e.conj(), rp * e, ZERO)
                })
                .collect();
            (g.clone(), r)
        }
        RhpChart::RhpII => {
            let g = &rs.z_grid;
            let r = (0..g.len())
                .map(|k| {
                    let psi = 0.5 * (g.diff_recip(k) * x + tau * g.sum_recip(k));
                    let e = C64::from_polar(1.0, psi);
                    let (rhp, rhmc) = (rs.rhp[k], rs.rhm[k].conj());
                    Mat2::new(ZERO, -rhmc * e, -rhp * e.conj(), rhp * rhmc)
                })
                .collect();
            (g.clone(), r)
        }
    };
    JumpData { contour, r, x, t, chart }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Iterative first, dense on failure.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhConfig {
    pub solver: SolverKind,
    /// Residual tolerance of the discrete equation.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for RhConfig {
    fn default() -> Self {
        RhConfig { solver: SolverKind::Auto, tol: 1e-11, restart: 60, max_iter: 600 }
    }
}

#[derive(Clone, Debug)]
pub struct RhSolution {
    pub mu: Vec<Mat2>,
    /// `lim s·(M(s) − I)`
    pub moment1: Mat2,
    /// `M(0)`
    pub value0: Mat2,
    /// `max |μ − I − P⁻[μR]|`
    pub residual: f64,
    pub iterations: usize,
}

/// Solver context reused across many x: the Cauchy matrix and weights.
#[derive(Clone, Debug)]
pub struct RhSolver {
    op: CauchyOperator,
    weights: Vec<f64>,
    cfg: RhConfig,
}

fn mats_to_cols(m: &[Mat2]) -> DMatrix<C64> {
    // columns: (row0,col0), (row0,col1), (row1,col0), (row1,col1)
    DMatrix::from_fn(m.len(), 4, |k, c| m[k].0[c / 2][c % 2])
}

fn cols_to_mats(c: &DMatrix<C64>) -> Vec<Mat2> {
    (0..c.nrows()).map(|k| Mat2::new(c[(k, 0)], c[(k, 1)], c[(k, 2)], c[(k, 3)])).collect()
}

impl RhSolver {
    pub fn new(contour: &SpectralGrid, cfg: RhConfig) -> Self {
        RhSolver { op: CauchyOperator::new(contour), weights: contour.quadrature_weights(), cfg }
    }

    pub fn operator(&self) -> &CauchyOperator {
        &self.op
    }

    /// `μ − P⁻[μR]` for the four entries of μ at once.
    fn apply(&self, mu: &DMatrix<C64>, r: &[Mat2]) -> DMatrix<C64> {
        let mr = mats_to_cols(&cols_to_mats(mu).iter().zip(r).map(|(m, r)| *m * *r).collect::<Vec<_>>());
        mu - self.op.project_cols(&mr, Sign::Minus)
    }

    fn residual(&self, mu: &[Mat2], r: &[Mat2]) -> f64 {
        let mu_c = mats_to_cols(mu);
        let lhs = self.apply(&mu_c, r);
        let mut res: f64 = 0.0;
        for k in 0..mu.len() {
            for c in 0..4 {
                let target = if c == 0 || c == 3 { ONE } else { ZERO };
                res = res.max((lhs[(k, c)] - target).norm());
            }
        }
        res
    }

    pub fn solve(&self, jd: &JumpData) -> Result<RhSolution> {
        if jd.contour.nodes() != self.op.contour().nodes() {
            return Err(Error::InvalidArgument("jump data live on a different contour".into()));
        }
        if jd.r.iter().all(|m| *m == Mat2::ZERO) {
            return Ok(RhSolution {
                mu: vec![Mat2::IDENTITY; jd.r.len()],
                moment1: Mat2::ZERO,
                value0: Mat2::IDENTITY,
                residual: 0.0,
                iterations: 0,
            });
        }
        let (mu, iterations) = match self.cfg.solver {
            SolverKind::Dense => (self.solve_dense(jd)?, 0),
            SolverKind::Iterative => self.solve_gmres(jd)?,
            SolverKind::Auto => match self.solve_gmres(jd) {
                Ok(v) => v,
                Err(_) => (self.solve_dense(jd)?, 0),
            },
        };
        let residual = self.residual(&mu, &jd.r);
        if !(residual <= self.cfg.tol.max(1e3 * f64::EPSILON)) {
            return Err(Error::NonConverged { x: jd.x, residual });
        }
        let (moment1, value0) = self.moments(&mu, &jd.r);
        Ok(RhSolution { mu, moment1, value0, residual, iterations })
    }

    /// `moment1 = −(1/2πi)∫μR ds`, `value0 = I + (1/2πi)∫μR/s ds`.
    pub fn moments(&self, mu: &[Mat2], r: &[Mat2]) -> (Mat2, Mat2) {
        let s = self.op.contour().nodes();
        let mut m1 = Mat2::ZERO;
        let mut m0 = Mat2::ZERO;
        for k in 0..mu.len() {
            let f = mu[k] * r[k];
            m1 += f.scale_re(self.weights[k]);
            m0 += f.scale_re(self.weights[k] / s[k]);
        }
        let c = (2.0 * PI * I).inv();
        (m1.scale(-c), Mat2::IDENTITY + m0.scale(c))
    }

    fn solve_dense(&self, jd: &JumpData) -> Result<Vec<Mat2>> {
        let n = self.op.len();
        // Unknown per row of μ: (μ_{r0}(s_k), μ_{r1}(s_k)), indexed c·n + k.
        // Equation: μ_{rc}(j) − Σ_k Σ_i A_jk R_ic(k) μ_{ri}(k) = δ_rc, A = −½I + W/(2πi).
        let scale = C64::new(0.0, -1.0 / (2.0 * PI));
        let mut k_mat = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let mut a = scale * self.op.w[(j, k)];
                if j == k {
                    a -= 0.5;
                }
                for c in 0..2 {
                    for i in 0..2 {
                        k_mat[(c * n + j, i * n + k)] -= a * jd.r[k].0[i][c];
                    }
                }
            }
            for c in 0..2 {
                k_mat[(c * n + j, c * n + j)] += ONE;
            }
        }
        let rhs = DMatrix::from_fn(2 * n, 2, |idx, r| if idx / n == r { ONE } else { ZERO });
        let lu = k_mat.lu();
        let sol = lu.solve(&rhs).ok_or(Error::Singular { x: jd.x })?;
        if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Singular { x: jd.x });
        }
        Ok((0..n)
            .map(|k| Mat2::new(sol[(k, 0)], sol[(n + k, 0)], sol[(k, 1)], sol[(n + k, 1)]))
            .collect())
    }

    /// Restarted GMRES on the stacked 4N unknown.
    fn solve_gmres(&self, jd: &JumpData) -> Result<(Vec<Mat2>, usize)> {
        let n = self.op.len();
        let dim = 4 * n;
        let to_vec = |m: &DMatrix<C64>| DVector::from_iterator(dim, m.iter().copied());
        let to_mat = |v: &DVector<C64>| DMatrix::from_iterator(n, 4, v.iter().copied());
        let b = to_vec(&mats_to_cols(&vec![Mat2::IDENTITY; n]));
        let op = |v: &DVector<C64>| to_vec(&self.apply(&to_mat(v), &jd.r));
        // Start from the Born iterate I + P⁻[R].
        let mut x = to_vec(&(mats_to_cols(&vec![Mat2::IDENTITY; n]) + self.op.project_cols(&mats_to_cols(&jd.r), Sign::Minus)));
        let bnorm = b.norm();
        let target = 0.05 * self.cfg.tol * bnorm / (dim as f64).sqrt();
        let m = self.cfg.restart.max(2);
        let mut total = 0;
        loop {
            let r0 = &b - op(&x);
            let beta = r0.norm();
            if beta <= target {
                return Ok((cols_to_mats(&to_mat(&x)), total));
            }
            if total >= self.cfg.max_iter {
                return Err(Error::NonConverged { x: jd.x, residual: beta / bnorm });
            }
            let mut v: Vec<DVector<C64>> = vec![r0 / C64::new(beta, 0.0)];
            let mut h = DMatrix::<C64>::zeros(m + 1, m);
            let mut cs = vec![ZERO; m];
            let mut sn = vec![ZERO; m];
            let mut g = DVector::<C64>::zeros(m + 1);
            g[0] = C64::new(beta, 0.0);
            let mut used = 0;
            for j in 0..m {
                let mut w = op(&v[j]);
                for (i, vi) in v.iter().enumerate() {
                    let hij = vi.dotc(&w);
                    h[(i, j)] = hij;
                    w -= vi * hij;
                }
                let hn = w.norm();
                h[(j + 1, j)] = C64::new(hn, 0.0);
                for i in 0..j {
                    let t = cs[i].conj() * h[(i, j)] + sn[i].conj() * h[(i + 1, j)];
                    h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                    h[(i, j)] = t;
                }
                let (a, bb) = (h[(j, j)], h[(j + 1, j)]);
                let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
                if denom == 0.0 {
                    return Err(Error::Singular { x: jd.x });
                }
                cs[j] = a / denom;
                sn[j] = bb / denom;
                h[(j, j)] = C64::new(denom, 0.0);
                h[(j + 1, j)] = ZERO;
                g[j + 1] = -sn[j] * g[j];
                g[j] = cs[j].conj() * g[j];
                used = j + 1;
                total += 1;
                if g[j + 1].norm() <= target || hn == 0.0 || total >= self.cfg.max_iter {
                    break;
                }
                v.push(w / C64::new(hn, 0.0));
            }
            let mut y = vec![ZERO; used];
            for i in (0..used).rev() {
                let mut acc = g[i];
                for k in i + 1..used {
                    acc -= h[(i, k)] * y[k];
                }
                y[i] = acc / h[(i, i)];
            }
            for (i, yi) in y.iter().enumerate() {
                x += &v[i] * *yi;
            }
        }
    }
}

/// Solve one jump problem from scratch.
pub fn solve_rhp(jd: &JumpData) -> Result<RhSolution> {
    RhSolver::new(&jd.contour, RhConfig::default()).solve(jd)
}

/// Solve at every x in parallel, reusing one Cauchy operator.
pub fn solve_rhp_sweep(rs: &ReflectionSet, xs: &[f64], t: f64, chart: RhpChart, cfg: RhConfig) -> Result<Vec<RhSolution>> {
    let contour = match chart {
        RhpChart::RhpI => &rs.omega_grid,
        RhpChart::RhpII => &rs.z_grid,
    };
    debug_assert!(matches!(contour.chart(), SpectralChart::Z | SpectralChart::Omega));
    let solver = RhSolver::new(contour, cfg);
    xs.par_iter().map(|&x| solver.solve(&assemble_jump(rs, x, t, chart))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spacing;
    use proptest::prelude::*;

    fn contour(zmax: f64, n: usize) -> SpectralGrid {
        SpectralGrid::symmetric(zmax, n, Spacing::Mapped, SpectralChart::Z).unwrap()
    }

    #[test]
    fn zero_input_projects_to_zero() {
        let g = contour(16.0, 64);
        let p = cauchy_projector(&vec![ZERO; 64], &g, Sign::Minus).unwrap();
        assert!(p.iter().all(|z| *z == ZERO));
        assert!(cauchy_projector(&vec![ZERO; 10], &g, Sign::Minus).is_err());
    }

    #[test]
    fn plemelj_jump_is_identity() {
        let g = contour(16.0, 128);
        let f: Vec<C64> = (0..128).map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let op = CauchyOperator::new(&g);
        let pp = op.project(&f, Sign::Plus).unwrap();
        let pm = op.project(&f, Sign::Minus).unwrap();
        for k in 0..128 {
            assert!((pp[k] - pm[k] - f[k]).norm() < 1e-14);
        }
    }

    /// f analytic and decaying in ℂ⁻ with a single pole at s = i: closing
    /// the contour below gives P⁻f = −f and P⁺f = 0. The s⁶ factor makes the
    /// excluded gap around the origin negligible.
    #[test]
    fn projector_on_function_analytic_below() {
        let f = |s: f64| {
            let s = C64::new(s, 0.0);
            s.powi(6) / (s - I).powi(12)
        };
        for spacing in [Spacing::Mapped, Spacing::Log] {
            let g = SpectralGrid::symmetric(30.0, 4096, spacing, SpectralChart::Z).unwrap();
            let vals: Vec<C64> = g.nodes().iter().map(|&s| f(s)).collect();
            let pm = cauchy_projector(&vals, &g, Sign::Minus).unwrap();
            let pp = cauchy_projector(&vals, &g, Sign::Plus).unwrap();
            let mut em: f64 = 0.0;
            let mut ep: f64 = 0.0;
            for k in 0..g.len() {
                em = em.max((pm[k] + vals[k]).norm());
                ep = ep.max(pp[k].norm());
            }
            assert!(em < 1e-7 && ep < 1e-7, "{spacing:?}: {em:e} {ep:e}");
        }
    }

    /// Cauchy integral off the contour by residues: for g analytic above
    /// and decaying, P⁺g = g and P⁻g = 0.
    #[test]
    fn projector_on_function_analytic_above() {
        let g_fn = |s: f64| {
            let s = C64::new(s, 0.0);
            s.powi(6) / (s + 2.0 * I).powi(12)
        };
        let g = contour(30.0, 4096);
        let vals: Vec<C64> = g.nodes().iter().map(|&s| g_fn(s)).collect();
        let pp = cauchy_projector(&vals, &g, Sign::Plus).unwrap();
        let e = pp.iter().zip(&vals).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(e < 1e-6, "{e:e}");
    }

    #[test]
    fn zero_jump_gives_identity() {
        let rs = ReflectionSet::zero(contour(16.0, 64));
        for chart in [RhpChart::RhpI, RhpChart::RhpII] {
            let jd = assemble_jump(&rs, 1.0, 0.0, chart);
            assert!(jd.r.iter().all(|m| *m == Mat2::ZERO));
            let sol = solve_rhp(&jd).unwrap();
            assert_eq!(sol.moment1, Mat2::ZERO);
            assert_eq!(sol.value0, Mat2::IDENTITY);
            assert!(sol.mu.iter().all(|m| *m == Mat2::IDENTITY));
        }
    }

    fn sample(n: usize, amp: f64) -> ReflectionSet {
        let g = contour(16.0, n);
        let rhm = g.nodes().iter().map(|&z| C64::new(1.0, 0.5 * z) * (amp * z * z / (1.0 + z.powi(4)))).collect();
        ReflectionSet::from_rhm(g, rhm, 0.0).unwrap()
    }

    #[test]
    fn dense_and_iterative_agree() {
        let rs = sample(128, 0.3);
        for chart in [RhpChart::RhpI, RhpChart::RhpII] {
            let jd = assemble_jump(&rs, 0.7, 0.2, chart);
            let mk = |solver| RhSolver::new(&jd.contour, RhConfig { solver, ..Default::default() }).solve(&jd).unwrap();
            let (d, it) = (mk(SolverKind::Dense), mk(SolverKind::Iterative));
            let diff = d.mu.iter().zip(&it.mu).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "{diff:e}");
            assert!((d.moment1 - it.moment1).max_abs() < 1e-10);
        }
    }

    #[test]
    fn born_approximation_for_small_data() {
        let rs = sample(256, 1e-3);
        let jd = assemble_jump(&rs, 0.0, 0.0, RhpChart::RhpI);
        let sol = solve_rhp(&jd).unwrap();
        let cols = mats_to_cols(&jd.r);
        let born = cols_to_mats(&(mats_to_cols(&vec![Mat2::IDENTITY; 256]) + CauchyOperator::new(&jd.contour).project_cols(&cols, Sign::Minus)));
        let d = sol.mu.iter().zip(&born).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
        let r = rs.max_abs();
        assert!(d <= 10.0 * r * r, "{d:e} vs {:e}", r * r);
    }

    #[test]
    fn jump_shift_in_x_is_a_phase() {
        let rs = sample(64, 0.2);
        let a = assemble_jump(&rs, 0.3, 0.0, RhpChart::RhpI);
        let b = assemble_jump(&rs, 2.3, 0.0, RhpChart::RhpI);
        for k in 0..64 {
            let e = C64::from_polar(1.0, rs.omega_grid.diff_recip(k));
            assert!((b.r[k].get(1, 0) - a.r[k].get(1, 0) * e).norm() < 1e-14);
            assert!((b.r[k].get(0, 1) - a.r[k].get(0, 1) * e.conj()).norm() < 1e-14);
            assert_eq!(a.r[k].get(0, 0), b.r[k].get(0, 0));
        }
    }

    proptest! {
        #[test]
        fn projector_split_holds_for_random_input(seed in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let g = contour(8.0, 32);
            let f: Vec<C64> = seed.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
            let pp = cauchy_projector(&f, &g, Sign::Plus).unwrap();
            let pm = cauchy_projector(&f, &g, Sign::Minus).unwrap();
            for k in 0..32 {
                prop_assert!((pp[k] - pm[k] - f[k]).norm() < 1e-13);
            }
        }
    }
}
