//! Independent oracles for the direct transform and the evolver.

use mtm_ist::direct::{assemble_coefficients, compute_scattering, integrate_jost, Chart, DirectConfig, JostKind};
use mtm_ist::lattice::{make_xgrid, Potential, Spacing, SpectralChart, SpectralGrid};
use mtm_ist::mtmpde::{self, EvolverConfig, Splitting};
use mtm_ist::C64;

type V = [C64; 2];

const I: C64 = C64::new(0.0, 1.0);

fn fields(x: f64) -> (C64, C64, C64) {
    let g = (-x * x).exp();
    let u = 0.3 * g * C64::from_polar(1.0, 0.5 * x);
    let ux = u * C64::new(-2.0 * x, 0.5);
    let v = C64::new(0.2 * (-(x - 0.5) * (x - 0.5)).exp(), 0.0);
    (u, ux, v)
}

/// Right-hand side of `m_x = (Q₁ + zQ₂) m − (i/2)(z − 1/z) diag(0, 1) m`
/// written out entry by entry.
fn rhs(x: f64, z: f64, m: V) -> V {
    let (u, ux, v) = fields(x);
    let rho = u.norm_sqr() + v.norm_sqr();
    let q1 = [[-0.25 * I * rho, 0.5 * I * u.conj()], [ux - 0.5 * I * u * v.norm_sqr() - 0.5 * I * v, 0.25 * I * rho]];
    let h = 0.5 * I;
    let q2 = [[h * u * v.conj(), -h * v.conj()], [h * (u + u * u * v.conj()), -h * u * v.conj()]];
    let k = 0.5 * I * (z - 1.0 / z);
    let mut out = [C64::new(0.0, 0.0); 2];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..2 {
            *o += (q1[i][j] + z * q2[i][j]) * m[j];
        }
    }
    out[1] -= k * m[1];
    out
}

fn axpy(a: V, h: f64, b: V) -> V {
    [a[0] + h * b[0], a[1] + h * b[1]]
}

fn rk4(z: f64, x0: f64, x1: f64, steps: usize) -> V {
    let h = (x1 - x0) / steps as f64;
    let mut m = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    for s in 0..steps {
        let x = x0 + s as f64 * h;
        let k1 = rhs(x, z, m);
        let k2 = rhs(x + 0.5 * h, z, axpy(m, 0.5 * h, k1));
        let k3 = rhs(x + 0.5 * h, z, axpy(m, 0.5 * h, k2));
        let k4 = rhs(x + h, z, axpy(m, h, k3));
        for i in 0..2 {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    m
}

#[test]
fn left_jost_frame_matches_fine_rk4() {
    let grid = make_xgrid(8.0, 1601).unwrap();
    let p = Potential::from_fn(grid, |x| {
        let (u, _, v) = fields(x);
        (u, v)
    })
    .unwrap();
    let cm = assemble_coefficients(&p, Chart::SmallLambda);
    for z in [0.25, 0.7, -0.9] {
        let frame = integrate_jost(&cm, z, JostKind::MMinus).unwrap();
        for j in [800, 1000, 1600] {
            let want = rk4(z, -8.0, p.grid().x(j), 40 * j);
            let got = frame.values[j];
            let err = (got.0[0] - want[0]).norm().max((got.0[1] - want[1]).norm());
            assert!(err < 1e-8, "z = {z}, x = {}: {err:e}", p.grid().x(j));
        }
    }
}

#[test]
fn scattering_is_invariant_under_the_pde_flow() {
    let p0 = Potential::gaussian(make_xgrid(12.0, 1201).unwrap(), 0.2, 0.1);
    let cfg = EvolverConfig::matched(p0.grid().dx(), Splitting::Strang);
    let p1 = mtmpde::evolve(&p0, 0.5, &cfg).unwrap().p;
    let grid = SpectralGrid::symmetric(8.0, 64, Spacing::Mapped, SpectralChart::Z).unwrap();
    let s0 = compute_scattering(&p0, &grid, &DirectConfig::default()).unwrap();
    let s1 = compute_scattering(&p1, &grid, &DirectConfig::default()).unwrap();
    for k in 0..grid.len() {
        assert!((s1.a[k] - s0.a[k]).norm() < 1e-4, "a at z = {}", grid.node(k));
        let turned = s0.bp[k] * C64::from_polar(1.0, -0.25 * grid.sum_recip(k));
        assert!((s1.bp[k] - turned).norm() < 1e-4, "b₊ at z = {}", grid.node(k));
    }
}
