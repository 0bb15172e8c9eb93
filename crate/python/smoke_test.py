"""Smoke test for the mtm_ist extension module on small grids.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/mtm_ist-*.whl
"""

import math

import mtm_ist


def sup(f):
    return max(abs(c) for c in f)


def main():
    p = mtm_ist.Potential.gaussian(half_width=10.0, n=401, u_amp=0.2, v_amp=0.1)
    assert len(p) == 401
    assert abs(p.charge() - 0.05 * math.sqrt(math.pi / 2)) < 1e-10

    s = mtm_ist.scattering(p, z_max=8.0, nodes=128)
    assert s.obstruction()["verdict"] == "OK"
    assert max(s.diagnostics()["wronskian_drift"]) < 1e-10
    assert abs(abs(s.a0) - 1.0) < 1e-12

    r = s.reflections()
    assert r.ladder()["omega_ladder"] < 1e-12
    later = r.evolve(0.5)
    assert max(abs(abs(a) - abs(b)) for a, b in zip(r.rhm, later.rhm)) < 1e-14

    q = r.inverse(10.0, 401)
    du, dv = q.max_deviation(p)
    assert du / sup(p.u) < 1e-2 and dv / sup(p.v) < 1e-2, (du, dv)

    forward = mtm_ist.evolve_pde(p, 0.5)
    back = mtm_ist.evolve_pde(forward, -0.5)
    assert max(back.max_deviation(p)) < 1e-8
    assert abs(forward.charge() - p.charge()) < 1e-8 * p.charge()

    q2, report = mtm_ist.roundtrip(p, t=0.0, z_max=8.0, nodes=128)
    assert report["rel_err_u"] < 1e-2 and report["winding"] == 0

    big = mtm_ist.Potential.gaussian(half_width=10.0, n=401, u_amp=3.0, v_amp=0.0)
    try:
        mtm_ist.scattering(big, z_max=8.0, nodes=128).reflections()
    except mtm_ist.ObstructedError:
        pass
    else:
        raise AssertionError("large datum not flagged")

    print(f"smoke test ok: round trip {report['rel_err_u']:.2e} / {report['rel_err_v']:.2e}")


if __name__ == "__main__":
    main()
