"""Smoke test for the vortexlab Python bindings.

Build and install the extension first:

    pip install --no-build-isolation -e crates/py

then run `python python/smoke_test.py`.
"""

import json
import math
import tempfile
from pathlib import Path

import vortexlab_py as vx


def main():
    profile = vx.RadialProfile.solve(20.0, 1e-8)
    f, a, _, _ = profile.eval(3.0)
    assert 0.0 < f < 1.0 and 0.0 < a < 1.0
    v, b = profile.second_order_residual()
    print(f"profile: r_max={profile.r_max}, slope={profile.shoot_slope:.6f}, residual={max(v, b):.2e}")

    cfg = vx.FieldConfiguration.vortex(profile, 6.0, 0.2)
    e = cfg.energy()["total"]
    assert abs(e / (2 * math.pi) - 1.0) < 0.02, e
    su, sa = cfg.residual()
    assert max(su, sa) < 0.05, (su, sa)
    print(f"vortex: E/2pi={e / (2 * math.pi):.5f}, residual={max(su, sa):.2e}")

    density = vx.density_ratio(cfg, [0.0, 0.0], 5.0)
    assert density["ratio"] > 0.9
    zeros = vx.nodal_points(cfg)
    assert zeros and all(math.hypot(*p["z"]) < 0.2 for p in zeros)

    lin = vx.LinearizedSystem(cfg)
    ratios = lin.zero_mode_ratios(profile)
    assert max(ratios) < 0.05, ratios
    check = lin.decomposition_check(seed=0)
    assert check["discrepancy"] <= 5 * 0.2**2, check
    print(f"linearized: unknowns={lin.unknowns}, zero modes={ratios}, decomposition={check['discrepancy']:.3e}")

    wide = vx.RadialProfile.solve(30.0, 1e-8)
    sups = [vx.cutoff_residual(wide, eps)["sup_v"] for eps in (0.1, 0.05, 0.025)]
    slope = vx.log_log_slope([0.1, 0.05, 0.025], sups)
    assert slope > 3.5, sups
    print(f"cutoff residual slope: {slope:.3f}")

    start = vx.FieldConfiguration.vortex_trace(4.0, 0.25)
    solved, report = vx.solve_planar(start, {"tolerance": 1e-3})
    assert report["converged"]
    print(f"planar: {report['iterations']} steps, residual={report['residuals']['euler_lagrange']:.2e}")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        snap = tmp / "planar.vxs"
        solved.save(snap)
        assert len(vx.FieldConfiguration.load(snap)) == len(solved)

        config = tmp / "radial.json"
        config.write_text(json.dumps({"seed": 0, "params": {"r_max": 20.0}}))
        manifest = vx.run_experiment("solve-radial", config, threads=1, out=tmp / "run")
        assert manifest["status"] == "ok"
        assert all(len(o["sha256"]) == 64 for o in manifest["outputs"])

        config.write_text(json.dumps({"seed": 0, "params": {"r_max": -1}}))
        try:
            vx.run_experiment("solve-radial", config, out=tmp / "bad")
        except ValueError as err:
            assert json.loads(str(err))["error"]["kind"] == "validation"
        else:
            raise AssertionError("invalid config accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
