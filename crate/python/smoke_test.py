#!/usr/bin/env python3
"""Smoke test for the coldplasma_py extension module.

Builds the cdylib if needed, stages it as an importable module, and runs a
few end-to-end checks against known reference values.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_and_stage() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "coldplasma-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "debug" / "libcoldplasma_py.so"
    if not built.exists():  # macOS fallback
        built = ROOT / "target" / "debug" / "libcoldplasma_py.dylib"
    stage = Path(tempfile.mkdtemp(prefix="coldplasma_py_"))
    shutil.copy(built, stage / "coldplasma_py.so")
    return stage


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    stage = build_and_stage()
    sys.path.insert(0, str(stage))
    import coldplasma_py as cp

    # Commensurate reference problem: n- = 1, n+ = 4.
    p = cp.Problem(1.0, 4.0, 1.0, 0.0, 1.0, -1.0)
    assert p.classify() == "shock_first"
    approx(p.jump_invariant(), -1.0, 1e-15)

    t_star = p.first_intersection()
    approx(t_star, 1.035895953, 1e-6)

    ts = p.intersections(4.0 * math.pi)
    assert len(ts) == 4, ts
    approx(ts[1], 2.0 * math.pi, 1e-6)

    sw = p.switch_points(2.0 * math.pi)
    assert [s for _, s in sw] == ["plus", "plus", "plus"], sw
    for (got, _), want in zip(sw, [2.176190164, 3.920405792, 5.916224372]):
        approx(got, want, 1e-5)

    approx(p.detect_period(), 2.0 * math.pi, 1e-12)
    assert not p.smoothness_feasible(2.0 * math.pi - t_star)

    tl = p.solve(2.0 * math.pi)
    kinds = [k for k, *_ in tl.segments()]
    assert kinds == [
        "shock",
        "rarefaction_two_sided",
        "rarefaction_one_sided_left_wave",
        "rarefaction_two_sided",
        "rarefaction_one_sided_left_wave",
    ], kinds
    assert len(tl.events()) == 5
    # The shock segment completes and lands on the trajectory intersection.
    kind, t0, t1, n, completed = tl.segments()[0]
    assert completed and n > 100
    approx(t1, t_star, 1e-9)
    pts = tl.segment_points(0)
    approx(pts[-1][1], p.trajectory("plus", t_star), 1e-6)
    approx(pts[-1][3], 2.0, 1e-8)  # delivered amplitude equals the initial one
    # Partial fan solves announce themselves.
    assert tl.has_stalls()
    assert any(tl.diagnostics(i) for i in range(1, 5))

    report = json.loads(tl.validation_json())
    assert report["hard_violations"] == [], report["hard_violations"]

    doc = json.loads(tl.to_json())
    assert {"problem", "segments", "events", "period", "validation"} <= set(doc)

    with tempfile.TemporaryDirectory() as d:
        csv_path = Path(d) / "series.csv"
        svg_path = Path(d) / "plane.svg"
        tl.write_csv(str(csv_path))
        tl.write_svg(str(svg_path))
        header = csv_path.read_text().splitlines()[0]
        assert header == "t,phi,dphi,e,x_minus,x_plus,segment_kind", header
        svg = svg_path.read_text()
        assert svg.startswith("<?xml") and 'class="interface"' in svg

    # Equal densities: continuous fan, no switching, period 2 pi.
    q = cp.Problem(1.0, 1.0, 1.0, 0.0, 0.0, -1.0)
    approx(q.first_intersection(), math.pi / 2.0, 1e-9)
    assert q.switch_points(2.0 * math.pi) == []
    tl1 = q.solve(2.0 * math.pi)
    assert [k for k, *_ in tl1.segments()] == ["shock", "continuous_fan"]
    assert not tl1.has_stalls()

    print("smoke test OK")


if __name__ == "__main__":
    main()
