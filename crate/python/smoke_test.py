"""Builds the extension module and exercises it from Python.

Run from anywhere: python3 python/smoke_test.py
"""

import importlib
import math
import shutil
import subprocess
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module(dest: Path) -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "coverplace-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libcoverplace_py.so"
    shutil.copy(lib, dest / "coverplace.so")


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        build_module(Path(tmp))
        sys.path.insert(0, tmp)
        cp = importlib.import_module("coverplace")

        eq = cp.Placement.named("eq", 2)
        assert eq.positions == [0.25, 0.75]
        model = cp.FailureModel.independent(0.5)
        assert cp.expected_cost(eq, model) == 0.6875

        sgl = cp.Placement.named("sgl", 5)
        c = cp.expected_cost(sgl, cp.FailureModel.independent(0.9))
        assert math.isclose(c, 0.5 * (1 + 0.9**5), rel_tol=0, abs_tol=1e-15)

        x = cp.sample_uniform_placement(5, 42, 0)
        assert x.positions[0] == 0.09781386633443878
        fixed = cp.FailureModel.cortes(2, 5)
        dp = cp.expected_cost(x, fixed, "circle")
        en = cp.expected_cost(x, fixed, "circle", method="enum")
        assert abs(dp - en) < 1e-12

        num, den = cp.exact_random_fraction(2)
        assert Fraction(int(num), int(den)) == Fraction(19, 36)

        opt = cp.optimize(3, cp.FailureModel.independent(0.2))
        assert opt["lower_bound"] <= opt["cost"] + 1e-12
        assert opt["certified_gap"] <= 1e-8

        sw = cp.sweep(2, [0.1, 0.2, 0.5, 0.8])
        assert len(sw["segments"]) == 2

        text = cp.export_lp(1, cp.FailureModel.independent(0.4))
        assert "w_1 - x1 >= 0" in text and "w_1 + x1 >= 1" in text

        assert cp.expected_cost_random(50, 0.3) > cp.expected_cost_equispaced(50, 0.3)
        assert cp.run_check(1)[0]

        try:
            cp.export_lp(15, cp.FailureModel.independent(0.3))
        except cp.SizeGuardError:
            pass
        else:
            raise AssertionError("size guard not raised")
        try:
            cp.Placement([0.2, 1.5])
        except ValueError:
            pass
        else:
            raise AssertionError("out-of-range entry accepted")

    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
