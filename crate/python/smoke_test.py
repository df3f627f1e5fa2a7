"""Smoke test for the Python bindings.

Build the module first:

    cargo build --release -p grating-py --features extension-module

The script imports an installed ``grating_py`` when present, and otherwise
loads the shared library from ``target/release`` (or ``target/debug``).
"""

import cmath
import importlib
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("grating_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libgrating_py.so", "libgrating_py.dylib", "grating_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(lib, tmp / f"grating_py{suffix}")
                sys.path.insert(0, str(tmp))
                return importlib.import_module("grating_py")
    sys.exit("grating_py not found; build it with "
             "`cargo build --release -p grating-py --features extension-module`")


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return ok


def main():
    g = load()
    results = []

    # Degenerate branch at k = 1, alpha = 0, rho = pi.
    c = g.kernel_coefficient(0, 1, 1.0, 0.0, math.pi)
    results.append(check("degenerate coefficient", c == 0.25j, repr(c)))

    # Fabry-Perot reflectance of the unit slab with q = 3 at k = 0.9.
    eta = 2.0
    s2 = math.sin(0.9 / eta) ** 2
    gain = (eta - 1 / eta) ** 2
    frozen = gain * s2 / (4 + gain * s2)
    r, t, refl, trans = g.slab_reference(3.0, 0.9)
    results.append(check("slab reference", abs(refl - frozen) < 1e-12 and abs(refl + trans - 1) < 1e-12,
                         f"R = {refl:.12f}"))
    results.append(check("slab phases are finite", cmath.isfinite(r) and cmath.isfinite(t)))

    refl2d, trans2d, defect = g.solve_slab(3.0, 64)
    results.append(check("2D slab solve", abs(refl2d - frozen) < 1e-3 and defect < 1e-6,
                         f"R = {refl2d:.6f}, defect = {defect:.1e}"))

    eff = json.loads(g.solve_config(str(ROOT / "configs" / "circle_tensor.toml")))
    total = eff["total_reflected"] + eff["total_transmitted"]
    results.append(check("config solve", len(eff["rows"]) > 0 and 0 < total <= 1 + 1e-6,
                         f"{len(eff['rows'])} orders, total {total:.6f}"))

    report = json.loads(g.diagnose_config(str(ROOT / "configs" / "slab.toml")))
    verdict = report["conditions"][0]["verdict"]
    results.append(check("diagnose", verdict == "satisfied", verdict))

    try:
        g.solve_config(str(ROOT / "configs" / "anomaly.toml"))
        results.append(check("anomaly rejected", False))
    except ValueError as e:
        results.append(check("anomaly rejected", "non-resonance" in str(e)))

    quick = json.loads(g.validate("quick"))
    results.append(check("validate quick", quick["passed"], f"{len(quick['gates'])} gates"))

    sys.exit(0 if all(results) else 1)


if __name__ == "__main__":
    main()
