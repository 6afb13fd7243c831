"""Smoke test for the `magkit` Python module.

Builds the extension with cargo when it is not importable, then checks a
few values against closed forms.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        import magkit

        return magkit
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "magkit-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libmagkit_py.so"
    dest = Path(tempfile.mkdtemp()) / "magkit.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))
    import magkit

    return magkit


def main():
    mk = load()
    sources = [[-1.0], [1.0]]

    perm, image, dist2 = mk.nearest_permutation(sources, [0.8, -0.6])
    assert perm == [1, 0] and image == [1.0, -1.0], (perm, image)
    assert abs(dist2 - 0.2) < 1e-12

    # on the bisector the hull point is the origin
    assert max(abs(c) for c in mk.proj_o(sources, [0.4, 0.4])) < 1e-15

    # one source: no force, velocity y - x
    v = mk.m_velocity([[0.5]], [2.0], 0.1, 0.3)
    assert abs(v[0] - 1.5) < 1e-14
    assert mk.force_field([[0.5]], [2.0], 0.1, 0.3) == [0.0]

    # single Gaussian: Q = 1/(4 tau) - (y - x)^2 / (8 tau^2) per coordinate
    tau = 0.3 * math.exp(0.2)
    q = mk.quantum_potential([[0.5]], [2.0], 0.1, 0.3)
    assert abs(q - (1 / (4 * tau) - 1.5**2 / (8 * tau**2))) < 1e-12

    a, b, c = mk.default_exponents(1)
    assert abs(a - 0.75) < 1e-15 and abs(b - 1 / 12) < 1e-15 and abs(c - 0.375) < 1e-15

    for cid, name, passed, measured, tol, detail in mk.check("exponents"):
        assert passed, (name, measured, detail)

    cfg = {
        "kind": "heat-paths",
        "problem": {"d": 1, "k": 2, "sources": sources},
        "physics": {"epsilon": 0.2},
        "time": {"s1": 1.0, "h": 0.1},
        "seed": 1,
    }
    with tempfile.TemporaryDirectory() as out:
        files = mk.run_config(json.dumps(cfg), out)
        assert "trajectory.csv" in files and "manifest.json" in files
        assert (Path(out) / "manifest.json").is_file()

    try:
        mk.run_config(json.dumps({**cfg, "bogus": 1}), None)
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print(f"magkit {mk.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
