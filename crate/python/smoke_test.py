"""Smoke test for the mlplast_py extension.

Build first:
    cargo build --release -p mlplast-py --features extension-module
then run:
    python3 python/smoke_test.py

If the module is not installed, the freshly built shared library is loaded
from target/release.
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile


def load_module():
    try:
        import mlplast_py

        return mlplast_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for name in ("libmlplast_py.so", "libmlplast_py.dylib", "mlplast_py.dll"):
        built = root / "target" / "release" / name
        if built.exists():
            break
    else:
        sys.exit("mlplast_py not found; build it with "
                 "`cargo build --release -p mlplast-py --features extension-module`")
    tmp = pathlib.Path(tempfile.mkdtemp())
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    target = tmp / ("mlplast_py" + suffix)
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("mlplast_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    m = load_module()

    # Closed-form references.
    assert close(m.front_from_pressure(0.19), 182.89, 1e-4)
    assert abs(m.limit_pressure() - 0.19209) < 1e-4
    lame = m.elastic_reference(100.0, 0.05)
    assert abs(lame["radial"] + 0.05) < 1e-12
    try:
        m.front_from_pressure(0.5)
    except m.ConfigError:
        pass
    else:
        raise AssertionError("pressure beyond the limit load accepted")

    # Elastic cylinder at coarse spacing.
    domain = m.Domain(100.0, 200.0)
    assert domain.contains(150.0, 10.0) and not domain.contains(10.0, 10.0)
    nodes = m.generate_nodes(domain, 5.0, seed=3)
    assert len(nodes) > nodes.boundary_count > 0
    problem = m.Problem(domain, nodes, m.Material())
    result = problem.run(0.05)
    assert result.iterations == [1] and result.return_mappings == 0
    exact = lame["displacement"]
    inner = [math.hypot(*u) for (x, y), u in zip(nodes.positions, result.displacement)
             if abs(math.hypot(x, y) - 100.0) < 1e-9]
    mean = sum(inner) / len(inner)
    assert close(mean, exact, 0.02), (mean, exact)

    # A few plastic steps.
    plastic = problem.run(0.17, n_load=5)
    assert len(plastic.iterations) == 5 and plastic.return_mappings > 0
    assert max(plastic.eqps) > 0.0
    front = m.extract_front(nodes, plastic)
    assert 100.0 < front < 200.0

    summary = m.run_preset("elastic", h=6.0)
    assert summary["case"] == "elastic" and summary["picard_iterations_total"] == 1

    try:
        m.run_preset("no-such-case")
    except m.ConfigError:
        pass
    else:
        raise AssertionError("unknown case accepted")

    print("python smoke test passed: %d nodes, front %.2f mm" % (len(nodes), front))


if __name__ == "__main__":
    main()
