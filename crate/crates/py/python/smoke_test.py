"""Smoke test for the Python bindings.

Run after `maturin develop` or `cargo build -p subdiff-py --release`; in the
latter case the freshly built library is loaded straight from target/.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys


def load():
    try:
        import subdiff

        return subdiff
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3] / "target"
    for profile in ("release", "debug"):
        lib = root / profile / "libsubdiff_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("subdiff", str(lib))
            spec = importlib.util.spec_from_file_location("subdiff", lib, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("subdiff extension not found; build it with `cargo build -p subdiff-py --release`")


def main():
    sd = load()

    assert sd.evaluate("1 + 0.1*sin(x)", 0.0, 0.0) == 1.0
    try:
        sd.evaluate("x +", 0.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("syntax error not raised")

    # M(t) = t^(α−1)/Γ(α) for the stable subordinator.
    m = sd.memory_kernel(0.5, 1.0)
    assert abs(m - 1.0 / math.gamma(0.5)) < 1e-8, m

    draws = sd.stable_subordinator_samples(0.5, 1.0, 20000, 1)
    lt = sum(math.exp(-t) for t in draws) / len(draws)
    assert abs(lt - math.exp(-1.0)) < 0.02, lt

    config = {
        "subordinator": {"family": "stable", "alpha": 0.7},
        "coefficients": {"drift": "-x", "sigma": "1"},
        "grid": {"x_min": -4, "x_max": 4, "n_x": 81},
        "time": {"t_end": 0.2, "dt": 0.01},
        "monte_carlo": {"paths": 500, "seed": 3, "dgamma": 0.002},
        "solver": {"scheme": "imex"},
    }
    text = json.dumps(config)
    x, sols = sd.solve_fpe(text)
    assert len(x) == 81 and sols[0][0] == 0.2
    mass = sum(sols[0][1]) * (x[1] - x[0])
    assert abs(mass - 1.0) < 1e-3, mass

    times, rows = sd.simulate(text)
    assert times == [0.2] and len(rows) == 500
    assert sd.simulate(text, threads=2) == (times, rows)

    (report,) = sd.compare(text)
    assert report[0] == 0.2 and 0.0 <= report[1] <= 2.0

    config["subordinator"]["alpha"] = 1.5
    try:
        sd.solve_fpe(json.dumps(config))
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config not rejected")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
