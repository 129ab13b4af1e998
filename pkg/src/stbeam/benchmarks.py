"""Benchmark the compiled grid-search kernels against the numpy fallback.

Run as ``python -m stbeam.benchmarks``.  Sizes mirror the Monte Carlo
hot path: K transmitters, m repetitions, a 500-point interval grid.
"""

import time

import numpy as np

from . import _kernels_py

try:
    from . import _kernels
except ImportError:
    _kernels = None


def _random_case(rng, k):
    s = (rng.standard_normal((16, k)) + 1j * rng.standard_normal((16, k)))
    spatial_gram = s.conj().T @ s
    dopplers = rng.uniform(-50e3, 50e3, size=k)
    return spatial_gram, dopplers


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(repeats: int = 5, calls: int = 200) -> list:
    """Time both backends; returns (label, python_s, compiled_s) tuples."""
    rng = np.random.default_rng(0)
    results = []
    for k, m in ((2, 2), (4, 3), (8, 4)):
        spatial_gram, dopplers = _random_case(rng, k)
        args = (spatial_gram, dopplers, 0, m, 2e-7, 500, 1e-2)

        def loop(mod, args=args):
            for _ in range(calls):
                mod.slnr_objective_grid(*args)

        t_py = _time(lambda: loop(_kernels_py), repeats)
        t_cy = _time(lambda: loop(_kernels), repeats) if _kernels else None
        if _kernels is not None:
            ref = _kernels_py.slnr_objective_grid(*args)
            got = _kernels.slnr_objective_grid(*args)
            rel = float(np.max(np.abs(got - ref))
                        / np.max(np.abs(ref)))
            assert rel < 1e-9, f"backend mismatch: {rel:.2e}"
        results.append((f"K={k} m={m} grid=500 x{calls}", t_py, t_cy))
    return results


def main():
    print(f"compiled backend available: {_kernels is not None}")
    for label, t_py, t_cy in run():
        line = f"{label:26s}  python {t_py * 1e3:8.1f} ms"
        if t_cy is not None:
            line += (f"   compiled {t_cy * 1e3:8.1f} ms"
                     f"   speedup {t_py / t_cy:5.1f}x")
        print(line)


if __name__ == "__main__":
    main()
