"""Backend selection for the grid-search hot kernels.

Imports the compiled extension when present, otherwise the pure-numpy
fallback.  ``python -m stbeam.benchmarks`` compares the two.
"""

import numpy as np

try:
    from stbeam import _kernels as _impl
except ImportError:
    from stbeam import _kernels_py as _impl

BACKEND = _impl.BACKEND


def temporal_gram_stack(dopplers, m, sample_period_s, r_max):
    dopplers = np.ascontiguousarray(dopplers, dtype=np.float64)
    return _impl.temporal_gram_stack(dopplers, int(m),
                                     float(sample_period_s), int(r_max))


def slnr_grid_from_gram(gram, desired, rho):
    gram = np.ascontiguousarray(gram, dtype=np.complex128)
    return _impl.slnr_grid_from_gram(gram, int(desired), float(rho))


def slnr_objective_grid(spatial_gram, dopplers, desired, m,
                        sample_period_s, r_max, rho):
    spatial_gram = np.ascontiguousarray(spatial_gram, dtype=np.complex128)
    dopplers = np.ascontiguousarray(dopplers, dtype=np.float64)
    return _impl.slnr_objective_grid(spatial_gram, dopplers, int(desired),
                                     int(m), float(sample_period_s),
                                     int(r_max), float(rho))
