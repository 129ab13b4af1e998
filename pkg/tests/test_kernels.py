import numpy as np
import pytest

from stbeam import _kernels_py, kernels

try:
    from stbeam import _kernels
except ImportError:
    _kernels = None


def _random_instance(rng, k, n=16):
    s = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return s, s.conj().T @ s, rng.uniform(-50e3, 50e3, size=k)


def _dense_objective(spatial, dopplers, desired, m, t_s, r, rho):
    """Oracle: assemble the full channels and solve the big system."""
    n, k = spatial.shape
    cols = [np.kron(np.exp(-2j * np.pi * np.arange(m) * f * r * t_s), s)
            for f, s in zip(dopplers, spatial.T)]
    h = cols[desired]
    leak = np.column_stack([c for i, c in enumerate(cols) if i != desired]) \
        if k > 1 else np.zeros((m * n, 0))
    a = leak @ leak.conj().T + rho * np.eye(m * n)
    return float(np.real(np.vdot(h, np.linalg.solve(a, h))))


@pytest.mark.parametrize("k,m", [(1, 2), (2, 2), (4, 3), (6, 4)])
def test_fallback_matches_dense_solve(rng, k, m):
    spatial, gram, dopplers = _random_instance(rng, k)
    t_s, rho, r_max = 2e-7, 0.3, 40
    vals = _kernels_py.slnr_objective_grid(gram, dopplers, 0, m, t_s,
                                           r_max, rho)
    for r in (1, 7, r_max):
        oracle = _dense_objective(spatial, dopplers, 0, m, t_s, r, rho)
        assert np.isclose(vals[r - 1], oracle, rtol=1e-9)


def test_temporal_gram_direct(rng):
    dopplers = rng.uniform(-50e3, 50e3, size=3)
    m, t_s = 4, 2e-7
    t = _kernels_py.temporal_gram_stack(dopplers, m, t_s, 10)
    for r in (1, 5, 10):
        for a in range(3):
            for b in range(3):
                ba = np.exp(-2j * np.pi * np.arange(m) * dopplers[a]
                            * r * t_s)
                bb = np.exp(-2j * np.pi * np.arange(m) * dopplers[b]
                            * r * t_s)
                assert np.isclose(t[r - 1, a, b], np.vdot(ba, bb),
                                  atol=1e-12)


def test_fused_equals_two_step(rng):
    _, gram, dopplers = _random_instance(rng, 4)
    t = _kernels_py.temporal_gram_stack(dopplers, 3, 2e-7, 25)
    two_step = _kernels_py.slnr_grid_from_gram(t * gram[None], 1, 0.05)
    fused = _kernels_py.slnr_objective_grid(gram, dopplers, 1, 3, 2e-7,
                                            25, 0.05)
    assert np.allclose(fused, two_step, rtol=1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("k,m", [(1, 1), (2, 2), (4, 3), (8, 5)])
def test_compiled_matches_fallback(rng, k, m):
    _, gram, dopplers = _random_instance(rng, k)
    args = (gram, dopplers, k - 1, m, 2e-7, 200, 0.02)
    ref = _kernels_py.slnr_objective_grid(*args)
    got = _kernels.slnr_objective_grid(*args)
    assert np.allclose(got, ref, rtol=1e-10)

    t_ref = _kernels_py.temporal_gram_stack(dopplers, m, 2e-7, 50)
    t_got = _kernels.temporal_gram_stack(dopplers, m, 2e-7, 50)
    assert np.allclose(t_got, t_ref, rtol=1e-12, atol=1e-12)

    g_ref = _kernels_py.slnr_grid_from_gram(t_ref * gram[None], 0, 0.7)
    g_got = _kernels.slnr_grid_from_gram(
        np.ascontiguousarray(t_ref * gram[None]), 0, 0.7)
    assert np.allclose(g_got, g_ref, rtol=1e-10)


def test_dispatcher_coerces_dtypes(rng):
    _, gram, dopplers = _random_instance(rng, 3)
    vals = kernels.slnr_objective_grid(gram, list(dopplers), 0, 2,
                                       2e-7, 10, 0.1)
    assert vals.shape == (10,)
    assert kernels.BACKEND in ("compiled", "python")


def test_rho_must_be_positive(rng):
    _, gram, dopplers = _random_instance(rng, 2)
    with pytest.raises(ValueError):
        kernels.slnr_objective_grid(gram, dopplers, 0, 2, 2e-7, 5, 0.0)
