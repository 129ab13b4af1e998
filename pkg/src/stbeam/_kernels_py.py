"""Pure-numpy implementation of the grid-search hot kernels.

The leakage-ratio objective for one transmitter factorizes over the
candidate-interval grid: with one Doppler per link, every space-time
channel is a Kronecker product, so the channel Gram matrix at interval
tau is the elementwise product of the spatial Gram and a Dirichlet-sum
temporal factor.  The objective at each grid point then needs only a
(K-1) x (K-1) regularized solve, done here with batched numpy linalg.

``stbeam._kernels`` is the compiled twin; both expose the same three
functions and must agree to floating-point accuracy.
"""

import numpy as np

BACKEND = "python"


def temporal_gram_stack(dopplers, m, sample_period_s, r_max):
    """Pairwise temporal-steering inner products on the interval grid.

    Returns ``T`` of shape (r_max, K, K) with
    ``T[r-1, a, b] = b(f_a, r*Ts)^H b(f_b, r*Ts)
                   = sum_q exp(-2j*pi*q*(f_b - f_a)*r*Ts)``.
    """
    dopplers = np.asarray(dopplers, dtype=np.float64)
    r = np.arange(1, r_max + 1, dtype=np.float64)
    df = dopplers[None, :] - dopplers[:, None]            # (K, K)
    x = df[None, :, :] * (r * sample_period_s)[:, None, None]
    q = np.arange(m, dtype=np.float64)
    return np.exp(-2j * np.pi * x[..., None] * q).sum(axis=-1)


def slnr_grid_from_gram(gram, desired, rho):
    """Reduced leakage-ratio objective from a stack of channel Grams.

    ``gram[r]`` is the Hermitian K x K Gram of one transmitter's link
    channels at grid point r; column/row ``desired`` is the served link.
    Returns the objective
    ``(||h||^2 - g^H (rho I + G)^{-1} g) / rho`` per grid point, where G
    drops the desired row/column and ``g`` is the desired column.
    """
    gram = np.asarray(gram, dtype=np.complex128)
    if rho <= 0:
        raise ValueError("rho must be positive")
    n_r, k, _ = gram.shape
    h_sq = gram[:, desired, desired].real
    if k == 1:
        return h_sq / rho
    keep = [i for i in range(k) if i != desired]
    g = gram[:, keep, desired]                             # (R, K-1)
    big_g = gram[np.ix_(range(n_r), keep, keep)]           # (R, K-1, K-1)
    a = big_g + rho * np.eye(k - 1)
    y = np.linalg.solve(a, g[..., None])[..., 0]
    quad = np.einsum("ri,ri->r", g.conj(), y).real
    return (h_sq - quad) / rho


def slnr_objective_grid(spatial_gram, dopplers, desired, m,
                        sample_period_s, r_max, rho):
    """Fused objective over the interval grid for factorized channels."""
    spatial_gram = np.asarray(spatial_gram, dtype=np.complex128)
    t = temporal_gram_stack(dopplers, m, sample_period_s, r_max)
    return slnr_grid_from_gram(t * spatial_gram[None, :, :], desired, rho)
