"""Transmit precoders for space-time channels.

Spatial baselines (MRT, zero-forcing projection, leakage-ratio precoding)
apply to single-slot channels; their space-time variants exploit the
Doppler dimension opened by repeating a symbol at a chosen interval.
Every non-degenerate precoder is normalized to ``||f||^2 = m``.

Two routes exist for the interval search: :func:`optimize_tau` evaluates
arbitrary channels supplied per grid point, while the structured path in
:func:`st_slnr_algorithm` exploits the Kronecker factorization through
the ``stbeam.kernels`` backend.  Tests hold the two routes equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics
from .channel import SpaceTimeChannel, temporal_steering

FEASIBLE_INTERVAL_CAP_S = 100e-6    # practical retransmission-interval cap
ZF_DEGENERACY_TOL = 1e-12           # residual norm ratio flagging a dead ZF


class IntervalInfeasibleError(ValueError):
    """Raised when equal Dopplers push the orthogonal interval to infinity."""


@dataclass
class Beamformer:
    """Stacked precoder over ``m`` repetitions, squared norm ``m``."""

    vector: np.ndarray
    m: int
    degenerate: bool = False

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.complex128)
        nsq = float(np.real(np.vdot(self.vector, self.vector)))
        if self.degenerate:
            if nsq != 0.0:
                raise ValueError("degenerate beamformer must be zero")
        elif abs(nsq - self.m) > 1e-8 * self.m:
            raise ValueError("beamformer squared norm must equal m")

    @classmethod
    def from_direction(cls, w: np.ndarray, m: int) -> "Beamformer":
        w = np.asarray(w, dtype=np.complex128)
        return cls(np.sqrt(m) * w / np.linalg.norm(w), m)

    @classmethod
    def zero(cls, size: int, m: int) -> "Beamformer":
        return cls(np.zeros(size, dtype=np.complex128), m, degenerate=True)


@dataclass(frozen=True)
class IntervalChoice:
    """Orthogonalizing interval and its feasibility against the cap."""

    tau_s: float
    feasible: bool


def _chan_vec(channel) -> np.ndarray:
    return np.asarray(getattr(channel, "vector", channel),
                      dtype=np.complex128)


def mrt(desired: SpaceTimeChannel) -> Beamformer:
    """Match the desired channel: f = sqrt(m) h / ||h||."""
    h = _chan_vec(desired)
    if np.linalg.norm(h) == 0.0:
        raise ValueError("MRT undefined for a zero channel")
    return Beamformer.from_direction(h, desired.m)


def zf_project(desired: SpaceTimeChannel, interferers) -> Beamformer:
    """Match the desired channel inside the interference null space.

    Returns the flagged zero beamformer when the desired channel lies in
    the interferer span (e.g. aligned arrival angles with no time
    extension), so Monte Carlo runs degrade instead of erroring.
    """
    h = _chan_vec(desired)
    cols = [_chan_vec(c) for c in interferers]
    cols = [c for c in cols if np.linalg.norm(c) > 0.0]
    if len(cols) >= h.size:
        raise ValueError("need fewer interferers than dimensions")
    if not cols:
        return mrt(desired)
    a = np.column_stack(cols)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    basis = u[:, s > s[0] * 1e-12]
    p = h - basis @ (basis.conj().T @ h)
    if np.linalg.norm(p) < ZF_DEGENERACY_TOL * np.linalg.norm(h):
        return Beamformer.zero(h.size, desired.m)
    return Beamformer.from_direction(p, desired.m)


def st_zf_interval(f_desired_hz: float, f_interferer_hz: float,
                   cap_s: float = FEASIBLE_INTERVAL_CAP_S) -> IntervalChoice:
    """Interval making desired and interfering two-repeat channels orthogonal.

    tau* = 1 / (2 (f_desired - f_interferer)), returned sign-free.
    """
    df = f_desired_hz - f_interferer_hz
    if df == 0.0:
        raise IntervalInfeasibleError(
            "equal Dopplers: orthogonal interval is unbounded")
    tau = abs(1.0 / (2.0 * df))
    return IntervalChoice(tau, tau <= cap_s)


def st_zf(desired: SpaceTimeChannel,
          interferer: SpaceTimeChannel) -> Beamformer:
    """Two-repetition zero-forcing toward a single interfered user."""
    if desired.m != 2 or interferer.m != 2:
        raise ValueError("space-time ZF is defined for m = 2")
    if desired.tau_s != interferer.tau_s:
        raise ValueError("channels must share the repetition interval")
    return zf_project(desired, [interferer])


# ---------------------------------------------------------------------------
# leakage-ratio precoding
# ---------------------------------------------------------------------------

def _regularized_match(h: np.ndarray, leakage: np.ndarray | None,
                       rho: float) -> np.ndarray:
    """w = (L L^H + rho I)^{-1} h via the small-Gram identity.

    With J leakage columns the inverse reduces to a J x J Hermitian
    positive-definite solve: w = (h - L (rho I + L^H L)^{-1} L^H h) / rho.
    """
    if rho <= 0:
        raise ValueError("regularizer must be positive")
    if leakage is None or leakage.shape[1] == 0:
        return h / rho
    g = leakage.conj().T @ h
    gram = leakage.conj().T @ leakage
    y = np.linalg.solve(gram + rho * np.eye(gram.shape[0]), g)
    return (h - leakage @ y) / rho


def slnr_reduced(desired, leakage_matrix, noise_over_power: float) -> float:
    """Leakage-ratio value achieved by the optimal precoder:
    h^H (L L^H + (sigma^2/P) I)^{-1} h."""
    h = _chan_vec(desired)
    lk = None if leakage_matrix is None else np.asarray(leakage_matrix)
    w = _regularized_match(h, lk, noise_over_power)
    return float(np.real(np.vdot(h, w)))


def slnr_precoder(desired: SpaceTimeChannel, leakage_matrix,
                  noise_over_power: float, m: int) -> Beamformer:
    """Closed-form leakage-ratio maximizer, normalized to ||f||^2 = m."""
    h = _chan_vec(desired)
    lk = None if leakage_matrix is None else np.asarray(leakage_matrix)
    w = _regularized_match(h, lk, noise_over_power)
    return Beamformer.from_direction(w, m)


def slnr_precoder_imperfect(estimate: SpaceTimeChannel,
                            estimated_leakage_matrix,
                            error_covariance_total: float,
                            noise_over_power: float) -> Beamformer:
    """Leakage-ratio precoder under estimated channels.

    The summed estimation-error covariance joins the noise term in the
    regularizer, so heavy uncertainty pushes the solution toward plain
    channel matching on the estimate.
    """
    if error_covariance_total < 0:
        raise ValueError("error covariance must be nonnegative")
    h = _chan_vec(estimate)
    lk = (None if estimated_leakage_matrix is None
          else np.asarray(estimated_leakage_matrix))
    w = _regularized_match(h, lk, error_covariance_total + noise_over_power)
    return Beamformer.from_direction(w, estimate.m)


def slnr_value(precoder, desired, leakage_matrix, p_watts: float,
               noise_watts: float, m: int) -> float:
    """Leakage ratio |h^H f|^2 P / (||L^H f||^2 P + m sigma^2)."""
    f = _chan_vec(precoder)
    h = _chan_vec(desired)
    num = abs(np.vdot(h, f)) ** 2 * p_watts
    den = m * noise_watts
    if leakage_matrix is not None:
        lk = np.asarray(leakage_matrix)
        if lk.shape[1]:
            den += float(np.linalg.norm(lk.conj().T @ f) ** 2) * p_watts
    return num / den


ARGMAX_TIE_REL = 1e-12  # objectives this close to the max count as tied


def _earliest_argmax(values) -> int:
    """Index of the first value within rounding slack of the maximum."""
    values = np.asarray(values)
    top = values.max()
    return int(np.argmax(values >= top - ARGMAX_TIE_REL * abs(top)))


def optimize_tau(channels_at, m: int, r_max: int, noise_over_power: float,
                 sample_period_s: float):
    """Grid-search the repetition interval maximizing the reduced leakage
    ratio.

    ``channels_at(r)`` returns ``(desired, leakage_matrix)`` built at
    interval ``r * sample_period_s``.  Ties (within rounding slack)
    break toward the smallest multiplier, i.e. the shortest latency.
    Returns ``(tau_s, r)``.
    """
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    values = []
    for r in range(1, r_max + 1):
        desired, leakage = channels_at(r)
        values.append(slnr_reduced(desired, leakage, noise_over_power))
    best_r = _earliest_argmax(values) + 1
    return best_r * sample_period_s, best_r


# ---------------------------------------------------------------------------
# full space-time leakage-ratio design
# ---------------------------------------------------------------------------

@dataclass
class SatelliteCsit:
    """One transmitter's local view of its K outgoing links.

    ``spatial[:, u]`` is the spatial channel toward user ``u`` and
    ``doppler_hz[u]`` the link Doppler.  For imperfect CSI,
    ``errors[q, :, u]`` holds the slot-q estimation-error block of link
    ``u`` (the estimate subtracts it from the true stacked channel) and
    ``error_var_sum`` the per-entry error variances summed over links.
    """

    spatial: np.ndarray
    doppler_hz: np.ndarray
    serves: int
    errors: np.ndarray | None = None
    error_var_sum: float = 0.0

    def __post_init__(self):
        self.spatial = np.asarray(self.spatial, dtype=np.complex128)
        self.doppler_hz = np.asarray(self.doppler_hz, dtype=np.float64)

    @property
    def k_users(self) -> int:
        return self.spatial.shape[1]

    def channel_to(self, user: int, m: int, tau_s: float) -> np.ndarray:
        """Stacked channel this transmitter presents to ``user`` (its own
        estimate when error blocks are present)."""
        b = temporal_steering(self.doppler_hz[user], tau_s, m)
        vec = np.kron(b, self.spatial[:, user])
        if self.errors is not None:
            vec = vec - self.errors[:m, :, user].reshape(-1)
        return vec


@dataclass(frozen=True)
class StSlnrConfig:
    """Search bounds and link budget for the space-time design."""

    sample_period_s: float
    power_w: float
    noise_w: float
    r_max: int = 500
    m_max: int = 8
    fixed_m: int | None = None


@dataclass
class StSlnrSolution:
    """Chosen repetition count, per-transmitter intervals and precoders."""

    chosen_m: int
    per_satellite_tau: list[float]
    per_satellite_r: list[int]
    per_satellite_precoder: list[Beamformer]
    achieved_sum_se: float
    history: list[tuple[int, float]] = field(default_factory=list)


def _imperfect_gram_stack(sat: SatelliteCsit, m: int, cfg: StSlnrConfig):
    """Gram stack of estimated channels over the interval grid.

    With hat(h)_u = b_u (x) s_u - e_u the Gram splits into the factorized
    part, two Doppler-weighted error cross terms and a constant
    error-error Gram; all are small einsums over (grid, K, K).
    """
    spatial_gram = sat.spatial.conj().T @ sat.spatial
    base = kernels.temporal_gram_stack(sat.doppler_hz, m,
                                       cfg.sample_period_s, cfg.r_max)
    base = base * spatial_gram[None, :, :]
    err = sat.errors[:m]                                   # (m, N, K)
    u_blocks = np.einsum("na,qnb->qab", sat.spatial.conj(), err)
    r = np.arange(1, cfg.r_max + 1)
    q = np.arange(m)
    phase = np.exp(-2j * np.pi
                   * np.einsum("r,q,a->rqa", r * cfg.sample_period_s, q,
                               sat.doppler_hz))
    cross = np.einsum("rqa,qab->rab", phase.conj(), u_blocks)
    err_gram = np.einsum("qna,qnb->ab", err.conj(), err)
    return base - cross - cross.conj().transpose(0, 2, 1) + err_gram[None]


def _design_satellite(sat: SatelliteCsit, m: int, cfg: StSlnrConfig):
    """Pick the interval and precoder for one transmitter at fixed m."""
    rho = cfg.noise_w / cfg.power_w + sat.error_var_sum
    if m == 1:
        r_bar = 1          # single slot: the objective cannot depend on tau
    elif sat.errors is None:
        spatial_gram = sat.spatial.conj().T @ sat.spatial
        vals = kernels.slnr_objective_grid(spatial_gram, sat.doppler_hz,
                                           sat.serves, m,
                                           cfg.sample_period_s, cfg.r_max,
                                           rho)
        r_bar = _earliest_argmax(vals) + 1
    else:
        gram = _imperfect_gram_stack(sat, m, cfg)
        vals = kernels.slnr_grid_from_gram(gram, sat.serves, rho)
        r_bar = _earliest_argmax(vals) + 1
    tau = r_bar * cfg.sample_period_s
    cols = np.column_stack([sat.channel_to(u, m, tau)
                            for u in range(sat.k_users)])
    leakage = np.delete(cols, sat.serves, axis=1)
    w = _regularized_match(cols[:, sat.serves], leakage, rho)
    return tau, r_bar, Beamformer.from_direction(w, m)


def _evaluate_m(csit: list[SatelliteCsit], m: int, cfg: StSlnrConfig):
    """Design all transmitters at fixed m and score the network sum SE."""
    k = len(csit)
    taus, rs, precoders = [], [], []
    for sat in csit:
        tau, r_bar, f = _design_satellite(sat, m, cfg)
        taus.append(tau)
        rs.append(r_bar)
        precoders.append(f)
    channels = np.empty((k, k, m * csit[0].spatial.shape[0]),
                        dtype=np.complex128)
    for tx in range(k):
        for user in range(k):
            channels[user, tx] = csit[tx].channel_to(user, m, taus[tx])
    power = metrics.PowerConfig(cfg.power_w, cfg.noise_w)
    sinrs = [metrics.sinr(u, channels, precoders, power, m)
             for u in range(k)]
    sum_se = sum(metrics.spectral_efficiency(s, m) for s in sinrs)
    return StSlnrSolution(m, taus, rs, precoders, sum_se)


def st_slnr_algorithm(per_satellite_csit: list[SatelliteCsit],
                      config: StSlnrConfig) -> StSlnrSolution:
    """Space-time leakage-ratio design over precoders, intervals and m.

    Starting from the single-slot solution, the repetition count grows
    while the (CSIT-side) sum spectral efficiency keeps improving; the
    first decrease stops the search and the best evaluated point wins.
    With a fixed_m configured the search collapses to that single point.
    """
    if not per_satellite_csit:
        raise ValueError("need at least one transmitter")
    if config.fixed_m is not None:
        sol = _evaluate_m(per_satellite_csit, config.fixed_m, config)
        sol.history = [(config.fixed_m, sol.achieved_sum_se)]
        return sol
    history = []
    best = None
    prev_se = -np.inf
    for m in range(1, config.m_max + 1):
        sol = _evaluate_m(per_satellite_csit, m, config)
        history.append((m, sol.achieved_sum_se))
        if best is None or sol.achieved_sum_se > best.achieved_sum_se:
            best = sol
        if sol.achieved_sum_se < prev_se:
            break
        prev_se = sol.achieved_sum_se
    best.history = history
    return best
