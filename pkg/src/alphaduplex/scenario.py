"""Seedable network realizations: layout, user drops, pathloss, fading.

A realization is one Monte-Carlo drop: fixed base-station positions, one
uniformly placed user per cell, and the three N x N link power-gain matrices
the SINR expressions consume.  Everything is a pure function of
(params, seed) so drops can be farmed out to worker processes and still
aggregate deterministically.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidParameterError

logger = logging.getLogger(__name__)


class FadingModel(enum.Enum):
    NONE = "none"
    RAYLEIGH_UNIT_MEAN = "rayleigh_unit_mean"


@dataclass(frozen=True)
class SystemParams:
    """Physical and budget parameters shared by every module.

    Power defaults follow a 9-cell macro deployment: 40 W per BS pooled into
    one network-wide budget, 1 W floor per BS, users capped at 1 W.  Noise is
    thermal (-174 dBm/Hz) plus a 9 dB receiver noise figure.
    """

    N: int = 9
    isd: float = 500.0                  # meters between neighboring BSs
    B: float = 20e6                     # Hz per HD direction
    fc: float = 2.0                     # carrier, GHz
    noise_density_N0: float = 10 ** ((-174.0 + 9.0) / 10.0 - 3.0)   # W/Hz
    p_u_max: float = 1.0                # W per user
    p_b_min: float = 1.0                # W floor per BS
    p_b_tot: float = 360.0              # W network-wide BS budget
    alpha_min: float = 0.275
    fading: FadingModel = FadingModel.RAYLEIGH_UNIT_MEAN
    d_min: float = 10.0                 # meters, user-to-own-BS exclusion
    noise_density_user: float | None = None   # user-side N0; None means same as BS

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N}")
        if not (self.N * self.p_u_max > 0 and self.p_b_tot > 0):
            raise InvalidParameterError("total uplink and downlink budgets must be positive")
        if not 0.0 <= self.alpha_min <= 1.0:
            raise InvalidParameterError(f"alpha_min must lie in [0, 1], got {self.alpha_min}")
        if not self.B > 0:
            raise InvalidParameterError(f"B must be positive, got {self.B}")
        if not 0 <= self.d_min < self.isd / 2:
            raise InvalidParameterError("d_min must lie in [0, isd/2)")

    @property
    def n0_bs(self) -> float:
        return self.noise_density_N0

    @property
    def n0_user(self) -> float:
        return self.noise_density_N0 if self.noise_density_user is None else self.noise_density_user


@dataclass(frozen=True)
class NetworkRealization:
    """One drop: positions, distance matrices, and composite power gains.

    Matrices are indexed [source cell j, destination cell i]:
    r_bu[j, i] is the BS-j to user-i distance, r_bb BS to BS, r_uu user to
    user.  Gains are fading times pathloss, g = h * l(r).  The generating
    SystemParams travel with the realization because the SINR expressions
    need B and N0 alongside the gains.
    """

    bs_positions: np.ndarray
    user_positions: np.ndarray
    r_bu: np.ndarray
    r_bb: np.ndarray
    r_uu: np.ndarray
    g_bu: np.ndarray
    g_bb: np.ndarray
    g_uu: np.ndarray
    seed: int
    params: SystemParams = field(repr=False, default=None)


def generate_topology(params: SystemParams, seed=None, layout: str = "auto") -> np.ndarray:
    """BS positions with nearest-neighbor spacing equal to isd.

    Square grid when N is a perfect square, a line otherwise; ``layout``
    forces one of "grid"/"line".  The seed argument is accepted for
    signature symmetry with the random stages but layouts are deterministic.
    """
    n = params.N
    k = int(round(np.sqrt(n)))
    if layout == "auto":
        layout = "grid" if k * k == n else "line"
    if layout == "grid":
        if k * k != n:
            raise ConfigurationError(f"grid layout requires a square cell count, got N={n}")
        xs, ys = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
        pos = np.column_stack([xs.ravel(), ys.ravel()]).astype(float) * params.isd
    elif layout == "line":
        pos = np.column_stack([np.arange(n, dtype=float), np.zeros(n)]) * params.isd
    else:
        raise ConfigurationError(f"unknown layout {layout!r}")
    # Center on the origin so single-cell layouts sit at (0, 0).
    return pos - pos.mean(axis=0)


def drop_users(bs_positions: np.ndarray, params: SystemParams, seed) -> np.ndarray:
    """One user per cell, uniform on the annulus d_min <= r <= isd/2.

    Radii come from the inverse CDF of the uniform-area distribution, so
    the sampler is exact and needs no rejection loop.
    """
    rng = np.random.default_rng(seed)
    n = len(bs_positions)
    r_outer = params.isd / 2.0
    u = rng.uniform(size=n)
    radii = np.sqrt(params.d_min**2 + u * (r_outer**2 - params.d_min**2))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    offsets = np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
    return bs_positions + offsets


def pathloss_gain(d, fc: float = 2.0, _warn: bool = True):
    """Linear power gain 10^(-L/10) with L = 22 log10(d) + 28 + 20 log10(fc) dB.

    ``d`` in meters (scalar or array), ``fc`` in GHz.  The loss formula is
    not meaningful below about a meter, so distances under 1 m are clamped
    to 1 m with a logged warning.
    """
    if not fc > 0:
        raise InvalidParameterError(f"fc must be positive, got {fc}")
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 1.0):
        if _warn:
            logger.warning(
                "pathloss distance below 1 m clamped to 1 m (min was %.3g m)",
                float(arr.min()),
            )
        arr = np.maximum(arr, 1.0)
    loss_db = 22.0 * np.log10(arr) + 28.0 + 20.0 * np.log10(fc)
    gain = 10.0 ** (-loss_db / 10.0)
    if np.ndim(d) == 0:
        return float(gain)
    return gain


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """dist[j, i] = ||a[j] - b[i]||."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def realize_channels(
    topology: np.ndarray,
    users: np.ndarray,
    params: SystemParams,
    seed,
) -> NetworkRealization:
    """Distance matrices plus composite gains g[j, i] = h[j, i] * l(r[j, i]).

    Fading draws are i.i.d. per link in a fixed order (bb, uu, bu) so the
    same seed reproduces the realization bit for bit.  The bb/uu diagonals
    have zero distance; their gains are evaluated at the 1 m clamp without
    the clamp warning (the SINR sums exclude j = i, so the values are
    structural placeholders kept positive for uniformity).
    """
    rng = np.random.default_rng(seed)
    n = len(topology)
    r_bb = _pairwise(topology, topology)
    r_uu = _pairwise(users, users)
    r_bu = _pairwise(topology, users)

    if params.fading is FadingModel.RAYLEIGH_UNIT_MEAN:
        h_bb = rng.exponential(1.0, size=(n, n))
        h_uu = rng.exponential(1.0, size=(n, n))
        h_bu = rng.exponential(1.0, size=(n, n))
    else:
        h_bb = np.ones((n, n))
        h_uu = np.ones((n, n))
        h_bu = np.ones((n, n))

    def gains(r, h, structural_diag):
        clamped = np.maximum(r, 1.0)
        below = r < 1.0
        if structural_diag:
            below = below & ~np.eye(n, dtype=bool)
        if np.any(below):
            logger.warning(
                "link distance below 1 m clamped to 1 m (%d links)", int(below.sum())
            )
        return h * pathloss_gain(clamped, params.fc, _warn=False)

    g_bb = gains(r_bb, h_bb, structural_diag=True)
    g_uu = gains(r_uu, h_uu, structural_diag=True)
    g_bu = gains(r_bu, h_bu, structural_diag=False)

    seed_int = int(seed) if np.ndim(seed) == 0 and isinstance(seed, (int, np.integer)) else -1
    return NetworkRealization(
        bs_positions=topology,
        user_positions=users,
        r_bu=r_bu,
        r_bb=r_bb,
        r_uu=r_uu,
        g_bu=g_bu,
        g_bb=g_bb,
        g_uu=g_uu,
        seed=seed_int,
        params=params,
    )


def realize(params: SystemParams, seed: int, layout: str = "auto") -> NetworkRealization:
    """Topology + user drop + channels in one call, all derived from one seed."""
    ss = np.random.SeedSequence(seed)
    drop_ss, fading_ss = ss.spawn(2)
    topology = generate_topology(params, layout=layout)
    users = drop_users(topology, params, drop_ss)
    net = realize_channels(topology, users, params, fading_ss)
    object.__setattr__(net, "seed", int(seed))
    return net
