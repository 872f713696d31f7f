"""SINR, rate, and utility evaluation plus analytic first derivatives.

Uplink SINR at BS i (the own user's signal against cross-mode leakage from
other BSs, intra-mode interference from other users, and widened noise):

    gamma_u[i] = p_u[i] g_bu[i,i] / ( sum_{j!=i} p_b[j] g_bb[j,i] |C_u(a_j)|^2
                 + sum_{j!=i} p_u[j] g_bu[j,i] + (1+a_i) B N0 )

Downlink SINR at user i mirrors it with the roles of powers swapped, the
user-to-user gains carrying the cross-mode term, and g_bu gains carrying
both the desired link and the BS-to-BS-direction intra-mode term:

    gamma_b[i] = p_b[i] g_bu[i,i] / ( sum_{j!=i} p_u[j] g_uu[j,i] |C_b(a_j)|^2
                 + sum_{j!=i} p_b[j] g_bu[j,i] + (1+a_i) B N0 )

Rates are R = (1+a_i) B log2(1+gamma), in bits/s.  Utilities are the plain
rate sum or the sum of natural logs of the rates (proportional fairness).
Everything is evaluated in batch over (M, N) power/overlap arrays because
the optimizer's finite-difference Hessian wants gradients at dozens of
nearby points per Newton step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, UtilityDomainError
from .overlap import PulseOverlapProfile
from .scenario import NetworkRealization

LN2 = float(np.log(2.0))


class UtilityKind(enum.Enum):
    SUM_RATE = "sum_rate"
    SUM_LOG_RATE = "sum_log_rate"


class Direction(enum.Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


@dataclass(frozen=True)
class DecisionVector:
    """Optimization variables: per-cell user power, BS power, overlap fraction."""

    p_u: np.ndarray
    p_b: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        for name in ("p_u", "p_b", "alpha"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise InvalidParameterError(f"{name} must be a finite 1-D vector")
        if not len(self.p_u) == len(self.p_b) == len(self.alpha):
            raise InvalidParameterError("p_u, p_b, alpha must have equal length")

    @property
    def n_cells(self) -> int:
        return len(self.p_u)

    def stacked(self) -> np.ndarray:
        """Concatenated [p_u, p_b, alpha], the solver's coordinate layout."""
        return np.concatenate([self.p_u, self.p_b, self.alpha])

    @classmethod
    def from_stacked(cls, arr: np.ndarray, n: int) -> "DecisionVector":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (3 * n,):
            raise InvalidParameterError(f"expected a {3 * n}-vector, got shape {arr.shape}")
        return cls(p_u=arr[:n].copy(), p_b=arr[n : 2 * n].copy(), alpha=arr[2 * n :].copy())


@dataclass(frozen=True)
class LinkMetrics:
    """Per-cell SINRs, rates, and effective noise powers for one decision."""

    gamma_u: np.ndarray
    gamma_b: np.ndarray
    R_u: np.ndarray
    R_b: np.ndarray
    noise_u: np.ndarray
    noise_b: np.ndarray


class LinkEvaluator:
    """Caches the gain matrices of one realization for repeated evaluation.

    All methods take (M, N) batches of p_u, p_b, alpha rows.  The profile's
    polynomial branch covers alpha >= alpha_min; rows carrying pinned
    off-range alphas (0 for half duplex) are served by the profile's exact
    grid cache.
    """

    def __init__(self, net: NetworkRealization, profile: PulseOverlapProfile):
        params = net.params
        if params is None:
            raise InvalidParameterError("realization carries no SystemParams")
        self.net = net
        self.profile = profile
        self.params = params
        n = params.N
        g_bu = np.asarray(net.g_bu, dtype=float)
        g_bb = np.asarray(net.g_bb, dtype=float)
        g_uu = np.asarray(net.g_uu, dtype=float)
        self.G = np.diag(g_bu).copy()
        off = ~np.eye(n, dtype=bool)
        self.Gbu0 = np.where(off, g_bu, 0.0)
        self.Gbb0 = np.where(off, g_bb, 0.0)
        self.Guu0 = np.where(off, g_uu, 0.0)
        self.Gbu0_T = np.ascontiguousarray(self.Gbu0.T)
        self.Gbb0_T = np.ascontiguousarray(self.Gbb0.T)
        self.Guu0_T = np.ascontiguousarray(self.Guu0.T)
        self.B = params.B
        self.n0_bs = params.n0_bs
        self.n0_user = params.n0_user

    def _core(self, pu, pb, al):
        qu = self.profile.leakage_sq_uplink(al)
        qb = self.profile.leakage_sq_downlink(al)
        noise_u = (1.0 + al) * (self.B * self.n0_bs)
        noise_b = (1.0 + al) * (self.B * self.n0_user)
        D_u = (pb * qu) @ self.Gbb0 + pu @ self.Gbu0 + noise_u
        D_b = (pu * qb) @ self.Guu0 + pb @ self.Gbu0 + noise_b
        gamma_u = pu * self.G / D_u
        gamma_b = pb * self.G / D_b
        return qu, qb, noise_u, noise_b, D_u, D_b, gamma_u, gamma_b

    def metrics(self, x: DecisionVector) -> LinkMetrics:
        pu, pb, al = x.p_u[None, :], x.p_b[None, :], x.alpha[None, :]
        _, _, noise_u, noise_b, _, _, gamma_u, gamma_b = self._core(pu, pb, al)
        pref = (1.0 + al) * self.B
        R_u = pref * np.log1p(gamma_u) / LN2
        R_b = pref * np.log1p(gamma_b) / LN2
        return LinkMetrics(
            gamma_u=gamma_u[0],
            gamma_b=gamma_b[0],
            R_u=R_u[0],
            R_b=R_b[0],
            noise_u=noise_u[0],
            noise_b=noise_b[0],
        )

    def utility_batch(self, pu, pb, al, kind: UtilityKind) -> np.ndarray:
        """Utility per batch row; sum-log rows with any nonpositive rate get -inf."""
        _, _, _, _, _, _, gamma_u, gamma_b = self._core(pu, pb, al)
        pref = (1.0 + al) * self.B
        R_u = pref * np.log1p(gamma_u) / LN2
        R_b = pref * np.log1p(gamma_b) / LN2
        if kind is UtilityKind.SUM_RATE:
            return np.sum(R_u + R_b, axis=1)
        bad = (R_u <= 0).any(axis=1) | (R_b <= 0).any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.sum(np.log(np.maximum(R_u, 1e-300)), axis=1) + np.sum(
                np.log(np.maximum(R_b, 1e-300)), axis=1
            )
        vals = np.where(bad, -np.inf, vals)
        return vals

    def gradient_batch(self, pu, pb, al, kind: UtilityKind, include_alpha: bool = True) -> np.ndarray:
        """Analytic utility gradient rows [d/dp_u, d/dp_b, d/dalpha], (M, 3N).

        The alpha derivative threads through the (1+alpha) rate prefactor,
        the widened noise, and the leakage growth d|C|^2/dalpha of the cell's
        own transmissions as seen by every other cell; it therefore requires
        alpha on the polynomial branch.  Problems with alpha pinned off that
        branch pass include_alpha=False and get (M, 2N) power gradients.
        """
        qu, qb, noise_u, noise_b, D_u, D_b, gamma_u, gamma_b = self._core(pu, pb, al)
        pref = (1.0 + al) * self.B
        log_u = np.log1p(gamma_u) / LN2
        log_b = np.log1p(gamma_b) / LN2
        if kind is UtilityKind.SUM_RATE:
            s_u = np.ones_like(gamma_u)
            s_b = s_u
        else:
            R_u = pref * log_u
            R_b = pref * log_b
            if np.any(R_u <= 0) or np.any(R_b <= 0):
                raise UtilityDomainError("sum-log-rate gradient needs strictly positive rates")
            s_u = 1.0 / R_u
            s_b = 1.0 / R_b
        w_u = s_u * pref / (LN2 * (1.0 + gamma_u))
        w_b = s_b * pref / (LN2 * (1.0 + gamma_b))
        e_u = w_u * gamma_u / D_u
        e_b = w_b * gamma_b / D_b
        # Aggregated victim sensitivities to cell k's transmissions.
        bb_u = e_u @ self.Gbb0_T            # BS k's leakage into other uplinks
        uu_b = e_b @ self.Guu0_T            # user k's leakage into other downlinks
        bu_u = e_u @ self.Gbu0_T            # user k's intra-mode uplink harm
        bu_b = e_b @ self.Gbu0_T            # BS k's intra-mode downlink harm
        d_pu = w_u * self.G / D_u - bu_u - qb * uu_b
        d_pb = w_b * self.G / D_b - bu_b - qu * bb_u
        if not include_alpha:
            return np.concatenate([d_pu, d_pb], axis=1)
        qu_d = self.profile.leakage_sq_uplink_deriv(al)
        qb_d = self.profile.leakage_sq_downlink_deriv(al)
        d_al = (
            self.B * (s_u * log_u + s_b * log_b)
            - (self.B * self.n0_bs) * e_u
            - (self.B * self.n0_user) * e_b
            - qu_d * pb * bb_u
            - qb_d * pu * uu_b
        )
        return np.concatenate([d_pu, d_pb, d_al], axis=1)


def link_metrics(x: DecisionVector, net: NetworkRealization, profile: PulseOverlapProfile) -> LinkMetrics:
    return LinkEvaluator(net, profile).metrics(x)


def uplink_sinr(i: int, x: DecisionVector, net: NetworkRealization, profile: PulseOverlapProfile) -> float:
    return float(link_metrics(x, net, profile).gamma_u[i])


def downlink_sinr(i: int, x: DecisionVector, net: NetworkRealization, profile: PulseOverlapProfile) -> float:
    return float(link_metrics(x, net, profile).gamma_b[i])


def link_rate(
    i: int,
    direction: Direction,
    x: DecisionVector,
    net: NetworkRealization,
    profile: PulseOverlapProfile,
) -> float:
    m = link_metrics(x, net, profile)
    rates = m.R_u if direction is Direction.UPLINK else m.R_b
    return float(rates[i])


def utility(
    x: DecisionVector,
    net: NetworkRealization,
    profile: PulseOverlapProfile,
    kind: UtilityKind,
) -> float:
    val = LinkEvaluator(net, profile).utility_batch(
        x.p_u[None, :], x.p_b[None, :], x.alpha[None, :], kind
    )[0]
    if not np.isfinite(val) and kind is UtilityKind.SUM_LOG_RATE:
        raise UtilityDomainError("sum-log-rate utility needs strictly positive rates")
    return float(val)


def utility_gradient(
    x: DecisionVector,
    net: NetworkRealization,
    profile: PulseOverlapProfile,
    kind: UtilityKind,
) -> np.ndarray:
    return LinkEvaluator(net, profile).gradient_batch(
        x.p_u[None, :], x.p_b[None, :], x.alpha[None, :], kind
    )[0]
