"""Pulse spectra and cross-mode interference factors.

The uplink occupies a sinc^2-shaped spectrum and the downlink a sinc-shaped
spectrum, both widened from the half-duplex bandwidth B to (1+alpha)*B so the
two directions overlap by 2*alpha*B.  A receiver tuned to one direction picks
up the other direction's transmissions through the matched-filter inner
product between its own pulse and the interferer's pulse shifted by
(1-alpha)*B.  Those inner products, C_u(alpha) for the uplink receiver and
C_b(alpha) for the downlink receiver, are computed here by adaptive
quadrature and cached behind a polynomial approximation for use inside the
optimizer, which needs them (and their derivatives) at every iterate.

All integrals are evaluated in the normalized variable u = 2f/((1+alpha)B),
which removes the bandwidth from the problem entirely: the factors depend on
alpha only.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (
    DegreeInsufficientError,
    InvalidParameterError,
    QuadratureError,
)

# The polynomial cache is fitted on [alpha_min, 1] but is accepted slightly
# below alpha_min so that finite-difference probes around an iterate pinned
# near the lower bound stay on the smooth branch.
POLY_MARGIN = 1e-3

# sqrt(6)/2, the product of the two unit-normalization constants once the
# bandwidth is scaled out: sinc^2 normalizes by sqrt(W/3), sinc by sqrt(W/2).
_PREFACTOR = np.sqrt(6.0) / 2.0

DEFAULT_QUAD_TOL = 1e-10
DEFAULT_POLY_DEGREE = 8
DEFAULT_ALPHA_MIN = 0.275

# Canonical evaluation grid: 64 uniform points on [0, 1] plus the exact
# alpha_min node, so the benchmark operating points alpha = 0, alpha_min, 1
# all hit grid nodes and the polynomial fit starts exactly at alpha_min.
DEFAULT_ALPHA_GRID = np.unique(
    np.concatenate([np.linspace(0.0, 1.0, 64), [DEFAULT_ALPHA_MIN]])
)


class PulseKind(enum.Enum):
    UPLINK_SINC2 = "uplink_sinc2"
    DOWNLINK_SINC = "downlink_sinc"


@dataclass(frozen=True)
class PulseSpec:
    """One direction's transmit pulse: shape kind, overlap fraction, HD bandwidth."""

    kind: PulseKind
    alpha: float
    bandwidth_B: float

    def __post_init__(self):
        if not self.bandwidth_B > 0:
            raise InvalidParameterError(
                f"bandwidth_B must be positive, got {self.bandwidth_B}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def width(self) -> float:
        """Occupied bandwidth (1+alpha)*B."""
        return (1.0 + self.alpha) * self.bandwidth_B


def _norm_constant(spec: PulseSpec, normalization: str) -> float:
    """Unit-energy denominator sqrt(integral of the squared unnormalized pulse).

    Closed form: integral sinc^4 = 2/3 and integral sinc^2 = 1 over the
    normalized argument, so the squared norms are W/3 and W/2 with
    W = (1+alpha)*B.  The quadrature path integrates the same expression in
    the normalized variable and rescales, serving as an independent check.
    """
    w = spec.width
    if normalization == "closed":
        return np.sqrt(w / 3.0) if spec.kind is PulseKind.UPLINK_SINC2 else np.sqrt(w / 2.0)
    if normalization == "quadrature":
        # The squared pulses decay slowly (1/u^2 for sinc^2), so integrate up
        # to an integer cutoff and add the tail analytically: with K integer,
        # integral_{|u|>K} sinc^2 = 1/(pi^2 K) + O(1/K^3) (the oscillatory
        # remainder vanishes at integer K), and the sinc^4 tail is O(1/K^3).
        K = 500
        u = np.linspace(-K, K, 400001)
        h = u[1] - u[0]
        weights = np.ones_like(u)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        if spec.kind is PulseKind.UPLINK_SINC2:
            val = h / 3.0 * np.dot(weights, np.sinc(u) ** 4)
            val += 1.0 / (4.0 * np.pi ** 4 * K ** 3)
        else:
            val = h / 3.0 * np.dot(weights, np.sinc(u) ** 2)
            val += 1.0 / (np.pi ** 2 * K)
        return np.sqrt(w / 2.0 * val)
    raise InvalidParameterError(f"unknown normalization {normalization!r}")


def pulse_amplitude(spec: PulseSpec, f, normalization: str = "closed"):
    """Amplitude spectrum S_u(f) or S_d(f) in 1/sqrt(Hz).

    ``f`` may be a scalar or array.  ``normalization`` selects how the
    unit-energy denominator is computed ("closed" or "quadrature"); both
    agree within 1e-6 relative.
    """
    u = 2.0 * np.asarray(f, dtype=float) / spec.width
    norm = _norm_constant(spec, normalization)
    if spec.kind is PulseKind.UPLINK_SINC2:
        return np.sinc(u) ** 2 / norm
    return np.sinc(u) / norm


def _cross_integral(alpha: float, B: float, tol: float, which: str) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"alpha must lie in [0, 1], got {alpha}")
    if not B > 0:
        raise InvalidParameterError(f"B must be positive, got {B}")
    if not tol > 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    # Normalized shift between band centers: (1-alpha)*B maps to
    # 2(1-alpha)/(1+alpha) in units of half the widened bandwidth.
    delta = 2.0 * (1.0 - alpha) / (1.0 + alpha)
    if which == "u":
        integrand = lambda u: np.sinc(u) ** 2 * np.sinc(u - delta)
    else:
        integrand = lambda u: np.sinc(u) * np.sinc(u - delta) ** 2
    val, err = quad(
        integrand, -1.0, 1.0, epsabs=tol / _PREFACTOR, epsrel=0.0, limit=400
    )
    achieved = _PREFACTOR * err
    if achieved > tol:
        raise QuadratureError(
            f"cross-factor quadrature reached {achieved:.3e}, requested {tol:.3e}",
            achieved=achieved,
            requested=tol,
        )
    return float(_PREFACTOR * val)


def cross_factor_uplink(alpha: float, B: float = 1.0, tol: float = DEFAULT_QUAD_TOL) -> float:
    """Leakage amplitude C_u(alpha) seen by an uplink (sinc^2) receiver.

    Matched-filter inner product of the receiver's own pulse with the
    downlink pulse shifted by (1-alpha)*B, integrated over the receiver's
    filter window of width (1+alpha)*B.  Independent of B.
    """
    return _cross_integral(alpha, B, tol, "u")


def cross_factor_downlink(alpha: float, B: float = 1.0, tol: float = DEFAULT_QUAD_TOL) -> float:
    """Leakage amplitude C_b(alpha) seen by a downlink (sinc) receiver."""
    return _cross_integral(alpha, B, tol, "b")


@dataclass(frozen=True)
class PulseOverlapProfile:
    """Cached cross-mode interference factors over a grid of alpha values.

    Amplitudes on [alpha_min, 1] are served by least-squares polynomials
    (cheap and differentiable, as the optimizer requires); below alpha_min
    only exact grid nodes are served, from the quadrature cache.  SINR code
    consumes the squared magnitudes.
    """

    alpha_grid: np.ndarray
    cu_values: np.ndarray
    cb_values: np.ndarray
    cu_poly: np.polynomial.Polynomial
    cb_poly: np.polynomial.Polynomial
    alpha_min: float
    quadrature_tol: float
    cu_poly_deriv: np.polynomial.Polynomial = field(init=False, repr=False)
    cb_poly_deriv: np.polynomial.Polynomial = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cu_poly_deriv", self.cu_poly.deriv())
        object.__setattr__(self, "cb_poly_deriv", self.cb_poly.deriv())

    def _amplitude(self, alpha, values: np.ndarray, poly):
        arr = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.asarray(poly(arr), dtype=float)
        below = arr < self.alpha_min - POLY_MARGIN
        if np.any(below):
            # Below the fitted range only exact grid nodes are cacheable;
            # anything else must go back through quadrature explicitly.
            idx = np.searchsorted(self.alpha_grid, arr[below])
            idx = np.clip(idx, 0, len(self.alpha_grid) - 1)
            if not np.allclose(self.alpha_grid[idx], arr[below], rtol=0, atol=1e-12):
                raise InvalidParameterError(
                    "amplitude below alpha_min is only cached at grid nodes; "
                    "use cross_factor_uplink/downlink for other values"
                )
            out[below] = values[idx]
        if np.ndim(alpha) == 0:
            return float(out[0])
        return out

    def amplitude_uplink(self, alpha):
        return self._amplitude(alpha, self.cu_values, self.cu_poly)

    def amplitude_downlink(self, alpha):
        return self._amplitude(alpha, self.cb_values, self.cb_poly)

    def leakage_sq_uplink(self, alpha):
        """|C_u(alpha)|^2, the factor multiplying BS-to-BS interference power."""
        a = self.amplitude_uplink(alpha)
        return a * a

    def leakage_sq_downlink(self, alpha):
        """|C_b(alpha)|^2, the factor multiplying user-to-user interference power."""
        a = self.amplitude_downlink(alpha)
        return a * a

    def leakage_sq_uplink_deriv(self, alpha):
        """d|C_u|^2/dalpha on the polynomial branch [alpha_min, 1]."""
        alpha = np.asarray(alpha, dtype=float)
        if np.any(alpha < self.alpha_min - POLY_MARGIN):
            raise InvalidParameterError(
                "leakage derivative is defined on the fitted range only"
            )
        return 2.0 * self.cu_poly(alpha) * self.cu_poly_deriv(alpha)

    def leakage_sq_downlink_deriv(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if np.any(alpha < self.alpha_min - POLY_MARGIN):
            raise InvalidParameterError(
                "leakage derivative is defined on the fitted range only"
            )
        return 2.0 * self.cb_poly(alpha) * self.cb_poly_deriv(alpha)

    def to_csv(self, path_or_file) -> None:
        """Dump (alpha, C_u, C_b, |C_u|^2, |C_b|^2) at full precision."""
        rows = ["alpha,C_u,C_b,Cu_sq,Cb_sq"]
        for a, cu, cb in zip(self.alpha_grid, self.cu_values, self.cb_values):
            a, cu, cb = float(a), float(cu), float(cb)
            rows.append(
                f"{a!r},{cu!r},{cb!r},{cu * cu!r},{cb * cb!r}"
            )
        text = "\n".join(rows) + "\n"
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            path_or_file.write(text)


def build_profile(
    alpha_grid,
    B: float = 1.0,
    tol: float = DEFAULT_QUAD_TOL,
    poly_degree: int = DEFAULT_POLY_DEGREE,
    alpha_min: float = DEFAULT_ALPHA_MIN,
) -> PulseOverlapProfile:
    """Evaluate both cross factors on the grid and fit the polynomial cache.

    The grid must cover [0, 1] with at least 30 ascending points, so the
    profile can serve the pinned half-duplex (alpha=0) and full-duplex
    (alpha=1) operating points as well as the optimizer's working range.
    """
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 30:
        raise InvalidParameterError("alpha_grid must be a 1-D grid with >= 30 points")
    if np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("alpha_grid must be strictly ascending")
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - 1.0) > 1e-12:
        raise InvalidParameterError("alpha_grid must cover [0, 1] endpoint to endpoint")
    if not isinstance(poly_degree, (int, np.integer)) or poly_degree < 4:
        raise InvalidParameterError(f"poly_degree must be an integer >= 4, got {poly_degree}")
    if not 0.0 <= alpha_min < 1.0:
        raise InvalidParameterError(f"alpha_min must lie in [0, 1), got {alpha_min}")

    cu = np.array([cross_factor_uplink(a, B, tol) for a in grid])
    cb = np.array([cross_factor_downlink(a, B, tol) for a in grid])

    sel = grid >= alpha_min - 1e-12
    if np.count_nonzero(sel) <= poly_degree:
        raise InvalidParameterError(
            "not enough grid points in [alpha_min, 1] for the requested degree"
        )
    cu_poly = np.polynomial.Polynomial.fit(grid[sel], cu[sel], poly_degree)
    cb_poly = np.polynomial.Polynomial.fit(grid[sel], cb[sel], poly_degree)

    residual = max(
        np.max(np.abs(cu_poly(grid[sel]) - cu[sel])),
        np.max(np.abs(cb_poly(grid[sel]) - cb[sel])),
    )
    if residual > 1e-4:
        raise DegreeInsufficientError(
            f"degree-{poly_degree} fit residual {residual:.3e} exceeds 1e-4",
            residual=float(residual),
        )

    return PulseOverlapProfile(
        alpha_grid=grid,
        cu_values=cu,
        cb_values=cb,
        cu_poly=cu_poly,
        cb_poly=cb_poly,
        alpha_min=float(alpha_min),
        quadrature_tol=float(tol),
    )


def default_profile(
    tol: float = DEFAULT_QUAD_TOL, poly_degree: int = DEFAULT_POLY_DEGREE
) -> PulseOverlapProfile:
    """Profile on the canonical grid with library defaults."""
    return build_profile(DEFAULT_ALPHA_GRID, tol=tol, poly_degree=poly_degree)


def factors_table(n_points: int = 1001, tol: float = DEFAULT_QUAD_TOL) -> str:
    """CSV text of both factors on a uniform alpha grid (plotting helper)."""
    if n_points < 2:
        raise InvalidParameterError("n_points must be >= 2")
    grid = np.linspace(0.0, 1.0, n_points)
    buf = io.StringIO()
    buf.write("alpha,C_u,C_b,Cu_sq,Cb_sq\n")
    for a in grid:
        a = float(a)
        cu = float(cross_factor_uplink(a, tol=tol))
        cb = float(cross_factor_downlink(a, tol=tol))
        buf.write(f"{a!r},{cu!r},{cb!r},{cu * cu!r},{cb * cb!r}\n")
    return buf.getvalue()
