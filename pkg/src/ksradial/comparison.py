"""Pointwise mass barriers and the half-line heat comparison argument.

Two complementary a-priori checks on cumulative mass profiles:

* a static two-branch barrier ``b(r) = min(K r^{d - d/p}, 2 eps sigma_d
  r^{d-2})``, whose outer branch lies strictly below the global-existence
  threshold and whose inner branch encodes an integrability condition
  (``d/2 < p < d``); data dominated by such a barrier stay bounded;

* a dynamic bound by the Dirichlet heat semigroup on the half line: if
  ``M(r, t0) <= m0(r)`` and the concentration stays below ``(d-1) sigma_d``,
  the mass remains dominated by the (d-independent) heat evolution of
  ``m0`` with ``m(0, t) = 0``.

``half_line_heat`` evaluates that evolution *exactly* for piecewise-linear
initial data via the image method: each segment contributes closed-form
erf/exp terms, so there is no quadrature error to confuse with a genuine
comparison failure.  Beyond the last node the datum continues as a constant
(or as zero with ``tail="zero"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .core import MassProfile, ModelParams, radial_concentration

__all__ = [
    "Barrier",
    "barrier_value",
    "barrier_check",
    "BarrierVerdict",
    "half_line_heat",
    "ComparisonReport",
    "comparison_check",
    "decay_slope",
]


@dataclass(frozen=True)
class Barrier:
    """Two-branch pointwise mass barrier.

    Parameters
    ----------
    params : ModelParams
        Sets the dimension and ``sigma_d``.
    p : float
        Integrability exponent of the inner branch, ``d/2 < p < d``.
    eps : float
        Outer-branch level in units of ``2 sigma_d``; ``0 < eps < d/(2p)``
        so the branches actually cross.
    K : float
        Inner-branch amplitude, ``K > 0``.
    """

    params: ModelParams
    p: float
    eps: float
    K: float
    r_star: float = field(init=False)

    def __post_init__(self) -> None:
        d = self.params.d
        if not d / 2 < self.p < d:
            raise ValueError(f"need d/2 < p < d, got p={self.p} for d={d}")
        if not 0.0 < self.eps < d / (2 * self.p):
            raise ValueError(
                f"need 0 < eps < d/(2p) = {d / (2 * self.p):.6g}, got eps={self.eps}"
            )
        if self.K <= 0.0:
            raise ValueError("K must be > 0")
        # branch crossing: K r^{d-d/p} = 2 eps sigma_d r^{d-2}
        expo = (d - 2.0) - (d - d / self.p)
        r_star = (self.K / (2 * self.eps * self.params.sigma_d)) ** (1.0 / expo)
        object.__setattr__(self, "r_star", float(r_star))


def barrier_value(b: Barrier, r) -> np.ndarray | float:
    """Evaluate ``min(K r^{d-d/p}, 2 eps sigma_d r^{d-2})`` at radii ``r``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        raise ValueError("radii must be >= 0")
    d = b.params.d
    inner = b.K * r_arr ** (d - d / b.p)
    outer = 2.0 * b.eps * b.params.sigma_d * r_arr ** (d - 2)
    out = np.minimum(inner, outer)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BarrierVerdict:
    """Outcome of a pointwise barrier comparison; truthy iff dominated."""

    dominated: bool
    worst_ratio: float  # max of M / b over checked nodes
    first_violation_r: float | None

    def __bool__(self) -> bool:
        return self.dominated


def barrier_check(profile: MassProfile, b: Barrier) -> BarrierVerdict:
    """Check ``M(r) < b(r)`` at every positive grid node.

    The origin node is skipped (both sides vanish there).  Equality counts
    as a violation: the comparison argument needs strict domination.
    """
    if profile.params.d != b.params.d:
        raise ValueError("profile and barrier dimensions differ")
    r = profile.grid.nodes[1:]
    bv = barrier_value(b, r)
    ratios = profile.values[1:] / bv
    worst = float(ratios.max())
    if worst < 1.0:
        return BarrierVerdict(True, worst, None)
    idx = int(np.argmax(profile.values[1:] >= bv))
    return BarrierVerdict(False, worst, float(r[idx]))


def _as_nodes(m0) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(m0, MassProfile):
        return np.asarray(m0.grid.nodes, float), np.asarray(m0.values, float)
    x, y = m0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise ValueError("initial datum must be two equal-length 1-d arrays")
    if x[0] != 0.0 or np.any(np.diff(x) <= 0.0):
        raise ValueError("abscissae must start at 0 and increase strictly")
    return x, y


def _segment_integrals(c: np.ndarray, x: np.ndarray, alpha: np.ndarray,
                       beta: np.ndarray, s: float, tail_const: float) -> np.ndarray:
    """``int (alpha_j + beta_j xi) exp(-((xi-c)/s)^2) dxi`` summed over segments.

    Closed form per segment ``[x_j, x_{j+1}]`` with ``E = erf((x-c)/s)`` and
    ``G = exp(-((x-c)/s)^2)``::

        (sqrt(pi) s / 2) (alpha + beta c) (E_{j+1} - E_j)
        - (beta s^2 / 2) (G_{j+1} - G_j),

    plus a constant tail ``tail_const`` on ``[x_N, inf)``.
    """
    xi = (x[None, :] - c[:, None]) / s
    E = erf(xi)
    G = np.exp(-np.square(xi))
    dE = E[:, 1:] - E[:, :-1]
    dG = G[:, 1:] - G[:, :-1]
    half_sqrt_pi_s = 0.5 * math.sqrt(math.pi) * s
    total = half_sqrt_pi_s * ((alpha[None, :] + beta[None, :] * c[:, None]) * dE).sum(axis=1)
    total -= 0.5 * s * s * (beta[None, :] * dG).sum(axis=1)
    if tail_const != 0.0:
        total += half_sqrt_pi_s * tail_const * (1.0 - E[:, -1])
    return total


def half_line_heat(m0, r, t: float, tail: str = "constant") -> np.ndarray | float:
    """Dirichlet heat evolution on the half line of a piecewise-linear datum.

    Image method: ``m(r, t) = (4 pi t)^{-1/2} int_0^inf (e^{-(r-x)^2/4t} -
    e^{-(r+x)^2/4t}) m0(x) dx``, evaluated segment by segment in closed form
    (no quadrature error).  ``m0`` is a :class:`MassProfile` or an ``(x, y)``
    pair of arrays; past the last node it continues with its final value
    (``tail="constant"``) or drops to zero (``tail="zero"``).

    ``t = 0`` returns the datum interpolated at ``r``.
    """
    if tail not in ("constant", "zero"):
        raise ValueError("tail must be 'constant' or 'zero'")
    x, y = _as_nodes(m0)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0.0):
        raise ValueError("evaluation radii must be >= 0")
    if t < 0.0:
        raise ValueError("time must be >= 0")
    if t == 0.0:
        out = np.interp(r_arr, x, y, right=y[-1] if tail == "constant" else 0.0)
        return out if np.ndim(r) else float(out[0])

    s = 2.0 * math.sqrt(t)
    beta = np.diff(y) / np.diff(x)
    alpha = y[:-1] - beta * x[:-1]
    tail_const = float(y[-1]) if tail == "constant" else 0.0
    direct = _segment_integrals(r_arr, x, alpha, beta, s, tail_const)
    image = _segment_integrals(-r_arr, x, alpha, beta, s, tail_const)
    out = (direct - image) / (s * math.sqrt(math.pi))
    return out if np.ndim(r) else float(out[0])


@dataclass(frozen=True)
class ComparisonReport:
    """Snapshot-by-snapshot margins of the heat-domination check."""

    dominated: bool
    applicable: bool  # concentration stayed below (d-1) sigma_d throughout
    concentration_cap: float
    max_concentration: float
    tolerance: float
    times: np.ndarray
    worst_margins: np.ndarray  # max over r of M - m_heat, per snapshot
    first_failure_time: float | None

    def __bool__(self) -> bool:
        return self.dominated and self.applicable


def comparison_check(result, m0, tol_fraction: float = 1e-6) -> ComparisonReport:
    """Check every snapshot of an evolution against the heat supersolution.

    ``result`` is an :class:`~ksradial.pde.EvolutionResult`; ``m0`` is the
    dominating initial datum (profile or ``(x, y)`` pair), evolved for the
    elapsed time ``t_k - t0`` of each snapshot.  The tolerance combines a
    mass-relative slack with the piecewise-linearization error of ``m0``
    (``max |second difference| / 8``).  Domination additionally requires the
    run's concentration history to stay below ``(d-1) sigma_d``, outside of
    which the argument carries no weight (``applicable=False``).
    """
    trajectory = result.trajectory
    if not trajectory:
        raise ValueError("evolution result has no snapshots")
    params: ModelParams = result.params
    x, y = _as_nodes(m0)
    t0 = trajectory[0].time

    total = float(trajectory[0].total_mass)
    curvature = float(np.max(np.abs(np.diff(y, n=2)), initial=0.0)) / 8.0
    tol = tol_fraction * total + curvature

    cap = (params.d - 1) * params.sigma_d
    max_conc = max(radial_concentration(p) for p in trajectory)

    times = np.array([p.time for p in trajectory])
    margins = np.empty(times.size)
    first_fail: float | None = None
    for k, prof in enumerate(trajectory):
        r = prof.grid.nodes
        bound = half_line_heat((x, y), r, prof.time - t0)
        margins[k] = float(np.max(prof.values - bound))
        if margins[k] > tol and first_fail is None:
            first_fail = float(prof.time)

    return ComparisonReport(
        dominated=first_fail is None,
        applicable=bool(max_conc < cap),
        concentration_cap=cap,
        max_concentration=float(max_conc),
        tolerance=tol,
        times=times,
        worst_margins=margins,
        first_failure_time=first_fail,
    )


def decay_slope(series, window) -> float:
    """Log-log least-squares slope of a positive time series.

    ``series`` is an ``(t, values)`` pair.  ``window`` selects the fit range:
    an integer keeps that many trailing samples, a ``(t_lo, t_hi)`` pair
    keeps samples inside the interval.  Needs at least three positive
    samples with positive times.
    """
    t, v = series
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("series must be two equal-length 1-d arrays")
    if isinstance(window, int):
        if window < 3:
            raise ValueError("window must keep at least 3 samples")
        mask = np.zeros(t.size, dtype=bool)
        mask[-window:] = True
    else:
        lo, hi = window
        mask = (t >= lo) & (t <= hi)
    mask &= (t > 0.0) & (v > 0.0)
    if int(mask.sum()) < 3:
        raise ValueError("fewer than 3 usable samples in the fit window")
    slope = np.polyfit(np.log(t[mask]), np.log(v[mask]), 1)[0]
    return float(slope)
