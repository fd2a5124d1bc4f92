"""Self-similar solutions by shooting for the profile ODE.

Solutions of the form ``M(r, t) = sigma_d t^{d/2-1} zeta(y)``, ``y = r^2/t``,
reduce the cumulative-mass equation to a second-order profile ODE in ``y``.
Bounded density at the origin forces ``zeta ~ a y^{d/2}`` at small ``y``
(a ball of constant density), and the admissible far field is
``zeta ~ 2 eps y^{d/2-1}``: at large radii the solution freezes into ``eps``
times the singular steady state, so ``eps`` is the scale-critical amplitude
of the whole family.  :func:`shoot_profile` integrates from the origin for a
given leading coefficient ``a``; :func:`extract_epsilon` reads the amplitude
off the far-field plateau.  The same profiles appear in the phase plane as
orbits of a nonautonomous perturbation of the stationary system
(:func:`nonautonomous_field`), terminating at ``(2(d-2) eps, 2 eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import MassProfile, ModelParams, RadialGrid

__all__ = [
    "ProfileSolution",
    "ShotRejectedError",
    "TailNotConvergedError",
    "extract_epsilon",
    "nonautonomous_field",
    "profile_rhs",
    "selfsimilar_to_mass",
    "shoot_for_epsilon",
    "shoot_profile",
]


class ShotRejectedError(RuntimeError):
    """The integrated profile violated an a-priori bound or blew up."""


class TailNotConvergedError(RuntimeError):
    """The far-field plateau is not flat enough to read off the amplitude."""


def _check_dim(d: int) -> int:
    if d != int(d) or int(d) < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {d!r}")
    return int(d)


def profile_rhs(
    d: int, y: float, zeta: float, zeta_prime: float
) -> float:
    """Second derivative of the self-similar profile from the ODE.

    ``zeta'' = -zeta'/4 + (d-2)/(2y) zeta' + (d-2)/(8y) zeta
    - zeta zeta'/(2 y^{d/2})``.  Singular at ``y = 0``; the launch uses the
    series behavior ``zeta ~ a y^{d/2}`` instead.
    """
    d = _check_dim(d)
    if y <= 0.0:
        raise ValueError("the profile equation is singular at y <= 0; use the launch series")
    return (
        -0.25 * zeta_prime
        + 0.5 * (d - 2) / y * zeta_prime
        + 0.125 * (d - 2) / y * zeta
        - 0.5 * zeta * zeta_prime / y ** (0.5 * d)
    )


def growth_bound(d: int, y: float | np.ndarray) -> float | np.ndarray:
    """A-priori pointwise bound ``(1 - 2/d) y^{d/2} + 4(d-1) y^{d/2-1}``.

    Admissible profiles stay below it at every ``y``; the shooting solver
    rejects any shot that touches it.
    """
    d = _check_dim(d)
    y = np.asarray(y, dtype=float)
    out = (1.0 - 2.0 / d) * y ** (0.5 * d) + 4.0 * (d - 1) * y ** (0.5 * d - 1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProfileSolution:
    """One accepted self-similar profile: samples, launch, and amplitude.

    ``epsilon`` is the extracted far-field amplitude (None when the tail was
    not flat enough to read it off).  ``interpolant`` is the integrator's
    dense output over ``[y_launch, y_max]``; below the launch the profile is
    its leading power ``a y^{d/2}``.
    """

    d: int
    a: float
    y: np.ndarray
    zeta: np.ndarray
    zeta_prime: np.ndarray
    epsilon: float | None = None
    interpolant: object | None = None

    def __post_init__(self) -> None:
        if self.y.ndim != 1 or self.y.size < 8:
            raise ValueError("a profile needs a 1-d grid of at least 8 samples")
        if np.any(np.diff(self.y) <= 0.0):
            raise ValueError("profile samples must have strictly increasing y")

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    def __call__(self, y: float | np.ndarray) -> float | np.ndarray:
        """Evaluate ``zeta`` at arbitrary ``y`` in ``[0, y_max]``."""
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        if float(y_arr.min()) < 0.0:
            raise ValueError("the similarity variable is nonnegative")
        if float(y_arr.max()) > self.y_max * (1.0 + 1e-12):
            raise ValueError(
                f"y={float(y_arr.max()):.6g} is beyond the integrated range "
                f"(y_max={self.y_max:.6g})"
            )
        out = np.empty_like(y_arr)
        low = y_arr < self.y[0]
        out[low] = self.a * y_arr[low] ** (0.5 * self.d)
        hi = ~low
        if np.any(hi):
            clamped = np.minimum(y_arr[hi], self.y_max)
            if self.interpolant is not None:
                out[hi] = np.asarray(self.interpolant(clamped))[0]
            else:
                out[hi] = np.interp(clamped, self.y, self.zeta)
        return float(out[0]) if np.isscalar(y) or np.asarray(y).ndim == 0 else out


def shoot_profile(
    d: int,
    a: float,
    y_launch: float = 1e-6,
    y_max: float = 1e4,
    rtol: float = 1e-10,
    samples: int = 2000,
) -> ProfileSolution:
    """Integrate the profile ODE from the origin for leading coefficient ``a``.

    Launches at ``y_launch`` on the series ``zeta = a y^{d/2}``,
    ``zeta' = (d/2) a y^{d/2-1}`` (the bounded-density origin behavior) and
    integrates to ``y_max`` on a log-spaced sample set.  A shot is rejected —
    :class:`ShotRejectedError` — if it touches the a-priori growth bound,
    stops being nondecreasing, or exceeds ``1e12`` times its launch scale
    (finite-y blowup).  The far-field amplitude is extracted when the tail
    plateau is flat; otherwise ``epsilon`` is left ``None``.
    """
    d = _check_dim(d)
    if a <= 0.0:
        raise ValueError("the leading coefficient a must be > 0")
    if not 0.0 < y_launch < y_max or y_max < 1e3:
        raise ValueError("need 0 < y_launch < y_max and y_max >= 1e3 for the tail")
    z0 = a * y_launch ** (0.5 * d)
    p0 = 0.5 * d * a * y_launch ** (0.5 * d - 1.0)
    cap = 1e12 * max(a * y_max ** (0.5 * d - 1.0), 1.0)

    def rhs(y: float, state: np.ndarray) -> list[float]:
        z, p = state
        return [p, profile_rhs(d, y, z, p)]

    def hits_bound(y: float, state: np.ndarray) -> float:
        return growth_bound(d, y) - state[0]

    hits_bound.terminal = True

    def explodes(y: float, state: np.ndarray) -> float:
        return cap - state[0]

    explodes.terminal = True

    ys = np.geomspace(y_launch, y_max, int(samples))
    sol = solve_ivp(
        rhs,
        (y_launch, y_max),
        (z0, p0),
        method="DOP853",
        rtol=rtol,
        atol=1e-14 * z0,
        t_eval=ys,
        dense_output=True,
        events=(hits_bound, explodes),
    )
    if sol.t_events[0].size:
        raise ShotRejectedError(
            f"shot a={a} (d={d}) touched the growth bound at y={sol.t_events[0][0]:.4g}"
        )
    if sol.t_events[1].size:
        raise ShotRejectedError(
            f"shot a={a} (d={d}) blew up near y={sol.t_events[1][0]:.4g}"
        )
    if not sol.success:  # pragma: no cover - defensive
        raise RuntimeError(f"profile integration failed: {sol.message}")
    zeta, zp = sol.y[0], sol.y[1]
    if np.any(zp < 0.0):
        raise ShotRejectedError(
            f"shot a={a} (d={d}) lost monotonicity (density would be negative)"
        )
    solution = ProfileSolution(
        d=d, a=float(a), y=ys, zeta=zeta, zeta_prime=zp, interpolant=sol.sol
    )
    try:
        eps = extract_epsilon(solution)
    except TailNotConvergedError:
        return solution
    return replace(solution, epsilon=eps)


def extract_epsilon(sol: ProfileSolution, flatness: float = 0.01) -> float:
    """Far-field amplitude ``eps = lim y^{1-d/2} zeta(y) / 2``.

    The scaled tail ``w = y^{1-d/2} zeta`` approaches its limit like
    ``w = 2 eps + beta / y``; the limit is read off by a least-squares fit in
    ``1/y`` over the last decade of the grid.  Raises
    :class:`TailNotConvergedError` when ``w`` still varies by more than
    ``flatness`` (relatively) across that decade.
    """
    tail = sol.y >= sol.y_max / 10.0
    y = sol.y[tail]
    w = y ** (1.0 - 0.5 * sol.d) * sol.zeta[tail]
    mean = float(np.mean(w))
    if mean <= 0.0:
        raise TailNotConvergedError("the scaled tail has no positive plateau")
    spread = float(np.ptp(w)) / mean
    if spread > flatness:
        raise TailNotConvergedError(
            f"scaled tail varies by {spread:.2%} over the last decade "
            f"(limit {flatness:.0%}); increase y_max"
        )
    coeffs = np.polynomial.polynomial.polyfit(1.0 / y, w, 1)
    return 0.5 * float(coeffs[0])


def shoot_for_epsilon(
    d: int,
    epsilon: float,
    a_bracket: tuple[float, float] = (1e-8, 0.5),
    xtol: float = 1e-12,
    **shot_kwargs: object,
) -> ProfileSolution:
    """Find the shot whose far-field amplitude matches a target ``epsilon``.

    Bisects the (empirically monotone) map ``a -> epsilon`` over
    ``a_bracket``.  Intended for small targets; raises ``ValueError`` when
    the bracket does not straddle the target or a bracket endpoint is itself
    a rejected shot.
    """
    if epsilon <= 0.0:
        raise ValueError("target epsilon must be > 0")

    def gap(a: float) -> float:
        shot = shoot_profile(d, a, **shot_kwargs)
        if shot.epsilon is None:
            raise TailNotConvergedError(
                f"cannot read the amplitude of the a={a} shot; increase y_max"
            )
        return shot.epsilon - epsilon

    try:
        lo, hi = gap(a_bracket[0]), gap(a_bracket[1])
    except ShotRejectedError as err:
        raise ValueError(f"bracket endpoint is not an admissible shot: {err}") from err
    if lo > 0.0 or hi < 0.0:
        raise ValueError(
            f"target epsilon={epsilon} not bracketed: amplitude range is "
            f"[{lo + epsilon:.4g}, {hi + epsilon:.4g}]"
        )
    a_star = brentq(gap, a_bracket[0], a_bracket[1], xtol=xtol)
    return shoot_profile(d, float(a_star), **shot_kwargs)


def nonautonomous_field(
    d: int, tau: float, X: float | np.ndarray, Z: float | np.ndarray
) -> tuple[float | np.ndarray, float | np.ndarray]:
    """Phase-plane form of the self-similar equation at unit time.

    With ``tau = log r`` and ``y = e^{2 tau}``, profiles solve

        dX/dtau = (2 - Z) X + (e^{2 tau}/2)((d-2) Z - X),
        dZ/dtau = X - (d-2) Z,

    i.e. the stationary planar system plus a perturbation that vanishes as
    ``tau -> -infinity`` and steers orbits to ``(2(d-2) eps, 2 eps)``.
    """
    d = _check_dim(d)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    drive = 0.5 * math.exp(2.0 * tau)
    dX = (2.0 - Z) * X + drive * ((d - 2) * Z - X)
    dZ = X - (d - 2) * Z
    if dX.ndim == 0:
        return float(dX), float(dZ)
    return dX, dZ


def selfsimilar_to_mass(
    d: int, sol: ProfileSolution, t: float, grid: RadialGrid
) -> MassProfile:
    """Sample the self-similar solution at time ``t`` on a radial grid.

    ``M(r, t) = sigma_d t^{d/2-1} zeta(r^2/t)``; every positive node needs
    ``r^2/t`` inside the profile's integrated range.
    """
    params = ModelParams(_check_dim(d))
    if sol.d != params.d:
        raise ValueError(f"profile was shot for d={sol.d}, not d={params.d}")
    if t <= 0.0:
        raise ValueError("self-similar solutions exist for t > 0")
    r = grid.nodes
    zeta = np.atleast_1d(sol(r[1:] ** 2 / t))
    values = np.concatenate([[0.0], params.sigma_d * t ** (0.5 * d - 1.0) * zeta])
    return MassProfile(params, grid, values, time=float(t))
