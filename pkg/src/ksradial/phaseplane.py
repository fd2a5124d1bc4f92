"""Stationary radial solutions via a planar dynamical system.

In logarithmic radius ``tau = log r`` the time-independent cumulative-mass
equation reduces to the autonomous planar system

    dX/dtau = (2 - Z) X,        dZ/dtau = X - (d - 2) Z,

where ``X = r^{3-d} M'(r) / sigma_d`` is the scaled density (``r^2 u``) and
``Z = r^{2-d} M(r) / sigma_d`` the scaled concentration.  Bounded stationary
densities correspond to the separatrix leaving the origin along its unstable
eigenvector; it converges to the interior fixed point ``(2(d-2), 2)``, i.e.
every such solution approaches the singular steady state at large radii.  A
Lyapunov function makes the convergence quantitative, and the linearization
at the interior point separates spiral approach (oscillating profiles,
``3 <= d <= 9``) from node approach (monotone tails, ``d >= 10``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import MassProfile, ModelParams, RadialGrid

__all__ = [
    "PhasePoint",
    "PhaseTrajectory",
    "QuadrantExitError",
    "count_crossings",
    "count_crossings_certified",
    "integrate_separatrix",
    "interior_fixed_point",
    "linearization_eigenvalues",
    "lyapunov",
    "stationary_mass_profile",
    "vector_field",
]


class QuadrantExitError(RuntimeError):
    """The integrated trajectory left the open quadrant ``X, Z > 0``."""


def _check_dim(d: int) -> int:
    if d != int(d) or int(d) < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {d!r}")
    return int(d)


def interior_fixed_point(d: int) -> tuple[float, float]:
    """The nontrivial rest point ``(2(d-2), 2)`` (the singular steady state)."""
    d = _check_dim(d)
    return (2.0 * (d - 2), 2.0)


def vector_field(
    d: int, X: float | np.ndarray, Z: float | np.ndarray
) -> tuple[float | np.ndarray, float | np.ndarray]:
    """Right-hand side ``((2 - Z) X, X - (d - 2) Z)`` of the planar system."""
    d = _check_dim(d)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    dX = (2.0 - Z) * X
    dZ = X - (d - 2) * Z
    if dX.ndim == 0:
        return float(dX), float(dZ)
    return dX, dZ


def lyapunov(d: int, X: float | np.ndarray, Z: float | np.ndarray) -> float | np.ndarray:
    """Lyapunov function of the planar system, zero at the interior point.

    ``L = (Z-2)^2/2 + X - 2(d-2) - 2(d-2) log(X / (2(d-2)))`` decreases along
    trajectories at the rate ``-(d-2)(Z-2)^2``, which pins every quadrant
    trajectory to the interior fixed point.  Defined for ``X > 0`` only.
    """
    d = _check_dim(d)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if np.any(X <= 0.0):
        raise ValueError("the Lyapunov function needs X > 0")
    xs = 2.0 * (d - 2)
    out = 0.5 * (Z - 2.0) ** 2 + X - xs - xs * np.log(X / xs)
    return float(out) if out.ndim == 0 else out


def linearization_eigenvalues(d: int, at: str = "interior") -> tuple[complex, complex]:
    """Eigenvalues of the linearized flow at a fixed point.

    At the interior point the characteristic polynomial is
    ``lambda^2 + (d-2) lambda + 2(d-2)``; its discriminant ``(d-2)(d-10)``
    is negative exactly for ``3 <= d <= 9`` (spiral), zero at ``d = 10``
    (double root ``-4``), positive from ``d = 11`` on (stable node).  The
    origin is the saddle ``{2, -(d-2)}`` whose unstable direction ``(d, 1)``
    launches the separatrix.
    """
    d = _check_dim(d)
    if at == "origin":
        return (complex(2.0), complex(-(d - 2)))
    if at != "interior":
        raise ValueError(f"unknown fixed point tag {at!r}; use 'interior' or 'origin'")
    b, c = float(d - 2), 2.0 * (d - 2)
    disc = complex(b * b - 4.0 * c) ** 0.5
    return ((-b - disc) / 2.0, (-b + disc) / 2.0)


@dataclass(frozen=True)
class PhasePoint:
    """One sample of a phase trajectory: log-radius and scaled state."""

    tau: float
    X: float
    Z: float


@dataclass(frozen=True)
class PhaseTrajectory:
    """An integrated orbit of the planar system, with solver statistics.

    ``taus`` is strictly increasing; ``interpolant`` is the integrator's
    dense output (a callable of tau returning the state pair), kept because
    downstream consumers differentiate reconstructed profiles and linear
    interpolation would contaminate second differences.  ``termination`` is
    ``"fixed_point"`` when the orbit got within ``fixed_point_tol`` of the
    interior rest point, else ``"tau_span"``.
    """

    d: int
    taus: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    termination: str
    terminal_distance: float
    fixed_point_tol: float
    n_rhs_evaluations: int
    interpolant: object | None = None

    def __post_init__(self) -> None:
        if self.taus.size == 0:
            raise ValueError("a trajectory needs at least one sample")
        if np.any(np.diff(self.taus) <= 0.0):
            raise ValueError("trajectory samples must have strictly increasing tau")

    def __len__(self) -> int:
        return int(self.taus.size)

    def __getitem__(self, i: int) -> PhasePoint:
        return PhasePoint(float(self.taus[i]), float(self.X[i]), float(self.Z[i]))

    @property
    def converged(self) -> bool:
        return self.termination == "fixed_point"

    def state(self, tau: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate ``(X, Z)`` at arbitrary tau inside the integrated range.

        Uses the dense interpolant when available.  For a converged
        trajectory, tau beyond the terminal sample returns the interior
        fixed point (the orbit is within ``fixed_point_tol`` of it forever
        after); tau below the initial sample is a domain error.
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if float(tau.min()) < self.taus[0] - 1e-12:
            raise ValueError(
                f"tau {float(tau.min()):.6g} lies before the trajectory start "
                f"{self.taus[0]:.6g}"
            )
        beyond = tau > self.taus[-1]
        if np.any(beyond) and not self.converged:
            raise ValueError(
                f"tau {float(tau.max()):.6g} lies past the trajectory end "
                f"{self.taus[-1]:.6g} and the orbit did not converge"
            )
        inside = np.clip(tau, self.taus[0], self.taus[-1])
        if self.interpolant is not None:
            xz = np.asarray(self.interpolant(inside))
            x, z = xz[0], xz[1]
        else:
            x = np.interp(inside, self.taus, self.X)
            z = np.interp(inside, self.taus, self.Z)
        if np.any(beyond):
            xs, zs = interior_fixed_point(self.d)
            x = np.where(beyond, xs, x)
            z = np.where(beyond, zs, z)
        return x, z


def integrate_separatrix(
    d: int,
    tau_span: tuple[float, float] = (0.0, 80.0),
    rtol: float = 1e-10,
    atol: float = 1e-12,
    launch_offset: float = 1e-8,
    fixed_point_tol: float = 1e-9,
    samples: int = 2000,
) -> PhaseTrajectory:
    """Integrate the separatrix joining the origin to the interior point.

    The orbit is launched at ``tau_span[0]`` a distance ``launch_offset``
    from the origin along the exact unstable eigenvector ``(d, 1)`` and
    integrated with DOP853 until it comes within ``fixed_point_tol`` of
    ``(2(d-2), 2)`` or tau runs out.  Shifting ``tau_span[0]`` rescales the
    reconstructed stationary solution (tau translation is the scaling
    symmetry); shrinking ``launch_offset`` moves the launch point onto the
    true separatrix at first order.

    Raises :class:`QuadrantExitError` if the numerical orbit leaves
    ``X, Z > 0``, which the exact separatrix never does.
    """
    d = _check_dim(d)
    tau0, tau1 = float(tau_span[0]), float(tau_span[1])
    if not (math.isfinite(tau0) and math.isfinite(tau1)) or tau1 <= tau0:
        raise ValueError("tau_span must be a finite increasing pair")
    if launch_offset <= 0.0:
        raise ValueError("launch offset must be > 0")
    xs, zs = interior_fixed_point(d)
    norm = math.hypot(float(d), 1.0)
    y0 = (launch_offset * d / norm, launch_offset / norm)

    def rhs(tau: float, y: np.ndarray) -> list[float]:
        return [(2.0 - y[1]) * y[0], y[0] - (d - 2) * y[1]]

    def reached(tau: float, y: np.ndarray) -> float:
        return math.hypot(y[0] - xs, y[1] - zs) - fixed_point_tol

    reached.terminal = True

    def exited(tau: float, y: np.ndarray) -> float:
        return min(y[0], y[1])

    exited.terminal = True

    sol = solve_ivp(
        rhs,
        (tau0, tau1),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=(reached, exited),
    )
    if not sol.success:  # pragma: no cover - defensive
        raise RuntimeError(f"separatrix integration failed: {sol.message}")
    if sol.t_events[1].size:
        tau_exit = float(sol.t_events[1][0])
        state = sol.y_events[1][0]
        raise QuadrantExitError(
            f"trajectory left the positive quadrant at tau={tau_exit:.6g}, "
            f"state=({state[0]:.3e}, {state[1]:.3e}); widen tolerances or "
            f"shorten tau_span"
        )
    tau_end = float(sol.t[-1])
    taus = np.linspace(tau0, tau_end, int(samples))
    states = sol.sol(taus)
    terminal = math.hypot(states[0, -1] - xs, states[1, -1] - zs)
    return PhaseTrajectory(
        d=d,
        taus=taus,
        X=states[0],
        Z=states[1],
        termination="fixed_point" if sol.t_events[0].size else "tau_span",
        terminal_distance=terminal,
        fixed_point_tol=float(fixed_point_tol),
        n_rhs_evaluations=int(sol.nfev),
        interpolant=sol.sol,
    )


def count_crossings(traj: PhaseTrajectory, level: float = 2.0) -> int:
    """Number of sign changes of ``Z - level`` along the sampled trajectory.

    Detection is linear between samples, so the count is a lower bound on
    the true number of crossings: oscillations below the sampling scale or
    the integrator tolerance go uncounted.  Conversely, near the rest point
    excursions at the tolerance scale may be integrator artifacts; for a
    noise-free count of the limit-level crossings use
    :func:`count_crossings_certified`.
    """
    s = np.sign(traj.Z - float(level))
    s = s[s != 0.0]
    if s.size < 2:
        return 0
    return int(np.sum(s[1:] != s[:-1]))


def count_crossings_certified(
    d: int,
    fixed_point_tol: float = 1e-12,
    tau_span: tuple[float, float] = (0.0, 200.0),
    launch_offset: float = 1e-8,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> int:
    """Crossings of ``Z = 2`` along the separatrix, counted without a floor.

    Counting sign changes on the ``(X, Z)`` orbit fails once the excursion
    amplitudes fall under the integrator noise: spiral dimensions lose real
    crossings (in ``d = 9`` the third one peaks near ``4e-12``) while node
    dimensions gain spurious ones at the tolerance scale.  Here the same
    orbit is integrated in polar coordinates around the interior fixed
    point, ``X - 2(d-2) = e^s cos(theta)``, ``Z - 2 = e^s sin(theta)``; the
    radial decay lives entirely in ``s``, so the angle — and with it every
    crossing, however small — is resolved at full precision.  Crossings are
    the zeros of ``sin(theta)``, counted until the deviation ``e^s`` drops
    under ``fixed_point_tol``.
    """
    d = _check_dim(d)
    if launch_offset <= 0.0:
        raise ValueError("launch offset must be > 0")
    if fixed_point_tol <= 0.0:
        raise ValueError("fixed point tolerance must be > 0")
    xs = 2.0 * (d - 2)
    norm = math.hypot(float(d), 1.0)
    p0 = launch_offset * d / norm - xs
    q0 = launch_offset / norm - 2.0
    y0 = (math.log(math.hypot(p0, q0)), math.atan2(q0, p0))
    s_stop = math.log(fixed_point_tol)

    def rhs(tau: float, y: np.ndarray) -> list[float]:
        s, th = y
        c, n = math.cos(th), math.sin(th)
        rho = math.exp(s)
        ds = -rho * n * c * c + (1.0 - xs) * n * c - (d - 2) * n * n
        dth = c * c - (d - 2) * n * c + xs * n * n + rho * n * n * c
        return [ds, dth]

    def crossing(tau: float, y: np.ndarray) -> float:
        return math.sin(y[1])

    def settled(tau: float, y: np.ndarray) -> float:
        return y[0] - s_stop

    settled.terminal = True

    sol = solve_ivp(
        rhs,
        (float(tau_span[0]), float(tau_span[1])),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=(crossing, settled),
    )
    if not sol.success:  # pragma: no cover - defensive
        raise RuntimeError(f"polar separatrix integration failed: {sol.message}")
    return int(sol.t_events[0].size)


def stationary_mass_profile(
    d: int, traj: PhaseTrajectory, grid: RadialGrid
) -> MassProfile:
    """Reconstruct the stationary cumulative mass ``M(r)`` on a radial grid.

    Evaluates ``M(r) = sigma_d r^{d-2} Z(log r)`` through the trajectory's
    dense interpolant; the origin node is exact (``M(0) = 0``).  Positive
    grid nodes must have ``log r`` inside the integrated tau range, except
    that a converged trajectory extends past its end by the fixed point,
    i.e. the singular steady state tail.
    """
    params = ModelParams(_check_dim(d))
    if traj.d != params.d:
        raise ValueError(f"trajectory was integrated for d={traj.d}, not d={params.d}")
    r = grid.nodes
    _, z = traj.state(np.log(r[1:]))
    values = np.concatenate([[0.0], params.sigma_d * r[1:] ** (params.d - 2) * z])
    return MassProfile(params, grid, values)
