"""Command-line front end: ``ksradial <subcommand>``.

Subcommands
-----------
evolve
    Run a scenario file: ``ksradial evolve --config run.toml --out DIR``.
stationary
    Integrate the phase-plane separatrix for one dimension and write a
    ``tau,X,Z,L`` CSV plus a ``d,crossings,terminal_dist,eig_re,eig_im``
    summary on stdout.
selfsimilar
    Shoot a forward self-similar profile (fixed leading coefficient or
    far-field target); prints a ``d,a,epsilon,bound_ok`` summary and,
    with ``--out``, writes the ``y,zeta,y_scaled`` CSV.
criteria
    Read a profile CSV and print the blowup-criteria report as ``key=value``
    lines; the ``t,theat`` ladder goes to ``--out`` (or stdout).
norms
    Print mass/concentration/L^q norms of a profile CSV; optionally emit a
    barrier verdict line and, from a diagnostics CSV, a ``q,slope,expected``
    decay-slope report.
sweep
    Expand a template scenario over a parameter grid:
    ``ksradial sweep --template t.toml --grid g.toml --out DIR``.

Exit codes: 0 on success (a detected blowup is a successful experiment),
2 for validation errors (bad flags, malformed files, inadmissible values),
3 for numerical failures (step failure, rejected shot, unconverged tail).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .comparison import Barrier, barrier_check, barrier_value, decay_slope
from .core import (
    DensityProfile,
    MassProfile,
    density_from_mass,
    load_profile,
    lq_norm,
    mass_from_density,
    radial_concentration,
)
from .criteria import criteria_report
from .phaseplane import (
    QuadrantExitError,
    count_crossings_certified,
    integrate_separatrix,
    linearization_eigenvalues,
    lyapunov,
)
from .scenario import ScenarioError, _fmt, load_grid, load_scenario, run, sweep
from .selfsimilar import (
    ShotRejectedError,
    TailNotConvergedError,
    growth_bound,
    shoot_for_epsilon,
    shoot_profile,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksradial",
        description="Numerical laboratory for radial chemotaxis aggregation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run a scenario file")
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", help="output directory (defaults to [output] directory)")
    p.add_argument("--dry-run", action="store_true",
                   help="validate and write the manifest only; no numerics")

    p = sub.add_parser("stationary", help="phase-plane separatrix for one dimension")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--tau-max", type=float, default=80.0)
    p.add_argument("--out", required=True, help="CSV file for tau,X,Z,L")

    p = sub.add_parser("selfsimilar", help="shoot a forward self-similar profile")
    p.add_argument("--dim", type=int, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--shoot", type=float, metavar="A",
                        help="leading coefficient of the profile at the origin")
    target.add_argument("--target-eps", type=float, metavar="E",
                        help="bisect the coefficient to hit this far-field amplitude")
    p.add_argument("--ymax", type=float, default=1e4)
    p.add_argument("--out", help="CSV file for y,zeta,y_scaled (default: summary only)")

    p = sub.add_parser("criteria", help="blowup-criteria report for a profile CSV")
    p.add_argument("--profile", required=True)
    p.add_argument("--out", help="CSV file for the t,theat ladder (default: stdout)")

    p = sub.add_parser("norms", help="norms of a profile CSV")
    p.add_argument("--profile", required=True)
    p.add_argument("--p", type=float, action="append", dest="orders", metavar="P",
                   help="density L^p norm to report (repeatable; default 2)")
    p.add_argument("--barrier-p", type=float)
    p.add_argument("--barrier-eps", type=float)
    p.add_argument("--barrier-K", type=float)
    p.add_argument("--diagnostics", help="diagnostics.csv of a run: fit decay slopes")

    p = sub.add_parser("sweep", help="cartesian parameter sweep over a template")
    p.add_argument("--template", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    return parser


def _load_mass(path: str) -> MassProfile:
    profile = load_profile(path)
    if isinstance(profile, DensityProfile):
        profile = mass_from_density(profile)
    return profile


def _cmd_evolve(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.config)
    manifest = run(scenario, args.out, dry_run=args.dry_run)
    detail = " ".join(
        f"{k}={_fmt(v) if isinstance(v, (int, float)) else v}"
        for k, v in manifest.outcome_detail.items() if k != "kind"
    )
    print(f"outcome={manifest.outcome} {detail}".rstrip())
    for name, status in manifest.checks.items():
        print(f"check.{name}={status}")
    print(f"wrote={manifest.directory}")
    return 3 if manifest.outcome == "StepFailure" else 0


def _cmd_stationary(args: argparse.Namespace) -> int:
    traj = integrate_separatrix(args.dim, tau_span=(0.0, args.tau_max))
    lines = ["tau,X,Z,L"]
    lines += [
        f"{_fmt(tau)},{_fmt(x)},{_fmt(z)},{_fmt(lyapunov(args.dim, x, z))}"
        for tau, x, z in zip(traj.taus, traj.X, traj.Z)
    ]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    crossings = count_crossings_certified(args.dim)
    _, eig = linearization_eigenvalues(args.dim, at="interior")
    print("d,crossings,terminal_dist,eig_re,eig_im")
    print(f"{args.dim},{crossings},{_fmt(traj.terminal_distance)},"
          f"{_fmt(eig.real)},{_fmt(eig.imag)}")
    return 0


def _cmd_selfsimilar(args: argparse.Namespace) -> int:
    if args.shoot is not None:
        shot = shoot_profile(args.dim, args.shoot, y_max=args.ymax)
    else:
        shot = shoot_for_epsilon(args.dim, args.target_eps, y_max=args.ymax)
    if args.out is not None:
        scaled = shot.y ** (1.0 - 0.5 * shot.d) * shot.zeta
        lines = ["y,zeta,y_scaled"]
        lines += [
            f"{_fmt(y)},{_fmt(z)},{_fmt(w)}"
            for y, z, w in zip(shot.y, shot.zeta, scaled)
        ]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    bound_ok = bool(np.all(shot.zeta <= growth_bound(shot.d, shot.y)))
    eps = "" if shot.epsilon is None else _fmt(shot.epsilon)
    print("d,a,epsilon,bound_ok")
    print(f"{shot.d},{_fmt(shot.a)},{eps},{_fmt(bound_ok)}")
    return 0


def _cmd_criteria(args: argparse.Namespace) -> int:
    report = criteria_report(_load_mass(args.profile))
    for key, value in report.scalars().items():
        print(f"{key}={_fmt(value)}")
    ladder = ["t,theat"]
    ladder += [
        f"{_fmt(t)},{_fmt(th)}" for t, th in zip(report.t_ladder, report.t_heat)
    ]
    text = "\n".join(ladder) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_norms(args: argparse.Namespace) -> int:
    mass = _load_mass(args.profile)
    density = density_from_mass(mass)
    print(f"d={mass.params.d}")
    print(f"total_mass={_fmt(mass.total_mass)}")
    print(f"concentration={_fmt(radial_concentration(mass))}")
    for q in args.orders or [2.0]:
        print(f"lq_{q:g}={_fmt(lq_norm(density, q))}")

    barrier_args = (args.barrier_p, args.barrier_eps, args.barrier_K)
    if any(v is not None for v in barrier_args):
        if any(v is None for v in barrier_args):
            raise ScenarioError(
                "barrier verdicts need all of --barrier-p, --barrier-eps, --barrier-K"
            )
        barrier = Barrier(mass.params, p=args.barrier_p, eps=args.barrier_eps,
                          K=args.barrier_K)
        verdict = barrier_check(mass, barrier)
        if verdict:
            print("PASS")
        else:
            r = verdict.first_violation_r
            print(f"VIOLATION r={_fmt(r)} M={_fmt(float(mass.interpolate(r)))} "
                  f"b={_fmt(float(barrier_value(barrier, r)))}")

    if args.diagnostics:
        header = Path(args.diagnostics).read_text(encoding="utf-8").splitlines()[0]
        names = header.strip().split(",")
        data = np.loadtxt(args.diagnostics, delimiter=",", skiprows=1, ndmin=2)
        cols = {name: data[:, i] for i, name in enumerate(names)}
        t = cols["t"]
        d = mass.params.d
        print("q,slope,expected")
        for name in names:
            if not name.startswith("lq_"):
                continue
            q = float(name[3:])
            slope = decay_slope((t, cols[name]), max(3, t.size // 2))
            print(f"{_fmt(q)},{_fmt(slope)},{_fmt(-0.5 * d * (1.0 - 1.0 / q))}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    manifests = sweep(args.template, load_grid(args.grid), args.out)
    for manifest in manifests:
        print(f"{manifest.directory}: {manifest.outcome}")
    print(f"wrote={Path(args.out) / 'index.csv'}")
    return 0


_COMMANDS = {
    "evolve": _cmd_evolve,
    "stationary": _cmd_stationary,
    "selfsimilar": _cmd_selfsimilar,
    "criteria": _cmd_criteria,
    "norms": _cmd_norms,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScenarioError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ShotRejectedError, TailNotConvergedError, QuadrantExitError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
