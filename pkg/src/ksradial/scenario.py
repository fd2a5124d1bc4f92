"""Scenario files, run orchestration, and on-disk run artifacts.

A scenario is a small TOML file describing one evolution experiment::

    [model]
    d = 3

    [initial]
    kind = "chandrasekhar_scaled"   # | explicit_blowup | gaussian
    epsilon = 0.5                   # | selfsimilar | from_csv

    [solver]                        # any SolverConfig field
    n = 512
    r_max = 20.0

    [run]
    t_end = 1.0

    [checks]                        # all default to false
    barrier = true
    comparison = true

    [output]
    directory = "out/run1"          # cadence here aliases solver.cadence

:func:`run` executes the solver plus the requested checks and writes four
artifacts into the output directory -- ``trajectory.csv`` (long format
``t,r,M``), ``diagnostics.csv`` (time series of mass, concentration, origin
density, L^q norms), ``checks.csv`` (one PASS/FAIL/SKIP verdict per enabled
check), and ``manifest.json`` (fully-resolved scenario echo, outcome, file
inventory with SHA-256 checksums).  Every file is written via a temporary
name and an atomic replace, the manifest last, so a readable manifest
implies the run is complete.  All floats are printed with 17 significant
digits; re-running an identical scenario reproduces the CSVs byte for byte.

:func:`sweep` expands a template scenario over a cartesian parameter grid
into numbered subdirectories plus an ``index.csv`` mapping parameters to
outcomes.  Runs are independent; set ``KSRADIAL_WORKERS`` to parallelize.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from csv import writer as csv_writer
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .comparison import Barrier, barrier_check, comparison_check, decay_slope
from .core import (
    DensityProfile,
    MassProfile,
    ModelParams,
    explicit_blowup_mass,
    gaussian_mass,
    load_profile,
    mass_from_density,
    radial_concentration,
    smoothed_chandrasekhar_mass,
)
from .criteria import criteria_report
from .pde import (
    BlowupDetected,
    EvolutionResult,
    ReachedHorizon,
    SolverConfig,
    StepFailure,
    evolve,
)
from .selfsimilar import selfsimilar_to_mass, shoot_profile

__all__ = [
    "RunManifest",
    "Scenario",
    "ScenarioError",
    "load_grid",
    "load_scenario",
    "run",
    "scenario_from_dict",
    "sweep",
]


class ScenarioError(ValueError):
    """A scenario file is malformed: unknown keys, missing sections, bad values."""


_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}
_INITIAL_KEYS: dict[str, dict[str, set[str]]] = {
    "chandrasekhar_scaled": {"required": {"epsilon"}, "optional": {"smoothing"}},
    "explicit_blowup": {"required": set(), "optional": {"blowup_time"}},
    "gaussian": {"required": {"amplitude", "width"}, "optional": set()},
    "selfsimilar": {"required": {"a"}, "optional": {"t_start"}},
    "from_csv": {"required": {"path"}, "optional": set()},
}
_CHECK_FLAGS = ("barrier", "comparison", "criteria", "decay")
_CHECK_KNOBS = ("barrier_p", "barrier_eps", "barrier_K", "comparison_factor")
_OUTPUT_KEYS = {"directory", "cadence"}


def _fmt(x: Any) -> str:
    """One scalar as text: ints verbatim, floats with 17 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Scenario:
    """A validated, fully-defaulted experiment description.

    Defaults applied by :func:`load_scenario`: ``t_end=1.0``, solver fields
    from :class:`~ksradial.pde.SolverConfig`, all checks off,
    ``smoothing=1.0`` / ``blowup_time=1.0`` / ``t_start=1.0`` for the datum
    kinds that take them, and ``comparison_factor=1.02``.
    """

    d: int
    initial: dict[str, Any]
    solver: SolverConfig
    t_end: float
    checks: dict[str, Any]
    output_dir: str | None = None

    def resolved(self) -> dict[str, Any]:
        """Nested-dict echo of every setting, defaults filled in."""
        solver = dataclasses.asdict(self.solver)
        solver["lq_orders"] = list(solver["lq_orders"])
        return {
            "model": {"d": self.d},
            "initial": dict(self.initial),
            "solver": solver,
            "run": {"t_end": self.t_end},
            "checks": dict(self.checks),
            "output": {"directory": self.output_dir},
        }

    def initial_profile(self) -> MassProfile:
        """Construct the initial datum on the solver's grid."""
        params = ModelParams(self.d)
        grid = self.solver.make_grid()
        r = grid.nodes
        spec = self.initial
        kind = spec["kind"]
        if kind == "chandrasekhar_scaled":
            values = smoothed_chandrasekhar_mass(
                params, spec["epsilon"], r, spec["smoothing"]
            )
            return MassProfile(params, grid, values)
        if kind == "explicit_blowup":
            values = explicit_blowup_mass(params, spec["blowup_time"], r, 0.0)
            return MassProfile(params, grid, values)
        if kind == "gaussian":
            values = gaussian_mass(params, spec["amplitude"], spec["width"], r)
            return MassProfile(params, grid, values)
        if kind == "selfsimilar":
            t0 = spec["t_start"]
            y_need = grid.r_max**2 / t0
            shot = shoot_profile(self.d, spec["a"], y_max=max(1e4, 1.01 * y_need))
            return selfsimilar_to_mass(self.d, shot, t0, grid)
        # from_csv; existence and monotonicity were checked at load time
        loaded = load_profile(spec["path"])
        if isinstance(loaded, DensityProfile):
            loaded = mass_from_density(loaded)
        if loaded.params.d != self.d:
            raise ScenarioError(
                f"initial.path: profile has d={loaded.params.d}, scenario has d={self.d}"
            )
        return MassProfile(params, grid, loaded.interpolate(r), time=loaded.time)


@dataclass(frozen=True)
class RunManifest:
    """What :func:`run` wrote and how it ended."""

    scenario: dict[str, Any]
    version: str
    started: float
    finished: float
    outcome: str
    outcome_detail: dict[str, Any]
    files: dict[str, str]  # name -> sha256
    checks: dict[str, str]  # check -> PASS | FAIL | SKIP
    directory: str | None = None


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file.

    Unknown keys anywhere raise :class:`ScenarioError` listing all of them
    by dotted path; so do missing sections, missing per-kind parameters,
    nonpositive sizes, and (for ``from_csv``) unreadable or non-monotone
    profiles.  Relative ``from_csv`` paths resolve against the scenario
    file's directory.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise ScenarioError(f"scenario file not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError(f"{path}: {err}") from err
    return scenario_from_dict(raw, base_dir=path.parent)


def _table(raw: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    section = raw.get(name, {})
    if not isinstance(section, Mapping):
        raise ScenarioError(f"[{name}] must be a table of keys, got {section!r}")
    return section


def scenario_from_dict(raw: Mapping[str, Any], base_dir: Path | None = None) -> Scenario:
    """Validate an already-parsed scenario mapping (see :func:`load_scenario`)."""
    base_dir = Path(".") if base_dir is None else base_dir
    unknown = [s for s in raw if s not in ("model", "initial", "solver", "run", "checks", "output")]
    unknown = [f"{s}.*" for s in unknown]

    model = _table(raw, "model")
    if "d" not in model:
        raise ScenarioError("scenario needs a [model] section with a dimension d")
    unknown += [f"model.{k}" for k in model if k != "d"]
    d = model["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 3:
        raise ScenarioError(f"model.d: need an integer >= 3, got {d!r}")

    if "initial" not in raw:
        raise ScenarioError("scenario needs an [initial] section")
    initial_raw = _table(raw, "initial")
    kind = initial_raw.get("kind")
    if kind not in _INITIAL_KEYS:
        raise ScenarioError(
            f"initial.kind: expected one of {sorted(_INITIAL_KEYS)}, got {kind!r}"
        )
    keys = _INITIAL_KEYS[kind]
    unknown += [
        f"initial.{k}"
        for k in initial_raw
        if k != "kind" and k not in keys["required"] | keys["optional"]
    ]
    missing = sorted(keys["required"] - set(initial_raw))
    if missing:
        raise ScenarioError(
            f"initial ({kind}): missing " + ", ".join(f"initial.{k}" for k in missing)
        )

    solver_raw = dict(_table(raw, "solver"))
    unknown += [f"solver.{k}" for k in solver_raw if k not in _SOLVER_KEYS]

    run_raw = _table(raw, "run")
    unknown += [f"run.{k}" for k in run_raw if k != "t_end"]

    checks_raw = _table(raw, "checks")
    unknown += [
        f"checks.{k}" for k in checks_raw if k not in _CHECK_FLAGS + _CHECK_KNOBS
    ]

    output_raw = _table(raw, "output")
    unknown += [f"output.{k}" for k in output_raw if k not in _OUTPUT_KEYS]

    if unknown:
        raise ScenarioError("unknown scenario keys: " + ", ".join(sorted(unknown)))

    initial: dict[str, Any] = {"kind": kind}
    defaults = {"smoothing": 1.0, "blowup_time": 1.0, "t_start": 1.0}
    for k in sorted(keys["required"] | keys["optional"]):
        value = initial_raw.get(k, defaults.get(k))
        if k == "path":
            csv_path = Path(value)
            if not csv_path.is_absolute():
                csv_path = base_dir / csv_path
            if not csv_path.is_file():
                raise ScenarioError(f"initial.path: no such file: {csv_path}")
            try:
                loaded = load_profile(csv_path)  # monotonicity rejected at load time
            except ValueError as err:
                raise ScenarioError(f"initial.path: {err}") from err
            if loaded.params.d != d:
                raise ScenarioError(
                    f"initial.path: profile has d={loaded.params.d}, scenario has d={d}"
                )
            value = str(csv_path)
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ScenarioError(f"initial.{k}: need a number, got {value!r}")
            value = float(value)
            if value <= 0.0:
                raise ScenarioError(f"initial.{k}: must be > 0, got {value}")
        initial[k] = value

    if "lq_orders" in solver_raw:
        solver_raw["lq_orders"] = tuple(float(q) for q in solver_raw["lq_orders"])
    if "cadence" in output_raw:
        solver_raw["cadence"] = output_raw["cadence"]
    try:
        solver = SolverConfig(**solver_raw)
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"solver: {err}") from err

    t_end = run_raw.get("t_end", 1.0)
    if not isinstance(t_end, (int, float)) or isinstance(t_end, bool) or t_end <= 0.0:
        raise ScenarioError(f"run.t_end: must be a number > 0, got {t_end!r}")

    checks: dict[str, Any] = {}
    for flag in _CHECK_FLAGS:
        value = checks_raw.get(flag, False)
        if not isinstance(value, bool):
            raise ScenarioError(f"checks.{flag}: need true/false, got {value!r}")
        checks[flag] = value
    for knob in _CHECK_KNOBS:
        default = 1.02 if knob == "comparison_factor" else None
        value = checks_raw.get(knob, default)
        if value is not None:
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise ScenarioError(f"checks.{knob}: need a number > 0, got {value!r}")
            value = float(value)
        checks[knob] = value

    directory = output_raw.get("directory")
    if directory is not None and not isinstance(directory, str):
        raise ScenarioError(f"output.directory: need a string, got {directory!r}")

    return Scenario(
        d=d,
        initial=initial,
        solver=solver,
        t_end=float(t_end),
        checks=checks,
        output_dir=directory,
    )


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _outcome_dict(outcome: ReachedHorizon | BlowupDetected | StepFailure) -> dict[str, Any]:
    if isinstance(outcome, ReachedHorizon):
        return {"kind": "ReachedHorizon", "t_end": outcome.t_end}
    if isinstance(outcome, BlowupDetected):
        return {
            "kind": "BlowupDetected",
            "t_star": outcome.t_star,
            "trigger_rule": outcome.trigger.rule,
            "trigger_value": outcome.trigger.value,
            "trigger_threshold": outcome.trigger.threshold,
        }
    return {"kind": "StepFailure", "t": outcome.t, "reason": outcome.reason}


def _trajectory_csv(result: EvolutionResult) -> str:
    lines = ["t,r,M"]
    for prof in result.trajectory:
        t = _fmt(prof.time)
        lines.extend(
            f"{t},{_fmt(r)},{_fmt(m)}" for r, m in zip(prof.grid.nodes, prof.values)
        )
    return "\n".join(lines) + "\n"


def _diagnostics_csv(result: EvolutionResult) -> str:
    diag = result.diagnostics
    qs = sorted(diag.lq)
    header = ["t", "total_mass", "concentration", "u_origin"]
    header += [f"lq_{q:g}" for q in qs]
    header.append("clipped_nodes")
    lines = [",".join(header)]
    for k in range(diag.t.size):
        row = [_fmt(diag.t[k]), _fmt(diag.total_mass[k]), _fmt(diag.concentration[k]),
               _fmt(diag.u_origin[k])]
        row += [_fmt(diag.lq[q][k]) for q in qs]
        row.append(str(int(diag.clipped_nodes[k])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _barrier_row(scenario: Scenario, initial: MassProfile,
                 result: EvolutionResult) -> tuple[str, str, str, str]:
    params = initial.params
    d = params.d
    cs = scenario.checks
    p = cs["barrier_p"] if cs["barrier_p"] is not None else 0.51 * d
    cap = d / (2.0 * p)
    z0 = radial_concentration(initial) / (2.0 * params.sigma_d)
    eps = cs["barrier_eps"] if cs["barrier_eps"] is not None else 0.5 * (z0 + cap)
    if z0 >= cap:
        return ("barrier", "SKIP", _fmt(z0),
                f"initial concentration {z0:.6g}*2sigma_d is not under any "
                f"barrier with p={p:.6g} (cap {cap:.6g})")
    K = cs["barrier_K"]
    if K is None:
        r = initial.grid.nodes[1:]
        K = 1.02 * float(np.max(initial.values[1:] / r ** (d - d / p)))
    barrier = Barrier(params, p=p, eps=eps, K=K)
    worst = 0.0
    for prof in result.trajectory:
        verdict = barrier_check(prof, barrier)
        worst = max(worst, verdict.worst_ratio)
        if not verdict:
            return ("barrier", "FAIL", _fmt(verdict.worst_ratio),
                    f"M >= barrier at r={verdict.first_violation_r:.6g}, "
                    f"t={prof.time:.6g} (p={p:.6g} eps={eps:.6g} K={K:.6g})")
    return ("barrier", "PASS", _fmt(worst),
            f"p={p:.6g} eps={eps:.6g} K={K:.6g} r_star={barrier.r_star:.6g}")


def _comparison_row(scenario: Scenario, initial: MassProfile,
                    result: EvolutionResult) -> tuple[str, str, str, str]:
    # the heat oracle continues the datum as a constant beyond r_max, which
    # only dominates the true inflow when the mass has settled by then
    total = initial.total_mass
    growth = 1.0 - float(initial.interpolate(0.5 * initial.grid.r_max)) / total
    if growth > 0.02:
        return ("comparison", "SKIP", _fmt(growth),
                f"initial mass grows {growth:.2%} over the outer octave; the "
                f"constant-tail heat oracle needs a datum settled within r_max")
    factor = scenario.checks["comparison_factor"]
    report = comparison_check(
        result, (initial.grid.nodes, factor * initial.values)
    )
    value = _fmt(float(report.worst_margins.max()))
    if not report.applicable:
        return ("comparison", "SKIP", value,
                f"concentration reached {report.max_concentration:.6g}, "
                f"cap for the heat argument is {report.concentration_cap:.6g}")
    if report.dominated:
        return ("comparison", "PASS", value,
                f"M <= heat({factor:.6g}*M0) at all snapshots, "
                f"tol={report.tolerance:.6g}")
    return ("comparison", "FAIL", value,
            f"first domination failure at t={report.first_failure_time:.6g}")


def _criteria_row(initial: MassProfile,
                  result: EvolutionResult) -> tuple[str, str, str, str]:
    report = criteria_report(initial)
    blew_up = isinstance(result.outcome, BlowupDetected)
    flags = " ".join(f"{k}={v}" for k, v in sorted(report.flags.items()))
    consistent = blew_up or not report.exceeds_upper_bracket
    status = "PASS" if consistent else "FAIL"
    detail = f"{flags}; outcome={_outcome_dict(result.outcome)['kind']}"
    if not consistent:
        detail += " (initial datum exceeds the sufficient blowup level yet the run completed)"
    return ("criteria", status, _fmt(report.concentration), detail)


def _decay_row(result: EvolutionResult) -> tuple[str, str, str, str]:
    if not isinstance(result.outcome, ReachedHorizon):
        return ("decay", "SKIP", "", "decay fit needs a run that reaches the horizon")
    diag = result.diagnostics
    half = int(diag.t.size) // 2
    if half < 3:
        return ("decay", "SKIP", "", f"only {diag.t.size} samples; need >= 6")
    q = min(diag.lq)
    try:
        slope_lq = decay_slope((diag.t, diag.lq[q]), half)
        slope_conc = decay_slope((diag.t, diag.concentration), half)
    except ValueError as err:
        return ("decay", "SKIP", "", str(err))
    ok = slope_lq < 0.0 and slope_conc < 0.0
    return ("decay", "PASS" if ok else "FAIL", _fmt(slope_lq),
            f"L^{q:g} slope={slope_lq:.6g}, concentration slope={slope_conc:.6g} "
            f"over the trailing half")


def _checks_csv(rows: list[tuple[str, str, str, str]]) -> str:
    buf = io.StringIO()
    w = csv_writer(buf, lineterminator="\n")
    w.writerow(["check", "status", "value", "detail"])
    w.writerows(rows)
    return buf.getvalue()


def run(scenario: Scenario, out_dir: str | Path | None = None,
        dry_run: bool = False) -> RunManifest:
    """Execute one scenario and write its artifacts.

    ``out_dir`` overrides the scenario's own ``[output] directory``; one of
    the two must be set.  With ``dry_run=True`` only the manifest is
    written (outcome ``DryRun``) -- no numerics run.  Existing files are
    replaced atomically, never partially deleted.
    """
    target = out_dir if out_dir is not None else scenario.output_dir
    if target is None:
        raise ScenarioError("no output directory: pass out_dir or set [output] directory")
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()

    if dry_run:
        outcome_detail: dict[str, Any] = {"kind": "DryRun"}
        files: dict[str, str] = {}
        checks: dict[str, str] = {}
    else:
        initial = scenario.initial_profile()
        result = evolve(initial, scenario.solver, scenario.t_end)
        outcome_detail = _outcome_dict(result.outcome)
        texts = {
            "trajectory.csv": _trajectory_csv(result),
            "diagnostics.csv": _diagnostics_csv(result),
        }
        rows: list[tuple[str, str, str, str]] = []
        if scenario.checks["barrier"]:
            rows.append(_barrier_row(scenario, initial, result))
        if scenario.checks["comparison"]:
            rows.append(_comparison_row(scenario, initial, result))
        if scenario.checks["criteria"]:
            rows.append(_criteria_row(initial, result))
        if scenario.checks["decay"]:
            rows.append(_decay_row(result))
        texts["checks.csv"] = _checks_csv(rows)
        files = {}
        for name, text in texts.items():
            _write_atomic(out / name, text)
            files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        checks = {row[0]: row[1] for row in rows}

    finished = time.time()
    manifest = RunManifest(
        scenario=scenario.resolved(),
        version=__version__,
        started=started,
        finished=finished,
        outcome=outcome_detail["kind"],
        outcome_detail=outcome_detail,
        files=files,
        checks=checks,
        directory=str(out),
    )
    payload = {
        "artifact_version": manifest.version,
        "scenario": manifest.scenario,
        "outcome": manifest.outcome_detail,
        "checks": manifest.checks,
        "files": manifest.files,
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "finished_utc": datetime.fromtimestamp(finished, timezone.utc).isoformat(),
    }
    _write_atomic(out / "manifest.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return manifest


def load_grid(path: str | Path) -> dict[str, list[Any]]:
    """Read a parameter grid: a ``[grid]`` table of dotted keys to value lists.

    Example::

        [grid]
        "initial.epsilon" = [0.3, 0.6, 0.9]
        "model.d" = [3, 4, 5]
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise ScenarioError(f"grid file not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError(f"{path}: {err}") from err
    extra = [k for k in raw if k != "grid"]
    if extra or "grid" not in raw:
        raise ScenarioError("grid file needs exactly one [grid] table")
    grid = raw["grid"]
    for key, values in grid.items():
        if len(key.split(".")) != 2:
            raise ScenarioError(f"grid key {key!r} is not of the form section.key")
        if not isinstance(values, list):
            raise ScenarioError(f"grid.{key}: need a list of values")
    return dict(grid)


def _apply_overrides(raw: Mapping[str, Any],
                     overrides: Mapping[str, Any]) -> dict[str, Any]:
    out = {section: dict(table) for section, table in raw.items()}
    for dotted, value in overrides.items():
        section, key = dotted.split(".", 1)
        out.setdefault(section, {})[key] = value
    return out


def _sweep_task(payload: tuple[dict[str, Any], str, str]) -> RunManifest:
    raw, base_dir, out_sub = payload
    started = time.time()
    try:
        scenario = scenario_from_dict(raw, base_dir=Path(base_dir))
        return run(scenario, out_sub)
    except Exception as err:  # per-run failures recorded, sweep continues
        return RunManifest(
            scenario=dict(raw),
            version=__version__,
            started=started,
            finished=time.time(),
            outcome="Error",
            outcome_detail={"kind": "Error", "message": str(err)},
            files={},
            checks={},
            directory=out_sub,
        )


def sweep(template: str | Path, grid: Mapping[str, Sequence[Any]],
          out_dir: str | Path, workers: int | None = None) -> list[RunManifest]:
    """Run the cartesian product of ``grid`` over a template scenario.

    Each combination gets its own ``runNNN`` subdirectory; ``index.csv`` in
    ``out_dir`` maps parameters to outcomes.  Failures of individual runs
    are recorded in the index (outcome ``Error``) and do not stop the
    sweep.  ``workers`` defaults to the ``KSRADIAL_WORKERS`` environment
    variable (1 = run serially in-process).
    """
    template = Path(template)
    raw = tomllib.loads(template.read_text(encoding="utf-8"))

    keys = list(grid)
    for dotted in keys:
        if len(dotted.split(".")) != 2:
            raise ScenarioError(f"grid key {dotted!r} is not of the form section.key")
    combos = (
        [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]
        if keys
        else []
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(max(len(combos) - 1, 0))))
    names = [f"run{i:0{width}d}" for i in range(len(combos))]
    payloads = [
        (_apply_overrides(raw, combo), str(template.parent), str(out / name))
        for combo, name in zip(combos, names)
    ]

    if workers is None:
        workers = int(os.environ.get("KSRADIAL_WORKERS", "1"))
    if workers > 1 and payloads:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            manifests = list(pool.map(_sweep_task, payloads))
    else:
        manifests = [_sweep_task(p) for p in payloads]

    buf = io.StringIO()
    w = csv_writer(buf, lineterminator="\n")
    w.writerow(["run", *keys, "outcome", "detail", "checks"])
    for name, combo, manifest in zip(names, combos, manifests):
        det = manifest.outcome_detail
        if manifest.outcome == "ReachedHorizon":
            detail = f"t_end={_fmt(det['t_end'])}"
        elif manifest.outcome == "BlowupDetected":
            detail = f"t_star={_fmt(det['t_star'])} rule={det['trigger_rule']}"
        elif manifest.outcome == "Error":
            detail = det["message"]
        else:
            detail = det.get("reason", "")
        checks = ";".join(f"{k}={v}" for k, v in sorted(manifest.checks.items()))
        w.writerow([name, *(_fmt(combo[k]) for k in keys), manifest.outcome, detail, checks])
    _write_atomic(out / "index.csv", buf.getvalue())
    return manifests
