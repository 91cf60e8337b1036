"""Command line front end: config parsing, experiment dispatch and result files.

Usage::

    gpe2 <subcommand> --config FILE [--set section.key=value ...] --out DIR

Each run writes ``manifest.json`` (resolved config, versions, seed),
``result.json`` and, where the subcommand produces a time series or a
per-sample table, one or more CSV files. Exit status: 0 success, 1 invalid
input or inadmissible parameters, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import difflib
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dynamics import EvolutionState, conserved_check, evolve
from .gn_constant import ConvergenceError, gn_constant_quotient, gn_constant_shooting
from .grid import Grid, fft_workers
from .ground_state import (
    INITIAL_GUESSES,
    SolverOptions,
    equivalence_check,
    minimize_complex,
    minimize_real,
    orbit_factorize,
    sharp_cb,
    uniqueness_probe,
)
from .model import CONDITIONS, AdmissibilityError, MassConstraint, ModelParams, check_admissibility, well_posedness
from .stability_harness import PERTURBATIONS, EvolutionFailure, amplification_fit, perturb, stability_experiment

log = logging.getLogger("gpe2")

SUBCOMMANDS = ("groundstate", "evolve", "stability", "gnconst", "equivalence", "uniqueness", "check")


class ConfigError(ValueError):
    """Invalid configuration; the message names the section and key (or line)."""


# -- config sections ----------------------------------------------------------


@dataclass(frozen=True)
class GridSection:
    half_extent: float | None = None  # default 8 / sqrt(gamma)
    points: int = 64


@dataclass(frozen=True)
class SolverSection:
    tau: float | None = None
    max_iter: int = 100_000
    tol: float = 1e-10
    residual_tol: float = 1e-6
    initial: str = "gaussian"
    flow: str = "real"  # real | complex


@dataclass(frozen=True)
class DynamicsSection:
    dt: float | None = None  # default 1e-3 / gamma
    periods: float = 10.0  # T in trap periods 2 pi / gamma
    record_every: int = 100
    precision: str = "extended"
    initial: str = "groundstate"  # groundstate | perturbed
    perturbation: str = "random_smooth"
    size: float = 1e-2


@dataclass(frozen=True)
class ExperimentSection:
    seed: int = 0
    sizes: tuple[float, ...] = (0.0, 1e-3, 1e-2)
    epsilon: float = 0.1
    mode: str = "random_smooth"
    precision: str = "double"
    n_seeds: int = 5
    condition: str = "auto"
    gn_method: str = "shooting"  # shooting | quotient | both
    gn_tol: float = 1e-10
    gn_points: int = 256
    gn_half_extent: float = 12.0


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    masses: MassConstraint = field(default_factory=lambda: MassConstraint(1.0, 1.0))
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    dynamics: DynamicsSection = field(default_factory=DynamicsSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    def make_grid(self) -> Grid:
        L = self.grid.half_extent
        if L is None:
            L = 8.0 / math.sqrt(self.model.gamma)
        return Grid(self.model.dim, L, self.grid.points)

    def solver_options(self) -> SolverOptions:
        s = self.solver
        return SolverOptions(
            tau=s.tau,
            max_iter=s.max_iter,
            tol=s.tol,
            residual_tol=s.residual_tol,
            seed=self.experiment.seed,
            initial=s.initial,
        )

    @property
    def dt(self) -> float:
        return self.dynamics.dt if self.dynamics.dt is not None else 1e-3 / self.model.gamma

    @property
    def horizon(self) -> float:
        return self.dynamics.periods * 2.0 * math.pi / self.model.gamma

    def to_dict(self) -> dict:
        return {s: dataclasses.asdict(getattr(self, s)) for s in SECTIONS}


SECTIONS = {
    "model": ModelParams,
    "masses": MassConstraint,
    "grid": GridSection,
    "solver": SolverSection,
    "dynamics": DynamicsSection,
    "experiment": ExperimentSection,
}

CHOICES = {
    ("solver", "initial"): tuple(g for g in INITIAL_GUESSES if g != "provided"),
    ("solver", "flow"): ("real", "complex"),
    ("dynamics", "precision"): ("double", "extended"),
    ("dynamics", "initial"): ("groundstate", "perturbed"),
    ("dynamics", "perturbation"): PERTURBATIONS,
    ("experiment", "mode"): PERTURBATIONS,
    ("experiment", "precision"): ("double", "extended"),
    ("experiment", "condition"): ("auto",) + CONDITIONS,
    ("experiment", "gn_method"): ("shooting", "quotient", "both"),
}


def _field_types(cls) -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(cls)}


def _convert(section: str, key: str, typ: str, raw: str):
    raw = raw.strip()
    where = f"[{section}] {key}"
    try:
        if "None" in typ and raw.lower() in ("", "none", "auto"):
            return None
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
        if typ.startswith("tuple"):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {typ.split(' ')[0]}") from None


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str) -> RunConfig:
    """Parse sectioned ``key = value`` text into a validated config.

    Missing keys take defaults; unknown sections and keys are rejected with
    the closest valid name suggested.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source="<config>")
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    parts = {}
    for section in cp.sections():
        if section not in SECTIONS:
            hint = difflib.get_close_matches(section, list(SECTIONS), n=1)
            msg = f"unknown section [{section}]"
            raise ConfigError(msg + (f"; did you mean [{hint[0]}]?" if hint else ""))
        types = _field_types(SECTIONS[section])
        values = {}
        for key, raw in cp.items(section):
            if key not in types:
                hint = difflib.get_close_matches(key, list(types), n=1)
                msg = f"unknown key {key!r} in [{section}]"
                raise ConfigError(msg + (f"; did you mean {hint[0]!r}?" if hint else ""))
            values[key] = _convert(section, key, types[key], raw)
        parts[section] = values
    return build_config(parts)


def build_config(parts: dict[str, dict]) -> RunConfig:
    """Construct and validate sections, naming the offending field on failure."""
    built = {}
    for section, cls in SECTIONS.items():
        values = parts.get(section, {})
        for key, v in values.items():
            choices = CHOICES.get((section, key))
            if choices is not None and v not in choices:
                raise ConfigError(f"[{section}] {key}: {v!r} is not one of {list(choices)}")
        if section == "masses":
            values = {"c1": 1.0, "c2": 1.0, **values}
        try:
            built[section] = cls(**values)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from None
    cfg = RunConfig(**built)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    def need(ok: bool, where: str, msg: str) -> None:
        if not ok:
            raise ConfigError(f"{where}: {msg}")

    g, s, d, e = cfg.grid, cfg.solver, cfg.dynamics, cfg.experiment
    need(g.half_extent is None or g.half_extent > 0, "[grid] half_extent", "must be positive")
    need(g.points >= 8 and g.points & (g.points - 1) == 0, "[grid] points", "must be a power of two >= 8")
    need(s.tau is None or s.tau > 0, "[solver] tau", "must be positive")
    need(s.max_iter >= 1, "[solver] max_iter", "must be at least 1")
    need(s.tol > 0, "[solver] tol", "must be positive")
    need(s.residual_tol > 0, "[solver] residual_tol", "must be positive")
    need(d.dt is None or d.dt > 0, "[dynamics] dt", "must be positive")
    need(d.periods > 0, "[dynamics] periods", "must be positive")
    need(d.record_every >= 1, "[dynamics] record_every", "must be at least 1")
    need(d.size >= 0, "[dynamics] size", "must be nonnegative")
    need(len(e.sizes) > 0 and all(x >= 0 for x in e.sizes), "[experiment] sizes", "need nonnegative values")
    need(e.epsilon > 0, "[experiment] epsilon", "must be positive")
    need(e.n_seeds >= 1, "[experiment] n_seeds", "must be at least 1")
    need(e.seed >= 0, "[experiment] seed", "must be nonnegative")
    need(0 < e.gn_tol <= 1e-3, "[experiment] gn_tol", "must lie in (0, 1e-3]")
    need(e.gn_points >= 8 and e.gn_points & (e.gn_points - 1) == 0, "[experiment] gn_points", "must be a power of two")
    need(e.gn_half_extent > 0, "[experiment] gn_half_extent", "must be positive")
    try:
        cfg.make_grid()
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from None


def format_config(cfg: RunConfig) -> str:
    """Full config text; ``parse_config(format_config(c)) == c``."""
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for key, v in dataclasses.asdict(getattr(cfg, section)).items():
            lines.append(f"{key} = {_format_value(v)}")
        lines.append("")
    return "\n".join(lines)


def apply_overrides(text: str, overrides: list[str]) -> RunConfig:
    """Parse ``text`` with ``section.key=value`` overrides layered on top."""
    cfg = parse_config(text)
    if not overrides:
        return cfg
    parts = {s: dataclasses.asdict(getattr(cfg, s)) for s in SECTIONS}
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        lhs, raw = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if section not in SECTIONS:
            hint = difflib.get_close_matches(section, list(SECTIONS), n=1)
            raise ConfigError(f"--set: unknown section {section!r}" + (f"; did you mean {hint[0]!r}?" if hint else ""))
        types = _field_types(SECTIONS[section])
        if key not in types:
            hint = difflib.get_close_matches(key, list(types), n=1)
            raise ConfigError(f"--set: unknown key {key!r} in [{section}]" + (f"; did you mean {hint[0]!r}?" if hint else ""))
        parts[section][key] = _convert(section, key, types[key], raw)
    return build_config(parts)


# -- output -------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def emit_series(path: Path, columns: dict[str, list]) -> Path:
    """Write equal-length columns as CSV with 17 significant digits.

    Empty or ragged data raises ``ValueError`` before the file is created.
    """
    names = list(columns)
    if not names:
        raise ValueError("no columns to write")
    n = len(columns[names[0]])
    if n == 0:
        raise ValueError("empty series; nothing written")
    for k in names:
        if len(columns[k]) != n:
            raise ValueError(f"column {k!r} has {len(columns[k])} rows, expected {n}")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow(["%.17g" % float(columns[k][i]) for k in names])
    return path


def manifest(cfg: RunConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "config": cfg.to_dict(),
        "config_text": format_config(cfg),
        "seed": cfg.experiment.seed,
        "threads": fft_workers(),
        "versions": {
            "gpe2": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


# -- subcommands ----------------------------------------------------------------


def _cb_for(cfg: RunConfig) -> float | None:
    return sharp_cb() if cfg.model.dim == 2 else None


def cmd_check(cfg: RunConfig, out: Path) -> int:
    cb = _cb_for(cfg)
    cond = cfg.experiment.condition
    if cond == "auto":
        report = well_posedness(cfg.model, cfg.masses, cb)
    else:
        try:
            report = check_admissibility(cfg.model, cfg.masses, cb, cond)
        except ValueError as exc:
            raise ConfigError(f"[experiment] condition: {exc}") from None
    a2 = check_admissibility(cfg.model, cfg.masses, cb, "A2").to_dict()
    write_json(out / "result.json", {"cb": cb, "report": report.to_dict(), "uniqueness_condition": a2})
    return 0 if report.admissible else 1


def _solve(cfg: RunConfig):
    grid = cfg.make_grid()
    solver = minimize_complex if cfg.solver.flow == "complex" else minimize_real
    return solver(cfg.model, cfg.masses, grid, cfg.solver_options())


def cmd_groundstate(cfg: RunConfig, out: Path) -> int:
    res = _solve(cfg)
    write_json(out / "result.json", {"flow": cfg.solver.flow, **res.summary()})
    u1, u2 = res.pair
    np.savez(out / "groundstate.npz", u1=u1, u2=u2, half_extent=res.pair.grid.half_extent)
    return 0 if res.converged else 2


def cmd_evolve(cfg: RunConfig, out: Path) -> int:
    gs = minimize_real(cfg.model, cfg.masses, cfg.make_grid(), cfg.solver_options())
    if not gs.converged:
        write_json(out / "result.json", {"error": "ground state did not converge", **gs.summary()})
        return 2
    d = cfg.dynamics
    psi0 = gs.pair
    if d.initial == "perturbed":
        psi0 = perturb(gs.pair, d.perturbation, d.size, cfg.experiment.seed)
    traj = evolve(
        EvolutionState(0.0, psi0), cfg.model, cfg.horizon, cfg.dt, d.record_every, precision=d.precision
    )
    emit_series(out / "trajectory.csv", traj.columns())
    result = {"T": cfg.horizon, "dt": cfg.dt, "steps": traj.final.step, "aborted": traj.aborted}
    result.update(conserved_check(traj))
    write_json(out / "result.json", result)
    return 2 if traj.aborted else 0


def cmd_stability(cfg: RunConfig, out: Path) -> int:
    e = cfg.experiment
    try:
        reports = stability_experiment(
            cfg.model,
            cfg.masses,
            list(e.sizes),
            cfg.horizon,
            cfg.dt,
            e.epsilon,
            cfg.make_grid(),
            mode=e.mode,
            seed=e.seed,
            record_every=cfg.dynamics.record_every,
            opts=cfg.solver_options(),
            precision=e.precision,
        )
        status = 0
    except EvolutionFailure as exc:
        reports, status = exc.reports, 2
    rows = {k: [] for k in ("size", "t", "d", "mass1", "mass2", "mass_total", "energy")}
    for r in reports:
        cols = r.columns()
        rows["size"].extend([r.size] * len(r.times))
        for k, v in cols.items():
            rows[k].extend(v)
    for i, r in enumerate(reports):
        write_json(out / f"report_{i:02d}.json", r.to_dict())
    emit_series(out / "distance.csv", rows)
    write_json(
        out / "result.json",
        {
            "runs": [r.to_dict() for r in reports],
            "amplification_fit": amplification_fit(reports),
            "all_pass": all(r.verdict for r in reports),
        },
    )
    return status


def cmd_gnconst(cfg: RunConfig, out: Path) -> int:
    e = cfg.experiment
    result = {}
    if e.gn_method in ("shooting", "both"):
        result["shooting"] = dataclasses.asdict(gn_constant_shooting(e.gn_tol))
    if e.gn_method in ("quotient", "both"):
        grid = Grid(2, e.gn_half_extent, e.gn_points)
        result["quotient"] = dataclasses.asdict(gn_constant_quotient(grid))
    if "shooting" in result and "quotient" in result:
        a, b = result["shooting"]["value"], result["quotient"]["value"]
        result["relative_difference"] = abs(a - b) / a
    result["gaussian_quotient"] = 1.0 / (2.0 * math.pi)
    write_json(out / "result.json", result)
    return 0


def cmd_equivalence(cfg: RunConfig, out: Path) -> int:
    grid = cfg.make_grid()
    opts = cfg.solver_options()
    rep = equivalence_check(cfg.model, cfg.masses, grid, opts)
    fac = orbit_factorize(rep.complex.pair, rep.real.pair)
    data = rep.to_dict()
    data["factorization"] = {
        "theta1": fac.theta1,
        "theta2": fac.theta2,
        "factor_residual": fac.factor_residual,
        "relative_residual": fac.factor_residual / rep.real.pair.sigma_norm(),
        "max_phase_deviation": fac.max_phase_deviation,
    }
    write_json(out / "result.json", data)
    return 0 if rep.passed else 2


def cmd_uniqueness(cfg: RunConfig, out: Path) -> int:
    rep = uniqueness_probe(cfg.model, cfg.masses, cfg.make_grid(), cfg.experiment.n_seeds, cfg.solver_options())
    write_json(out / "result.json", rep.to_dict())
    return 0 if rep.n_converged >= 2 else 2


COMMANDS = {
    "groundstate": cmd_groundstate,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "gnconst": cmd_gnconst,
    "equivalence": cmd_equivalence,
    "uniqueness": cmd_uniqueness,
    "check": cmd_check,
}


def run(subcommand: str, cfg: RunConfig, out: Path) -> int:
    """Run one subcommand, writing the manifest first; returns the exit status."""
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; expected one of {list(SUBCOMMANDS)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", manifest(cfg, subcommand))
    try:
        return COMMANDS[subcommand](cfg, out)
    except (ConfigError, AdmissibilityError) as exc:
        log.error("%s", exc)
        write_json(out / "result.json", {"error": str(exc), "kind": "validation"})
        return 1
    except (FloatingPointError, ConvergenceError, RuntimeError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        write_json(out / "result.json", {"error": str(exc), "kind": "numerical"})
        return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpe2", description="Two-component trapped condensates with Rabi coupling.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, type=Path, help="sectioned key = value file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"gpe2: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = apply_overrides(text, args.overrides)
    except ConfigError as exc:
        print(f"gpe2: {exc}", file=sys.stderr)
        return 1
    return run(args.subcommand, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
