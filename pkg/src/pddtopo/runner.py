"""Config-driven pipeline: one paired build, then moments, sensitivities, reliability and CDF."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import benchmarks, moments, pdd, reliability
from .randvars import RandomVector, from_spec
from .topo import PerforationSpec

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid problem configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass(frozen=True)
class ThresholdSpec:
    threshold: float
    direction: str = "above"


@dataclass(frozen=True)
class ProblemConfig:
    oracle: str
    oracle_params: dict = field(default_factory=dict)
    variables: Any = "preset"
    S: int = 2
    m: int = 3
    R: int | None = None
    n_q: int | None = None
    reference_point: Any = "mean"
    perforation_label: str = "center"
    perforation_center: tuple = (0.0, 0.0)
    rho: float = 0.05
    n: int = 2
    limit_states: tuple = ()
    L: int = 1_000_000
    seed: int = 0
    workers: int = 1
    cdf_grid: Any = None
    references: Any = "auto"
    output_dir: str | None = None
    sweep_S: tuple = ()
    sweep_m: tuple = ()

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a mapping")
        oracle = d.get("oracle")
        if isinstance(oracle, str):
            oracle = {"name": oracle}
        if not isinstance(oracle, dict) or "name" not in oracle:
            raise ConfigError("oracle.name", "missing oracle name")
        trunc = d.get("truncation", {}) or {}
        scheme = d.get("scheme", {}) or {}
        perf = d.get("perforation", {}) or {}
        rel = d.get("reliability", {}) or {}
        out = d.get("output", {}) or {}
        sweep = d.get("sweep", {}) or {}
        try:
            limit_states = tuple(
                ThresholdSpec(float(ls["threshold"]), str(ls.get("direction", "above")))
                for ls in rel.get("limit_states", ()))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("reliability.limit_states", f"malformed entry ({exc})") from None
        cfg = cls(
            oracle=str(oracle["name"]),
            oracle_params=dict(oracle.get("params", {}) or {}),
            variables=d.get("variables", "preset"),
            S=trunc.get("S", 2),
            m=trunc.get("m", 3),
            R=scheme.get("R"),
            n_q=scheme.get("n_q"),
            reference_point=scheme.get("reference", "mean"),
            perforation_label=str(perf.get("label", "center")),
            perforation_center=tuple(perf.get("center", (0.0, 0.0))),
            rho=perf.get("rho", 0.05),
            n=perf.get("n", 2),
            limit_states=limit_states,
            L=rel.get("L", 1_000_000),
            seed=rel.get("seed", 0),
            workers=d.get("workers", 1),
            cdf_grid=d.get("cdf", {}).get("grid") if isinstance(d.get("cdf"), dict) else None,
            references=d.get("references", "auto"),
            output_dir=out.get("dir"),
            sweep_S=tuple(sweep.get("S", ())),
            sweep_m=tuple(sweep.get("m", ())),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ProblemConfig":
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError("<file>", f"not valid YAML ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["limit_states"] = [asdict(ls) for ls in self.limit_states]
        d["perforation_center"] = list(self.perforation_center)
        d["sweep_S"], d["sweep_m"] = list(self.sweep_S), list(self.sweep_m)
        return d

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # -- validation --------------------------------------------------------

    def validate(self):
        if self.oracle not in benchmarks.ORACLES:
            raise ConfigError("oracle.name", f"unknown oracle {self.oracle!r}; known: {sorted(benchmarks.ORACLES)}")
        for name in ("S", "m", "L", "seed", "n", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(name, f"must be an integer, got {v!r}")
        if self.m < 1:
            raise ConfigError("truncation.m", "must be at least 1")
        if self.L < 1:
            raise ConfigError("reliability.L", f"must be at least 1, got {self.L}")
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        if not (isinstance(self.rho, (int, float)) and self.rho > 0):
            raise ConfigError("perforation.rho", f"must be positive, got {self.rho!r}")
        if self.n not in (2, 3):
            raise ConfigError("perforation.n", "must be 2 or 3")
        for i, ls in enumerate(self.limit_states):
            if ls.direction not in ("above", "below"):
                raise ConfigError(f"reliability.limit_states[{i}].direction", "must be 'above' or 'below'")
            if not math.isfinite(ls.threshold):
                raise ConfigError(f"reliability.limit_states[{i}].threshold", "must be finite")
        N = self.input_vector().dim
        if not 1 <= self.S <= N:
            raise ConfigError("truncation.S", f"must lie in [1, {N}], got {self.S}")
        R = self.S if self.R is None else self.R
        if not isinstance(R, int) or not self.S <= R <= N:
            raise ConfigError("scheme.R", f"need S <= R <= N ({self.S} <= R <= {N}), got {R!r}")
        if self.n_q is not None and (not isinstance(self.n_q, int) or self.n_q < 1):
            raise ConfigError("scheme.n_q", "must be a positive integer")
        if self.reference_point != "mean":
            c = self.reference_point
            if not isinstance(c, (list, tuple)) or len(c) != N:
                raise ConfigError("scheme.reference", f"must be 'mean' or a list of {N} numbers")
        for s in self.sweep_S:
            if not isinstance(s, int) or not 1 <= s <= N:
                raise ConfigError("sweep.S", f"entries must be integers in [1, {N}]")
        for m in self.sweep_m:
            if not isinstance(m, int) or m < 1:
                raise ConfigError("sweep.m", "entries must be positive integers")

    # -- derived objects ---------------------------------------------------

    def make_oracle(self):
        try:
            return benchmarks.make_oracle(self.oracle, **self.oracle_params)
        except TypeError as exc:
            raise ConfigError("oracle.params", str(exc)) from None

    def input_vector(self) -> RandomVector:
        oracle = self.make_oracle()
        if self.variables == "preset":
            rv = oracle.default_inputs()
        elif isinstance(self.variables, list):
            comps = []
            for i, entry in enumerate(self.variables):
                try:
                    entry = dict(entry)
                    comps.append(from_spec(entry.pop("kind"), **entry))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"variables[{i}]", f"invalid variable ({exc})") from None
            rv = RandomVector(tuple(comps))
        else:
            raise ConfigError("variables", "must be 'preset' or a list of variable entries")
        if rv.dim != oracle.n_dim:
            raise ConfigError("variables", f"oracle {self.oracle} takes {oracle.n_dim} inputs, got {rv.dim}")
        return rv

    def scheme(self, rv: RandomVector, S: int, m: int) -> pdd.RddScheme:
        ref = None if self.reference_point == "mean" else np.asarray(self.reference_point, dtype=float)
        R = S if self.R is None else max(self.R, S)
        return pdd.default_scheme(rv, S, m, R, self.n_q, ref)


# -- reports --------------------------------------------------------------------


def _row(quantity: str, value: float, ref: float | None) -> dict:
    row = {"quantity": quantity, "value": float(value), "reference": None, "rel_error": None}
    if ref is not None:
        row["reference"] = float(ref)
        row["rel_error"] = abs(value - ref) / abs(ref) if ref != 0 else None
    return row


@dataclass
class RunReport:
    config_hash: str
    seed: int
    S: int
    m: int
    n_evaluations: int
    moments: list
    sensitivities: list
    reliability: list
    cdf: list
    perforation: dict
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        d["cdf"] = [tuple(p) for p in d["cdf"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def without_timing(self) -> dict:
        d = self.to_dict()
        d.pop("wall_time")
        return d


def _references(cfg: ProblemConfig, oracle, rv: RandomVector):
    if cfg.references in (None, "none"):
        return None
    if isinstance(cfg.references, dict):
        return benchmarks.ReferenceValues(**{k: cfg.references.get(k) for k in
                                            ("m1", "m2", "m3", "dt_m1", "dt_m2", "dt_m3")},
                                         reliability=cfg.references.get("reliability", {}))
    if cfg.oracle == "disk_uniform":
        if rv != oracle.default_inputs():
            return None
        thresholds = [ls.threshold for ls in cfg.limit_states if ls.direction == "above"]
        return benchmarks.reference_values_example1(oracle.nu, thresholds)
    return oracle.reference(rv)


def _cdf_grid(spec, values_hint: tuple[float, float]) -> np.ndarray | None:
    if spec is None:
        return None
    if isinstance(spec, dict):
        lo = spec.get("start", values_hint[0])
        hi = spec.get("stop", values_hint[1])
        return np.linspace(lo, hi, int(spec.get("num", 101)))
    return np.asarray(spec, dtype=float)


def run_truncation(cfg: ProblemConfig, S: int, m: int) -> RunReport:
    t0 = time.perf_counter()
    oracle = cfg.make_oracle()
    rv = cfg.input_vector()
    perf = PerforationSpec(tuple(cfg.perforation_center), cfg.rho, cfg.n)
    y, z, info = pdd.paired_build(oracle, rv, S, m, cfg.scheme(rv, S, m))
    ref = _references(cfg, oracle, rv)
    mr, sr = moments.moments(y), moments.sensitivities(y, z)

    def r(name):
        return None if ref is None else getattr(ref, name)

    mom_rows = [_row("m1", mr.m1, r("m1")), _row("m2", mr.m2, r("m2")), _row("m3", mr.m3, r("m3"))]
    sens_rows = [_row("dt_m1", sr.dt_m1, r("dt_m1")), _row("dt_m2", sr.dt_m2, r("dt_m2")),
                 _row("dt_m3", sr.dt_m3, r("dt_m3"))]

    rel_rows = []
    for ls in cfg.limit_states:
        state = reliability.LimitState(ls.threshold, ls.direction)
        fd = reliability.dt_failure_probability(y, z, state, rv, perf.rho, perf.n, cfg.L, cfg.seed,
                                                workers=cfg.workers)
        rref = {} if ref is None else ref.reliability.get(ls.threshold, {})
        if ls.direction != "above":
            rref = {}
        row = {"threshold": ls.threshold, "direction": ls.direction, "L": cfg.L, "seed": cfg.seed,
               "pf": fd.pf, "pf_stderr": math.sqrt(fd.pf * (1 - fd.pf) / cfg.L),
               "dt_pf": fd.estimate, "dt_pf_stderr": fd.stderr}
        for key in ("pf", "dt_pf"):
            rv_ref = rref.get(key)
            row[f"{key}_reference"] = rv_ref
            row[f"{key}_rel_error"] = None if rv_ref in (None, 0) else abs(row[key] - rv_ref) / abs(rv_ref)
        rel_rows.append(row)

    cdf = []
    grid = _cdf_grid(cfg.cdf_grid, (mr.m1 - 4 * math.sqrt(max(mr.variance, 0)), mr.m1 + 4 * math.sqrt(max(mr.variance, 0))))
    if grid is not None:
        cdf = [tuple(p) for p in reliability.cdf_curve(y, rv, cfg.L, cfg.seed, grid, cfg.workers)]

    perf_d = {"label": cfg.perforation_label, "center": list(perf.center), "rho": perf.rho, "n": perf.n}
    return RunReport(cfg.hash(), cfg.seed, S, m, info.n_evaluations, mom_rows, sens_rows, rel_rows, cdf,
                     perf_d, time.perf_counter() - t0)


def run(cfg: ProblemConfig) -> RunReport:
    report = run_truncation(cfg, cfg.S, cfg.m)
    if cfg.output_dir:
        write_outputs(report, Path(cfg.output_dir))
    return report


def sweep_grid(cfg: ProblemConfig) -> list[tuple[int, int]]:
    cells = [(s, m) for s in cfg.sweep_S for m in cfg.sweep_m]
    unique = sorted(set(cells))
    if len(unique) != len(cells):
        log.warning("sweep grid has duplicate (S, m) cells; running each once")
    return unique


def sweep(cfg: ProblemConfig) -> list[RunReport]:
    reports = [run_truncation(cfg, s, m) for s, m in sweep_grid(cfg)]
    if cfg.output_dir:
        write_sweep(reports, Path(cfg.output_dir))
    return reports


# -- output files -----------------------------------------------------------------


def _write_csv(path: Path, rows: list[dict], columns: list[str]):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


_MOMENT_COLS = ["config_hash", "seed", "S", "m", "quantity", "value", "reference", "rel_error"]
_REL_COLS = ["config_hash", "seed", "S", "m", "threshold", "direction", "L", "pf", "pf_stderr",
             "pf_reference", "pf_rel_error", "dt_pf", "dt_pf_stderr", "dt_pf_reference", "dt_pf_rel_error"]


def _tagged(report: RunReport, rows: list[dict]) -> list[dict]:
    tag = {"config_hash": report.config_hash, "seed": report.seed, "S": report.S, "m": report.m}
    return [{**tag, **r} for r in rows]


def write_outputs(report: RunReport, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    _write_csv(out / "moments.csv", _tagged(report, report.moments), _MOMENT_COLS)
    _write_csv(out / "sensitivities.csv", _tagged(report, report.sensitivities), _MOMENT_COLS)
    _write_csv(out / "reliability.csv", _tagged(report, report.reliability), _REL_COLS)
    _write_csv(out / "cdf.csv", [{"y": y, "cdf": f} for y, f in report.cdf], ["y", "cdf"])


def write_sweep(reports: list[RunReport], out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n")
    _write_csv(out / "moments.csv", [row for r in reports for row in _tagged(r, r.moments)], _MOMENT_COLS)
    _write_csv(out / "sensitivities.csv", [row for r in reports for row in _tagged(r, r.sensitivities)], _MOMENT_COLS)
    _write_csv(out / "reliability.csv", [row for r in reports for row in _tagged(r, r.reliability)], _REL_COLS)
    cdf_rows = [{"config_hash": r.config_hash, "S": r.S, "m": r.m, "y": y, "cdf": f} for r in reports for y, f in r.cdf]
    _write_csv(out / "cdf.csv", cdf_rows, ["config_hash", "S", "m", "y", "cdf"])


def reference_table(name: str, **params) -> dict:
    oracle = benchmarks.make_oracle(name, **params)
    return oracle.reference().to_dict()
