"""Parameter sweeps over the solver and simulator, and their comparison."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .core import PARAM_ALIASES, PARAM_FIELDS, NetworkParams
from .sim import DEFAULT_BURN_IN, DEFAULT_HORIZON, EstimateReport, SimConfig, run
from .solver import AnalyticalSolution, solve_all

OUTPUT_KINDS = ("F", "x1", "t_table", "c_vector", "v_vector")
CSV_COLUMNS = ("value", "F_analytical", "x1_analytical", "F_sim_mean", "F_sim_ci95",
               "x1_sim_mean", "x1_sim_ci95", "event_count", "wall_seconds")
BUILTIN_SPECS = ("fig4_n", "fig5_lambda_e", "fig6_p", "fig7_lambda_s", "fig8_lambda")

Solver = Callable[[NetworkParams], AnalyticalSolution]


class SpecError(ValueError):
    """A sweep spec that cannot be parsed or validated."""


class PointError(RuntimeError):
    def __init__(self, index: int, value, cause: BaseException):
        super().__init__(f"sweep point #{index} (value={value!r}) failed: {cause}")
        self.index = index
        self.value = value


@dataclass(frozen=True)
class SimSettings:
    horizon: float = DEFAULT_HORIZON
    seed: int = 0
    replications: int = 1
    burn_in: float = DEFAULT_BURN_IN

    @classmethod
    def from_dict(cls, data: dict) -> "SimSettings":
        unknown = set(data) - {"horizon", "seed", "replications", "burn_in"}
        if unknown:
            raise SpecError(f"unknown sim field(s): {sorted(unknown)}")
        return cls(horizon=float(data.get("horizon", DEFAULT_HORIZON)),
                   seed=int(data.get("seed", 0)),
                   replications=int(data.get("replications", 1)),
                   burn_in=float(data.get("burn_in", DEFAULT_BURN_IN)))

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "seed": self.seed,
                "replications": self.replications, "burn_in": self.burn_in}


@dataclass(frozen=True)
class SweepSpec:
    base: NetworkParams
    parameter: str
    values: tuple
    sim: SimSettings | None = None
    outputs: tuple[str, ...] = ("F", "x1")

    def __post_init__(self) -> None:
        param = PARAM_ALIASES.get(self.parameter, self.parameter)
        if param not in PARAM_FIELDS:
            raise SpecError(f"cannot sweep unknown parameter {self.parameter!r}")
        object.__setattr__(self, "parameter", param)
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.values:
            raise SpecError("sweep values must be nonempty")
        bad = set(self.outputs) - set(OUTPUT_KINDS)
        if bad:
            raise SpecError(f"unknown output(s): {sorted(bad)}")
        for value in self.values:
            try:
                self.point(value)
            except ValueError as exc:
                raise SpecError(f"{self.parameter}={value!r}: {exc}") from exc

    def point(self, value) -> NetworkParams:
        return self.base.with_value(self.parameter, value)

    def sim_config(self, params: NetworkParams) -> SimConfig | None:
        if self.sim is None:
            return None
        return SimConfig(params, horizon=self.sim.horizon, burn_in_fraction=self.sim.burn_in,
                         seed=self.sim.seed, replications=self.sim.replications)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        try:
            base = NetworkParams.from_dict(data["base"])
            sweep = data["sweep"]
            sim = data.get("sim")
            return cls(base=base, parameter=sweep["parameter"], values=sweep["values"],
                       sim=None if sim is None else SimSettings.from_dict(sim),
                       outputs=data.get("outputs", ["F", "x1"]))
        except SpecError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid sweep spec: {exc!r}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "SweepSpec":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path} is not valid JSON: {exc}") from exc

    def to_dict(self) -> dict:
        name = "lambda" if self.parameter == "lam" else self.parameter
        return {"base": self.base.to_dict(), "sweep": {"parameter": name, "values": list(self.values)},
                "sim": None if self.sim is None else self.sim.to_dict(),
                "outputs": list(self.outputs)}


def builtin_spec(name: str) -> SweepSpec:
    """One of the shipped figure-reproduction specs, e.g. ``"fig8_lambda"``."""
    if name not in BUILTIN_SPECS:
        raise SpecError(f"no builtin spec {name!r}; choose from {', '.join(BUILTIN_SPECS)}")
    text = resources.files("misgossip").joinpath("specs", f"{name}.json").read_text()
    return SweepSpec.from_dict(json.loads(text))


def resolve_spec(ref: str) -> SweepSpec:
    """Load a spec from a file path, falling back to a builtin name."""
    if not Path(ref).exists() and ref in BUILTIN_SPECS:
        return builtin_spec(ref)
    return SweepSpec.load(ref)


@dataclass
class SweepRow:
    value: float
    F_analytical: float
    x1_analytical: float
    F_sim_mean: float | None = None
    F_sim_ci95: float | None = None
    x1_sim_mean: float | None = None
    x1_sim_ci95: float | None = None
    event_count: int | None = None
    wall_seconds: float = 0.0
    solution: AnalyticalSolution | None = field(default=None, repr=False)
    report: EstimateReport | None = field(default=None, repr=False)

    @property
    def has_sim(self) -> bool:
        return self.report is not None


def _solve_point(spec: SweepSpec, index: int, solver: Solver) -> SweepRow:
    value = spec.values[index]
    start = time.perf_counter()
    try:
        params = spec.point(value)
        sol = solver(params)
        row = SweepRow(value=value, F_analytical=sol.F, x1_analytical=sol.x1, solution=sol)
        config = spec.sim_config(params)
        if config is not None:
            rep = run(config)
            row.report = rep
            row.F_sim_mean, row.F_sim_ci95 = rep.F_hat, rep.F_ci95
            row.x1_sim_mean, row.x1_sim_ci95 = rep.x1_hat, rep.x1_ci95
            row.event_count = rep.event_count
    except Exception as exc:
        raise PointError(index, value, exc) from exc
    row.wall_seconds = time.perf_counter() - start
    return row


def _solve_point_job(args):
    return _solve_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1, solver: Solver = solve_all) -> list[SweepRow]:
    """One row per swept value, in input order."""
    jobs = [(spec, i, solver) for i in range(len(spec.values))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_point_job, jobs))
    return [_solve_point_job(job) for job in jobs]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def rows_to_csv(rows: Sequence[SweepRow], timing: bool = False) -> str:
    """Fixed column order; wall-clock time is left blank unless ``timing``,
    so that the default output is byte-reproducible."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            _fmt(row.value), _fmt(row.F_analytical), _fmt(row.x1_analytical),
            _fmt(row.F_sim_mean), _fmt(row.F_sim_ci95), _fmt(row.x1_sim_mean),
            _fmt(row.x1_sim_ci95), _fmt(row.event_count),
            _fmt(row.wall_seconds) if timing else "",
        ])
    return buf.getvalue()


def _finite(x: float | None):
    return None if x is None or math.isinf(x) else x


def rows_to_json(spec: SweepSpec, rows: Sequence[SweepRow], timing: bool = False) -> str:
    out_rows = []
    for row in rows:
        sol = row.solution
        rec = {
            "value": row.value,
            "F_analytical": row.F_analytical,
            "x1_analytical": _finite(row.x1_analytical),
            "age_diverges": bool(sol.age_diverges) if sol else False,
            "F_sim_mean": row.F_sim_mean,
            "F_sim_ci95": row.F_sim_ci95,
            "x1_sim_mean": row.x1_sim_mean,
            "x1_sim_ci95": row.x1_sim_ci95,
            "event_count": row.event_count,
            "wall_seconds": row.wall_seconds if timing else None,
        }
        if sol is not None:
            if "c_vector" in spec.outputs:
                rec["c_vector"] = [float(x) for x in sol.c[1:]]
            if "v_vector" in spec.outputs:
                rec["v_vector"] = [_finite(float(x)) for x in sol.v[1:]]
            if "t_table" in spec.outputs:
                rec["t_table"] = [{"k": k, "m": m, "value": float(sol.t[k, m])}
                                  for k, m in sol.t_cells()]
        out_rows.append(rec)
    return json.dumps({"spec": spec.to_dict(), "rows": out_rows}, indent=2)


@dataclass(frozen=True)
class Tolerance:
    """Acceptance band: ``|sim - exact| <= max(floor, z * ci95)``.

    The F floor is absolute; the x1 floor is relative to the exact age.
    """

    z: float = 3.0
    F_floor: float = 0.02
    x1_rel_floor: float = 0.05


@dataclass(frozen=True)
class Verdict:
    value: float
    quantity: str
    exact: float
    sim: float
    ci95: float
    allowed: float
    passed: bool

    @property
    def error(self) -> float:
        return abs(self.sim - self.exact)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"{mark} value={self.value!r} {self.quantity}: sim={self.sim:.6g} "
                f"exact={self.exact:.6g} |err|={self.error:.3g} allowed={self.allowed:.3g}")


def check_rows(rows: Sequence[SweepRow], tol: Tolerance = Tolerance()) -> list[Verdict]:
    verdicts = []
    for row in rows:
        if not row.has_sim:
            raise ValueError("comparison needs simulation results at every point")
        checks = (
            ("F", row.F_analytical, row.F_sim_mean, row.F_sim_ci95, tol.F_floor),
            ("x1", row.x1_analytical, row.x1_sim_mean, row.x1_sim_ci95,
             tol.x1_rel_floor * row.x1_analytical),
        )
        for name, exact, sim, ci, floor in checks:
            allowed = max(floor, tol.z * ci)
            passed = math.isfinite(exact) and abs(sim - exact) <= allowed
            verdicts.append(Verdict(row.value, name, exact, sim, ci, allowed, passed))
    return verdicts


def compare(spec: SweepSpec, tol: Tolerance = Tolerance(), workers: int = 1,
            solver: Solver = solve_all) -> list[Verdict]:
    if spec.sim is None:
        raise SpecError("compare needs a spec with a 'sim' section")
    return check_rows(run_sweep(spec, workers=workers, solver=solver), tol)
