"""Per-dimension bounds, table scans and comparison against tabulated values.

A dimension n is handled by solving the three-point SDP for every admissible
angle 1/(2k-1), flooring each optimum, and taking the maximum. Work items are
(n, angle) pairs so that a scan can be spread over processes; results are
merged by sorted key, which keeps the output independent of scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, TextIO

from eqlines.bounds import candidate_angles, gerzon, lemmens_seidel_third
from eqlines.numerics import RationalLike, as_rational
from eqlines.sdp_model import build_equiangular_sdp, with_objective_cap
from eqlines.sdp_solver import SolverSettings, solve
from eqlines.threepoint import DEFAULT_P

log = logging.getLogger(__name__)

FORMATS = ("csv", "json")
CSV_COLUMNS = ("n", "angle", "sdp_raw", "per_angle_bound", "max_bound", "max_angle",
               "gerzon", "improved", "final")
THIRD = Fraction(1, 3)
TABLE3_ROWS = range(22, 140)


@dataclass(frozen=True)
class RunConfig:
    p: int = DEFAULT_P
    settings: SolverSettings = field(default_factory=SolverSettings)
    format: str = "csv"
    jobs: int = 1
    floor_eps: float = 1e-6

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if not self.floor_eps >= 0:
            raise ValueError("floor_eps must be >= 0")


class SolverFailure(RuntimeError):
    """The SDP for (n, a) did not reach an optimal status."""

    def __init__(self, n: int, a: Fraction, status: str, detail: str = ""):
        self.n, self.a, self.status = n, a, status
        msg = f"SDP for n={n}, a={a} ended with status {status!r}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass(frozen=True)
class AngleEntry:
    a: Fraction
    sdp_raw: float
    per_angle_bound: int
    method: str


@dataclass(frozen=True)
class BoundReport:
    n: int
    entries: tuple[AngleEntry, ...]
    max_bound: int
    max_angle: Fraction
    gerzon: int
    final_bound: int
    improved_over_gerzon: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "entries": [{"angle": _angle_str(e.a), "sdp_raw": e.sdp_raw,
                         "per_angle_bound": e.per_angle_bound, "method": e.method}
                        for e in self.entries],
            "max_bound": self.max_bound,
            "max_angle": _angle_str(self.max_angle),
            "gerzon": self.gerzon,
            "final_bound": self.final_bound,
            "improved_over_gerzon": self.improved_over_gerzon,
        }


@dataclass(frozen=True)
class KnownValuesEntry:
    n: int
    lower: int
    upper: int
    angle_inverse: tuple[int, ...]
    angle_text: str = ""
    sdp_bound: Optional[int] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"n={self.n}: lower {self.lower} > upper {self.upper}")


def _angle_str(a: Fraction) -> str:
    return f"{a.numerator}/{a.denominator}"


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 15:
        raise ValueError(f"dimension must be an integer >= 15, got {n!r}")


# --- single (n, a) items -------------------------------------------------------


def _solve_item(n: int, a: Fraction, p: int, settings: SolverSettings) -> tuple[float, str]:
    prob = build_equiangular_sdp(n, a, p)
    sol = solve(prob, settings)
    if not sol.optimal and a == THIRD and n >= 16:
        # For a = 1/3 only min(2(n-1), SDP) is needed. From n = 57 on the SDP is
        # huge or unbounded and ill-posed; capping the objective at 2n - 1
        # keeps it bounded without changing that minimum.
        cap = 2 * n - 1
        log.info("n=%d, a=1/3: %s; re-solving with objective <= %d", n, sol.status, cap)
        sol = solve(with_objective_cap(prob, cap), settings)
        if sol.optimal:
            return sol.primal_obj, "capped"
    if not sol.optimal:
        raise SolverFailure(n, a, sol.status,
                            f"primal {sol.primal_obj:.9g}, dual {sol.dual_obj:.9g}, gap {sol.gap:.3g}")
    return sol.primal_obj, sol.status


def _finish(n: int, a: Fraction, sdp_raw: float, cfg: RunConfig) -> tuple[int, str]:
    sdp_bound = math.floor(sdp_raw + cfg.floor_eps)
    if a == THIRD and n >= 16:
        ls = lemmens_seidel_third(n)
        if ls < sdp_bound:
            return ls, "ls_third"
    return sdp_bound, "sdp"


def bound_for_angle(n: int, a: RationalLike, cfg: RunConfig = RunConfig()) -> tuple[int, str, float]:
    """Integer upper bound on equiangular sets in R^n with inner products +-a.

    Returns (bound, method tag, raw SDP optimum). For a = 1/3 and n >= 16 the
    SDP value is capped by 2(n - 1). If that SDP does not solve (it is unbounded
    or badly scaled from about n = 57), the objective is capped at 2n - 1 and
    the capped optimum is returned as the raw value. Raises :class:`SolverFailure` when the
    solver does not report an optimal status.
    """
    _check_n(n)
    a = as_rational(a)
    if not 0 < a < 1:
        raise ValueError(f"angle cosine must lie in (0, 1), got {a}")
    raw, _ = _solve_item(n, a, cfg.p, cfg.settings)
    bound, method = _finish(n, a, raw, cfg)
    return bound, method, raw


def _worker(item):
    n, a, p, settings = item
    try:
        return _solve_item(n, a, p, settings)[0], None
    except SolverFailure as exc:
        return None, str(exc)


def _solve_many(keys: Iterable[tuple[int, Fraction]], cfg: RunConfig) -> dict:
    """Raw optimum or error message for each (n, a), keyed and sorted."""
    keys = sorted(set(keys))
    items = [(n, a, cfg.p, cfg.settings) for n, a in keys]
    if cfg.jobs == 1 or len(items) < 2:
        results = map(_worker, items)
        return dict(zip(keys, results))
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return dict(zip(keys, pool.map(_worker, items)))


def _assemble(n: int, results: dict, cfg: RunConfig) -> BoundReport:
    entries = []
    for cand in candidate_angles(n):
        raw, err = results[(n, cand.a)]
        if err is not None:
            raise SolverFailure(n, cand.a, "failed", err)
        bound, method = _finish(n, cand.a, raw, cfg)
        entries.append(AngleEntry(cand.a, raw, bound, method))
    # entries run in increasing denominator, so the first maximum wins ties
    best = max(entries, key=lambda e: e.per_angle_bound)
    g = gerzon(n)
    final = max(2 * n + 1, best.per_angle_bound)
    return BoundReport(n, tuple(entries), best.per_angle_bound, best.a, g, final, final < g)


def bound_for_dimension(n: int, cfg: RunConfig = RunConfig()) -> BoundReport:
    """Upper bound on the number of equiangular lines in R^n, n >= 15."""
    _check_n(n)
    results = _solve_many(((n, c.a) for c in candidate_angles(n)), cfg)
    return _assemble(n, results, cfg)


# --- scans ---------------------------------------------------------------------


def _csv_rows(rep: BoundReport) -> list[list[str]]:
    return [[str(rep.n), _angle_str(e.a), f"{e.sdp_raw:.6f}", str(e.per_angle_bound),
             str(rep.max_bound), _angle_str(rep.max_angle), str(rep.gerzon),
             str(rep.improved_over_gerzon).lower(), str(rep.final_bound)]
            for e in rep.entries]


def _csv_error_rows(n: int, results: dict, cfg: RunConfig) -> list[list[str]]:
    rows = []
    for cand in candidate_angles(n):
        raw, err = results[(n, cand.a)]
        if err is None:
            bound, _ = _finish(n, cand.a, raw, cfg)
            rows.append([str(n), _angle_str(cand.a), f"{raw:.6f}", str(bound)]
                        + ["error", "error", str(gerzon(n)), "error", "error"])
        else:
            rows.append([str(n), _angle_str(cand.a), "error", "error", "error", "error",
                         str(gerzon(n)), "error", "error"])
    return rows


@dataclass(frozen=True)
class ScanResult:
    reports: tuple[BoundReport, ...]
    errors: tuple[tuple[int, str], ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def table_scan(n_min: int, n_max: int, cfg: RunConfig = RunConfig(),
               out: Optional[TextIO] = None) -> ScanResult:
    """Bound every dimension in [n_min, n_max] and write the table to ``out``.

    Rows are ordered by n. A dimension whose solves fail is written as rows
    marked ``error`` and recorded in the result; the scan carries on.
    """
    _check_n(n_min)
    if n_min > n_max:
        raise ValueError(f"empty range: from {n_min} > to {n_max}")
    dims = range(n_min, n_max + 1)
    results = _solve_many(((n, c.a) for n in dims for c in candidate_angles(n)), cfg)

    reports, errors, csv_rows, json_objs = [], [], [], []
    for n in dims:
        try:
            rep = _assemble(n, results, cfg)
        except SolverFailure as exc:
            log.warning("n=%d: %s", n, exc)
            errors.append((n, str(exc)))
            csv_rows.extend(_csv_error_rows(n, results, cfg))
            json_objs.append({"n": n, "error": str(exc)})
            continue
        reports.append(rep)
        csv_rows.extend(_csv_rows(rep))
        json_objs.append(rep.to_dict())

    if out is not None:
        out.write(render_rows(csv_rows, json_objs, cfg.format))
        out.flush()
    return ScanResult(tuple(reports), tuple(errors))


def render_rows(csv_rows, json_objs, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(json_objs, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(csv_rows)
    return buf.getvalue()


def render_report(rep: BoundReport, fmt: str = "csv") -> str:
    return render_rows(_csv_rows(rep), [rep.to_dict()], fmt)


# --- embedded tables -----------------------------------------------------------


def _load(name: str) -> dict:
    return json.loads(resources.files("eqlines.data").joinpath(name).read_text())


@lru_cache(maxsize=None)
def _known() -> dict[int, KnownValuesEntry]:
    out = {}
    for r in _load("known_values.json")["rows"]:
        out[r["n"]] = KnownValuesEntry(r["n"], r["lower"], r["upper"], tuple(r["angle_inverse"]),
                                       r["angle_text"], r["sdp_bound"])
    return out


def known_values(n: int) -> Optional[KnownValuesEntry]:
    """Tabulated lower/upper bounds on M(n) for 2 <= n <= 43, else None."""
    return _known().get(n)


@dataclass(frozen=True)
class Table3Row:
    n: int
    cells: dict
    max: int
    gerzon: int
    angle: Fraction
    informational: bool


@lru_cache(maxsize=None)
def table3() -> dict[int, Table3Row]:
    doc = _load("table3.json")
    return {r["n"]: Table3Row(r["n"], {Fraction(k): v for k, v in r["cells"].items()}, r["max"],
                              r["gerzon"], Fraction(r["angle"]), r["informational"])
            for r in doc["rows"]}


@dataclass(frozen=True)
class CellDiff:
    n: int
    column: str
    expected: int
    computed: Optional[int]
    informational: bool
    error: str = ""

    @property
    def diff(self) -> Optional[int]:
        return None if self.computed is None else abs(self.computed - self.expected)

    @property
    def passed(self) -> bool:
        return self.computed is not None and self.diff <= 1


@dataclass(frozen=True)
class Table3Diff:
    cells: tuple[CellDiff, ...]

    @property
    def failures(self) -> tuple[CellDiff, ...]:
        return tuple(c for c in self.cells if not c.passed and not c.informational)

    @property
    def passed(self) -> bool:
        return not self.failures

    def render(self) -> str:
        lines = ["n,column,table,computed,diff,status"]
        for c in self.cells:
            status = "pass" if c.passed else ("info" if c.informational else "FAIL")
            comp = "error" if c.computed is None else str(c.computed)
            diff = "" if c.diff is None else str(c.diff)
            lines.append(f"{c.n},{c.column},{c.expected},{comp},{diff},{status}")
        return "\n".join(lines) + "\n"


def verify_table3(rows: Iterable[int], cfg: RunConfig = RunConfig()) -> Table3Diff:
    """Recompute tabulated rows and report per-cell differences (pass at <= 1).

    Every angle column is solved whether or not the angle is admissible for
    that n; the max cell is compared with :func:`bound_for_dimension`'s
    max_bound. Solver failures show up as failing cells, never as exceptions.
    """
    rows = sorted(set(rows))
    bad = [n for n in rows if n not in TABLE3_ROWS]
    if bad:
        raise ValueError(f"rows outside 22..139: {bad}")
    tab = table3()
    keys = set()
    for n in rows:
        keys.update((n, a) for a in tab[n].cells)
        keys.update((n, c.a) for c in candidate_angles(n))
    results = _solve_many(keys, cfg)

    cells = []
    for n in rows:
        row = tab[n]
        for a, expected in row.cells.items():
            raw, err = results[(n, a)]
            comp = None if err else _finish(n, a, raw, cfg)[0]
            cells.append(CellDiff(n, _angle_str(a), expected, comp, row.informational, err or ""))
        try:
            comp, err = _assemble(n, results, cfg).max_bound, ""
        except SolverFailure as exc:
            comp, err = None, str(exc)
        cells.append(CellDiff(n, "max", row.max, comp, row.informational, err))
    return Table3Diff(tuple(cells))
