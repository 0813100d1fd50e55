"""Problem data: MIP instances, solutions, tolerances, ingestion and oracle.

A :class:`MipModel` is stored fully normalized: every row has sense <= and the
objective is minimized.  GE rows are negated, EQ rows are split into a <=/>=
pair, and a MAX objective is negated with the sign restored whenever an
objective is reported.  All arrays are read-only after construction, so models
can be shared across worker threads by reference.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

INF = math.inf


class RowSense(str, Enum):
    LE = "LE"
    GE = "GE"
    EQ = "EQ"


class ObjSense(str, Enum):
    MIN = "MIN"
    MAX = "MAX"


class ModelError(Exception):
    """Base class for model construction / ingestion failures."""


class MalformedSection(ModelError):
    pass


class UnknownRowOrColumn(ModelError):
    pass


class DuplicateEntry(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


@dataclass(frozen=True)
class Tolerances:
    int_tol: float = 1e-6
    feas_tol: float = 1e-6
    opt_gap_abs: float = 1e-9
    opt_gap_rel: float = 1e-6

    def __post_init__(self):
        for name in ("int_tol", "feas_tol", "opt_gap_abs", "opt_gap_rel"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Solution:
    """A point with its objective reported in the model's original sense."""

    values: np.ndarray
    objective: float
    is_integer_feasible: bool


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violated_row: int | None = None
    violated_bound: int | None = None
    violated_integer: int | None = None


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MipModel:
    """Normalized MIP instance: min objective . x  s.t.  matrix . x <= rhs."""

    name: str
    num_vars: int
    num_cons: int
    objective: np.ndarray          # internal (normalized MIN) coefficients
    matrix: sp.csr_matrix          # normalized <= rows
    rhs: np.ndarray
    row_sense: tuple[RowSense, ...]   # all LE after normalization
    lower: np.ndarray
    upper: np.ndarray
    integer_set: tuple[int, ...]
    objective_sense: ObjSense      # the ORIGINAL sense, for reporting

    def __post_init__(self):
        n, m = self.num_vars, self.num_cons
        if self.matrix.shape != (m, n):
            raise DimensionMismatch(
                f"matrix shape {self.matrix.shape} does not match ({m}, {n})")
        for arr, length, what in (
            (self.objective, n, "objective"),
            (self.rhs, m, "rhs"),
            (self.lower, n, "lower"),
            (self.upper, n, "upper"),
        ):
            if arr.shape != (length,):
                raise DimensionMismatch(f"{what} has length {arr.shape}, expected {length}")
        if len(self.row_sense) != m or any(s is not RowSense.LE for s in self.row_sense):
            raise DimensionMismatch("row_sense must hold one LE entry per normalized row")
        ints = list(self.integer_set)
        if ints != sorted(set(ints)) or (ints and (ints[0] < 0 or ints[-1] >= n)):
            raise DimensionMismatch("integer_set must be strictly increasing within 0..n-1")

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, objective, rows, senses, rhs, lower, upper, integer_set,
              objective_sense=ObjSense.MIN, name="model") -> "MipModel":
        """Build a normalized model from raw (possibly GE/EQ/MAX) data.

        ``rows`` is a dense 2-D array-like; EQ rows expand to an adjacent
        <=/>= pair so normalization is involutive on already-LE input.
        """
        objective = np.asarray(objective, dtype=float)
        rows = np.asarray(rows, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        n = objective.shape[0]
        if rows.size == 0:
            rows = rows.reshape(0, n)
        if rows.ndim != 2 or rows.shape[1] != n:
            raise DimensionMismatch("constraint rows must be m x n")
        if rows.shape[0] != len(senses) or rows.shape[0] != rhs.shape[0]:
            raise DimensionMismatch("senses/rhs length must match row count")

        norm_rows, norm_rhs = [], []
        for a, s, b in zip(rows, senses, rhs):
            s = RowSense(s)
            if s is RowSense.LE:
                norm_rows.append(a)
                norm_rhs.append(b)
            elif s is RowSense.GE:
                norm_rows.append(-a)
                norm_rhs.append(-b)
            else:  # EQ -> pair
                norm_rows.append(a)
                norm_rhs.append(b)
                norm_rows.append(-a)
                norm_rhs.append(-b)
        m = len(norm_rows)
        mat = sp.csr_matrix(np.array(norm_rows, dtype=float).reshape(m, n))

        sense = ObjSense(objective_sense)
        internal_obj = -objective if sense is ObjSense.MAX else objective

        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        ints = tuple(sorted(set(int(j) for j in integer_set)))
        # Integer bounds are kept integral from the start.
        lower = lower.copy()
        upper = upper.copy()
        for j in ints:
            if math.isfinite(lower[j]):
                lower[j] = math.ceil(lower[j] - 1e-9)
            if math.isfinite(upper[j]):
                upper[j] = math.floor(upper[j] + 1e-9)

        return cls(
            name=name, num_vars=n, num_cons=m,
            objective=_readonly(internal_obj), matrix=mat,
            rhs=_readonly(np.array(norm_rhs, dtype=float)),
            row_sense=tuple(RowSense.LE for _ in range(m)),
            lower=_readonly(lower), upper=_readonly(upper),
            integer_set=ints, objective_sense=sense,
        )

    # -- views -------------------------------------------------------------

    @cached_property
    def dense_matrix(self) -> np.ndarray:
        d = self.matrix.toarray()
        d.setflags(write=False)
        return d

    @cached_property
    def integer_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vars, dtype=bool)
        mask[list(self.integer_set)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def row_support(self) -> tuple:
        """Nonzero column indices per normalized row."""
        dense = self.dense_matrix
        return tuple(np.nonzero(dense[i])[0] for i in range(self.num_cons))

    def restore_sense(self, internal_objective: float) -> float:
        if self.objective_sense is ObjSense.MAX:
            return -internal_objective
        return internal_objective

    def make_solution(self, values: np.ndarray, tol: Tolerances | None = None) -> Solution:
        tol = tol or Tolerances()
        values = np.asarray(values, dtype=float)
        ints_ok = all(
            abs(values[j] - round(values[j])) <= tol.int_tol for j in self.integer_set
        )
        internal = float(self.objective @ values)
        return Solution(values=_readonly(values),
                        objective=self.restore_sense(internal),
                        is_integer_feasible=ints_ok)

    def equals(self, other: "MipModel") -> bool:
        """Field-by-field equality (exact float comparison intended)."""
        return (
            self.name == other.name
            and self.num_vars == other.num_vars
            and self.num_cons == other.num_cons
            and np.array_equal(self.objective, other.objective)
            and np.array_equal(self.dense_matrix, other.dense_matrix)
            and np.array_equal(self.rhs, other.rhs)
            and self.row_sense == other.row_sense
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and self.integer_set == other.integer_set
            and self.objective_sense == other.objective_sense
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sense": self.objective_sense.value,
            # original-sense objective so from_dict(to_dict()) re-normalizes to the same model
            "objective": list(np.asarray(
                -self.objective if self.objective_sense is ObjSense.MAX else self.objective)),
            "rows": [list(r) for r in self.dense_matrix],
            "row_sense": [s.value for s in self.row_sense],
            "rhs": list(self.rhs),
            "lower": [None if math.isinf(v) else v for v in self.lower],
            "upper": [None if math.isinf(v) else v for v in self.upper],
            "integer_set": list(self.integer_set),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MipModel":
        lower = [(-INF if v is None else v) for v in d["lower"]]
        upper = [(INF if v is None else v) for v in d["upper"]]
        return cls.build(
            d["objective"], d["rows"], d["row_sense"], d["rhs"],
            lower, upper, d["integer_set"],
            objective_sense=d.get("sense", "MIN"), name=d.get("name", "model"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MipModel":
        return cls.from_dict(json.loads(text))

    def to_mps(self) -> str:
        """Write the normalized model as free-format MPS (all rows L)."""
        out = [f"NAME {self.name}"]
        if self.objective_sense is ObjSense.MAX:
            out.append("OBJSENSE")
            out.append(" MAX")
        out.append("ROWS")
        out.append(" N obj")
        for i in range(self.num_cons):
            out.append(f" L c{i}")
        out.append("COLUMNS")
        orig_obj = -self.objective if self.objective_sense is ObjSense.MAX else self.objective
        dense = self.dense_matrix
        int_mask = self.integer_mask
        in_int = False
        marker = 0
        for j in range(self.num_vars):
            if int_mask[j] and not in_int:
                out.append(f" MARK{marker} 'MARKER' 'INTORG'")
                marker += 1
                in_int = True
            elif not int_mask[j] and in_int:
                out.append(f" MARK{marker} 'MARKER' 'INTEND'")
                marker += 1
                in_int = False
            entries = [("obj", float(orig_obj[j]))] if orig_obj[j] != 0.0 else []
            entries += [(f"c{i}", float(dense[i, j])) for i in range(self.num_cons) if dense[i, j] != 0.0]
            if not entries:
                entries = [("obj", 0.0)]  # register otherwise-empty columns
            for row, val in entries:
                out.append(f" x{j} {row} {val!r}")
        if in_int:
            out.append(f" MARK{marker} 'MARKER' 'INTEND'")
        out.append("RHS")
        for i in range(self.num_cons):
            if self.rhs[i] != 0.0:
                out.append(f" rhs c{i} {float(self.rhs[i])!r}")
        out.append("BOUNDS")
        for j in range(self.num_vars):
            lo, up = float(self.lower[j]), float(self.upper[j])
            if lo == 0.0 and up == INF:
                continue  # MPS default (we default integers to [0, inf) too)
            if lo == up:
                out.append(f" FX bnd x{j} {lo!r}")
                continue
            if lo == -INF and up == INF:
                out.append(f" FR bnd x{j}")
                continue
            if lo == -INF:
                out.append(f" MI bnd x{j}")
            elif lo != 0.0:
                out.append(f" LO bnd x{j} {lo!r}")
            if up != INF:
                out.append(f" UP bnd x{j} {up!r}")
        out.append("ENDATA")
        return "\n".join(out) + "\n"


# -- MPS ingestion ----------------------------------------------------------

_SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")


def parse_mps(text: str) -> MipModel:
    """Parse free-format MPS (fixed-format parses as a byproduct).

    Sections NAME/ROWS/COLUMNS (with INTORG/INTEND markers)/RHS/BOUNDS/ENDATA;
    OBJSENSE is accepted as a common extension so MAX models round-trip.
    RANGES is rejected explicitly rather than silently mis-read.
    """
    name = ""
    sense = ObjSense.MIN
    obj_row: str | None = None
    row_order: list[str] = []
    row_senses: dict[str, RowSense] = {}
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    col_is_int: dict[str, bool] = {}
    obj_coef: dict[str, float] = {}
    entries: dict[tuple[str, str], float] = {}
    rhs_vals: dict[str, float] = {}
    bounds: dict[str, list] = {}
    bound_sides: set[tuple[str, str]] = set()

    section = None
    seen: list[str] = []
    in_integer = False
    expecting_objsense_value = False
    saw_endata = False

    for rawline in text.splitlines():
        if not rawline.strip() or rawline.lstrip().startswith("*"):
            continue
        is_header = not rawline[0].isspace()
        tokens = rawline.split()

        if is_header:
            head = tokens[0].upper()
            if head not in _SECTIONS:
                raise MalformedSection(f"unknown section {head!r}")
            if head == "RANGES":
                raise MalformedSection("RANGES sections are not supported")
            if head in seen:
                raise MalformedSection(f"duplicate section {head}")
            if seen and _SECTIONS.index(head) < _SECTIONS.index(seen[-1]):
                raise MalformedSection(f"section {head} out of order")
            seen.append(head)
            section = head
            expecting_objsense_value = False
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else ""
            elif head == "OBJSENSE":
                if len(tokens) > 1:
                    sense = _parse_objsense(tokens[1])
                else:
                    expecting_objsense_value = True
            elif head == "ENDATA":
                saw_endata = True
                break
            continue

        if section == "OBJSENSE" and expecting_objsense_value:
            sense = _parse_objsense(tokens[0])
            expecting_objsense_value = False
            continue

        if section == "ROWS":
            if len(tokens) != 2:
                raise MalformedSection(f"bad ROWS line: {rawline!r}")
            kind, rname = tokens[0].upper(), tokens[1]
            if rname in row_senses or rname == obj_row:
                raise DuplicateEntry(f"row {rname!r} declared twice")
            if kind == "N":
                if obj_row is not None:
                    raise MalformedSection("multiple objective (N) rows")
                obj_row = rname
            elif kind in ("L", "G", "E"):
                row_senses[rname] = {"L": RowSense.LE, "G": RowSense.GE, "E": RowSense.EQ}[kind]
                row_order.append(rname)
            else:
                raise MalformedSection(f"unknown row type {kind!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                mode = tokens[2].strip("'\"").upper()
                if mode == "INTORG":
                    in_integer = True
                elif mode == "INTEND":
                    in_integer = False
                else:
                    raise MalformedSection(f"unknown marker {mode!r}")
                continue
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MalformedSection(f"bad COLUMNS line: {rawline!r}")
            cname = tokens[0]
            if cname not in col_index:
                col_index[cname] = len(col_order)
                col_order.append(cname)
                col_is_int[cname] = in_integer
            for rname, value in zip(tokens[1::2], tokens[2::2]):
                val = _parse_float(rawline, value)
                if rname == obj_row:
                    if cname in obj_coef:
                        raise DuplicateEntry(f"duplicate objective entry for {cname!r}")
                    obj_coef[cname] = val
                elif rname in row_senses:
                    if (cname, rname) in entries:
                        raise DuplicateEntry(f"duplicate entry {cname!r} in row {rname!r}")
                    entries[(cname, rname)] = val
                else:
                    raise UnknownRowOrColumn(f"COLUMNS references undeclared row {rname!r}")
        elif section == "RHS":
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MalformedSection(f"bad RHS line: {rawline!r}")
            for rname, value in zip(tokens[1::2], tokens[2::2]):
                if rname == obj_row:
                    raise MalformedSection("RHS entry on the objective row is not supported")
                if rname not in row_senses:
                    raise UnknownRowOrColumn(f"RHS references undeclared row {rname!r}")
                if rname in rhs_vals:
                    raise DuplicateEntry(f"duplicate RHS for row {rname!r}")
                rhs_vals[rname] = _parse_float(rawline, value)
        elif section == "BOUNDS":
            if len(tokens) < 3:
                raise MalformedSection(f"bad BOUNDS line: {rawline!r}")
            btype = tokens[0].upper()
            cname = tokens[2]
            if cname not in col_index:
                raise UnknownRowOrColumn(f"BOUNDS references undeclared column {cname!r}")
            needs_value = btype in ("LO", "UP", "FX", "LI", "UI")
            if needs_value and len(tokens) < 4:
                raise MalformedSection(f"bound {btype} needs a value: {rawline!r}")
            val = _parse_float(rawline, tokens[3]) if needs_value else None
            sides = {
                "LO": ("L",), "MI": ("L",), "LI": ("L",),
                "UP": ("U",), "PL": ("U",), "UI": ("U",),
                "FX": ("L", "U"), "FR": ("L", "U"), "BV": ("L", "U"),
            }.get(btype)
            if sides is None:
                raise MalformedSection(f"unknown bound type {btype!r}")
            for side in sides:
                if (cname, side) in bound_sides:
                    raise DuplicateEntry(f"bound side {side} set twice for {cname!r}")
                bound_sides.add((cname, side))
            bounds.setdefault(cname, []).append((btype, val))
        elif section in ("NAME", "OBJSENSE"):
            raise MalformedSection(f"unexpected data line in {section}: {rawline!r}")
        else:
            raise MalformedSection(f"data before any section: {rawline!r}")

    if not saw_endata:
        raise MalformedSection("missing ENDATA")
    if "ROWS" not in seen or "COLUMNS" not in seen:
        raise MalformedSection("ROWS and COLUMNS sections are required")
    if obj_row is None:
        raise MalformedSection("no objective (N) row declared")

    n = len(col_order)
    m = len(row_order)
    objective = np.zeros(n)
    rows = np.zeros((m, n))
    rhs = np.zeros(m)
    row_pos = {rname: i for i, rname in enumerate(row_order)}
    for cname, j in col_index.items():
        objective[j] = obj_coef.get(cname, 0.0)
    for (cname, rname), val in entries.items():
        rows[row_pos[rname], col_index[cname]] = val
    for rname, val in rhs_vals.items():
        rhs[row_pos[rname]] = val

    lower = np.zeros(n)
    upper = np.full(n, INF)
    for cname, blist in bounds.items():
        j = col_index[cname]
        for btype, val in blist:
            if btype in ("LO", "LI"):
                lower[j] = val
            elif btype in ("UP", "UI"):
                upper[j] = val
            elif btype == "FX":
                lower[j] = upper[j] = val
            elif btype == "FR":
                lower[j], upper[j] = -INF, INF
            elif btype == "MI":
                lower[j] = -INF
            elif btype == "PL":
                upper[j] = INF
            elif btype == "BV":
                lower[j], upper[j] = 0.0, 1.0

    integer_set = [col_index[c] for c in col_order if col_is_int[c]]
    senses = [row_senses[rname] for rname in row_order]
    return MipModel.build(objective, rows, senses, rhs, lower, upper,
                          integer_set, objective_sense=sense, name=name)


def _parse_objsense(token: str) -> ObjSense:
    t = token.upper()
    if t in ("MAX", "MAXIMIZE"):
        return ObjSense.MAX
    if t in ("MIN", "MINIMIZE"):
        return ObjSense.MIN
    raise MalformedSection(f"unknown OBJSENSE {token!r}")


def _parse_float(line: str, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedSection(f"bad numeric token {token!r} in line {line!r}") from None


# -- feasibility / objective -------------------------------------------------

def check_feasible(model: MipModel, point, tol: Tolerances | None = None) -> FeasibilityReport:
    """Check bounds, integrality and normalized row activities at ``point``."""
    tol = tol or Tolerances()
    x = np.asarray(point, dtype=float)
    if x.shape != (model.num_vars,):
        raise DimensionMismatch(f"point length {x.shape} != {model.num_vars}")
    for j in range(model.num_vars):
        if x[j] < model.lower[j] - tol.feas_tol or x[j] > model.upper[j] + tol.feas_tol:
            return FeasibilityReport(False, violated_bound=j)
    for j in model.integer_set:
        if abs(x[j] - round(x[j])) > tol.int_tol:
            return FeasibilityReport(False, violated_integer=j)
    activity = model.dense_matrix @ x if model.num_cons else np.zeros(0)
    for i in range(model.num_cons):
        if activity[i] > model.rhs[i] + tol.feas_tol:
            return FeasibilityReport(False, violated_row=i)
    return FeasibilityReport(True)


def objective_value(model: MipModel, point) -> float:
    """c^T x in the model's ORIGINAL sense."""
    x = np.asarray(point, dtype=float)
    if x.shape != (model.num_vars,):
        raise DimensionMismatch(f"point length {x.shape} != {model.num_vars}")
    return model.restore_sense(float(model.objective @ x))


# -- brute-force oracle -------------------------------------------------------

class BruteForceStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    TOO_LARGE = "TOO_LARGE"
    UNBOUNDED = "UNBOUNDED"


@dataclass(frozen=True)
class BruteForceResult:
    status: BruteForceStatus
    solution: Solution | None = None


def brute_force_optimum(model: MipModel, enumeration_cap: int = 1 << 20,
                        tol: Tolerances | None = None) -> BruteForceResult:
    """Exhaustive enumeration oracle over the integer grid.

    Integer assignments are enumerated in lexicographic order; any continuous
    remainder is solved with scipy's LP solver, deliberately independent of
    the simplex implementation this oracle is used to check.
    """
    tol = tol or Tolerances()
    if np.any(model.lower > model.upper):
        return BruteForceResult(BruteForceStatus.INFEASIBLE)

    ints = list(model.integer_set)
    for j in ints:
        if not (math.isfinite(model.lower[j]) and math.isfinite(model.upper[j])):
            raise ValueError("brute force requires finite integer bounds")
    spans = [int(round(model.upper[j] - model.lower[j])) + 1 for j in ints]
    total = 1
    for s in spans:
        total *= s
        if total > enumeration_cap:
            return BruteForceResult(BruteForceStatus.TOO_LARGE)

    cont = [j for j in range(model.num_vars) if j not in set(ints)]
    if not cont:
        return _brute_force_pure(model, ints, spans, tol)
    return _brute_force_mixed(model, ints, cont, tol)


def _brute_force_pure(model, ints, spans, tol, chunk=65536) -> BruteForceResult:
    n = model.num_vars
    ranges = [np.arange(model.lower[j], model.upper[j] + 0.5) for j in ints]
    best_obj, best_x = INF, None
    # lexicographic chunks keep first-minimum = lexicographically-smallest optimum
    it = itertools.product(*ranges) if ints else iter([()])
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        full = np.zeros((len(block), n))
        if ints:
            full[:, ints] = np.array(block)
        feas = np.ones(len(block), dtype=bool)
        if model.num_cons:
            act = full @ model.dense_matrix.T
            feas = np.all(act <= model.rhs + tol.feas_tol, axis=1)
        if not np.any(feas):
            continue
        objs = full @ model.objective
        objs[~feas] = INF
        k = int(np.argmin(objs))
        if objs[k] < best_obj:
            best_obj, best_x = float(objs[k]), full[k].copy()
    if best_x is None:
        return BruteForceResult(BruteForceStatus.INFEASIBLE)
    return BruteForceResult(BruteForceStatus.OPTIMAL, model.make_solution(best_x, tol))


def _brute_force_mixed(model, ints, cont, tol) -> BruteForceResult:
    from scipy.optimize import linprog

    ranges = [np.arange(model.lower[j], model.upper[j] + 0.5) for j in ints]
    a_ub = model.dense_matrix if model.num_cons else None
    b_ub = model.rhs if model.num_cons else None
    int_set = set(ints)
    best_obj, best_x = INF, None
    unbounded = False
    for assign in itertools.product(*ranges):
        bounds = []
        pos = 0
        for j in range(model.num_vars):
            if j in int_set:
                bounds.append((assign[pos], assign[pos]))
                pos += 1
            else:
                lo = None if model.lower[j] == -INF else model.lower[j]
                up = None if model.upper[j] == INF else model.upper[j]
                bounds.append((lo, up))
        res = linprog(model.objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds,
                      method="highs")
        if res.status == 3:
            unbounded = True
            continue
        if not res.success:
            continue
        if res.fun < best_obj - 1e-12:
            best_obj, best_x = res.fun, np.array(res.x)
    if unbounded:
        return BruteForceResult(BruteForceStatus.UNBOUNDED)
    if best_x is None:
        return BruteForceResult(BruteForceStatus.INFEASIBLE)
    return BruteForceResult(BruteForceStatus.OPTIMAL, model.make_solution(best_x, tol))
