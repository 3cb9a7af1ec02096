"""JSON and CSV exchange formats.

Complex matrices serialize as ``{"rows": n, "cols": m, "data": [[re, im], ...]}``
with the data flat in row-major order. Floats are written with 9 significant
digits everywhere, which makes all emitted files byte-stable across runs.
Counts tables use CSV with header ``x,y,z,a,b,c,count``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Sequence

import numpy as np

from .certify import DistanceBounds, Verdict
from .linalg import DensityMatrix, ValidationError
from .measurements import BinnedMeasurement, DichotomicObservable, FourOutcomeMeasurement
from .protocol import ChshReport, CountsTable, ReportStdErr, Scenario

COUNTS_HEADER = ["x", "y", "z", "a", "b", "c", "count"]


def round9(x: float) -> float:
    """Round to 9 significant digits, the fixed output precision."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.9g}")


def _round_tree(obj: Any) -> Any:
    if isinstance(obj, float):
        return round9(obj)
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def json_dumps(obj: Any) -> str:
    """Deterministic JSON with 9-significant-digit floats."""
    return json.dumps(_round_tree(obj), indent=2, sort_keys=True)


def matrix_to_json(mat: np.ndarray) -> dict:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    return {
        "rows": int(mat.shape[0]),
        "cols": int(mat.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in mat.reshape(-1)],
    }


def matrix_from_json(obj: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ValidationError(f"{name}: expected an object, got {type(obj).__name__}")
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: missing or malformed rows/cols/data ({exc})") from None
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValidationError(f"{name}: data length {len(data) if isinstance(data, list) else '?'} "
                              f"does not equal rows*cols = {rows * cols}")
    out = np.empty(rows * cols, dtype=complex)
    for k, cell in enumerate(data):
        if not (isinstance(cell, list) and len(cell) == 2):
            raise ValidationError(f"{name}: entry {k} is not an [re, im] pair")
        out[k] = complex(float(cell[0]), float(cell[1]))
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name}: non-finite entries")
    return out.reshape(rows, cols)


def measurement_to_json(meas: FourOutcomeMeasurement) -> dict:
    return {
        "dims": list(meas.dims),
        "projectors": [matrix_to_json(p) for p in meas.projectors],
    }


def measurement_from_json(obj: Any, name: str = "measurement") -> FourOutcomeMeasurement:
    if not isinstance(obj, dict) or "projectors" not in obj:
        raise ValidationError(f"{name}: expected object with 'projectors'")
    projs = [matrix_from_json(p, f"{name} projector {k + 1}") for k, p in enumerate(obj["projectors"])]
    if "dims" in obj:
        dims = tuple(int(d) for d in obj["dims"])
    else:
        side = projs[0].shape[0]
        root = int(round(math.sqrt(side)))
        if root * root != side:
            raise ValidationError(f"{name}: cannot infer dims for side {side}; provide 'dims'")
        dims = (root, root)
    return FourOutcomeMeasurement(tuple(projs), dims)


def binned_to_json(binned: BinnedMeasurement) -> dict:
    out = measurement_to_json(binned.base)
    out["bit_for_A"] = list(binned.bit_for_a)
    out["bit_for_B"] = list(binned.bit_for_b)
    return out


def binned_from_json(obj: Any, name: str = "binned measurement") -> BinnedMeasurement:
    base = measurement_from_json(obj, name)
    for key in ("bit_for_A", "bit_for_B"):
        if key not in obj:
            raise ValidationError(f"{name}: missing '{key}'")
    return BinnedMeasurement(base, tuple(obj["bit_for_A"]), tuple(obj["bit_for_B"]))


def observable_to_json(obs: DichotomicObservable) -> dict:
    return matrix_to_json(obs.matrix)


def observable_from_json(obj: Any, name: str = "observable") -> DichotomicObservable:
    return DichotomicObservable(matrix_from_json(obj, name))


def scenario_to_json(sc: Scenario) -> dict:
    return {
        "dims": list(sc.dims),
        "state": matrix_to_json(sc.state.matrix),
        "alice": [observable_to_json(o) for o in sc.alice],
        "bob": [observable_to_json(o) for o in sc.bob],
        "charlie12": [binned_to_json(b) for b in sc.charlie12],
        "charlie3": measurement_to_json(sc.charlie3),
    }


def scenario_from_json(obj: Any) -> Scenario:
    if not isinstance(obj, dict):
        raise ValidationError("scenario: expected a JSON object")
    for key in ("dims", "state", "alice", "bob", "charlie12", "charlie3"):
        if key not in obj:
            raise ValidationError(f"scenario: missing '{key}'")
    dims = tuple(int(d) for d in obj["dims"])
    if len(dims) != 4:
        raise ValidationError("scenario: dims must list four factors")
    state = DensityMatrix(matrix_from_json(obj["state"], "state"), dims)
    alice = tuple(observable_from_json(o, f"alice setting {k + 1}") for k, o in enumerate(obj["alice"]))
    bob = tuple(observable_from_json(o, f"bob setting {k + 1}") for k, o in enumerate(obj["bob"]))
    charlie12 = tuple(binned_from_json(b, f"charlie setting {k + 1}") for k, b in enumerate(obj["charlie12"]))
    charlie3 = measurement_from_json(obj["charlie3"], "charlie3")
    return Scenario(state, alice, bob, charlie12, charlie3)


def _float_or_null(value: float) -> float | None:
    return None if not math.isfinite(value) else float(value)


def report_to_json(report: ChshReport) -> dict:
    out = {
        "s_ac": float(report.s_ac),
        "s_bc": float(report.s_bc),
        "s_ab_given_c": [_float_or_null(v) for v in report.s_ab_given_c],
        "outcome_probs": [float(p) for p in report.outcome_probs],
        "relabeling": [slot + 1 for slot in report.relabeling],
        "stderr": None,
    }
    if report.stderr is not None:
        out["stderr"] = {
            "s_ac": float(report.stderr.s_ac),
            "s_bc": float(report.stderr.s_bc),
            "s_ab_given_c": [_float_or_null(v) for v in report.stderr.s_ab_given_c],
        }
    return out


def report_from_json(obj: Any) -> ChshReport:
    if not isinstance(obj, dict):
        raise ValidationError("report: expected a JSON object")
    for key in ("s_ac", "s_bc", "s_ab_given_c", "outcome_probs", "relabeling"):
        if key not in obj:
            raise ValidationError(f"report: missing '{key}'")
    values = obj["s_ab_given_c"]
    if not isinstance(values, list) or len(values) != 4:
        raise ValidationError("report: s_ab_given_c must list four values")
    parsed = [math.nan if v is None else float(v) for v in values]
    relabeling = tuple(int(s) - 1 for s in obj["relabeling"])
    stderr = None
    if obj.get("stderr") is not None:
        block = obj["stderr"]
        stderr = ReportStdErr(
            float(block["s_ac"]),
            float(block["s_bc"]),
            tuple(math.nan if v is None else float(v) for v in block["s_ab_given_c"]),
        )
    return ChshReport(
        s_ac=float(obj["s_ac"]),
        s_bc=float(obj["s_bc"]),
        s_ab_given_c=tuple(parsed),
        outcome_probs=tuple(float(p) for p in obj["outcome_probs"]),
        relabeling=relabeling,
        stderr=stderr,
    )


def verdict_to_json(verdict: Verdict) -> dict:
    w = verdict.witness
    return {
        "criterion": verdict.criterion,
        "passed": bool(verdict.passed),
        "tolerance": float(verdict.tolerance),
        "witness": {
            "s_ac_hit": w.s_ac_hit,
            "s_bc_hit": w.s_bc_hit,
            "s_ac_dev": float(w.s_ac_dev),
            "s_bc_dev": float(w.s_bc_dev),
            "best_outcome": w.best_outcome,
            "best_value": None if w.best_value is None else float(w.best_value),
            "threshold": float(w.threshold),
            "margin": None if w.margin is None else float(w.margin),
        },
    }


def bounds_to_json(bounds: DistanceBounds) -> dict:
    return {"lower": float(bounds.lower), "upper": float(bounds.upper)}


def counts_to_csv(table: CountsTable) -> str:
    """All cells of a counts table, zeros included, in fixed row order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COUNTS_HEADER)
    signs = (1, -1)
    for x in (1, 2):
        for y in (1, 2):
            for z in (1, 2, 3):
                for ia, a in enumerate(signs):
                    for ib, b in enumerate(signs):
                        for c in range(4):
                            writer.writerow([x, y, z, a, b, c + 1,
                                             int(table.counts[x - 1, y - 1, z - 1, ia, ib, c])])
    return buf.getvalue()


def counts_from_csv(text: str) -> CountsTable:
    """Parse a counts CSV; malformed rows are reported with their line number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("counts CSV is empty") from None
    if [h.strip() for h in header] != COUNTS_HEADER:
        raise ValidationError(f"line 1: expected header {','.join(COUNTS_HEADER)}")
    counts = np.zeros((2, 2, 3, 2, 2, 4), dtype=np.int64)
    seen = np.zeros((2, 2, 3), dtype=bool)
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 7:
            raise ValidationError(f"line {lineno}: expected 7 fields, got {len(row)}")
        try:
            x, y, z, a, b, c, n = (int(v) for v in row)
        except ValueError:
            raise ValidationError(f"line {lineno}: non-integer field") from None
        if x not in (1, 2) or y not in (1, 2) or z not in (1, 2, 3):
            raise ValidationError(f"line {lineno}: setting ({x},{y},{z}) out of range")
        if a not in (1, -1) or b not in (1, -1) or c not in (1, 2, 3, 4):
            raise ValidationError(f"line {lineno}: outcome ({a},{b},{c}) out of range")
        if n < 0:
            raise ValidationError(f"line {lineno}: negative count")
        ia, ib = (0 if a == 1 else 1), (0 if b == 1 else 1)
        counts[x - 1, y - 1, z - 1, ia, ib, c - 1] += n
        seen[x - 1, y - 1, z - 1] = True
    missing = np.argwhere(~seen)
    if missing.size:
        x, y, z = missing[0] + 1
        raise ValidationError(f"empty cells: no rows for setting triple ({x},{y},{z})")
    totals = counts.sum(axis=(3, 4, 5))
    if np.any(totals <= 0):
        x, y, z = np.argwhere(totals <= 0)[0] + 1
        raise ValidationError(f"empty cells: zero total count for setting triple ({x},{y},{z})")
    n_per_setting = int(totals.max())
    return CountsTable(counts, n_per_setting)


def bounds_curve_csv(rows: Sequence[tuple[float, float, float]]) -> str:
    """CSV with columns S, lower, upper at 9 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["S", "lower", "upper"])
    for s, lower, upper in rows:
        writer.writerow([f"{s:.9g}", f"{lower:.9g}", f"{upper:.9g}"])
    return buf.getvalue()
