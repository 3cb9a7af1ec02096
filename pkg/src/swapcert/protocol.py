"""Three-party scenario: exact statistics, CHSH values and sampling.

The global state lives on four factors ordered (A, B, C_A, C_B); the middle
party holds the last two. Settings are 1-based throughout: x, y in {1, 2} for
the end parties, z in {1, 2, 3} for the middle party, raw outcomes c in
{1, 2, 3, 4}. End-party outcomes are the observable values +1/-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import certify
from .linalg import (
    DensityMatrix,
    ValidationError,
    permute_subsystems,
    ptrace_array,
    tensor,
)
from .measurements import (
    CANONICAL_BIT_FOR_A,
    CANONICAL_BIT_FOR_B,
    BinnedMeasurement,
    DichotomicObservable,
    FourOutcomeMeasurement,
    bell_measurement,
    charlie_settings_ideal,
    perturbed_bell_measurement,
    qubit_observable,
)

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

# Conditional outcomes with probability below this are flagged as undefined
# rather than producing NaN ratios from degenerate states.
PROB_FLOOR = 1e-12

OUTCOME_SIGNS = (1.0, -1.0)  # index 0 is the +1 outcome, index 1 the -1 outcome


@dataclass(frozen=True)
class Scenario:
    """Full experiment description: state, settings and binnings of all parties."""

    state: DensityMatrix
    alice: tuple[DichotomicObservable, DichotomicObservable]
    bob: tuple[DichotomicObservable, DichotomicObservable]
    charlie12: tuple[BinnedMeasurement, BinnedMeasurement]
    charlie3: FourOutcomeMeasurement

    def __post_init__(self) -> None:
        dims = self.state.dims
        if len(dims) != 4:
            raise ValidationError(f"state must have four factors, got dims {dims}")
        d_a, d_b, d_ca, d_cb = dims
        if len(self.alice) != 2 or len(self.bob) != 2 or len(self.charlie12) != 2:
            raise ValidationError("each party needs exactly two settings")
        for k, obs in enumerate(self.alice):
            if obs.dim != d_a:
                raise ValidationError(f"alice setting {k + 1} acts on dim {obs.dim}, state has {d_a}")
        for k, obs in enumerate(self.bob):
            if obs.dim != d_b:
                raise ValidationError(f"bob setting {k + 1} acts on dim {obs.dim}, state has {d_b}")
        for k, binned in enumerate(self.charlie12):
            if binned.base.dims != (d_ca, d_cb):
                raise ValidationError(
                    f"charlie setting {k + 1} acts on dims {binned.base.dims}, state has {(d_ca, d_cb)}"
                )
        if self.charlie3.dims != (d_ca, d_cb):
            raise ValidationError(
                f"charlie3 acts on dims {self.charlie3.dims}, state has {(d_ca, d_cb)}"
            )

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.state.dims


@dataclass(frozen=True)
class CorrelationRecord:
    """Correlators E_xy for one context: 'AC', 'BC' or 'AB|c'."""

    context: str
    values: dict[tuple[int, int], float]

    def __post_init__(self) -> None:
        for key, val in self.values.items():
            if abs(val) > 1.0 + 1e-12:
                raise ValidationError(f"correlator {key} = {val} outside [-1, 1]")


@dataclass(frozen=True)
class ReportStdErr:
    """Propagated standard errors for an estimated report."""

    s_ac: float
    s_bc: float
    s_ab_given_c: tuple[float, float, float, float]


@dataclass(frozen=True)
class ChshReport:
    """All CHSH values of one run, with conditional values already relabeled.

    ``s_ab_given_c`` and ``outcome_probs`` are aligned to the relabeled slots;
    ``relabeling`` maps 0-based raw outcome to its slot. Undefined conditional
    values (outcomes with no statistics) are NaN.
    """

    s_ac: float
    s_bc: float
    s_ab_given_c: tuple[float, float, float, float]
    outcome_probs: tuple[float, float, float, float]
    relabeling: tuple[int, int, int, int]
    stderr: ReportStdErr | None = None

    def validate(self, tol: float = 1e-9) -> None:
        if abs(sum(self.outcome_probs) - 1.0) > tol:
            raise ValidationError("outcome probabilities do not sum to 1")
        for value in (self.s_ac, self.s_bc, *self.s_ab_given_c):
            if math.isfinite(value) and abs(value) > TSIRELSON + tol:
                raise ValidationError(f"CHSH value {value} exceeds the quantum ceiling")


def _charlie_projectors(sc: Scenario, z: int) -> tuple[np.ndarray, ...]:
    if z in (1, 2):
        return sc.charlie12[z - 1].base.projectors
    if z == 3:
        return sc.charlie3.projectors
    raise ValidationError("z must be in {1, 2, 3}")


def joint_distribution(sc: Scenario, x: int, y: int, z: int) -> np.ndarray:
    """Exact outcome table p[a, b, c] for one setting triple via the Born rule.

    Index a (resp. b) is 0 for outcome +1 and 1 for outcome -1; c is the
    0-based raw outcome of the middle party.
    """
    if x not in (1, 2) or y not in (1, 2):
        raise ValidationError("x and y must be in {1, 2}")
    pa = sc.alice[x - 1].projectors()
    pb = sc.bob[y - 1].projectors()
    pc = _charlie_projectors(sc, z)
    rho = sc.state.matrix
    table = np.empty((2, 2, 4))
    for ia in range(2):
        for ib in range(2):
            local = tensor(pa[ia], pb[ib])
            for ic in range(4):
                op = tensor(local, pc[ic])
                table[ia, ib, ic] = float(np.trace(op @ rho).real)
    return table


def correlators_ac(sc: Scenario) -> CorrelationRecord:
    """E_xz between the first party's outcome and the middle party's 'a' bit."""
    values: dict[tuple[int, int], float] = {}
    for x in (1, 2):
        for z in (1, 2):
            table = joint_distribution(sc, x, 1, z)
            bits = sc.charlie12[z - 1].bit_for_a
            e = 0.0
            for ia, sa in enumerate(OUTCOME_SIGNS):
                for ic in range(4):
                    e += sa * bits[ic] * float(table[ia, :, ic].sum())
            values[(x, z)] = e
    return CorrelationRecord("AC", values)


def correlators_bc(sc: Scenario) -> CorrelationRecord:
    """E_yz between the second party's outcome and the middle party's 'b' bit."""
    values: dict[tuple[int, int], float] = {}
    for y in (1, 2):
        for z in (1, 2):
            table = joint_distribution(sc, 1, y, z)
            bits = sc.charlie12[z - 1].bit_for_b
            e = 0.0
            for ib, sb in enumerate(OUTCOME_SIGNS):
                for ic in range(4):
                    e += sb * bits[ic] * float(table[:, ib, ic].sum())
            values[(y, z)] = e
    return CorrelationRecord("BC", values)


def _chsh_combination(values: dict[tuple[int, int], float]) -> float:
    return values[(1, 1)] + values[(1, 2)] + values[(2, 1)] - values[(2, 2)]


def chsh_ac(sc: Scenario) -> float:
    """CHSH value between the first party and the middle party's 'a' bit."""
    return _chsh_combination(correlators_ac(sc).values)


def chsh_bc(sc: Scenario) -> float:
    """CHSH value between the second party and the middle party's 'b' bit."""
    return _chsh_combination(correlators_bc(sc).values)


def conditional_version_matrix(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """All four CHSH variants conditioned on each raw outcome of setting 3.

    Returns ``(matrix, probs)`` where ``matrix[c, v]`` is the variant-(v+1)
    value given outcome c+1 and ``probs[c]`` the outcome probability. Rows for
    outcomes below the probability floor are NaN.
    """
    tables = {(x, y): joint_distribution(sc, x, y, 3) for x in (1, 2) for y in (1, 2)}
    probs = tables[(1, 1)].sum(axis=(0, 1))
    matrix = np.full((4, 4), math.nan)
    for c in range(4):
        cond = {}
        defined = True
        for (x, y), table in tables.items():
            p_c = float(table[:, :, c].sum())
            if p_c < PROB_FLOOR:
                defined = False
                break
            e = 0.0
            for ia, sa in enumerate(OUTCOME_SIGNS):
                for ib, sb in enumerate(OUTCOME_SIGNS):
                    e += sa * sb * float(table[ia, ib, c])
            cond[(x, y)] = e / p_c
        if not defined:
            continue
        e_list = (cond[(1, 1)], cond[(1, 2)], cond[(2, 1)], cond[(2, 2)])
        for v, signs in enumerate(certify.VERSION_SIGNS):
            matrix[c, v] = sum(s * e for s, e in zip(signs, e_list))
    return matrix, probs


def conditional_chsh_ab(sc: Scenario) -> tuple[tuple[float, float, float, float], np.ndarray]:
    """Conditional CHSH per raw outcome, each in its own variant (no relabeling)."""
    matrix, probs = conditional_version_matrix(sc)
    return tuple(float(matrix[c, c]) for c in range(4)), probs


def steer(state: DensityMatrix, meas: FourOutcomeMeasurement) -> list[tuple[float, DensityMatrix | None]]:
    """Per-outcome probability and conditional end-party state.

    The state must have four factors; the measurement acts on the last two.
    Outcomes below the probability floor yield ``(p, None)``.
    """
    dims = state.dims
    if len(dims) != 4:
        raise ValidationError("steering expects a four-factor state")
    if meas.dims != dims[2:]:
        raise ValidationError(f"measurement dims {meas.dims} do not match state dims {dims[2:]}")
    eye_ab = np.eye(dims[0] * dims[1])
    out: list[tuple[float, DensityMatrix | None]] = []
    for proj in meas.projectors:
        op = tensor(eye_ab, proj)
        projected = op @ state.matrix @ op
        p = float(np.trace(projected).real)
        if p < PROB_FLOOR:
            out.append((p, None))
            continue
        reduced = ptrace_array(projected / p, dims, (0, 1))
        out.append((p, DensityMatrix(reduced, dims[:2])))
    return out


def steered_states(sc: Scenario) -> list[tuple[float, DensityMatrix]]:
    """Conditional end-party states under setting 3; zero-probability outcomes omitted."""
    return [(p, dm) for p, dm in steer(sc.state, sc.charlie3) if dm is not None]


def _pair_state_vector(d: int = 2) -> np.ndarray:
    return np.identity(d).reshape(-1) / math.sqrt(d)


def _two_pair_state(rho_pair_a: np.ndarray, rho_pair_b: np.ndarray) -> DensityMatrix:
    """Assemble a (A,CA) x (B,CB) product into the global (A,B,CA,CB) ordering."""
    combined = tensor(rho_pair_a, rho_pair_b)  # ordered (A, CA, B, CB)
    reordered = permute_subsystems(combined, (2, 2, 2, 2), (0, 2, 1, 3))
    return DensityMatrix(reordered, (2, 2, 2, 2))


def ideal_scenario() -> Scenario:
    """The four-qubit scenario reaching the quantum ceiling on every tested value."""
    pair = _pair_state_vector()
    rho_pair = np.outer(pair, pair)
    s = 1.0 / SQRT2
    return Scenario(
        state=_two_pair_state(rho_pair, rho_pair),
        alice=(qubit_observable((0.0, 0.0, 1.0)), qubit_observable((1.0, 0.0, 0.0))),
        bob=(qubit_observable((s, 0.0, s)), qubit_observable((-s, 0.0, s))),
        charlie12=charlie_settings_ideal(),
        charlie3=bell_measurement(),
    )


def noisy_scenario(v_ac: float, v_bc: float, theta: float) -> Scenario:
    """Ideal scenario with isotropic noise on each pair and a rotated joint basis.

    Each source emits ``v * ideal + (1 - v) * I/4``; the joint measurement is
    the outcome-1/4 plane rotated by ``theta``.
    """
    for name, v in (("v_ac", v_ac), ("v_bc", v_bc)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1]")
    pair = _pair_state_vector()
    rho_ideal = np.outer(pair, pair)
    noise = np.eye(4) / 4.0
    rho_a = v_ac * rho_ideal + (1.0 - v_ac) * noise
    rho_b = v_bc * rho_ideal + (1.0 - v_bc) * noise
    base = ideal_scenario()
    return replace(
        base,
        state=_two_pair_state(rho_a, rho_b),
        charlie3=perturbed_bell_measurement(theta, pair=1),
    )


def exact_report(sc: Scenario) -> ChshReport:
    """Exact CHSH report with conditional values relabeled to their best variants."""
    matrix, probs = conditional_version_matrix(sc)
    perm, values = certify.relabel(matrix)
    slot_probs = [0.0] * 4
    for c in range(4):
        slot_probs[perm[c]] = float(probs[c])
    report = ChshReport(
        s_ac=chsh_ac(sc),
        s_bc=chsh_bc(sc),
        s_ab_given_c=values,
        outcome_probs=tuple(slot_probs),
        relabeling=perm,
    )
    report.validate()
    return report


@dataclass(frozen=True)
class CountsTable:
    """Outcome counts per setting triple, indexed [x-1, y-1, z-1, a, b, c]."""

    counts: np.ndarray
    n_per_setting: int

    def __post_init__(self) -> None:
        arr = np.array(self.counts, dtype=np.int64)
        if arr.shape != (2, 2, 3, 2, 2, 4):
            raise ValidationError(f"counts must have shape (2,2,3,2,2,4), got {arr.shape}")
        if np.any(arr < 0):
            raise ValidationError("counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "n_per_setting", int(self.n_per_setting))


def sample_counts(sc: Scenario, n_per_setting: int, seed: int) -> CountsTable:
    """Draw i.i.d. samples from every setting triple.

    Each triple gets its own generator derived from ``(seed, x, y, z)``, so the
    result is byte-identical for a fixed seed no matter how the work is split.
    Sampling inverts the CDF of the 16-cell outcome table.
    """
    if n_per_setting < 1:
        raise ValidationError("n_per_setting must be at least 1")
    if seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    counts = np.zeros((2, 2, 3, 2, 2, 4), dtype=np.int64)
    for x in (1, 2):
        for y in (1, 2):
            for z in (1, 2, 3):
                table = joint_distribution(sc, x, y, z).reshape(-1)
                cdf = np.cumsum(np.clip(table, 0.0, None))
                cdf /= cdf[-1]
                rng = np.random.default_rng([seed, x, y, z])
                draws = np.searchsorted(cdf, rng.random(n_per_setting), side="right")
                cells = np.bincount(draws, minlength=16)
                counts[x - 1, y - 1, z - 1] = cells.reshape(2, 2, 4)
    return CountsTable(counts, n_per_setting)


def _pooled_correlator(counts: np.ndarray, signs: np.ndarray) -> tuple[float, float]:
    """Plug-in correlator and its variance from a pooled count block."""
    total = float(counts.sum())
    if total <= 0:
        raise ValidationError("empty cells: a setting triple has no counts")
    e = float((signs * counts).sum() / total)
    var = max(0.0, (1.0 - e * e) / total)
    return e, var


def estimate_report(
    counts: CountsTable,
    bit_maps: tuple[tuple[Sequence[int], Sequence[int]], ...] | None = None,
) -> ChshReport:
    """Plug-in CHSH estimates with propagated standard errors.

    ``bit_maps`` gives ``(bit_for_a, bit_for_b)`` per middle-party setting 1
    and 2; by default the canonical binning of the ideal protocol is used.
    Standard errors use the independent-multinomial approximation per setting.
    Estimates are relabeled the same way exact reports are; finite-sample
    values are not forced under the quantum ceiling.
    """
    if bit_maps is None:
        bit_maps = ((CANONICAL_BIT_FOR_A, CANONICAL_BIT_FOR_B),) * 2
    arr = counts.counts
    totals = arr.sum(axis=(3, 4, 5))
    if np.any(totals <= 0):
        x, y, z = np.argwhere(totals <= 0)[0] + 1
        raise ValidationError(f"empty cells: no counts for setting triple ({x},{y},{z})")
    a_signs = np.asarray(OUTCOME_SIGNS)

    def swap_side_chsh(party_axis: int) -> tuple[float, float]:
        s = 0.0
        var = 0.0
        for first_setting in (1, 2):
            for z in (1, 2):
                bits = np.asarray(bit_maps[z - 1][party_axis], dtype=float)
                if party_axis == 0:
                    block = arr[first_setting - 1, :, z - 1].sum(axis=(0, 2))  # pooled over y, b
                else:
                    block = arr[:, first_setting - 1, z - 1].sum(axis=(0, 1))  # pooled over x, a
                signs = np.outer(a_signs, bits)
                e, v = _pooled_correlator(block, signs)
                coeff = -1.0 if (first_setting, z) == (2, 2) else 1.0
                s += coeff * e
                var += v
        return s, math.sqrt(var)

    s_ac, se_ac = swap_side_chsh(0)
    s_bc, se_bc = swap_side_chsh(1)

    pair_signs = np.outer(a_signs, a_signs)
    matrix = np.full((4, 4), math.nan)
    se_c = [math.nan] * 4
    probs = np.zeros(4)
    z3_total = float(arr[:, :, 2].sum())
    if z3_total <= 0:
        raise ValidationError("empty cells: no counts for setting triple with z=3")
    for c in range(4):
        probs[c] = float(arr[:, :, 2, :, :, c].sum()) / z3_total
        cond = {}
        var_sum = 0.0
        defined = True
        for x in (1, 2):
            for y in (1, 2):
                block = arr[x - 1, y - 1, 2, :, :, c]
                if block.sum() == 0:
                    defined = False
                    break
                e, v = _pooled_correlator(block, pair_signs)
                cond[(x, y)] = e
                var_sum += v
            if not defined:
                break
        if not defined:
            continue
        e_list = (cond[(1, 1)], cond[(1, 2)], cond[(2, 1)], cond[(2, 2)])
        for v, signs in enumerate(certify.VERSION_SIGNS):
            matrix[c, v] = sum(s * e for s, e in zip(signs, e_list))
        se_c[c] = math.sqrt(var_sum)

    perm, values = certify.relabel(matrix)
    slot_probs = [0.0] * 4
    slot_se = [math.nan] * 4
    for c in range(4):
        slot_probs[perm[c]] = float(probs[c])
        slot_se[perm[c]] = se_c[c]
    return ChshReport(
        s_ac=s_ac,
        s_bc=s_bc,
        s_ab_given_c=values,
        outcome_probs=tuple(slot_probs),
        relabeling=perm,
        stderr=ReportStdErr(se_ac, se_bc, tuple(slot_se)),
    )
