"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Each test prints PASS/FAIL before asserting, so the summary is
visible even on partial failure.
"""

import math
import time

import numpy as np

from swapcert import (
    DichotomicObservable,
    bell_basis,
    chsh_ac,
    chsh_bc,
    conditional_version_matrix,
    distance_bounds,
    estimate_report,
    exact_report,
    ideal_scenario,
    jordan_blocks,
    joint_distribution,
    overlap_chsh,
    partial_trace,
    relabel,
    sample_counts,
    sep_bound,
    sep_bound_value,
    steered_states,
    theorem_check,
    threshold_for_distance,
    trace_distance,
    version_operator,
)
from swapcert.blocks import block_chsh, chsh_operator, chsh_spectrum
from swapcert.cli import main as cli_main
from support import (
    I2,
    SQRT2,
    TSIRELSON,
    planted_observables,
    ptrace_loops,
    random_bloch_observable,
    random_observable,
    random_product_measurement,
    random_scenario,
    rotated_bell_measurement,
)


def _outcome(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"criterion {num:02d} [{name}]: {status}{suffix}")
    assert ok, f"criterion {num} [{name}] failed{suffix}"


def test_criterion_01_ideal_reproduction():
    start = time.perf_counter()
    sc = ideal_scenario()
    values = [chsh_ac(sc), chsh_bc(sc)]
    report = exact_report(sc)
    values.extend(report.s_ab_given_c)
    elapsed = time.perf_counter() - start
    worst = max(abs(v - TSIRELSON) for v in values)
    ok = worst <= 1e-9 and elapsed < 1.0
    _outcome(1, "ideal-scenario reproduction", ok,
             f"max deviation {worst:.2e}, {elapsed:.3f}s")


def test_criterion_02_bell_operator_identity():
    sc = ideal_scenario()
    basis = bell_basis()
    worst = 0.0
    for c in range(4):
        op = version_operator(sc.alice, sc.bob, c + 1)
        expected = TSIRELSON * (
            np.outer(basis[c].vector, basis[c].vector.conj())
            - np.outer(basis[3 - c].vector, basis[3 - c].vector.conj())
        )
        worst = max(worst, float(np.max(np.abs(op - expected))))
    _outcome(2, "conditional operator identity", worst <= 1e-10, f"max entry error {worst:.2e}")


def test_criterion_03_threshold(capsys):
    s_star = threshold_for_distance(0.05)
    four_dp_ok = round(s_star, 4) == 2.8214
    code = cli_main([
        "bounds-curve",
        "--s-min", f"{s_star:.12f}", "--s-max", f"{s_star:.12f}", "--steps", "1",
    ])
    out = capsys.readouterr().out
    upper = float(out.splitlines()[1].split(",")[2])
    curve_ok = code == 0 and abs(upper - 0.05) <= 1e-4
    with capsys.disabled():
        _outcome(3, "five-percent threshold", four_dp_ok and curve_ok,
                 f"S* = {s_star:.4f}, curve upper = {upper:.6f}")


def test_criterion_04_bound_sandwich():
    from dataclasses import replace

    start = time.perf_counter()
    sc = ideal_scenario()
    ok = True
    worst_pred = 0.0
    for seed in range(100):
        rng = np.random.default_rng(140_000 + seed)
        meas = rotated_bell_measurement(rng)
        matrix, _ = conditional_version_matrix(replace(sc, charlie3=meas))
        predicted = overlap_chsh(meas)
        simulated = [float(matrix[c, c]) for c in range(4)]
        worst_pred = max(worst_pred, max(abs(p - s) for p, s in zip(predicted, simulated)))
        perm, values = relabel(matrix)
        bounds = distance_bounds(values)
        t = trace_distance(meas, perm)
        if not (bounds.lower <= t <= bounds.upper + 1e-9):
            ok = False
    elapsed = time.perf_counter() - start
    ok = ok and worst_pred <= 1e-8 and elapsed < 30.0
    _outcome(4, "distance-bound sandwich", ok,
             f"worst prediction error {worst_pred:.2e}, {elapsed:.1f}s")


def test_criterion_05_separable_steering_bound():
    sc = ideal_scenario()
    worst = -math.inf
    ok = True
    for seed in range(100):
        rng = np.random.default_rng(150_000 + seed)
        report = theorem_check(sc.state, sc.alice, sc.bob, random_product_measurement(rng))
        worst = max(worst, report.max_value)
        ok = ok and report.satisfied
    # planted four-dimensional direct-sum instances
    from support import four_factor_state, haar_unitary, maximally_entangled_pair
    from swapcert import product_measurement

    z = np.array([[1, 0], [0, -1]], dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    a0 = DichotomicObservable(np.block([[z, np.zeros((2, 2))], [np.zeros((2, 2)), (z + x) / SQRT2]]))
    a1 = DichotomicObservable(np.block([[x, np.zeros((2, 2))], [np.zeros((2, 2)), (z - x) / SQRT2]]))
    state = four_factor_state(maximally_entangled_pair(4), maximally_entangled_pair(4), d=4)
    planted_worst = -math.inf
    for seed in range(5):
        rng = np.random.default_rng(155_000 + seed)
        u_a, u_b = haar_unitary(4, rng), haar_unitary(4, rng)
        k_a, k_b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        p_a = u_a[:, :k_a] @ u_a[:, :k_a].conj().T
        p_b = u_b[:, :k_b] @ u_b[:, :k_b].conj().T
        charlie3 = product_measurement((p_a, np.eye(4) - p_a), (p_b, np.eye(4) - p_b))
        report = theorem_check(state, (a0, a1), (a0, a1), charlie3)
        planted_worst = max(planted_worst, report.max_value)
        ok = ok and report.satisfied
    ok = ok and worst <= SQRT2 + 1e-8 and planted_worst <= SQRT2 + 1e-8
    _outcome(5, "separable steering bound", ok,
             f"max conditional {worst:.9f} (qubit), {planted_worst:.9f} (planted d=4)")


def test_criterion_06_separable_bound_lemma():
    worst = 0.0
    ok = True
    for seed in range(50):
        rng = np.random.default_rng(160_000 + seed)
        obs = [random_bloch_observable(rng) for _ in range(4)]
        _, result = sep_bound(*obs, restarts=32, seed=seed)
        worst = max(worst, abs(result.formula_value - result.oracle_value))
    for seed in range(20):
        rng = np.random.default_rng(165_000 + seed)
        n_a, n_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))  # d in {4, 6}
        angles_a = tuple(rng.uniform(0.3, math.pi / 2, size=n_a))
        angles_b = tuple(rng.uniform(0.3, math.pi / 2, size=n_b))
        a0, a1 = planted_observables(angles_a, rng=rng)
        b0, b1 = planted_observables(angles_b, rng=rng)
        _, result = sep_bound(a0, a1, b0, b1, restarts=32, seed=seed)
        worst = max(worst, abs(result.formula_value - result.oracle_value))
    endpoints_ok = (
        abs(sep_bound_value(2.0) - 2.0) <= 1e-9
        and abs(sep_bound_value(TSIRELSON) - SQRT2) <= 1e-9
    )
    ok = ok and worst <= 1e-4 and endpoints_ok
    _outcome(6, "separable bound lemma", ok, f"worst formula-oracle gap {worst:.2e}")


def test_criterion_07_spectral_law():
    worst_sum = 0.0
    worst_marginal = 0.0
    for seed in range(100):
        rng = np.random.default_rng(170_000 + seed)
        beta = chsh_operator(*(random_bloch_observable(rng) for _ in range(4)))
        a1, a2 = chsh_spectrum(beta)  # raises if the +/- pairing fails
        worst_sum = max(worst_sum, abs(a1 * a1 + a2 * a2 - 8.0))
        w, v = np.linalg.eigh(beta)
        gaps = np.min(np.abs(w[:, None] - w[None, :]) + 10.0 * np.eye(4), axis=1)
        for k in range(4):
            if gaps[k] < 1e-6:
                continue
            vec = v[:, k]
            rho = np.outer(vec, vec.conj())
            for keep in ((0,), (1,)):
                marginal = ptrace_loops(rho, (2, 2), keep)
                worst_marginal = max(worst_marginal, float(np.max(np.abs(marginal - I2 / 2))))
    ok = worst_sum <= 1e-8 and worst_marginal <= 1e-6
    _outcome(7, "spectral law", ok,
             f"worst sum-of-squares gap {worst_sum:.2e}, worst marginal {worst_marginal:.2e}")


def test_criterion_08_block_decomposition():
    worst_recon = 0.0
    worst_alpha = math.inf
    for d in (2, 4, 6, 8):
        for seed in range(10):
            rng = np.random.default_rng(180_000 + 100 * d + seed)
            a0, a1 = random_observable(d, rng), random_observable(d, rng)
            b0, b1 = random_observable(d, rng), random_observable(d, rng)
            ab, bb = jordan_blocks(a0, a1), jordan_blocks(b0, b1)
            for blocks_obj, o0, o1 in ((ab, a0, a1), (bb, b0, b1)):
                r0, r1 = blocks_obj.embed()
                worst_recon = max(
                    worst_recon,
                    float(np.max(np.abs(r0 - o0.matrix))),
                    float(np.max(np.abs(r1 - o1.matrix))),
                )
                assert all(b.size <= 2 for b in blocks_obj.blocks)
            structure = block_chsh(ab, bb)
            worst_alpha = min(worst_alpha, min(p.alpha for p in structure.pairs))
    ok = worst_recon <= 1e-8 and worst_alpha >= 2.0 - 1e-9
    _outcome(8, "block decomposition", ok,
             f"worst reconstruction {worst_recon:.2e}, smallest alpha {worst_alpha:.9f}")


def test_criterion_09_property_suite():
    ceiling_ok = True
    signalling_worst = 0.0
    steering_worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(190_000 + seed)
        d_a, d_b = (int(v) for v in rng.choice([2, 3, 4], size=2))
        sc = random_scenario(rng, d_a, d_b)
        values = [chsh_ac(sc), chsh_bc(sc)]
        matrix, _ = conditional_version_matrix(sc)
        values.extend(matrix[np.isfinite(matrix)].tolist())
        if any(abs(v) > TSIRELSON + 1e-9 for v in values):
            ceiling_ok = False
        tables = {(x, y, z): joint_distribution(sc, x, y, z)
                  for x in (1, 2) for y in (1, 2) for z in (1, 2, 3)}
        for x in (1, 2):
            ref = tables[(x, 1, 1)].sum(axis=(1, 2))
            for y in (1, 2):
                for z in (1, 2, 3):
                    dev = float(np.max(np.abs(tables[(x, y, z)].sum(axis=(1, 2)) - ref)))
                    signalling_worst = max(signalling_worst, dev)
        for y in (1, 2):
            ref = tables[(1, y, 1)].sum(axis=(0, 2))
            for x in (1, 2):
                for z in (1, 2, 3):
                    dev = float(np.max(np.abs(tables[(x, y, z)].sum(axis=(0, 2)) - ref)))
                    signalling_worst = max(signalling_worst, dev)
        total = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
        for p, dm in steered_states(sc):
            total += p * dm.matrix
        marginal = partial_trace(sc.state, (0, 1)).matrix
        steering_worst = max(steering_worst, float(np.max(np.abs(total - marginal))))
    ok = ceiling_ok and signalling_worst <= 1e-10 and steering_worst <= 1e-10
    _outcome(9, "property suite", ok,
             f"no-signalling {signalling_worst:.2e}, steering average {steering_worst:.2e}")


def test_criterion_10_finite_statistics():
    start = time.perf_counter()
    sc = ideal_scenario()
    counts = sample_counts(sc, 1_000_000, seed=42)
    report = estimate_report(counts)
    deviations = [
        abs(report.s_ac - TSIRELSON) / report.stderr.s_ac,
        abs(report.s_bc - TSIRELSON) / report.stderr.s_bc,
    ]
    for value, se in zip(report.s_ab_given_c, report.stderr.s_ab_given_c):
        deviations.append(abs(value - TSIRELSON) / se)
    elapsed = time.perf_counter() - start
    ok = max(deviations) <= 5.0 and elapsed < 60.0
    _outcome(10, "finite statistics", ok,
             f"worst deviation {max(deviations):.2f} sigma, {elapsed:.1f}s")
