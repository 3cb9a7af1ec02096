"""Shared oracles and random ensembles for the test suite.

Everything here is written independently of the package internals: partial
traces by explicit index loops, operators assembled with raw np.kron, and so
on, so that tests cross-check two separate computation paths.
"""

from __future__ import annotations

import math

import numpy as np

from swapcert import (
    BinnedMeasurement,
    DensityMatrix,
    DichotomicObservable,
    FourOutcomeMeasurement,
    Scenario,
    bell_basis,
    charlie_settings_ideal,
)

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_all(*mats: np.ndarray) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def ptrace_loops(mat: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace by explicit nested index loops (slow, obviously correct)."""
    dims = tuple(dims)
    keep = tuple(sorted(keep))
    drop = tuple(k for k in range(len(dims)) if k not in keep)
    kept_dims = [dims[k] for k in keep]
    side = int(np.prod(kept_dims)) if kept_dims else 1
    out = np.zeros((side, side), dtype=complex)
    arr = np.asarray(mat, dtype=complex).reshape(dims + dims)
    for row in np.ndindex(*kept_dims) if kept_dims else [()]:
        for col in np.ndindex(*kept_dims) if kept_dims else [()]:
            total = 0.0 + 0.0j
            for traced in np.ndindex(*[dims[k] for k in drop]) if drop else [()]:
                idx_row = [0] * len(dims)
                idx_col = [0] * len(dims)
                for pos, k in enumerate(keep):
                    idx_row[k] = row[pos]
                    idx_col[k] = col[pos]
                for pos, k in enumerate(drop):
                    idx_row[k] = traced[pos]
                    idx_col[k] = traced[pos]
                total += arr[tuple(idx_row) + tuple(idx_col)]
            r = int(np.ravel_multi_index(row, kept_dims)) if kept_dims else 0
            c = int(np.ravel_multi_index(col, kept_dims)) if kept_dims else 0
            out[r, c] = total
    return out


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(ginibre)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases.conj()


def random_observable(dim: int, rng: np.random.Generator) -> DichotomicObservable:
    """Random +/-1 observable with a balanced-ish spectrum."""
    u = haar_unitary(dim, rng)
    signs = np.array([1 if k < dim // 2 else -1 for k in range(dim)], dtype=float)
    if dim % 2:
        signs[-1] = rng.choice([-1.0, 1.0])
    return DichotomicObservable(u @ np.diag(signs) @ u.conj().T)


def random_bloch_observable(rng: np.random.Generator) -> DichotomicObservable:
    vec = rng.normal(size=3)
    vec /= np.linalg.norm(vec)
    return DichotomicObservable(vec[0] * X + vec[1] * Y + vec[2] * Z)


def rotated_bell_measurement(rng: np.random.Generator) -> FourOutcomeMeasurement:
    """Rank-1 projective measurement from a Haar rotation of the entangled basis."""
    u = haar_unitary(4, rng)
    projs = []
    for state in bell_basis():
        vec = u @ state.vector
        projs.append(np.outer(vec, vec.conj()))
    return FourOutcomeMeasurement(tuple(projs), (2, 2))


def random_product_measurement(rng: np.random.Generator) -> FourOutcomeMeasurement:
    """Product of two random rank-1 qubit measurements."""
    from swapcert import product_measurement

    def factor():
        vec = rng.normal(size=3)
        vec /= np.linalg.norm(vec)
        obs = vec[0] * X + vec[1] * Y + vec[2] * Z
        return ((I2 + obs) / 2, (I2 - obs) / 2)

    return product_measurement(factor(), factor())


def random_density(dim: int, rng: np.random.Generator, dims: tuple[int, ...]) -> DensityMatrix:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, dims)


def random_binned(dims: tuple[int, int], rng: np.random.Generator) -> BinnedMeasurement:
    """Random rank-structured four-outcome measurement with random bit maps."""
    side = dims[0] * dims[1]
    if side < 4:
        raise ValueError("need side >= 4 for four nonempty outcomes")
    u = haar_unitary(side, rng)
    # split the basis columns into four nonempty groups
    cuts = sorted(rng.choice(range(1, side), size=3, replace=False))
    groups = np.split(np.arange(side), cuts)
    projs = []
    for grp in groups:
        cols = u[:, grp]
        projs.append(cols @ cols.conj().T)
    bits_a = tuple(int(b) for b in rng.choice([-1, 1], size=4))
    bits_b = tuple(int(b) for b in rng.choice([-1, 1], size=4))
    return BinnedMeasurement(FourOutcomeMeasurement(tuple(projs), dims), bits_a, bits_b)


def random_scenario(rng: np.random.Generator, d_a: int = 2, d_b: int = 2) -> Scenario:
    dims = (d_a, d_b, 2, 2)
    state = random_density(int(np.prod(dims)), rng, dims)
    return Scenario(
        state=state,
        alice=(random_observable(d_a, rng), random_observable(d_a, rng)),
        bob=(random_observable(d_b, rng), random_observable(d_b, rng)),
        charlie12=(random_binned((2, 2), rng), random_binned((2, 2), rng)),
        charlie3=rotated_bell_measurement(rng),
    )


def ideal_with_charlie3(meas: FourOutcomeMeasurement) -> Scenario:
    """The ideal scenario with the joint measurement swapped out."""
    from dataclasses import replace

    from swapcert import ideal_scenario

    return replace(ideal_scenario(), charlie3=meas)


def planted_pair(angle: float) -> tuple[np.ndarray, np.ndarray]:
    """Qubit +/-1 pair whose product has eigenphases +/-angle."""
    return X.copy(), math.cos(angle) * X + math.sin(angle) * Y


def planted_observables(
    angles: tuple[float, ...],
    rng: np.random.Generator | None = None,
) -> tuple[DichotomicObservable, DichotomicObservable]:
    """Direct sum of planted two-dimensional pairs, optionally Haar-conjugated."""
    d = 2 * len(angles)
    a0 = np.zeros((d, d), dtype=complex)
    a1 = np.zeros((d, d), dtype=complex)
    for k, angle in enumerate(angles):
        b0, b1 = planted_pair(angle)
        sl = slice(2 * k, 2 * k + 2)
        a0[sl, sl] = b0
        a1[sl, sl] = b1
    if rng is not None:
        u = haar_unitary(d, rng)
        a0 = u @ a0 @ u.conj().T
        a1 = u @ a1 @ u.conj().T
    return DichotomicObservable(a0), DichotomicObservable(a1)


def expected_alpha(angle_a: float, angle_b: float) -> float:
    """Top CHSH eigenvalue of a planted block pair: 2*sqrt(1 + sin(a)*sin(b))."""
    return 2.0 * math.sqrt(1.0 + abs(math.sin(angle_a)) * abs(math.sin(angle_b)))


def four_factor_state(pair_a: np.ndarray, pair_b: np.ndarray, d: int = 2) -> DensityMatrix:
    """Global (A,B,CA,CB) state from two (party, C-half) pair states."""
    arr = np.kron(pair_a, pair_b).reshape((d, d) * 4)
    # kron order is (A, CA, B, CB); move to (A, B, CA, CB)
    arr = arr.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(d**4, d**4)
    return DensityMatrix(arr, (d,) * 4)


def maximally_entangled_pair(d: int) -> np.ndarray:
    vec = np.identity(d).reshape(-1) / math.sqrt(d)
    return np.outer(vec, vec.conj())


def scenario_settings_ideal():
    from swapcert import ideal_scenario

    sc = ideal_scenario()
    return sc.alice, sc.bob


def canonical_charlie_bits() -> tuple[tuple[int, ...], tuple[int, ...]]:
    c1, _ = charlie_settings_ideal()
    return c1.bit_for_a, c1.bit_for_b
