"""Concrete Hamiltonians: Rydberg chains, the three-body ZXZ target, the
blockade-regime PXP model, the uniform chain-control family, and the
phenomenological noise model used for open-system runs.

Unit convention: library functions take and return angular frequencies in
rad/us.  File formats and the CLI speak MHz and convert at the boundary
with 2*pi rad/us = 1 MHz; use :func:`mhz` / :func:`to_mhz` to cross over.
Lengths are in micrometres, times in microseconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .closure import GeneratorSet, uniform_qubit_generators
from .pauli import PauliSum

TWO_PI = 2.0 * np.pi

# van der Waals coefficient of the 70S Rydberg state, rad/us * um^6
DEFAULT_C6 = 862690.0 * TWO_PI


def mhz(value: float) -> float:
    """MHz -> rad/us."""
    return value * TWO_PI


def to_mhz(value: float) -> float:
    """rad/us -> MHz."""
    return value / TWO_PI


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class AtomGeometry:
    """Planar atom positions (um) with a van der Waals coefficient."""

    positions: tuple
    c6: float = DEFAULT_C6

    def __post_init__(self):
        pos = tuple((float(x), float(y)) for x, y in self.positions)
        object.__setattr__(self, "positions", pos)
        for a in range(len(pos)):
            for b in range(a + 1, len(pos)):
                if np.hypot(pos[a][0] - pos[b][0], pos[a][1] - pos[b][1]) <= 0:
                    raise ModelError(f"atoms {a + 1} and {b + 1} coincide")

    @classmethod
    def chain(cls, n_atoms: int, spacing: float, c6: float = DEFAULT_C6) -> "AtomGeometry":
        if n_atoms < 1 or spacing <= 0:
            raise ModelError("need n_atoms >= 1 and positive spacing")
        return cls(tuple((i * spacing, 0.0) for i in range(n_atoms)), c6)

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    def interaction(self, j: int, l: int) -> float:
        """V_jl = C6 / |x_j - x_l|^6 in rad/us (atoms 1-based)."""
        xj, yj = self.positions[j - 1]
        xl, yl = self.positions[l - 1]
        return self.c6 / np.hypot(xj - xl, yj - yl) ** 6

    def blockade_radius(self, omega_max: float) -> float:
        """R_b = (C6 / Omega_max)^(1/6) in um, Omega_max in rad/us."""
        if omega_max <= 0:
            raise ModelError("omega_max must be positive")
        return float((self.c6 / omega_max) ** (1.0 / 6.0))

    def to_json(self) -> str:
        return json.dumps([[x, y] for x, y in self.positions])

    @classmethod
    def from_json(cls, text: str, c6: float = DEFAULT_C6) -> "AtomGeometry":
        return cls(tuple((p[0], p[1]) for p in json.loads(text)), c6)


@dataclass(frozen=True)
class NoiseModel:
    """Per-atom decay plus constant control offsets (all angular units).

    The realized controls are Delta + delta_detuning_shift and
    Omega + delta_rabi_shift + rabi_scale_error * Omega.
    """

    gamma: float = 0.0  # 1/us
    delta_detuning_shift: float = 0.0  # rad/us
    delta_rabi_shift: float = 0.0  # rad/us
    rabi_scale_error: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gamma < 0:
            raise ModelError("gamma must be non-negative")

    @classmethod
    def fitted(cls) -> "NoiseModel":
        """Best-fit error model for the three-atom experiment.

        The decay rate is quoted without units in the source data; we
        read it as 1/us, consistent with the microsecond pulse scale,
        and record that reading in the metadata.
        """
        return cls(
            gamma=0.049,
            delta_detuning_shift=mhz(-0.049),
            delta_rabi_shift=mhz(-0.032),
            rabi_scale_error=-0.05,
            metadata={"gamma_units": "1/us (assumed; source quotes a bare number)"},
        )

    def realized_controls(self, omega: float, delta: float) -> tuple[float, float]:
        return (omega + self.delta_rabi_shift + self.rabi_scale_error * omega,
                delta + self.delta_detuning_shift)


# -- Pauli-sum building blocks -------------------------------------------

def _site(n: int, j: int, kind: str, coeff: float = 1.0) -> PauliSum:
    return PauliSum.single_site(n, j, kind, coeff)


def density_operator(n_qubits: int, site: int) -> PauliSum:
    """Rydberg density n = |r><r| = (I - Z)/2 at one site."""
    ident = PauliSum(n_qubits, {(0, 0): 0.5})
    return ident + _site(n_qubits, site, "Z", -0.5)


def rydberg_hamiltonian(geom: AtomGeometry, omega: float, delta: float,
                        n_max_dense: int = 10) -> PauliSum:
    """Global-drive Rydberg chain Hamiltonian (rad/us) as a PauliSum.

    H = (Omega/2) sum_l X_l - Delta sum_l n_l + sum_{j<l} V_jl n_j n_l
    with n = (I - Z)/2; every pairwise tail term is kept.
    """
    if not np.isfinite(omega) or not np.isfinite(delta):
        raise ModelError("omega and delta must be finite")
    n = geom.n_atoms
    if n > n_max_dense:
        raise ModelError(f"geometry with {n} atoms exceeds the dense budget {n_max_dense}")
    h = PauliSum.zero(n)
    for l in range(1, n + 1):
        h = h + _site(n, l, "X", omega / 2.0)
        h = h + density_operator(n, l) * (-delta)
    for j in range(1, n + 1):
        for l in range(j + 1, n + 1):
            v = geom.interaction(j, l)
            njl = _pair_density(n, j, l)
            h = h + njl * v
    return h


def _pair_density(n: int, j: int, l: int) -> PauliSum:
    # n_j n_l = (I - Z_j - Z_l + Z_j Z_l)/4
    zz = PauliSum(n, {(0, 0): 0.25})
    zz = zz + _site(n, j, "Z", -0.25) + _site(n, l, "Z", -0.25)
    label = ["I"] * n
    label[j - 1] = "Z"
    label[l - 1] = "Z"
    return zz + PauliSum.from_label("".join(label), 0.25)


def rydberg_terms(geom: AtomGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (sum X_l, sum n_l, interaction) pieces for fast H(controls).

    H(omega, delta) = (omega/2) * X_total - delta * n_total + V.
    """
    n = geom.n_atoms
    x_total = sum((_site(n, l, "X") for l in range(1, n + 1)),
                  PauliSum.zero(n)).to_dense()
    n_total = sum((density_operator(n, l) for l in range(1, n + 1)),
                  PauliSum.zero(n)).to_dense()
    v = PauliSum.zero(n)
    for j in range(1, n + 1):
        for l in range(j + 1, n + 1):
            v = v + _pair_density(n, j, l) * geom.interaction(j, l)
    return x_total, n_total, v.to_dense()


def zxz_hamiltonian(n_qubits: int, j_eff: float = 1.0) -> PauliSum:
    """Cluster three-body chain J * sum_j Z_{j-1} X_j Z_{j+1} (bulk sites)."""
    if n_qubits < 3:
        raise ModelError("the three-body chain needs at least 3 qubits")
    h = PauliSum.zero(n_qubits)
    for j in range(2, n_qubits):
        label = ["I"] * n_qubits
        label[j - 2], label[j - 1], label[j] = "Z", "X", "Z"
        h = h + PauliSum.from_label("".join(label), j_eff)
    return h


def pxp_hamiltonian(n_qubits: int, omega: float, delta: float) -> PauliSum:
    """Blockade-regime effective model
    (Omega/2) sum_{i=2}^{N-1} P_{i-1} X_i P_{i+1} - Delta sum_i n_i
    with P = (I + Z)/2 the ground-state projector.
    """
    if n_qubits < 3:
        raise ModelError("the blockade model needs at least 3 qubits")
    n = n_qubits
    h = PauliSum.zero(n)
    for i in range(2, n):
        # P X P = (X + ZX + XZ + ZXZ)/4 on sites (i-1, i, i+1)
        for left, right in (("I", "I"), ("Z", "I"), ("I", "Z"), ("Z", "Z")):
            label = ["I"] * n
            label[i - 2], label[i - 1], label[i] = left, "X", right
            h = h + PauliSum.from_label("".join(label), omega / 8.0)
    for i in range(1, n + 1):
        h = h + density_operator(n, i) * (-delta)
    return h


def uniform_control_family(n_qubits: int, break_pattern: Sequence[int] = ()) -> GeneratorSet:
    """The chain's global X/Z/ZZ controls plus an optional partial X field."""
    return uniform_qubit_generators(n_qubits, break_pattern)


def boundary_operators(n_qubits: int) -> tuple[PauliSum, PauliSum]:
    """Left-edge operators X_1 Z_2 and Z_1 of the cluster chain."""
    if n_qubits < 2:
        raise ModelError("need at least 2 qubits")
    x1z2 = PauliSum.from_label("XZ" + "I" * (n_qubits - 2))
    z1 = PauliSum.single_site(n_qubits, 1, "Z")
    return x1z2, z1


def doubly_excited_indices(n_qubits: int) -> np.ndarray:
    """Computational-basis indices with at least two adjacent excitations.

    Qubit 1 is the most significant bit, matching the dense kron order.
    """
    idx = []
    for k in range(2 ** n_qubits):
        bits = (k >> np.arange(n_qubits - 1, -1, -1)) & 1
        if np.any(bits[:-1] & bits[1:]):
            idx.append(k)
    return np.array(idx, dtype=int)
