"""Time evolution engines for globally driven atom chains.

Unitary propagation splits every knot interval of a piecewise-linear
pulse into sub-intervals and applies the exponential midpoint rule,
exact to second order and exactly unitary (each step is the exponential
of a Hermitian matrix via eigendecomposition).  Open-system propagation
integrates the master equation with per-atom decay |g><r| and constant
control offsets using classic fixed-step RK4, with automatic step
halving when the trace starts drifting.

All frequencies are angular (rad/us); CSV pulse files are in MHz with
header ``t_us,omega_MHz,delta_MHz`` and are converted at the boundary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import AtomGeometry, NoiseModel, mhz, rydberg_terms, to_mhz

DEFAULT_SUBSTEP = 0.01  # us; keeps the midpoint-rule error far below 1e-6
DEFAULT_LINDBLAD_DT = 1e-3  # us
TRACE_DRIFT_LIMIT = 1e-6


class PulseError(ValueError):
    pass


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConstraintProfile:
    """Hardware limits for laser pulse shaping, in MHz and us."""

    omega_max: float = 2.41
    delta_range: float = 19.9
    slew_omega: float = 39.7
    slew_delta: float = 397.0
    dt_min: float = 0.05

    def to_json(self) -> str:
        import json
        return json.dumps({
            "omega_max": self.omega_max, "delta_range": self.delta_range,
            "slew_omega": self.slew_omega, "slew_delta": self.slew_delta,
            "dt_min": self.dt_min}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ConstraintProfile":
        import json
        return cls(**json.loads(text))


@dataclass(frozen=True)
class ControlPulse:
    """Piecewise-linear (time, Rabi, detuning) knots, angular units."""

    times: np.ndarray
    omegas: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        om = np.asarray(self.omegas, dtype=float)
        de = np.asarray(self.deltas, dtype=float)
        if not (t.shape == om.shape == de.shape) or t.ndim != 1 or len(t) < 2:
            raise PulseError("need matching 1-d knot arrays with at least 2 knots")
        if np.any(np.diff(t) <= 0):
            raise PulseError("knot times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "deltas", de)

    @property
    def n_knots(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def sample(self, t: float) -> tuple[float, float]:
        om = float(np.interp(t, self.times, self.omegas))
        de = float(np.interp(t, self.times, self.deltas))
        return om, de

    def validate(self, profile: ConstraintProfile | None = None) -> None:
        """Raise PulseError on any violated invariant.

        Structural checks always run: t_0 = 0 and zero Rabi amplitude at
        both endpoints.  With a profile, amplitude bounds, slew rates on
        knot differences and minimum knot spacing are enforced exactly
        (no tolerance slack).
        """
        problems = []
        if self.times[0] != 0.0:
            problems.append(f"pulse must start at t=0, got {self.times[0]}")
        if self.omegas[0] != 0.0 or self.omegas[-1] != 0.0:
            problems.append("Rabi amplitude must be zero at both endpoints")
        if profile is not None:
            om_max = mhz(profile.omega_max)
            de_max = mhz(profile.delta_range)
            if np.any(self.omegas < 0) or np.any(self.omegas > om_max):
                problems.append(
                    f"Rabi amplitude outside [0, {profile.omega_max} MHz]")
            if np.any(np.abs(self.deltas) > de_max):
                problems.append(
                    f"detuning outside +-{profile.delta_range} MHz")
            dt = np.diff(self.times)
            if np.any(dt < profile.dt_min * (1 - 1e-12)):
                problems.append(f"knot spacing below {profile.dt_min} us")
            slew_om = np.abs(np.diff(self.omegas)) / dt
            slew_de = np.abs(np.diff(self.deltas)) / dt
            if np.any(slew_om > mhz(profile.slew_omega)):
                problems.append(
                    f"Rabi slew above {profile.slew_omega} MHz/us")
            if np.any(slew_de > mhz(profile.slew_delta)):
                problems.append(
                    f"detuning slew above {profile.slew_delta} MHz/us")
        if problems:
            raise PulseError("; ".join(problems))

    # -- CSV interchange (MHz) ----------------------------------------

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t_us,omega_MHz,delta_MHz\n")
        for t, om, de in zip(self.times, self.omegas, self.deltas):
            out.write(f"{float(t)!r},{float(to_mhz(om))!r},{float(to_mhz(de))!r}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ControlPulse":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "t_us,omega_MHz,delta_MHz":
            raise PulseError("pulse CSV must start with header t_us,omega_MHz,delta_MHz")
        t, om, de = [], [], []
        for ln in lines[1:]:
            a, b, c = ln.split(",")
            t.append(float(a))
            om.append(mhz(float(b)))
            de.append(mhz(float(c)))
        return cls(np.array(t), np.array(om), np.array(de))

    @classmethod
    def constant(cls, duration: float, omega: float, delta: float,
                 n_knots: int = 2) -> "ControlPulse":
        """Flat pulse, mainly for tests; violates the zero-endpoint rule."""
        t = np.linspace(0.0, duration, n_knots)
        return cls(t, np.full(n_knots, float(omega)), np.full(n_knots, float(delta)))


@dataclass
class DensityState:
    rho: np.ndarray
    time: float

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2)[0])


def _expm_factors(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for a Hermitian h via eigendecomposition."""
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T


def _interval_substeps(interval: float, substeps: int | None) -> int:
    if substeps is not None:
        if substeps < 1:
            raise PropagationError("substeps must be >= 1")
        return substeps
    return max(1, int(np.ceil(interval / DEFAULT_SUBSTEP)))


def unitary_trajectory(pulse: ControlPulse, geom: AtomGeometry,
                       substeps: int | None = None, force: bool = False,
                       profile: ConstraintProfile | None = None,
                       noise: NoiseModel | None = None) -> list[tuple[float, np.ndarray]]:
    """Propagator snapshots at every knot time (midpoint-rule product).

    ``noise`` applies only the coherent control offsets here; decay needs
    the open-system integrator.
    """
    if not force:
        pulse.validate(profile)
    x_tot, n_tot, v = rydberg_terms(geom)
    dim = x_tot.shape[0]
    u = np.eye(dim, dtype=complex)
    out = [(float(pulse.times[0]), u.copy())]
    for k in range(pulse.n_knots - 1):
        t0, t1 = pulse.times[k], pulse.times[k + 1]
        steps = _interval_substeps(t1 - t0, substeps)
        dt = (t1 - t0) / steps
        for s in range(steps):
            tm = t0 + (s + 0.5) * dt
            om, de = pulse.sample(tm)
            if noise is not None:
                om, de = noise.realized_controls(om, de)
            h = (om / 2.0) * x_tot - de * n_tot + v
            u = _expm_factors(h, dt) @ u
        out.append((float(t1), u.copy()))
    return out


def propagate_unitary(pulse: ControlPulse, geom: AtomGeometry,
                      substeps: int | None = None, force: bool = False,
                      profile: ConstraintProfile | None = None,
                      noise: NoiseModel | None = None) -> np.ndarray:
    """Final propagator of the pulse; unitary to roundoff by construction."""
    return unitary_trajectory(pulse, geom, substeps, force, profile, noise)[-1][1]


def _lowering_operators(n_atoms: int) -> list[np.ndarray]:
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><r|
    eye = np.eye(2, dtype=complex)
    ops = []
    for site in range(n_atoms):
        m = np.array([[1.0 + 0j]])
        for k in range(n_atoms):
            m = np.kron(m, lower if k == site else eye)
        ops.append(m)
    return ops


def propagate_lindblad(pulse: ControlPulse, geom: AtomGeometry,
                       noise: NoiseModel, dt: float = DEFAULT_LINDBLAD_DT,
                       initial_state: np.ndarray | None = None,
                       force: bool = False,
                       profile: ConstraintProfile | None = None,
                       max_halvings: int = 4) -> list[DensityState]:
    """Density-matrix trajectory recorded at every knot time.

    Integrates drho/dt = -i[H(t), rho] + gamma * sum_l D[sigma_l^-] rho
    with H built from the noise-shifted controls, using fixed-step RK4.
    A trace drift beyond 1e-6 triggers automatic step halving; if the
    smallest step still drifts, the failure reports the suggested step.
    """
    if not force:
        pulse.validate(profile)
    if dt <= 0:
        raise PropagationError("dt must be positive")
    x_tot, n_tot, v = rydberg_terms(geom)
    dim = x_tot.shape[0]
    if initial_state is None:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        rho0 = np.outer(psi, psi.conj())
    elif initial_state.ndim == 1:
        rho0 = np.outer(initial_state, initial_state.conj())
    else:
        rho0 = np.asarray(initial_state, dtype=complex)
    lowers = _lowering_operators(geom.n_atoms)
    numbers = [l.conj().T @ l for l in lowers]

    def hamiltonian(t: float) -> np.ndarray:
        om, de = noise.realized_controls(*pulse.sample(t))
        return (om / 2.0) * x_tot - de * n_tot + v

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        h = hamiltonian(t)
        out = -1j * (h @ rho - rho @ h)
        if noise.gamma > 0:
            for low, num in zip(lowers, numbers):
                out += noise.gamma * (low @ rho @ low.conj().T
                                      - 0.5 * (num @ rho + rho @ num))
        return out

    step = dt
    for attempt in range(max_halvings + 1):
        states = [DensityState(rho0.copy(), float(pulse.times[0]))]
        rho = rho0.copy()
        ok = True
        for k in range(pulse.n_knots - 1):
            t0, t1 = float(pulse.times[k]), float(pulse.times[k + 1])
            n_steps = max(1, int(np.ceil((t1 - t0) / step)))
            h_step = (t1 - t0) / n_steps
            t = t0
            for _ in range(n_steps):
                k1 = rhs(t, rho)
                k2 = rhs(t + h_step / 2, rho + h_step / 2 * k1)
                k3 = rhs(t + h_step / 2, rho + h_step / 2 * k2)
                k4 = rhs(t + h_step, rho + h_step * k3)
                rho = rho + h_step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h_step
            if abs(np.trace(rho).real - 1.0) > TRACE_DRIFT_LIMIT:
                ok = False
                break
            states.append(DensityState(rho.copy(), t1))
        if ok:
            return states
        step /= 2
    raise PropagationError(
        f"trace drift exceeded {TRACE_DRIFT_LIMIT} even at dt={step * 2}; "
        f"suggested dt <= {step}")


# -- observables ----------------------------------------------------------

@dataclass
class ObservableRecord:
    """Per-site densities/Z values plus the full ZZ correlation matrices."""

    n_sites: int
    expect_n: np.ndarray
    expect_z: np.ndarray
    zz: np.ndarray
    connected: np.ndarray = field(init=False)

    def __post_init__(self):
        self.connected = self.zz - np.outer(self.expect_z, self.expect_z)
        np.fill_diagonal(self.connected, 1.0 - self.expect_z ** 2)


def _z_diagonals(n_sites: int) -> np.ndarray:
    """Row s holds the diagonal of Z_s (qubit 1 = most significant bit)."""
    dim = 2 ** n_sites
    k = np.arange(dim)
    out = np.empty((n_sites, dim))
    for s in range(n_sites):
        bit = (k >> (n_sites - 1 - s)) & 1
        out[s] = 1.0 - 2.0 * bit
    return out


def observables(state: np.ndarray | DensityState,
                initial_state: np.ndarray | None = None) -> ObservableRecord:
    """Exact single-site and pairwise Z statistics of a state.

    Accepts a state vector, a density matrix, a DensityState, or a
    unitary together with ``initial_state`` (which is then propagated).
    """
    if isinstance(state, DensityState):
        mat = state.rho
        probs = np.real(np.diag(mat))
    else:
        arr = np.asarray(state, dtype=complex)
        if arr.ndim == 2 and initial_state is not None:
            psi = arr @ np.asarray(initial_state, dtype=complex)
            probs = np.abs(psi) ** 2
        elif arr.ndim == 1:
            probs = np.abs(arr) ** 2
        elif arr.ndim == 2:
            probs = np.real(np.diag(arr))
        else:
            raise PropagationError("unrecognized state input")
    dim = len(probs)
    n_sites = int(round(np.log2(dim)))
    if 2 ** n_sites != dim:
        raise PropagationError("state dimension is not a power of two")
    zdiag = _z_diagonals(n_sites)
    expect_z = zdiag @ probs
    zz = (zdiag * probs) @ zdiag.T
    expect_n = (1.0 - expect_z) / 2.0
    return ObservableRecord(n_sites, expect_n, expect_z, zz)
