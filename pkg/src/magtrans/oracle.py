"""Independent checks of the adiabatic elimination.

Two routes are provided: a numeric solve of the stationary interior rows,
and time evolution of the full five-level problem against the two-mode
effective model.

The fixed-step RK4 integrator exploits linearity. For a constant
Hermitian H, one classical RK4 step is the polynomial
``p(z) = 1 + z + z^2/2 + z^3/6 + z^4/24`` with ``z = -2 pi i dt H``. So k
steps are exactly ``p(z)^k``. The default path applies that power in the
eigenbasis of H, which gives the same numbers as stepping at a cost
independent of the step count. ``method="step"`` does the literal loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .effective import EffectiveModel, EliminationCoefficients, RwaMatrix
from .errors import DomainError, GridMismatchError, SingularError, StepSizeError

TWO_PI = 2.0 * math.pi
STABILITY_LIMIT = 0.1  # max of 2 pi dt |H|
MAX_PHASE = 1e11  # radians; beyond this double precision loses the slow dynamics
DEFAULT_X = 0.05
DRIFT_BUDGET = 1e-10
DEFAULT_SAMPLES = 1001


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # (samples, dim)
    norm_drift: float
    dt: float = math.nan
    steps: int = 0

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[1]


def _as_matrix(h):
    entries = h.entries if isinstance(h, RwaMatrix) else np.asarray(h, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DomainError("Hamiltonian must be a square matrix")
    if not np.all(np.isfinite(entries)):
        raise DomainError("Hamiltonian has non-finite entries")
    return entries


def _check_state(psi0, dim):
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (dim,):
        raise DomainError(f"initial state must have shape ({dim},), got {psi0.shape}")
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-12:
        raise DomainError("initial state must be normalized to within 1e-12")
    return psi0


def rk4_propagator(entries, dt):
    """One-step RK4 map for i d(psi)/dt = 2 pi H psi."""
    a = -1j * TWO_PI * dt * entries
    eye = np.eye(entries.shape[0], dtype=complex)
    a2 = a @ a
    return eye + a + a2 / 2 + a2 @ a / 6 + a2 @ a2 / 24


def default_step(entries, t_end, samples=DEFAULT_SAMPLES):
    """Step size keeping the estimated RK4 norm loss below ``DRIFT_BUDGET``.

    Per step the amplitude of an eigencomponent with phase increment x
    shrinks by about x^6/144, so n steps lose about n x^6/72 in norm.
    """
    hmax = float(np.max(np.abs(entries)))
    if hmax == 0 or t_end == 0:
        return t_end / max(samples - 1, 1) if t_end else 0.0
    w = TWO_PI * hmax
    by_drift = (72.0 * DRIFT_BUDGET / (t_end * w**6)) ** 0.2
    return min(DEFAULT_X / w, by_drift, t_end / max(samples - 1, 1))


def _step_powers(theta, k):
    """p(-i theta)^k with the modulus computed from |p|^2 = 1 - theta^6/72 + theta^8/576."""
    z = -1j * theta
    p = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
    log_mod = 0.5 * np.log1p(-(theta**6) / 72.0 + theta**8 / 576.0)
    return np.exp(np.multiply.outer(k, log_mod + 1j * np.angle(p)))


def evolve_full(h, psi0, t_end, dt=None, samples=DEFAULT_SAMPLES, method="eigen") -> Trajectory:
    """Fixed-step RK4 evolution of the five-level (or any small) RWA problem.

    ``dt`` is the integration step; it is shrunk slightly so that an integer
    number of steps separates consecutive output samples.
    """
    entries = _as_matrix(h)
    psi0 = _check_state(psi0, entries.shape[0])
    if t_end < 0 or samples < 2:
        raise DomainError("need t_end >= 0 and at least two samples")
    hmax = float(np.max(np.abs(entries)))
    if TWO_PI * hmax * t_end > MAX_PHASE:
        raise DomainError(
            f"evolution spans {TWO_PI * hmax * t_end:.3g} rad of fast phase; "
            "too long for double precision"
        )
    suggested = DEFAULT_X / (TWO_PI * hmax) if hmax else math.inf
    if dt is None:
        dt = default_step(entries, t_end, samples)
    elif dt <= 0:
        raise DomainError("dt must be positive")
    if TWO_PI * dt * hmax >= STABILITY_LIMIT:
        raise StepSizeError(
            f"dt={dt!r} violates 2*pi*dt*max|H| < {STABILITY_LIMIT}", suggested_dt=suggested
        )
    intervals = samples - 1
    times = np.linspace(0.0, t_end, samples)
    if t_end == 0:
        amps = np.tile(psi0, (samples, 1))
        return Trajectory(times, amps, 0.0, 0.0, 0)
    stride = max(1, math.ceil(t_end / (dt * intervals)))
    step = t_end / (stride * intervals)
    ks = np.arange(samples) * stride
    if method == "eigen":
        w, v = np.linalg.eigh(entries)
        powers = _step_powers(TWO_PI * step * w, ks)
        amps = (powers * (v.conj().T @ psi0)) @ v.T
    elif method == "step":
        prop = rk4_propagator(entries, step)
        amps = np.empty((samples, entries.shape[0]), dtype=complex)
        amps[0] = psi0
        psi = psi0
        for i in range(1, samples):
            for _ in range(stride):
                psi = prop @ psi
            amps[i] = psi
    else:
        raise DomainError(f"unknown method {method!r}")
    drift = float(np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1.0)))
    return Trajectory(times, amps, drift, step, int(ks[-1]))


def effective_matrix(m: EffectiveModel) -> np.ndarray:
    """Two-mode Hamiltonian in the (microwave, optical) order of the full basis."""
    s = complex(m.s_rate)
    return np.array([[m.lambda_b, np.conj(s)], [s, m.lambda_a]], dtype=complex)


def evolve_effective(m: EffectiveModel, psi0, t_end, dt=None, samples=DEFAULT_SAMPLES) -> Trajectory:
    """Exact evolution under the effective model; ``dt``, if given, is the sample spacing."""
    if dt is not None:
        if dt <= 0:
            raise DomainError("dt must be positive")
        samples = int(round(t_end / dt)) + 1
    entries = effective_matrix(m)
    psi0 = _check_state(psi0, 2)
    times = np.linspace(0.0, t_end, max(samples, 2))
    w, v = np.linalg.eigh(entries)
    phases = np.exp(-1j * TWO_PI * np.multiply.outer(times, w))
    amps = (phases * (v.conj().T @ psi0)) @ v.T
    drift = float(np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1.0)))
    step = times[1] - times[0] if len(times) > 1 else 0.0
    return Trajectory(times, amps, drift, step, len(times) - 1)


def rabi_frequency(m: EffectiveModel) -> float:
    return math.hypot(abs(m.s_rate), 0.5 * (m.lambda_a - m.lambda_b))


def transfer_period(m: EffectiveModel) -> float:
    """Period of the microwave/optical population oscillation."""
    rate = rabi_frequency(m)
    if rate == 0:
        raise DomainError("no oscillation: S = 0 and the modes are degenerate")
    return 1.0 / (2.0 * rate)


def max_transfer(m: EffectiveModel) -> float:
    rate = rabi_frequency(m)
    return abs(m.s_rate) ** 2 / rate**2 if rate else 0.0


def solve_elimination_numeric(h) -> EliminationCoefficients:
    """Solve the stationary rows 1-3 of H for (c1, c2, c3) in terms of (c0, c4).

    Interior levels with no couplings and zero energy are dropped (their
    coefficients are zero) so the bare-erbium matrix stays solvable.
    """
    entries = _as_matrix(h)
    if entries.shape != (5, 5):
        raise DomainError("numeric elimination needs the 5x5 RWA matrix")
    interior = [1, 2, 3]
    keep = []
    for k in interior:
        off = np.delete(entries[k], k)
        if entries[k, k] != 0 or np.any(off != 0):
            keep.append(k)
    coefs = np.zeros((3, 2), dtype=complex)
    det = 1.0 + 0j
    if keep:
        a = entries[np.ix_(keep, keep)]
        b = -entries[np.ix_(keep, [0, 4])]
        cond = float(np.linalg.cond(a))
        det = complex(np.linalg.det(a))
        if not math.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
            raise SingularError(
                f"interior block is singular (condition number {cond:.3g})", det, cond
            )
        sol = np.linalg.solve(a, b)
        for row, k in zip(sol, keep):
            coefs[k - 1] = row
    den = det.real if abs(det.imag) <= 1e-12 * abs(det) else det
    return EliminationCoefficients(tuple(coefs[0]), tuple(coefs[1]), tuple(coefs[2]), den)


def _mapped_populations(traj: Trajectory):
    pops = traj.populations
    if traj.dim == 2:
        return pops[:, [0, 1]], np.zeros(len(pops))
    if traj.dim == 5:
        return pops[:, [0, 4]], pops[:, 1:4].sum(axis=1)
    raise DomainError(f"cannot map a {traj.dim}-state trajectory")


def compare(full: Trajectory, eff: Trajectory) -> dict:
    """Population error on the microwave/optical pair and leakage into levels 1-3."""
    if full.times.shape != eff.times.shape or not np.allclose(
        full.times, eff.times, rtol=1e-12, atol=0.0
    ):
        raise GridMismatchError("trajectories are sampled on different time grids")
    p_full, leak = _mapped_populations(full)
    p_eff, _ = _mapped_populations(eff)
    diff = np.abs(p_full - p_eff)
    return {
        "max_error": float(diff.max()),
        "rms_error": float(np.sqrt(np.mean(diff**2))),
        "max_leakage": float(leak.max()),
    }
