"""Input-output layer: cooperativity, efficiency, impedance matching and scattering.

``omega`` in :func:`scattering` is the Fourier variable of the mode
operators, not a detuning from cavity resonance; the steady-state
efficiency is its value at ``omega = 0``. All rates are in Hz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, SingularError
from .params import CavityParams

# Impedance matching means 2|S| = kappa_c, hence kappa_c / Omega = 2 |S / Omega|.
MATCH_FACTOR = 2.0


@dataclass(frozen=True)
class LossBudget:
    kappa_a_c: float
    kappa_a_i: float
    kappa_b_c: float
    kappa_b_i: float

    def __post_init__(self):
        for name in ("kappa_a_c", "kappa_a_i", "kappa_b_c", "kappa_b_i"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and non-negative, got {value!r}")

    @property
    def kappa_a(self) -> float:
        return self.kappa_a_c + self.kappa_a_i

    @property
    def kappa_b(self) -> float:
        return self.kappa_b_c + self.kappa_b_i

    @property
    def ratio_a(self) -> float:
        return self.kappa_a_i / self.kappa_a_c if self.kappa_a_c else math.inf

    @property
    def ratio_b(self) -> float:
        return self.kappa_b_i / self.kappa_b_c if self.kappa_b_c else math.inf

    @classmethod
    def from_cavities(cls, cav: CavityParams) -> "LossBudget":
        return cls(cav.kappa_a_c, cav.kappa_a_i, cav.kappa_b_c, cav.kappa_b_i)

    @classmethod
    def symmetric(cls, kappa_c, kappa_a_i=0.0, kappa_b_i=0.0) -> "LossBudget":
        """Equal coupling rates on both ports (the convention of the efficiency maps)."""
        return cls(kappa_c, kappa_a_i, kappa_c, kappa_b_i)

    def swapped(self) -> "LossBudget":
        return LossBudget(self.kappa_b_c, self.kappa_b_i, self.kappa_a_c, self.kappa_a_i)


@dataclass(frozen=True)
class ScatteringMatrix:
    """Output amplitudes per unit input: ``a_out = r_aa a_in + t_ab b_in`` and likewise for b."""

    omega: np.ndarray
    t_ab: np.ndarray
    r_aa: np.ndarray
    t_ba: np.ndarray
    r_bb: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Array of shape (..., 2, 2) ordered (a, b)."""
        top = np.stack([self.r_aa, self.t_ab], axis=-1)
        bottom = np.stack([self.t_ba, self.r_bb], axis=-1)
        return np.stack([top, bottom], axis=-2)


def _check_kappas(kappa_a, kappa_b):
    if np.any(np.asarray(kappa_a) <= 0) or np.any(np.asarray(kappa_b) <= 0):
        raise DomainError("cavity decay rates must be positive")


def cooperativity(s, kappa_a, kappa_b):
    _check_kappas(kappa_a, kappa_b)
    return 4.0 * np.abs(s) ** 2 / (kappa_a * kappa_b)


def efficiency_lossless(s, kappa_a, kappa_b):
    _check_kappas(kappa_a, kappa_b)
    root = np.sqrt(kappa_a * kappa_b)
    return 4.0 * np.abs(s) * root / (kappa_a * kappa_b + 4.0 * np.abs(s) ** 2)


def efficiency(s, budget: LossBudget):
    """Steady-state conversion efficiency with intrinsic losses on both ports."""
    ka, kb = budget.kappa_a, budget.kappa_b
    _check_kappas(ka, kb)
    s = np.abs(s)
    return 4.0 * s * math.sqrt(budget.kappa_a_c * budget.kappa_b_c) / (ka * kb + 4.0 * s**2)


def efficiency_grid(s, kappa_c, kappa_a_i=0.0, kappa_b_i=0.0):
    """Vectorized efficiency for the symmetric-coupling convention."""
    kappa_c = np.asarray(kappa_c, dtype=float)
    ka, kb = kappa_c + kappa_a_i, kappa_c + kappa_b_i
    _check_kappas(ka, kb)
    s = np.abs(s)
    return 4.0 * s * kappa_c / (ka * kb + 4.0 * s**2)


def eta_max(ratio_a: float, ratio_b: float) -> float:
    """Efficiency when 2|S| equals the geometric mean of the coupling rates alone.

    ``ratio_a`` and ``ratio_b`` are intrinsic/extrinsic loss ratios. This is
    the conventional figure of merit; the true optimum over |S|, reached
    when 2|S| matches the total decay rates, is :func:`eta_optimal`.
    """
    if ratio_a < 0 or ratio_b < 0:
        raise DomainError("loss ratios must be non-negative")
    return 2.0 / ((1.0 + ratio_a) * (1.0 + ratio_b) + 1.0)


def eta_optimal(ratio_a: float, ratio_b: float) -> float:
    """Maximum of :func:`efficiency` over |S|; never below :func:`eta_max`."""
    if ratio_a < 0 or ratio_b < 0:
        raise DomainError("loss ratios must be non-negative")
    return 1.0 / math.sqrt((1.0 + ratio_a) * (1.0 + ratio_b))


def optimal_rate(budget: LossBudget) -> float:
    """|S| maximizing :func:`efficiency` for a fixed budget."""
    return 0.5 * math.sqrt(budget.kappa_a * budget.kappa_b)


def match_kappa(s_over_omega, omega_pump, kappa_a_i=0.0, kappa_b_i=0.0) -> float:
    """Common coupling rate kappa_c meeting 2|S| = sqrt(kappa_a kappa_b).

    With no intrinsic loss this is simply ``2 |S/Omega| Omega``.
    """
    s = abs(s_over_omega) * abs(omega_pump)
    if s == 0:
        warnings.warn("zero transduction rate: matching is degenerate (kappa_c = 0)", stacklevel=2)
    if kappa_a_i == 0 and kappa_b_i == 0:
        return MATCH_FACTOR * s
    root = math.sqrt((kappa_a_i - kappa_b_i) ** 2 + 16.0 * s**2)
    kappa_c = 0.5 * (root - (kappa_a_i + kappa_b_i))
    if kappa_c < 0:
        raise DomainError("intrinsic losses exceed what this transduction rate can match")
    return kappa_c


def match_pump(kappa_c, s_over_omega, kappa_a_i=0.0, kappa_b_i=0.0) -> float:
    """Pump amplitude Omega for which a given kappa_c is impedance matched."""
    if s_over_omega == 0:
        raise SingularError("S/Omega is zero; no pump achieves matching", 0.0)
    if kappa_c < 0:
        raise DomainError("kappa_c must be non-negative")
    need = math.sqrt((kappa_c + kappa_a_i) * (kappa_c + kappa_b_i))
    return need / (MATCH_FACTOR * abs(s_over_omega))


def matching_ratio_magnet(n_er, h_perp, g_b_tilde, g_a, delta_cap, delta, delta_tilde, printed=False):
    """kappa_c / Omega in the magnon-dominated limit (direct spin drive neglected).

    ``printed=True`` drops the factor of two that the matching condition
    2|S| = kappa_c implies, returning |S/Omega| itself.
    """
    den = delta_cap * delta * delta_tilde
    if den == 0:
        raise SingularError("zero detuning in the magnet matching ratio", den)
    factor = 1.0 if printed else MATCH_FACTOR
    return factor * abs(n_er * h_perp * g_b_tilde * g_a / den)


def matching_ratio_bare(n_er, g_b, g_a, delta_cap, delta, printed=False):
    """kappa_c / Omega without a magnet."""
    den = delta_cap * delta
    if den == 0:
        raise SingularError("zero detuning in the matching ratio", den)
    factor = 1.0 if printed else MATCH_FACTOR
    return factor * abs(n_er * g_b * g_a / den)


def scattering(omega, s, kappa_a, kappa_b) -> ScatteringMatrix:
    _check_kappas(kappa_a, kappa_b)
    w = 2j * np.asarray(omega, dtype=float)
    s2 = 4.0 * abs(s) ** 2
    root = math.sqrt(kappa_a * kappa_b)
    den = (w + kappa_a) * (w + kappa_b) + s2
    return ScatteringMatrix(
        omega=np.asarray(omega, dtype=float),
        t_ab=-4j * s * root / den,
        r_aa=(-(w - kappa_a) * (w + kappa_b) - s2) / den,
        t_ba=-4j * np.conjugate(s) * root / den,
        r_bb=(-(w - kappa_b) * (w + kappa_a) - s2) / den,
    )


def _half_power_point(func, half, sign, start, max_doublings=200, rtol=1e-13):
    hi = start
    for _ in range(max_doublings):
        if func(sign * hi) < half:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("no half-power point found")
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if func(sign * mid) >= half:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bandwidth(s, kappa_a, kappa_b) -> float:
    """Full width at half maximum of |t(omega)|^2, referenced to its omega = 0 value."""
    _check_kappas(kappa_a, kappa_b)
    if s == 0:
        raise DomainError("bandwidth is undefined when the transduction rate is zero")

    def power(w):
        return float(np.abs(scattering(w, s, kappa_a, kappa_b).t_ab) ** 2)

    half = 0.5 * power(0.0)
    start = max(kappa_a, kappa_b, 2.0 * abs(s))
    upper = _half_power_point(power, half, +1.0, start)
    lower = _half_power_point(power, half, -1.0, start)
    return upper + lower
