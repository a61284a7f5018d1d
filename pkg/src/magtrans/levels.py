"""Energy levels, detunings and the magnon/spin resonance crossing.

All functions accept scalars or numpy arrays for the field and frequency
arguments and return frequencies in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateCrossingError,
    DomainError,
    NoCrossingError,
)
from .params import DeviceConfig

DEFAULT_CROSSING_TOL = 1e3  # Hz


@dataclass(frozen=True)
class Detunings:
    """Spin (``delta``), magnon (``delta_tilde``) and optical (``delta_cap``) detunings in Hz.

    Without a magnet the magnon detuning is ``inf``: the magnon is
    infinitely far from every drive.
    """

    delta: float
    delta_tilde: float
    delta_cap: float


def _mu(cfg):
    return cfg.constants.bohr_magneton_over_h


def _exchange_shift(cfg):
    m = cfg.magnet
    return 0.0 if m is None else m.coordination_z * m.j_par


def magnon_energy(bz, cfg: DeviceConfig):
    """Kittel-mode excitation frequency, including the exchange shift spread over N_Fe."""
    m = cfg.magnet
    if m is None:
        raise DomainError("magnon_energy needs a [magnet] section")
    bz = np.asarray(bz, dtype=float) if not np.isscalar(bz) else float(bz)
    if np.any(np.asarray(bz) < 0):
        raise DomainError("magnon_energy is undefined for negative B_z")
    kittel = m.gyromagnetic_ratio * np.sqrt(bz * (bz + m.saturation_magnetization))
    return kittel - m.coordination_z * m.j_par / (2.0 * m.n_fe)


def spin_energy(bz, cfg: DeviceConfig):
    """Erbium ground-doublet splitting; the Ising exchange acts as a static offset."""
    return _mu(cfg) * cfg.erbium.g_ground * bz + _exchange_shift(cfg) / 2.0


def optical_energy(bz, cfg: DeviceConfig):
    e0 = cfg.erbium.delta_e_zero_field
    if e0 is None:
        raise DomainError("optical_energy needs erbium.delta_e in the config")
    return e0 + _mu(cfg) * (cfg.erbium.g_excited - cfg.erbium.g_ground) * bz


def detunings(bz, omega_b, omega_a, cfg: DeviceConfig) -> Detunings:
    if np.any(np.asarray(omega_a) <= 0) or np.any(np.asarray(omega_b) <= 0):
        raise DomainError("cavity frequencies must be positive")
    delta = spin_energy(bz, cfg) - omega_b
    if cfg.magnet is None:
        delta_tilde = math.inf
    else:
        delta_tilde = magnon_energy(bz, cfg) - omega_b
    return Detunings(delta, delta_tilde, optical_energy(bz, cfg) - omega_a)


def pump_frequency(omega_a: float, omega_b: float) -> float:
    """Pump frequency closing the three-photon resonance ``omega_b + omega_pump = omega_a``."""
    if not omega_a > omega_b:
        raise DomainError(f"omega_a ({omega_a!r}) must exceed omega_b ({omega_b!r})")
    return omega_a - omega_b


def crossing_residual(bz, cfg: DeviceConfig):
    return magnon_energy(bz, cfg) - spin_energy(bz, cfg)


def bisect_root(func, lo, hi, tol, max_iter=200):
    """Bisection on a sign-changing bracket, stopping once ``|func(x)| < tol``.

    Returns the best midpoint if the bracket collapses to adjacent floats
    and the residual is still within tolerance; otherwise raises.
    """
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoCrossingError(f"no sign change on [{lo!r}, {hi!r}]")
    best, best_f = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if abs(f_mid) < abs(best_f):
            best, best_f = mid, f_mid
        if abs(f_mid) < tol:
            return mid
        if mid in (lo, hi):
            break
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    if abs(best_f) < tol:
        return best
    raise ConvergenceError(f"bisection stalled at residual {best_f!r} (tol {tol!r})")


def find_crossing(cfg: DeviceConfig, bracket=(0.0, 1.0), tol=DEFAULT_CROSSING_TOL) -> float:
    """Field at which the magnon and erbium-spin transitions are degenerate.

    ``tol`` bounds ``|E_m - E_up|`` at the returned field, in Hz.
    """
    lo, hi = (float(b) for b in bracket)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"bracket endpoints must be finite, got {bracket!r}")
    if lo > hi:
        lo, hi = hi, lo
    probes = (lo, 0.5 * (lo + hi), hi)
    if all(
        abs(crossing_residual(b, cfg)) <= 1e-12 * max(1.0, abs(spin_energy(b, cfg)))
        for b in probes
    ):
        raise DegenerateCrossingError("magnon and spin curves coincide on the whole bracket")
    return bisect_root(lambda b: crossing_residual(b, cfg), lo, hi, tol)


def level_curves(bz, cfg: DeviceConfig):
    """Magnon and spin excitation frequencies on a field grid (the crossing diagram)."""
    bz = np.asarray(bz, dtype=float)
    spin = spin_energy(bz, cfg)
    magnon = magnon_energy(bz, cfg) if cfg.magnet is not None else np.full_like(bz, np.nan)
    return magnon, spin
