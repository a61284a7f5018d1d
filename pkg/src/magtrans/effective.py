"""RWA Hamiltonian, adiabatic elimination and the effective transduction rate.

Basis of the five-level single-excitation space::

    0  |down,->|1_b>|0_a>   microwave photon
    1  |down,+>|0>|0>       magnon
    2  |up,->|0>|0>         erbium spin flip
    3  |e,->|0>|0>          optical excited state
    4  |down,->|0_b>|1_a>   optical photon

All couplings are complex frequencies in Hz. The magnet enters only
through the aggregated couplings ``g_tilde = g_b_tilde * sqrt(n_fe)`` and
``h = h_perp / sqrt(n_fe)``; without a magnet both vanish and the magnon
detuning is infinite.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, SingularError
from .levels import Detunings
from .params import DeviceConfig, dmi_to_coupling, perp_exchange_to_coupling

BASIS_LABELS = (
    "|down,->|1>_b|0>_a",
    "|down,+>|0>_b|0>_a",
    "|up,->|0>_b|0>_a",
    "|e,->|0>_b|0>_a",
    "|down,->|0>_b|1>_a",
)
LINEWIDTH_FACTOR = 5.0
DEFAULT_THRESHOLD = 10.0


@dataclass(frozen=True)
class CouplingSet:
    """Per-spin couplings plus the ensemble sizes they are aggregated with."""

    g_a: complex
    g_b: complex
    g_b_tilde: complex
    h_perp: complex
    rabi_pump: complex
    n_er: float = 1.0
    n_fe: float = 1.0

    def __post_init__(self):
        if self.n_fe <= 0 and self.h_perp != 0:
            raise DomainError("n_fe must be positive when h_perp is nonzero")
        if self.n_fe < 0 or self.n_er < 0:
            raise DomainError("ensemble sizes must be non-negative")

    @property
    def g_tilde(self) -> complex:
        return self.g_b_tilde * math.sqrt(self.n_fe)

    @property
    def h(self) -> complex:
        if self.h_perp == 0:
            return 0.0
        return self.h_perp / math.sqrt(self.n_fe)

    @property
    def magnon_free(self) -> bool:
        return self.g_tilde == 0 and self.h == 0

    def conjugate(self) -> "CouplingSet":
        conj = np.conjugate
        return CouplingSet(
            conj(self.g_a), conj(self.g_b), conj(self.g_b_tilde), conj(self.h_perp),
            conj(self.rabi_pump), self.n_er, self.n_fe,
        )


def couplings_from_config(cfg: DeviceConfig, *, j_perp=None, rabi_pump=None) -> CouplingSet:
    """Assemble a :class:`CouplingSet`; ``j_perp`` and ``rabi_pump`` override the config."""
    er, m = cfg.erbium, cfg.magnet
    pump = er.rabi_pump if rabi_pump is None else rabi_pump
    if m is None:
        if j_perp is not None:
            raise DomainError("j_perp override needs a [magnet] section")
        return CouplingSet(er.g_a, er.g_b, 0.0, 0.0, pump, er.n_er, 0.0)
    jp = m.j_perp if j_perp is None else j_perp
    h_perp = perp_exchange_to_coupling(jp, m.coordination_z, er.beta_minus)
    if m.dmi_dz:
        h_perp = h_perp + dmi_to_coupling(m.dmi_dz, m.coordination_z, er.beta_minus)
    return CouplingSet(er.g_a, er.g_b, m.g_b_tilde, h_perp, pump, er.n_er, m.n_fe)


@dataclass(frozen=True)
class RwaMatrix:
    entries: np.ndarray
    labels: tuple = BASIS_LABELS

    def is_hermitian(self, rtol=1e-12) -> bool:
        scale = np.max(np.abs(self.entries)) or 1.0
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) < rtol * scale)


def _magnon_diagonal(c: CouplingSet, d: Detunings):
    if math.isfinite(d.delta_tilde):
        return d.delta_tilde
    if c.magnon_free:
        # A decoupled level; its energy never reaches the dynamics.
        return 0.0
    raise DomainError("infinite magnon detuning with nonzero magnon couplings")


def build_rwa_hamiltonian(c: CouplingSet, d: Detunings, cavity_modes=True) -> RwaMatrix:
    """Time-independent RWA matrix in Hz.

    With ``cavity_modes=False`` returns the 4x4 atom-only matrix in which
    the optical field couples level 0 to level 3 directly.
    """
    if not cavity_modes:
        h = np.zeros((4, 4), dtype=complex)
        h[1, 1], h[2, 2], h[3, 3] = _magnon_diagonal(c, d), d.delta, d.delta_cap
        h[0, 1], h[0, 2], h[0, 3] = c.g_tilde, c.g_b, c.g_a
        h[1, 2], h[2, 3] = c.h, c.rabi_pump
        h = np.triu(h, 1) + np.triu(h, 1).conj().T + np.diag(np.diag(h))
        return RwaMatrix(h, BASIS_LABELS[:4])
    h = np.zeros((5, 5), dtype=complex)
    h[1, 1], h[2, 2], h[3, 3] = _magnon_diagonal(c, d), d.delta, d.delta_cap
    h[0, 1] = c.g_tilde
    h[0, 2] = c.g_b
    h[1, 2] = c.h
    h[2, 3] = c.rabi_pump
    h[3, 4] = c.g_a
    upper = np.triu(h, 1)
    return RwaMatrix(upper + upper.conj().T + np.diag(np.diag(h)))


@dataclass(frozen=True)
class EliminationCoefficients:
    """Each eliminated amplitude as ``c_k = coef[0] * c0 + coef[1] * c4``."""

    c1: tuple
    c2: tuple
    c3: tuple
    denominator: float = math.nan

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=complex)


def eliminate(c: CouplingSet, d: Detunings) -> EliminationCoefficients:
    """Closed-form solution of the stationary rows 1-3 for (c1, c2, c3)."""
    g_t, g_b, g_a, h, om = c.g_tilde, c.g_b, c.g_a, c.h, c.rabi_pump
    dl, dt, dc = d.delta, d.delta_tilde, d.delta_cap
    cj = np.conjugate
    if not math.isfinite(dt):
        if not c.magnon_free:
            raise DomainError("infinite magnon detuning with nonzero magnon couplings")
        den = dl * dc - abs(om) ** 2
        if den == 0:
            raise SingularError("singular elimination (delta*Delta = |Omega|^2)", den)
        return EliminationCoefficients(
            (0j, 0j),
            (-dc * cj(g_b) / den, om * g_a / den),
            (cj(om) * cj(g_b) / den, -dl * g_a / den),
            den,
        )
    pair = dl * dt - abs(h) ** 2
    den = dc * pair - dt * abs(om) ** 2
    if den == 0:
        raise SingularError("singular elimination denominator", den)
    mixed = cj(h) * cj(g_t) - dt * cj(g_b)
    return EliminationCoefficients(
        (((abs(om) ** 2 - dc * dl) * cj(g_t) + dc * h * cj(g_b)) / den, -h * om * g_a / den),
        (dc * mixed / den, dt * om * g_a / den),
        (-cj(om) * mixed / den, -pair * g_a / den),
        den,
    )


def _rate_kernel(g_a, g_b, g_tilde, h, delta, delta_tilde, delta_cap):
    """Per-ion transduction rate per unit (conjugated) pump amplitude.

    Array friendly and unchecked: zero denominators give inf/nan.
    """
    cj = np.conjugate
    magnon_free = (np.asarray(g_tilde) == 0) & (np.asarray(h) == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bare = cj(g_b) * cj(g_a) / (delta_cap * delta)
        pair = delta * delta_tilde - np.abs(h) ** 2
        dressed = (delta_tilde * cj(g_b) - cj(h * g_tilde)) * cj(g_a) / (delta_cap * pair)
    return np.where(magnon_free, bare, dressed)


def _lambda_b_kernel(g_b, g_tilde, h, omega, delta, delta_tilde, delta_cap):
    magnon_free = (np.asarray(g_tilde) == 0) & (np.asarray(h) == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bare = np.abs(g_b) ** 2 / delta
        pair = delta * delta_tilde - np.abs(h) ** 2
        cross = 2.0 * np.real(h * g_tilde * np.conjugate(g_b))
        dressed = (
            -cross
            - (np.abs(omega) ** 2 / delta_cap - delta) * np.abs(g_tilde) ** 2
            + delta_tilde * np.abs(g_b) ** 2
        ) / pair
    return np.where(magnon_free, bare, dressed)


@dataclass(frozen=True)
class EffectiveModel:
    """Two-mode effective model after eliminating levels 1-3.

    ``s_rate`` is the ensemble transduction rate (n_er times the per-ion
    value); ``s_over_omega`` is the same rate per unit pump amplitude, equal
    to S/Omega for a real pump. ``lambda_a`` and ``lambda_b`` are the
    induced cavity pulls in the printed sign convention, in which both carry
    the opposite sign to the diagonal of the eliminated amplitude equations.
    """

    s_rate: complex
    s_over_omega: complex
    lambda_a: float
    lambda_b: float
    couplings: CouplingSet
    detunings: Detunings
    extra: dict = field(default_factory=dict, compare=False)


def transduction_rate(c: CouplingSet, d: Detunings) -> EffectiveModel:
    dl, dt, dc = d.delta, d.delta_tilde, d.delta_cap
    if dc == 0:
        raise SingularError("optical detuning Delta is zero", 0.0)
    if c.magnon_free:
        if dl == 0:
            raise SingularError("spin detuning delta is zero", 0.0)
    else:
        if not math.isfinite(dt):
            raise DomainError("infinite magnon detuning with nonzero magnon couplings")
        pair = dl * dt - abs(c.h) ** 2
        if pair == 0:
            raise SingularError("delta*delta_tilde - |h|^2 vanishes", pair)
    unit = complex(_rate_kernel(c.g_a, c.g_b, c.g_tilde, c.h, dl, dt, dc))
    lam_b = float(_lambda_b_kernel(c.g_b, c.g_tilde, c.h, c.rabi_pump, dl, dt, dc))
    s_over_omega = c.n_er * unit
    return EffectiveModel(
        s_rate=s_over_omega * np.conjugate(c.rabi_pump),
        s_over_omega=s_over_omega,
        lambda_a=abs(c.g_a) ** 2 / dc,
        lambda_b=lam_b,
        couplings=c,
        detunings=d,
    )


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    ratios: dict
    mask: dict
    threshold: float = DEFAULT_THRESHOLD

    def failing(self):
        return sorted(k for k, v in self.ratios.items() if not v >= self.threshold)


RATIO_NAMES = (
    "delta_tilde/g_tilde",
    "delta_tilde/h",
    "delta/rabi_pump",
    "delta/g_b",
    "delta/h",
    "delta_cap/g_a",
    "delta_cap/rabi_pump",
    "pump_shift",
)


def _safe_ratio(num, den):
    num, den = np.abs(num), np.abs(den)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den == 0, np.inf, num / np.where(den == 0, 1.0, den))


def validity_ratios(g_a, g_b, g_tilde, h, omega, delta, delta_tilde, delta_cap):
    """The eight detuning/coupling ratios; zero couplings give ``inf``."""
    infinite_magnon = np.isinf(delta_tilde)
    with np.errstate(invalid="ignore"):
        shift_num = np.where(
            infinite_magnon, delta_cap * delta, delta_cap * (delta * delta_tilde - np.abs(h) ** 2)
        )
        shift_den = np.where(
            infinite_magnon, np.abs(omega) ** 2, delta_tilde * np.abs(omega) ** 2
        )
    values = (
        _safe_ratio(delta_tilde, g_tilde),
        _safe_ratio(delta_tilde, h),
        _safe_ratio(delta, omega),
        _safe_ratio(delta, g_b),
        _safe_ratio(delta, h),
        _safe_ratio(delta_cap, g_a),
        _safe_ratio(delta_cap, omega),
        _safe_ratio(shift_num, shift_den),
    )
    return dict(zip(RATIO_NAMES, values))


def linewidth_mask(delta, delta_tilde, cfg: Optional[DeviceConfig]):
    """Flags for detunings within five inhomogeneous linewidths of a transition."""
    if cfg is None:
        no = np.zeros(np.broadcast(delta, delta_tilde).shape, dtype=bool)
        return no, no
    spin = np.abs(delta) < LINEWIDTH_FACTOR * cfg.erbium.sigma_spin
    if cfg.magnet is None:
        magnon = np.zeros(np.shape(spin), dtype=bool)
    else:
        magnon = np.abs(delta_tilde) < LINEWIDTH_FACTOR * cfg.magnet.sigma_magnon
    return spin, magnon


def validity(
    c: CouplingSet,
    d: Detunings,
    cfg: Optional[DeviceConfig] = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> ValidityReport:
    """Check the adiabatic-elimination conditions and the linewidth stripes.

    ``cfg`` supplies the linewidths; with ``None`` no stripe is applied.
    """
    if not threshold > 1:
        raise DomainError(f"threshold must exceed 1, got {threshold!r}")
    raw = validity_ratios(
        c.g_a, c.g_b, c.g_tilde, c.h, c.rabi_pump, d.delta, d.delta_tilde, d.delta_cap
    )
    ratios = {k: float(v) for k, v in raw.items()}
    spin, magnon = linewidth_mask(d.delta, d.delta_tilde, cfg)
    mask = {"delta": bool(spin), "delta_tilde": bool(magnon)}
    ok = all(v >= threshold for v in ratios.values()) and not any(mask.values())
    return ValidityReport(ok, ratios, mask, threshold)


def phase(z) -> float:
    return cmath.phase(complex(z))
