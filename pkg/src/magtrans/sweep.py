"""Two-dimensional parameter sweeps, figure presets and CSV/JSON output.

A sweep evaluates the closed-form rate on a grid with numpy. Rows are
split into chunks that may run on a thread pool. Every chunk writes into
its own slice of a preallocated array, so the output never depends on
scheduling.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .effective import _rate_kernel, linewidth_mask, validity_ratios
from .errors import ConfigError, DomainError, OutputError
from .inout import LossBudget, efficiency, efficiency_grid
from .levels import find_crossing, level_curves, magnon_energy, spin_energy
from .params import DeviceConfig, dmi_to_coupling, perp_exchange_to_coupling

PARAMETERS = ("bz", "omega_b", "delta", "delta_tilde", "j_perp", "rabi_pump", "kappa_c")
QUANTITIES = ("s_over_omega", "abs_s", "efficiency", "ratio_to_baseline")
SCALES = ("linear", "log")


@dataclass(frozen=True)
class AxisSpec:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.name!r}", key=self.name)
        if self.scale not in SCALES:
            raise ConfigError(f"unknown axis scale {self.scale!r}", key="scale")
        if not self.min < self.max:
            raise ConfigError(f"axis {self.name}: min must be below max", key=self.name)
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"axis {self.name}: need an integer count >= 2", key=self.name)
        if self.scale == "log" and self.min <= 0:
            raise ConfigError(f"axis {self.name}: log scale needs min > 0", key=self.name)

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, int(self.count))
        return np.linspace(self.min, self.max, int(self.count))

    def label(self) -> str:
        return f"{self.name}[{self.min!r}:{self.max!r}:{int(self.count)}:{self.scale}]"

    @classmethod
    def parse(cls, text: str) -> "AxisSpec":
        """Inverse of :meth:`label`."""
        try:
            name, rest = text.strip().split("[", 1)
            lo, hi, count, scale = rest.rstrip("]").split(":")
            return cls(name, float(lo), float(hi), int(count), scale)
        except ValueError as exc:
            raise ConfigError(f"bad axis specification {text!r}") from exc

    def with_count(self, count) -> "AxisSpec":
        return AxisSpec(self.name, self.min, self.max, count, self.scale)


@dataclass
class SweepResult:
    x_axis: AxisSpec
    y_axis: AxisSpec
    values: np.ndarray  # (y.count, x.count)
    masked: np.ndarray
    quantity: str
    meta: dict = field(default_factory=dict)

    def best(self):
        """Largest finite unmasked value and its (x, y) location."""
        ok = ~self.masked & np.isfinite(self.values)
        if not ok.any():
            raise DomainError("no unmasked finite point in the sweep")
        flat = np.where(ok, self.values, -np.inf)
        iy, ix = np.unravel_index(int(np.argmax(flat)), flat.shape)
        return float(self.values[iy, ix]), float(self.x_axis.values()[ix]), float(self.y_axis.values()[iy])


def _fmt(value) -> str:
    return repr(float(value))


def _detunings(cfg, p):
    """Spin and magnon detunings from whichever parameters the sweep fixes."""
    bz = p.get("bz", cfg.static_field_bz)
    magnet = cfg.magnet is not None
    if "delta" in p and "delta_tilde" in p:
        return p["delta"], p["delta_tilde"]
    if "delta" in p:
        omega_b = spin_energy(bz, cfg) - p["delta"]
        delta_t = magnon_energy(bz, cfg) - omega_b if magnet else np.inf
        return p["delta"], delta_t
    if "delta_tilde" in p:
        if not magnet:
            raise DomainError("a delta_tilde axis needs a [magnet] section")
        omega_b = magnon_energy(bz, cfg) - p["delta_tilde"]
        return spin_energy(bz, cfg) - omega_b, p["delta_tilde"]
    omega_b = p.get("omega_b", cfg.cavities.omega_b)
    delta_t = magnon_energy(bz, cfg) - omega_b if magnet else np.inf
    return spin_energy(bz, cfg) - omega_b, delta_t


def _magnon_couplings(cfg, p):
    m = cfg.magnet
    if m is None:
        if "j_perp" in p:
            raise DomainError("a j_perp axis needs a [magnet] section")
        return 0.0, 0.0
    h_perp = perp_exchange_to_coupling(p.get("j_perp", m.j_perp), m.coordination_z, cfg.erbium.beta_minus)
    if m.dmi_dz:
        h_perp = h_perp + dmi_to_coupling(m.dmi_dz, m.coordination_z, cfg.erbium.beta_minus)
    return m.g_b_tilde * math.sqrt(m.n_fe), h_perp / math.sqrt(m.n_fe)


def evaluate(cfg: DeviceConfig, p: dict, quantity: str, baseline=None, adiabatic_threshold=None, intrinsic=True):
    """Pointwise pipeline on broadcastable parameter arrays; returns (values, masked)."""
    er, cav = cfg.erbium, cfg.cavities
    delta, delta_t = _detunings(cfg, p)
    g_tilde, h = _magnon_couplings(cfg, p)
    omega = p.get("rabi_pump", er.rabi_pump)
    dc = cfg.delta_cap
    shape = np.broadcast(*(np.asarray(v) for v in p.values())).shape
    unit = _rate_kernel(er.g_a, er.g_b, g_tilde, h, delta, delta_t, dc)
    s_over = er.n_er * unit
    s = s_over * np.conjugate(omega)
    if quantity == "s_over_omega":
        value = np.abs(s_over)
    elif quantity == "abs_s":
        value = np.abs(s)
    elif quantity == "ratio_to_baseline":
        if not baseline:
            raise DomainError("ratio_to_baseline needs a nonzero baseline |S0|")
        value = np.abs(s) / baseline
    elif quantity == "efficiency":
        ka_i = cav.kappa_a_i if intrinsic else 0.0
        kb_i = cav.kappa_b_i if intrinsic else 0.0
        if "kappa_c" in p:
            with np.errstate(invalid="ignore"):
                value = efficiency_grid(s, p["kappa_c"], ka_i, kb_i)
        else:
            budget = LossBudget(cav.kappa_a_c, ka_i, cav.kappa_b_c, kb_i)
            with np.errstate(invalid="ignore"):
                value = efficiency(s, budget)
    else:
        raise DomainError(f"unknown quantity {quantity!r}")
    value = np.broadcast_to(np.asarray(value, dtype=float), shape)
    singular = ~np.isfinite(value)
    spin_m, magnon_m = linewidth_mask(delta, delta_t, cfg)
    masked = np.broadcast_to(spin_m | magnon_m, shape) | singular
    if adiabatic_threshold is not None:
        ratios = validity_ratios(er.g_a, er.g_b, g_tilde, h, omega, delta, delta_t, dc)
        for r in ratios.values():
            masked = masked | np.broadcast_to(~(r >= adiabatic_threshold), shape)
    return np.where(singular, np.nan, value), np.array(masked)


def _check_axes(cfg, x, y, quantity, fixed):
    names = {x.name, y.name} | set(fixed)
    if x.name == y.name:
        raise DomainError("the two axes must sweep different parameters")
    if x.name in fixed or y.name in fixed:
        raise DomainError("a fixed parameter cannot also be an axis")
    if "omega_b" in names and names & {"delta", "delta_tilde"}:
        raise DomainError("omega_b cannot be combined with a detuning parameter")
    if "bz" in names and {"delta", "delta_tilde"} <= names:
        raise DomainError("bz has no effect when both detunings are given")
    if "kappa_c" in names and quantity != "efficiency":
        raise DomainError("a kappa_c axis only makes sense for the efficiency quantity")
    if quantity not in QUANTITIES:
        raise DomainError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")


def sweep2d(
    cfg: DeviceConfig,
    x: AxisSpec,
    y: AxisSpec,
    quantity: str = "s_over_omega",
    *,
    fixed=None,
    baseline=None,
    adiabatic_threshold=None,
    intrinsic=True,
    threads=1,
) -> SweepResult:
    """Evaluate ``quantity`` on the y-by-x grid.

    ``fixed`` pins further parameters (e.g. ``bz`` or a detuning pair).
    Points within five linewidths of either transition are masked, and
    singular points are NaN and masked. ``adiabatic_threshold`` adds the
    elimination-validity mask on top.
    """
    fixed = dict(fixed or {})
    _check_axes(cfg, x, y, quantity, fixed)
    if quantity == "ratio_to_baseline" and baseline is None:
        baseline, _ = baseline_max(cfg)
    xs, ys = x.values(), y.values()
    values = np.empty((len(ys), len(xs)))
    masked = np.empty((len(ys), len(xs)), dtype=bool)

    def work(rows):
        p = dict(fixed)
        p[x.name] = xs[None, :]
        p[y.name] = ys[rows][:, None]
        v, m = evaluate(cfg, p, quantity, baseline, adiabatic_threshold, intrinsic)
        values[rows] = v
        masked[rows] = m

    chunks = [c for c in np.array_split(np.arange(len(ys)), max(1, int(threads))) if len(c)]
    if len(chunks) == 1:
        work(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(work, chunks))
    meta = {"delta_cap": _fmt(cfg.delta_cap), "magnet": "yes" if cfg.has_magnet else "no"}
    for key in sorted(fixed):
        meta[key] = _fmt(fixed[key])
    if baseline is not None:
        meta["baseline"] = _fmt(baseline)
    if adiabatic_threshold is not None:
        meta["adiabatic_threshold"] = _fmt(adiabatic_threshold)
    if quantity == "efficiency":
        meta["intrinsic"] = "yes" if intrinsic else "no"
    return SweepResult(x, y, values, masked, quantity, meta)


FIG2_FIELD_AXES = (AxisSpec("bz", 0.0, 0.6, 201), AxisSpec("omega_b", 1e9, 10e9, 201))
FIG2_DETUNING_AXES = (AxisSpec("delta", -2e9, 2e9, 401), AxisSpec("delta_tilde", -2e9, 2e9, 401))
FIG3_EXCHANGE_AXES = {
    "3a": (AxisSpec("delta", -6e9, 6e9, 401), AxisSpec("j_perp", 1e8, 1e10, 201, "log")),
    "3b": (AxisSpec("delta", -6e9, 6e9, 401), AxisSpec("j_perp", 1e9, 1e12, 201, "log")),
}
KAPPA_AXIS = AxisSpec("kappa_c", 1e5, 1e10, 201, "log")
FIG1_FIELD_AXIS = AxisSpec("bz", 0.0, 0.1, 501)
FIGURES = ("1a", "2a", "2b", "2c", "2d", "3a", "3b", "3c", "3d")


def _counted(axes, count):
    return tuple(a if count is None else a.with_count(count) for a in axes)


def baseline_max(cfg: DeviceConfig, axes=None, adiabatic_threshold=None, threads=1):
    """Largest unmasked |S| without the magnet, and where it occurs.

    The magnet section, if any, is ignored. ``axes`` defaults to the
    (delta, delta_tilde) detuning grid.
    """
    x, y = axes or FIG2_DETUNING_AXES
    res = sweep2d(cfg.without_magnet(), x, y, "abs_s", adiabatic_threshold=adiabatic_threshold, threads=threads)
    s0, px, py = res.best()
    if not s0 > 0:
        raise DomainError("baseline transduction rate is zero; nothing to normalize by")
    return s0, {x.name: px, y.name: py}


@dataclass
class LevelCurves:
    axis: AxisSpec
    magnon: np.ndarray
    spin: np.ndarray
    crossing: float = math.nan
    quantity: str = "level_curves"


def _pump_axis(s_over, count):
    """Pump range whose matching line 2|S| = kappa_c crosses the whole kappa window."""
    lo = KAPPA_AXIS.min / (2.0 * s_over) / 10.0
    hi = KAPPA_AXIS.max / (2.0 * s_over) * 10.0
    return AxisSpec("rabi_pump", lo, hi, count or KAPPA_AXIS.count, "log")


def run_figure(name: str, cfg: DeviceConfig, count=None, threads=1):
    """Regenerate the data behind one figure panel. Axis ranges are approximate presets."""
    if name not in FIGURES:
        raise DomainError(f"unknown figure {name!r}; choose from {FIGURES}")
    needs_magnet = name in ("2b", "2d", "3a", "3b", "3d")
    if needs_magnet and not cfg.has_magnet:
        raise DomainError(f"figure {name} needs a config with a [magnet] section")
    if name == "1a":
        if not cfg.has_magnet:
            raise DomainError("figure 1a needs a config with a [magnet] section")
        (axis,) = _counted((FIG1_FIELD_AXIS,), count)
        magnon, spin = level_curves(axis.values(), cfg)
        return LevelCurves(axis, magnon, spin, find_crossing(cfg))
    if name in ("2a", "2b"):
        use = cfg.without_magnet() if name == "2a" else cfg
        x, y = _counted(FIG2_FIELD_AXES, count)
        return sweep2d(use, x, y, "s_over_omega", threads=threads)
    if name in ("2c", "2d"):
        use = cfg.without_magnet() if name == "2c" else cfg
        x, y = _counted(FIG2_DETUNING_AXES, count)
        return sweep2d(use, x, y, "s_over_omega", threads=threads)
    if name in ("3a", "3b"):
        s0, _ = baseline_max(cfg, _counted(FIG2_DETUNING_AXES, count), threads=threads)
        x, y = _counted(FIG3_EXCHANGE_AXES[name], count)
        fixed = {"bz": find_crossing(cfg)}
        return sweep2d(cfg, x, y, "ratio_to_baseline", fixed=fixed, baseline=s0, threads=threads)
    use = cfg.without_magnet() if name == "3c" else cfg
    rates = sweep2d(use, *_counted(FIG2_DETUNING_AXES, count), "s_over_omega", threads=threads)
    s_over, d, dt = rates.best()
    (kappa,) = _counted((KAPPA_AXIS,), count)
    pump = _pump_axis(s_over, count)
    result = sweep2d(
        use, pump, kappa, "efficiency", fixed={"delta": d, "delta_tilde": dt},
        intrinsic=False, threads=threads,
    )
    result.meta["s_over_omega"] = _fmt(s_over)
    return result


def _header(result) -> str:
    if isinstance(result, LevelCurves):
        return f"# quantity=level_curves, x={result.axis.label()}, crossing={_fmt(result.crossing)}"
    parts = [f"quantity={result.quantity}", f"x={result.x_axis.label()}", f"y={result.y_axis.label()}"]
    parts += [f"{k}={v}" for k, v in result.meta.items()]
    return "# " + ", ".join(parts)


def to_csv(result) -> str:
    out = [_header(result)]
    if isinstance(result, LevelCurves):
        for b, m, s in zip(result.axis.values(), result.magnon, result.spin):
            out.append(f"{_fmt(b)},{_fmt(m)},{_fmt(s)}")
        return "\n".join(out) + "\n"
    xs, ys = result.x_axis.values(), result.y_axis.values()
    for iy, yv in enumerate(ys):
        ylab = _fmt(yv)
        for ix, xv in enumerate(xs):
            out.append(f"{_fmt(xv)},{ylab},{_fmt(result.values[iy, ix])},{int(result.masked[iy, ix])}")
    return "\n".join(out) + "\n"


def _nulled(a):
    return [[None if not math.isfinite(v) else float(v) for v in row] for row in a]


def to_json(result) -> str:
    if isinstance(result, LevelCurves):
        doc = {
            "quantity": result.quantity,
            "x_axis": result.axis.label(),
            "crossing": result.crossing,
            "bz": [float(v) for v in result.axis.values()],
            "magnon": [float(v) for v in result.magnon],
            "spin": [float(v) for v in result.spin],
        }
    else:
        doc = {
            "quantity": result.quantity,
            "x_axis": result.x_axis.label(),
            "y_axis": result.y_axis.label(),
            "values": _nulled(result.values),
            "masked": [[bool(v) for v in row] for row in result.masked],
            "meta": dict(result.meta),
        }
    return json.dumps(doc, allow_nan=False, indent=1) + "\n"


def parse_csv(text: str) -> SweepResult:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ConfigError("CSV sweep output must start with a '# ' header")
    fields = dict(item.split("=", 1) for item in lines[0][2:].split(", "))
    try:
        quantity = fields.pop("quantity")
        x = AxisSpec.parse(fields.pop("x"))
        y = AxisSpec.parse(fields.pop("y"))
    except KeyError as exc:
        raise ConfigError(f"CSV header lacks {exc.args[0]!r}") from exc
    rows = [line.split(",") for line in lines[1:] if line]
    if len(rows) != x.count * y.count:
        raise ConfigError(f"expected {x.count * y.count} data rows, found {len(rows)}")
    values = np.array([float(r[2]) for r in rows]).reshape(y.count, x.count)
    masked = np.array([r[3] == "1" for r in rows]).reshape(y.count, x.count)
    return SweepResult(x, y, values, masked, quantity, fields)


def emit(result, fmt="csv", sink=None) -> str:
    """Serialize ``result`` and write it to ``sink`` (path or text stream)."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise DomainError(f"unknown output format {fmt!r}")
    if sink is not None:
        emit_text(text, sink)
    return text


def emit_text(text: str, sink) -> None:
    """Write ``text`` to a path or text stream, naming the sink on failure."""
    try:
        if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
            with open(sink, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sink.write(text)
    except OSError as exc:
        name = getattr(sink, "name", sink)
        raise OutputError(f"cannot write to {name!r}: {exc}") from exc


def read_csv(path) -> SweepResult:
    with io.open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())
