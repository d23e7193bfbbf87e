"""Parameter sweeps, tau-trajectories and performance maximization.

Persistence probabilities depend only on the protocol, i.e. on
``(omega2/omega1, tau)`` for a fixed sweep shape, so grid sweeps evolve each
distinct protocol once and evaluate the (cheap) cycle energetics per point.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, NoEngineRegion, OttoError
from .protocol import TanhSweepConfig, endpoint_frequencies, tanh_sweep
from .spin_system import DEFAULT_STEP_ANGLE, CouplingConfig, persistence_for
from .thermo import BathConfig, CycleInputs, CycleReport, Regime, heat_terms, heats

AXIS_NAMES = ("J", "tau", "omega_ratio", "kT_h")
OBJECTIVES = ("work", "efficiency", "none")
MODES = ("adiabatic", "dynamic")
REPORT_COLUMNS = (
    "P", "P1", "P2",
    "E_A", "E_B", "E_C", "E_D",
    "Qh_leak", "Qh_ad", "Qh_fric", "Qc_leak", "Qc_ad", "Qc_fric",
    "Q_h", "Q_c", "W", "efficiency", "regime", "error",
)  # fmt: skip


@dataclass(frozen=True)
class Axis:
    """One swept parameter: ``n`` points from ``lo`` to ``hi`` (linear or log spacing)."""

    name: str
    lo: float
    hi: float
    n: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"unknown axis {self.name!r}; choose from {AXIS_NAMES}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ConfigError(f"axis {self.name}: need finite lo <= hi")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"axis {self.name}: resolution must be a positive integer")
        if self.n > 1 and self.lo == self.hi:
            raise ConfigError(f"axis {self.name}: empty range with n > 1")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name}: scale must be 'linear' or 'log'")
        if self.scale == "log" and not self.lo > 0:
            raise ConfigError(f"axis {self.name}: log scale needs lo > 0")

    def values(self) -> np.ndarray:
        if self.n == 1:
            return np.array([float(self.lo)])
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, int(self.n))
        return np.linspace(self.lo, self.hi, int(self.n))


@dataclass(frozen=True)
class SweepSpec:
    """Fixed parameters, swept axes and objective for a sweep or optimization.

    Parameters not named by an axis take the value in ``fixed``
    (keys ``J``, ``tau``, ``omega_ratio``, ``kT_h``).  In ``dynamic`` mode the
    persistences come from evolving a tanh sweep from ``hbar_omega1`` to
    ``omega_ratio * hbar_omega1`` on the window ``[t1, t2]``, grown to
    ``20 tau`` when ``widen`` is set; in ``adiabatic`` mode they are 1.
    """

    hbar_omega1: float
    tc_over_th: float
    axes: tuple = ()
    fixed: dict = field(default_factory=dict)
    objective: str = "none"
    mode: str = "dynamic"
    t1: float = 0.0
    t2: float = 20.0
    widen: bool = True
    max_step_angle: float = DEFAULT_STEP_ANGLE
    workers: int = 1

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis(**a) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", {k: float(v) for k, v in dict(self.fixed).items()})
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ConfigError("axes must be disjoint")
        for k in self.fixed:
            if k not in AXIS_NAMES:
                raise ConfigError(f"unknown fixed parameter {k!r}")
        missing = [k for k in AXIS_NAMES if k not in names and k not in self.fixed]
        if self.mode == "adiabatic":
            missing = [k for k in missing if k != "tau"]
        if missing:
            raise ConfigError(f"parameters neither swept nor fixed: {missing}")
        if not (self.hbar_omega1 > 0 and 0 < self.tc_over_th < 1):
            raise ConfigError("need hbar_omega1 > 0 and 0 < T_c/T_h < 1")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not self.max_step_angle > 0:
            raise ConfigError("max_step_angle must be positive")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers must be a positive integer")

    @property
    def axis_names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    def grid(self):
        """Grid points as parameter dicts, lexicographic in axis order."""
        for combo in itertools.product(*(a.values() for a in self.axes)):
            p = dict(self.fixed)
            p.update({a.name: float(v) for a, v in zip(self.axes, combo)})
            yield p

    def protocol_config(self, omega_ratio: float, tau: float) -> TanhSweepConfig:
        cfg = TanhSweepConfig.for_frequencies(
            self.hbar_omega1, omega_ratio * self.hbar_omega1, tau, t1=self.t1, t2=self.t2
        )
        return cfg.widened() if self.widen else cfg

    def to_dict(self) -> dict:
        return {
            "hbar_omega1": self.hbar_omega1,
            "tc_over_th": self.tc_over_th,
            "axes": [vars(a).copy() for a in self.axes],
            "fixed": dict(self.fixed),
            "objective": self.objective,
            "mode": self.mode,
            "t1": self.t1,
            "t2": self.t2,
            "widen": self.widen,
            "max_step_angle": self.max_step_angle,
            "workers": self.workers,
        }


@dataclass(frozen=True)
class TrajectoryPoint:
    tau: float
    persistence: tuple
    regime: Regime
    Q_h: float
    Q_c: float
    W: float

    def to_dict(self) -> dict:
        P, P1, P2 = self.persistence
        return {"tau": self.tau, "P": P, "P1": P1, "P2": P2, "regime": self.regime.value,
                "Q_h": self.Q_h, "Q_c": self.Q_c, "W": self.W}  # fmt: skip


def tau_trajectory(
    base: TanhSweepConfig,
    c: CouplingConfig,
    tau_values: Sequence[float],
    bath: BathConfig,
    widen: bool = True,
    steps: Optional[int] = None,
    max_step_angle: float = DEFAULT_STEP_ANGLE,
) -> list:
    """Persistence triple and cycle classification along increasing ``tau``.

    ``base`` fixes the sweep shape; only ``tau`` is varied.  With ``widen``
    each window is grown to at least ``20 tau`` so the ramp completes.
    """
    taus = [float(t) for t in tau_values]
    if not all(t > 0 for t in taus) or taus != sorted(taus):
        raise ConfigError("tau values must be positive and sorted")
    out = []
    for tau in taus:
        cfg = base.with_tau(tau)
        proto = tanh_sweep(cfg.widened() if widen else cfg)
        w1, w2 = endpoint_frequencies(proto)
        _, tm = persistence_for(proto, c, steps, max_step_angle)
        rep = heats(bath, CycleInputs(w1, w2, c.J, tm.persistence))
        out.append(TrajectoryPoint(tau, tm.persistence, rep.regime, rep.Q_h, rep.Q_c, rep.W))
    return out


def regime_sequence(points: Sequence[TrajectoryPoint]) -> list:
    """Regimes along a trajectory with consecutive repeats collapsed."""
    seq = []
    for p in points:
        if not seq or seq[-1] != p.regime:
            seq.append(p.regime)
    return seq


# ---------------------------------------------------------------------------
# grid evaluation


def _persistence_task(args):
    spec, ratio, tau = args
    try:
        proto = tanh_sweep(spec.protocol_config(ratio, tau))
        _, tm = persistence_for(proto, CouplingConfig(0.0), None, spec.max_step_angle)
        return tm.persistence, None
    except OttoError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _persistence_table(spec: SweepSpec, keys: list) -> dict:
    """Map ``(omega_ratio, tau) -> (triple, error)`` for the distinct protocols."""
    if spec.mode == "adiabatic":
        return {k: ((1.0, 1.0, 1.0), None) for k in keys}
    tasks = [(spec, r, t) for r, t in keys]
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_persistence_task, tasks))
    else:
        results = [_persistence_task(t) for t in tasks]
    return dict(zip(keys, results))


def _protocol_key(spec, p):
    return (p["omega_ratio"], p.get("tau", 0.0) if spec.mode == "dynamic" else 0.0)


def evaluate_point(spec: SweepSpec, p: dict, persistence) -> CycleReport:
    w1 = spec.hbar_omega1
    bath = BathConfig.from_ratio(p["kT_h"], spec.tc_over_th)
    return heats(bath, CycleInputs(w1, p["omega_ratio"] * w1, p["J"], persistence))


def _record(spec, p, triple, err):
    rec = {name: p[name] for name in spec.axis_names}
    rec.update({k: None for k in REPORT_COLUMNS})
    if err is None:
        try:
            rep = evaluate_point(spec, p, triple)
        except OttoError as exc:
            err = f"{type(exc).__name__}: {exc}"
        else:
            rec.update(rep.to_dict())
    if triple is not None:
        rec["P"], rec["P1"], rec["P2"] = triple
    rec["error"] = err
    return rec


def grid_sweep(spec: SweepSpec) -> list:
    """One record per grid point, in lexicographic axis order.

    Records hold the swept values, the persistence triple and every
    :class:`CycleReport` field.  Points that fail carry an ``error`` string.
    """
    if not spec.axes:
        raise ConfigError("a sweep needs at least one axis")
    points = list(spec.grid())
    keys = list(dict.fromkeys(_protocol_key(spec, p) for p in points))
    table = _persistence_table(spec, keys)
    return [_record(spec, p, *table[_protocol_key(spec, p)]) for p in points]


def heat_leak_map(spec: SweepSpec) -> list:
    """Hot-side heat leak over the grid; negative values mark cold-to-hot leak flow."""
    if not spec.axes:
        raise ConfigError("a sweep needs at least one axis")
    rows = []
    for p in spec.grid():
        rec = {name: p[name] for name in spec.axis_names}
        bath = BathConfig.from_ratio(p["kT_h"], spec.tc_over_th)
        w1 = spec.hbar_omega1
        leak = heat_terms(bath.beta_h, bath.beta_c, w1, p["omega_ratio"] * w1, p["J"])[0]
        rec.update(Qh_leak=leak, Qc_leak=-leak, negative_leak=leak < 0)
        rows.append(rec)
    return rows


# ---------------------------------------------------------------------------
# maximization


@dataclass(frozen=True)
class MaximizeResult:
    params: dict
    value: float
    report: CycleReport
    coarse_best: float

    def to_dict(self) -> dict:
        return {"params": dict(self.params), "value": self.value, "coarse_best": self.coarse_best,
                "report": self.report.to_dict()}  # fmt: skip


def _admissible(spec, p) -> bool:
    # J >= 0, 8J below the final level splitting, omega2 < omega1
    r = p["omega_ratio"]
    return p["J"] >= 0 and 0 < r < 1 and 8 * p["J"] < r * spec.hbar_omega1 and p["kT_h"] > 0


def _score(spec, p, cache) -> tuple:
    """``(objective value or -inf, report or None)``."""
    if not _admissible(spec, p) or (spec.mode == "dynamic" and not p.get("tau", 0) > 0):
        return -math.inf, None
    key = _protocol_key(spec, p)
    if key not in cache:
        cache.update(_persistence_table(replace(spec, workers=1), [key]))
    triple, err = cache[key]
    if err is not None:
        return -math.inf, None
    try:
        rep = evaluate_point(spec, p, triple)
    except OttoError:
        return -math.inf, None
    if spec.objective == "work":
        return rep.W, rep
    if rep.regime is not Regime.ENGINE:
        return -math.inf, None
    return rep.efficiency, rep


def maximize(spec: SweepSpec, refine: bool = True) -> MaximizeResult:
    """Coarse grid scan, then bounded Nelder-Mead refinement from the best cell.

    The search box is given by the axis ranges.  Points violating
    ``J >= 0``, ``8 J < hbar omega2`` or ``0 < omega2/omega1 < 1`` are
    rejected, as are non-engine points for the efficiency objective.

    Raises
    ------
    NoEngineRegion
        If no admissible point is found.
    """
    if spec.objective not in ("work", "efficiency"):
        raise ConfigError("maximize needs objective 'work' or 'efficiency'")
    cache: dict = {}
    points = list(spec.grid())
    if spec.mode == "dynamic":
        keys = list(dict.fromkeys(_protocol_key(spec, p) for p in points if _admissible(spec, p)))
        cache.update(_persistence_table(spec, [k for k in keys if k[1] > 0]))
    best_p, best_v, best_rep = None, -math.inf, None
    for p in points:
        v, rep = _score(spec, p, cache)
        if v > best_v:
            best_p, best_v, best_rep = p, v, rep
    if best_p is None:
        raise NoEngineRegion(f"no admissible point for objective {spec.objective!r} on the coarse grid")
    coarse = best_v

    free = [a for a in spec.axes if a.hi > a.lo]
    if refine and free:
        lo = np.array([a.lo for a in free])
        span = np.array([a.hi - a.lo for a in free])

        def unpack(x):
            p = dict(best_p)
            p.update({a.name: float(v) for a, v in zip(free, lo + span * np.clip(x, 0, 1))})
            return p

        def neg(x):
            v, _ = _score(spec, unpack(x), cache)
            return -v if math.isfinite(v) else 1e300

        x0 = np.array([(best_p[a.name] - a.lo) / (a.hi - a.lo) for a in free])
        step = np.array([1.0 / max(a.n - 1, 1) for a in free])
        simplex = [x0]
        for i in range(len(free)):
            e = x0.copy()
            e[i] += step[i] if x0[i] + step[i] <= 1 else -step[i]
            simplex.append(e)
        res = minimize(
            neg,
            x0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * len(free),
            options={"initial_simplex": np.array(simplex), "xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000},
        )
        p = unpack(res.x)
        v, rep = _score(spec, p, cache)
        if v > best_v:
            best_p, best_v, best_rep = p, v, rep
    return MaximizeResult(dict(best_p), float(best_v), best_rep, float(coarse))


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, Regime):
        return v.value
    return str(v)


def records_to_csv(records: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    """CSV text with one header row, 17 significant digits and LF line endings."""
    if columns is None:
        columns = list(records[0].keys()) if records else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def sweep_columns(spec: SweepSpec) -> list:
    return list(spec.axis_names) + list(REPORT_COLUMNS)


def records_to_json(records: Sequence[dict]) -> str:
    def clean(v):
        if isinstance(v, Regime):
            return v.value
        if isinstance(v, np.generic):
            return v.item()
        return v

    return json.dumps([{k: clean(v) for k, v in r.items()} for r in records], indent=1) + "\n"
