"""Driving-field protocols.

Times are in units of ``t0 = h / E0`` and field components ``(X, Y, Z)``
in units of ``E0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError

#: Minimum window width, in units of tau, for sweeps built by :meth:`TanhSweepConfig.widened`.
WINDOW_PER_TAU = 20.0


@dataclass(frozen=True)
class FieldSample:
    """Field components ``(X, Y, Z) = -g (hbar / 2) B`` at one instant."""

    X: float
    Y: float
    Z: float
    time: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.X, self.Y, self.Z, self.time)):
            raise ConfigError("field sample must be finite")

    @property
    def vector(self):
        return np.array([self.X, self.Y, self.Z], dtype=float)


FieldFunction = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray, np.ndarray]"]


@dataclass(frozen=True, eq=False)
class FieldProtocol:
    """A sampled field sweep on ``[t_start, t_end]``.

    Parameters
    ----------
    times, X, Y, Z
        Sample table; ``times`` strictly increasing, at least two rows.
    source
        Optional exact field function of time.  When present,
        :meth:`field_at` evaluates it instead of interpolating the table.
    endpoint_fields
        Optional ``(start, end)`` field vectors that define the cycle
        endpoints (e.g. the asymptotes of a tanh sweep).  Defaults to the
        first and last samples.
    """

    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    source: Optional[FieldFunction] = None
    endpoint_override: Optional[tuple] = field(default=None)

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float).ravel() for a in (self.times, self.X, self.Y, self.Z)]
        n = len(arrays[0])
        if n < 2 or any(len(a) != n for a in arrays):
            raise ConfigError("a protocol needs at least two samples of equal length")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ConfigError("protocol samples must be finite")
        if not np.all(np.diff(arrays[0]) > 0):
            raise ConfigError("protocol times must be strictly increasing")
        for name, a in zip(("times", "X", "Y", "Z"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def from_samples(cls, samples: Sequence[FieldSample]) -> "FieldProtocol":
        return cls(*zip(*[(s.time, s.X, s.Y, s.Z) for s in samples]))

    @classmethod
    def from_table(cls, rows) -> "FieldProtocol":
        """Build from ``(time, X, Y, Z)`` rows."""
        table = np.asarray(rows, dtype=float)
        if table.ndim != 2 or table.shape[1] != 4:
            raise ConfigError("sample table rows must be (time, X, Y, Z)")
        return cls(table[:, 0], table[:, 1], table[:, 2], table[:, 3])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def samples(self) -> list:
        return [FieldSample(float(x), float(y), float(z), float(t)) for t, x, y, z in self.table()]

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.X, self.Y, self.Z])

    def field_at(self, t):
        """Field components at times ``t`` (exact source or linear interpolation)."""
        t = np.asarray(t, dtype=float)
        if self.source is not None:
            return tuple(np.broadcast_to(np.asarray(c, dtype=float), t.shape) for c in self.source(t))
        return tuple(np.interp(t, self.times, c) for c in (self.X, self.Y, self.Z))

    def endpoint_fields(self) -> tuple:
        """``(start, end)`` field samples used as the cycle's endpoint Hamiltonians."""
        if self.endpoint_override is not None:
            (x1, y1, z1), (x2, y2, z2) = self.endpoint_override
            return FieldSample(x1, y1, z1, self.t_start), FieldSample(x2, y2, z2, self.t_end)
        s = self.samples
        return s[0], s[-1]

    def reversed(self) -> "FieldProtocol":
        """Time-reversed sweep on the same window (``t -> t_start + t_end - t``)."""
        t0, t1 = self.t_start, self.t_end
        source = None
        if self.source is not None:
            fwd = self.source
            source = lambda t: fwd(t0 + t1 - np.asarray(t, dtype=float))  # noqa: E731
        ends = None
        if self.endpoint_override is not None:
            ends = (self.endpoint_override[1], self.endpoint_override[0])
        return FieldProtocol(
            (t0 + t1 - self.times)[::-1], self.X[::-1], self.Y[::-1], self.Z[::-1], source, ends
        )


@dataclass(frozen=True)
class TanhSweepConfig:
    """Constant transverse field ``Delta`` with a tanh ramp of ``Z`` from ``u_i`` to ``u_f``."""

    Delta: float
    u_i: float
    u_f: float
    tau: float
    t1: float = 0.0
    t2: float = 20.0
    use_asymptotic_endpoints: bool = True

    def __post_init__(self):
        vals = (self.Delta, self.u_i, self.u_f, self.tau, self.t1, self.t2)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ConfigError("sweep parameters must be finite")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not self.t1 < self.t2:
            raise ConfigError("t1 must precede t2")

    @classmethod
    def for_frequencies(cls, hbar_omega1: float, hbar_omega2: float, tau: float, **kw) -> "TanhSweepConfig":
        """Sweep whose asymptotic Rabi energies are ``hbar_omega1 -> hbar_omega2``.

        The ramp ends at ``u_f = 0`` so ``Delta = hbar_omega2 / 2``.
        """
        if not hbar_omega1 >= hbar_omega2 > 0:
            raise ConfigError("need hbar_omega1 >= hbar_omega2 > 0")
        delta = hbar_omega2 / 2
        return cls(Delta=delta, u_i=math.sqrt((hbar_omega1 / 2) ** 2 - delta**2), u_f=0.0, tau=tau, **kw)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t1 + self.t2)

    def u(self, t):
        return 0.5 * (self.u_f - self.u_i) * np.tanh((np.asarray(t, dtype=float) - self.midpoint) / self.tau) + 0.5 * (
            self.u_i + self.u_f
        )

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, float(self.Delta)), np.zeros(t.shape), self.u(t)

    def widened(self) -> "TanhSweepConfig":
        """Same sweep with the window grown symmetrically to at least ``20 tau``."""
        width = WINDOW_PER_TAU * self.tau
        if self.t2 - self.t1 >= width:
            return self
        mid = self.midpoint
        return replace(self, t1=mid - width / 2, t2=mid + width / 2)

    def with_tau(self, tau: float) -> "TanhSweepConfig":
        return replace(self, tau=tau)


def tanh_sweep(cfg: TanhSweepConfig, n_samples: int = 2001) -> FieldProtocol:
    """Sample ``cfg`` on a uniform grid of ``n_samples`` points over ``[t1, t2]``."""
    if n_samples < 2:
        raise ConfigError("n_samples must be at least 2")
    t = np.linspace(cfg.t1, cfg.t2, int(n_samples))
    X, Y, Z = cfg.field(t)
    ends = None
    if cfg.use_asymptotic_endpoints:
        ends = ((cfg.Delta, 0.0, cfg.u_i), (cfg.Delta, 0.0, cfg.u_f))
    return FieldProtocol(t, X, Y, Z, source=cfg.field, endpoint_override=ends)


def rabi_energy(x, y, z):
    """``hbar omega = 2 |(X, Y, Z)|`` (works elementwise)."""
    return 2.0 * np.sqrt(np.square(x) + np.square(y) + np.square(z))


def endpoint_frequencies(p: FieldProtocol) -> tuple:
    """Rabi frequencies ``(omega1, omega2)`` at the protocol's endpoints (units ``E0 / hbar``)."""
    a, b = p.endpoint_fields()
    return float(rabi_energy(a.X, a.Y, a.Z)), float(rabi_energy(b.X, b.Y, b.Z))
