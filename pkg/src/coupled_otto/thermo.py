"""Otto-cycle energetics of the coupled-qubit working substance.

Sign convention: heats are positive when they flow *into* the working
substance, and ``W = Q_h + Q_c`` is positive when work is delivered.
``hbar = k_B = 1``; energies and temperatures are in units of ``E0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ConfigError, InconsistentEnergies, RangeError
from .spin_system import offdiagonals_from_persistence

EXP_LIMIT = 700.0
FIRST_LAW_RTOL = 1e-12
BOUNDARY_RTOL = 1e-12


class Regime(str, enum.Enum):
    ENGINE = "engine"
    REFRIGERATOR = "refrigerator"
    ACCELERATOR = "accelerator"
    HEATER = "heater"
    BOUNDARY = "boundary"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BathConfig:
    """Hot and cold bath temperatures ``k_B T`` in ``E0`` with ``T_h > T_c > 0``.

    The degenerate equal-temperature cycle is reachable through
    :func:`heat_terms`, which takes inverse temperatures directly.
    """

    T_h: float
    T_c: float

    def __post_init__(self):
        if not (math.isfinite(self.T_h) and math.isfinite(self.T_c)):
            raise ConfigError("temperatures must be finite")
        if not self.T_c > 0:
            raise ConfigError("T_c must be positive")
        if not self.T_h > self.T_c:
            raise ConfigError("T_h must exceed T_c")

    @classmethod
    def from_ratio(cls, T_h: float, tc_over_th: float) -> "BathConfig":
        return cls(T_h, T_h * tc_over_th)

    @property
    def beta_h(self) -> float:
        return 1.0 / self.T_h

    @property
    def beta_c(self) -> float:
        return 1.0 / self.T_c

    @property
    def carnot(self) -> float:
        return 1.0 - self.T_c / self.T_h


@dataclass(frozen=True)
class CycleInputs:
    """Endpoint Rabi frequencies, coupling and persistence triple ``(P, P', P'')``."""

    omega1: float
    omega2: float
    J: float
    persistence: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ConfigError("Rabi frequencies must be positive")
        if not math.isfinite(self.J):
            raise ConfigError("J must be finite")
        object.__setattr__(self, "persistence", tuple(float(p) for p in self.persistence))
        if len(self.persistence) != 3:
            raise ConfigError("persistence must be a triple")
        offdiagonals_from_persistence(*self.persistence)


def _exp(x: float) -> float:
    if x > EXP_LIMIT:
        raise RangeError(f"exponent {x:.4g} too large; temperature too low for double precision")
    return math.exp(x)


def partition_function(beta: float, omega: float, J: float) -> float:
    """``1 + exp(8 J beta) + exp(-beta hbar w) + exp(beta hbar w)``."""
    if not beta > 0:
        raise ConfigError("beta must be positive")
    x = beta * omega
    return 1.0 + _exp(8 * J * beta) + _exp(-x) + _exp(x)


def _thermal_energy(beta, omega, J):
    Z = partition_function(beta, omega, J)
    return -8 * J * _exp(8 * J * beta) / Z - 2 * omega * math.sinh(beta * omega) / Z


def _level_weights(x):
    """``(f1, f2, f3)`` for Boltzmann argument ``x = beta hbar w``."""
    ex, emx = _exp(x), _exp(-x)
    return 1 + ex / 2 - 1.5 * emx, math.sinh(x), 1.5 * ex - emx / 2 - 1


def _after_stroke(beta, w_from, w_to, J, persistence):
    # energy after a unitary stroke starting from the Gibbs state of w_from
    Z = partition_function(beta, w_from, J)
    f1, f2, f3 = _level_weights(beta * w_from)
    P, P1, P2 = persistence
    friction = f1 * (1 - P) - f2 * (1 - P1) + f3 * (1 - P2)
    return (
        -8 * J * _exp(8 * J * beta) / Z
        - 2 * w_to * math.sinh(beta * w_from) / Z
        + w_to / Z * friction
    )


def energy_A(b: BathConfig, inp: CycleInputs) -> float:
    """Hot thermal state with the initial Hamiltonian."""
    return _thermal_energy(b.beta_h, inp.omega1, inp.J)


def energy_B(b: BathConfig, inp: CycleInputs) -> float:
    """After the first work stroke (``omega1 -> omega2``)."""
    return _after_stroke(b.beta_h, inp.omega1, inp.omega2, inp.J, inp.persistence)


def energy_C(b: BathConfig, inp: CycleInputs) -> float:
    """Cold thermal state with the final Hamiltonian."""
    return _thermal_energy(b.beta_c, inp.omega2, inp.J)


def energy_D(b: BathConfig, inp: CycleInputs) -> float:
    """After the return stroke (``omega2 -> omega1``), same persistences."""
    return _after_stroke(b.beta_c, inp.omega2, inp.omega1, inp.J, inp.persistence)


@dataclass(frozen=True)
class CycleReport:
    E_A: float
    E_B: float
    E_C: float
    E_D: float
    Qh_leak: float
    Qh_ad: float
    Qh_fric: float
    Qc_leak: float
    Qc_ad: float
    Qc_fric: float
    Q_h: float
    Q_c: float
    W: float
    efficiency: Optional[float]
    regime: Regime

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


def heat_terms(beta_h, beta_c, w1, w2, J, persistence=(1.0, 1.0, 1.0)):
    """``(Qh_leak, Qh_ad, Qh_fric, Qc_leak, Qc_ad, Qc_fric)`` from inverse temperatures."""
    Z1 = partition_function(beta_h, w1, J)
    Z2 = partition_function(beta_c, w2, J)
    x, y = beta_h * w1, beta_c * w2
    f1, f2, f3 = _level_weights(x)
    g1, g2, g3 = _level_weights(y)
    P, P1, P2 = persistence
    qh_leak = 8 * J * (_exp(8 * J * beta_c) / Z2 - _exp(8 * J * beta_h) / Z1) + 0.0
    qh_ad = w1 * (2 * math.sinh(y) / Z2 - 2 * math.sinh(x) / Z1)
    qh_fric = w1 / Z2 * (-g1 * (1 - P) + g2 * (1 - P1) - g3 * (1 - P2))
    qc_leak = -qh_leak
    qc_ad = w2 * (2 * math.sinh(x) / Z1 - 2 * math.sinh(y) / Z2)
    qc_fric = w2 / Z1 * (-f1 * (1 - P) + f2 * (1 - P1) - f3 * (1 - P2))
    return qh_leak, qh_ad, qh_fric, qc_leak, qc_ad, qc_fric


def heats(b: BathConfig, inp: CycleInputs) -> CycleReport:
    """Energies at A-D, the six heat contributions, totals, work and regime."""
    terms = heat_terms(b.beta_h, b.beta_c, inp.omega1, inp.omega2, inp.J, inp.persistence)
    qh_leak, qh_ad, qh_fric, qc_leak, qc_ad, qc_fric = terms
    Q_h = qh_leak + qh_ad + qh_fric
    Q_c = qc_leak + qc_ad + qc_fric
    W = Q_h + Q_c
    regime = classify_regime(Q_h, Q_c, W)
    return CycleReport(
        energy_A(b, inp),
        energy_B(b, inp),
        energy_C(b, inp),
        energy_D(b, inp),
        *terms,
        Q_h,
        Q_c,
        W,
        W / Q_h if regime is Regime.ENGINE else None,
        regime,
    )


def classify_regime(Q_h: float, Q_c: float, W: float, scale: float = 1.0) -> Regime:
    """Operating regime from the signs of ``Q_h``, ``Q_c`` and ``W``.

    Any quantity within ``1e-12 * max(|Q_h|, |Q_c|, scale)`` of zero gives
    :attr:`Regime.BOUNDARY`.
    """
    if abs(W - (Q_h + Q_c)) > FIRST_LAW_RTOL * max(abs(Q_h), abs(Q_c), abs(W), 1e-300):
        raise InconsistentEnergies(f"W = {W!r} but Q_h + Q_c = {Q_h + Q_c!r}")
    tol = BOUNDARY_RTOL * max(abs(Q_h), abs(Q_c), scale)
    if min(abs(Q_h), abs(Q_c), abs(W)) < tol:
        return Regime.BOUNDARY
    signs = (Q_h > 0, Q_c > 0, W > 0)
    table = {
        (True, False, True): Regime.ENGINE,
        (False, True, False): Regime.REFRIGERATOR,
        (True, False, False): Regime.ACCELERATOR,
        (False, False, False): Regime.HEATER,
    }
    try:
        return table[signs]
    except KeyError:
        raise InconsistentEnergies(
            f"sign pattern Q_h={Q_h:.3g}, Q_c={Q_c:.3g}, W={W:.3g} violates the second law"
        ) from None


@dataclass(frozen=True)
class ZeroPlane:
    """``quantity(P, P', P'') = c0 + c_P P + c_P1 P' + c_P2 P''``."""

    quantity: str
    c0: float
    c_P: float
    c_P1: float
    c_P2: float

    def __call__(self, P, P1, P2):
        return self.c0 + self.c_P * P + self.c_P1 * P1 + self.c_P2 * P2

    def __add__(self, other: "ZeroPlane") -> "ZeroPlane":
        return ZeroPlane(
            f"{self.quantity}+{other.quantity}",
            self.c0 + other.c0,
            self.c_P + other.c_P,
            self.c_P1 + other.c_P1,
            self.c_P2 + other.c_P2,
        )

    def row(self):
        return (self.quantity, self.c0, self.c_P, self.c_P1, self.c_P2)


def zero_plane(quantity: str, b: BathConfig, omega1: float, omega2: float, J: float) -> ZeroPlane:
    """Affine coefficients of ``Q_h``, ``Q_c`` or ``W`` in the persistence triple."""
    if quantity not in ("Q_h", "Q_c", "W"):
        raise ConfigError(f"unknown quantity {quantity!r}")
    if quantity == "W":
        qh = zero_plane("Q_h", b, omega1, omega2, J)
        qc = zero_plane("Q_c", b, omega1, omega2, J)
        s = qh + qc
        return ZeroPlane("W", s.c0, s.c_P, s.c_P1, s.c_P2)
    Z1 = partition_function(b.beta_h, omega1, J)
    Z2 = partition_function(b.beta_c, omega2, J)
    leak, ad, _, cleak, cad, _ = heat_terms(b.beta_h, b.beta_c, omega1, omega2, J, (1.0, 1.0, 1.0))
    if quantity == "Q_h":
        k1, k2, k3 = _level_weights(b.beta_c * omega2)
        pref, base = omega1 / Z2, leak + ad
    else:
        k1, k2, k3 = _level_weights(b.beta_h * omega1)
        pref, base = omega2 / Z1, cleak + cad
    return ZeroPlane(quantity, base + pref * (-k1 + k2 - k3), pref * k1, -pref * k2, pref * k3)
