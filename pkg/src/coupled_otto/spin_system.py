"""Two qubits in a common field with isotropic Heisenberg coupling.

Matrices are written in the singlet-triplet basis ordered
``(singlet, |1,+1>, |1,0>, |1,-1>)``.  Internally ``hbar = 1``, energies
are in ``E0`` and the time unit ``t0 = h / E0`` equals ``2 pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lie_core
from .errors import ConfigError, DegenerateField, NonUnitary, StochasticityViolation, UnphysicalTriple
from .protocol import FieldProtocol, FieldSample, rabi_energy

__all__ = [
    "FieldSample",
    "CouplingConfig",
    "Eigensystem",
    "EvolutionResult",
    "TransitionMatrix",
    "eta_from_field",
    "rabi_frequency",
    "hamiltonian_eigensystem",
    "triplet_block",
    "evolve",
    "transition_matrix",
    "offdiagonals_from_persistence",
    "persistence_for",
]

HBAR = 1.0
T0 = 2 * math.pi
DEFAULT_STEP_ANGLE = 1e-3
UNITARITY_TOL = 1e-8
STOCHASTIC_TOL = 1e-8
OFFDIAG_TOL = 1e-9
TRIPLE_TOL = 1e-9
LABEL_TOL = 1e-9
DEGENERATE_OMEGA = 1e-12

_SQ2 = math.sqrt(2.0)
SPIN1_PLUS = np.array([[0, _SQ2, 0], [0, 0, _SQ2], [0, 0, 0]], dtype=complex)
SPIN1_MINUS = SPIN1_PLUS.T.copy()
SPIN1_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class CouplingConfig:
    """Isotropic exchange constant ``J`` (singlet energy ``-8 J``)."""

    J: float

    def __post_init__(self):
        if not math.isfinite(self.J):
            raise ConfigError("J must be finite")


def eta_from_field(s: FieldSample):
    """Generator coefficients ``(eta+, etac, eta-) = (X - iY, 2Z, X + iY)``."""
    return complex(s.X, -s.Y), complex(2 * s.Z), complex(s.X, s.Y)


def rabi_frequency(s: FieldSample) -> float:
    return float(rabi_energy(s.X, s.Y, s.Z)) / HBAR


def _triplet_hamiltonian(s: FieldSample) -> np.ndarray:
    ep, ec, em = eta_from_field(s)
    return ep * SPIN1_PLUS + ec * SPIN1_Z + em * SPIN1_MINUS


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Instantaneous eigenpairs; ``vectors[:, m]`` belongs to ``energies[m]``.

    Order is ``(E1, E2, E3, E4) = (-8J, +hbar w, 0, -hbar w)``.
    """

    energies: np.ndarray
    vectors: np.ndarray
    omega: float


def hamiltonian_eigensystem(s: FieldSample, c: CouplingConfig) -> Eigensystem:
    """Eigenpairs of ``H = H_ext + H_int`` for the field sample ``s``.

    The triplet block is diagonalized numerically; each eigenvector is
    phased so its largest-magnitude component is real and positive.

    Raises
    ------
    DegenerateField
        If the Rabi frequency vanishes.
    """
    omega = rabi_frequency(s)
    if omega <= DEGENERATE_OMEGA:
        raise DegenerateField(f"field {s.vector} is zero; triplet eigenbasis undefined")
    w, v = np.linalg.eigh(_triplet_hamiltonian(s))
    w, v = w[::-1], v[:, ::-1]
    expected = np.array([HBAR * omega, 0.0, -HBAR * omega])
    if np.max(np.abs(w - expected)) > LABEL_TOL * HBAR * omega + 1e-14:
        raise DegenerateField(f"triplet spectrum {w} does not match (+w, 0, -w)")
    for m in range(3):
        k = int(np.argmax(np.abs(v[:, m])))
        v[:, m] *= abs(v[k, m]) / v[k, m]
    vectors = np.zeros((4, 4), dtype=complex)
    vectors[0, 0] = 1.0
    vectors[1:, 1:] = v
    energies = np.array([-8.0 * c.J, *expected])
    return Eigensystem(energies, vectors, omega)


def triplet_block(composed: lie_core.ComposedParams) -> np.ndarray:
    """Spin-1 matrix of ``exp(a T+) exp(ln(b) Tc) exp(g T-)`` in closed form."""
    a, b, g = composed.astuple()
    s = a * g + b
    return np.array(
        [
            [s * s / b, _SQ2 * a * s / b, a * a / b],
            [_SQ2 * g * s / b, 2 * a * g / b + 1, _SQ2 * a / b],
            [g * g / b, _SQ2 * g / b, 1 / b],
        ],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    composed: lie_core.ComposedParams
    U: np.ndarray
    duration: float
    steps: int


def default_steps(protocol: FieldProtocol, max_step_angle: float = DEFAULT_STEP_ANGLE) -> int:
    """Smallest step count keeping ``omega * step`` below ``max_step_angle``."""
    if not max_step_angle > 0:
        raise ConfigError("max_step_angle must be positive")
    omega = float(np.max(rabi_energy(protocol.X, protocol.Y, protocol.Z))) / HBAR
    return max(1, math.ceil(omega * T0 * protocol.duration / max_step_angle))


def evolve(
    protocol: FieldProtocol,
    c: CouplingConfig,
    steps: int | None = None,
    max_step_angle: float = DEFAULT_STEP_ANGLE,
) -> EvolutionResult:
    """Total evolution operator over the protocol window.

    The window is split into ``steps`` equal intervals; the field is held
    at its value at each interval's midpoint.  The external part is
    composed algebraically, the coupling only contributes the singlet
    phase ``exp(8 i J dt / hbar)``.
    """
    if steps is None:
        steps = default_steps(protocol, max_step_angle)
    steps = int(steps)
    if steps < 1:
        raise ConfigError("steps must be at least 1")
    duration = T0 * protocol.duration
    h = duration / steps
    acc = lie_core.ChainAccumulator(lie_core.SU2, HBAR)
    chunk = 1 << 16
    for lo in range(0, steps, chunk):
        j = np.arange(lo, min(lo + chunk, steps))
        t_mid = protocol.t_start + (j + 0.5) * (protocol.duration / steps)
        X, Y, Z = protocol.field_at(t_mid)
        eta = np.column_stack([X - 1j * Y, 2 * Z + 0j, X + 1j * Y])
        acc.push(eta, h)
    composed = acc.result()
    U = np.zeros((4, 4), dtype=complex)
    U[0, 0] = np.exp(1j * 8 * c.J * duration / HBAR)
    # segment blocks stay accurate even when the full product is ill-conditioned
    block = np.eye(3, dtype=complex)
    for seg in acc.segments():
        block = triplet_block(seg) @ block
    U[1:, 1:] = block
    dev = np.max(np.abs(U.conj().T @ U - np.eye(4)))
    if not dev <= UNITARITY_TOL:
        raise NonUnitary(f"evolution operator deviates from unitarity by {dev:.3g}; refine the discretization")
    return EvolutionResult(composed, U, protocol.duration, steps)


def offdiagonals_from_persistence(P: float, P1: float, P2: float, validate: bool = True):
    """Triplet off-diagonal transition probabilities ``(Q, Q', Q'')``.

    ``P1`` and ``P2`` are the persistences P' and P''.  With ``validate``
    the result must lie in ``[0, 1]`` (up to 1e-9) or
    :class:`UnphysicalTriple` is raised.
    """
    Q = 0.5 * (-P1 + P2 - P + 1)
    Q1 = 0.5 * (P1 - P2 - P + 1)
    Q2 = 0.5 * (-P1 - P2 + P + 1)
    if validate:
        for name, v in (("P", P), ("P'", P1), ("P''", P2), ("Q", Q), ("Q'", Q1), ("Q''", Q2)):
            if not -TRIPLE_TOL <= v <= 1 + TRIPLE_TOL:
                raise UnphysicalTriple(f"{name} = {v:.6g} outside [0, 1] for persistence ({P}, {P1}, {P2})")
    return Q, Q1, Q2


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """``p[i, j] = |<E_i(2)| U |E_j(1)>|^2`` and the persistences ``(P, P', P'')``."""

    p: np.ndarray
    persistence: tuple

    @property
    def offdiagonals(self):
        return offdiagonals_from_persistence(*self.persistence, validate=False)


def transition_matrix(U: EvolutionResult | np.ndarray, initial: Eigensystem, final: Eigensystem) -> TransitionMatrix:
    """Transition probabilities between initial and final eigenstates.

    Raises
    ------
    StochasticityViolation
        If a row or column sum deviates from 1 by more than 1e-8, or the
        off-diagonals disagree with the persistence closed form.
    """
    mat = U.U if isinstance(U, EvolutionResult) else np.asarray(U)
    amp = final.vectors[1:, 1:].conj().T @ mat[1:, 1:] @ initial.vectors[1:, 1:]
    p = np.zeros((4, 4))
    p[0, 0] = 1.0  # singlet is decoupled by construction
    p[1:, 1:] = np.abs(amp) ** 2
    dev = max(np.max(np.abs(p.sum(axis=0) - 1)), np.max(np.abs(p.sum(axis=1) - 1)))
    if not dev <= STOCHASTIC_TOL:
        raise StochasticityViolation(f"row/column sums deviate from 1 by {dev:.3g}")
    P = (float(p[1, 1]), float(p[2, 2]), float(p[3, 3]))
    Q, Q1, Q2 = offdiagonals_from_persistence(*P, validate=False)
    expected = np.array([[Q, Q1], [Q, Q2], [Q1, Q2]])
    got = np.array([[p[1, 2], p[1, 3]], [p[2, 1], p[2, 3]], [p[3, 1], p[3, 2]]])
    if np.max(np.abs(got - expected)) > OFFDIAG_TOL:
        raise StochasticityViolation("off-diagonal probabilities inconsistent with the persistence triple")
    return TransitionMatrix(p, P)


def persistence_for(
    protocol: FieldProtocol,
    c: CouplingConfig | None = None,
    steps: int | None = None,
    max_step_angle: float = DEFAULT_STEP_ANGLE,
):
    """Evolve ``protocol`` and return ``(EvolutionResult, TransitionMatrix)``.

    Endpoint eigenbases come from :meth:`FieldProtocol.endpoint_fields`.
    """
    c = c or CouplingConfig(0.0)
    result = evolve(protocol, c, steps, max_step_angle)
    start, end = protocol.endpoint_fields()
    tm = transition_matrix(result, hamiltonian_eigensystem(start, c), hamiltonian_eigensystem(end, c))
    return result, tm
