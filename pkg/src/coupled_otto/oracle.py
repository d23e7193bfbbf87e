"""Brute-force reference paths used to validate the algebraic ones.

Nothing here calls into :mod:`lie_core` or the evolution code of
:mod:`spin_system`; only the :class:`FieldProtocol` type is shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import RangeError

_BASIS_DIMS = {"product": 4, "singlet_triplet": 4, "fundamental": 2, "spin1": 3}

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)

# columns: singlet, |1,+1>, |1,0>, |1,-1> in the product basis (uu, ud, du, dd)
_r = 1 / math.sqrt(2)
SINGLET_TRIPLET = np.array(
    [[0, 1, 0, 0], [_r, 0, _r, 0], [-_r, 0, _r, 0], [0, 0, 0, 1]],
    dtype=complex,
)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    matrix: np.ndarray
    basis: str = "singlet_triplet"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = _BASIS_DIMS.get(self.basis)
        if n is None or m.shape != (n, n):
            raise ValueError(f"matrix of shape {m.shape} does not fit basis {self.basis!r}")
        object.__setattr__(self, "matrix", m)


def two_qubit_hamiltonians(X, Y, Z, J):
    """Product-basis Hamiltonians ``X Sx + Y Sy + Z Sz + 2J s1.s2 - 2J`` (batched)."""
    sig = [np.kron(s, _I2) + np.kron(_I2, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    exchange = 2 * J * sum(np.kron(s, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)) - 2 * J * np.eye(4)
    X, Y, Z = (np.asarray(c, dtype=float)[..., None, None] for c in (X, Y, Z))
    return X * sig[0] + Y * sig[1] + Z * sig[2] + exchange


def dense_evolve(protocol, c, steps: int, chunk: int = 4096) -> DenseOperator:
    """Time-ordered product of exact 4x4 step propagators.

    Same time grid as the algebraic path (interval midpoints, ``t0 = 2 pi``
    with ``hbar = 1``); each step is exponentiated by Hermitian
    eigendecomposition.  Returned in the singlet-triplet basis.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    dt = 2 * math.pi * protocol.duration / steps
    U = np.eye(4, dtype=complex)
    for lo in range(0, steps, chunk):
        j = np.arange(lo, min(lo + chunk, steps))
        t = protocol.t_start + (j + 0.5) * (protocol.duration / steps)
        H = two_qubit_hamiltonians(*protocol.field_at(t), c.J)
        w, v = np.linalg.eigh(H)
        props = np.einsum("nij,nj,nkj->nik", v, np.exp(-1j * dt * w), v.conj())
        for P in props:
            U = P @ U
    return DenseOperator(SINGLET_TRIPLET.conj().T @ U @ SINGLET_TRIPLET)


def sudden_overlap(dir1, dir2):
    """Persistences ``(P, P', P'')`` of an instantaneous field rotation."""
    a = np.asarray(dir1, dtype=float)
    b = np.asarray(dir2, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("directions must be nonzero")
    cos = float(np.clip(a @ b / (na * nb), -1.0, 1.0))
    P = ((1 + cos) / 2) ** 2
    return P, cos * cos, P


def thermal_trace(H, beta: float, O) -> float:
    """``Tr(exp(-beta H) O) / Tr(exp(-beta H))`` through the spectrum of ``H``."""
    H = H.matrix if isinstance(H, DenseOperator) else np.asarray(H, dtype=complex)
    O = O.matrix if isinstance(O, DenseOperator) else np.asarray(O, dtype=complex)
    w, v = np.linalg.eigh(H)
    if np.max(np.abs(beta * w)) > 700:
        raise RangeError("Boltzmann exponent exceeds double-precision range")
    weights = np.exp(-beta * w)
    diag = np.real(np.einsum("ji,jk,ki->i", v.conj(), O, v))
    return float(weights @ diag / weights.sum())


# ---------------------------------------------------------------------------
# matrix representations of the three algebras


def fundamental_generators(alg):
    """2x2 matrices ``(T+, Tc, T-)`` obeying the commutators of ``alg``."""
    kind = alg.name
    plus = np.array([[0, 1], [0, 0]], dtype=complex)
    k = np.diag([0.5, -0.5]).astype(complex)
    if kind == "su(2)":
        return plus, k, plus.T.copy()
    if kind == "su(1,1)":
        return plus, k, -plus.T.copy()
    if kind == "so(2,1)":
        return plus, 1j * k, 0.5 * plus.T
    raise ValueError(kind)


def exponent_matrix(lam, alg) -> np.ndarray:
    tp, tc, tm = fundamental_generators(alg)
    lp, lc, lm = lam.astuple()
    return expm(lp * tp + lc * tc + lm * tm)


def factored_matrix(params, alg) -> np.ndarray:
    """Fundamental matrix of ``exp(a T+) exp(ln(b) Tc) exp(g T-)`` (principal log)."""
    tp, tc, tm = fundamental_generators(alg)
    a, b, g = params.astuple()
    return expm(a * tp) @ expm(np.log(complex(b)) * tc) @ expm(g * tm)


def spin1_factored_matrix(params) -> np.ndarray:
    """Spin-1 matrix of the same ordered product, by dense exponentials."""
    sq = math.sqrt(2)
    plus = np.array([[0, sq, 0], [0, 0, sq], [0, 0, 0]], dtype=complex)
    a, b, g = params.astuple()
    return expm(a * plus) @ np.diag([b, 1, 1 / b]) @ expm(g * plus.T)
