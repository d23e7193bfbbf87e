"""Gauss factorization and ordered composition for su(2), su(1,1) and so(2,1).

Group elements are handled through three complex coordinates.  An element
written as ``exp(l+ T+ + lc Tc + l- T-)`` is described by
:class:`ExponentParams`; the same element in the ordered form
``exp(L+ T+) exp(ln(Lc) Tc) exp(L- T-)`` by :class:`FactoredParams`.  The
commutation relations are

    [T-, T+] = 2 epsilon Tc,    [Tc, T+-] = +- delta T+-,

with ``(delta, epsilon)`` fixed by :class:`AlgebraKind`.

Chains are ordered chronologically: element ``k`` of a list is applied
after element ``k-1``, so it sits to the *left* of it in the operator
product.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CompositionSingularity, ConfigError, DegenerateFactorization

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


SINGULAR_TOL = 1e-12
# the accumulator starts a new segment below this relative denominator size
COND_TOL = 1e-4
# and, for su(2), once |beta| = 1/|U22|^2 exceeds this bound
SEGMENT_BETA = 1e2
NU_SERIES_CUTOFF = 1e-6
GROWTH_WARNING = 1e12
_CHUNK = 1 << 16


@dataclass(frozen=True)
class AlgebraKind:
    """Structure constants selecting one of the three supported algebras."""

    name: str
    delta: complex
    epsilon: complex

    def __post_init__(self):
        pair = (complex(self.delta), complex(self.epsilon))
        if pair not in _KNOWN_PAIRS:
            raise ConfigError(f"unsupported (delta, epsilon) = {pair}")
        object.__setattr__(self, "delta", pair[0])
        object.__setattr__(self, "epsilon", pair[1])

    @property
    def unit_delta(self) -> bool:
        return self.delta == 1

    def pow_delta(self, z):
        """``z ** delta`` on the principal branch (exact for delta = 1)."""
        if self.unit_delta:
            return z
        return np.exp(self.delta * np.log(z))

    def pow_two_over_delta(self, z):
        """``z ** (2 / delta)`` on the principal branch (exact square for delta = 1)."""
        if self.unit_delta:
            return z * z
        return np.exp((2.0 / self.delta) * np.log(z))

    @classmethod
    def from_name(cls, name: str) -> "AlgebraKind":
        key = name.lower().replace(" ", "").replace("_", "")
        try:
            return _BY_NAME[key]
        except KeyError:
            raise ConfigError(f"unknown algebra {name!r}") from None


_KNOWN_PAIRS = {(1 + 0j, 1 + 0j), (1 + 0j, -1 + 0j), (1j, 0.5j)}
SU11 = AlgebraKind("su(1,1)", 1, 1)
SU2 = AlgebraKind("su(2)", 1, -1)
SO21 = AlgebraKind("so(2,1)", 1j, 0.5j)
_BY_NAME = {"su(1,1)": SU11, "su11": SU11, "su(2)": SU2, "su2": SU2, "so(2,1)": SO21, "so21": SO21}


def _check_finite(*values):
    for v in values:
        if not cmath.isfinite(v):
            raise ConfigError(f"non-finite parameter {v!r}")


@dataclass(frozen=True)
class ExponentParams:
    """Coefficients of the generators in a single exponent."""

    lambda_plus: complex
    lambda_c: complex
    lambda_minus: complex

    def __post_init__(self):
        for f in ("lambda_plus", "lambda_c", "lambda_minus"):
            object.__setattr__(self, f, complex(getattr(self, f)))
        _check_finite(self.lambda_plus, self.lambda_c, self.lambda_minus)

    def astuple(self):
        return self.lambda_plus, self.lambda_c, self.lambda_minus


@dataclass(frozen=True)
class FactoredParams:
    """Coordinates of ``exp(L+ T+) exp(ln(Lc) Tc) exp(L- T-)``."""

    Lambda_plus: complex
    Lambda_c: complex
    Lambda_minus: complex

    def __post_init__(self):
        for f in ("Lambda_plus", "Lambda_c", "Lambda_minus"):
            object.__setattr__(self, f, complex(getattr(self, f)))
        if self.Lambda_c == 0:
            raise ConfigError("Lambda_c must be nonzero")

    def astuple(self):
        return self.Lambda_plus, self.Lambda_c, self.Lambda_minus


IDENTITY = FactoredParams(0, 1, 0)


@dataclass(frozen=True)
class ComposedParams:
    """Result ``(alpha, beta, gamma)`` of composing a chain of elements.

    It describes the element ``exp(alpha T+) exp(ln(beta) Tc) exp(gamma T-)``,
    i.e. it has the same meaning as :class:`FactoredParams`.
    """

    alpha: complex
    beta: complex
    gamma: complex

    def __post_init__(self):
        for f in ("alpha", "beta", "gamma"):
            object.__setattr__(self, f, complex(getattr(self, f)))
        if self.beta == 0:
            raise ConfigError("beta must be nonzero")

    def astuple(self):
        return self.alpha, self.beta, self.gamma

    def as_factored(self) -> FactoredParams:
        return FactoredParams(self.alpha, self.beta, self.gamma)


# --------------------------------------------------------------------------
# factorization

def _factorize_arrays(lp, lc, lm, alg: AlgebraKind):
    """Vectorized factorization; returns ``(L+, Lc, L-, bad)`` arrays.

    ``bad`` flags elements whose denominator falls below the singularity
    tolerance; their outputs are meaningless.
    """
    lp, lc, lm = np.broadcast_arrays(
        np.asarray(lp, dtype=complex), np.asarray(lc, dtype=complex), np.asarray(lm, dtype=complex)
    )
    half = alg.delta * lc / 2
    nu2 = half * half - alg.delta * alg.epsilon * lp * lm
    small = np.abs(nu2) < NU_SERIES_CUTOFF**2
    nu = np.sqrt(np.where(small, 1.0, nu2))
    # cosh and sinh(nu)/nu are even in nu, so the sqrt branch is irrelevant
    cosh = np.where(small, 1 + nu2 / 2 + nu2 * nu2 / 24, np.cosh(nu))
    shc = np.where(small, 1 + nu2 / 6 + nu2 * nu2 / 120, np.sinh(nu) / nu)
    den = cosh - half * shc
    bad = ~(np.abs(den) >= SINGULAR_TOL * (1.0 + np.abs(cosh) + np.abs(half * shc)))
    safe = np.where(bad, 1.0, den)
    return lp * shc / safe, 1.0 / alg.pow_two_over_delta(safe), lm * shc / safe, bad


def factorize(lam: ExponentParams, alg: AlgebraKind = SU2) -> FactoredParams:
    """Rewrite ``exp(l+ T+ + lc Tc + l- T-)`` in ordered (Gauss) form.

    Uses ``nu**2 = (delta lc / 2)**2 - delta epsilon l+ l-``.

    Raises
    ------
    DegenerateFactorization
        If ``cosh(nu) - delta lc sinh(nu) / (2 nu)`` is numerically zero.
    """
    Lp, Lc, Lm, bad = _factorize_arrays(*lam.astuple(), alg)
    if bad:
        raise DegenerateFactorization(f"Gauss decomposition singular for {lam}")
    return FactoredParams(complex(Lp), complex(Lc), complex(Lm))


# --------------------------------------------------------------------------
# composition

@njit(cache=True)
def _chain_kernel(lp, lc, lm, ed, delta, unit_delta, a, b, g, tol, bmax):
    # Fold elements onto (a, b, g) from the left; returns the stopping index or -1.
    for k in range(lp.shape[0]):
        if abs(b) > bmax:
            return a, b, g, k
        x = ed * a * lm[k]
        den = 1.0 - x
        if abs(den) < tol * (1.0 + abs(x)):
            return a, b, g, k
        if unit_delta:
            lc_d = lc[k]
            b_d = b
            den_p = den * den
        else:
            lc_d = cmath.exp(delta * cmath.log(lc[k]))
            b_d = cmath.exp(delta * cmath.log(b))
            den_p = cmath.exp((2.0 / delta) * cmath.log(den))
        a, b, g = lp[k] + a * lc_d / den, b * lc[k] / den_p, g + lm[k] * b_d / den
    return a, b, g, -1


def _fold(state, Lp, Lc, Lm, alg, tol=SINGULAR_TOL, bmax=math.inf):
    return _chain_kernel(
        np.ascontiguousarray(Lp, dtype=np.complex128),
        np.ascontiguousarray(Lc, dtype=np.complex128),
        np.ascontiguousarray(Lm, dtype=np.complex128),
        complex(alg.epsilon * alg.delta),
        complex(alg.delta),
        alg.unit_delta,
        complex(state[0]),
        complex(state[1]),
        complex(state[2]),
        tol,
        bmax,
    )


def compose_pair(second: FactoredParams, first: FactoredParams, alg: AlgebraKind = SU2) -> ComposedParams:
    """Coordinates of ``G(second) G(first)`` (``first`` acts first)."""
    a, b, g, fail = _fold(first.astuple(), [second.Lambda_plus], [second.Lambda_c], [second.Lambda_minus], alg)
    if fail >= 0:
        raise CompositionSingularity("1 - eps delta L1+ L2- vanishes")
    return ComposedParams(a, b, g)


def compose_chain(elems: Sequence[FactoredParams], alg: AlgebraKind = SU2) -> ComposedParams:
    """Compose elements in chronological order (``elems[-1]`` is leftmost).

    Raises
    ------
    CompositionSingularity
        With ``.step`` set to the list index whose composition failed.
    """
    elems = list(elems)
    if not elems:
        raise ConfigError("cannot compose an empty chain")
    rest = np.array([e.astuple() for e in elems[1:]], dtype=complex).reshape(-1, 3)
    a, b, g, fail = _fold(elems[0].astuple(), rest[:, 0], rest[:, 1], rest[:, 2], alg)
    if fail >= 0:
        raise CompositionSingularity("vanishing composition denominator", step=fail + 1)
    _warn_growth(b, alg)
    return ComposedParams(a, b, g)


def alpha_continued_fraction(elems: Sequence[FactoredParams], alg: AlgebraKind = SU2) -> complex:
    """Evaluate ``alpha_N`` of a chain as a generalized continued fraction.

    The fraction is read from the last element down to the first,

        L_N+ - L_Nc^d / (ed L_N- - 1 / (L_{N-1}+ - L_{N-1}c^d / (... - 1 / L_1+))),

    and evaluated with the forward Wallis-Euler recurrences for the
    convergent numerators and denominators, rescaled at every term.  It
    shares no code with :func:`compose_chain`.
    """
    elems = list(elems)
    if not elems:
        raise ConfigError("cannot evaluate an empty continued fraction")
    ed = alg.epsilon * alg.delta
    terms = []
    for j in range(len(elems) - 1, 0, -1):
        cur, prev = elems[j], elems[j - 1]
        terms.append((-complex(alg.pow_delta(cur.Lambda_c)), ed * cur.Lambda_minus))
        terms.append((-1.0, prev.Lambda_plus))
    A_prev, A = 1.0 + 0j, elems[-1].Lambda_plus
    B_prev, B = 0j, 1.0 + 0j
    for a_n, b_n in terms:
        A_prev, A = A, b_n * A + a_n * A_prev
        B_prev, B = B, b_n * B + a_n * B_prev
        scale = max(abs(A), abs(B), abs(A_prev), abs(B_prev))
        if scale == 0:
            raise CompositionSingularity("continued fraction collapsed to 0/0")
        A, B, A_prev, B_prev = A / scale, B / scale, A_prev / scale, B_prev / scale
    if abs(B) <= SINGULAR_TOL * abs(A):
        raise CompositionSingularity("vanishing continued-fraction denominator")
    return A / B


def _warn_growth(beta, alg):
    if alg != SU2 and abs(beta) > GROWTH_WARNING:
        warnings.warn(f"|beta| = {abs(beta):.3g} exceeds {GROWTH_WARNING:g} in {alg.name}", RuntimeWarning, stacklevel=3)


# --------------------------------------------------------------------------
# stepwise time evolution

class ChainAccumulator:
    """Incrementally compose piecewise-constant evolution steps.

    Each call to :meth:`push` appends steps of constant Hamiltonian
    coefficients ``(eta+, etac, eta-)`` lasting ``step`` each.  A step whose
    own factorization is singular is replaced by two half steps.  When the
    running product approaches a coordinate singularity (a composition
    denominator below ``COND_TOL`` relative to its terms) the current
    segment is closed and a new one is started, so no single update suffers
    catastrophic cancellation.  For su(2) a segment is also closed once
    ``|beta|`` exceeds ``SEGMENT_BETA``, which keeps every segment well
    conditioned.  The full operator is the ordered product of the segments.
    """

    def __init__(self, alg: AlgebraKind = SU2, hbar: float = 1.0):
        self.alg = alg
        self.hbar = hbar
        self._bmax = SEGMENT_BETA if alg == SU2 else math.inf
        self.n_steps = 0
        self._state = None
        self._closed = []

    def push(self, eta, step: float):
        eta = np.asarray(eta, dtype=complex).reshape(-1, 3)
        if not step > 0:
            raise ConfigError("step must be positive")
        if not np.all(np.isfinite(eta)):
            raise ConfigError("non-finite Hamiltonian samples")
        for lo in range(0, len(eta), _CHUNK):
            self._push_chunk(eta[lo:lo + _CHUNK], step)
        return self

    def _push_chunk(self, eta, step):
        lam = (-1j * step / self.hbar) * eta
        Lp, Lc, Lm, bad = _factorize_arrays(lam[:, 0], lam[:, 1], lam[:, 2], self.alg)
        pos, n = 0, len(eta)
        while pos < n:
            if bad[pos]:
                for half in self._halves(lam[pos], self.n_steps + pos):
                    self._append(half)
                pos += 1
                continue
            if self._state is None:
                self._state = (Lp[pos], Lc[pos], Lm[pos])
                pos += 1
                continue
            stop = pos + int(np.argmax(bad[pos:])) if bad[pos:].any() else n
            a, b, g, k = _fold(self._state, Lp[pos:stop], Lc[pos:stop], Lm[pos:stop], self.alg, COND_TOL, self._bmax)
            self._state = (a, b, g)
            if k < 0:
                pos = stop
            else:
                self._close()
                pos += k
        self.n_steps += n

    def _halves(self, lam, index):
        Lp, Lc, Lm, bad = _factorize_arrays(lam[0] / 2, lam[1] / 2, lam[2] / 2, self.alg)
        if bad:
            raise DegenerateFactorization("Gauss decomposition singular after bisection", step=index)
        half = (complex(Lp), complex(Lc), complex(Lm))
        return half, half

    def _append(self, elem):
        if self._state is not None:
            a, b, g, k = _fold(self._state, [elem[0]], [elem[1]], [elem[2]], self.alg, COND_TOL, self._bmax)
            if k < 0:
                self._state = (a, b, g)
                return
            self._close()
        self._state = elem

    def _close(self):
        self._closed.append(self._state)
        self._state = None

    def segments(self) -> list:
        """Segments in chronological order; their ordered product is the operator."""
        states = self._closed + ([self._state] if self._state is not None else [])
        return [ComposedParams(*s) for s in states]

    def result(self) -> ComposedParams:
        """Coordinates of the full product.

        Raises
        ------
        CompositionSingularity
            If the full product itself lies on a coordinate singularity.
        """
        segs = self.segments()
        if not segs:
            return ComposedParams(0, 1, 0)
        state = segs[0].astuple()
        for seg in segs[1:]:
            a, b, g, k = _fold(state, [seg.alpha], [seg.beta], [seg.gamma], self.alg)
            if k >= 0:
                raise CompositionSingularity("evolution operator has no Gauss coordinates", step=self.n_steps)
            state = (a, b, g)
        _warn_growth(state[1], self.alg)
        return ComposedParams(*state)


def assemble_stepwise(
    eta_samples: Iterable, step: float, alg: AlgebraKind = SU2, hbar: float = 1.0
) -> ComposedParams:
    """Evolution operator of a piecewise-constant Hamiltonian.

    ``eta_samples`` is an ``(N, 3)`` array-like of ``(eta+, etac, eta-)`` in
    chronological order.  Each step contributes ``exp(lambda_j . T)`` with
    ``lambda_j = -(i / hbar) * step * eta_j``.
    """
    eta = np.asarray(eta_samples, dtype=complex).reshape(-1, 3)
    return ChainAccumulator(alg, hbar).push(eta, step).result()
