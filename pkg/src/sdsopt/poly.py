"""Sparse multivariate polynomials over a graded-lexicographic monomial order.

Polynomials are stored as maps from exponent tuples to nonzero coefficients.
The symbolic layer drops coefficients that are exactly zero and never applies
an epsilon; numerical thresholding belongs to the certification modules.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

Exponent = Tuple[int, ...]


def grlex_key(exp: Exponent) -> Tuple[int, Tuple[int, ...]]:
    """Sort key realizing the graded-lexicographic order 1, x1, x2, x1^2, x1*x2, ..."""
    return (sum(exp), tuple(-e for e in exp))


def _clean_terms(n: int, terms: Mapping[Exponent, float]) -> Dict[Exponent, float]:
    clean: Dict[Exponent, float] = {}
    for exp, coef in terms.items():
        key = tuple(int(e) for e in exp)
        if len(key) != n:
            raise ValueError(f"exponent {key} has length {len(key)}, expected {n}")
        if any(e < 0 for e in key):
            raise ValueError(f"negative exponent in {key}")
        c = float(coef)
        if c != 0.0:
            clean[key] = c
    return clean


class Polynomial:
    """Immutable sparse polynomial in n variables."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Exponent, float] | None = None):
        if n < 1:
            raise ValueError("a polynomial needs at least one variable")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "terms", _clean_terms(n, terms or {}))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(n: int) -> "Polynomial":
        return Polynomial(n)

    @staticmethod
    def constant(n: int, c: float) -> "Polynomial":
        return Polynomial(n, {(0,) * n: c})

    @staticmethod
    def variable(n: int, i: int) -> "Polynomial":
        """The monomial x_{i+1} (0-based index i)."""
        if not 0 <= i < n:
            raise ValueError(f"variable index {i} out of range for n={n}")
        exp = [0] * n
        exp[i] = 1
        return Polynomial(n, {tuple(exp): 1.0})

    @staticmethod
    def monomial(n: int, exp: Exponent, coef: float = 1.0) -> "Polynomial":
        return Polynomial(n, {tuple(exp): coef})

    # -- structure ----------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def coefficient(self, exp: Exponent) -> float:
        return self.terms.get(tuple(exp), 0.0)

    def support(self) -> Tuple[Exponent, ...]:
        return tuple(sorted(self.terms, key=grlex_key))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("variable counts differ")
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return Polynomial(self.n, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError("variable counts differ")
            out: Dict[Exponent, float] = {}
            for ea, ca in self.terms.items():
                for eb, cb in other.terms.items():
                    key = tuple(a + b for a, b in zip(ea, eb))
                    out[key] = out.get(key, 0.0) + ca * cb
            return Polynomial(self.n, out)
        return Polynomial(self.n, {e: c * float(other) for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.n == other.n
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial({self.n}, 0)"
        bits = []
        for exp in self.support():
            mono = "*".join(
                f"x{i + 1}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exp)
                if e > 0
            )
            c = self.terms[exp]
            bits.append(f"{c:+g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial({self.n}, {' '.join(bits)})"

    def __call__(self, x) -> float:
        return poly_eval(self, x)


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered list of exponents; full bases have length C(n+d, n)."""

    n: int
    d: int
    exponents: Tuple[Exponent, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {e: k for k, e in enumerate(self.exponents)}
        )

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def index(self, exp: Exponent) -> int:
        return self._index[tuple(exp)]

    def __contains__(self, exp: Exponent) -> bool:
        return tuple(exp) in self._index


def basis_size(n: int, d: int) -> int:
    """s(n, d) = C(n + d, n)."""
    return math.comb(n + d, n)


def monomial_basis(n: int, d: int) -> MonomialBasis:
    """All monomials of degree <= d in graded-lex order, starting at the constant."""
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    exps: List[Exponent] = []
    for deg in range(d + 1):
        # combinations_with_replacement over variable indices enumerates each
        # degree level already in graded-lex order
        for combo in itertools.combinations_with_replacement(range(n), deg):
            e = [0] * n
            for i in combo:
                e[i] += 1
            exps.append(tuple(e))
    return MonomialBasis(n, d, tuple(exps))


def poly_eval(p: Polynomial, x) -> float | np.ndarray:
    """Evaluate p at a point of length n, or at a batch of shape (k, n)."""
    pt = np.asarray(x, dtype=float)
    if pt.shape[-1] != p.n:
        raise ValueError(f"point has {pt.shape[-1]} coordinates, expected {p.n}")
    acc = np.zeros(pt.shape[:-1])
    for exp, coef in p.terms.items():
        term = np.full(pt.shape[:-1], coef)
        for i, e in enumerate(exp):
            if e:
                term = term * pt[..., i] ** e
        acc = acc + term
    if acc.ndim == 0:
        return float(acc)
    return acc


def poly_combine(coeffs: Sequence[float], polys: Sequence[Polynomial]) -> Polynomial:
    """Sum of c_k * p_k with exact-zero results dropped."""
    if len(coeffs) != len(polys):
        raise ValueError("coefficient/polynomial counts differ")
    if not polys:
        raise ValueError("empty combination has no variable count")
    n = polys[0].n
    out: Dict[Exponent, float] = {}
    for c, p in zip(coeffs, polys):
        if p.n != n:
            raise ValueError("variable counts differ")
        c = float(c)
        if c == 0.0:
            continue
        for exp, pc in p.terms.items():
            out[exp] = out.get(exp, 0.0) + c * pc
    return Polynomial(n, out)


def differentiate(p: Polynomial, i: int) -> Polynomial:
    """Partial derivative with respect to x_{i+1}."""
    out: Dict[Exponent, float] = {}
    for exp, coef in p.terms.items():
        if exp[i] == 0:
            continue
        e = list(exp)
        e[i] -= 1
        out[tuple(e)] = out.get(tuple(e), 0.0) + coef * exp[i]
    return Polynomial(p.n, out)


def gradient(p: Polynomial) -> Tuple[Polynomial, ...]:
    return tuple(differentiate(p, i) for i in range(p.n))


def embed(p: Polynomial, total: int, offset: int) -> Polynomial:
    """View p in a larger variable space, its variables starting at `offset`."""
    if offset < 0 or offset + p.n > total:
        raise ValueError("embedding out of range")
    out = {}
    for exp, coef in p.terms.items():
        e = (0,) * offset + exp + (0,) * (total - offset - p.n)
        out[e] = coef
    return Polynomial(total, out)


def first_order_gap(f: Polynomial) -> Polynomial:
    """h_f(x, z) = f(x) - f(z) - <grad f(z), x - z> over (x_1..x_n, z_1..z_n).

    Vanishes identically when f is affine; f is first-order SDSOS-convex
    exactly when this gap is an SDSOS polynomial in the 2n variables.
    """
    n = f.n
    gap = embed(f, 2 * n, 0) - embed(f, 2 * n, n)
    for i, gi in enumerate(gradient(f)):
        if gi.is_zero():
            continue
        gi_z = embed(gi, 2 * n, n)
        step = Polynomial.variable(2 * n, i) - Polynomial.variable(2 * n, n + i)
        gap = gap - gi_z * step
    return gap
