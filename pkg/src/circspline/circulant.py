"""Circulant graphs, symmetric Laurent polynomials and circulant algebra.

A symmetric circulant matrix is fully described by its first row, which we
store as the coefficients ``c_0 .. c_T`` of the symmetric Laurent polynomial

    c(z) = c_0 + sum_i c_i (z^i + z^-i).

Evaluating ``c`` at the N-th roots of unity gives the eigenvalues of the
matrix in DFT order, so every product, power or inverse of circulant filters
reduces to polynomial arithmetic or a pointwise operation on that spectrum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CirculantGraph",
    "SymLaurentPoly",
    "ExponentParam",
    "DegenerateParameterWarning",
    "make_circulant",
    "laplacian_row",
    "adjacency_row",
    "e_laplacian_row",
    "apply_circulant",
    "as_signal",
    "poly_signal",
    "exp_poly_signal",
    "root_multiplicity",
    "dft_eigenvectors",
]

# |Taylor coefficient| below this fraction of the largest lift coefficient
# counts as a vanishing derivative.
ROOT_TOL = 1e-8


class DegenerateParameterWarning(UserWarning):
    """An exponential parameter produced a zero e-degree."""


class SymLaurentPoly:
    """Symmetric Laurent polynomial ``c_0 + sum_{i>=1} c_i (z^i + z^-i)``.

    Instances are immutable. Arithmetic (``+``, ``-``, ``*``, ``**``) stays
    inside the class; multiplication is the convolution of the two-sided
    coefficient sequences, i.e. the product of the circulant matrices.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex]):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if np.iscomplexobj(c) and not np.any(c.imag):
            c = c.real
        c = c.astype(complex if np.iscomplexobj(c) else float)
        # trailing zeros carry no information
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        c.setflags(write=False)
        self._c = c

    @classmethod
    def from_two_sided(cls, full: np.ndarray) -> "SymLaurentPoly":
        """Build from the centred two-sided sequence ``[c_T .. c_0 .. c_T]``."""
        full = np.asarray(full)
        T = (full.size - 1) // 2
        return cls(full[T:])

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def halfsupport(self) -> int:
        return self._c.size - 1

    def two_sided(self) -> np.ndarray:
        """Coefficients of ``z^-T .. z^T``."""
        return np.concatenate([self._c[:0:-1], self._c])

    def lift(self) -> np.ndarray:
        """Ascending coefficients of the ordinary polynomial ``z^T c(z)``."""
        return self.two_sided()

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self._c[0], dtype=complex)
        for i, ci in enumerate(self._c[1:], start=1):
            if ci != 0:
                out = out + ci * (z**i + z ** (-i))
        return out

    def eigenvalues(self, n: int) -> np.ndarray:
        """Values at ``exp(2*pi*1j*k/n)``, ``k = 0..n-1`` (DFT order)."""
        k = np.arange(n)
        out = np.full(n, self._c[0], dtype=complex)
        for i, ci in enumerate(self._c[1:], start=1):
            if ci != 0:
                out += 2 * ci * np.cos(2 * np.pi * i * k / n)
        return out if np.iscomplexobj(self._c) else out.real

    def first_row(self, n: int) -> np.ndarray:
        """First row of the ``n x n`` circulant matrix, wrapping long supports."""
        row = np.zeros(n, dtype=self._c.dtype)
        row[0] += self._c[0]
        for i, ci in enumerate(self._c[1:], start=1):
            row[i % n] += ci
            row[(-i) % n] += ci
        return row

    def dense(self, n: int) -> np.ndarray:
        row = self.first_row(n)
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return row[idx]

    def modulated(self) -> "SymLaurentPoly":
        """``c(-z)``."""
        signs = (-1.0) ** np.arange(self._c.size)
        return SymLaurentPoly(self._c * signs)

    def _coerce(self, other) -> "SymLaurentPoly":
        if isinstance(other, SymLaurentPoly):
            return other
        if np.isscalar(other):
            return SymLaurentPoly([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, dtype=np.result_type(self._c, other._c))
        a[: self._c.size] += self._c
        a[: other._c.size] += other._c
        return SymLaurentPoly(a)

    __radd__ = __add__

    def __neg__(self):
        return SymLaurentPoly(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return SymLaurentPoly(self._c * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return SymLaurentPoly.from_two_sided(np.convolve(self.two_sided(), other.two_sided()))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SymLaurentPoly(self._c / scalar)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not Laurent polynomials")
        result = SymLaurentPoly([1.0])
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def allclose(self, other, atol=1e-12) -> bool:
        other = self._coerce(other)
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[: self._c.size] = self._c
        b[: other._c.size] = other._c
        return bool(np.allclose(a, b, rtol=0, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, SymLaurentPoly):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        return f"SymLaurentPoly({np.array2string(self._c, precision=6)})"


@dataclass(frozen=True)
class ExponentParam:
    """Exponential parameter of an e-spline: ``e^{i alpha t}`` or ``e^{alpha t}``."""

    alpha: float
    mode: str = "trigonometric"

    def __post_init__(self):
        if self.mode not in ("trigonometric", "hyperbolic"):
            raise ValueError(f"unknown exponent mode {self.mode!r}")
        object.__setattr__(self, "alpha", float(self.alpha))

    def kernel(self, s):
        """``cos(alpha s)`` or ``cosh(alpha s)``."""
        s = np.asarray(s, dtype=float)
        if self.mode == "trigonometric":
            return np.cos(self.alpha * s)
        return np.cosh(self.alpha * s)

    def scaled(self, factor: float) -> "ExponentParam":
        return ExponentParam(self.alpha * factor, self.mode)

    def roots(self) -> tuple[complex, complex]:
        """Points ``-e^{+-i alpha}`` (or ``-e^{+-alpha}``) where reproduction lives."""
        if self.mode == "trigonometric":
            return (-np.exp(1j * self.alpha), -np.exp(-1j * self.alpha))
        return (complex(-np.exp(self.alpha)), complex(-np.exp(-self.alpha)))


@dataclass(frozen=True)
class CirculantGraph:
    """Undirected circulant graph on ``n`` nodes.

    ``gens`` holds ``(s, w)`` pairs: node ``i`` is joined to ``i +- s`` (mod n)
    with weight ``w``. A generator ``s = n/2`` yields a single edge per node.
    """

    n: int
    gens: tuple[tuple[int, float], ...]

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise ValueError(f"need at least 2 nodes, got {n}")
        gens = tuple(sorted((int(s), float(w)) for s, w in self.gens))
        seen = set()
        for s, w in gens:
            if s in seen:
                raise ValueError(f"duplicate generator s={s}")
            seen.add(s)
            if s < 1 or 2 * s > n:
                raise ValueError(f"generator s={s} out of range 1..{n // 2}")
            if not w > 0:
                raise ValueError(f"generator s={s} has nonpositive weight {w}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "gens", gens)

    @property
    def generators(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.gens)

    @property
    def bandwidth(self) -> int:
        return max(self.generators, default=0)

    @cached_property
    def degree(self) -> float:
        return float(sum(w if 2 * s == self.n else 2 * w for s, w in self.gens))

    @cached_property
    def connected(self) -> bool:
        return reduce(math.gcd, self.generators, self.n) == 1

    @cached_property
    def bipartite(self) -> bool:
        return self.n % 2 == 0 and all(s % 2 == 1 for s in self.generators)

    def weight(self, s: int) -> float:
        return dict(self.gens).get(s, 0.0)

    def adjacency_row(self) -> SymLaurentPoly:
        c = np.zeros(self.bandwidth + 1)
        for s, w in self.gens:
            # the half generator is counted once: both wraps land on column n/2
            c[s] = w / 2 if 2 * s == self.n else w
        return SymLaurentPoly(c)

    def adjacency(self) -> np.ndarray:
        return self.adjacency_row().dense(self.n)

    def laplacian(self) -> np.ndarray:
        return laplacian_row(self).dense(self.n)

    def adjacency_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of A in DFT order."""
        return self.adjacency_row().eigenvalues(self.n)

    def normalized_spectrum(self) -> np.ndarray:
        """Eigenvalues ``gamma_i`` of ``A/d`` in DFT order."""
        return self.adjacency_eigenvalues() / self.degree

    def e_degree(self, p: ExponentParam) -> float:
        return float(
            sum(
                (1 if 2 * s == self.n else 2) * w * p.kernel(s)
                for s, w in self.gens
            )
        )

    def to_dict(self) -> dict:
        return {"n": self.n, "gens": [{"s": s, "w": w} for s, w in self.gens]}

    @classmethod
    def from_dict(cls, d: dict) -> "CirculantGraph":
        return cls(int(d["n"]), tuple((int(g["s"]), float(g["w"])) for g in d["gens"]))


def make_circulant(n: int, gens: Sequence) -> CirculantGraph:
    """Validated circulant graph.

    ``gens`` entries may be ``(s, w)`` pairs or bare hop distances (unit weight).
    """
    pairs = []
    for g in gens:
        if isinstance(g, (tuple, list)):
            pairs.append((g[0], g[1]))
        else:
            pairs.append((g, 1.0))
    return CirculantGraph(n, tuple(pairs))


def adjacency_row(g: CirculantGraph) -> SymLaurentPoly:
    return g.adjacency_row()


def laplacian_row(g: CirculantGraph) -> SymLaurentPoly:
    """First row of ``L = D - A``: ``c_0 = d``, ``c_s = -w_s``."""
    return g.degree - g.adjacency_row()


def e_laplacian_row(g: CirculantGraph, p: ExponentParam) -> SymLaurentPoly:
    """First row of the e-graph Laplacian ``D_alpha - A``.

    The diagonal is the e-degree ``sum 2 w_j cos(alpha s_j)`` (``cosh`` in
    hyperbolic mode). A zero e-degree is allowed but warned about since
    filters built from it can lose invertibility.
    """
    ed = g.e_degree(p)
    if abs(ed) < 1e-12 * g.degree:
        warnings.warn(
            f"e-degree vanishes for alpha={p.alpha}", DegenerateParameterWarning, stacklevel=2
        )
        ed = 0.0
    return ed - g.adjacency_row()


def as_signal(x) -> np.ndarray:
    """Complex 1-D (or batched 2-D, nodes along axis 0) copy of ``x``."""
    return np.array(x, dtype=complex)


def apply_circulant(row: SymLaurentPoly, x) -> np.ndarray:
    """``C @ x`` for the symmetric circulant ``C`` with representer ``row``.

    Uses the DFT diagonalization, O(N log N). ``x`` may be batched with the
    node axis first.
    """
    x = as_signal(x)
    if x.ndim == 0:
        raise ValueError("signal must have at least one dimension")
    n = x.shape[0]
    lam = np.asarray(row.eigenvalues(n))
    shape = (n,) + (1,) * (x.ndim - 1)
    return np.fft.ifft(lam.reshape(shape) * np.fft.fft(x, axis=0), axis=0)


def dft_eigenvectors(n: int) -> np.ndarray:
    """Columns ``u_j(m) = exp(2 pi i j m / n) / sqrt(n)``."""
    m = np.arange(n)
    return np.exp(2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def poly_signal(n: int, pieces) -> np.ndarray:
    """Piecewise polynomial signal.

    Args:
        n: number of nodes.
        pieces: list of ``(breakpoint, coeffs)``; piece ``j`` starts at its
            breakpoint and runs to the next one (the last runs to ``n``).
            ``coeffs`` are ascending powers of the global node index ``t``.
            The first breakpoint must be 0.
    """
    starts = [int(b) for b, _ in pieces]
    if not starts or starts[0] != 0 or any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] >= n:
        raise ValueError(f"breakpoints must satisfy 0 = t_1 < ... < n, got {starts}")
    t = np.arange(n, dtype=float)
    x = np.zeros(n, dtype=complex)
    bounds = starts[1:] + [n]
    for (start, coeffs), stop in zip(pieces, bounds):
        seg = t[start:stop]
        x[start:stop] = np.polynomial.polynomial.polyval(seg, np.asarray(coeffs, dtype=complex))
    return x


def exp_poly_signal(n: int, p: ExponentParam, coeffs=(1.0,)) -> np.ndarray:
    """``y(j) = poly(j) e^{i alpha j}`` (``e^{alpha j}`` in hyperbolic mode)."""
    t = np.arange(n, dtype=float)
    poly = np.polynomial.polynomial.polyval(t, np.asarray(coeffs, dtype=complex))
    if p.mode == "trigonometric":
        return poly * np.exp(1j * p.alpha * t)
    return poly * np.exp(p.alpha * t)


def root_multiplicity(row, z0: complex, tol: float = ROOT_TOL) -> int:
    """Multiplicity of ``z0`` as a root of the lift ``z^T row(z)``.

    The Taylor coefficients ``p^(m)(z0)/m!`` are produced by repeated
    synthetic division (Horner deflation). The count stops at the first one
    exceeding ``tol`` times the same coefficient computed from the absolute
    values of the polynomial coefficients at ``|z0|``; for low degrees this
    is the plain ``tol * max|coeff|`` rule, for high degrees it accounts for
    the binomial growth of derivatives.
    """
    coeffs = row.lift() if isinstance(row, SymLaurentPoly) else np.asarray(row)
    p = np.asarray(coeffs, dtype=complex)[::-1]  # descending
    if not np.any(p):
        raise ValueError("zero polynomial has roots everywhere")
    bound = np.abs(p)
    r = abs(z0)
    m = 0
    while p.size > 1:
        q, acc = _deflate(p, z0)
        qb, accb = _deflate(bound, r)
        if abs(acc) > tol * max(accb, np.max(np.abs(bound))):
            break
        m += 1
        p, bound = q, qb
    return m


def _deflate(p, z0):
    """Synthetic division by ``(z - z0)``: quotient and remainder."""
    q = np.empty(p.size - 1, dtype=p.dtype)
    acc = p[0]
    for i in range(1, p.size):
        q[i - 1] = acc
        acc = acc * z0 + p[i]
    return q, acc
