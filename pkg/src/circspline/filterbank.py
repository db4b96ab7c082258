"""Spline and e-spline wavelet filterbanks on circulant graphs.

A bank is a pair of circulant filters built from the normalized adjacency
``A/d``. The low-pass factor ``(beta I + A/d)/2`` averages a node with its
neighbours, the high-pass factor ``(beta I - A/d)/2`` takes differences.
Powers of these factors raise the number of vanishing moments, and choosing
``beta`` as the normalized e-degree makes the high-pass filter annihilate
complex exponentials instead of polynomials.

After filtering, every node keeps exactly one of the two outputs as given by
a :class:`SamplingPattern`; :func:`check_invertibility` decides whether the
resulting critically sampled transform can be inverted.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .circulant import (
    CirculantGraph,
    DegenerateParameterWarning,
    ExponentParam,
    SymLaurentPoly,
    apply_circulant,
    as_signal,
    dft_eigenvectors,
    root_multiplicity,
)

__all__ = [
    "FilterBank",
    "SamplingPattern",
    "InvertibilityReport",
    "SingularFilterBankError",
    "DisconnectedGraphError",
    "hgswt",
    "hgeswt",
    "bank_from_betas",
    "check_invertibility",
    "spectral_invertibility",
    "analysis_matrix",
    "analyze",
    "invert",
    "strang_fix_multiplicity",
    "vanishing_moments",
    "lowpass_invertible",
]

# |beta| and |gamma| closer than this count as a collision
COLLISION_TOL = 1e-9
# singular values below RANK_TOL * sqrt(N) make a sampled eigenvector block rank deficient
RANK_TOL = 1e-10
# dense analysis matrices with a larger condition number are treated as singular
MAX_CONDITION = 1e12


class SingularFilterBankError(ValueError):
    """The sampled analysis operator is not invertible."""

    def __init__(self, message, condition=np.inf):
        super().__init__(message)
        self.condition = condition


class DisconnectedGraphError(ValueError):
    """Filterbanks need a connected graph."""


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    """Per-node choice between the low-pass (True) and high-pass (False) output."""

    keep_lp: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep_lp, dtype=bool).copy()
        if keep.ndim != 1 or keep.size == 0:
            raise ValueError("sampling pattern must be a non-empty 1-D boolean vector")
        keep.setflags(write=False)
        object.__setattr__(self, "keep_lp", keep)

    @classmethod
    def alternating(cls, n: int, even: bool = True) -> "SamplingPattern":
        if n % 2:
            raise ValueError(f"alternating pattern needs an even size, got {n}")
        keep = np.arange(n) % 2 == 0
        return cls(keep if even else ~keep)

    @classmethod
    def from_string(cls, s: str) -> "SamplingPattern":
        """Parse ``"1010..."`` / ``"LHLH..."``; 1 or L marks a low-pass node."""
        table = {"1": True, "L": True, "l": True, "0": False, "H": False, "h": False}
        try:
            return cls(np.array([table[c] for c in s.strip()]))
        except KeyError as e:
            raise ValueError(f"bad pattern character {e.args[0]!r}") from None

    def __len__(self):
        return self.keep_lp.size

    @property
    def n(self) -> int:
        return self.keep_lp.size

    @property
    def lp_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.keep_lp)

    @property
    def hp_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.keep_lp)

    def alternating_parity(self):
        """0 or 1 if low-pass nodes are exactly the even (odd) ones, else None."""
        n = self.n
        if n % 2:
            return None
        even = np.arange(n) % 2 == 0
        if np.array_equal(self.keep_lp, even):
            return 0
        if np.array_equal(self.keep_lp, ~even):
            return 1
        return None

    def key(self) -> bytes:
        return np.packbits(self.keep_lp).tobytes() + self.n.to_bytes(4, "little")

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.keep_lp)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Analysis (and optionally synthesis) circulant filters on ``graph``.

    ``factors`` lists ``(beta, power)`` pairs of the product form
    ``prod (1/2^p)(beta I +- A/d)^p``; it is empty for banks whose low-pass
    filter is not of that form (complementary banks keep the spline form of
    their high-pass filter in ``factors`` but override ``lp_row``).
    """

    graph: CirculantGraph
    k: int
    alphas: tuple
    factors: tuple
    lp_row: SymLaurentPoly
    hp_row: SymLaurentPoly
    syn_lp_row: SymLaurentPoly | None = None
    syn_hp_row: SymLaurentPoly | None = None
    coeff_row: np.ndarray | None = None
    family: str = "spline"
    flags: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def betas(self) -> tuple:
        return tuple(b for b, _ in self.factors)

    @property
    def powers(self) -> tuple:
        return tuple(p for _, p in self.factors)

    @property
    def is_spline_form(self) -> bool:
        """True when both filters are the plain ``(beta I +- A/d)`` products."""
        return self.family == "spline"

    def lp_response(self) -> np.ndarray:
        return np.asarray(self.lp_row.eigenvalues(self.n))

    def hp_response(self) -> np.ndarray:
        return np.asarray(self.hp_row.eigenvalues(self.n))

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "alphas": [{"mode": p.mode, "alpha": p.alpha} for p in self.alphas],
            "betas": list(self.betas),
            "lp_row": _real_list(self.lp_row.coeffs),
            "hp_row": _real_list(self.hp_row.coeffs),
            "graph": self.graph.to_dict(),
        }
        if self.syn_lp_row is not None:
            d["syn_lp_row"] = _real_list(self.syn_lp_row.coeffs)
            d["syn_hp_row"] = _real_list(self.syn_hp_row.coeffs)
        if self.coeff_row is not None:
            d["coeff_row"] = _real_list(self.coeff_row)
        if self.family != "spline":
            d["family"] = self.family
        if self.flags:
            d["flags"] = list(self.flags)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _real_list(a) -> list:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag), initial=0) > 1e-12 * max(1.0, np.max(np.abs(a))):
            return [[float(v.real), float(v.imag)] for v in a]
        a = a.real
    return [float(v) for v in a]


def _spline_rows(g: CirculantGraph, factors) -> tuple[SymLaurentPoly, SymLaurentPoly]:
    a_norm = g.adjacency_row() / g.degree
    lp = SymLaurentPoly([1.0])
    hp = SymLaurentPoly([1.0])
    for beta, p in factors:
        lp = lp * ((beta + a_norm) / 2) ** p
        hp = hp * ((beta - a_norm) / 2) ** p
    return lp, hp


def _require_connected(g: CirculantGraph):
    if not g.connected:
        raise DisconnectedGraphError(
            f"circulant graph n={g.n}, S={list(g.generators)} is disconnected"
        )


def bank_from_betas(g: CirculantGraph, betas: Sequence[float], k=1, alphas=()) -> FilterBank:
    """Bank ``prod_n (1/2^k)(beta_n I +- A/d)^k`` for explicit ``beta_n``.

    Args:
        g: connected circulant graph.
        betas: the normalized degrees ``beta_n``.
        k: common power or a per-factor list of powers.
        alphas: exponent parameters the betas came from (bookkeeping only).
    """
    _require_connected(g)
    betas = [float(b) for b in betas]
    powers = [int(k)] * len(betas) if np.isscalar(k) else [int(p) for p in k]
    if len(powers) != len(betas):
        raise ValueError("need one power per beta")
    if any(p < 1 for p in powers):
        raise ValueError("powers must be positive")
    factors = tuple(zip(betas, powers))
    lp, hp = _spline_rows(g, factors)
    flags = tuple(f"degenerate beta at factor {i}" for i, b in enumerate(betas) if b == 0.0)
    return FilterBank(
        graph=g,
        k=max(powers),
        alphas=tuple(alphas),
        factors=factors,
        lp_row=lp,
        hp_row=hp,
        flags=flags,
    )


def hgswt(g: CirculantGraph, k: int = 1) -> FilterBank:
    """Graph spline bank ``(1/2^k)(I +- A/d)^k`` with ``2k`` vanishing moments."""
    return bank_from_betas(g, [1.0], k)


def hgeswt(g: CirculantGraph, alphas: Sequence[ExponentParam], k=1) -> FilterBank:
    """Graph e-spline bank with one ``(beta_n I +- A/d)^k`` factor per exponent.

    ``beta_n`` is the e-degree of ``alphas[n]`` divided by ``d``. A vanishing
    e-degree is permitted and recorded in ``flags``.
    """
    alphas = [a if isinstance(a, ExponentParam) else ExponentParam(a) for a in alphas]
    if not alphas:
        return hgswt(g, k)
    betas = []
    for p in alphas:
        ed = g.e_degree(p)
        if abs(ed) < 1e-12 * g.degree:
            warnings.warn(
                f"e-degree vanishes for alpha={p.alpha}", DegenerateParameterWarning, stacklevel=2
            )
            ed = 0.0
        betas.append(ed / g.degree)
    return bank_from_betas(g, betas, k, alphas)


# ---------------------------------------------------------------- analysis


def analyze(fb: FilterBank, sp: SamplingPattern, x) -> np.ndarray:
    """Filter with both analysis filters and keep one output per node."""
    x = as_signal(x)
    _check_sizes(fb, sp, x)
    lp = apply_circulant(fb.lp_row, x)
    hp = apply_circulant(fb.hp_row, x)
    keep = sp.keep_lp.reshape((-1,) + (1,) * (x.ndim - 1))
    return np.where(keep, lp, hp)


def _check_sizes(fb, sp, x):
    if sp.n != fb.n or x.shape[0] != fb.n:
        raise ValueError(
            f"size mismatch: graph {fb.n}, pattern {sp.n}, signal {x.shape[0]}"
        )


def analysis_matrix(fb: FilterBank, sp: SamplingPattern) -> np.ndarray:
    """Dense ``N x N`` matrix of :func:`analyze`."""
    if sp.n != fb.n:
        raise ValueError(f"pattern size {sp.n} does not match graph size {fb.n}")
    lp = fb.lp_row.dense(fb.n)
    hp = fb.hp_row.dense(fb.n)
    return np.where(sp.keep_lp[:, None], lp, hp)


def _factorization(fb: FilterBank, sp: SamplingPattern):
    key = ("lu", sp.key())
    hit = fb._cache.get(key)
    if hit is None:
        w = analysis_matrix(fb, sp)
        cond = np.linalg.cond(w)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            hit = SingularFilterBankError(
                f"analysis operator is singular (condition estimate {cond:.3g})", cond
            )
        else:
            hit = scipy.linalg.lu_factor(w)
        fb._cache[key] = hit
    if isinstance(hit, SingularFilterBankError):
        raise hit
    return hit


def invert(fb: FilterBank, sp: SamplingPattern, w) -> np.ndarray:
    """Solve ``analyze(fb, sp, x) = w`` for ``x``.

    Raises:
        SingularFilterBankError: the sampled operator has no inverse.
    """
    w = as_signal(w)
    _check_sizes(fb, sp, w)
    return scipy.linalg.lu_solve(_factorization(fb, sp), w)


# ------------------------------------------------------------ invertibility


@dataclass
class InvertibilityReport:
    invertible: bool
    condition_used: str
    colliding_betas: list = field(default_factory=list)
    detail: str = ""
    rank_test: dict | None = None

    def to_dict(self) -> dict:
        return {
            "invertible": self.invertible,
            "condition_used": self.condition_used,
            "colliding_betas": [
                {"beta": float(b), "gamma": float(gm), "multiplicity": int(m)}
                for b, gm, m in self.colliding_betas
            ],
            "detail": self.detail,
            "rank_test": self.rank_test,
        }


def _collisions(factors, gamma):
    """Spectral indices where some ``|beta_n| = |gamma_i|`` plus a summary list."""
    hit = np.zeros(gamma.size, dtype=bool)
    summary = []
    for beta, _ in factors:
        for sign in (1.0, -1.0):
            close = np.abs(gamma - sign * beta) <= COLLISION_TOL
            if close.any():
                hit |= close
                summary.append((beta, sign * beta, int(close.sum())))
    return hit, summary


def _factor_sign(factors, gamma):
    """Exact sign of ``prod_n (beta_n^2 - gamma^2)^p`` away from collisions."""
    sign = np.ones(gamma.size)
    for beta, p in factors:
        s = np.sign(beta**2 - gamma**2)
        sign *= s**p
    return sign


def spectral_invertibility(
    h_lp: np.ndarray,
    h_hp: np.ndarray,
    keep_lp: np.ndarray,
    eigvecs: np.ndarray | Callable[[], np.ndarray],
    *,
    factors=None,
    gamma=None,
    pair_offset: int | None = None,
    dense: Callable[[], np.ndarray] | None = None,
) -> InvertibilityReport:
    """Decide invertibility of ``x -> where(keep_lp, H_lp x, H_hp x)``.

    Both filters are diagonal in the orthonormal basis ``eigvecs`` with
    responses ``h_lp`` and ``h_hp``. If ``H_lp x`` vanishes on the high-pass
    nodes' complement and ``H_hp x`` on the low-pass nodes, the two outputs
    have disjoint support, so ``sum_i |x_i|^2 h_lp_i h_hp_i = 0``. When the
    nonzero products share one sign, ``x`` must live on the indices ``Z``
    where the product vanishes and a rank test on those eigenvectors settles
    the question.

    Args:
        h_lp, h_hp: filter responses in basis order.
        keep_lp: sampling pattern.
        eigvecs: the basis, or a callable producing it lazily.
        factors: ``(beta, power)`` list; when given together with ``gamma``
            the collision set and signs are computed exactly from them.
        gamma: eigenvalues of ``A/d`` in basis order.
        pair_offset: for a DFT basis, ``N/2``; enables the paired-column test
            for alternating patterns.
        dense: callable returning the dense operator for the numeric fallback.
    """
    n = keep_lp.size
    collisions = []
    if factors is not None and gamma is not None:
        zero, collisions = _collisions(factors, gamma)
        sign = _factor_sign(factors, gamma)
        all_even = all(p % 2 == 0 for _, p in factors)
    else:
        prod = h_lp * h_hp
        scale = max(np.max(np.abs(h_lp)), np.max(np.abs(h_hp)), 1e-300)
        zero = (np.abs(h_lp) <= COLLISION_TOL * scale) | (np.abs(h_hp) <= COLLISION_TOL * scale)
        sign = np.sign(prod.real)
        all_even = False
    nz_signs = set(np.unique(sign[~zero]).tolist())
    same_sign = len(nz_signs) <= 1

    if not zero.any() and same_sign:
        label = "k-even" if all_even else "same-sign-f"
        return InvertibilityReport(
            True,
            label,
            collisions,
            "no spectral collisions; the filter product keeps one sign",
        )

    if same_sign:
        v = eigvecs() if callable(eigvecs) else eigvecs
        idx = np.flatnonzero(zero)
        block = v[:, idx] * np.where(keep_lp[:, None], h_lp[idx], h_hp[idx])
        sv = np.linalg.svd(block, compute_uv=False) if idx.size else np.array([])
        thresh = RANK_TOL * np.sqrt(n)
        rank = int(np.sum(sv > thresh))
        ok = rank == idx.size
        return InvertibilityReport(
            ok,
            "eigen-rank",
            collisions,
            f"{idx.size} colliding eigenvectors, sampled block rank {rank}",
            {
                "columns": int(idx.size),
                "rank": rank,
                "min_singular_value": float(sv.min()) if sv.size else None,
                "threshold": thresh,
            },
        )

    if pair_offset is not None and n == 2 * pair_offset:
        parity = _parity(keep_lp)
        if parity is not None:
            i = np.arange(pair_offset)
            j = i + pair_offset
            det = h_lp[i] * h_hp[j] + h_hp[i] * h_lp[j]
            scale = max(np.max(np.abs(h_lp)), np.max(np.abs(h_hp))) ** 2
            bad = np.abs(det) <= COLLISION_TOL * scale
            return InvertibilityReport(
                not bad.any(),
                "eigen-rank",
                collisions,
                "alternating pattern: DFT columns (j, j+N/2) decouple into 2x2 blocks; "
                f"{int(bad.sum())} singular blocks",
                {
                    "columns": int(n),
                    "rank": int(n - bad.sum()),
                    "min_singular_value": float(np.min(np.abs(det))),
                    "threshold": COLLISION_TOL * scale,
                },
            )

    if dense is None:
        v = eigvecs() if callable(eigvecs) else eigvecs
        vh = v.conj().T
        m = np.where(keep_lp[:, None], (v * h_lp) @ vh, (v * h_hp) @ vh)
    else:
        m = dense()
    sv = np.linalg.svd(m, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * sv[0]))
    return InvertibilityReport(
        rank == n,
        "numeric-fallback",
        collisions,
        f"dense analysis operator has numerical rank {rank} of {n}",
        {"columns": n, "rank": rank, "min_singular_value": float(sv[-1]), "threshold": RANK_TOL * sv[0]},
    )


def _parity(keep_lp):
    n = keep_lp.size
    if n % 2:
        return None
    even = np.arange(n) % 2 == 0
    if np.array_equal(keep_lp, even):
        return 0
    if np.array_equal(keep_lp, ~even):
        return 1
    return None


def check_invertibility(fb: FilterBank, sp: SamplingPattern) -> InvertibilityReport:
    """Decide whether ``analyze(fb, sp, .)`` is invertible and say why."""
    if sp.n != fb.n:
        raise ValueError(f"pattern size {sp.n} does not match graph size {fb.n}")
    n = fb.n
    if fb.is_spline_form:
        gamma = fb.graph.normalized_spectrum()
        factors = fb.factors
    else:
        gamma = factors = None
    return spectral_invertibility(
        fb.lp_response(),
        fb.hp_response(),
        sp.keep_lp,
        lambda: dft_eigenvectors(n),
        factors=factors,
        gamma=gamma,
        pair_offset=n // 2 if n % 2 == 0 else None,
        dense=lambda: analysis_matrix(fb, sp),
    )


# ------------------------------------------------------------- reproduction


def strang_fix_multiplicity(fb: FilterBank) -> list[tuple[complex, int]]:
    """Root multiplicities of the low-pass filter where reproduction lives.

    Plain spline banks are examined at ``z = -1``; e-spline banks at
    ``-e^{+-i alpha_n}`` (``-e^{+-alpha_n}`` for hyperbolic parameters).
    """
    if not fb.alphas:
        return [(-1.0 + 0j, root_multiplicity(fb.lp_row, -1.0))]
    out = []
    for p in fb.alphas:
        for z0 in p.roots():
            out.append((complex(z0), root_multiplicity(fb.lp_row, z0)))
    return out


def vanishing_moments(fb: FilterBank) -> list[tuple[complex, int]]:
    """Root multiplicities of the high-pass filter at ``1`` or ``e^{+-i alpha}``."""
    if not fb.alphas:
        return [(1.0 + 0j, root_multiplicity(fb.hp_row, 1.0))]
    out = []
    for p in fb.alphas:
        for z0 in p.roots():
            out.append((complex(-z0), root_multiplicity(fb.hp_row, -z0)))
    return out


def lowpass_invertible(fb: FilterBank, cross_check: bool = True) -> bool:
    """Whether the (unsampled) low-pass filter is an invertible matrix.

    For spline-form banks this holds iff no ``beta_n = -gamma_i``; the answer
    is cross-checked against the smallest singular value of the dense filter.
    """
    n = fb.n
    if fb.is_spline_form or fb.factors:
        gamma = fb.graph.normalized_spectrum()
        ok = not any(np.any(np.abs(gamma + b) <= COLLISION_TOL) for b in fb.betas)
        if not fb.is_spline_form:
            # complementary banks: test the spline low-pass the coefficient row refers to
            return ok
    else:
        resp = fb.lp_response()
        ok = bool(np.min(np.abs(resp)) > COLLISION_TOL * np.max(np.abs(resp)))
    if cross_check:
        sv = np.linalg.svd(fb.lp_row.dense(n), compute_uv=False)
        numeric = sv[-1] > RANK_TOL * max(sv[0], 1e-300) * np.sqrt(n)
        if numeric != ok:
            warnings.warn(
                f"low-pass invertibility: analytic {ok} vs dense smallest singular value {sv[-1]:.3g}",
                RuntimeWarning,
                stacklevel=2,
            )
    return ok
