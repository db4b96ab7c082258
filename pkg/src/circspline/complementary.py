"""Biorthogonal complements with FIR synthesis via spectral factorization.

Given the spline (or e-spline) high-pass filter ``H_HP``, a new analysis
low-pass ``H_LP`` is sought such that ``P(z) = H_LP(z) H_HP(-z)`` is
half-band, ``P(z) + P(-z) = 2``. Writing ``H_LP = F R`` with an optional
imposed factor ``F`` (dual vanishing moments), the even coefficients of
``P`` give a square linear system for the symmetric unknown ``R``. The
synthesis filters are then modulated copies of the analysis filters and
reconstruct perfectly under the alternating sampling pattern.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .circulant import CirculantGraph, ExponentParam, SymLaurentPoly, apply_circulant, as_signal, root_multiplicity
from .filterbank import (
    FilterBank,
    SamplingPattern,
    hgeswt,
    hgswt,
    lowpass_invertible,
)

__all__ = [
    "BezoutFeasibility",
    "HalfBandSystem",
    "InfeasibleFactorizationError",
    "bezout_feasible",
    "moment_factor",
    "halfband_system",
    "complement_lowpass",
    "hcgswt",
    "hcgeswt",
    "modulate",
    "synthesize",
    "pr_residual",
    "halfband_residual",
]

# distinct roots closer than this are treated as opposite or zero
ROOT_PAIR_TOL = 1e-8
# a half-band system with a larger condition number counts as singular
SYSTEM_COND_MAX = 1e12
MAX_RETRIES = 3
PR_TOL = 1e-8


class InfeasibleFactorizationError(ValueError):
    """No FIR complement exists (or none was found) for the given high-pass."""


@dataclass
class BezoutFeasibility:
    has_zero_root: bool
    opposite_root_pairs: list
    roots: np.ndarray = field(repr=False, default=None)

    @property
    def feasible(self) -> bool:
        return not self.has_zero_root and not self.opposite_root_pairs

    def __bool__(self):
        return self.feasible


def _cluster_roots(asc: np.ndarray):
    """Distinct roots of an ascending coefficient vector with multiplicities.

    Companion-matrix roots of a multiple root scatter on a small circle; the
    cluster mean is accurate, so clusters are merged when the Taylor
    coefficients at their mean confirm the multiplicity.
    """
    desc = asc[::-1]
    raw = np.roots(desc) if desc.size > 1 else np.array([], dtype=complex)
    raw = np.sort_complex(raw)
    used = np.zeros(raw.size, dtype=bool)
    centres = []
    for i in range(raw.size):
        if used[i]:
            continue
        scale = max(1.0, abs(raw[i]))
        near = np.flatnonzero(~used & (np.abs(raw - raw[i]) <= 1e-2 * scale))
        centre = raw[near].mean()
        if near.size > 1 and root_multiplicity(asc, centre, tol=1e-6) < near.size:
            near = np.array([i])
            centre = raw[i]
        used[near] = True
        centres.append((complex(centre), int(near.size)))
    return centres, raw


def bezout_feasible(c) -> BezoutFeasibility:
    """Check that ``c`` has neither a zero root nor a pair of roots ``r, -r``.

    Args:
        c: a :class:`SymLaurentPoly` (its lift ``z^T c(z)`` is examined) or
            ascending coefficients of an ordinary polynomial.
    """
    asc = c.lift() if isinstance(c, SymLaurentPoly) else np.asarray(c, dtype=complex)
    asc = np.asarray(asc, dtype=complex)
    nz = np.flatnonzero(np.abs(asc) > 0)
    if nz.size == 0:
        raise ValueError("zero polynomial")
    scale = np.max(np.abs(asc))
    has_zero = bool(abs(asc[0]) <= ROOT_PAIR_TOL * scale)
    # strip exact zero roots before root finding
    asc = asc[nz[0]:nz[-1] + 1]
    centres, raw = _cluster_roots(asc)
    if any(abs(r) <= ROOT_PAIR_TOL for r, _ in centres):
        has_zero = True
    pairs = []
    for i, (r1, _) in enumerate(centres):
        for r2, _ in centres[i + 1:]:
            if abs(r1 + r2) <= ROOT_PAIR_TOL * max(1.0, abs(r1)) and abs(r1) > ROOT_PAIR_TOL:
                pairs.append((r1, r2))
    return BezoutFeasibility(has_zero, pairs, raw)


def moment_factor(alphas: Sequence[ExponentParam], k=1) -> SymLaurentPoly:
    """``prod_n (z + 2 cos(alpha_n) + z^-1)^k``: roots at ``-e^{+-i alpha_n}``.

    An empty parameter list stands for the spline case ``alpha = 0``.
    """
    alphas = list(alphas) or [ExponentParam(0.0)]
    powers = [k] * len(alphas) if np.isscalar(k) else list(k)
    f = SymLaurentPoly([1.0])
    for p, kk in zip(alphas, powers):
        f = f * SymLaurentPoly([2 * float(p.kernel(1.0)), 1.0]) ** kk
    return f


@dataclass
class HalfBandSystem:
    """Even-coefficient equations of ``P = imposed * R * target``.

    ``target_hp`` is the modulated analysis high-pass ``H_HP(-z)``.
    """

    target_hp: SymLaurentPoly
    imposed_factor: SymLaurentPoly
    unknown_halfsupport: int
    matrix: np.ndarray
    rhs: np.ndarray

    def solve(self) -> SymLaurentPoly:
        cond = np.linalg.cond(self.matrix)
        if not np.isfinite(cond) or cond > SYSTEM_COND_MAX:
            raise np.linalg.LinAlgError(f"half-band system is singular (condition {cond:.3g})")
        r = np.linalg.solve(self.matrix, self.rhs)
        return SymLaurentPoly(r)


def halfband_system(target_hp: SymLaurentPoly, imposed: SymLaurentPoly, t_r: int | None = None) -> HalfBandSystem:
    """Assemble the square system for ``R`` (default size: smallest square)."""
    known = imposed * target_hp
    dk = known.halfsupport
    if t_r is None:
        t_r = max(dk - 1, 0)
    rows = 1 + (dk + t_r) // 2
    if rows != t_r + 1:
        raise ValueError(f"unknown half-support {t_r} does not give a square system")
    mat = np.zeros((rows, t_r + 1))
    for m in range(t_r + 1):
        basis = np.zeros(m + 1)
        basis[m] = 1.0
        p = (known * SymLaurentPoly(basis)).coeffs
        even = p[::2][:rows]
        mat[: even.size, m] = even.real
    rhs = np.zeros(rows)
    rhs[0] = 1.0
    return HalfBandSystem(target_hp, imposed, t_r, mat, rhs)


def complement_lowpass(
    g: CirculantGraph,
    k: int = 1,
    alphas: Sequence[ExponentParam] = (),
    dual_moments: bool = False,
    *,
    hp_row: SymLaurentPoly | None = None,
) -> SymLaurentPoly:
    """Analysis low-pass completing the (e-)spline high-pass to a half-band pair.

    Raises:
        InfeasibleFactorizationError: ``H_HP(-z)`` (times the imposed factor)
            has a zero root or opposite roots, or every retry stays singular.
    """
    if hp_row is None:
        hp_row = (hgeswt(g, alphas, k) if alphas else hgswt(g, k)).hp_row
    target = hp_row.modulated()
    imposed = moment_factor(alphas, k) if dual_moments else SymLaurentPoly([1.0])
    feas = bezout_feasible(imposed * target)
    if not feas.feasible:
        why = "a zero root" if feas.has_zero_root else f"opposite roots {feas.opposite_root_pairs[0]}"
        raise InfeasibleFactorizationError(f"no FIR complement: H_HP(-z) has {why}")
    last = None
    for attempt in range(MAX_RETRIES + 1):
        try:
            r = halfband_system(target, imposed).solve()
        except np.linalg.LinAlgError as e:
            last = e
            # extra degrees of freedom are spent on additional roots at z = -1
            imposed = imposed * SymLaurentPoly([2.0, 1.0])
            continue
        if attempt:
            warnings.warn(
                f"half-band system singular; imposed {attempt} extra root pair(s) at z=-1",
                RuntimeWarning,
                stacklevel=2,
            )
        return imposed * r
    raise InfeasibleFactorizationError(f"half-band system stayed singular after {MAX_RETRIES} retries: {last}")


def modulate(row, n: int) -> np.ndarray:
    """Length-``n`` first row of ``H(-z)``: entries times ``(-1)^position``."""
    if n % 2:
        raise ValueError(f"modulation needs an even size, got {n}")
    first = row.first_row(n) if isinstance(row, SymLaurentPoly) else np.asarray(row)
    if first.size != n:
        raise ValueError(f"row length {first.size} does not match size {n}")
    return first * (-1.0) ** np.arange(n)


def _pr_scales(lp: SymLaurentPoly, hp: SymLaurentPoly, n: int) -> tuple[float, float, float]:
    """Least-squares ``c1, c2`` for synthesis ``c1 H_HP(-z), c2 H_LP(-z)``."""
    z = np.exp(2j * np.pi * np.arange(n) / n)
    p = lp(z) * hp(-z)
    p_mod = lp(-z) * hp(z)
    cross = hp(-z) * lp(-z)
    a = np.concatenate([np.stack([p, p_mod], axis=1), np.stack([cross, -cross], axis=1)])
    b = np.concatenate([2 * np.ones(n), np.zeros(n)])
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = np.max(np.abs(a @ sol - b))
    return float(sol[0].real), float(sol[1].real), float(resid)


def _complementary_bank(base: FilterBank, lp: SymLaurentPoly, n_check: int) -> FilterBank:
    hp = base.hp_row
    c1, c2, resid = _pr_scales(lp, hp, n_check)
    if resid > PR_TOL:
        raise InfeasibleFactorizationError(f"perfect-reconstruction residual {resid:.3g} too large")
    syn_lp = hp.modulated() * c1
    syn_hp = lp.modulated() * c2
    coeff = None
    if lowpass_invertible(base, cross_check=False):
        n = base.n
        ratio = lp.eigenvalues(n) / base.lp_row.eigenvalues(n)
        coeff = np.fft.ifft(ratio).real
    return replace(
        base,
        lp_row=lp,
        syn_lp_row=syn_lp,
        syn_hp_row=syn_hp,
        coeff_row=coeff,
        family="complementary",
        _cache={},
    )


def hcgswt(g: CirculantGraph, k: int = 1, dual_moments: bool = False) -> FilterBank:
    """Complementary graph spline bank with FIR synthesis."""
    base = hgswt(g, k)
    lp = complement_lowpass(g, k, (), dual_moments, hp_row=base.hp_row)
    return _complementary_bank(base, lp, _check_size(g))


def hcgeswt(g: CirculantGraph, alphas: Sequence[ExponentParam], k: int = 1, dual_moments: bool = False) -> FilterBank:
    """Complementary graph e-spline bank with FIR synthesis."""
    alphas = [a if isinstance(a, ExponentParam) else ExponentParam(a) for a in alphas]
    base = hgeswt(g, alphas, k)
    lp = complement_lowpass(g, k, alphas, dual_moments, hp_row=base.hp_row)
    return _complementary_bank(base, lp, _check_size(g))


def _check_size(g: CirculantGraph) -> int:
    if g.n % 2:
        raise ValueError(f"complementary banks need an even graph size, got {g.n}")
    return g.n


def synthesize(fb: FilterBank, sp: SamplingPattern, w) -> np.ndarray:
    """FIR reconstruction ``H~_LP (S_LP w) + H~_HP (S_HP w)``.

    Exact only for the alternating patterns the complements are built for.
    """
    if fb.syn_lp_row is None:
        raise ValueError("bank has no synthesis filters")
    if sp.alternating_parity() is None:
        raise ValueError("FIR synthesis requires an alternating sampling pattern")
    w = as_signal(w)
    keep = sp.keep_lp.reshape((-1,) + (1,) * (w.ndim - 1))
    lp_part = np.where(keep, w, 0)
    hp_part = np.where(keep, 0, w)
    return apply_circulant(fb.syn_lp_row, lp_part) + apply_circulant(fb.syn_hp_row, hp_part)


def halfband_residual(fb: FilterBank, n: int | None = None) -> float:
    """``max |P(z) + P(-z) - 2|`` over the ``n``-th roots of unity."""
    n = n or fb.n
    z = np.exp(2j * np.pi * np.arange(n) / n)
    p = fb.lp_row(z) * fb.hp_row(-z)
    p_mod = fb.lp_row(-z) * fb.hp_row(z)
    return float(np.max(np.abs(p + p_mod - 2)))


def pr_residual(fb: FilterBank, n: int | None = None) -> float:
    """Largest violation of the two biorthogonality relations at roots of unity."""
    n = n or fb.n
    z = np.exp(2j * np.pi * np.arange(n) / n)
    hl, hh = fb.lp_row, fb.hp_row
    sl, sh = fb.syn_lp_row, fb.syn_hp_row
    direct = sl(z) * hl(z) + sh(z) * hh(z) - 2
    alias = sl(z) * hl(-z) - sh(z) * hh(-z)
    return float(max(np.max(np.abs(direct)), np.max(np.abs(alias))))
