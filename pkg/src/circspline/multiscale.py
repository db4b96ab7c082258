"""Multilevel transforms on circulant graphs.

Each level filters with a bank built on the current graph, stores the
high-pass values of the odd nodes and passes the even-node low-pass values
to a coarsened graph on half the nodes. Coarsening either keeps the edges
the even nodes already have, re-creates the original generating set, or
takes the Kron reduction of the Laplacian.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .approximation import DenseGraph, nearest_circulant
from .circulant import CirculantGraph, ExponentParam, as_signal
from .complementary import hcgeswt, hcgswt, synthesize
from .filterbank import (
    FilterBank,
    SamplingPattern,
    SingularFilterBankError,
    analyze,
    check_invertibility,
    hgeswt,
    hgswt,
    invert,
)

__all__ = [
    "STRATEGIES",
    "default_pattern",
    "coarsen",
    "kron_reduce",
    "bank_builder",
    "PyramidLevel",
    "Pyramid",
    "PyramidTransform",
    "pyramid_analyze",
    "pyramid_synthesize",
    "NlaResult",
    "nla",
    "snr_db",
]

STRATEGIES = ("keep-existing", "preserve-set", "kron-reduce")
# Kron-reduced weights decay geometrically with distance; relative weights
# below this are dropped when re-circularizing so the next bank stays well posed.
KRON_DROP_TOL = 1e-6


def default_pattern(n: int) -> SamplingPattern:
    """Low-pass on even nodes, high-pass on odd nodes."""
    if n % 2:
        raise ValueError(f"downsampling needs an even number of nodes, got {n}")
    return SamplingPattern.alternating(n)


def kron_reduce(lap: np.ndarray, keep) -> np.ndarray:
    """Schur complement of ``lap`` onto the nodes ``keep``."""
    lap = np.asarray(lap, dtype=float)
    keep = np.asarray(keep)
    mask = np.zeros(lap.shape[0], dtype=bool)
    mask[keep] = True
    drop = np.flatnonzero(~mask)
    keep = np.flatnonzero(mask)
    l_kk = lap[np.ix_(keep, keep)]
    if drop.size == 0:
        return l_kk
    l_kd = lap[np.ix_(keep, drop)]
    l_dd = lap[np.ix_(drop, drop)]
    try:
        sol = scipy.linalg.solve(l_dd, l_kd.T, assume_a="sym")
    except scipy.linalg.LinAlgError as e:
        raise ValueError("interior block of the Kron reduction is singular") from e
    return l_kk - l_kd @ sol


def coarsen(g: CirculantGraph, strategy: str = "preserve-set", pattern: SamplingPattern | None = None):
    """Graph on the retained (low-pass) nodes.

    Args:
        g: circulant graph with an even node count and generator 1.
        strategy: ``"keep-existing"``, ``"preserve-set"`` or ``"kron-reduce"``.
        pattern: retained nodes for Kron reduction (default: even nodes).

    Returns:
        A :class:`CirculantGraph` of ``n/2`` nodes, or a :class:`DenseGraph`
        for Kron reduction.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown coarsening strategy {strategy!r}")
    if g.n % 2:
        raise ValueError(f"cannot halve a graph with {g.n} nodes")
    if 1 not in g.generators:
        raise ValueError("coarsening needs generator s=1")
    half = g.n // 2
    if strategy == "keep-existing":
        gens = {s // 2: w for s, w in g.gens if s % 2 == 0}
        gens.setdefault(1, 1.0)
        return CirculantGraph(half, tuple(gens.items()))
    if strategy == "preserve-set":
        merged: dict[int, float] = {}
        folded = []
        for s, w in g.gens:
            r = s % half
            t = min(r, half - r)
            if t != s:
                folded.append(s)
            if t == 0:
                continue
            merged[t] = merged.get(t, 0.0) + w
        if folded:
            warnings.warn(
                f"generators {folded} exceed the coarse bound and were folded", RuntimeWarning, stacklevel=2
            )
        if not merged:
            raise ValueError(f"no generators survive on {half} nodes")
        return CirculantGraph(half, tuple(merged.items()))
    keep = pattern.lp_nodes if pattern is not None else default_pattern(g.n).lp_nodes
    return DenseGraph.from_laplacian(kron_reduce(g.laplacian(), keep))


def _next_graph(g: CirculantGraph, strategy: str) -> CirculantGraph:
    c = coarsen(g, strategy)
    if isinstance(c, DenseGraph):
        c = nearest_circulant(c, drop_tol=KRON_DROP_TOL * c.adjacency.max())
    return c


def bank_builder(
    kind: str = "hgswt",
    k: int = 1,
    alphas: Sequence[ExponentParam] = (),
    dual_moments: bool = False,
) -> Callable[[CirculantGraph, int], FilterBank]:
    """Factory ``(graph, level) -> bank``; e-spline parameters double per level."""
    alphas = tuple(a if isinstance(a, ExponentParam) else ExponentParam(a) for a in alphas)
    if kind in ("hgeswt", "hcgeswt") and not alphas:
        raise ValueError(f"{kind} needs at least one exponent parameter")

    def build(g: CirculantGraph, level: int = 0) -> FilterBank:
        scaled = [a.scaled(2**level) for a in alphas]
        if kind == "hgswt":
            return hgswt(g, k)
        if kind == "hgeswt":
            return hgeswt(g, scaled, k)
        if kind == "hcgswt":
            return hcgswt(g, k, dual_moments)
        if kind == "hcgeswt":
            return hcgeswt(g, scaled, k, dual_moments)
        raise ValueError(f"unknown bank {kind!r}")

    build.kind = kind
    return build


@dataclass
class PyramidLevel:
    graph: CirculantGraph
    pattern: SamplingPattern
    bank: FilterBank
    hp_coeffs: np.ndarray


@dataclass
class Pyramid:
    levels: list
    root_lp: np.ndarray
    root_graph: CirculantGraph | None

    @property
    def n(self) -> int:
        return self.levels[0].graph.n if self.levels else self.root_graph.n

    def flatten(self) -> np.ndarray:
        """``[root_lp | hp of the coarsest level | ... | hp of level 0]``."""
        return np.concatenate([self.root_lp] + [lv.hp_coeffs for lv in reversed(self.levels)])

    def coefficient_count(self) -> int:
        return self.root_lp.shape[0] + sum(lv.hp_coeffs.shape[0] for lv in self.levels)


def _use_fir(bank: FilterBank, sp: SamplingPattern) -> bool:
    return bank.syn_lp_row is not None and sp.alternating_parity() is not None


class PyramidTransform:
    """Precomputed multilevel transform with flat coefficient layout.

    Args:
        g: finest graph; its size must be divisible by ``2**levels``.
        builder: ``(graph, level) -> FilterBank``, e.g. from :func:`bank_builder`.
        strategy: coarsening strategy.
        levels: number of decomposition levels.
        check: verify invertibility of every level bank.
    """

    def __init__(self, g: CirculantGraph, builder, strategy: str = "preserve-set", levels: int = 1, check: bool = True):
        if levels < 0 or (levels and g.n % (2**levels)):
            raise ValueError(f"{g.n} nodes cannot be halved {levels} times")
        if levels > int(math.log2(g.n)):
            raise ValueError("too many levels")
        self.strategy = strategy
        self.graphs = []
        self.banks = []
        self.patterns = []
        cur = g
        for j in range(levels):
            bank = builder(cur, j)
            sp = default_pattern(cur.n)
            if check and not _use_fir(bank, sp):
                rep = check_invertibility(bank, sp)
                if not rep.invertible:
                    raise SingularFilterBankError(
                        f"level {j} bank on {cur.n} nodes is not invertible ({rep.condition_used}: {rep.detail})"
                    )
            self.graphs.append(cur)
            self.banks.append(bank)
            self.patterns.append(sp)
            # a single remaining node carries no graph
            cur = _next_graph(cur, strategy) if cur.n > 2 else None
        self.root_graph = cur
        self.n = g.n

    @property
    def levels(self) -> int:
        return len(self.banks)

    def analyze(self, x) -> Pyramid:
        x = as_signal(x)
        if x.shape[0] != self.n:
            raise ValueError(f"signal length {x.shape[0]} does not match {self.n} nodes")
        recs = []
        cur = x
        for g, bank, sp in zip(self.graphs, self.banks, self.patterns):
            w = analyze(bank, sp, cur)
            recs.append(PyramidLevel(g, sp, bank, w[sp.hp_nodes]))
            cur = w[sp.lp_nodes]
        return Pyramid(recs, cur, self.root_graph)

    def forward(self, x) -> np.ndarray:
        return self.analyze(x).flatten()

    def unflatten(self, c) -> Pyramid:
        c = as_signal(c)
        sizes = [sp.hp_nodes.size for sp in self.patterns]
        root = self.n - sum(sizes)
        pos = root
        hp = []
        for s in reversed(sizes):
            hp.append(c[pos:pos + s])
            pos += s
        hp.reverse()
        recs = [PyramidLevel(g, sp, b, h) for g, sp, b, h in zip(self.graphs, self.patterns, self.banks, hp)]
        return Pyramid(recs, c[:root], self.root_graph)

    def inverse(self, c) -> np.ndarray:
        return pyramid_synthesize(self.unflatten(c))

    def matrix(self) -> np.ndarray:
        """Dense analysis matrix (columns are transforms of unit vectors)."""
        return self.forward(np.eye(self.n))


def pyramid_analyze(g, builder, strategy, x, levels) -> Pyramid:
    return PyramidTransform(g, builder, strategy, levels).analyze(x)


def pyramid_synthesize(p: Pyramid) -> np.ndarray:
    """Invert level by level, from the coarsest graph up."""
    cur = as_signal(p.root_lp)
    for lv in reversed(p.levels):
        sp = lv.pattern
        w = np.empty((sp.n,) + cur.shape[1:], dtype=complex)
        w[sp.lp_nodes] = cur
        w[sp.hp_nodes] = lv.hp_coeffs
        cur = synthesize(lv.bank, sp, w) if _use_fir(lv.bank, sp) else invert(lv.bank, sp, w)
    return cur


# -------------------------------------------------------------------- NLA


@dataclass
class NlaResult:
    curve: list = field(default_factory=list)

    @property
    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.curve])

    @property
    def snr(self) -> np.ndarray:
        return np.array([s for _, s in self.curve])


def snr_db(x, x_hat) -> float:
    """``10 log10(|x|^2 / |x_hat - x|^2)``; ``inf`` for exact reconstruction."""
    num = float(np.sum(np.abs(x) ** 2))
    den = float(np.sum(np.abs(np.asarray(x_hat) - x) ** 2))
    if den == 0:
        return math.inf
    if num == 0:
        return -math.inf
    return 10 * math.log10(num / den)


def nla(x, decomposition: PyramidTransform, k_list) -> NlaResult:
    """Reconstruct from the ``K`` largest normalized coefficients for each ``K``.

    Coefficients are compared after dividing by the norm of their analysis
    row (unit-length atoms); ties go to the lower flat index.
    """
    x = as_signal(x)
    c = decomposition.forward(x)
    norms = np.linalg.norm(decomposition.matrix(), axis=1)
    mag = np.abs(c) / norms
    order = np.lexsort((np.arange(c.size), -mag))
    out = []
    for k in k_list:
        k = int(k)
        if k <= 0:
            out.append((k, snr_db(x, np.zeros_like(x))))
            continue
        kept = np.zeros_like(c)
        idx = order[:k]
        kept[idx] = c[idx]
        out.append((k, snr_db(x, decomposition.inverse(kept))))
    return NlaResult(out)
