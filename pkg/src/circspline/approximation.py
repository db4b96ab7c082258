"""Circulant approximation of arbitrary graphs.

Tools that bring a general weighted graph into the circulant setting:
relabel nodes to concentrate edges near the diagonal, project the adjacency
onto the circulant subspace, approximate it by a Kronecker product of two
circulants, and split it into more homogeneous parts first. Also builds
pixel graphs from images.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .circulant import CirculantGraph

__all__ = [
    "DenseGraph",
    "Relabelling",
    "bandwidth",
    "circulant_projection",
    "nearest_circulant",
    "rcm_relabel",
    "sort_relabel",
    "total_variation",
    "nearest_kron_circulant",
    "KronApproximation",
    "fiedler_bipartition",
    "image_graph",
    "read_pgm",
    "read_matrix_csv",
    "partition_and_approximate",
]

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseGraph:
    """Weighted undirected graph given by a dense adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        scale = max(1.0, np.max(np.abs(a), initial=0.0))
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("adjacency is not symmetric")
        if np.any(np.abs(np.diag(a)) > SYMMETRY_TOL * scale):
            raise ValueError("adjacency has self-loops")
        if np.any(a < -SYMMETRY_TOL * scale):
            raise ValueError("adjacency has negative weights")
        a = (a + a.T) / 2
        np.fill_diagonal(a, 0.0)
        a[a < 0] = 0.0
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_laplacian(cls, lap: np.ndarray) -> "DenseGraph":
        a = -np.asarray(lap, dtype=float).copy()
        np.fill_diagonal(a, 0.0)
        # Schur complements can leave roundoff-level negative weights
        a[np.abs(a) < 1e-13 * max(1.0, np.max(np.abs(a), initial=0.0))] = 0.0
        return cls(a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self.adjacency

    def permuted(self, perm) -> "DenseGraph":
        perm = np.asarray(perm)
        return DenseGraph(self.adjacency[np.ix_(perm, perm)])

    def components(self) -> list[np.ndarray]:
        n = self.n
        seen = np.zeros(n, dtype=bool)
        out = []
        for start in range(n):
            if seen[start]:
                continue
            comp = []
            queue = deque([start])
            seen[start] = True
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in np.flatnonzero(self.adjacency[u]):
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            out.append(np.array(sorted(comp)))
        return out


@dataclass(frozen=True, eq=False)
class Relabelling:
    """Node ``perm[i]`` of the original graph becomes node ``i``."""

    perm: np.ndarray
    method: str = "identity"

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=int)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("relabelling is not a permutation")
        if self.method not in ("rcm", "sort", "identity"):
            raise ValueError(f"unknown relabelling method {self.method!r}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, n: int) -> "Relabelling":
        return cls(np.arange(n), "identity")

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return inv

    def apply_signal(self, x):
        return np.asarray(x)[self.perm]

    def restore_signal(self, y):
        return np.asarray(y)[self.inverse]


def _adjacency(a) -> np.ndarray:
    return a.adjacency if isinstance(a, DenseGraph) else np.asarray(a, dtype=float)


def bandwidth(a) -> int:
    """Largest ``|i - j|`` over nonzero entries."""
    i, j = np.nonzero(_adjacency(a))
    return int(np.max(np.abs(i - j), initial=0))


def circulant_projection(a) -> np.ndarray:
    """First row of the Frobenius-nearest circulant matrix (unclamped).

    Entry ``s`` is the mean of the wrapped diagonal ``A[i, (i+s) mod N]``.
    """
    a = _adjacency(a)
    n = a.shape[0]
    i = np.arange(n)
    return np.array([a[i, (i + s) % n].mean() for s in range(n)])


def nearest_circulant(a, relabel: Relabelling | None = None, drop_tol: float = 0.0) -> CirculantGraph:
    """Circulant graph whose adjacency is nearest to ``P A P^T``.

    The wrapped-diagonal means for ``s`` and ``N - s`` are averaged (for a
    symmetric input they coincide). Negative means are clamped to zero with a
    warning, and generators with weight ``<= drop_tol`` are dropped.
    """
    adj = _adjacency(a)
    scale = max(1.0, np.max(np.abs(adj), initial=0.0))
    if np.max(np.abs(adj - adj.T), initial=0.0) > 1e-10 * scale:
        raise ValueError("input adjacency is not symmetric")
    if relabel is not None:
        adj = adj[np.ix_(relabel.perm, relabel.perm)]
    n = adj.shape[0]
    row = circulant_projection(adj)
    row = (row + np.roll(row[::-1], 1)) / 2
    gens = []
    negative = []
    for s in range(1, n // 2 + 1):
        w = row[s]
        if w < 0:
            negative.append(s)
            continue
        if w > drop_tol:
            gens.append((s, float(w)))
    if negative:
        warnings.warn(f"negative circulant weights clamped to 0 at s={negative}", RuntimeWarning, stacklevel=2)
    if not gens:
        raise ValueError("projection has no positive generator weights")
    return CirculantGraph(n, tuple(gens))


def rcm_relabel(a) -> Relabelling:
    """Reverse Cuthill-McKee ordering.

    Each component starts from its minimum-degree node (lowest index on
    ties); neighbours are queued by ascending degree, then index. If the
    result would widen the bandwidth, the identity labelling is returned.
    """
    adj = _adjacency(a)
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[u]) for u in range(n)]
    deg = np.array([v.size for v in nbrs])
    seen = np.zeros(n, dtype=bool)
    order = []
    while len(order) < n:
        rest = np.flatnonzero(~seen)
        start = rest[np.argmin(deg[rest])]
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            cand = [v for v in nbrs[u] if not seen[v]]
            cand.sort(key=lambda v: (deg[v], v))
            for v in cand:
                seen[v] = True
                queue.append(v)
    perm = np.array(order[::-1])
    if bandwidth(adj[np.ix_(perm, perm)]) > bandwidth(adj):
        return Relabelling.identity(n)
    return Relabelling(perm, "rcm")


def sort_relabel(x) -> Relabelling:
    """Order nodes by ascending signal value (stable, so ties keep index order)."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if np.any(x.imag != 0):
            raise ValueError("sort relabelling needs a real signal")
        x = x.real
    return Relabelling(np.argsort(x, kind="stable"), "sort")


def total_variation(x) -> float:
    return float(np.sum(np.abs(np.diff(np.asarray(x)))))


# ------------------------------------------------------- Kronecker factors


def _circulant_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns, vectorized row-major) of symmetric zero-diagonal circulants."""
    i = np.arange(n)
    cols = []
    for s in range(1, n // 2 + 1):
        m = np.zeros((n, n))
        m[i, (i + s) % n] = 1
        m[i, (i - s) % n] = 1
        cols.append(m.ravel() / np.linalg.norm(m))
    return np.array(cols).T if cols else np.zeros((n * n, 0))


def _rearrange(a: np.ndarray, n1: int, n2: int) -> np.ndarray:
    """Van Loan rearrangement: row ``(i1, j1)`` holds block ``A[i1, j1]`` vectorized."""
    return a.reshape(n1, n2, n1, n2).transpose(0, 2, 1, 3).reshape(n1 * n1, n2 * n2)


def _to_graph(n: int, coeffs: np.ndarray) -> CirculantGraph | None:
    basis = _circulant_basis(n)
    row = (basis @ coeffs).reshape(n, n)[0]
    gens = tuple((s, float(row[s])) for s in range(1, n // 2 + 1) if row[s] > 1e-12 * max(1.0, np.abs(row).max()))
    return CirculantGraph(n, gens) if gens else None


@dataclass
class KronApproximation:
    g1: CirculantGraph | None
    g2: CirculantGraph | None
    residual: float
    a1: np.ndarray
    a2: np.ndarray
    history: list

    def __iter__(self):
        return iter((self.g1, self.g2, self.residual))


def nearest_kron_circulant(a, n1: int, n2: int, max_iter: int = 100, tol: float = 1e-10) -> KronApproximation:
    """Approximate ``A`` by ``A1 (x) A2`` with symmetric circulant factors.

    In the rearranged picture ``||A - A1 (x) A2||_F = ||R - vec(A1) vec(A2)^T||_F``
    and both factors are restricted to circulant subspaces with orthonormal
    bases ``Q1, Q2``. Alternating least squares starts from the projected
    dominant singular pair of ``R``; each half-step is a closed-form
    projection, so the residual never increases.
    """
    adj = _adjacency(a)
    n = adj.shape[0]
    if n1 * n2 != n or n1 < 2 or n2 < 2:
        raise ValueError(f"cannot factor {n} nodes as {n1} x {n2}")
    r = _rearrange(adj, n1, n2)
    q1, q2 = _circulant_basis(n1), _circulant_basis(n2)
    u, _, vt = np.linalg.svd(r, full_matrices=False)
    x = q1.T @ u[:, 0]
    y = q2.T @ vt[0]
    if not np.any(x) or not np.any(y):
        x = np.ones(q1.shape[1])
        y = np.ones(q2.shape[1])
    rn = np.linalg.norm(r)

    def resid(x, y):
        # ||R||^2 - 2 <R, Q1 x y^T Q2^T> + |x|^2 |y|^2, clipped at 0
        inner = x @ (q1.T @ r @ q2) @ y
        val = rn**2 - 2 * inner + (x @ x) * (y @ y)
        return float(np.sqrt(max(val, 0.0)))

    rq = q1.T @ r @ q2  # coefficients of R in the circulant bases
    history = [resid(x, y)]
    for _ in range(max_iter):
        x = rq @ y / (y @ y)
        y = rq.T @ x / (x @ x)
        history.append(resid(x, y))
        if history[-2] - history[-1] < tol:
            break
    # equal Frobenius norms, nonnegative leading weight
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx > 0 and ny > 0:
        s = np.sqrt(ny / nx)
        x, y = x * s, y / s
    lead = x[np.flatnonzero(np.abs(x) > 1e-12 * np.abs(x).max())[0]] if np.any(x) else 1.0
    if lead < 0:
        x, y = -x, -y
    a1 = (q1 @ x).reshape(n1, n1)
    a2 = (q2 @ y).reshape(n2, n2)
    direct = float(np.linalg.norm(adj - np.kron(a1, a2)))
    return KronApproximation(_to_graph(n1, x), _to_graph(n2, y), direct, a1, a2, history)


# ------------------------------------------------------------ partitioning


def fiedler_bipartition(a) -> tuple[np.ndarray, np.ndarray, bool]:
    """Split by the sign of the normalized-Laplacian Fiedler vector.

    Returns:
        The two index sets and a flag set when the second eigenvalue is
        repeated, in which case any vector of the eigenspace (and hence the
        split) is arbitrary.
    """
    adj = _adjacency(a)
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    if np.any(deg <= 0) or len(DenseGraph(adj).components()) > 1:
        raise ValueError("Fiedler bipartition needs a connected graph")
    dinv = 1 / np.sqrt(deg)
    lap = np.eye(n) - dinv[:, None] * adj * dinv[None, :]
    vals, vecs = scipy.linalg.eigh(lap)
    degenerate = n > 2 and abs(vals[2] - vals[1]) <= 1e-9 * max(1.0, abs(vals[1]))
    f = vecs[:, 1] * dinv
    # fix the eigenvector sign so the output is deterministic
    big = np.argmax(np.abs(f))
    if f[big] < 0:
        f = -f
    eps = 1e-12 * np.max(np.abs(f))
    pos = list(np.flatnonzero(f > eps))
    neg = list(np.flatnonzero(f < -eps))
    for i in np.flatnonzero(np.abs(f) <= eps):
        (pos if len(pos) < len(neg) else neg).append(i)
    return np.array(sorted(pos)), np.array(sorted(neg)), bool(degenerate)


# ----------------------------------------------------------------- images


def image_graph(
    intensities,
    grid: tuple[int, int],
    sigma_p: float = 1.0,
    sigma_i: float | None = None,
    mode: str = "bilateral",
    threshold: float | None = None,
) -> DenseGraph:
    """Pixel graph with bilateral weights.

    ``w_ij = exp(-|p_i - p_j|^2 / sigma_p^2) exp(-|I_i - I_j|^2 / sigma_i^2)``.

    Args:
        intensities: pixel values, row-major.
        grid: ``(h, w)``.
        sigma_p: spatial scale.
        sigma_i: intensity scale; defaults to 10% of the intensity range.
        mode: ``"bilateral"`` keeps pairs at spatial distance at most
            ``sqrt(2)``; ``"intensity-only"`` drops the spatial factor and
            keeps pairs whose intensity difference is at most ``threshold``.
        threshold: intensity threshold, required for ``"intensity-only"``.
    """
    vals = np.asarray(intensities, dtype=float).ravel()
    h, w = grid
    if h * w != vals.size:
        raise ValueError(f"grid {h}x{w} does not match {vals.size} intensities")
    if sigma_i is None:
        rng = np.ptp(vals)
        sigma_i = 0.1 * rng if rng > 0 else 1.0
    diff = vals[:, None] - vals[None, :]
    w_int = np.exp(-(diff**2) / sigma_i**2)
    if mode == "bilateral":
        yy, xx = np.divmod(np.arange(h * w), w)
        d2 = (yy[:, None] - yy[None, :]) ** 2 + (xx[:, None] - xx[None, :]) ** 2
        adj = np.where(d2 <= 2, np.exp(-d2 / sigma_p**2) * w_int, 0.0)
    elif mode == "intensity-only":
        if threshold is None:
            raise ValueError("intensity-only mode needs a threshold")
        adj = np.where(np.abs(diff) <= threshold, w_int, 0.0)
    else:
        raise ValueError(f"unknown image graph mode {mode!r}")
    np.fill_diagonal(adj, 0.0)
    return DenseGraph(adj)


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary (P5) or ASCII (P2) PGM image."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError("only 8-bit PGM images are supported")
    if magic == b"P5":
        pix = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
    elif magic == b"P2":
        pix = np.array(data[pos:].split()[: w * h], dtype=int)
    else:
        raise ValueError(f"not a PGM file (magic {magic!r})")
    if pix.size != w * h:
        raise ValueError("truncated PGM data")
    return pix.reshape(h, w).astype(float)


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def partition_and_approximate(a, depth: int = 1, relabel: str = "rcm"):
    """Recursively bipartition, then fit a circulant to each part.

    Returns a list of ``(node indices, Relabelling, CirculantGraph)``.
    """
    adj = _adjacency(a)
    parts = [np.arange(adj.shape[0])]
    for _ in range(depth):
        nxt = []
        for idx in parts:
            sub = DenseGraph(adj[np.ix_(idx, idx)])
            if sub.n < 4 or len(sub.components()) > 1:
                nxt.append(idx)
                continue
            p, q, _ = fiedler_bipartition(sub)
            nxt.extend([idx[p], idx[q]])
        parts = nxt
    out = []
    for idx in parts:
        sub = DenseGraph(adj[np.ix_(idx, idx)])
        lab = rcm_relabel(sub) if relabel == "rcm" else Relabelling.identity(sub.n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out.append((idx, lab, nearest_circulant(sub, lab)))
    return out
