"""End-to-end acceptance checks, one test per criterion.

Each test is tagged with ``@pytest.mark.criterion``; ``conftest.py`` prints a
single PASS/FAIL line per criterion at the end of the run.
"""

import itertools
import time
import warnings

import numpy as np
import pytest

from circspline.approximation import (
    bandwidth,
    circulant_projection,
    nearest_circulant,
    nearest_kron_circulant,
    rcm_relabel,
)
from circspline.circulant import ExponentParam, SymLaurentPoly, apply_circulant, make_circulant, root_multiplicity
from circspline.complementary import InfeasibleFactorizationError, halfband_residual, hcgeswt, hcgswt, pr_residual
from circspline.filterbank import (
    SamplingPattern,
    SingularFilterBankError,
    analysis_matrix,
    analyze,
    bank_from_betas,
    check_invertibility,
    hgeswt,
    hgswt,
    invert,
    strang_fix_multiplicity,
)
from circspline.multiscale import PyramidTransform, bank_builder, nla
from circspline.products import (
    KINDS,
    ProductGraph,
    example1_counts,
    laplacian_action_identity,
    lexicographic_circulant,
    product_adjacency,
    product_laplacian,
    smoothness_identity,
)

SIZES = (8, 16, 32)
GENERATOR_SETS = ((1,), (1, 2), (1, 3), (1, 2, 3))
POWERS = (1, 2, 3)


def suite():
    for n in SIZES:
        for gens in GENERATOR_SETS:
            for k in POWERS:
                yield make_circulant(n, gens), k


def random_patterns(rng, g, count=20):
    """Random patterns with at least one low-pass node.

    Bipartite graphs additionally need one high-pass node: the all-low-pass
    pattern loses the alternating eigenvector there.
    """
    out = []
    while len(out) < count:
        keep = rng.random(g.n) < 0.5
        if not keep.any() or (g.bipartite and keep.all()):
            continue
        out.append(SamplingPattern(keep))
    return out


def interior(g, k):
    m = g.bandwidth
    return np.arange(k * m, g.n - k * m)


def numeric_invertible(fb, sp):
    sv = np.linalg.svd(analysis_matrix(fb, sp), compute_uv=False)
    return sv[-1] > 1e-10 * sv[0]


# ---------------------------------------------------------------- 1


@pytest.mark.criterion(1, "perfect reconstruction on random patterns")
def test_perfect_reconstruction(record_property):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, cases = 0.0, 0
    for g, k in suite():
        fb = hgswt(g, k)
        for sp in random_patterns(rng, g):
            x = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
            y = invert(fb, sp, analyze(fb, sp, x))
            worst = max(worst, np.linalg.norm(y - x) / np.linalg.norm(x))
            cases += 1
    elapsed = time.perf_counter() - start
    record_property("detail", f"{cases} cases, worst rel err {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-8
    assert elapsed < 30


# ---------------------------------------------------------------- 2


@pytest.mark.criterion(2, "vanishing moments on degree-(2k-1) polynomials")
def test_vanishing_moments(record_property):
    rng = np.random.default_rng(7)
    worst, checked = 0.0, 0
    for g, k in suite():
        fb = hgswt(g, k)
        coeffs = rng.standard_normal(2 * k)
        # polynomials in t/N keep the signal O(1) for every degree
        x = np.polynomial.polynomial.polyval(np.arange(g.n) / g.n, coeffs)
        inner = interior(g, k)
        full_hp = analyze(fb, SamplingPattern(np.zeros(g.n, bool)), x)
        worst = max(worst, np.max(np.abs(full_hp[inner]), initial=0.0))
        checked += inner.size
        for sp in random_patterns(rng, g):
            w = analyze(fb, sp, x)
            nodes = np.intersect1d(sp.hp_nodes, inner)
            worst = max(worst, np.max(np.abs(w[nodes]), initial=0.0))
            checked += nodes.size
    record_property("detail", f"{checked} interior high-pass values, max {worst:.2e}")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 3


@pytest.mark.criterion(3, "exponential annihilation by e-spline high-pass")
def test_exponential_annihilation(record_property):
    worst_grid = worst_off = worst_poly = 0.0
    t_all = {n: np.arange(n) for n in SIZES}
    with warnings.catch_warnings():
        # on-grid parameters may hit e-degree 0, which is flagged but still valid
        warnings.simplefilter("ignore")
        for g, k in suite():
            t = t_all[g.n]
            all_hp = SamplingPattern(np.zeros(g.n, bool))
            inner = interior(g, k)
            for j in (1, 3):
                a = 2 * np.pi * j / g.n
                hp = analyze(hgeswt(g, [ExponentParam(a)], k), all_hp, np.exp(1j * a * t))
                worst_grid = max(worst_grid, np.max(np.abs(hp)))
            for a in (0.3, 1.1):
                fb = hgeswt(g, [ExponentParam(a)], k)
                hp = analyze(fb, all_hp, np.exp(1j * a * t))
                worst_off = max(worst_off, np.max(np.abs(hp[inner]), initial=0.0))
                poly = np.polynomial.polynomial.polyval(t / g.n, np.arange(1, k + 1) / k)
                hp = analyze(fb, all_hp, poly * np.exp(1j * a * t))
                worst_poly = max(worst_poly, np.max(np.abs(hp[inner]), initial=0.0))
            # two exponents at once
            a1, a2 = 2 * np.pi / g.n, 0.7
            fb = hgeswt(g, [ExponentParam(a1), ExponentParam(a2)], k)
            x = np.exp(1j * a1 * t) + 2 * np.exp(-1j * a2 * t)
            hp = analyze(fb, all_hp, x)
            # the border grows with the support of the two-factor filter
            hs = fb.hp_row.halfsupport
            worst_off = max(worst_off, np.max(np.abs(hp[hs : g.n - hs]), initial=0.0))
    record_property("detail", f"on-grid all nodes {worst_grid:.1e}, off-grid {worst_off:.1e}, poly-exp {worst_poly:.1e}")
    assert worst_grid <= 1e-9
    assert worst_off <= 1e-9
    assert worst_poly <= 1e-9


# ---------------------------------------------------------------- 4


def _connected_graphs(n):
    for r in range(1, n // 2 + 1):
        for gens in itertools.combinations(range(1, n // 2 + 1), r):
            g = make_circulant(n, gens)
            if g.connected:
                yield g


def _critical_betas(g):
    gamma = np.unique(np.round(g.normalized_spectrum(), 12))
    return sorted({1.0, 0.0, 0.45, float(gamma[0]), float(-gamma[0]), float(gamma[len(gamma) // 2])})


@pytest.mark.criterion(4, "analytic invertibility check agrees with dense rank")
def test_invertibility_oracle(record_property):
    mismatches, cases = 0, 0
    for n in range(3, 9):
        patterns = [
            SamplingPattern(np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)) for bits in range(1, 2**n)
        ]
        for g in _connected_graphs(n):
            for beta in _critical_betas(g):
                for k in (1, 2):
                    fb = bank_from_betas(g, [beta], k)
                    for sp in patterns:
                        cases += 1
                        mismatches += check_invertibility(fb, sp).invertible != numeric_invertible(fb, sp)
    rng = np.random.default_rng(11)
    for n in range(9, 13):
        graphs = list(_connected_graphs(n))
        for _ in range(200):
            g = graphs[rng.integers(len(graphs))]
            betas = _critical_betas(g)
            fb = bank_from_betas(g, [betas[rng.integers(len(betas))]], int(rng.integers(1, 3)))
            keep = rng.random(n) < 0.5
            keep[rng.integers(n)] = True
            sp = SamplingPattern(keep)
            cases += 1
            mismatches += check_invertibility(fb, sp).invertible != numeric_invertible(fb, sp)

    complete = make_circulant(4, [1, 2])
    alt = SamplingPattern.alternating(4)
    assert check_invertibility(bank_from_betas(complete, [1.0]), alt).invertible
    assert not check_invertibility(bank_from_betas(complete, [-1 / complete.degree]), alt).invertible
    cycle = make_circulant(8, [1])
    zero = bank_from_betas(cycle, [0.0])
    assert not check_invertibility(zero, SamplingPattern.alternating(8)).invertible
    with pytest.raises(SingularFilterBankError):
        invert(zero, SamplingPattern.alternating(8), np.ones(8))
    record_property("detail", f"{cases} cases, {mismatches} mismatches")
    assert mismatches == 0


# ---------------------------------------------------------------- 5


STRANG_FIX_CASES = [
    # (n, generators, k, alpha or None, bipartite)
    (16, (1,), 1, None, True),
    (16, (1,), 2, None, True),
    (16, (1, 3), 1, None, True),
    (16, (1, 3), 2, None, True),
    (32, (1, 3, 5), 1, None, True),
    (16, (3, 5), 2, None, True),
    (16, (1,), 1, 0.4, True),
    (16, (1, 3), 2, 0.3, True),
    (16, (1, 2), 1, None, False),
    (16, (1, 2), 2, None, False),
    (16, (1, 2, 3), 1, None, False),
    (16, (1, 2), 2, 0.4, False),
]


@pytest.mark.criterion(5, "Strang-Fix multiplicities on bipartite and non-bipartite graphs")
def test_strang_fix(record_property):
    seen = []
    for n, gens, k, alpha, bip in STRANG_FIX_CASES:
        g = make_circulant(n, gens)
        assert g.bipartite == bip
        fb = hgswt(g, k) if alpha is None else hgeswt(g, [ExponentParam(alpha)], k)
        mult = [m for _, m in strang_fix_multiplicity(fb)]
        seen.append(tuple(mult))
        if not bip:
            assert all(m == 0 for m in mult)
        elif alpha is None:
            assert mult[0] >= 2 * k
        else:
            # -e^{+i alpha} and -e^{-i alpha} are distinct roots sharing the 2k zeros
            assert all(m >= k for m in mult) and sum(mult) >= 2 * k
    record_property("detail", f"{len(STRANG_FIX_CASES)} combinations, multiplicities {seen}")


# ---------------------------------------------------------------- 6


@pytest.mark.criterion(6, "spectral factorization: CDF 5/3, half-band and PR residuals")
def test_spectral_factorization(record_property):
    fb = hcgswt(make_circulant(16, [1]), 1, dual_moments=True)
    taps = np.concatenate([fb.lp_row.coeffs[:0:-1], fb.lp_row.coeffs])
    cdf = np.array([-1, 2, 6, 2, -1]) / 8
    dev = np.max(np.abs(taps / taps.sum() - cdf / cdf.sum()))
    assert dev <= 1e-10

    worst_hb = worst_pr = 0.0
    built = 0
    for n in (16, 32):
        for gens in GENERATOR_SETS:
            g = make_circulant(n, gens)
            for k in (1, 2):
                for dual in (False, True):
                    banks = [hcgswt(g, k, dual)]
                    banks.append(hcgeswt(g, [ExponentParam(0.39)], k, dual))
                    if k == 1:
                        banks.append(hcgeswt(g, [ExponentParam(0.2), ExponentParam(0.6)], k, dual))
                        banks.append(hcgeswt(g, [ExponentParam(0.3, "hyperbolic")], k, dual))
                    for b in banks:
                        worst_hb = max(worst_hb, halfband_residual(b))
                        worst_pr = max(worst_pr, pr_residual(b))
                        built += 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(InfeasibleFactorizationError):
            hcgeswt(make_circulant(16, [1]), [ExponentParam(np.pi / 2)], 1)
    record_property("detail", f"CDF dev {dev:.1e}; {built} banks, half-band {worst_hb:.1e}, PR {worst_pr:.1e}")
    assert worst_hb <= 1e-10
    assert worst_pr <= 1e-8


# ---------------------------------------------------------------- 7


def edge_rule_adjacency(kind, g1, g2):
    """Entry ((a,b),(c,d)) of each product read directly off its edge rule."""
    a1, a2 = g1.adjacency(), g2.adjacency()
    i1, i2 = np.eye(g1.n), np.eye(g2.n)
    if kind == "kronecker":
        t = np.einsum("ac,bd->abcd", a1, a2)
    elif kind == "cartesian":
        t = np.einsum("ac,bd->abcd", a1, i2) + np.einsum("ac,bd->abcd", i1, a2)
    elif kind == "strong":
        t = np.einsum("ac,bd->abcd", a1, a2) + np.einsum("ac,bd->abcd", a1, i2) + np.einsum("ac,bd->abcd", i1, a2)
    else:
        t = np.einsum("ac,bd->abcd", a1, np.ones_like(a2)) + np.einsum("ac,bd->abcd", i1, a2)
    n = g1.n * g2.n
    return t.reshape(n, n)


def random_factor(rng, lo=3, hi=8, integer=False):
    n = int(rng.integers(lo, hi))
    gens = sorted(set(rng.integers(1, n // 2 + 1, size=int(rng.integers(1, 3))).tolist()))
    weights = rng.integers(1, 4, size=len(gens)) if integer else rng.uniform(0.2, 2.0, size=len(gens))
    return make_circulant(n, list(zip(gens, weights.astype(float))))


@pytest.mark.criterion(7, "product formulas, lexicographic isomorphism, identities, zero counts")
def test_product_identities(record_property):
    rng = np.random.default_rng(99)
    trials = 100
    worst = 0.0
    for kind in KINDS:
        for _ in range(trials):
            g1, g2 = random_factor(rng), random_factor(rng)
            pg = ProductGraph(kind, g1, g2)
            a = edge_rule_adjacency(kind, g1, g2)
            lap = np.diag(a.sum(axis=1)) - a
            worst = max(worst, np.max(np.abs(product_adjacency(pg).dense() - a)))
            worst = max(worst, np.max(np.abs(product_laplacian(pg).dense() - lap)))
            worst = max(worst, np.max(np.abs(a.sum(axis=1) - pg.degree)))
            x1 = rng.standard_normal(g1.n) + 1j * rng.standard_normal(g1.n)
            x2 = rng.standard_normal(g2.n) + 1j * rng.standard_normal(g2.n)
            x = np.kron(x1, x2)
            direct = np.vdot(x, lap @ x).real
            _, predicted, _ = smoothness_identity(kind, g1, g2, x1, x2)
            worst = max(worst, abs(direct - predicted) / max(1.0, abs(direct)))
            worst = max(worst, laplacian_action_identity(kind, g1, g2, x1, x2))
            p1, p2 = ExponentParam(rng.uniform(0, np.pi)), ExponentParam(rng.uniform(0, np.pi))
            worst = max(worst, laplacian_action_identity(kind, g1, g2, x1, x2, p1, p2))
    iso_fail = 0
    for _ in range(trials):
        g1 = random_factor(rng, 3, 9, integer=True)
        g1 = make_circulant(g1.n, [(1, 1.0)] + [(s, w) for s, w in g1.gens if s != 1])
        g2 = random_factor(rng, 2, 6, integer=True)
        circ, perm = lexicographic_circulant(g1, g2)
        a = edge_rule_adjacency("lexicographic", g1, g2)
        iso_fail += not np.array_equal(a[np.ix_(perm, perm)], circ.adjacency())
    counts = [example1_counts(16, 16, 1, 1), example1_counts(16, 16, 2, 2)]
    record_property("detail", f"{4 * trials} product trials, max residual {worst:.1e}; iso failures {iso_fail}; counts {counts}")
    assert worst <= 1e-9
    assert iso_fail == 0
    for c in counts:
        for key in ("sep", "kron1", "kron2"):
            assert c[key] == c[f"{key}_empirical"]


# ---------------------------------------------------------------- 8


@pytest.mark.criterion(8, "circulant projection, Kronecker ALS and RCM")
def test_approximation(record_property):
    rng = np.random.default_rng(5)
    worst_orth = worst_idem = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 20))
        a = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        a = np.triu(a, 1)
        a = a + a.T
        row = circulant_projection(a)
        c = np.array([np.roll(row, i) for i in range(n)])
        for s in range(n):
            shift = np.roll(np.eye(n), s, axis=1)
            worst_orth = max(worst_orth, abs(np.sum((a - c) * shift)))
        worst_idem = max(worst_idem, np.max(np.abs(circulant_projection(c) - row)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if np.any(row[1:] > 0):
                once = nearest_circulant(a).adjacency()
                twice = nearest_circulant(once).adjacency()
                worst_idem = max(worst_idem, np.max(np.abs(twice - once)))

    worst_kron = 0.0
    for _ in range(20):
        g1, g2 = random_factor(rng), random_factor(rng)
        res = nearest_kron_circulant(np.kron(g1.adjacency(), g2.adjacency()), g1.n, g2.n)
        worst_kron = max(worst_kron, res.residual)

    reduced = 0
    seeds = range(50)
    for seed in seeds:
        r = np.random.default_rng(seed)
        a = np.triu((r.random((64, 64)) < 0.1).astype(float), 1)
        a = a + a.T
        lab = rcm_relabel(a)
        reduced += bandwidth(a[np.ix_(lab.perm, lab.perm)]) < bandwidth(a)
    frac = reduced / len(seeds)
    record_property(
        "detail",
        f"orthogonality {worst_orth:.1e}, idempotence {worst_idem:.1e}, Kron residual {worst_kron:.1e}, RCM reduced {frac:.0%}",
    )
    assert worst_orth <= 1e-10 and worst_idem <= 1e-10
    assert worst_kron <= 1e-9
    assert frac >= 0.9


# ---------------------------------------------------------------- 9


@pytest.mark.criterion(9, "two-sinusoid non-linear approximation (N=256, 5 levels)")
def test_two_sinusoid_nla(record_property):
    start = time.perf_counter()
    n = 256
    g = make_circulant(n, [1, 2])
    a1, a2 = 2 * np.pi / n, 2 * np.pi * 5 / n
    t = np.arange(n)
    x = np.cos(a1 * t) + np.cos(a2 * t)
    alphas = [ExponentParam(a1), ExponentParam(a2)]
    ks = list(range(0, n + 1, 2))

    def first_k(kind, dual=False):
        tr = PyramidTransform(g, bank_builder(kind, 1, alphas, dual), "preserve-set", 5)
        res = nla(x, tr, ks)
        hit = [k for k, s in res.curve if s >= 100]
        return hit[0] if hit else None

    matched = first_k("hgeswt")
    comp = [first_k("hcgeswt", False), first_k("hcgeswt", True)]
    elapsed = time.perf_counter() - start
    record_property("detail", f"100 dB reached at K={matched} (hgeswt), K={comp} (hcgeswt), {elapsed:.1f} s")
    assert matched is not None and matched <= 0.10 * n
    assert all(k is not None and k <= 0.15 * n for k in comp)
    assert elapsed < 60


# ---------------------------------------------------------------- 10


@pytest.mark.criterion(10, "FFT application agrees with dense product and is faster at N >= 4096")
def test_apply_performance(record_property):
    rng = np.random.default_rng(0)
    details = []
    for n in (4096, 8192):
        row = SymLaurentPoly(np.r_[1.0, rng.uniform(-0.2, 0.2, size=5)])
        dense = row.dense(n)
        x = rng.standard_normal(n)
        ref = dense @ x
        err = np.linalg.norm(apply_circulant(row, x) - ref) / np.linalg.norm(ref)
        assert err <= 1e-12

        def best(f, reps=7):
            times = []
            for _ in range(reps):
                t0 = time.perf_counter()
                f()
                times.append(time.perf_counter() - t0)
            return min(times)

        t_fft = best(lambda: apply_circulant(row, x))
        t_dense = best(lambda: dense @ x)
        details.append(f"N={n}: err {err:.1e}, fft {t_fft * 1e3:.2f} ms vs dense {t_dense * 1e3:.2f} ms")
        assert t_fft < t_dense
    record_property("detail", "; ".join(details))


def test_multiplicity_helper_sanity():
    # guards the helper used by criterion 5
    assert root_multiplicity(SymLaurentPoly([2, 1]) ** 3, -1) == 6
