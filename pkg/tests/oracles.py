"""Independent reference implementations used to freeze expected values.

Everything here is deliberately brute-force and kept separate from the
library code paths it checks: exact rational arithmetic for the
combinatorial tests, numeric quadrature for distribution tails, and
exhaustive search for trees and stumps.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import integrate

TIE = Fraction(1, 10**7)  # relative tie tolerance mirrored by the library


def fisher_p_enumerate(a: int, b: int, c: int, d: int) -> Fraction:
    """Two-sided Fisher p as an exact rational, by enumerating every table
    with the observed margins."""
    r1, r2, c1 = a + b, c + d, a + c
    n = r1 + r2
    den = math.comb(n, c1)

    def pmf(x: int) -> Fraction:
        return Fraction(math.comb(r1, x) * math.comb(r2, c1 - x), den)

    lo, hi = max(0, c1 - r2), min(r1, c1)
    cut = pmf(a) * (1 + TIE)
    return sum((pmf(x) for x in range(lo, hi + 1) if pmf(x) <= cut), Fraction(0))


def t_tail_quad(t_abs: float, df: float) -> float:
    """P(T > t_abs) for Student's t with df dof, via quadrature of the pdf."""

    def pdf(x):
        lognorm = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
        return math.exp(lognorm - 0.5 * (df + 1) * math.log1p(x * x / df))

    val, _ = integrate.quad(pdf, t_abs, math.inf)
    return val


def welch_p_quad(x0, x1) -> float:
    """Two-sided Welch p computed from scratch with the quadrature tail."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    n0, n1 = len(x0), len(x1)
    v0, v1 = x0.var(ddof=1), x1.var(ddof=1)
    se2 = v0 / n0 + v1 / n1
    t = (x1.mean() - x0.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((v0 / n0) ** 2 / (n0 - 1) + (v1 / n1) ** 2 / (n1 - 1))
    if t == 0.0:
        return 1.0
    return min(1.0, 2.0 * t_tail_quad(abs(t), df))


def lattice_neighbors(n_rows: int, n_cols: int, r: int, c: int, j: int) -> set:
    """All (row, col) != (r, c) within Euclidean distance j on the lattice."""
    out = set()
    for rr in range(n_rows):
        for cc in range(n_cols):
            if (rr, cc) == (r, c):
                continue
            if math.hypot(rr - r, cc - c) <= j:
                out.add((rr, cc))
    return out


# ---------------------------------------------------------------------------
# exhaustive CART


def exhaustive_cart(X, y, max_depth, min_leaf):
    """Recursive exhaustive best-split tree with exact Fraction impurities.

    Returns nested dicts: leaves {'n': .., 'n1': ..}; internal nodes add
    'feature', 'threshold', 'left', 'right'. Tie rule: lowest weighted
    gini, then lowest feature index, then lowest threshold.
    """
    n = len(y)
    n1 = int(sum(y))
    node = {"n": n, "n1": n1}
    if n < 2 * min_leaf or n1 in (0, n) or max_depth == 0:
        return node
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(float(v) for v in X[:, f]))
        for lo, hi in zip(vals, vals[1:]):
            thr = (lo + hi) / 2.0
            left = [i for i in range(n) if X[i, f] <= thr]
            right = [i for i in range(n) if X[i, f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            g = _wgini(y, left) * Fraction(len(left), n) + \
                _wgini(y, right) * Fraction(len(right), n)
            cand = (g, f, thr)
            if best is None or cand < best:
                best = cand
    if best is None:
        return node
    _, f, thr = best
    left = [i for i in range(n) if X[i, f] <= thr]
    right = [i for i in range(n) if X[i, f] > thr]
    depth = None if max_depth is None else max_depth - 1
    node["feature"] = f
    node["threshold"] = thr
    node["left"] = exhaustive_cart(X[left], y[left], depth, min_leaf)
    node["right"] = exhaustive_cart(X[right], y[right], depth, min_leaf)
    return node


def _wgini(y, idx) -> Fraction:
    m = len(idx)
    ones = int(sum(int(y[i]) for i in idx))
    return 1 - Fraction(ones, m) ** 2 - Fraction(m - ones, m) ** 2


def same_tree(node, oracle) -> bool:
    """Structural equality between a library TreeNode and an oracle dict."""
    if node.n_samples != oracle["n"] or node.n_class1 != oracle["n1"]:
        return False
    if node.is_leaf != ("feature" not in oracle):
        return False
    if node.is_leaf:
        return True
    return (node.feature == oracle["feature"]
            and node.threshold == oracle["threshold"]
            and same_tree(node.left, oracle["left"])
            and same_tree(node.right, oracle["right"]))


# ---------------------------------------------------------------------------
# exhaustive decision stump (uniform weights)


def exhaustive_stump(X, y) -> tuple:
    """Best (feature, threshold, polarity) by exact misclassification count
    with uniform weights; ties to lowest feature, threshold, polarity +1."""
    n = len(y)
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(float(v) for v in X[:, f]))
        for lo, hi in zip(vals, vals[1:]):
            thr = (lo + hi) / 2.0
            gt = [int(X[i, f] > thr) for i in range(n)]
            err_gt = Fraction(sum(int(g != yy) for g, yy in zip(gt, y)), n)
            err_le = 1 - err_gt
            for rank, err in ((0, err_gt), (1, err_le)):
                cand = (err, f, thr, rank)
                if best is None or cand < best:
                    best = cand
    return (best[1], best[2], 1 if best[3] == 0 else -1)
