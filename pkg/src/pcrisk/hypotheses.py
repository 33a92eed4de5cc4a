"""Decision-tree learning and multivariate hypothesis extraction.

A greedy binary CART (gini criterion, midpoint thresholds, deterministic
tie rule: lowest feature index then lowest threshold) is grown on the
120-feature rows. Root-to-leaf paths with enough support and class-1
purity become hypothesis predicates: conjunctions of (feature, <=/>,
threshold) conditions defining a cell set S, which are then scored with
Fisher's exact test, the odds ratio and its Woolf CI against the
complement set.

Split quality is compared through exact integer arithmetic, so the chosen
tree is identical to an exhaustive best-split search and reproducible
across platforms.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegeneratePartitionError, InvalidInputError
from .features import FEATURE_INDEX, FEATURE_NAMES, FeatureRow, to_matrix
from .stats import ContingencyTable, ExactTestResult, exact_test


@dataclass
class TreeNode:
    """Internal node (feature/threshold set) or leaf (both None)."""

    n_samples: int
    n_class1: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def purity(self) -> float:
        return self.n_class1 / self.n_samples if self.n_samples else 0.0


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str  # ">" or "<="
    threshold: float

    def holds(self, value: float) -> bool:
        return value > self.threshold if self.op == ">" else value <= self.threshold

    def describe(self) -> str:
        return f"{self.feature} {self.op} {self.threshold:g}"


@dataclass(frozen=True)
class HypothesisPredicate:
    """Conjunction of threshold conditions over the 120-feature dictionary."""

    conditions: tuple

    def __post_init__(self):
        if not self.conditions:
            raise InvalidInputError("predicate needs at least one condition")
        for c in self.conditions:
            if c.feature not in FEATURE_INDEX:
                raise InvalidInputError(f"unknown feature {c.feature!r}")
            if c.op not in (">", "<="):
                raise InvalidInputError(f"unknown comparator {c.op!r}")

    def matches(self, vector: np.ndarray) -> bool:
        return all(c.holds(vector[FEATURE_INDEX[c.feature]]) for c in self.conditions)

    def features(self) -> tuple:
        return tuple(c.feature for c in self.conditions)

    def describe(self) -> str:
        return " and ".join(c.describe() for c in self.conditions)


@dataclass(frozen=True)
class CartParams:
    max_depth: int | None = 4
    min_leaf: int = 1
    criterion: str = "gini"
    seed: int = 0

    def validate(self) -> None:
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidInputError("max_depth must be >= 1 or None")
        if self.min_leaf < 1:
            raise InvalidInputError("min_leaf must be >= 1")
        if self.criterion != "gini":
            raise InvalidInputError(f"unsupported criterion {self.criterion!r}")


# ---------------------------------------------------------------------------
# CART training


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int,
                feature_ids: np.ndarray) -> tuple[int, float] | None:
    """Split minimizing weighted gini impurity, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Impurities are compared as exact rationals: for a candidate the
    score is N/D with integer N = (nL^2 - aL^2 - bL^2)*nR +
    (nR^2 - aR^2 - bR^2)*nL and D = nL*nR; N and D are small enough that
    float64 division orders candidates exactly, so ties are genuine and
    resolved by lowest feature index, then lowest threshold.
    """
    n = len(y)
    best = None  # (score, feature, threshold)
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        cum1 = np.cumsum(ys)
        sizes = np.arange(1, n, dtype=np.int64)
        boundary = xs[:-1] < xs[1:]
        if min_leaf > 1:
            boundary &= (sizes >= min_leaf) & (n - sizes >= min_leaf)
        idx = np.nonzero(boundary)[0]
        if idx.size == 0:
            continue
        nL = sizes[idx]
        aL = cum1[idx].astype(np.int64)
        bL = nL - aL
        nR = n - nL
        aR = int(cum1[-1]) - aL
        bR = nR - aR
        num = (nL * nL - aL * aL - bL * bL) * nR + (nR * nR - aR * aR - bR * bR) * nL
        score = num / (nL * nR)
        k = int(np.argmin(score))  # first minimum => lowest threshold
        cand = (float(score[k]), int(f))
        if best is None or cand[0] < best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            i = int(idx[k])
            best = (cand[0], cand[1], float((xs[i] + xs[i + 1]) / 2.0))
    if best is None:
        return None
    return best[1], best[2]


def grow_tree(X: np.ndarray, y: np.ndarray, max_depth: int | None = 4,
              min_leaf: int = 1, rng: np.random.Generator | None = None,
              max_features: int | None = None) -> TreeNode:
    """Greedy CART on a label array in {0, 1}.

    max_features, when set, samples that many candidate feature indices per
    split (used by random forests); the tie rule applies within the sample.
    """
    n, d = X.shape
    node = TreeNode(n_samples=n, n_class1=int(y.sum()))
    depth_left = None if max_depth is None else max_depth
    if n < 2 * min_leaf or node.n_class1 in (0, n) or depth_left == 0:
        return node
    if max_features is not None and max_features < d:
        feature_ids = np.sort(rng.choice(d, size=max_features, replace=False))
    else:
        feature_ids = np.arange(d)
    split = _best_split(X, y, min_leaf, feature_ids)
    if split is None:
        return node
    f, thr = split
    go_left = X[:, f] <= thr
    child_depth = None if max_depth is None else max_depth - 1
    node.feature = f
    node.threshold = thr
    node.left = grow_tree(X[go_left], y[go_left], child_depth, min_leaf, rng, max_features)
    node.right = grow_tree(X[~go_left], y[~go_left], child_depth, min_leaf, rng, max_features)
    return node


def train_cart(rows: list[FeatureRow], params: CartParams = CartParams()) -> TreeNode:
    """CART over FeatureRows; single-class data yields a single leaf."""
    params.validate()
    X, y = to_matrix(rows)
    if len(rows) == 0:
        raise InvalidInputError("cannot train on an empty dataset")
    rng = np.random.default_rng(params.seed)
    return grow_tree(X, y, params.max_depth, params.min_leaf, rng)


def predict_leaf(node: TreeNode, vector: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if vector[node.feature] <= node.threshold else node.right
    return node


# ---------------------------------------------------------------------------
# path extraction and evaluation


def _merge_conditions(conds: list[Condition]) -> tuple:
    """Tighten repeated conditions on one feature to a single interval;
    keeps first-occurrence order."""
    tight: dict[tuple, Condition] = {}
    order = []
    for c in conds:
        key = (c.feature, c.op)
        if key not in tight:
            tight[key] = c
            order.append(key)
        else:
            prev = tight[key]
            if (c.op == ">" and c.threshold > prev.threshold) or \
               (c.op == "<=" and c.threshold < prev.threshold):
                tight[key] = c
    return tuple(tight[k] for k in order)


def extract_paths(tree: TreeNode, min_support: int = 5, min_purity: float = 0.6,
                  feature_names=FEATURE_NAMES) -> list[HypothesisPredicate]:
    """Root-to-leaf paths whose leaf has >= min_support rows and class-1
    purity >= min_purity, as predicates; left-to-right traversal order."""
    out = []

    def walk(node: TreeNode, conds: list[Condition]):
        if node.is_leaf:
            if conds and node.n_samples >= min_support and node.purity >= min_purity:
                out.append(HypothesisPredicate(conditions=_merge_conditions(conds)))
            return
        name = feature_names[node.feature]
        walk(node.left, conds + [Condition(name, "<=", node.threshold)])
        walk(node.right, conds + [Condition(name, ">", node.threshold)])

    walk(tree, [])
    return out


def evaluate_hypothesis(pred: HypothesisPredicate,
                        rows: list[FeatureRow]) -> tuple[ContingencyTable, ExactTestResult]:
    """Score a predicate: membership in S against the conflict label."""
    X, y = to_matrix(rows)
    member = np.array([pred.matches(X[i]) for i in range(len(rows))], dtype=bool)
    n_in = int(member.sum())
    if n_in == 0 or n_in == len(rows):
        raise DegeneratePartitionError(
            f"predicate [{pred.describe()}] selects {n_in} of {len(rows)} cells")
    a = int(y[member].sum())
    c = int(y[~member].sum())
    table = ContingencyTable(a=a, b=n_in - a, c=c, d=len(rows) - n_in - c)
    return table, exact_test(table)


# ---------------------------------------------------------------------------
# built-in benchmark hypotheses (Hyp3..Hyp10)


@dataclass(frozen=True)
class BuiltinHypothesis:
    """A curated predicate with its frozen reference statistics, used as a
    golden regression fixture."""

    name: str
    country: str
    predicate: HypothesisPredicate
    table: ContingencyTable
    odds_ratio: float
    ci_low: float
    ci_high: float
    p: float


def _pred(*conds) -> HypothesisPredicate:
    return HypothesisPredicate(conditions=tuple(Condition(f, op, t) for f, op, t in conds))


_BUILTINS = (
    BuiltinHypothesis(
        name="Hyp3", country="Cameroon",
        predicate=_pred(("NBRC1", ">", 9.5), ("SSW4", "<=", 0.09)),
        table=ContingencyTable(11, 1, 2, 126),
        odds_ratio=693.0, ci_low=58.13, ci_high=8261.12, p=1.36e-13),
    BuiltinHypothesis(
        name="Hyp4", country="CAR",
        predicate=_pred(("NBRC1", ">", 5.5), ("RH2M5", "<=", 0.059), ("SSW8", "<=", 0.274)),
        table=ContingencyTable(14, 2, 24, 136),
        odds_ratio=39.67, ci_low=8.471, ci_high=185.74, p=4.66e-9),
    BuiltinHypothesis(
        name="Hyp5", country="CAR",
        predicate=_pred(("NBRC1", ">", 5.5), ("RH2M5", ">", 0.059), ("NBRC1", ">", 31.5)),
        table=ContingencyTable(8, 3, 30, 135),
        odds_ratio=12.0, ci_low=3.005, ci_high=47.92, p=2.47e-4),
    BuiltinHypothesis(
        name="Hyp6", country="Chad",
        predicate=_pred(("T2M_MIN8", ">", 0.376), ("SSW8", "<=", 0.054)),
        table=ContingencyTable(5, 3, 22, 191),
        odds_ratio=14.47, ci_low=3.236, ci_high=64.71, p=8.25e-4),
    BuiltinHypothesis(
        name="Hyp7", country="Chad",
        predicate=_pred(("T2M_MIN8", ">", 0.376), ("SSW8", ">", 0.054), ("NBRC1", ">", 15.5)),
        table=ContingencyTable(10, 4, 17, 190),
        odds_ratio=27.94, ci_low=7.916, ci_high=98.63, p=9.98e-8),
    BuiltinHypothesis(
        name="Hyp8", country="Chad",
        predicate=_pred(("T2M_MIN8", ">", 0.376), ("SSW8", ">", 0.054),
                        ("NBRC1", "<=", 15.5), ("SSW10", ">", 0.038)),
        table=ContingencyTable(5, 2, 22, 192),
        odds_ratio=21.82, ci_low=3.993, ci_high=119.21, p=3.38e-4),
    BuiltinHypothesis(
        name="Hyp9", country="DRC",
        predicate=_pred(("NBRC1", ">", 4.5), ("WS10M_MIN3", "<=", 0.306), ("T2M_MIN9", ">", 0.027)),
        table=ContingencyTable(5, 1, 25, 475),
        odds_ratio=95.0, ci_low=10.69, ci_high=844.08, p=3.02e-6),
    BuiltinHypothesis(
        name="Hyp10", country="DRC",
        predicate=_pred(("NBRC1", ">", 4.5), ("WS10M_MIN3", ">", 0.306)),
        table=ContingencyTable(11, 3, 19, 473),
        odds_ratio=91.28, ci_low=23.51, ci_high=354.39, p=1.43e-12),
)


def builtin_hypotheses() -> dict[str, BuiltinHypothesis]:
    return {bh.name: bh for bh in _BUILTINS}


def golden_dataset(bh: BuiltinHypothesis) -> list[FeatureRow]:
    """Reconstruct a dataset realizing a built-in hypothesis' table:
    (a+b) rows satisfying the predicate, a of them labelled 1, and (c+d)
    rows violating the first condition, c of them labelled 1."""
    sat = _template_row(bh.predicate, satisfy=True)
    vio = _template_row(bh.predicate, satisfy=False)
    t = bh.table
    rows = []
    for i in range(t.n_in):
        rows.append(_clone_row(sat, index=i, label=int(i < t.a)))
    for i in range(t.n_out):
        rows.append(_clone_row(vio, index=t.n_in + i, label=int(i < t.c)))
    return rows


def _interval_value(lo: float | None, hi: float | None, integral: bool) -> float:
    """A value inside (lo, hi]; lo/hi None means unbounded on that side."""
    if integral:
        if lo is None:
            return 0.0  # count features are non-negative, 0 <= hi
        v = float(np.floor(lo) + 1.0)
        if hi is not None and v > hi:
            raise InvalidInputError(f"no integer satisfies ({lo}, {hi}]")
        return v
    if lo is not None and hi is not None:
        return 0.5 * (lo + hi)
    if lo is not None:
        return lo + 0.1
    return 0.5 * hi


def _template_row(pred: HypothesisPredicate, satisfy: bool) -> FeatureRow:
    from .features import N_BINS, HIST_FEATURE_NAMES
    from .grid import CellId
    from .ingest import VARIABLES

    bounds: dict[str, list] = {}
    order = []
    for c in pred.conditions:
        if c.feature not in bounds:
            bounds[c.feature] = [None, None]  # (lo from '>', hi from '<=')
            order.append(c.feature)
        if c.op == ">":
            lo = bounds[c.feature][0]
            bounds[c.feature][0] = c.threshold if lo is None else max(lo, c.threshold)
        else:
            hi = bounds[c.feature][1]
            bounds[c.feature][1] = c.threshold if hi is None else min(hi, c.threshold)

    values: dict[str, float] = {}
    for k, feat in enumerate(order):
        lo, hi = bounds[feat]
        integral = feat.startswith("NBRC") or feat.startswith("NBRP")
        if satisfy or k > 0:
            values[feat] = _interval_value(lo, hi, integral)
        else:
            # violate exactly the first condition
            if lo is not None:
                values[feat] = 0.0
            else:
                values[feat] = float(np.ceil(hi) + 1.0) if integral else hi + 0.5 * (1.0 - hi)

    hist = np.zeros(len(HIST_FEATURE_NAMES))
    used_mass: dict[str, float] = {}
    cond_bins: dict[str, set] = {}
    for feat, v in values.items():
        if feat in FEATURE_INDEX and not feat.startswith("NBR"):
            hist[FEATURE_INDEX[feat]] = v
            var = feat.rstrip("0123456789")
            used_mass[var] = used_mass.get(var, 0.0) + v
            bin_no = int(feat[len(var):]) - 1
            cond_bins.setdefault(var, set()).add(bin_no)
    # make each touched variable's histogram sum to 1
    for vi, var in enumerate(VARIABLES):
        rest = 1.0 - used_mass.get(var, 0.0)
        taken = cond_bins.get(var, set())
        spare = next(b for b in range(N_BINS) if b not in taken)
        hist[vi * N_BINS + spare] = rest

    nbr_count = np.zeros(5, dtype=int)
    for j in range(1, 6):
        feat = f"NBRC{j}"
        if feat in values:
            nbr_count[j - 1] = int(values[feat])
    # counts are non-decreasing over nested neighborhoods
    nbr_count = np.maximum.accumulate(nbr_count)
    return FeatureRow(cell=CellId(0, 0), hist=hist,
                      nbr_presence=nbr_count > 0, nbr_count=nbr_count, label=0)


def _clone_row(template: FeatureRow, index: int, label: int) -> FeatureRow:
    from .grid import CellId

    return FeatureRow(cell=CellId(0, index), hist=template.hist.copy(),
                      nbr_presence=template.nbr_presence.copy(),
                      nbr_count=template.nbr_count.copy(), label=label)


# ---------------------------------------------------------------------------
# tree export and hypothesis reports


def tree_to_dict(node: TreeNode, feature_names=FEATURE_NAMES) -> dict:
    if node.is_leaf:
        return {"n_samples": node.n_samples, "n_class1": node.n_class1}
    return {
        "n_samples": node.n_samples,
        "n_class1": node.n_class1,
        "feature": feature_names[node.feature],
        "threshold": node.threshold,
        "left": tree_to_dict(node.left, feature_names),
        "right": tree_to_dict(node.right, feature_names),
    }


def tree_from_dict(d: dict, feature_names=FEATURE_NAMES) -> TreeNode:
    node = TreeNode(n_samples=int(d["n_samples"]), n_class1=int(d["n_class1"]))
    if "feature" in d:
        node.feature = feature_names.index(d["feature"])
        node.threshold = float(d["threshold"])
        node.left = tree_from_dict(d["left"], feature_names)
        node.right = tree_from_dict(d["right"], feature_names)
    return node


def tree_to_dot(node: TreeNode, feature_names=FEATURE_NAMES) -> str:
    """Graphviz digraph of the tree (left edge = condition holds)."""
    lines = ["digraph cart {", "  node [shape=box];"]
    counter = [0]

    def emit(n: TreeNode) -> int:
        nid = counter[0]
        counter[0] += 1
        if n.is_leaf:
            lines.append(f'  n{nid} [label="class1 {n.n_class1}/{n.n_samples}"];')
        else:
            lines.append(
                f'  n{nid} [label="{feature_names[n.feature]} <= {n.threshold:g}\\n'
                f'class1 {n.n_class1}/{n.n_samples}"];')
            lid = emit(n.left)
            rid = emit(n.right)
            lines.append(f'  n{nid} -> n{lid} [label="yes"];')
            lines.append(f'  n{nid} -> n{rid} [label="no"];')
        return nid

    emit(node)
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_tree(node: TreeNode, path, feature_names=FEATURE_NAMES) -> None:
    Path(path).write_text(
        json.dumps(tree_to_dict(node, feature_names), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")


def load_tree(path, feature_names=FEATURE_NAMES) -> TreeNode:
    return tree_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), feature_names)


def hypothesis_report_rows(named_results, country: str) -> list[dict]:
    """Rows for the exact-test report: one per (name, predicate, table, result)."""
    out = []
    for name, pred, table, res in named_results:
        out.append({
            "Country": country,
            "Hypothesis": name,
            "Predicate": pred.describe(),
            "Count S": table.a,
            "% S": 100.0 * table.a / table.n_in,
            "Count S̄": table.c,
            "% S̄": 100.0 * table.c / table.n_out,
            "Odds Ratio": res.odds_ratio,
            "95% CI lower": res.ci_low,
            "95% CI upper": res.ci_high,
            "P-value": res.p,
        })
    return out


def write_hypothesis_csv(report_rows: list[dict], path) -> None:
    cols = ["Country", "Hypothesis", "Count S", "% S", "Count S̄", "% S̄",
            "Odds Ratio", "95% CI lower", "95% CI upper", "P-value"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in report_rows:
            w.writerow([r["Country"], r["Hypothesis"], r["Count S"], repr(r["% S"]),
                        r["Count S̄"], repr(r["% S̄"]), repr(r["Odds Ratio"]),
                        repr(r["95% CI lower"]), repr(r["95% CI upper"]), repr(r["P-value"])])
