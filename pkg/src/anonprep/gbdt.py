"""Weight-aware gradient-boosted trees on dual-channel feature matrices.

Logistic loss, second-order leaf values, histogram split search. Numeric
channels split on ``x <= threshold``; token channels split one category
against the rest. Absent values take a learned default direction at every
split. Sample weights scale gradients and hessians, so a row with weight
``w`` is equivalent to ``k`` copies with weight ``w / k``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureMatrix

_GAIN_RTOL = 1e-10


@dataclass(frozen=True)
class GbdtParams:
    trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    max_bins: int = 64
    seed: int = 42

    def __post_init__(self) -> None:
        if self.trees < 1 or self.max_depth < 1 or self.max_bins < 2:
            raise ValueError("trees, max_depth must be >= 1 and max_bins >= 2")
        if self.learning_rate <= 0 or self.min_child_weight <= 0 or self.reg_lambda < 0:
            raise ValueError("learning_rate and min_child_weight must be positive")


@dataclass(frozen=True)
class _Column:
    attr: int
    is_token: bool
    thresholds: np.ndarray | None = None
    vocab: dict | None = None

    @property
    def slots(self) -> int:
        if self.is_token:
            return len(self.vocab)
        return len(self.thresholds) + 1

    def encode(self, fm: FeatureMatrix) -> np.ndarray:
        """0 = absent, 1..slots = present bin/category, slots + 1 = unseen category."""
        if self.is_token:
            unseen = self.slots + 1
            col = fm.tokens[:, self.attr]
            return np.fromiter(
                (0 if t is None else self.vocab.get(t, unseen - 1) + 1 for t in col), dtype=np.int32, count=len(col)
            )
        x = fm.numeric[:, self.attr]
        codes = np.searchsorted(self.thresholds, x, side="left").astype(np.int32) + 1
        codes[np.isnan(x)] = 0
        return codes


@dataclass
class Tree:
    col: np.ndarray  # -1 marks a leaf
    split: np.ndarray
    default_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


@dataclass
class TrainedModel:
    names: tuple[str, ...]
    columns: list[_Column]
    params: GbdtParams
    base_score: float
    trees: list[Tree] = field(default_factory=list)
    constant: float | None = None

    def predict_proba(self, fm: FeatureMatrix) -> np.ndarray:
        return predict_proba(self, fm)


def _bin_thresholds(x: np.ndarray, w: np.ndarray, max_bins: int) -> np.ndarray:
    present = ~np.isnan(x)
    u, inv = np.unique(x[present], return_inverse=True)
    if len(u) <= 1:
        return np.empty(0)
    if len(u) <= max_bins:
        return (u[:-1] + u[1:]) / 2.0
    # weighted quantiles over distinct values; invariant to splitting rows into copies
    uw = np.bincount(inv, weights=w[present], minlength=len(u))
    cum = np.cumsum(uw) / uw.sum()
    qs = np.arange(1, max_bins) / max_bins
    idx = np.unique(np.clip(np.searchsorted(cum, qs, side="left"), 0, len(u) - 2))
    return (u[idx] + u[idx + 1]) / 2.0


def _build_columns(fm: FeatureMatrix, max_bins: int) -> list[_Column]:
    cols: list[_Column] = []
    for j in range(len(fm.names)):
        x = fm.numeric[:, j]
        if np.any(~np.isnan(x)):
            cols.append(_Column(j, False, thresholds=_bin_thresholds(x, fm.weights, max_bins)))
        toks = sorted({t for t in fm.tokens[:, j] if t is not None})
        if toks:
            cols.append(_Column(j, True, vocab={t: k for k, t in enumerate(toks)}))
    return cols


def _encode(columns: list[_Column], fm: FeatureMatrix) -> np.ndarray:
    if not columns:
        return np.zeros((fm.n, 0), dtype=np.int32)
    return np.column_stack([c.encode(fm) for c in columns]).astype(np.int32)


class _SplitIndex:
    """Flat slot layout: per column one absent slot followed by its bins."""

    def __init__(self, columns: list[_Column]):
        sizes = np.array([c.slots + 1 for c in columns], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.total = int(sizes.sum()) + len(columns)  # room for unseen slot; unused in training
        col, k, a, b, pa, pb, is_tok = [], [], [], [], [], [], []
        for ci, c in enumerate(columns):
            off = int(self.offsets[ci])
            B = c.slots
            n_cand = B if c.is_token else B - 1
            for kk in range(n_cand):
                col.append(ci)
                k.append(kk)
                a.append(off + 2 + kk)
                b.append(off + 1 + kk if c.is_token else off + 1)
                pa.append(off + 1 + B)
                pb.append(off + 1)
                is_tok.append(c.is_token)
        self.col = np.array(col, dtype=np.int64)
        self.k = np.array(k, dtype=np.int64)
        self.a = np.array(a, dtype=np.int64)
        self.b = np.array(b, dtype=np.int64)
        self.pa = np.array(pa, dtype=np.int64)
        self.pb = np.array(pb, dtype=np.int64)
        self.is_token = np.array(is_tok, dtype=bool)
        self.n_cols = len(columns)
        # slot offsets for shifting codes into the flat layout (code 0..slots)
        self.shift = self.offsets


def _hist(X: np.ndarray, rows: np.ndarray, g: np.ndarray, h: np.ndarray, idx: _SplitIndex) -> tuple[np.ndarray, np.ndarray]:
    flat = (X[rows] + idx.shift).ravel()
    gr = np.repeat(g[rows], idx.n_cols)
    hr = np.repeat(h[rows], idx.n_cols)
    return (
        np.bincount(flat, weights=gr, minlength=idx.total),
        np.bincount(flat, weights=hr, minlength=idx.total),
    )


def _best_split(hg: np.ndarray, hh: np.ndarray, G: float, H: float, idx: _SplitIndex, params: GbdtParams):
    if len(idx.col) == 0:
        return None
    lam, mcw = params.reg_lambda, params.min_child_weight
    cg = np.concatenate([[0.0], np.cumsum(hg)])
    ch = np.concatenate([[0.0], np.cumsum(hh)])
    GL = cg[idx.a] - cg[idx.b]
    HL = ch[idx.a] - ch[idx.b]
    GP = cg[idx.pa] - cg[idx.pb]
    HP = ch[idx.pa] - ch[idx.pb]
    GA = cg[idx.pb] - cg[idx.pb - 1]
    HA = ch[idx.pb] - ch[idx.pb - 1]
    GR, HR = GP - GL, HP - HL
    parent = G * G / (H + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain_l = (GL + GA) ** 2 / (HL + HA + lam) + GR**2 / (HR + lam) - parent
        gain_r = GL**2 / (HL + lam) + (GR + GA) ** 2 / (HR + HA + lam) - parent
    gain_l = np.where((HL + HA >= mcw) & (HR >= mcw), gain_l, -np.inf)
    gain_r = np.where((HL >= mcw) & (HR + HA >= mcw), gain_r, -np.inf)
    default_left = (gain_l > gain_r) | ((gain_l == gain_r) & (HL >= HR))
    gain = np.where(default_left, gain_l, gain_r)
    best = gain.max()
    if not np.isfinite(best) or best <= 1e-12:
        return None
    # deterministic tie-break: lowest column index, then lowest bin
    i = int(np.flatnonzero(gain >= best - _GAIN_RTOL * abs(best))[0])
    return int(idx.col[i]), int(idx.k[i]), bool(default_left[i])


def _go_left(codes: np.ndarray, is_token: bool, k: int, default_left: bool) -> np.ndarray:
    present = codes > 0
    hit = (codes - 1 == k) if is_token else (codes - 1 <= k)
    return np.where(present, hit, default_left)


def _grow_tree(X, g, h, idx: _SplitIndex, columns: list[_Column], params: GbdtParams):
    lam = params.reg_lambda
    col, split, dleft, left, right, value = [], [], [], [], [], []
    leaf_rows: list[tuple[int, np.ndarray]] = []

    def new_node() -> int:
        for arr, v in ((col, -1), (split, 0), (dleft, False), (left, -1), (right, -1), (value, 0.0)):
            arr.append(v)
        return len(col) - 1

    root_rows = np.arange(X.shape[0])
    stack = [(new_node(), root_rows, 0, None)]
    while stack:
        node, rows, depth, hist = stack.pop()
        G, H = float(g[rows].sum()), float(h[rows].sum())
        res = None
        if depth < params.max_depth and H >= 2 * params.min_child_weight:
            if hist is None:
                hist = _hist(X, rows, g, h, idx)
            res = _best_split(hist[0], hist[1], G, H, idx, params)
        if res is None:
            value[node] = -G / (H + lam) * params.learning_rate
            leaf_rows.append((node, rows))
            continue
        ci, k, dl = res
        mask = _go_left(X[rows, ci], columns[ci].is_token, k, dl)
        lrows, rrows = rows[mask], rows[~mask]
        col[node], split[node], dleft[node] = ci, k, dl
        ln, rn = new_node(), new_node()
        left[node], right[node] = ln, rn
        if depth + 1 < params.max_depth:
            # histogram subtraction: build the smaller child, derive the sibling
            if len(lrows) <= len(rrows):
                lh = _hist(X, lrows, g, h, idx)
                rh = (hist[0] - lh[0], hist[1] - lh[1])
            else:
                rh = _hist(X, rrows, g, h, idx)
                lh = (hist[0] - rh[0], hist[1] - rh[1])
        else:
            lh = rh = None
        stack.append((rn, rrows, depth + 1, rh))
        stack.append((ln, lrows, depth + 1, lh))
    tree = Tree(
        np.array(col, dtype=np.int64),
        np.array(split, dtype=np.int64),
        np.array(dleft, dtype=bool),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )
    return tree, leaf_rows


def train(fm: FeatureMatrix, labels, weights=None, params: GbdtParams | None = None) -> TrainedModel:
    """Fit a boosted ensemble; ``weights`` default to ``fm.weights``."""
    params = params or GbdtParams()
    y = np.asarray(labels, dtype=float)
    w = fm.weights if weights is None else np.asarray(weights, dtype=float)
    if y.shape != (fm.n,) or w.shape != (fm.n,):
        raise ValueError("labels and weights must align with the feature matrix rows")
    if fm.n == 0:
        raise ValueError("cannot train on an empty matrix")
    if np.any(w <= 0):
        raise ValueError("sample weights must be positive")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    prior = float(np.dot(w, y) / w.sum())
    if prior in (0.0, 1.0):
        warnings.warn("training labels contain a single class; using a constant model", stacklevel=2)
        return TrainedModel(fm.names, [], params, prior, [], constant=prior)
    fm_w = FeatureMatrix(fm.names, fm.numeric, fm.tokens, fm.ids, w)
    columns = _build_columns(fm_w, params.max_bins)
    X = _encode(columns, fm)
    idx = _SplitIndex(columns)
    base = float(np.log(prior / (1 - prior)))
    F = np.full(fm.n, base)
    model = TrainedModel(fm.names, columns, params, base)
    for _ in range(params.trees):
        p = 1.0 / (1.0 + np.exp(-F))
        g = w * (p - y)
        h = w * p * (1.0 - p)
        tree, leaves = _grow_tree(X, g, h, idx, columns, params)
        model.trees.append(tree)
        for node, rows in leaves:
            F[rows] += tree.value[node]
    return model


def _tree_predict(tree: Tree, X: np.ndarray, columns: list[_Column]) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    is_tok = np.array([c.is_token for c in columns] + [False], dtype=bool)
    while True:
        c = tree.col[node]
        inner = c >= 0
        if not inner.any():
            return tree.value[node]
        ri, ni, ci = rows[inner], node[inner], c[inner]
        codes = X[ri, ci]
        k = tree.split[ni]
        hit = np.where(is_tok[ci], codes - 1 == k, codes - 1 <= k)
        go_left = np.where(codes > 0, hit, tree.default_left[ni])
        node[inner] = np.where(go_left, tree.left[ni], tree.right[ni])


def predict_proba(m: TrainedModel, fm: FeatureMatrix) -> np.ndarray:
    if tuple(fm.names) != tuple(m.names):
        raise ValueError(f"feature schema mismatch: model {m.names} vs matrix {fm.names}")
    if m.constant is not None:
        return np.full(fm.n, m.constant)
    X = _encode(m.columns, fm)
    F = np.full(fm.n, m.base_score)
    for tree in m.trees:
        F += _tree_predict(tree, X, m.columns)
    return 1.0 / (1.0 + np.exp(-F))
