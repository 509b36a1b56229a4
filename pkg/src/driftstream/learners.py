"""Streaming regressors under the test-then-train contract.

Every learner exposes predict(x) -> float and learn(x, y) -> None, sees
each labelled instance exactly once, and keeps memory bounded by its own
capacity parameters rather than by stream length. predict never mutates
state (checkable through state_hash), and before any learning it returns
the cold-start default 0.0.
"""

from __future__ import annotations

import hashlib
import math
import struct
from typing import Callable, Protocol

import numpy as np

from driftstream.data import NUMERIC, Schema
from driftstream.detectors import PageHinkley
from driftstream.rng import SeededRng


class Regressor(Protocol):
    def predict(self, x: np.ndarray) -> float: ...

    def learn(self, x: np.ndarray, y: float) -> None: ...

    def state_hash(self) -> int: ...


def hoeffding_bound(delta: float, n: int, value_range: float = 1.0) -> float:
    """sqrt(R^2 ln(1/delta) / (2n)) for an n-sample mean of range R."""
    return math.sqrt(value_range**2 * math.log(1.0 / delta) / (2.0 * n))


def _digest64(h: "hashlib._Hash") -> int:
    return int.from_bytes(h.digest()[:8], "big")


# ---------------------------------------------------------------------------
# sliding-window KNN


class SlidingWindowKNN:
    """k-nearest-neighbours over a FIFO window of recent instances.

    Distance is squared Euclidean over range-normalized numeric features
    (running min/max over everything seen, evicted instances included)
    plus a 0/1 mismatch term per categorical feature. Neighbour ties break
    toward the older window entry. Prediction averages min(k, window size)
    neighbour targets; an empty window predicts 0.0.
    """

    def __init__(self, schema: Schema, k: int = 10, window: int = 1000):
        if k < 1 or window < 1:
            raise ValueError("k and window must be positive")
        self.k = k
        self.capacity = window
        nfeat = len(schema.columns) - 1
        self._numeric = np.array(
            [c.kind == NUMERIC for c in schema.feature_columns], dtype=bool
        )
        self._features = np.zeros((window, nfeat))
        self._targets = np.zeros(window)
        self._size = 0
        self._head = 0
        self._min = np.full(nfeat, np.inf)
        self._max = np.full(nfeat, -np.inf)

    def __len__(self) -> int:
        return self._size

    def _logical_order(self) -> np.ndarray:
        return (self._head - self._size + np.arange(self._size)) % self.capacity

    def predict(self, x: np.ndarray) -> float:
        if self._size == 0:
            return 0.0
        x = np.asarray(x, dtype=np.float64)
        order = self._logical_order()
        window = self._features[order]

        span = self._max - self._min
        inv = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)
        num = self._numeric
        diff = (window[:, num] - x[num]) * inv[num]
        d2 = np.einsum("ij,ij->i", diff, diff)
        if (~num).any():
            d2 = d2 + (window[:, ~num] != x[~num]).sum(axis=1)

        kk = min(self.k, self._size)
        nearest = np.argsort(d2, kind="stable")[:kk]
        return float(self._targets[order][nearest].mean())

    def learn(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=np.float64)
        np.minimum(self._min, x, out=self._min)
        np.maximum(self._max, x, out=self._max)
        self._features[self._head] = x
        self._targets[self._head] = y
        self._head = (self._head + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def state_hash(self) -> int:
        h = hashlib.sha256()
        order = self._logical_order()
        h.update(struct.pack("<qq", self._size, self.k))
        h.update(self._features[order].tobytes())
        h.update(self._targets[order].tobytes())
        h.update(np.where(np.isfinite(self._min), self._min, 0.0).tobytes())
        h.update(np.where(np.isfinite(self._max), self._max, 0.0).tobytes())
        return _digest64(h)


# ---------------------------------------------------------------------------
# incremental regression tree (mean-prediction leaves, SDR splits)


class _NumericObserver:
    """Split-candidate statistics for one numeric feature at one leaf.

    Raw (value, target) pairs are buffered until the first split attempt,
    which freezes equal-width bin edges over the buffered value range.
    Later values clamp into the edge bins. Candidate thresholds are the
    interior edges; left-side stats come from bin prefix sums.
    """

    __slots__ = ("bins", "buffer", "edges", "counts", "sums", "sqs")

    def __init__(self, bins: int):
        self.bins = bins
        self.buffer: list[tuple[float, float]] = []
        self.edges: np.ndarray | None = None
        self.counts = self.sums = self.sqs = None

    def add(self, v: float, y: float) -> None:
        if self.edges is None:
            self.buffer.append((v, y))
            return
        self._bin_into(v, y)

    def _bin_into(self, v: float, y: float) -> None:
        b = int(np.searchsorted(self.edges, v, side="right")) - 1
        b = min(max(b, 0), self.bins - 1)
        self.counts[b] += 1
        self.sums[b] += y
        self.sqs[b] += y * y

    def freeze(self) -> None:
        if self.edges is not None or not self.buffer:
            return
        values = [v for v, _ in self.buffer]
        lo, hi = min(values), max(values)
        if hi <= lo:
            hi = lo + 1.0  # degenerate range: a single occupied bin, no usable cut
        self.edges = np.linspace(lo, hi, self.bins + 1)
        self.counts = np.zeros(self.bins)
        self.sums = np.zeros(self.bins)
        self.sqs = np.zeros(self.bins)
        for v, y in self.buffer:
            self._bin_into(v, y)
        self.buffer = []

    def candidates(self):
        """Yield (threshold, n_left, sum_left, sq_left) per interior edge."""
        if self.edges is None:
            return
        n_left = 0.0
        s_left = 0.0
        q_left = 0.0
        for b in range(self.bins - 1):
            n_left += self.counts[b]
            s_left += self.sums[b]
            q_left += self.sqs[b]
            yield float(self.edges[b + 1]), n_left, s_left, q_left


class _CategoricalObserver:
    """Per-code target statistics; candidates are code == c vs rest."""

    __slots__ = ("stats",)

    def __init__(self):
        self.stats: dict[float, list[float]] = {}

    def add(self, v: float, y: float) -> None:
        s = self.stats.get(v)
        if s is None:
            self.stats[v] = [1.0, y, y * y]
        else:
            s[0] += 1.0
            s[1] += y
            s[2] += y * y

    def candidates(self):
        for code in sorted(self.stats):
            n, s, q = self.stats[code]
            yield float(code), n, s, q


def _sd(n: float, s: float, q: float) -> float:
    if n <= 0:
        return 0.0
    return math.sqrt(max(0.0, q / n - (s / n) ** 2))


class _Leaf:
    __slots__ = (
        "n",
        "sum_y",
        "sq_y",
        "centroid",
        "observers",
        "seen_since_eval",
        "prior",
        "detector",
    )

    def __init__(self, nfeat: int, prior: float, detector):
        self.n = 0
        self.sum_y = 0.0
        self.sq_y = 0.0
        self.centroid = np.zeros(nfeat)
        self.observers = None  # created on first add
        self.seen_since_eval = 0
        self.prior = prior
        self.detector = detector

    def mean(self) -> float:
        return self.sum_y / self.n if self.n else self.prior

    def add(self, x: np.ndarray, y: float, numeric_mask: np.ndarray, bins: int) -> None:
        self.n += 1
        self.sum_y += y
        self.sq_y += y * y
        self.centroid += (x - self.centroid) / self.n
        if self.observers is None:
            self.observers = [
                _NumericObserver(bins) if numeric_mask[i] else _CategoricalObserver()
                for i in range(len(x))
            ]
        for i, obs in enumerate(self.observers):
            obs.add(float(x[i]), y)
        self.seen_since_eval += 1


class _Split:
    __slots__ = ("pos", "categorical", "value", "left", "right", "detector")

    def __init__(self, pos: int, categorical: bool, value: float, left, right, detector):
        self.pos = pos
        self.categorical = categorical
        self.value = value
        self.left = left
        self.right = right
        self.detector = detector

    def child_for(self, x: np.ndarray):
        if self.categorical:
            return self.left if x[self.pos] == self.value else self.right
        return self.left if x[self.pos] < self.value else self.right


class FimtTree:
    """Incremental regression tree with standard-deviation-reduction splits.

    Leaves predict their running target mean. Every grace_period arrivals a
    leaf races the per-feature best candidates and splits when the runner-up
    feature is worse than the best by more than the Hoeffding bound on the
    SDR ratio (R = 1, confidence delta), or when the bound shrinks under the
    tie threshold. With detect_drift on, each node runs a Page-Hinkley test
    on the tree's absolute prediction error and replaces its subtree with a
    fresh leaf on alarm.
    """

    def __init__(
        self,
        schema: Schema,
        grace_period: int = 200,
        split_confidence: float = 0.01,
        bins: int = 64,
        tie_threshold: float = 0.05,
        detect_drift: bool = True,
        detector_factory: Callable[[], PageHinkley] = PageHinkley,
    ):
        if not 0.0 < split_confidence < 1.0:
            raise ValueError("split_confidence must be in (0, 1)")
        self.schema = schema
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.bins = bins
        self.tie_threshold = tie_threshold
        self.detect_drift = detect_drift
        self.detector_factory = detector_factory
        self._numeric = np.array(
            [c.kind == NUMERIC for c in schema.feature_columns], dtype=bool
        )
        self.root = self._new_leaf(0.0)

    def _new_leaf(self, prior: float) -> _Leaf:
        det = self.detector_factory() if self.detect_drift else None
        return _Leaf(len(self._numeric), prior, det)

    def route_leaf(self, x: np.ndarray) -> _Leaf:
        node = self.root
        while isinstance(node, _Split):
            node = node.child_for(x)
        return node

    def predict(self, x: np.ndarray) -> float:
        return float(self.route_leaf(np.asarray(x, dtype=np.float64)).mean())

    def learn(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=np.float64)
        if self.detect_drift:
            # an alarm replaces the subtree; the instance then trains the fresh leaf
            self._update_detectors(x, abs(y - self.predict(x)))
        parent = None
        side = None
        node = self.root
        while isinstance(node, _Split):
            parent, side = node, ("left" if node.child_for(x) is node.left else "right")
            node = node.child_for(x)
        node.add(x, y, self._numeric, self.bins)
        if node.seen_since_eval >= self.grace_period:
            node.seen_since_eval = 0
            split = self._try_split(node)
            if split is not None:
                if parent is None:
                    self.root = split
                else:
                    setattr(parent, side, split)

    def _update_detectors(self, x: np.ndarray, error: float) -> bool:
        """Walk the routing path top-down; on alarm replace that subtree."""
        parent = None
        side = None
        node = self.root
        while True:
            if node.detector is not None and node.detector.update(error):
                fresh = self._new_leaf(self._subtree_prediction(node, x))
                if parent is None:
                    self.root = fresh
                else:
                    setattr(parent, side, fresh)
                return True
            if not isinstance(node, _Split):
                return False
            parent, side = node, ("left" if node.child_for(x) is node.left else "right")
            node = node.child_for(x)

    @staticmethod
    def _subtree_prediction(node, x: np.ndarray) -> float:
        while isinstance(node, _Split):
            node = node.child_for(x)
        return node.mean()

    def _feature_best(self, leaf: _Leaf, pos: int, sd_total: float):
        """Best candidate of one feature: (sdr, value, left stats, right stats)."""
        obs = leaf.observers[pos]
        if isinstance(obs, _NumericObserver):
            obs.freeze()
        best = None
        for value, n_l, s_l, q_l in obs.candidates():
            n_r = leaf.n - n_l
            s_r = leaf.sum_y - s_l
            q_r = leaf.sq_y - q_l
            if n_l <= 0 or n_r <= 0:
                continue
            sdr = sd_total - (
                n_l / leaf.n * _sd(n_l, s_l, q_l) + n_r / leaf.n * _sd(n_r, s_r, q_r)
            )
            if best is None or sdr > best[0]:
                best = (sdr, value, (n_l, s_l, q_l), (n_r, s_r, q_r))
        return best

    def _try_split(self, leaf: _Leaf):
        """Hoeffding race between the best candidates of different features.

        Ranking candidates of the *same* feature against each other is
        meaningless (adjacent thresholds are near-ties by construction), so
        the runner-up SDR is the best of the other features. A split happens
        when the runner-up/best ratio falls below 1 - eps, or when eps
        itself drops under the tie threshold while the ratio is within it,
        which unsticks statistically indistinguishable features.
        """
        if leaf.observers is None or leaf.n < 2:
            return None
        sd_total = _sd(leaf.n, leaf.sum_y, leaf.sq_y)
        if sd_total == 0.0:
            return None

        best = second = 0.0
        best_cand = None  # (pos, categorical, value, left stats, right stats)
        for pos, obs in enumerate(leaf.observers):
            found = self._feature_best(leaf, pos, sd_total)
            if found is None:
                continue
            sdr, value, left_stats, right_stats = found
            if sdr > best:
                second = best
                best = sdr
                best_cand = (pos, isinstance(obs, _CategoricalObserver), value, left_stats, right_stats)
            elif sdr > second:
                second = sdr

        if best_cand is None or best <= 0.0:
            return None
        eps = hoeffding_bound(self.split_confidence, leaf.n)
        ratio = second / best
        if ratio >= 1.0 - eps and eps >= self.tie_threshold:
            return None
        pos, categorical, value, (n_l, s_l, _), (n_r, s_r, _) = best_cand
        left = self._new_leaf(float(s_l / n_l))
        right = self._new_leaf(float(s_r / n_r))
        det = self.detector_factory() if self.detect_drift else None
        return _Split(pos, categorical, float(value), left, right, det)

    def leaves(self) -> list[_Leaf]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, _Split):
                stack.extend((node.right, node.left))
            else:
                out.append(node)
        return out

    def state_hash(self) -> int:
        h = hashlib.sha256()

        def visit(node):
            if isinstance(node, _Split):
                h.update(struct.pack("<cqd?", b"s", node.pos, node.value, node.categorical))
                visit(node.left)
                visit(node.right)
            else:
                h.update(struct.pack("<cqddd", b"l", node.n, node.sum_y, node.sq_y, node.prior))
                h.update(node.centroid.tobytes())

        visit(self.root)
        return _digest64(h)


# ---------------------------------------------------------------------------
# online-bagging forest and SOKNL


class OnlineBaggingForest:
    """Bagged incremental trees with per-member drift-triggered resets.

    Each member sees every instance w times with w ~ Poisson(poisson_rate)
    from its own RNG sub-stream (w = 0 skips learning). A per-member
    Page-Hinkley detector watches that member's absolute prequential error
    and resets the member (fresh tree, fresh detector) on alarm. Prediction
    is the unweighted mean of member predictions.
    """

    def __init__(
        self,
        schema: Schema,
        ensemble_size: int = 30,
        seed: int = 0,
        grace_period: int = 200,
        split_confidence: float = 0.01,
        poisson_rate: float = 6.0,
        detect_drift: bool = True,
        fixed_weight: int | None = None,
        detector_factory: Callable[[], PageHinkley] = PageHinkley,
    ):
        if ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")
        self.schema = schema
        self.ensemble_size = ensemble_size
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.poisson_rate = poisson_rate
        self.detect_drift = detect_drift
        self.fixed_weight = fixed_weight
        self.detector_factory = detector_factory
        self._rngs = [
            SeededRng(seed).substream(f"member/{i}").generator
            for i in range(ensemble_size)
        ]
        self.members = [self._new_member() for _ in range(ensemble_size)]
        self.detectors = [
            detector_factory() if detect_drift else None for _ in range(ensemble_size)
        ]

    def _new_member(self) -> FimtTree:
        # member trees rely on forest-level resets, not node-level ones
        return FimtTree(
            self.schema,
            grace_period=self.grace_period,
            split_confidence=self.split_confidence,
            detect_drift=False,
        )

    def predict(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(sum(m.predict(x) for m in self.members) / self.ensemble_size)

    def learn(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=np.float64)
        for i, member in enumerate(self.members):
            if self.detect_drift:
                err = abs(y - member.predict(x))
                if self.detectors[i].update(err):
                    member = self.members[i] = self._new_member()
                    self.detectors[i] = self.detector_factory()
            if self.fixed_weight is not None:
                w = self.fixed_weight
            else:
                w = int(self._rngs[i].poisson(self.poisson_rate))
            for _ in range(w):
                member.learn(x, y)

    def state_hash(self) -> int:
        h = hashlib.sha256()
        for m in self.members:
            h.update(struct.pack("<Q", m.state_hash()))
        return _digest64(h)


class Soknl:
    """Self-optimising k-nearest-leaves over an online-bagging forest.

    Routing an instance through each member yields one candidate leaf per
    tree; prediction averages the target means of the k candidates whose
    centroids lie nearest the instance. k is chosen as the argmin of the
    per-k cumulative squared error accumulated since stream start, ties
    toward smaller k; candidate-distance ties keep member order.
    """

    def __init__(
        self,
        schema: Schema,
        ensemble_size: int = 30,
        seed: int = 0,
        grace_period: int = 200,
        split_confidence: float = 0.01,
        poisson_rate: float = 6.0,
        detect_drift: bool = True,
        k_max: int | None = None,
    ):
        self.forest = OnlineBaggingForest(
            schema,
            ensemble_size=ensemble_size,
            seed=seed,
            grace_period=grace_period,
            split_confidence=split_confidence,
            poisson_rate=poisson_rate,
            detect_drift=detect_drift,
        )
        self.k_max = min(k_max or ensemble_size, ensemble_size)
        self.k_errors = np.zeros(self.k_max)

    def _candidates(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distances and target means of non-empty routed leaves, sorted."""
        dists = []
        means = []
        for member in self.forest.members:
            leaf = member.route_leaf(x)
            if leaf.n == 0:
                continue
            delta = x - leaf.centroid
            dists.append(float(delta @ delta))
            means.append(leaf.mean())
        if not dists:
            return np.empty(0), np.empty(0)
        dists = np.array(dists)
        means = np.array(means)
        order = np.argsort(dists, kind="stable")
        return dists[order], means[order]

    def current_k(self) -> int:
        return int(np.argmin(self.k_errors)) + 1

    def predict(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        _, means = self._candidates(x)
        if len(means) == 0:
            return 0.0
        k = min(self.current_k(), len(means))
        return float(means[:k].mean())

    def learn(self, x: np.ndarray, y: float) -> None:
        x = np.asarray(x, dtype=np.float64)
        _, means = self._candidates(x)
        if len(means) > 0:
            prefix = np.cumsum(means) / np.arange(1, len(means) + 1)
            for k in range(1, self.k_max + 1):
                pred_k = prefix[min(k, len(means)) - 1]
                self.k_errors[k - 1] += (y - pred_k) ** 2
        self.forest.learn(x, y)

    def state_hash(self) -> int:
        h = hashlib.sha256()
        h.update(struct.pack("<Q", self.forest.state_hash()))
        h.update(self.k_errors.tobytes())
        return _digest64(h)
