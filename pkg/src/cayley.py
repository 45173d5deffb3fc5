"""
Markov–Cayley trees and axial products on them.

A Markov–Cayley tree keeps the words over the generators f_1..f_d whose
consecutive letters are allowed by an adjacency matrix M. The first letter
is unrestricted, so the root has one child per generator. A vertex's type
is the last generator of its word.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

import config
from src.errors import HypothesisError
from src.logdomain import log_int, masked_logsumexp
from src.reports import EntropyReport
from src.sft1d import (
    TransitionMatrix,
    entropy,
    essentialize,
    is_primitive,
    spectral,
    word_count_logs,
    word_counts,
)
from src.tree_axial import BallCounts, BallProfile, TreeAxialSpec, full_extension_entropy_tree

logger = logging.getLogger(__name__)

RHO = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class MarkovCayleyTree:
    adjacency: TransitionMatrix

    def __post_init__(self):
        if self.adjacency.is_empty:
            raise ValueError("a Markov–Cayley tree needs at least one generator")

    @classmethod
    def golden_mean(cls) -> "MarkovCayleyTree":
        return cls(TransitionMatrix.from_rows([[1, 1], [1, 0]]))

    @classmethod
    def g1(cls) -> "MarkovCayleyTree":
        return cls(TransitionMatrix.from_rows([[1, 1], [0, 1]]))

    @classmethod
    def full(cls, d: int) -> "MarkovCayleyTree":
        """The d-tree: every generator may follow every other."""
        return cls(TransitionMatrix.full(d))

    @property
    def d(self) -> int:
        return self.adjacency.size

    def child_generators(self, generator: Optional[int]) -> List[int]:
        if generator is None:
            return list(range(self.d))
        return np.flatnonzero(self.adjacency.entries[generator]).tolist()


@dataclass
class TreeLevels:
    """Level sizes |T_n|, ball sizes |Δ_n| and branching data for n ≤ n_max."""

    level_sizes: List[int]
    ball_sizes: List[int]
    full_branching: List[int]
    growth_rate: Optional[float]

    def a(self, i: int) -> int:
        """Sequence with a_1 = |T_0|, so that |Δ_n| = a_1 + ... + a_{n+1}."""
        if i < 1:
            raise ValueError("a_i is indexed from 1")
        return self.level_sizes[i - 1]

    def branching_ratio(self, n: int) -> float:
        """Share of level-n vertices with every child present."""
        if self.level_sizes[n] == 0:
            return 0.0
        return self.full_branching[n] / self.level_sizes[n]

    def growth_ratio(self, n: int) -> float:
        """|T_n| / Σ_{i=1}^n |T_i|."""
        denominator = sum(self.level_sizes[1:n + 1])
        return self.level_sizes[n] / denominator if denominator else 0.0


def levels(tree: MarkovCayleyTree, n_max: int) -> TreeLevels:
    M = tree.adjacency.entries.astype(int).tolist()
    d = tree.d
    full_rows = [i for i in range(d) if sum(M[i]) == d]
    by_type = [1] * d
    level_sizes, full_branching = [1], [1]
    for _ in range(n_max):
        level_sizes.append(sum(by_type))
        full_branching.append(sum(by_type[i] for i in full_rows))
        by_type = [sum(by_type[i] * M[i][j] for i in range(d)) for j in range(d)]
    ball_sizes, running = [], 0
    for size in level_sizes:
        running += size
        ball_sizes.append(running)

    essential = essentialize(tree.adjacency)
    growth = None if essential.is_empty else spectral(essential).perron_value
    if growth is None:
        logger.warning("adjacency has an empty essential part; growth rate undefined")
    return TreeLevels(level_sizes, ball_sizes, full_branching, growth)


@dataclass
class BallVertex:
    depth: int
    parent: Optional[int]
    generator: Optional[int]
    children: Dict[int, int] = field(default_factory=dict)


def ball_geometry(tree: MarkovCayleyTree, depth: int) -> List[BallVertex]:
    """Vertices of Δ_depth in breadth-first order, parents before children."""
    vertices = [BallVertex(0, None, None)]
    frontier = [0]
    for level in range(depth):
        upcoming = []
        for index in frontier:
            for generator in tree.child_generators(vertices[index].generator):
                vertices.append(BallVertex(level + 1, index, generator))
                vertices[index].children[generator] = len(vertices) - 1
                upcoming.append(len(vertices) - 1)
        frontier = upcoming
    return vertices


# -----------------------------
# 1. Typed ball counting
# -----------------------------
def count_ball_cayley(tree: MarkovCayleyTree, axes: Sequence[TransitionMatrix], n: int,
                      exact: Optional[bool] = None) -> BallCounts:
    """Ball counts with axis ``axes[j]`` on the edges labelled f_j.

    c_k(i, s) = Π_{j: M[i,j]} Σ_{t: axes[j][s,t]} c_{k-1}(j, t); the root
    takes every generator.
    """
    if len(axes) != tree.d:
        raise ValueError(f"tree has {tree.d} generators but {len(axes)} axes were given")
    spec = TreeAxialSpec(tuple(axes))
    masks = spec.compact_axes()
    alphabet = len(spec.symbols())
    kids = [tree.child_generators(i) for i in range(tree.d)]
    if exact is None:
        exact = n <= 12

    if exact:
        successors = [[np.flatnonzero(row).tolist() for row in mask] for mask in masks]

        def gather(table: List[List[int]], generators: List[int], s: int) -> int:
            return math.prod(sum(table[j][t] for t in successors[j][s]) for j in generators)

        typed = [[1] * alphabet for _ in range(tree.d)]
        for _ in range(max(n - 1, 0)):
            typed = [[gather(typed, kids[i], s) for s in range(alphabet)] for i in range(tree.d)]
        if n == 0:
            root = [1] * alphabet
        else:
            root = [gather(typed, list(range(tree.d)), s) for s in range(alphabet)]
        return BallCounts(n, np.array([log_int(c) for c in root]), root)

    def gather_log(table: np.ndarray, generators: List[int]) -> np.ndarray:
        out = np.zeros(alphabet)
        for j in generators:
            out = out + masked_logsumexp(masks[j], table[j])
        return out

    typed_log = np.zeros((tree.d, alphabet))
    for _ in range(max(n - 1, 0)):
        typed_log = np.array([gather_log(typed_log, kids[i]) for i in range(tree.d)])
    root_log = np.zeros(alphabet) if n == 0 else gather_log(typed_log, list(range(tree.d)))
    return BallCounts(n, root_log)


def cayley_entropy_estimate(tree: MarkovCayleyTree, axes: Sequence[TransitionMatrix], depth: int) -> float:
    counts = count_ball_cayley(tree, axes, depth, exact=False)
    ball = levels(tree, depth).ball_sizes[depth]
    return max(counts.total_log, 0.0) / ball


def _full_on(X: TransitionMatrix) -> TransitionMatrix:
    return TransitionMatrix.full(X.size)


# -----------------------------
# 2. Golden-mean tree closed forms
# -----------------------------
def gm_entropy_E_times_X(X: TransitionMatrix) -> float:
    """log|P(Z_1,X)|/ρ³ + log|P(Z_2,X)|/ρ² on the golden-mean tree."""
    z1, z2 = word_counts(X, 2)
    return log_int(z1) / RHO ** 3 + log_int(z2) / RHO ** 2


def _gm_tail(alphabet: int, I: int) -> float:
    x = 1.0 / RHO
    return math.log(alphabet) * x ** 3 * x ** (I + 1) * ((I + 1) - I * x) / (1.0 - x) ** 2


def gm_entropy_X_times_E(X: TransitionMatrix, tail_tol: float = config.SERIES_TAIL_TOLERANCE) -> float:
    """Σ_{i≥1} log|P(Z_i,X)| / ρ^{i+3}, truncated by its geometric tail."""
    alphabet = max(essentialize(X).size, 1)
    I = 1
    while _gm_tail(alphabet, I) >= tail_tol:
        I += 1
    logs = word_count_logs(X, I)
    if np.isneginf(logs).any():
        return 0.0
    logger.debug("golden-mean X×E series: %d terms", I)
    return math.fsum(logs[i - 1] / RHO ** (i + 3) for i in range(1, I + 1))


@dataclass
class PartitionCheck:
    e_times_x: bool
    x_times_e: bool
    failed_at: Optional[int] = None
    message: Optional[str] = None

    def __bool__(self) -> bool:
        return self.e_times_x and self.x_times_e


def verify_gm_partitions(X: TransitionMatrix, n: int) -> PartitionCheck:
    """Exact DP counts against both golden-mean partition products for depths 1..n."""
    tree = MarkovCayleyTree.golden_mean()
    tree_levels = levels(tree, n)
    words = word_counts(X, n + 1)
    Z = [None] + words
    E = _full_on(X)
    for depth in range(1, n + 1):
        a = tree_levels.a
        ball = tree_levels.ball_sizes[depth]
        paired = ball - a(depth)
        if paired % 2:
            return PartitionCheck(False, False, depth, f"odd pair count at n={depth}")
        e_times_x = Z[1] ** a(depth) * Z[2] ** (paired // 2)
        x_times_e = Z[depth + 1] * Z[depth]
        for i in range(1, depth):
            x_times_e *= Z[i] ** a(depth - i)
        left = count_ball_cayley(tree, (E, X), depth, exact=True).total_exact
        right = count_ball_cayley(tree, (X, E), depth, exact=True).total_exact
        if left != e_times_x or right != x_times_e:
            failed = "E×X" if left != e_times_x else "X×E"
            logger.warning("golden-mean %s partition fails at n=%d", failed, depth)
            return PartitionCheck(left == e_times_x, right == x_times_e, depth,
                                  f"{failed} partition identity fails at n={depth}")
    return PartitionCheck(True, True)


# -----------------------------
# 3. Strict inequality for γ > 1 and the g1 tree
# -----------------------------
@dataclass
class StrictProbe:
    depth: int
    gamma: float
    h_X: float
    h_E_times_X: float
    h_X_times_E: float
    branching_ratio: float
    growth_ratio: float
    growth_limit: float
    series_value: Optional[float] = None

    @property
    def margin_E_times_X(self) -> float:
        return self.h_E_times_X - self.h_X

    @property
    def margin_X_times_E(self) -> float:
        return self.h_X_times_E - self.h_X

    def as_dict(self) -> Dict[str, float]:
        return {
            "depth": self.depth,
            "gamma": self.gamma,
            "h_X": self.h_X,
            "h_E_times_X": self.h_E_times_X,
            "h_X_times_E": self.h_X_times_E,
            "margin_E_times_X": self.margin_E_times_X,
            "margin_X_times_E": self.margin_X_times_E,
            "branching_ratio": self.branching_ratio,
            "growth_ratio_scaled": self.growth_ratio * self.branching_ratio,
            "growth_limit_scaled": self.growth_limit * self.branching_ratio,
            "series_value": self.series_value,
        }


def strict_inequality_probe(tree: MarkovCayleyTree, X: TransitionMatrix, depth: int) -> StrictProbe:
    tree_levels = levels(tree, depth)
    gamma = tree_levels.growth_rate
    if gamma is None or gamma <= 1.0 + 1e-9:
        raise HypothesisError(f"growth rate {gamma} is not above 1; use g1_entropy for γ = 1 trees")
    if X == TransitionMatrix.full(X.size):
        logger.warning("the probe expects a non-full X; margins will be zero")
    E = _full_on(X)
    series_value = None
    if tree.d == 2 and tree.adjacency == TransitionMatrix.full(2):
        series_value = full_extension_entropy_tree(BallProfile.from_words(X), 2, 1).value
    return StrictProbe(
        depth=depth,
        gamma=gamma,
        h_X=entropy(X),
        h_E_times_X=cayley_entropy_estimate(tree, (E, X), depth),
        h_X_times_E=cayley_entropy_estimate(tree, (X, E), depth),
        branching_ratio=tree_levels.branching_ratio(depth),
        growth_ratio=tree_levels.growth_ratio(depth),
        growth_limit=(gamma - 1.0) / gamma,
        series_value=series_value,
    )


def g1_entropy(X: TransitionMatrix, n_max: int) -> EntropyReport:
    """Entropy of E × X on the g1 tree as the limit of Σ_{i≤n+1} log|P(Z_i,X)| / ((n+1)(n+2)/2).

    |P(Z_i,X)| counts words of length i, the entry sum of A^{i-1} (one power
    below the length). ``word_count_logs`` is indexed from length 1, so the
    full 2-shift gives exactly log 2 at every n.
    """
    if not is_primitive(X):
        raise HypothesisError("the g1 limit needs a primitive axis matrix")
    logs = word_count_logs(X, n_max + 1)
    running = np.cumsum(logs)
    sizes = list(range(1, n_max + 1))
    estimates = [float(running[n]) / ((n + 1) * (n + 2) / 2) for n in sizes]
    closed = math.log(spectral(X).perron_value)
    report = EntropyReport(quantity="g1_E_times_X", closed_form=closed, sizes=sizes, estimates=estimates)
    report.diagnostics["gap"] = report.error
    return report
