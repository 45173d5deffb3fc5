"""
Axial products on the d-tree.

Vertex g has children g f_1, ..., g f_d; the edge to g f_i must be a
transition of X_i. Ball counts come from a root-symbol dynamic program that
runs on exact integers or, for deep balls, in the log domain.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
from src.errors import AxialEntropyError
from src.grid_axial import dense_matrix, match_dense
from src.logdomain import LOG_ZERO, LogCount, log_int, logsumexp, masked_logsumexp
from src.reports import EntropyReport
from src.sft1d import (
    Structure,
    TransitionMatrix,
    classify,
    essential_symbols,
    essentialize,
    irreducible_components,
    is_irreducible,
    is_permutation,
    transitive_with_period,
    word_count_logs,
)

logger = logging.getLogger(__name__)


class GapClass(str, Enum):
    ZERO_ENTROPY = "ZeroEntropy"
    AT_LEAST_HALF_LOG2 = "AtLeastHalfLog2"


@dataclass(frozen=True)
class TreeAxialSpec:
    """Axis matrices bound to the generators f_1..f_d over one alphabet.

    ``alphabet_size`` is only needed when there are no axes (the 0-tree is a
    single vertex carrying any symbol).
    """

    axes: Tuple[TransitionMatrix, ...]
    alphabet_size: Optional[int] = None

    def __post_init__(self):
        axes = tuple(self.axes)
        sizes = {A.size for A in axes}
        if len(sizes) > 1:
            raise ValueError(f"axes must share one alphabet, got sizes {sorted(sizes)}")
        if axes:
            size = axes[0].size
            if self.alphabet_size is not None and self.alphabet_size != size:
                raise ValueError("alphabet_size disagrees with the axes")
        elif self.alphabet_size is None or self.alphabet_size < 1:
            raise ValueError("a spec without axes needs a positive alphabet_size")
        else:
            size = self.alphabet_size
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "alphabet_size", size)

    @classmethod
    def isotropic_power(cls, A: TransitionMatrix, d: int) -> "TreeAxialSpec":
        return cls((A,) * d, None if d else A.size)

    @property
    def d(self) -> int:
        return len(self.axes)

    def symbols(self) -> np.ndarray:
        # Intersection of per-axis essential sets, not the joint fixpoint.
        keep = np.ones(self.alphabet_size, dtype=bool)
        for A in self.axes:
            keep &= essential_symbols(A)
        return np.flatnonzero(keep)

    def compact_axes(self) -> List[np.ndarray]:
        index = self.symbols()
        return [A.entries[np.ix_(index, index)].astype(bool) for A in self.axes]


@dataclass
class BallCounts:
    """Per-root-symbol counts of admissible labelings of the depth-n ball."""

    depth: int
    log_counts: np.ndarray
    exact_counts: Optional[List[int]] = None

    @property
    def total_log(self) -> float:
        if self.exact_counts is not None:
            return log_int(self.total_exact)
        return logsumexp(self.log_counts.tolist())

    @property
    def total_exact(self) -> Optional[int]:
        if self.exact_counts is None:
            return None
        return sum(self.exact_counts)

    @property
    def total(self) -> LogCount:
        if self.exact_counts is not None:
            return LogCount.from_int(self.total_exact)
        return LogCount.from_log(self.total_log)


def ball_size(d: int, n: int) -> int:
    """|Δ_n| on the d-tree."""
    if d == 0:
        return 1
    if d == 1:
        return n + 1
    return (d ** (n + 1) - 1) // (d - 1)


# -----------------------------
# 1. Ball counting
# -----------------------------
def _exact_step(successors: List[List[List[int]]], counts: List[int]) -> List[int]:
    return [
        math.prod(sum(counts[t] for t in axis[s]) for axis in successors)
        for s in range(len(counts))
    ]


def _log_step(masks: List[np.ndarray], log_counts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(log_counts))
    for mask in masks:
        out = out + masked_logsumexp(mask, log_counts)
    return out


def _successor_lists(masks: List[np.ndarray]) -> List[List[List[int]]]:
    return [[np.flatnonzero(row).tolist() for row in mask] for mask in masks]


def _wants_exact(spec: TreeAxialSpec, n: int) -> bool:
    alphabet = max(len(spec.symbols()), 2)
    return ball_size(spec.d, n) * math.log2(alphabet) < config.TREE_EXACT_MAX_BITS


def count_ball(spec: TreeAxialSpec, n: int, exact: Optional[bool] = None) -> BallCounts:
    """Counts of the depth-``n`` ball by root symbol.

    c_0(s) = 1 and c_k(s) = Π_i Σ_{t: A_i[s,t]} c_{k-1}(t) over the symbols
    essential for every axis.
    """
    if n < 0:
        raise ValueError("depth must be nonnegative")
    masks = spec.compact_axes()
    alphabet = len(spec.symbols())
    if exact is None:
        exact = _wants_exact(spec, n)
    if exact:
        successors = _successor_lists(masks)
        counts = [1] * alphabet
        for _ in range(n):
            counts = _exact_step(successors, counts)
        return BallCounts(n, np.array([log_int(c) for c in counts]), counts)
    log_counts = np.zeros(alphabet)
    for _ in range(n):
        log_counts = _log_step(masks, log_counts)
    return BallCounts(n, log_counts)


def ball_count_sequence(spec: TreeAxialSpec, n_max: int, exact: bool = True) -> List[BallCounts]:
    """Ball counts for depths 0..n_max, sharing one DP pass."""
    masks = spec.compact_axes()
    alphabet = len(spec.symbols())
    sequence = []
    if exact:
        successors = _successor_lists(masks)
        counts = [1] * alphabet
        for depth in range(n_max + 1):
            if depth:
                counts = _exact_step(successors, counts)
            sequence.append(BallCounts(depth, np.array([log_int(c) for c in counts]), counts))
        return sequence
    log_counts = np.zeros(alphabet)
    for depth in range(n_max + 1):
        if depth:
            log_counts = _log_step(masks, log_counts)
        sequence.append(BallCounts(depth, log_counts.copy()))
    return sequence


def ball_log_counts(spec: TreeAxialSpec, n_max: int) -> np.ndarray:
    """log |P(Δ_n)| for n = 0..n_max in the log domain."""
    return np.array([counts.total_log for counts in ball_count_sequence(spec, n_max, exact=False)])


# -----------------------------
# 2. Entropy estimate
# -----------------------------
def _dense_tree_closed_form(spec: TreeAxialSpec) -> Optional[float]:
    if spec.d != 2:
        return None
    match = match_dense(spec.axes[0])
    if match and spec.axes[1] == TransitionMatrix.identity(spec.alphabet_size):
        return dense_tree_entropy(*match)
    return None


def entropy_estimate_tree(spec: TreeAxialSpec, n_max: int) -> EntropyReport:
    """log |P(Δ_n)| / |Δ_n| for n = 1..n_max; an empty shift reads 0."""
    logs = ball_log_counts(spec, n_max)
    sizes = list(range(1, n_max + 1))
    estimates = [float(max(logs[n], 0.0)) / ball_size(spec.d, n) for n in sizes]
    report = EntropyReport(
        quantity="tree",
        closed_form=_dense_tree_closed_form(spec),
        sizes=sizes,
        estimates=estimates,
        diagnostics={"d": spec.d, "empty": bool(logs[0] == LOG_ZERO)},
    )
    report.diagnostics["cauchy"] = report.cauchy
    return report


# -----------------------------
# 3. Full axial extensions: series and partition identity
# -----------------------------
@dataclass(frozen=True)
class BallProfile:
    """Ball counts |P(Δ_j)| of an inner shift on the ``arity``-tree.

    ``log_counts(n_max)`` returns log |P(Δ_j)| for j = 0..n_max;
    ``alphabet_size`` bounds every count by alphabet^|Δ_j|.
    """

    arity: int
    alphabet_size: int
    log_counts: Callable[[int], np.ndarray] = field(compare=False)
    label: str = ""

    @classmethod
    def from_spec(cls, spec: TreeAxialSpec) -> "BallProfile":
        alphabet = max(len(spec.symbols()), 1)
        return cls(spec.d, alphabet, lambda n_max: ball_log_counts(spec, n_max), label="spec")

    @classmethod
    def from_words(cls, omega: TransitionMatrix) -> "BallProfile":
        """Arity-1 profile: the depth-j ball is a word of length j + 1."""
        alphabet = max(essentialize(omega).size, 1)
        return cls(1, alphabet, lambda n_max: word_count_logs(omega, n_max + 1), label="words")

    @classmethod
    def k_point(cls, k: int, arity: int) -> "BallProfile":
        return cls(arity, k, lambda n_max: np.full(n_max + 1, math.log(k)), label=f"{k}-point")

    @classmethod
    def minimal_nonempty(cls, k: int, arity: int) -> "BallProfile":
        """|P(Δ_0)| = k and a single pattern at every positive depth."""
        def logs(n_max: int) -> np.ndarray:
            values = np.zeros(n_max + 1)
            values[0] = math.log(k)
            return values
        return cls(arity, k, logs, label=f"minimal-{k}")


def _series_tail(d: int, q: int, r: int, alphabet: int, J: int) -> float:
    """Bound on Σ_{j>J} r(d-1) log|P(Δ_{j-1})| / d^{j+1} with |P| ≤ alphabet^|Δ_{j-1}|."""
    scale = r * (d - 1) * math.log(alphabet)
    if scale == 0.0:
        return 0.0
    x = 1.0 / d
    if q == 0:
        return scale * x ** (J + 2) / (1.0 - x)
    if q == 1:
        return scale * x * x ** (J + 1) * ((J + 1) - J * x) / (1.0 - x) ** 2
    ratio = q / d
    return scale * ratio ** (J + 1) / ((q - 1) * d * (1.0 - ratio))


def full_extension_entropy_tree(inner: Union[TreeAxialSpec, BallProfile], d: int, r: int,
                                tail_tol: float = config.SERIES_TAIL_TOLERANCE) -> EntropyReport:
    """Entropy of E^r × X on the d-tree from the inner ball counts.

    h = r(d-1) Σ_{j≥1} log|P(Δ_{j-1}, X)| / d^{j+1}, truncated once the
    geometric tail bound drops below ``tail_tol``.
    """
    profile = inner if isinstance(inner, BallProfile) else BallProfile.from_spec(inner)
    if not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
    if profile.arity != d - r:
        raise ValueError(f"inner arity {profile.arity} does not equal d - r = {d - r}")
    if r == d:
        return EntropyReport(quantity="full_extension_tree", closed_form=math.log(profile.alphabet_size),
                             terms=0, tail_bound=0.0, diagnostics={"d": d, "r": r})

    q = d - r
    J = 1
    bound = _series_tail(d, q, r, profile.alphabet_size, J)
    while bound >= tail_tol:
        J += 1
        if J > config.MAX_SERIES_TERMS:
            raise AxialEntropyError(f"series did not reach tail {tail_tol} within {config.MAX_SERIES_TERMS} terms")
        bound = _series_tail(d, q, r, profile.alphabet_size, J)
    if not math.isfinite(bound):
        raise AxialEntropyError("series tail bound is not finite")

    logs = profile.log_counts(J - 1)
    if np.isneginf(logs).any():
        logger.debug("inner shift is empty; entropy reads 0")
        return EntropyReport(quantity="full_extension_tree", closed_form=0.0, terms=J, tail_bound=bound,
                             diagnostics={"d": d, "r": r, "empty": True})
    terms = [r * (d - 1) * logs[j - 1] / d ** (j + 1) for j in range(1, J + 1)]
    partial = np.cumsum(terms).tolist()
    partial[-1] = math.fsum(terms)
    logger.debug("tree series: %d terms, tail bound %.3g", J, bound)
    return EntropyReport(
        quantity="full_extension_tree",
        closed_form=partial[-1],
        sizes=list(range(1, J + 1)),
        estimates=partial,
        tail_bound=bound,
        terms=J,
        diagnostics={"d": d, "r": r, "profile": profile.label},
    )


def full_extension_tree_spec(inner: TreeAxialSpec, r: int) -> TreeAxialSpec:
    """E^r × X with the full-shift axes on the first ``r`` generators."""
    full = TransitionMatrix.full(inner.alphabet_size)
    return TreeAxialSpec((full,) * r + inner.axes, inner.alphabet_size)


def partition_product(inner_counts: Sequence[int], d: int, r: int, n: int) -> int:
    """|P(Δ_n, X)| · Π_{j=1}^n |P(Δ_{j-1}, X)|^{r d^{n-j}}."""
    product = inner_counts[n]
    for j in range(1, n + 1):
        product *= inner_counts[j - 1] ** (r * d ** (n - j))
    return product


def verify_partition_identity(inner: TreeAxialSpec, d: int, r: int, n: int) -> bool:
    if inner.d != d - r:
        raise ValueError(f"inner arity {inner.d} does not equal d - r = {d - r}")
    whole = count_ball(full_extension_tree_spec(inner, r), n, exact=True).total_exact
    inner_counts = [counts.total_exact for counts in ball_count_sequence(inner, n, exact=True)]
    product = partition_product(inner_counts, d, r, n)
    if whole != product:
        logger.warning("partition identity fails at d=%d r=%d n=%d: %d != %d", d, r, n, whole, product)
    return whole == product


# -----------------------------
# 4. The dense-entropy family on the 2-tree
# -----------------------------
def dense_tree_entropy(m: int, n: int) -> float:
    return m * math.log(2.0) / (2 * n)


def dense_tree_spec(m: int, n: int) -> TreeAxialSpec:
    """dense(m, n) along f_1 and the identity along f_2."""
    A = dense_matrix(m, n)
    return TreeAxialSpec((A, TransitionMatrix.identity(A.size)))


def dense_tree_recurrence_count(m: int, n: int, k: int) -> int:
    """|P(Δ_k)| = Σ_j (2^m)^{a_k(j)} with a_k = R a_{k-1}, a_0 = e_j.

    a_k(j) is the number of free block vertices when the root sits j steps
    into the cycle; R couples each cycle position to its successor.
    """
    recurrence = np.zeros((n, n), dtype=object)
    recurrence[0, 0] += 1
    recurrence[0, n - 1] += 1
    for i in range(1, n):
        recurrence[i, i - 1] += 1
        recurrence[i, i] += 1
    total = 0
    for j in range(n):
        vector = np.array([1 if i == j else 0 for i in range(n)], dtype=object)
        for _ in range(k):
            vector = recurrence.dot(vector)
        total += (2 ** m) ** int(vector[0])
    return total


def dense_transitivity(m: int, n: int) -> bool:
    """dense(m, n) is irreducible with a periodic point."""
    return transitive_with_period(dense_matrix(m, n))


# -----------------------------
# 5. Infima and the permutation characterisation
# -----------------------------
def infimum_nonempty(d: int, r: int, k: int) -> float:
    return r * (d - 1) * math.log(k) / d ** 2


def infimum_subshift(d: int, r: int, k: int) -> float:
    return r * math.log(k) / d


@dataclass
class PermutationCheck:
    all_permutation: bool
    constant_counts: bool
    counts: List[int]
    irreducible: bool

    @property
    def holds(self) -> bool:
        return self.all_permutation == self.constant_counts

    @property
    def failure(self) -> Optional[str]:
        if self.holds:
            return None
        if self.all_permutation:
            return "permutation axes but ball counts are not constant"
        return "ball counts constant but some axis is not a permutation"

    def __bool__(self) -> bool:
        return self.holds


def permutation_characterization_check(axes: Sequence[TransitionMatrix],
                                       probe_depth: int = config.PERMUTATION_PROBE_DEPTH) -> PermutationCheck:
    """Permutation axes ⇔ |P(Δ_n)| = k for every n ≤ probe_depth."""
    spec = TreeAxialSpec(tuple(axes))
    k = spec.alphabet_size
    counts = [c.total_exact for c in ball_count_sequence(spec, probe_depth, exact=True)]
    check = PermutationCheck(
        all_permutation=all(is_permutation(A) for A in spec.axes),
        constant_counts=all(c == k for c in counts),
        counts=counts,
        irreducible=all(is_irreducible(A) for A in spec.axes),
    )
    if not check.irreducible:
        logger.debug("permutation probe on reducible axes")
    if not check.holds:
        logger.warning("permutation characterisation failed: %s", check.failure)
    return check


# -----------------------------
# 6. Isotropic gap on the 2-tree
# -----------------------------
def isotropic_gap_classify(A: TransitionMatrix) -> GapClass:
    """Zero entropy, or at least log 2 / 2, for the isotropic product on the 2-tree.

    Positive entropy needs a recurrent symbol with two essential successors.
    """
    if classify(A) is Structure.NO_IRREDUCIBLE_COMPONENT:
        return GapClass.ZERO_ENTROPY
    E = essentialize(A)
    row_sums = E.row_sums
    for component in irreducible_components(E):
        if any(row_sums[s] >= 2 for s in component):
            return GapClass.AT_LEAST_HALF_LOG2
    return GapClass.ZERO_ENTROPY
