"""
One-dimensional subshifts of finite type given by binary transition matrices.

Words are counted in the one-sided convention: a word is admissible when it
extends to an infinite forward ray, so essentialization deletes rows that
have no continuation and leaves columns alone.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

import config
from src.errors import MatrixFormatError, SpectralConvergenceError
from src.logdomain import LOG_ZERO, LogCount, log_int

logger = logging.getLogger(__name__)


class Structure(str, Enum):
    IRREDUCIBLE = "Irreducible"
    REDUCIBLE_WITH_IRREDUCIBLE_COMPONENT = "ReducibleWithIrreducibleComponent"
    NO_IRREDUCIBLE_COMPONENT = "NoIrreducibleComponent"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Square 0/1 matrix; ``entries[s, t] == 1`` allows ``t`` to follow ``s``."""

    entries: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.entries)
        if array.size == 0:
            array = np.zeros((0, 0), dtype=np.uint8)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise MatrixFormatError(f"transition matrix must be square, got shape {array.shape}")
        if not np.isin(array, (0, 1)).all():
            raise MatrixFormatError("transition matrix entries must be 0 or 1")
        array = array.astype(np.uint8)
        array.setflags(write=False)
        object.__setattr__(self, "entries", array)

    # -----------------------------
    # Constructors
    # -----------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "TransitionMatrix":
        return cls(np.array(rows, dtype=np.int64).reshape(len(rows), -1) if rows else np.zeros((0, 0)))

    @classmethod
    def full(cls, k: int) -> "TransitionMatrix":
        _check_alphabet(k)
        return cls(np.ones((k, k), dtype=np.uint8))

    @classmethod
    def identity(cls, k: int) -> "TransitionMatrix":
        _check_alphabet(k)
        return cls(np.eye(k, dtype=np.uint8))

    @classmethod
    def cyclic(cls, k: int) -> "TransitionMatrix":
        _check_alphabet(k)
        return cls(np.roll(np.eye(k, dtype=np.uint8), 1, axis=1))

    @classmethod
    def golden_mean(cls) -> "TransitionMatrix":
        return cls(np.array([[1, 1], [1, 0]], dtype=np.uint8))

    @classmethod
    def empty(cls) -> "TransitionMatrix":
        return cls(np.zeros((0, 0), dtype=np.uint8))

    @classmethod
    def from_json(cls, document: Dict) -> "TransitionMatrix":
        try:
            size = int(document["size"])
            rows = document["rows"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MatrixFormatError(f"matrix literal needs 'size' and 'rows': {exc}") from exc
        if len(rows) != size or any(len(row) != size for row in rows):
            raise MatrixFormatError(f"matrix literal rows do not match size {size}")
        return cls.from_rows(rows)

    # -----------------------------
    # Views
    # -----------------------------
    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    @property
    def essential(self) -> bool:
        return bool(self.entries.any(axis=1).all())

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1).astype(np.int64)

    def successors(self) -> List[List[int]]:
        return [np.flatnonzero(row).tolist() for row in self.entries]

    def submatrix(self, symbols: Sequence[int]) -> "TransitionMatrix":
        index = np.asarray(symbols, dtype=np.int64)
        return TransitionMatrix(self.entries[np.ix_(index, index)])

    def to_json(self) -> Dict:
        return {"size": self.size, "rows": self.entries.astype(int).tolist()}

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool((self.entries == other.entries).all())

    def __hash__(self) -> int:
        return hash((self.size, self.entries.tobytes()))

    def __repr__(self) -> str:
        return f"TransitionMatrix({self.entries.astype(int).tolist()})"


@dataclass(frozen=True)
class SpectralData:
    perron_value: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    tolerance: float
    iterations: int = 0
    residual: float = 0.0


def _check_alphabet(k: int) -> None:
    if k < 1:
        raise ValueError(f"alphabet size must be positive, got {k}")


# -----------------------------
# 1. Essentialization
# -----------------------------
def essential_symbols(A: TransitionMatrix) -> np.ndarray:
    """Boolean mask of symbols that survive the row-deletion fixpoint."""
    alive = np.ones(A.size, dtype=bool)
    while True:
        continues = (A.entries[:, alive] > 0).any(axis=1) & alive
        if (continues == alive).all():
            return alive
        alive = continues


def essentialize(A: TransitionMatrix) -> TransitionMatrix:
    alive = np.flatnonzero(essential_symbols(A))
    if len(alive) == A.size:
        return A
    logger.debug("essentialize: kept %d of %d symbols", len(alive), A.size)
    return A.submatrix(alive)


# -----------------------------
# 2. Word counts
# -----------------------------
def word_counts(A: TransitionMatrix, n_max: int) -> List[int]:
    """Exact counts of admissible words of lengths 1..n_max."""
    E = essentialize(A)
    if E.is_empty:
        return [0] * n_max
    successors = E.successors()
    ending = [1] * E.size
    counts = []
    for length in range(1, n_max + 1):
        if length > 1:
            ending = [sum(ending[t] for t in successors[s]) for s in range(E.size)]
        counts.append(sum(ending))
    return counts


def word_count_logs(A: TransitionMatrix, n_max: int,
                    exact_limit: int = config.EXACT_WORD_LENGTH_LIMIT) -> np.ndarray:
    """Natural logs of word counts for lengths 1..n_max.

    Lengths up to ``exact_limit`` are taken from exact integers; the rest come
    from a normalised vector iteration carrying its scale in the log domain.
    """
    logs = np.full(n_max, LOG_ZERO)
    E = essentialize(A)
    if E.is_empty or n_max < 1:
        return logs
    successors = E.successors()
    ending = [1] * E.size
    exact_upto = min(n_max, exact_limit)
    for length in range(1, exact_upto + 1):
        if length > 1:
            ending = [sum(ending[t] for t in successors[s]) for s in range(E.size)]
        logs[length - 1] = log_int(sum(ending))
    if exact_upto == n_max:
        return logs

    scale = max(ending)
    vector = np.array([value / scale for value in ending], dtype=float)
    log_scale = log_int(scale)
    matrix = E.entries.astype(float)
    for length in range(exact_upto + 1, n_max + 1):
        vector = matrix @ vector
        peak = vector.max()
        vector /= peak
        log_scale += math.log(peak)
        logs[length - 1] = log_scale + math.log(vector.sum())
    return logs


def count_words(A: TransitionMatrix, n: int, exact: Optional[bool] = None,
                exact_limit: int = config.EXACT_WORD_LENGTH_LIMIT) -> LogCount:
    """Number of admissible words of length ``n`` (entry sum of A^(n-1))."""
    if n < 1:
        raise ValueError(f"word length must be positive, got {n}")
    if exact is None:
        exact = n <= exact_limit
    if exact:
        return LogCount.from_int(word_counts(A, n)[-1])
    return LogCount.from_log(word_count_logs(A, n, exact_limit)[-1])


# -----------------------------
# 3. Graph structure
# -----------------------------
def transition_graph(A: TransitionMatrix) -> nx.DiGraph:
    return nx.from_numpy_array(A.entries, create_using=nx.DiGraph)


def irreducible_components(A: TransitionMatrix) -> List[List[int]]:
    """Strongly connected components that carry at least one cycle, sorted."""
    graph = transition_graph(A)
    components = []
    for component in nx.strongly_connected_components(graph):
        members = sorted(component)
        if len(members) > 1 or graph.has_edge(members[0], members[0]):
            components.append(members)
    return sorted(components)


def classify(A: TransitionMatrix) -> Structure:
    components = irreducible_components(A)
    if not components:
        return Structure.NO_IRREDUCIBLE_COMPONENT
    if len(components) == 1 and len(components[0]) == A.size:
        return Structure.IRREDUCIBLE
    return Structure.REDUCIBLE_WITH_IRREDUCIBLE_COMPONENT


def is_irreducible(A: TransitionMatrix) -> bool:
    return classify(A) is Structure.IRREDUCIBLE


def is_primitive(A: TransitionMatrix) -> bool:
    return is_irreducible(A) and nx.is_aperiodic(transition_graph(A))


def is_permutation(A: TransitionMatrix) -> bool:
    if A.is_empty:
        return False
    return bool((A.entries.sum(axis=0) == 1).all() and (A.entries.sum(axis=1) == 1).all())


def transitive_with_period(A: TransitionMatrix) -> bool:
    """Irreducible with a cycle: transitive and carrying a periodic point."""
    E = essentialize(A)
    return not E.is_empty and is_irreducible(E)


# -----------------------------
# 4. Spectral data
# -----------------------------
def _collatz_wielandt(matrix: np.ndarray, tol: float, max_iterations: int):
    """Perron root of an irreducible block via power iteration on ``B + I``.

    The shift makes the block primitive, and the min/max ratios of
    ``(B + I) x / x`` bracket the root at every step.
    """
    shifted = matrix + np.eye(len(matrix))
    vector = np.ones(len(matrix))
    low = high = 0.0
    for iteration in range(1, max_iterations + 1):
        image = shifted @ vector
        ratios = image / vector
        low, high = float(ratios.min()), float(ratios.max())
        vector = image / image.max()
        if high - low <= tol * max(low - 1.0, 1.0):
            return 0.5 * (low + high) - 1.0, vector / vector.sum(), iteration
    raise SpectralConvergenceError(
        f"power iteration did not converge after {max_iterations} iterations "
        f"(bracket [{low - 1.0}, {high - 1.0}])",
        last_value=0.5 * (low + high) - 1.0,
        last_vector=vector,
    )


def _extend_from_component(matrix: np.ndarray, condensed: nx.DiGraph, value: float,
                           component: List[int], block_vector: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = value * x`` given ``x`` on one component.

    States that cannot reach the component stay at zero. Every other
    component upstream of it is solved from ``(value I - M_DD) x_D = M_D,out x``
    in reverse topological order; those blocks have smaller Perron roots,
    so the system is nonsingular and the solution nonnegative.
    """
    vector = np.zeros(len(matrix))
    vector[component] = block_vector
    upstream = nx.ancestors(condensed, condensed.graph["mapping"][component[0]])
    for node in reversed(list(nx.topological_sort(condensed))):
        if node not in upstream:
            continue
        members = sorted(condensed.nodes[node]["members"])
        inflow = matrix[members] @ vector
        block = matrix[np.ix_(members, members)]
        vector[members] = np.linalg.solve(value * np.eye(len(members)) - block, inflow)
    return vector


def _outermost(candidates: List[List[int]], condensed: nx.DiGraph) -> List[int]:
    """A candidate component that no other candidate can reach."""
    mapping = condensed.graph["mapping"]
    nodes = [mapping[component[0]] for component in candidates]
    for component, node in zip(candidates, nodes):
        if not any(other != node and nx.has_path(condensed, other, node) for other in nodes):
            return component
    return candidates[0]


def spectral(A: TransitionMatrix, tol: float = config.SPECTRAL_TOLERANCE,
             max_iterations: int = config.SPECTRAL_MAX_ITERATIONS) -> SpectralData:
    """Perron value and nonnegative eigenvectors of ``A``, each summing to 1.

    The Perron value is the largest root over the irreducible components.
    The right vector is carried by a dominant component that no other
    dominant component reaches, extended to every state upstream of it; the
    left vector is the same construction on the transpose. Raises
    ``SpectralConvergenceError`` when ``|A r - λ r|∞`` exceeds ``tol · max(λ, 1)``.
    """
    if A.is_empty:
        raise ValueError("spectral data of the empty shift is undefined")
    components = irreducible_components(A)
    zeros = np.zeros(A.size)
    if not components:
        return SpectralData(0.0, zeros, zeros.copy(), tol)

    entries = A.entries.astype(float)
    solved = []
    total_iterations = 0
    for component in components:
        block = entries[np.ix_(component, component)]
        if len(component) == 1:
            value, right, left, iterations = 1.0, np.ones(1), np.ones(1), 0
        else:
            value, right, iterations = _collatz_wielandt(block, tol, max_iterations)
            _, left, _ = _collatz_wielandt(block.T, tol, max_iterations)
        total_iterations += iterations
        solved.append((value, component, right, left))

    value = max(entry[0] for entry in solved)
    if len(solved) == 1 and len(components[0]) == A.size:
        _, _, right, left = solved[0]
    else:
        dominant = [entry for entry in solved if entry[0] >= value - 100 * tol * max(value, 1.0)]
        by_first = {entry[1][0]: entry for entry in dominant}
        condensed = nx.condensation(transition_graph(A))
        reverse = condensed.reverse(copy=False)
        reverse.graph["mapping"] = condensed.graph["mapping"]
        right_component = _outermost([entry[1] for entry in dominant], condensed)
        left_component = _outermost([entry[1] for entry in dominant], reverse)
        right = _extend_from_component(entries, condensed, value, right_component,
                                       by_first[right_component[0]][2])
        left = _extend_from_component(entries.T, reverse, value, left_component,
                                      by_first[left_component[0]][3])
    right = right / right.sum()
    left = left / left.sum()

    residual = float(np.abs(entries @ right - value * right).max())
    bound = tol * max(value, 1.0)
    if residual > bound:
        raise SpectralConvergenceError(f"eigenvector residual {residual:.3g} exceeds {bound:.3g}",
                                       last_value=value, last_vector=right)
    logger.debug("spectral: perron value %.15g after %d iterations, residual %.3g", value, total_iterations, residual)
    return SpectralData(value, left, right, tol, total_iterations, residual)


def entropy(A: TransitionMatrix, tol: float = config.SPECTRAL_TOLERANCE) -> float:
    """log of the Perron value; the empty shift is assigned entropy 0."""
    E = essentialize(A)
    if E.is_empty:
        return 0.0
    return math.log(spectral(E, tol).perron_value)
