"""
Axial products of one-dimensional SFTs on the lattice N^d.

A box labeling is admissible when every line parallel to axis i reads a word
of X_i. Counting uses either a lexicographic cell sweep with a memoised
profile (any d) or, in two dimensions, a column-transfer matrix.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import reduce
from operator import mul
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from src.errors import BudgetExceededError
from src.logdomain import LogCount, log_int
from src.reports import EntropyReport
from src.sft1d import TransitionMatrix, essential_symbols, spectral, entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridAxialSpec:
    axes: Tuple[TransitionMatrix, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise ValueError("a grid axial product needs at least one axis")
        sizes = {A.size for A in axes}
        if len(sizes) != 1:
            raise ValueError(f"axes must share one alphabet, got sizes {sorted(sizes)}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def isotropic_power(cls, A: TransitionMatrix, d: int) -> "GridAxialSpec":
        return cls((A,) * d)

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def alphabet_size(self) -> int:
        return self.axes[0].size

    @property
    def isotropic(self) -> bool:
        return all(A == self.axes[0] for A in self.axes)

    def symbols(self) -> np.ndarray:
        """Symbols essential for every axis (the only ones a line can carry)."""
        keep = reduce(np.logical_and, (essential_symbols(A) for A in self.axes))
        return np.flatnonzero(keep)

    def compact_axes(self) -> List[np.ndarray]:
        """Boolean axis matrices restricted to :meth:`symbols`."""
        index = self.symbols()
        return [A.entries[np.ix_(index, index)].astype(bool) for A in self.axes]


@dataclass(frozen=True)
class Box:
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims or any(n < 1 for n in dims):
            raise ValueError(f"box extents must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def parse(cls, text: str) -> "Box":
        try:
            return cls(tuple(int(part) for part in text.lower().split("x")))
        except ValueError as exc:
            raise ValueError(f"cannot read box {text!r}; expected e.g. 4x2") from exc

    @property
    def cells(self) -> int:
        return reduce(mul, self.dims, 1)

    def transposed(self) -> "Box":
        return Box(tuple(reversed(self.dims)))

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.dims)


# -----------------------------
# 1. Exact counting by cell sweep
# -----------------------------
def _count_by_sweep(axes: List[np.ndarray], dims: Tuple[int, ...],
                    max_states: int) -> int:
    alphabet = axes[0].shape[0]
    if alphabet == 0:
        return 0
    strides = [reduce(mul, dims[i + 1:], 1) for i in range(len(dims))]
    window = strides[0]
    states: Dict[Tuple[int, ...], int] = {(): 1}
    for coord in np.ndindex(*dims):
        checks = [(axes[i], strides[i]) for i in range(len(dims)) if coord[i] > 0]
        advanced: Dict[Tuple[int, ...], int] = defaultdict(int)
        for profile, ways in states.items():
            allowed = np.ones(alphabet, dtype=bool)
            for matrix, stride in checks:
                allowed &= matrix[profile[-stride]]
            for symbol in np.flatnonzero(allowed).tolist():
                key = profile + (symbol,)
                if len(key) > window:
                    key = key[1:]
                advanced[key] += ways
        states = advanced
        if not states:
            return 0
        if len(states) > max_states:
            raise BudgetExceededError(
                f"profile of {len(states)} states exceeds GRID_MAX_PROFILE_STATES={max_states}; "
                "use the transfer path or a smaller box"
            )
    return sum(states.values())


# -----------------------------
# 2. Column-transfer matrices
# -----------------------------
def column_words(vertical: np.ndarray, height: int) -> List[Tuple[int, ...]]:
    """Words of length ``height`` along a compact boolean axis matrix, sorted."""
    words = [(s,) for s in range(vertical.shape[0])]
    for _ in range(height - 1):
        words = [w + (t,) for w in words for t in np.flatnonzero(vertical[w[-1]]).tolist()]
    return words


def transfer_matrix(spec: GridAxialSpec, width: int,
                    max_columns: int = config.TRANSFER_MAX_COLUMNS) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """Width-``width`` column-transfer matrix of a 2-D spec.

    Columns are words of the axis-2 shift; ``T[c, c']`` is 1 when every row of
    the pair ``(c, c')`` is an axis-1 transition.
    """
    if spec.d != 2:
        raise ValueError("transfer matrices are defined for 2-D specs only")
    horizontal, vertical = spec.compact_axes()
    columns = column_words(vertical, width)
    if len(columns) > max_columns:
        raise BudgetExceededError(
            f"width {width} has {len(columns)} admissible columns, over TRANSFER_MAX_COLUMNS={max_columns}"
        )
    if not columns:
        return np.zeros((0, 0), dtype=np.uint8), columns
    stack = np.array(columns, dtype=np.int64)
    transfer = np.ones((len(columns), len(columns)), dtype=bool)
    for row in range(width):
        transfer &= horizontal[np.ix_(stack[:, row], stack[:, row])]
    return transfer.astype(np.uint8), columns


def _count_by_transfer(spec: GridAxialSpec, box: Box) -> int:
    n1, n2 = box.dims
    transfer, columns = transfer_matrix(spec, n2)
    if not columns:
        return 0
    matrix = transfer.astype(np.int64).astype(object)
    vector = np.array([1] * len(columns), dtype=object)
    for _ in range(n1 - 1):
        vector = matrix.dot(vector)
    return int(sum(vector))


def count_box(spec: GridAxialSpec, box: Box, method: str = "auto",
              max_cells: int = config.GRID_EXACT_MAX_CELLS,
              max_states: int = config.GRID_MAX_PROFILE_STATES) -> LogCount:
    """Exact number of admissible labelings of ``box``.

    ``method`` is ``"exact"`` (cell sweep), ``"transfer"`` (2-D only) or
    ``"auto"``, which prefers the sweep inside the cell budget.
    """
    if len(box.dims) != spec.d:
        raise ValueError(f"box {box} has {len(box.dims)} extents for a {spec.d}-dimensional spec")
    if method == "auto":
        method = "exact" if box.cells <= max_cells or spec.d != 2 else "transfer"
    if method == "transfer":
        if spec.d != 2:
            raise ValueError("the transfer path is 2-D only")
        return LogCount.from_int(_count_by_transfer(spec, box))
    if method != "exact":
        raise ValueError(f"unknown counting method {method!r}")
    if box.cells > max_cells:
        raise BudgetExceededError(
            f"box {box} has {box.cells} cells, over GRID_EXACT_MAX_CELLS={max_cells}; "
            "use --transfer or a smaller box"
        )
    return LogCount.from_int(_count_by_sweep(spec.compact_axes(), box.dims, max_states))


# -----------------------------
# 3. The dense-entropy family dense(m, n)
# -----------------------------
def dense_matrix(m: int, n: int, max_size: int = config.DENSE_MAX_MATRIX_SIZE) -> TransitionMatrix:
    """Transition matrix on 2^m + n - 1 states whose shift has entropy m log 2 / n.

    Block states 0..2^m-1 lead to the first chain state, the chain advances
    one step at a time, and its last state returns to every block state.
    With n = 1 there is no chain and the block is the full 2^m shift.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got ({m}, {n})")
    if m > 62 or 2 ** m + n - 1 > max_size:
        raise ValueError(f"dense({m}, {n}) would have more than DENSE_MAX_MATRIX_SIZE={max_size} states")
    block = 2 ** m
    if n == 1:
        return TransitionMatrix.full(block)
    size = block + n - 1
    entries = np.zeros((size, size), dtype=np.uint8)
    entries[:block, block] = 1
    for state in range(block, size - 1):
        entries[state, state + 1] = 1
    entries[size - 1, :block] = 1
    return TransitionMatrix(entries)


def match_dense(A: TransitionMatrix) -> Optional[Tuple[int, int]]:
    """Recover ``(m, n)`` when ``A`` is exactly ``dense_matrix(m, n)``."""
    m = 1
    while 2 ** m <= A.size:
        n = A.size - 2 ** m + 1
        if dense_matrix(m, n) == A:
            return m, n
        m += 1
    return None


def entropy_closed_dense(m: int, n: int) -> float:
    return m * math.log(2.0) / n


def verify_dense_count(m: int, n: int, k: int, method: str = "auto") -> bool:
    spec = GridAxialSpec.isotropic_power(dense_matrix(m, n), 2)
    count = count_box(spec, Box((k * n, k)), method=method)
    expected = n * 2 ** (m * k * k)
    if count.exact != expected:
        logger.warning("A(%d,%d) box %dx%d: counted %s, expected %d", m, n, k * n, k, count.exact, expected)
    return count.exact == expected


# -----------------------------
# 4. Entropy estimates
# -----------------------------
def _dense_closed_form(spec: GridAxialSpec) -> Optional[float]:
    if not spec.isotropic or spec.d < 2:
        return None
    match = match_dense(spec.axes[0])
    return entropy_closed_dense(*match) if match else None


def entropy_estimate_grid(spec: GridAxialSpec, max_box: int = config.GRID_DEFAULT_MAX_BOX) -> EntropyReport:
    """Strip estimates ``log λ(T_w) / w`` in 2-D; cube estimates otherwise.

    For d = 1 the value is exact, log of the Perron value.
    """
    if spec.d == 1:
        return EntropyReport(quantity="grid", closed_form=entropy(spec.axes[0]),
                             diagnostics={"method": "perron"})
    if max_box > config.TRANSFER_MAX_WIDTH and spec.d == 2:
        raise BudgetExceededError(f"strip width {max_box} exceeds TRANSFER_MAX_WIDTH={config.TRANSFER_MAX_WIDTH}")

    sizes, estimates = [], []
    for width in range(1, max_box + 1):
        if spec.d == 2:
            transfer, columns = transfer_matrix(spec, width)
            if not columns:
                value = 0.0
            else:
                value = math.log(max(spectral(TransitionMatrix(transfer)).perron_value, 1.0)) / width
        else:
            count = count_box(spec, Box((width,) * spec.d), method="exact")
            value = max(count.log, 0.0) / width ** spec.d
        sizes.append(width)
        estimates.append(value)
        logger.debug("grid estimate at size %d: %.15g", width, value)

    report = EntropyReport(
        quantity="grid",
        closed_form=_dense_closed_form(spec),
        sizes=sizes,
        estimates=estimates,
        diagnostics={"method": "strip" if spec.d == 2 else "cube"},
    )
    if not report.monotone:
        logger.warning("grid estimates are not monotone: %s", estimates)
    report.diagnostics["monotone"] = report.monotone
    return report


# -----------------------------
# 5. Full axial extensions
# -----------------------------
def full_extension_grid_spec(inner: GridAxialSpec, r: int) -> GridAxialSpec:
    """The product with ``r`` extra full-shift axes placed after the inner ones."""
    full = TransitionMatrix.full(inner.alphabet_size)
    return GridAxialSpec(inner.axes + (full,) * r)


def full_extension_entropy_grid(inner: Optional[GridAxialSpec], r: int, alphabet_size: Optional[int] = None,
                                max_box: int = config.GRID_DEFAULT_MAX_BOX) -> EntropyReport:
    """Entropy of ``X ⊗ E^r``, which equals the entropy of the inner product ``X``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if inner is None:
        if not alphabet_size:
            raise ValueError("a pure full shift needs its alphabet size")
        return EntropyReport(quantity="full_extension_grid", closed_form=math.log(alphabet_size),
                             diagnostics={"r": r, "inner_d": 0})
    inner_report = entropy_estimate_grid(inner, max_box)
    closed = inner_report.closed_form
    if inner.d == 1:
        closed = entropy(inner.axes[0])
    return EntropyReport(
        quantity="full_extension_grid",
        closed_form=closed,
        sizes=inner_report.sizes,
        estimates=inner_report.estimates,
        diagnostics={"r": r, "inner_d": inner.d, "inner_cauchy": inner_report.cauchy},
    )


def verify_full_extension_grid_count(inner: GridAxialSpec, r: int, box: Box) -> bool:
    """|P(box, X ⊗ E^r)| equals |P(inner box, X)| to the power of the E-extent volume."""
    if len(box.dims) != inner.d + r:
        raise ValueError("box dimension must equal inner dimension plus r")
    whole = count_box(full_extension_grid_spec(inner, r), box, method="exact")
    inner_box = Box(box.dims[:inner.d])
    part = count_box(inner, inner_box, method="exact")
    return whole.exact == part.exact ** reduce(mul, box.dims[inner.d:], 1)
