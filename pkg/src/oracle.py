"""
Brute-force pattern counts for small shapes.

Every cell is assigned a symbol of the raw alphabet in an order where each
constraint partner comes first, so partial assignments can be rejected
early. A cell starting or ending a line must carry a symbol that continues
forever both ways in that axis's shift.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

import config
from src.cayley import MarkovCayleyTree, ball_geometry
from src.errors import BudgetExceededError
from src.grid_axial import Box, GridAxialSpec
from src.mis_surface import MultiplicativeSystem
from src.sft1d import TransitionMatrix, essential_symbols

logger = logging.getLogger(__name__)

Link = Tuple[int, np.ndarray]


@dataclass(frozen=True)
class EnumerationBudget:
    max_assignments: int = config.ORACLE_MAX_ASSIGNMENTS
    max_cells: int = config.ORACLE_MAX_CELLS

    def check_cells(self, cells: int) -> None:
        if cells > self.max_cells:
            raise BudgetExceededError(f"{cells} cells exceed the oracle limit of {self.max_cells}")


def _count_assignments(alphabet: int, allowed: List[np.ndarray], links: List[List[Link]],
                       budget: EnumerationBudget) -> int:
    cells = len(allowed)
    budget.check_cells(cells)
    if cells == 0:
        return 1
    values = [0] * cells
    visited = 0

    def candidates(k: int) -> np.ndarray:
        mask = allowed[k].copy()
        for earlier, matrix in links[k]:
            mask &= matrix[values[earlier]]
        return mask

    def extend(k: int) -> int:
        nonlocal visited
        mask = candidates(k)
        if k == cells - 1:
            return int(mask.sum())
        total = 0
        for symbol in np.flatnonzero(mask).tolist():
            visited += 1
            if visited > budget.max_assignments:
                raise BudgetExceededError(f"enumeration passed {budget.max_assignments} partial assignments")
            values[k] = symbol
            total += extend(k + 1)
        return total

    count = extend(0)
    logger.debug("oracle: %d cells, alphabet %d, %d partial assignments, count %d", cells, alphabet, visited, count)
    return count


def _as_bool(A: TransitionMatrix) -> np.ndarray:
    return A.entries.astype(bool)


def brute_grid(spec: GridAxialSpec, box: Box, budget: EnumerationBudget = EnumerationBudget()) -> int:
    """|P(box, X_1 × ... × X_d)| by direct enumeration."""
    if len(box.dims) != spec.d:
        raise ValueError(f"box {box} has {len(box.dims)} extents for {spec.d} axes")
    budget.check_cells(box.cells)
    alphabet = spec.alphabet_size
    matrices = [_as_bool(A) for A in spec.axes]
    ends = [essential_symbols(A) for A in spec.axes]
    coords = list(np.ndindex(*box.dims))
    index = {coord: k for k, coord in enumerate(coords)}

    allowed, links = [], []
    for coord in coords:
        mask = np.ones(alphabet, dtype=bool)
        cell_links = []
        for i, extent in enumerate(box.dims):
            if coord[i] > 0:
                before = coord[:i] + (coord[i] - 1,) + coord[i + 1:]
                cell_links.append((index[before], matrices[i]))
            else:
                mask &= ends[i]
            if coord[i] == extent - 1:
                mask &= ends[i]
        allowed.append(mask)
        links.append(cell_links)
    return _count_assignments(alphabet, allowed, links, budget)


def brute_tree(tree: MarkovCayleyTree, axes: Sequence[TransitionMatrix], depth: int,
               budget: EnumerationBudget = EnumerationBudget()) -> int:
    """|P(Δ_depth)| on a Markov–Cayley tree; the d-tree is ``MarkovCayleyTree.full(d)``."""
    if len(axes) != tree.d:
        raise ValueError(f"tree has {tree.d} generators but {len(axes)} axes were given")
    alphabet = axes[0].size
    matrices = [_as_bool(A) for A in axes]
    ends = [essential_symbols(A) for A in axes]
    vertices = ball_geometry(tree, depth)
    budget.check_cells(len(vertices))

    allowed, links = [], []
    for vertex in vertices:
        mask = np.ones(alphabet, dtype=bool)
        for j in range(tree.d):
            if j not in vertex.children or j != vertex.generator:
                mask &= ends[j]
        allowed.append(mask)
        links.append([] if vertex.parent is None else [(vertex.parent, matrices[vertex.generator])])
    return _count_assignments(alphabet, allowed, links, budget)


def brute_mis(system: MultiplicativeSystem, x: int, budget: EnumerationBudget = EnumerationBudget()) -> int:
    """Admissible words on positions 1..x: position ip follows position i in Ω."""
    budget.check_cells(x)
    omega = system.omega
    alphabet = omega.size
    matrix = _as_bool(omega)
    ends = essential_symbols(omega)

    allowed, links = [], []
    for position in range(1, x + 1):
        mask = np.ones(alphabet, dtype=bool)
        if position * system.p > x or position % system.p:
            mask &= ends
        allowed.append(mask)
        if position % system.p == 0:
            links.append([(position // system.p - 1, matrix)])
        else:
            links.append([])
    return _count_assignments(alphabet, allowed, links, budget)
