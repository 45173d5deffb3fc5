"""Resolution of matrix references: JSON literals, JSON files and named presets."""

import json
import re
from pathlib import Path
from typing import Callable, Dict, List

from src.errors import MatrixFormatError, UnknownPresetError
from src.grid_axial import dense_matrix
from src.sft1d import TransitionMatrix

_SIZED_PRESETS: Dict[str, Callable[[int], TransitionMatrix]] = {
    "full": TransitionMatrix.full,
    "identity": TransitionMatrix.identity,
    "cyclic": TransitionMatrix.cyclic,
}

# Generator adjacency matrices of the Markov–Cayley trees used throughout.
ADJACENCY_PRESETS: Dict[str, List[List[int]]] = {
    "golden_mean": [[1, 1], [1, 0]],
    "gm": [[1, 1], [1, 0]],
    "g1": [[1, 1], [0, 1]],
}


def parse_matrix_ref(ref: str) -> TransitionMatrix:
    """Resolve ``ref`` to a transition matrix.

    Accepted forms: an inline JSON object ``{"size": k, "rows": [...]}``, a
    path to such a file, ``golden_mean``, ``full:k``, ``identity:k``,
    ``cyclic:k`` and ``dense:m,n`` (also spelled ``thm21:m,n``).
    """
    ref = ref.strip()
    if ref.startswith("{"):
        try:
            return TransitionMatrix.from_json(json.loads(ref))
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"malformed matrix literal: {exc}") from exc
    if ref.endswith(".json"):
        path = Path(ref)
        if not path.exists():
            raise MatrixFormatError(f"matrix file not found: {ref}")
        try:
            return TransitionMatrix.from_json(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"malformed matrix file {ref}: {exc}") from exc
    if ref == "golden_mean":
        return TransitionMatrix.golden_mean()

    match = re.fullmatch(r"(full|identity|cyclic):(\d+)", ref)
    if match:
        k = int(match.group(2))
        if k < 1:
            raise MatrixFormatError(f"preset {ref!r} needs a positive size")
        return _SIZED_PRESETS[match.group(1)](k)
    match = re.fullmatch(r"(?:dense|thm21):(\d+),(\d+)", ref)
    if match:
        try:
            return dense_matrix(int(match.group(1)), int(match.group(2)))
        except ValueError as exc:
            raise MatrixFormatError(str(exc)) from exc
    raise UnknownPresetError(f"unknown matrix preset {ref!r}")


def parse_adjacency_ref(ref: str) -> TransitionMatrix:
    """Generator adjacency for a Markov–Cayley tree; ``full:d`` is the d-tree."""
    if ref in ADJACENCY_PRESETS:
        return TransitionMatrix.from_rows(ADJACENCY_PRESETS[ref])
    return parse_matrix_ref(ref)
