"""
Multiplicative integer systems on N and surface corrections.

A configuration x_1..x_N belongs to X_Ω^p when every geometric chain
i, ip, ip², ... (p ∤ i) reads a word of Ω. Chains are disjoint, so counts
factor over chain lengths.
"""

import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import config
from src.logdomain import LOG_ZERO, LogCount, log_int
from src.sft1d import TransitionMatrix, essentialize, word_count_logs, word_counts
from src.tree_axial import (
    BallProfile,
    TreeAxialSpec,
    ball_size,
    count_ball,
    full_extension_entropy_tree,
    full_extension_tree_spec,
    partition_product,
)

logger = logging.getLogger(__name__)

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class MultiplicativeSystem:
    omega: TransitionMatrix
    p: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"multiplicative step must be at least 2, got {self.p}")

    @property
    def alphabet_size(self) -> int:
        return max(essentialize(self.omega).size, 1)


@dataclass(frozen=True)
class ChainDecomposition:
    length: int
    p: int
    multiplicities: Dict[int, int]

    @property
    def max_length(self) -> int:
        return max(self.multiplicities) if self.multiplicities else 0

    @property
    def conserved(self) -> bool:
        return sum(ell * count for ell, count in self.multiplicities.items()) == self.length


def _multiplicities_by_counting(x: int, p: int) -> Dict[int, int]:
    def chain_starts(y: int) -> int:
        return y - y // p

    multiplicities = {}
    ell, power = 1, 1
    while power <= x:
        count = chain_starts(x // power) - chain_starts(x // (power * p))
        if count:
            multiplicities[ell] = count
        ell += 1
        power *= p
    return multiplicities


def _multiplicities_by_enumeration(x: int, p: int) -> Dict[int, int]:
    starts = np.arange(1, x + 1, dtype=np.int64)
    starts = starts[starts % p != 0]
    remaining = x // starts
    lengths = np.zeros_like(starts)
    while (remaining > 0).any():
        lengths += remaining > 0
        remaining //= p
    tally = np.bincount(lengths)
    return {ell: int(count) for ell, count in enumerate(tally) if ell and count}


def chain_decompose(x: int, p: int, method: str = "counting") -> ChainDecomposition:
    """Chain-length multiplicities of [1, x]; ``method`` is counting or enumerate."""
    if x < 1 or p < 2:
        raise ValueError(f"need x >= 1 and p >= 2, got x={x}, p={p}")
    if method == "counting":
        multiplicities = _multiplicities_by_counting(x, p)
    elif method == "enumerate":
        multiplicities = _multiplicities_by_enumeration(x, p)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ChainDecomposition(x, p, dict(sorted(multiplicities.items())))


def count_mis(system: MultiplicativeSystem, x: int, exact: Optional[bool] = None) -> LogCount:
    """Π_ℓ |Ω_ℓ|^{mult(ℓ)} over the chains of [1, x]."""
    decomposition = chain_decompose(x, system.p)
    words = word_counts(system.omega, decomposition.max_length)
    if exact is None:
        exact = x <= config.MIS_EXACT_MAX_LENGTH
    if exact:
        return LogCount.from_int(math.prod(words[ell - 1] ** m for ell, m in decomposition.multiplicities.items()))
    if any(words[ell - 1] == 0 for ell in decomposition.multiplicities):
        return LogCount.from_log(LOG_ZERO)
    return LogCount.from_log(math.fsum(m * log_int(words[ell - 1]) for ell, m in decomposition.multiplicities.items()))


# -----------------------------
# Entropy series
# -----------------------------
def _weighted_tail(alphabet: int, p: int, I: int) -> float:
    """log(alphabet) Σ_{i>I} i / p^{i-1}, a bound on the tail of Σ log|Ω_i| / p^{i-1}."""
    x = 1.0 / p
    return math.log(alphabet) * ((I + 1) * x ** I - I * x ** (I + 1)) / (1.0 - x) ** 2


def _terms_for(alphabet: int, p: int, tol: float, start: int = 1) -> int:
    I = start
    while _weighted_tail(alphabet, p, I) >= tol:
        I += 1
        if I > config.MAX_SERIES_TERMS:
            break
    return I


def mis_entropy(system: MultiplicativeSystem, tail_tol: float = config.RESIDUAL_TAIL_TOLERANCE) -> float:
    """h = (1-1/p)² Σ_{i≥1} log|Ω_i| / p^{i-1}."""
    p = system.p
    I = _terms_for(system.alphabet_size, p, tail_tol)
    logs = word_count_logs(system.omega, I)
    if np.isneginf(logs).any():
        return 0.0
    logger.debug("mis series: %d terms", I)
    return (1.0 - 1.0 / p) ** 2 * math.fsum(logs[i - 1] / p ** (i - 1) for i in range(1, I + 1))


def _largest_power_at_most(x: int, base: int) -> int:
    r, power = 0, base
    while power <= x:
        r += 1
        power *= base
    return r


def parse_x_sequence(text: str) -> List[Tuple[int, Optional[int]]]:
    """Sizes from ``"16"``, ``"4,8,16"`` or ``"2^n+1,n=12..22"``.

    Returns ``(x, n)`` pairs; ``n`` is set for exponent sequences.
    """
    text = text.replace(" ", "")
    match = re.fullmatch(r"(\d+)\^n([+-]\d+)?,n=(\d+)\.\.(\d+)", text)
    if match:
        base = int(match.group(1))
        shift = int(match.group(2) or 0)
        low, high = int(match.group(3)), int(match.group(4))
        pairs = [(base ** n + shift, n) for n in range(low, high + 1)]
    else:
        try:
            pairs = [(int(part), None) for part in text.split(",") if part]
        except ValueError as exc:
            raise ValueError(f"cannot read size sequence {text!r}") from exc
    if not pairs or any(x < 1 for x, _ in pairs):
        raise ValueError(f"size sequence {text!r} must contain positive sizes")
    return pairs


def boundary_residual(system: MultiplicativeSystem, xs: Sequence, tail_tol: float = config.RESIDUAL_TAIL_TOLERANCE) -> pd.DataFrame:
    """Residual log count − x h against the predicted tail term for each x.

    ``xs`` holds sizes or ``(x, n)`` pairs. The residual is assembled as
    Σ_ℓ (mult(ℓ) − w_ℓ) log|Ω_ℓ| minus the weight beyond the longest chain,
    with w_ℓ = x (1−1/p)² / p^{ℓ−1}, which avoids cancelling two values of
    size x.
    """
    p = system.p
    factor = (1.0 - 1.0 / p) ** 2
    h = mis_entropy(system, tail_tol)
    rows = []
    for item in xs:
        x, n = item if isinstance(item, tuple) else (item, None)
        decomposition = chain_decompose(x, p)
        longest = decomposition.max_length
        reach = _terms_for(system.alphabet_size, p, tail_tol / max(x, 1), start=longest + 1)
        logs = word_count_logs(system.omega, reach)
        r_n = _largest_power_at_most(x, p)
        if np.isneginf(logs).any():
            log_count, residual, predicted = LOG_ZERO, LOG_ZERO, 0.0
        else:
            log_count = math.fsum(m * logs[ell - 1] for ell, m in decomposition.multiplicities.items())
            residual = math.fsum(
                (decomposition.multiplicities.get(ell, 0) - x * factor / p ** (ell - 1)) * logs[ell - 1]
                for ell in range(1, longest + 1)
            ) - x * factor * math.fsum(logs[ell - 1] / p ** (ell - 1) for ell in range(longest + 1, reach + 1))
            predicted = factor * math.fsum(x / p ** (i - 1) * logs[i - 1] for i in range(r_n + 1, reach + 1))
        rows.append({
            "x": x,
            "n": n,
            "r_n": r_n,
            "log_count": log_count,
            "bulk": x * h,
            "residual": residual,
            "predicted": predicted,
            "difference": residual - predicted,
            "residual_over_n": residual / n if n else None,
        })
    return pd.DataFrame(rows, columns=["x", "n", "r_n", "log_count", "bulk", "residual",
                                       "predicted", "difference", "residual_over_n"])


def _surface_reach(alphabet: int, d: int, n: int, tol: float) -> int:
    """Word length past which the tail terms scaled by d^{n+2} fall below ``tol``.

    Works with the log of ``d^{n+2} · _weighted_tail`` so deep balls neither
    overflow the scale nor underflow the tail.
    """
    reach = n + 1
    if alphabet <= 1:
        return reach
    x = 1.0 / d
    log_scale = (n + 2) * math.log(d) - math.log(tol) + math.log(math.log(alphabet)) - 2.0 * math.log(1.0 - x)
    while reach < config.MAX_SERIES_TERMS:
        if log_scale + reach * math.log(x) + math.log(reach + 1 - reach * x) < 0.0:
            break
        reach += 1
    return reach


# -----------------------------
# Tree surface correction for E^{d-1} × Ω
# -----------------------------
def tree_surface_correction(omega: TransitionMatrix, d: int, n_max: int,
                            tail_tol: float = config.RESIDUAL_TAIL_TOLERANCE) -> pd.DataFrame:
    """Leading term and surface correction of log|P(Δ_n, E^{d-1} × Ω)| on the d-tree.

    Inner depth-(j-1) balls are words of length j. The surface term is
    computed as L_{n+1} − (d−1) Σ_{j>n} d^{n−j} L_j + h/(d−1), with
    L_j = log|Ω_j|, which equals log count − |Δ_n| h.
    """
    if d < 2:
        raise ValueError("the surface correction needs d >= 2")
    if (n_max + 1) * math.log(d) >= _LOG_FLOAT_MAX:
        raise ValueError(f"depth {n_max} on the {d}-tree gives ball sizes beyond floating point range")
    report = full_extension_entropy_tree(BallProfile.from_words(omega), d, d - 1, tail_tol)
    h = report.value
    alphabet = max(essentialize(omega).size, 1)
    exact_words = word_counts(omega, config.TREE_SURFACE_EXACT_DEPTH + 1)
    extension = full_extension_tree_spec(TreeAxialSpec((omega,)), d - 1)

    rows = []
    for n in range(n_max + 1):
        ball = ball_size(d, n)
        reach = _surface_reach(alphabet, d, n, tail_tol)
        L = word_count_logs(omega, reach)
        if np.isneginf(L).any():
            rows.append({"n": n, "ball_size": ball, "log_count": LOG_ZERO})
            continue
        log_count = L[n] + math.fsum((d - 1) * d ** (n - j) * L[j - 1] for j in range(1, n + 1))
        surface = L[n] - (d - 1) * math.fsum(L[j - 1] / d ** (j - n) for j in range(n + 1, reach + 1)) + h / (d - 1)
        r_n = _largest_power_at_most(ball, d)
        predicted = (d - 1) ** 2 * math.fsum(ball / d ** (i - 1) * L[i - 1] for i in range(r_n + 1, reach + 1))
        exact_count, dp_match = None, None
        if n <= config.TREE_SURFACE_EXACT_DEPTH:
            exact_count = partition_product(exact_words, d, d - 1, n)
            dp_match = count_ball(extension, n, exact=True).total_exact == exact_count
        rows.append({
            "n": n,
            "ball_size": ball,
            "exact_count": exact_count,
            "dp_match": dp_match,
            "log_count": log_count,
            "bulk": ball * h,
            "surface": surface,
            "predicted": predicted,
            "unexplained": surface - predicted,
            "surface_over_n": surface / n if n and d == 2 else None,
            "surface_over_ball": surface / ball,
        })
    return pd.DataFrame(rows, columns=["n", "ball_size", "exact_count", "dp_match", "log_count", "bulk", "surface",
                                       "predicted", "unexplained", "surface_over_n", "surface_over_ball"])
