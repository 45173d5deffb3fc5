import math

import numpy as np
import pytest

from src.logdomain import LOG_ZERO
from src.mis_surface import (
    MultiplicativeSystem,
    boundary_residual,
    chain_decompose,
    count_mis,
    mis_entropy,
    parse_x_sequence,
    tree_surface_correction,
)
from src.sft1d import TransitionMatrix

GOLDEN = TransitionMatrix.golden_mean()


# === Chain decomposition ===

def test_chain_lengths_for_eight():
    decomposition = chain_decompose(8, 2)
    # 1-2-4-8, 3-6, 5, 7
    assert decomposition.multiplicities == {1: 2, 2: 1, 4: 1}
    assert decomposition.max_length == 4


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("x", [1, 2, 17, 1000, 10 ** 6])
def test_chain_conservation(x, p):
    counting = chain_decompose(x, p, method="counting")
    enumerated = chain_decompose(x, p, method="enumerate")
    assert counting.conserved
    assert counting.multiplicities == enumerated.multiplicities


def test_chain_decompose_argument_checks():
    with pytest.raises(ValueError):
        chain_decompose(0, 2)
    with pytest.raises(ValueError):
        chain_decompose(10, 1)
    with pytest.raises(ValueError):
        chain_decompose(10, 2, method="sieve")
    with pytest.raises(ValueError):
        MultiplicativeSystem(GOLDEN, 1)


# === Counts ===

@pytest.mark.parametrize("omega,p,x,expected", [
    (GOLDEN, 2, 4, 10),
    (GOLDEN, 2, 8, 96),
    (TransitionMatrix.full(2), 2, 5, 32),
    (TransitionMatrix.identity(2), 3, 9, 2 ** 6),
])
def test_known_counts(omega, p, x, expected):
    assert count_mis(MultiplicativeSystem(omega, p), x).exact == expected


def test_log_count_matches_exact_count():
    system = MultiplicativeSystem(GOLDEN, 3)
    exact = count_mis(system, 2000, exact=True)
    approx = count_mis(system, 2000, exact=False)
    assert approx.log == pytest.approx(exact.log, rel=1e-12)


def test_empty_omega_zeroes_the_count():
    dead = TransitionMatrix.from_rows([[0, 1], [0, 0]])
    system = MultiplicativeSystem(dead, 2)
    assert count_mis(system, 10).exact == 0
    assert count_mis(system, 10, exact=False).log == LOG_ZERO
    assert mis_entropy(system) == 0.0


# === Entropy ===

@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("p", [2, 3, 4, 5])
def test_full_shift_entropy(k, p):
    assert mis_entropy(MultiplicativeSystem(TransitionMatrix.full(k), p)) == pytest.approx(math.log(k), abs=1e-12)


def test_golden_mean_entropy_and_count_limit():
    system = MultiplicativeSystem(GOLDEN, 2)
    h = mis_entropy(system)
    assert h == pytest.approx(0.5713, abs=2e-3)
    per_site = [count_mis(system, 2 ** n).log / 2 ** n for n in range(8, 23, 2)]
    gaps = [abs(value - h) for value in per_site]
    assert max(gaps) < 1e-3
    assert gaps[-1] < 1e-4


def test_identity_entropy_counts_only_chains():
    # Each chain carries a constant word, so h = (1 - 1/p)^2 sum log 2 / p^(i-1) = (1 - 1/p) log 2.
    system = MultiplicativeSystem(TransitionMatrix.identity(2), 3)
    assert mis_entropy(system) == pytest.approx((2 / 3) * math.log(2), abs=1e-12)


# === Size sequences ===

def test_parse_x_sequence():
    assert parse_x_sequence("2^n+1,n=12..14") == [(4097, 12), (8193, 13), (16385, 14)]
    assert parse_x_sequence("3^n, n=2..3") == [(9, 2), (27, 3)]
    assert parse_x_sequence("4,8") == [(4, None), (8, None)]
    assert parse_x_sequence("16") == [(16, None)]
    for bad in ("abc", "0", "", "2^n-5,n=1..3"):
        with pytest.raises(ValueError):
            parse_x_sequence(bad)


# === Boundary residuals ===

def test_residual_is_log_count_minus_bulk():
    frame = boundary_residual(MultiplicativeSystem(GOLDEN, 2), [1000, 4096])
    for row in frame.itertuples():
        assert row.residual == pytest.approx(row.log_count - row.bulk, abs=1e-8)
        assert row.difference == pytest.approx(row.residual - row.predicted)


def test_residual_vanishes_for_the_full_shift():
    frame = boundary_residual(MultiplicativeSystem(TransitionMatrix.full(2), 2), parse_x_sequence("2^n+1,n=4..8"))
    assert np.allclose(frame["residual"], 0.0, atol=1e-9)


def test_residual_stays_bounded_along_powers_of_two():
    frame = boundary_residual(MultiplicativeSystem(GOLDEN, 2), parse_x_sequence("2^n,n=12..22"))
    assert list(frame["r_n"]) == list(range(12, 23))
    assert np.all(np.abs(frame["residual"].to_numpy(dtype=float)) <= 1e-4)
    assert np.all(np.abs(frame["residual_over_n"].to_numpy(dtype=float)) <= 1e-5)


# === Tree surface correction ===

@pytest.mark.parametrize("d", [2, 3])
def test_surface_counts_match_partition_product_and_dp(d):
    frame = tree_surface_correction(GOLDEN, d, 6)
    assert frame["dp_match"].tolist() == [True] * 7
    for row in frame.itertuples():
        assert row.log_count == pytest.approx(math.log(row.exact_count), rel=1e-12)
        assert row.surface == pytest.approx(row.log_count - row.bulk, abs=1e-7)


def test_surface_vanishes_for_the_full_shift():
    frame = tree_surface_correction(TransitionMatrix.full(2), 2, 12)
    assert np.allclose(frame["surface"], 0.0, atol=1e-9)


def test_surface_over_depth_is_bounded():
    frame = tree_surface_correction(GOLDEN, 2, 30)
    ratios = frame["surface_over_n"].dropna().to_numpy(dtype=float)
    assert len(ratios) == 30
    assert np.all(np.abs(ratios) <= 1.0)
    assert frame["surface_over_ball"].abs().iloc[-1] < 1e-6


def test_surface_share_of_the_ternary_ball_decreases():
    frame = tree_surface_correction(GOLDEN, 3, 20)
    shares = frame["surface_over_ball"].abs().to_numpy(dtype=float)
    assert (frame["surface"] > 0).all()
    assert np.all(np.diff(shares) < 0)
    assert shares[-1] < 1e-8


def test_surface_needs_branching():
    with pytest.raises(ValueError):
        tree_surface_correction(GOLDEN, 1, 3)


def test_deep_surface_stays_in_float_range():
    frame = tree_surface_correction(GOLDEN, 3, 640)
    assert np.isfinite(frame["log_count"].to_numpy(dtype=float)).all()
    assert np.isfinite(frame["surface"].to_numpy(dtype=float)).all()
    assert frame["surface_over_ball"].abs().iloc[-1] < 1e-290
    with pytest.raises(ValueError):
        tree_surface_correction(GOLDEN, 3, 700)
