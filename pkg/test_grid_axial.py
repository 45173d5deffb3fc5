import math

import pytest

from src.errors import BudgetExceededError
from src.grid_axial import (
    Box,
    GridAxialSpec,
    count_box,
    dense_matrix,
    entropy_closed_dense,
    entropy_estimate_grid,
    full_extension_entropy_grid,
    full_extension_grid_spec,
    match_dense,
    transfer_matrix,
    verify_dense_count,
    verify_full_extension_grid_count,
)
from src.sft1d import TransitionMatrix

GOLDEN = TransitionMatrix.golden_mean()
HARD_SQUARE = GridAxialSpec.isotropic_power(GOLDEN, 2)
LN2 = math.log(2)

SPECS_2D = {
    "hard_square": HARD_SQUARE,
    "full_identity": GridAxialSpec((TransitionMatrix.full(2), TransitionMatrix.identity(2))),
    "a12": GridAxialSpec.isotropic_power(dense_matrix(1, 2), 2),
    "cyclic_a12": GridAxialSpec((TransitionMatrix.cyclic(3), dense_matrix(1, 2))),
}


# === Box counts ===

@pytest.mark.parametrize("spec,box,expected", [
    (HARD_SQUARE, "2x2", 7),
    (GridAxialSpec.isotropic_power(TransitionMatrix.full(2), 2), "2x3", 64),
    (SPECS_2D["a12"], "2x1", 4),
    (HARD_SQUARE, "1x1", 2),
])
def test_known_box_counts(spec, box, expected):
    assert count_box(spec, Box.parse(box)).exact == expected


@pytest.mark.parametrize("name", sorted(SPECS_2D))
@pytest.mark.parametrize("dims", [(1, 1), (2, 3), (3, 2), (4, 4)])
def test_sweep_matches_transfer(name, dims):
    spec = SPECS_2D[name]
    sweep = count_box(spec, Box(dims), method="exact")
    transfer = count_box(spec, Box(dims), method="transfer")
    assert sweep.exact == transfer.exact


@pytest.mark.parametrize("dims", [(2, 3), (4, 1), (3, 5)])
def test_isotropic_counts_are_transpose_symmetric(dims):
    box = Box(dims)
    assert count_box(HARD_SQUARE, box).exact == count_box(HARD_SQUARE, box.transposed()).exact


def test_counts_are_subadditive_along_an_axis():
    whole = count_box(HARD_SQUARE, Box((5, 3))).exact
    parts = count_box(HARD_SQUARE, Box((2, 3))).exact * count_box(HARD_SQUARE, Box((3, 3))).exact
    assert whole <= parts


def test_three_dimensional_sweep():
    spec = GridAxialSpec.isotropic_power(TransitionMatrix.full(2), 3)
    assert count_box(spec, Box((2, 2, 2))).exact == 2 ** 8
    assert count_box(GridAxialSpec.isotropic_power(GOLDEN, 3), Box((1, 1, 2))).exact == 3


def test_nonessential_symbols_never_appear():
    dead = TransitionMatrix.from_rows([[1, 1, 0], [0, 0, 1], [0, 0, 0]])
    spec = GridAxialSpec((dead, TransitionMatrix.full(3)))
    assert spec.symbols().tolist() == [0]
    assert count_box(spec, Box((3, 3))).exact == 1


def test_box_budget():
    with pytest.raises(BudgetExceededError):
        count_box(HARD_SQUARE, Box((9, 9)), method="exact")
    with pytest.raises(ValueError):
        count_box(HARD_SQUARE, Box((2, 2, 2)))
    with pytest.raises(ValueError):
        Box.parse("3xq")


def test_transfer_matrix_of_the_hard_square():
    transfer, columns = transfer_matrix(HARD_SQUARE, 2)
    assert columns == [(0, 0), (0, 1), (1, 0)]
    assert transfer.tolist() == [[1, 1, 1], [1, 0, 1], [1, 1, 0]]


# === The dense family dense(m, n) ===

@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 2])
def test_dense_box_count(m, n, k):
    assert verify_dense_count(m, n, k)


def test_dense_matrix_shapes():
    assert dense_matrix(1, 1) == TransitionMatrix.full(2)
    assert dense_matrix(2, 3).size == 6
    assert match_dense(dense_matrix(2, 3)) == (2, 3)
    assert match_dense(GOLDEN) is None
    with pytest.raises(ValueError):
        dense_matrix(0, 2)
    with pytest.raises(ValueError):
        dense_matrix(12, 1, max_size=100)
    with pytest.raises(ValueError, match="DENSE_MAX_MATRIX_SIZE"):
        dense_matrix(12, 2)


# === Entropy estimates ===

def test_full_shift_strips():
    spec = GridAxialSpec.isotropic_power(TransitionMatrix.full(2), 2)
    report = entropy_estimate_grid(spec, max_box=4)
    assert report.estimates == pytest.approx([LN2] * 4, abs=1e-12)


def test_hard_square_strip_band():
    report = entropy_estimate_grid(HARD_SQUARE, max_box=8)
    assert 0.40 <= report.estimate <= 0.45
    assert report.monotone


@pytest.mark.parametrize("m,n", [(1, 1), (1, 2), (2, 3)])
def test_dense_strip_estimate(m, n):
    spec = GridAxialSpec.isotropic_power(dense_matrix(m, n), 2)
    report = entropy_estimate_grid(spec, max_box=4)
    assert report.closed_form == pytest.approx(m * LN2 / n, abs=1e-15)
    assert report.estimate == pytest.approx(entropy_closed_dense(m, n), abs=1e-6)


def test_one_dimensional_estimate_is_exact():
    report = entropy_estimate_grid(GridAxialSpec((GOLDEN,)))
    assert report.value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_cube_estimates_in_three_dimensions():
    spec = GridAxialSpec.isotropic_power(TransitionMatrix.full(2), 3)
    report = entropy_estimate_grid(spec, max_box=2)
    assert report.estimates == pytest.approx([LN2, LN2], abs=1e-12)


# === Full extensions ===

def test_full_extension_strips_equal_the_inner_entropy():
    spec = full_extension_grid_spec(GridAxialSpec((GOLDEN,)), 1)
    report = entropy_estimate_grid(spec, max_box=6)
    log_rho = math.log((1 + math.sqrt(5)) / 2)
    assert report.estimates == pytest.approx([log_rho] * 6, abs=1e-10)


def test_full_extension_entropy():
    report = full_extension_entropy_grid(GridAxialSpec((GOLDEN,)), 2)
    assert report.value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)
    assert full_extension_entropy_grid(None, 2, alphabet_size=3).value == pytest.approx(math.log(3))


@pytest.mark.parametrize("dims", [(3, 2), (2, 1), (4, 3)])
def test_full_extension_count_identity(dims):
    assert verify_full_extension_grid_count(GridAxialSpec((GOLDEN,)), 1, Box(dims))
