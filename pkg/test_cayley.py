import math

import pytest

from src.cayley import (
    MarkovCayleyTree,
    RHO,
    ball_geometry,
    cayley_entropy_estimate,
    count_ball_cayley,
    g1_entropy,
    gm_entropy_E_times_X,
    gm_entropy_X_times_E,
    levels,
    strict_inequality_probe,
    verify_gm_partitions,
)
from src.errors import HypothesisError
from src.sft1d import TransitionMatrix
from src.tree_axial import TreeAxialSpec, count_ball

LN2 = math.log(2)
GOLDEN = TransitionMatrix.golden_mean()
E2 = TransitionMatrix.full(2)
AXES_X = {
    "identity": TransitionMatrix.identity(2),
    "golden": GOLDEN,
    "full": E2,
}


# === Tree geometry ===

def test_golden_mean_levels_are_fibonacci():
    tree_levels = levels(MarkovCayleyTree.golden_mean(), 6)
    assert tree_levels.level_sizes == [1, 2, 3, 5, 8, 13, 21]
    assert tree_levels.ball_sizes == [1, 3, 6, 11, 19, 32, 53]
    assert [tree_levels.a(i) for i in (1, 2, 3)] == [1, 2, 3]
    assert tree_levels.growth_rate == pytest.approx(RHO, abs=1e-12)
    with pytest.raises(ValueError):
        tree_levels.a(0)


def test_golden_mean_ball_sizes_close_the_fibonacci_sum():
    tree_levels = levels(MarkovCayleyTree.golden_mean(), 42)
    a = tree_levels.a
    assert a(1) == 1 and a(2) == 2
    for n in range(1, 41):
        assert a(n + 2) == a(n + 1) + a(n)
    for n in range(41):
        assert tree_levels.ball_sizes[n] == sum(a(i) for i in range(1, n + 2)) == a(n + 3) - 2


def test_full_branching_share():
    tree_levels = levels(MarkovCayleyTree.golden_mean(), 5)
    # Type-1 vertices keep both children; at level n there are F_n of them.
    assert tree_levels.full_branching[1:] == [1, 2, 3, 5, 8]
    assert tree_levels.branching_ratio(5) == pytest.approx(8 / 13)


@pytest.mark.parametrize("tree,gamma", [
    (MarkovCayleyTree.golden_mean(), RHO),
    (MarkovCayleyTree.full(2), 2.0),
])
def test_growth_ratio_limit(tree, gamma):
    tree_levels = levels(tree, 200)
    assert tree_levels.growth_ratio(200) == pytest.approx((gamma - 1) / gamma, abs=1e-6)


def test_g1_tree_grows_linearly():
    tree_levels = levels(MarkovCayleyTree.g1(), 5)
    assert tree_levels.level_sizes == [1, 2, 3, 4, 5, 6]
    assert tree_levels.growth_rate == 1.0


def test_ball_geometry():
    vertices = ball_geometry(MarkovCayleyTree.golden_mean(), 2)
    assert len(vertices) == 6
    assert vertices[0].children == {0: 1, 1: 2}
    # f_2 may not follow f_2.
    assert list(vertices[2].children) == [0]
    assert all(v.parent is None or v.parent < i for i, v in enumerate(vertices))


# === Typed ball counts ===

def test_e_times_identity_depth_one():
    assert count_ball_cayley(MarkovCayleyTree.golden_mean(), (E2, AXES_X["identity"]), 1).total_exact == 4


def test_g1_e_times_golden_depth_two():
    assert count_ball_cayley(MarkovCayleyTree.g1(), (E2, GOLDEN), 2).total_exact == 30


@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_full_tree_matches_d_tree_counts(n):
    axes = (GOLDEN, TransitionMatrix.identity(2))
    cayley = count_ball_cayley(MarkovCayleyTree.full(2), axes, n).total_exact
    assert cayley == count_ball(TreeAxialSpec(axes), n).total_exact


def test_exact_and_log_typed_counts_agree():
    tree = MarkovCayleyTree.golden_mean()
    exact = count_ball_cayley(tree, (GOLDEN, E2), 8, exact=True)
    approx = count_ball_cayley(tree, (GOLDEN, E2), 8, exact=False)
    assert approx.total_log == pytest.approx(math.log(exact.total_exact), rel=1e-12)


def test_axis_count_must_match_generators():
    with pytest.raises(ValueError):
        count_ball_cayley(MarkovCayleyTree.golden_mean(), (GOLDEN,), 2)


# === Golden-mean tree closed forms ===

def test_full_shift_collapse():
    assert gm_entropy_E_times_X(E2) == pytest.approx(LN2, abs=1e-12)
    assert gm_entropy_X_times_E(E2, tail_tol=1e-14) == pytest.approx(LN2, abs=1e-12)


def test_identity_closed_forms():
    identity = AXES_X["identity"]
    assert gm_entropy_E_times_X(identity) == pytest.approx(LN2 * (1 / RHO ** 3 + 1 / RHO ** 2), abs=1e-12)
    assert gm_entropy_X_times_E(identity, tail_tol=1e-14) == pytest.approx(LN2 / RHO ** 2, abs=1e-12)


@pytest.mark.parametrize("name", sorted(AXES_X))
def test_closed_forms_against_dp(name):
    X = AXES_X[name]
    tree = MarkovCayleyTree.golden_mean()
    assert cayley_entropy_estimate(tree, (E2, X), 30) == pytest.approx(gm_entropy_E_times_X(X), abs=1e-2)
    assert cayley_entropy_estimate(tree, (X, E2), 30) == pytest.approx(gm_entropy_X_times_E(X), abs=1e-2)


@pytest.mark.parametrize("name", sorted(AXES_X))
def test_partition_identities(name):
    check = verify_gm_partitions(AXES_X[name], 8)
    assert check
    assert check.failed_at is None


# === Strict inequality and the linear-growth tree ===

@pytest.mark.parametrize("name", ["identity", "golden"])
def test_strict_margins_on_golden_mean_tree(name):
    probe = strict_inequality_probe(MarkovCayleyTree.golden_mean(), AXES_X[name], 30)
    assert probe.margin_E_times_X >= 0.05
    assert probe.margin_X_times_E >= 0.05
    assert probe.growth_limit == pytest.approx((RHO - 1) / RHO)
    assert 0 < probe.branching_ratio < 1


def test_strict_probe_on_the_binary_tree_reports_the_series():
    probe = strict_inequality_probe(MarkovCayleyTree.full(2), GOLDEN, 16)
    assert probe.series_value is not None
    assert probe.as_dict()["series_value"] == probe.series_value


def test_strict_probe_needs_exponential_growth():
    with pytest.raises(HypothesisError):
        strict_inequality_probe(MarkovCayleyTree.g1(), GOLDEN, 10)


def test_g1_limit_is_the_line_entropy():
    report = g1_entropy(GOLDEN, 2000)
    assert report.closed_form == pytest.approx(math.log(RHO), abs=1e-12)
    assert report.error <= 2e-3
    assert report.cauchy < 1e-5


def test_g1_estimates_for_the_full_shift_are_exact():
    report = g1_entropy(E2, 30)
    assert report.sizes == list(range(1, 31))
    assert report.estimates == pytest.approx([LN2] * 30, rel=1e-12)


def test_g1_needs_a_primitive_axis():
    with pytest.raises(HypothesisError):
        g1_entropy(TransitionMatrix.identity(2), 10)
