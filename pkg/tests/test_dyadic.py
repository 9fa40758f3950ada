import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levlab import dyadic as D
from levlab._common import ArgumentError, bump


def ball_bump(L=0.8):
    return lambda X: bump(np.linalg.norm(X, axis=1) / L)


# ------------------------------------------------------------ covers

def test_cover_level_one_line():
    # closed cubes must sit inside the open ball, so [-1, -1/2] and [1/2, 1] drop out
    c = D.build_cover(1.0, 1, 1)
    np.testing.assert_array_equal(c.indices.ravel(), [-1, 0])
    np.testing.assert_array_equal(c.corners.ravel(), [-0.5, 0.0])
    assert c.volume == 1.0


def test_cover_level_zero_unit_square():
    c = D.build_cover(1.0, 0, 2)
    assert c.empty and c.volume == 0


def test_cover_disc_counts():
    c = D.build_cover(1.0, 2, 2)
    # 4x4 quarter grid minus the corner cubes that touch the circle
    assert c.indices.shape[0] == 32
    assert c.volume < math.pi


@given(st.floats(0.3, 2.0), st.integers(0, 5), st.integers(1, 3))
def test_cover_cubes_lie_in_ball(L, n, d):
    c = D.build_cover(L, n, d)
    if c.empty:
        return
    assert np.all(np.linalg.norm(np.maximum(np.abs(c.indices), np.abs(c.indices + 1)),
                                 axis=1) * c.side < L)
    assert c.volume <= D.ball_volume(L, d) + 1e-12


@given(st.integers(1, 5))
def test_cover_volume_increases_with_level(n):
    assert D.build_cover(1.0, n, 2).volume <= D.build_cover(1.0, n + 1, 2).volume


def test_cover_contains():
    c = D.build_cover(1.0, 1, 2)
    inside = c.contains(np.array([[0.1, 0.1], [-0.4, 0.3], [0.9, 0.9]]))
    np.testing.assert_array_equal(inside, [True, True, False])


def test_cover_arguments():
    with pytest.raises(ArgumentError):
        D.build_cover(0.0, 1)
    with pytest.raises(ArgumentError):
        D.build_cover(1.0, -1)
    with pytest.raises(ArgumentError):
        D.build_cover(1.0, 12, 3)


@pytest.mark.parametrize("d, expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_ball_volume(d, expected):
    assert D.ball_volume(1.0, d) == pytest.approx(expected, rel=1e-14)


# ------------------------------------------------------------ kernels, probes

def test_probe_set_is_deterministic_and_in_ball():
    a = D.probe_set(2.0, 2, 300, seed=5)
    b = D.probe_set(2.0, 2, 300, seed=5)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (300, 2)
    assert np.linalg.norm(a, axis=1).max() < 2.0
    assert not np.array_equal(a, D.probe_set(2.0, 2, 300, seed=6))


def test_exponential_kernel_values():
    g = D.exponential_kernel(2)
    val = g(np.array([[1.0, 2.0]]), np.array([[0.5, -0.25]]))
    assert val[0, 0] == pytest.approx(1.0 + 0j)
    assert g.lipschitz(3.0, 1.0) == 3.0


def test_lipschitz_estimate_brackets_exact():
    est = D.estimate_lipschitz(D.exponential_kernel(2), 1.0, 2.0, 2)
    assert 2.0 * 0.9 < est <= 2.0 * 2.0 + 1e-6


# ------------------------------------------------------------ measures

def test_atomic_measure_validation():
    with pytest.raises(ArgumentError):
        D.RadonMeasureRep.atomic([[0, 0]], [1, 2])
    with pytest.raises(ArgumentError):
        D.RadonMeasureRep.atomic([[0, 0]], [-1])


def test_density_must_be_nonnegative():
    mu = D.RadonMeasureRep.lebesgue(lambda X: -np.ones(X.shape[0]))
    with pytest.raises(ArgumentError):
        mu.weigh(np.zeros((3, 1)))


# ------------------------------------------------------------ approximation

@pytest.mark.parametrize("n", [4, 5, 6])
def test_certificate_holds(n):
    w = D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(2),
                      n, tau=2.0, eps=1.0, L=1.0, dim=2)
    assert w.empirical_error <= w.certified_bound
    assert w.sup_check <= w.mass_bound * (1 + 1e-12)
    assert np.abs(w.coeffs).sum() <= w.mass_bound * (1 + 1e-12)


def test_lipschitz_term_halves_per_level():
    terms = []
    for n in (4, 5, 6):
        w = D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(2),
                          n, tau=2.0, eps=1.0, L=1.0, dim=2, check=False)
        c = w.components
        terms.append(c["M_tau"] * c["diameter"] * c["l1_norm"])
    ratios = np.array(terms[1:]) / np.array(terms[:-1])
    assert np.all((ratios > 0.4) & (ratios < 0.6))


def test_level_too_coarse_reports_minimum():
    with pytest.raises(D.LevelTooCoarse) as info:
        D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(2),
                      4, tau=2.0, eps=0.5, L=1.0, dim=2)
    assert info.value.level == 4 and info.value.minimal_level == 5


def test_atoms_on_corners_are_reproduced_exactly():
    pts = np.array([[0.0], [0.25], [-0.5]])
    mu = D.RadonMeasureRep.atomic(pts, [1.0, 2.0, 0.5])
    w = D.approximate(lambda X: np.ones(X.shape[0]), mu, D.exponential_kernel(1), 2,
                      tau=3.0, eps=0.1, L=1.0, dim=1)
    assert w.empirical_error < 1e-14
    assert w.coeffs.sum().real == pytest.approx(3.5)


def test_zero_function_gives_zero_weights():
    w = D.approximate(lambda X: np.zeros(X.shape[0]), D.RadonMeasureRep.lebesgue(),
                      D.exponential_kernel(1), 3, tau=1.0, eps=0.5, L=1.0, dim=1)
    assert w.certified_bound == 0 and np.all(w.coeffs == 0)


def test_node_weights_json_round_trip():
    w = D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(1),
                      4, tau=2.0, eps=0.5, L=1.0, dim=1)
    back = D.NodeWeights.from_dict(w.to_dict())
    np.testing.assert_array_equal(back.coeffs, w.coeffs)
    lam = np.linspace(-2, 2, 9)
    np.testing.assert_array_equal(D.evaluate_nodes(back, D.exponential_kernel(1), lam),
                                  D.evaluate_nodes(w, D.exponential_kernel(1), lam))


def test_arguments_checked():
    with pytest.raises(ArgumentError):
        D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(1),
                      4, tau=0.0, eps=0.5, L=1.0, dim=1)
    with pytest.raises(ArgumentError):
        D.approximate(ball_bump(), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(1),
                      4, tau=1.0, eps=0.5, dim=1)


@given(st.integers(0, 50), st.sampled_from([3, 4, 5]))
def test_certificate_holds_for_any_probe_seed(seed, n):
    w = D.approximate(ball_bump(0.7), D.RadonMeasureRep.lebesgue(), D.exponential_kernel(1),
                      n, tau=4.0, eps=0.5, L=1.0, dim=1, probes=200, seed=seed)
    assert w.empirical_error <= w.certified_bound


@given(st.floats(0.1, 3.0))
def test_weights_scale_linearly(c):
    mu, g = D.RadonMeasureRep.lebesgue(), D.exponential_kernel(1)
    a = D.approximate(ball_bump(), mu, g, 4, 1.0, 0.5, L=1.0, dim=1, check=False)
    b = D.approximate(lambda X: c * ball_bump()(X), mu, g, 4, 1.0, 0.5, L=1.0, dim=1,
                      check=False)
    np.testing.assert_allclose(b.coeffs, c * a.coeffs, rtol=1e-12, atol=1e-15)
