import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levlab._common import ArgumentError, RepresentationError
from levlab.weights import (WeightFunction, classify_levinson, levinson_partial,
                            psi_norm, psi_scale)

W = WeightFunction


# ------------------------------------------------------------ frozen values

@pytest.mark.parametrize("desc, r, expected", [
    ("power:0.5", 4.0, 2.0),
    ("power:1", 7.5, 7.5),
    ("lin-log:1", 1.0, 1.0),
    ("lin-log:1", math.e, math.e / 2),
    ("lin-log:2", math.e, math.e / 4),
    ("lin-log:2", math.e**3, math.e**3 / 16),
    ("const-log:2", math.e - 1, 3.0),
    ("sqrt", 9.0, 3.0),
])
def test_builtin_values(desc, r, expected):
    assert W.parse(desc)(r) == pytest.approx(expected, rel=1e-15)


def test_lin_log_is_continuous_at_the_knee():
    psi = W.lin_log(3)
    knee = math.e**2
    assert psi(knee * (1 - 1e-12)) == pytest.approx(psi(knee * (1 + 1e-12)), rel=1e-9)


def test_vector_evaluation_keeps_shape():
    out = W.power(0.5)(np.array([[1.0, 4.0], [9.0, 16.0]]))
    np.testing.assert_array_equal(out, [[1, 2], [3, 4]])


@pytest.mark.parametrize("desc, R, expected", [
    ("power:0.5", 100.0, 2 * (1 - 100**-0.5)),
    ("lin-log:1", 1e6, math.log(1 + math.log(1e6))),
    # r/4 on [1, e], then r/(1+log r)^2
    ("lin-log:2", 1e6, 0.25 + 0.5 - 1 / (1 + math.log(1e6))),
])
def test_partial_integral_closed_forms(desc, R, expected):
    assert levinson_partial(W.parse(desc), R) == pytest.approx(expected, rel=1e-10)


# ------------------------------------------------------------ classifier

@pytest.mark.parametrize("desc, verdict", [
    ("lin-log:1", "divergent"),
    ("lin-log:0.999999", None),
    ("lin-log:2", "convergent"),
    ("lin-log:1.01", "convergent"),
    ("power:1", "divergent"),
    ("power:0.999", "convergent"),
    ("power:0.5", "convergent"),
    ("const-log:0", "convergent"),
])
def test_closed_form_verdicts(desc, verdict):
    if verdict is None:
        with pytest.raises(RepresentationError):
            W.parse(desc)
        return
    v = classify_levinson(W.parse(desc))
    assert v.verdict == verdict
    assert v.method == "closed-form rule"


def test_numeric_divergence_detected_for_table():
    r = np.geomspace(1, 1e8, 400)
    v = classify_levinson(W.tabulated(r, r * 10.0), threshold=50.0)
    assert v.verdict == "divergent"


def test_numeric_convergence_detected_for_closure():
    v = classify_levinson(W.custom(lambda r: r**0.5, name="root"))
    assert v.verdict == "convergent"
    assert v.method == "numeric extrapolation"


def test_short_table_is_undecided():
    r = np.geomspace(2, 50, 40)
    v = classify_levinson(W.tabulated(r, r / (1 + np.log(r)) ** 1.5))
    assert v.verdict == "undecided" and not v.decided


@given(st.floats(0.05, 1.0))
def test_numeric_path_never_contradicts_closed_form(a):
    closure = W.custom(lambda r, a=a: r**a, name="p")
    numeric = classify_levinson(closure).verdict
    assert numeric in (classify_levinson(W.power(a)).verdict, "undecided")


@given(st.floats(1.0, 4.0))
def test_lin_log_closure_never_contradicts_closed_form(k):
    base = W.lin_log(k)
    numeric = classify_levinson(W.custom(base, name="ll")).verdict
    assert numeric in (classify_levinson(base).verdict, "undecided")


def test_classifier_argument_checks():
    with pytest.raises(ArgumentError):
        classify_levinson(W.power(1), horizon=1.0)
    with pytest.raises(ArgumentError):
        classify_levinson(W.power(1), threshold=0)
    with pytest.raises(ArgumentError):
        classify_levinson(lambda r: r)


def test_verdict_serialises():
    d = classify_levinson(W.lin_log(1)).to_dict()
    assert d["verdict"] == "divergent" and len(d["partial_sums"]) == 65


# ------------------------------------------------------------ construction

@pytest.mark.parametrize("bad", ["bogus:1", "power:x", "power:1.5", "power:0", "lin-log:0.5",
                                 "const-log:-1"])
def test_parse_rejects(bad):
    with pytest.raises(RepresentationError):
        W.parse(bad)


def test_table_validation():
    with pytest.raises(RepresentationError):
        W.tabulated([0, 1, 1], [0, 1, 2])
    with pytest.raises(RepresentationError):
        W.tabulated([0, 1, 2], [0, 2, 1])
    with pytest.raises(RepresentationError):
        W.tabulated([0, 1, 2], [0, 0.1, 0.5])
    with pytest.raises(RepresentationError):
        W.tabulated([0, 1], [0, np.nan])


def test_table_extrapolates_with_last_slope():
    psi = W.tabulated([0, 1, 2], [0, 1, 3])
    assert psi(0.5) == 0.5
    assert psi(4.0) == 7.0


def test_from_csv(tmp_path):
    good = tmp_path / "w.csv"
    good.write_text("# comment\nr,psi\n0,0\n1,1\n4,2\n")
    assert W.from_csv(good)(2.5) == pytest.approx(1.5)
    bad = tmp_path / "bad.csv"
    bad.write_text("r,psi\n0,0\n1,oops\n")
    with pytest.raises(RepresentationError):
        W.from_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("r,psi\n")
    with pytest.raises(RepresentationError):
        W.from_csv(empty)


def test_custom_validation():
    with pytest.raises(RepresentationError):
        W.custom(lambda r: -r)
    with pytest.raises(RepresentationError):
        W.custom(lambda r: np.cos(r) + 2)


def test_immutable_and_negative_radius():
    psi = W.power(0.5)
    with pytest.raises(AttributeError):
        psi.scale = 2.0
    with pytest.raises(ArgumentError):
        psi(-1.0)


def test_descriptor():
    assert W.parse("lin-log:2").descriptor == "lin-log:2"
    assert psi_scale(W.power(1), 4).descriptor == "0.25*power:1"


# ------------------------------------------------------------ norms

def test_psi_norm_pair():
    psi = W.power(1)
    radii = np.array([0.0, 1.0, 2.0])
    values = np.array([0.5, math.e, 1.0])
    assert psi_norm((radii, values), psi) == pytest.approx(1.0)


def test_psi_norm_empty():
    with pytest.raises(ArgumentError):
        psi_norm((np.array([]), np.array([])), W.power(1))


def test_psi_scale_argument():
    with pytest.raises(ArgumentError):
        psi_scale(W.power(1), 0)
    with pytest.raises(ArgumentError):
        psi_scale(W.power(1), 1.5)


# ------------------------------------------------------------ properties

families = st.one_of(
    st.floats(0.05, 1.0).map(W.power),
    st.floats(1.0, 4.0).map(W.lin_log),
    st.floats(0.0, 5.0).map(W.const_log),
)


@given(families, st.lists(st.floats(0, 1e9), min_size=2, max_size=30))
def test_builtins_nondecreasing_and_nonnegative(psi, rs):
    r = np.sort(np.array(rs))
    v = psi(r)
    assert np.all(v >= 0)
    assert np.all(np.diff(v) >= -1e-12 * np.abs(v[1:]))


@given(families, st.floats(0.1, 10.0), st.floats(0, 1e6))
def test_scaling_is_linear(psi, c, r):
    assert psi.scaled(c)(r) == pytest.approx(c * psi(r), rel=1e-12)


@given(families, st.integers(1, 8))
def test_scaling_preserves_class(psi, d):
    assert classify_levinson(psi_scale(psi, d)).verdict == classify_levinson(psi).verdict
