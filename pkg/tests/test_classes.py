import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptlin import classes as cl
from adaptlin import funcspace as fs


def _fog(g, values):
    return fs.FunctionOnGrid(g, np.asarray(values, dtype=float))


def test_decreasing_m3():
    g = fs.make_grid(3)
    sys_ = cl.build_class(cl.decreasing(), g)
    rows = list(sys_.iter_rows())
    assert len(rows) == 2  # v2 <= v1, v3 <= v2
    assert cl.contains(sys_, _fog(g, [2.0, 1.0, 0.0]))
    assert not cl.contains(sys_, _fog(g, [0.0, 1.0, 0.0]), tol=1e-6)


def test_lipschitz_alpha1_adjacent_only():
    g = fs.make_grid(3)
    sys_ = cl.build_class(cl.lipschitz(1.0, 2.0), g)
    assert all(f.offset == 1 for f in sys_.pair_families)
    # adjacent constraints imply all pairs for alpha = 1
    up, _ = cl.implied_diff_bounds(sys_, 2)
    assert up[2] == pytest.approx(2 * 2.0 * g.delta)


def test_lipschitz_alpha_half_feasibility():
    g = fs.make_grid(16)
    sys_ = cl.build_class(cl.lipschitz(0.5, 1.0), g, window="all")
    zero = fs.constant(g, 0.0)
    assert cl.contains(sys_, zero)
    root = _fog(g, np.sqrt(np.abs(g.points)))
    assert cl.contains(sys_, root, tol=1e-12)
    assert not cl.contains(sys_, 2.0 * root, tol=1e-6)


def test_contains_boundary_equality():
    # dyadic grid and M=1 make the extreme slope function exact in floats
    g = fs.make_grid(16)
    sys_ = cl.build_class(cl.lipschitz(1.0, 1.0), g)
    ramp = _fog(g, g.points.copy())
    assert cl.contains(sys_, ramp, tol=0.0)


def test_contains_monotone_examples():
    g = fs.make_grid(8)
    sys_ = cl.build_class(cl.decreasing(), g)
    assert cl.contains(sys_, _fog(g, -g.points))
    assert not cl.contains(sys_, _fog(g, g.points), tol=1e-9)


def test_one_sided_classes_constrain_one_half():
    g = fs.make_grid(17)
    right = cl.build_class(cl.right_lipschitz(1.0, 1.0), g)
    # free on the left half, constrained on the right
    v = np.zeros(g.m)
    v[: g.m // 2] = np.linspace(50, 0, g.m // 2)  # wild on the left
    assert cl.contains(right, _fog(g, v))
    v2 = np.zeros(g.m)
    v2[-1] = 1.0  # jump inside [0, 1/2]
    assert not cl.contains(right, _fog(g, v2), tol=1e-6)


def test_intersection_concatenates():
    g = fs.make_grid(8)
    spec = cl.intersection(cl.decreasing(), cl.lipschitz(1.0, 1.0))
    sys_ = cl.build_class(spec, g)
    kinds = {f.upper for f in sys_.pair_families}
    assert 0.0 in kinds  # decreasing rows
    assert any(u > 0 for u in kinds)  # lipschitz rows


def test_box_rows():
    g = fs.make_grid(4)
    sys_ = cl.build_class(cl.box(2.0), g)
    assert cl.contains(sys_, fs.constant(g, 2.0), tol=0.0)
    assert not cl.contains(sys_, fs.constant(g, 2.1), tol=1e-6)


def test_default_window():
    assert cl.default_window(16) == 4
    assert cl.default_window(4097) == 1025


def test_alpha_out_of_range_rejected():
    with pytest.raises(ValueError):
        cl.lipschitz(1.5, 1.0)
    with pytest.raises(ValueError):
        cl.lipschitz(0.0, 1.0)


def test_grammar_round_trip():
    texts = [
        "decreasing+lipschitz(alpha=1,M=1)",
        "lipschitz(alpha=0.5,M=2.5)",
        "left_lipschitz(alpha=0.5,M=2)+right_lipschitz(alpha=1,M=2)",
        "decreasing",
        "box(B=3)",
    ]
    for t in texts:
        spec = cl.parse_class_spec(t)
        assert cl.parse_class_spec(spec.canonical()).canonical() == spec.canonical()


@given(
    st.lists(
        st.sampled_from(["decreasing", "lipschitz", "right_lipschitz", "left_lipschitz"]),
        min_size=1,
        max_size=3,
        unique=True,
    ),
    st.floats(min_value=0.1, max_value=1.0),
    st.floats(min_value=0.01, max_value=100.0),
)
@settings(max_examples=50, deadline=None)
def test_grammar_round_trip_random(kinds, alpha, M):
    parts = []
    for k in kinds:
        if k == "decreasing":
            parts.append(cl.decreasing())
        else:
            parts.append(cl.ClassSpec(k, alpha=alpha, bound=M))
    spec = cl.intersection(*parts)
    assert cl.parse_class_spec(spec.canonical()).canonical() == spec.canonical()


def test_convexity_random_combinations():
    # random convex combinations of feasible points stay feasible
    rng = np.random.default_rng(3)
    g = fs.make_grid(24)
    spec = cl.parse_class_spec("decreasing+lipschitz(alpha=0.5,M=1)")
    sys_ = cl.build_class(spec, g)
    a = _fog(g, np.minimum(np.sqrt(np.maximum(-g.points, 0.0)), 0.4))
    b = fs.constant(g, 0.2)
    assert cl.contains(sys_, a, tol=1e-12) and cl.contains(sys_, b)
    for _ in range(20):
        lam = rng.uniform()
        mix = lam * a + (1 - lam) * b
        assert cl.contains(sys_, mix, tol=1e-10)


def test_nesting_by_domination():
    g = fs.make_grid(33)
    small = cl.build_class(cl.parse_class_spec("lipschitz(alpha=1,M=1)"), g)
    big = cl.build_class(cl.parse_class_spec("lipschitz(alpha=1,M=2)"), g)
    assert cl.dominates(small, big)
    assert not cl.dominates(big, small)
    # Hölder nesting on a domain of diameter <= 1: F(1, M) within F(0.5, M)
    rough = cl.build_class(cl.parse_class_spec("lipschitz(alpha=0.5,M=1)"), g)
    assert cl.dominates(small, rough)
    assert not cl.dominates(rough, small)
    # decreasing+lipschitz within plain lipschitz
    mono = cl.build_class(cl.parse_class_spec("decreasing+lipschitz(alpha=1,M=1)"), g)
    assert cl.dominates(mono, small)
    assert not cl.dominates(small, mono)


def test_window_pruning_matches_all_pairs_feasibility():
    # default window keeps the same members on test functions at small m
    g = fs.make_grid(32)
    spec = cl.parse_class_spec("lipschitz(alpha=0.5,M=1)")
    pruned = cl.build_class(spec, g)
    full = cl.build_class(spec, g, window="all")
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.standard_normal(g.m) * 0.05
        f = _fog(g, np.cumsum(v) * 0.2)
        if cl.contains(full, f, tol=1e-9):
            assert cl.contains(pruned, f, tol=1e-9)


def test_closed_form_monotone_family():
    # between-class value at alpha1=1, M1=1
    r = cl.closed_form_modulus("monotone", "f1f2", dict(alpha1=1.0, M1=1.0, alpha2=0.5, M2=1.0), 1e-3)
    assert r.value == pytest.approx(3 ** (1 / 3) * 1e-2, rel=1e-12)
    assert r.constant_source == "paper"
    # same-class value at alpha2 = 0.5: constant (alpha2 + 1/2) = 1
    r2 = cl.closed_form_modulus("monotone", "f2", dict(alpha1=1.0, M1=1.0, alpha2=0.5, M2=1.0), 1e-2)
    assert r2.value == pytest.approx(0.1, rel=1e-12)


def test_closed_form_two_sided_exponent():
    # gamma = max(min(a1,b1), min(a2,b2)) = 0.5 -> exponent 2g/(2g+1) = 0.5
    r = cl.closed_form_modulus(
        "two_sided", "f1f2", dict(alpha1=1.0, beta1=0.5, alpha2=0.25, beta2=1.0), 0.01
    )
    assert r.exponent == pytest.approx(0.5)
    assert r.constant_source == "unit"


def test_closed_form_monotonicity_concavity_in_eps():
    eps = np.geomspace(1e-4, 1e-1, 12)
    vals = [
        cl.closed_form_modulus("monotone", "f1", dict(alpha1=0.8, M1=2.0, alpha2=0.3, M2=1.0), e).value
        for e in eps
    ]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    # concavity of C*eps^q in eps for q < 1 via midpoints
    for a, b in zip(eps, eps[1:]):
        mid = cl.closed_form_modulus(
            "monotone", "f1", dict(alpha1=0.8, M1=2.0, alpha2=0.3, M2=1.0), (a + b) / 2
        ).value
        lo = cl.closed_form_modulus("monotone", "f1", dict(alpha1=0.8, M1=2.0, alpha2=0.3, M2=1.0), a).value
        hi = cl.closed_form_modulus("monotone", "f1", dict(alpha1=0.8, M1=2.0, alpha2=0.3, M2=1.0), b).value
        assert mid >= (lo + hi) / 2 - 1e-12


def test_closed_form_rejects_bad_params():
    with pytest.raises(ValueError):
        cl.closed_form_modulus("monotone", "f1", dict(alpha1=0.5, M1=1.0, alpha2=0.9, M2=1.0), 0.01)
    with pytest.raises(ValueError):
        cl.closed_form_modulus("monotone", "f1", dict(alpha1=1.0, M1=1.0, alpha2=0.5, M2=1.0), -1.0)
    with pytest.raises(ValueError):
        cl.closed_form_modulus("unknown", "f1", {}, 0.01)
