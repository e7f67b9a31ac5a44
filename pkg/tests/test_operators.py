import numpy as np
import pytest

from fejerlab.errors import DimensionMismatchError
from fejerlab.geometry import (
    AffineSubspace,
    Ball,
    Halfspace,
    Hyperplane,
    Ray,
    sample_witnesses,
)
from fejerlab.operators import (
    AffineMap,
    AveragednessCertificate,
    Composition,
    ConvexCombination,
    DouglasRachford,
    Identity,
    Linear,
    Negation,
    Projector,
    Reflector,
    ScalarPiecewiseLinear,
    Translation,
    apply,
    certify,
    fixed_set_description,
    random_scalar_piecewise_linear,
    two_ball_gap_vector,
    verify_averaged,
    verify_nonexpansive,
)
from fejerlab.operators import _spectral_norm


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def test_negation_on_the_line():
    assert np.array_equal(apply(Negation(), [5.0]), [-5.0])


def test_translation():
    T = Translation([1.0, -2.0])
    assert np.array_equal(apply(T, [0.0, 0.0]), [1.0, -2.0])


def test_dr_fixes_intersection_points():
    A = B = Ball([0.0, 0.0], 1.0)
    T = DouglasRachford(A, B)
    x = np.array([0.5, 0.0])
    assert np.allclose(apply(T, x), x, atol=1e-14)


def test_composition_and_combination():
    T = Composition(Translation([1.0]), Negation())
    assert np.array_equal(apply(T, [2.0]), [-1.0])  # outer(inner(x))
    S = ConvexCombination(0.25, Identity(), Negation())
    assert np.allclose(apply(S, [4.0]), [0.75 * 4.0 - 0.25 * 4.0])


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        apply(Translation([1.0, 0.0]), [1.0])
    with pytest.raises(DimensionMismatchError):
        ConvexCombination(0.5, Translation([1.0]), Translation([1.0, 0.0]))
    with pytest.raises(DimensionMismatchError):
        DouglasRachford(Ball([0.0], 1.0), Ball([0.0, 0.0], 1.0))


def test_dr_equals_definitional_expansion():
    rng = np.random.default_rng(2)
    A = Ball(np.array([0.0, 0.0, 0.0]), 1.0)
    B = Ball(np.array([5.0, 0.0, 0.0]), 1.0)
    dr = DouglasRachford(A, B)
    expanded = ConvexCombination(
        0.5, Identity(), Composition(Reflector(B), Reflector(A))
    )
    for _ in range(1000):
        x = rng.uniform(-8, 8, 3)
        assert np.linalg.norm(apply(dr, x) - apply(expanded, x)) <= 1e-14


def test_scalar_piecewise_linear_evaluation():
    # two breakpoints, three slopes; values accumulated by hand:
    # f(-1) = 0.5, f(2) = 0.5 + 1.0 * 3 = 3.5
    f = ScalarPiecewiseLinear([-1.0, 2.0], [-0.5, 1.0, 0.0], anchor_value=0.5)
    assert f.value_at(-1.0) == 0.5
    assert f.value_at(2.0) == 3.5
    assert f.value_at(5.0) == 3.5  # flat tail
    assert f.value_at(-3.0) == 0.5 + (-0.5) * (-2.0)
    assert np.allclose(apply(f, [0.0]), [1.5])


def test_scalar_piecewise_linear_validation():
    with pytest.raises(ValueError):
        ScalarPiecewiseLinear([0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        ScalarPiecewiseLinear([0.0], [0.0, 1.5])
    with pytest.raises(ValueError):
        ScalarPiecewiseLinear([0.0], [0.0])


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def test_certificate_normalization():
    c = AveragednessCertificate.averaged(0.5)
    assert c.is_firmly_nonexpansive and c.is_averaged and c.alpha == 0.5
    c2 = AveragednessCertificate.averaged(0.3)
    assert c2.is_averaged and not c2.is_firmly_nonexpansive


def test_certify_structural_rules():
    C = Ball([0.0, 0.0], 1.0)
    assert certify(Projector(C)).is_firmly_nonexpansive
    A, B = Ball([0.0] * 3, 1.0), Ball([5.0, 0.0, 0.0], 1.0)
    assert certify(DouglasRachford(A, B)).is_firmly_nonexpansive
    cc = certify(ConvexCombination(0.3, Identity(), Reflector(C)))
    assert cc.is_averaged and cc.alpha == 0.3
    neg = certify(Negation())
    assert neg.is_nonexpansive and not neg.is_averaged
    assert certify(Translation([1.0])).kind == "nonexpansive"
    assert certify(Reflector(C)).kind == "nonexpansive"


def test_certify_linear():
    theta = 0.7
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    assert certify(Linear(Q)).is_nonexpansive
    assert certify(Linear(0.5 * np.eye(2))).is_nonexpansive
    assert certify(Linear(2.0 * np.eye(2))).kind == "unknown"
    assert certify(AffineMap(0.9 * Q, [1.0, 0.0])).is_nonexpansive


def test_certify_composition_formula():
    C = Hyperplane([1.0, 0.0], 0.0)
    t1 = ConvexCombination(0.25, Identity(), Reflector(C))
    t2 = ConvexCombination(0.5, Identity(), Reflector(C))
    comp = certify(Composition(t1, t2))
    a1, a2 = 0.25, 0.5
    expected = (a1 + a2 - 2 * a1 * a2) / (1 - a1 * a2)
    assert comp.is_averaged
    assert np.isclose(comp.alpha, expected)


def test_certify_identity_combination_with_averaged_inner():
    C = Ball([0.0], 1.0)
    inner = Projector(C)  # firmly nonexpansive, alpha 1/2
    cert = certify(ConvexCombination(0.4, Identity(), inner))
    assert cert.is_averaged and np.isclose(cert.alpha, 0.4 * 0.5)


@pytest.mark.parametrize(
    "T,dim",
    [
        (Projector(Ball([0.0, 1.0], 2.0)), 2),
        (DouglasRachford(Ball([0.0] * 3, 1.0), Ball([4.0, 0.0, 0.0], 2.0)), 3),
        (ConvexCombination(0.2, Identity(), Reflector(Hyperplane([1.0, 1.0], 0.5))), 2),
        (ConvexCombination(0.7, Identity(), Negation()), 1),
        (
            Composition(
                Projector(Ball([0.0, 0.0], 1.5)),
                ConvexCombination(0.5, Identity(), Reflector(Halfspace([0.0, 1.0], 0.0))),
            ),
            2,
        ),
    ],
    ids=["projector", "dr", "relaxed-reflector", "averaged-negation", "composition"],
)
def test_certificates_are_sound(T, dim):
    # every produced averagedness constant must survive the empirical check
    cert = certify(T)
    assert cert.is_averaged
    rep = verify_averaged(T, cert.alpha, trials=1000, seed=3, tol=1e-9, dim=dim)
    assert rep.passed, rep.witness


# ---------------------------------------------------------------------------
# empirical verifiers
# ---------------------------------------------------------------------------


def test_verify_nonexpansive_isometry_and_expansion():
    assert verify_nonexpansive(Negation(), dim=1).passed
    rep = verify_nonexpansive(Linear(2.0 * np.eye(2)), seed=1)
    assert rep.failed
    # doubling map: ||Tx - Ty|| - ||x - y|| equals ||x - y||
    x, y = rep.witness["x"], rep.witness["y"]
    assert np.isclose(rep.witness["violation"], np.linalg.norm(x - y))


def test_verify_nonexpansive_dr_two_balls():
    T = DouglasRachford(Ball([0.0] * 3, 1.0), Ball([5.0, 0.0, 0.0], 1.0))
    assert verify_nonexpansive(T, trials=1000, seed=2, tol=1e-9).passed


def test_verify_averaged_projector_and_identity():
    assert verify_averaged(Projector(Ball([0.0, 0.0], 1.0)), 0.5, seed=4).passed
    for alpha in (0.1, 0.5, 0.9):
        assert verify_averaged(Identity(), alpha, dim=2, seed=5).passed


def test_verify_averaged_negation_fails_by_direct_substitution():
    # at the pair (1, 0):  |Tx-Ty|^2 = 1 and the displacement term is 4,
    # so the inequality reads 1 + 4 <= 1 for alpha = 1/2 and fails
    alpha = 0.5
    rep = verify_averaged(Negation(), alpha, dim=1, seed=6)
    assert rep.failed
    x, y = rep.witness["x"], rep.witness["y"]
    gap = float(np.sum((x - y) ** 2))
    expected_violation = 4.0 * (1.0 - alpha) / alpha * gap
    assert np.isclose(rep.witness["violation"], expected_violation)
    for a in np.linspace(0.05, 0.95, 10):
        assert verify_averaged(Negation(), float(a), dim=1, seed=7).failed


def test_random_scalar_maps_are_nonexpansive():
    rng = np.random.default_rng(11)
    for _ in range(25):
        f = random_scalar_piecewise_linear(rng)
        assert np.max(np.abs(f.slopes)) <= 1.0
        assert verify_nonexpansive(f, trials=400, seed=8, tol=1e-9).passed


def test_spectral_norm_power_iteration_matches_svd():
    rng = np.random.default_rng(12)
    for d in (1, 2, 4, 6):
        m = rng.normal(size=(d, d))
        assert np.isclose(_spectral_norm(m), np.linalg.svd(m)[1][0], rtol=1e-8)


# ---------------------------------------------------------------------------
# generalized fixed sets
# ---------------------------------------------------------------------------


def test_fixed_set_projector():
    C = Ball([1.0, 1.0], 2.0)
    assert fixed_set_description(Projector(C), [0.0, 0.0]) is C


def test_fixed_set_relaxed_reflector():
    C = Hyperplane([0.0, 1.0], 1.0)
    T = ConvexCombination(0.3, Identity(), Reflector(C))
    assert fixed_set_description(T, [0.0, 0.0]) is C


def test_fixed_set_translation_cancellation():
    T = Translation([1.0, -1.0])
    F = fixed_set_description(T, [-1.0, 1.0])
    assert F is not None
    assert F.project([3.0, 4.0]) == pytest.approx([3.0, 4.0])
    assert fixed_set_description(T, [0.0, 0.0]) is None


def test_fixed_set_affine_solves_linear_system():
    rng = np.random.default_rng(13)
    theta = 0.9
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    L = 0.5 * np.eye(2) + 0.5 * Q
    b = rng.uniform(-1, 1, 2)
    v = np.zeros(2)
    T = AffineMap(L, b)
    F = fixed_set_description(T, v)
    assert isinstance(F, AffineSubspace)
    for f in sample_witnesses(F, 6, seed=9, radius=5.0):
        assert np.linalg.norm(apply(T, f) + v - f) <= 1e-8


def test_fixed_set_affine_inconsistent_returns_none():
    # (Id - Id) x = b has no solution for nonzero b
    T = AffineMap(np.eye(2), [1.0, 0.0])
    assert fixed_set_description(T, [0.0, 0.0]) is None


def test_fixed_set_two_ball_dr_is_a_ray():
    A = Ball([0.0, 0.0, 0.0], 1.0)
    B = Ball([5.0, 0.0, 0.0], 1.0)
    T = DouglasRachford(A, B)
    v = two_ball_gap_vector(A, B)
    assert np.allclose(v, [-3.0, 0.0, 0.0])
    F = fixed_set_description(T, v)
    assert isinstance(F, Ray)
    # ray of fixed points of v + T: base at the tangency point, aiming away from A
    assert np.allclose(F.base, [1.0, 0.0, 0.0])
    assert np.allclose(F.direction, [1.0, 0.0, 0.0])
    for f in sample_witnesses(F, 8, seed=10, radius=6.0):
        assert np.linalg.norm(apply(T, f) + v - f) <= 1e-8
    # a wrong v gives no description
    assert fixed_set_description(T, [0.0, 0.0, 0.0]) is None


def test_fixed_set_overlapping_balls_unknown():
    A = Ball([0.0, 0.0], 2.0)
    B = Ball([1.0, 0.0], 2.0)
    T = DouglasRachford(A, B)
    assert fixed_set_description(T, [0.0, 0.0]) is None


def test_two_ball_gap_vector_cases():
    A = Ball([0.0, 0.0], 1.0)
    assert np.array_equal(two_ball_gap_vector(A, Ball([1.0, 0.0], 1.0)), [0.0, 0.0])
    assert np.array_equal(two_ball_gap_vector(A, Ball([0.0, 0.0], 2.0)), [0.0, 0.0])
    g = two_ball_gap_vector(A, Ball([0.0, 7.0], 2.0))
    assert np.allclose(g, [0.0, -4.0])


def test_operator_value_equality():
    assert Translation([1.0, 2.0]) == Translation([1.0, 2.0])
    assert Translation([1.0, 2.0]) != Translation([1.0, 3.0])
    a = ConvexCombination(0.5, Identity(), Negation())
    b = ConvexCombination(0.5, Identity(), Negation())
    assert a == b


def _operator_zoo():
    line = Hyperplane([1.0, 2.0], 0.5)
    ballA = Ball([0.0, 0.0], 1.0)
    theta = 0.8
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    return [
        Identity(),
        Negation(),
        Translation([1.0, -2.0]),
        Linear(rot),
        AffineMap(0.7 * rot, [0.5, 0.5]),
        Projector(ballA),
        Reflector(line),
        ConvexCombination(0.4, Identity(), Reflector(ballA)),
        Composition(Projector(ballA), Reflector(line)),
        DouglasRachford(ballA, Ball([3.0, 0.0], 0.5)),
        ScalarPiecewiseLinear([-1.0, 0.5], [1.0, -0.3, 0.9], 0.2),
    ]


@pytest.mark.parametrize("T", _operator_zoo(), ids=lambda t: type(t).__name__)
def test_every_constructed_operator_is_nonexpansive(T):
    dim = T.dim if T.dim is not None else 2
    rep = verify_nonexpansive(T, trials=1000, seed=21, tol=1e-9, dim=dim)
    assert rep.passed, rep.witness
