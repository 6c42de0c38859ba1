import numpy as np
import pytest

from asyncsa import (
    ConfigError,
    GradientDescentField,
    QuadraticBowl,
    QuadraticField,
    Rosenbrock,
    ScaledIdentityField,
    gradient_field,
    random_pd_matrix,
)


def _tile_views(x: np.ndarray) -> np.ndarray:
    # every agent sees the current iterate: view column i equals x
    return np.tile(x[:, None], (1, x.shape[0]))


def test_quadratic_field_shared_matrix():
    m = np.array([[2.0, 1.0], [0.5, 3.0]])
    f = QuadraticField(m)
    x = np.array([1.0, -2.0])
    assert f.vector(x) == pytest.approx(-(m @ x))
    assert f.component(0, x) == pytest.approx(-(m[0] @ x))
    assert f.vector_views(_tile_views(x)) == pytest.approx(f.vector(x))


def test_quadratic_field_per_agent_rows():
    a = np.array([[2.0, 0.0], [0.0, 2.0]])
    b = np.array([[4.0, 1.0], [1.0, 4.0]])
    f = QuadraticField(np.stack([a, b]))
    x = np.array([1.0, 1.0])
    # agent 0 answers with its own matrix's row 0, agent 1 with b's row 1
    assert f.vector(x) == pytest.approx([-(a[0] @ x), -(b[1] @ x)])


def test_quadratic_field_stale_views():
    m = np.array([[1.0, 1.0], [1.0, 1.0]])
    f = QuadraticField(m)
    views = np.array([[1.0, 10.0], [2.0, 20.0]])
    # agent i contracts its matrix row with view column i
    assert f.vector_views(views) == pytest.approx([-3.0, -30.0])


def test_quadratic_field_lipschitz_is_largest_gain():
    m = np.diag([0.5, 4.0])
    assert QuadraticField(m).lipschitz == pytest.approx(4.0)


def test_scaled_identity_field():
    f = ScaledIdentityField(-0.5, 3)
    x = np.array([2.0, -4.0, 6.0])
    assert f.vector(x) == pytest.approx([-1.0, 2.0, -3.0])
    views = np.diag(x)  # agent i sees only its own value on the diagonal
    assert f.vector_views(views) == pytest.approx(f.vector(x))
    assert f.component(1, x) == pytest.approx(2.0)


def test_quadratic_bowl_identities():
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    bowl = QuadraticBowl(m)
    theta = np.array([1.0, -1.0])
    assert bowl.value(theta) == pytest.approx(0.5 * theta @ m @ theta)
    assert bowl.grad(theta) == pytest.approx(m @ theta)
    assert bowl.stationarity_factor == pytest.approx(
        np.linalg.eigvalsh(m).max()
    )
    assert bowl.grad(np.zeros(2)) == pytest.approx([0.0, 0.0])


def test_quadratic_bowl_rejects_bad_matrices():
    with pytest.raises(ConfigError):
        QuadraticBowl(np.array([[1.0, 2.0], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ConfigError):
        QuadraticBowl(np.array([[1.0, 0.0], [0.0, -1.0]]))  # not PD


def test_rosenbrock_landmarks():
    surf = Rosenbrock(a=1.0, b=100.0)
    assert surf.value(np.array([1.0, 1.0])) == 0.0
    assert surf.grad(np.array([1.0, 1.0])) == pytest.approx([0.0, 0.0])
    assert surf.grad(np.array([0.0, 0.0])) == pytest.approx([-2.0, 0.0])
    assert surf.value(np.array([0.0, 0.0])) == pytest.approx(1.0)


def test_gradient_descent_field_is_negative_gradient():
    surf = QuadraticBowl(np.eye(2))
    f = gradient_field(surf)
    assert isinstance(f, GradientDescentField)
    theta = np.array([0.3, -0.7])
    assert f.vector(theta) == pytest.approx(-theta)
    assert f.component(0, theta) == pytest.approx(-0.3)
    assert f.vector_views(_tile_views(theta)) == pytest.approx(-theta)


def test_descent_decreases_pd_quadratic_energy():
    rng = np.random.default_rng(0)
    m = random_pd_matrix(3, rng)
    f = QuadraticField(m)
    x = rng.standard_normal(3)
    for _ in range(200):
        x = x + 0.1 * f.vector(x)
    assert np.linalg.norm(x) < 1e-3


def test_random_pd_matrix_properties():
    rng = np.random.default_rng(42)
    m = random_pd_matrix(4, rng, eig_range=(0.5, 2.0))
    assert m == pytest.approx(m.T)
    eigs = np.linalg.eigvalsh(m)
    assert eigs.min() >= 0.5 - 1e-9
    assert eigs.max() <= 2.0 + 1e-9
    again = random_pd_matrix(4, np.random.default_rng(42))
    assert np.array_equal(m, again)


def test_quadratic_field_shape_validation():
    with pytest.raises(ConfigError):
        QuadraticField(np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        QuadraticField(np.zeros((3, 2, 2)))
