"""Driving fields for the update rule x <- x + a * (f(view) + error + noise).

A field exposes three evaluation surfaces:

* ``vector(x)``        -- f at a single point, all components;
* ``component(i, v)``  -- component i at that agent's (possibly stale) view;
* ``vector_views(V)``  -- all components where column i of V is agent i's
  view; the generic fallback loops over ``component``.

``lipschitz`` is a global Lipschitz bound when one is known, else None.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "Field",
    "QuadraticField",
    "ScaledIdentityField",
    "QuadraticBowl",
    "Rosenbrock",
    "GradientDescentField",
    "gradient_field",
    "random_pd_matrix",
]


class Field:
    d: int
    lipschitz: float | None = None

    def vector(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def component(self, i: int, view: np.ndarray) -> float:
        raise NotImplementedError

    def vector_views(self, views: np.ndarray) -> np.ndarray:
        return np.array([self.component(i, views[:, i]) for i in range(self.d)])


class QuadraticField(Field):
    """f_i(x) = -(M_i x)_i for one positive-definite matrix per agent.

    A single matrix is shared by all agents.  Only row i of M_i ever
    enters component i, so the evaluation works off the stacked own-rows
    matrix.
    """

    def __init__(self, matrices: np.ndarray | list[np.ndarray]):
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim == 2:
            d = mats.shape[0]
            if mats.shape != (d, d):
                raise ConfigError("quadratic field needs a square matrix")
            mats = np.broadcast_to(mats, (d, d, d)).copy()
        elif mats.ndim == 3:
            d = mats.shape[0]
            if mats.shape != (d, d, d):
                raise ConfigError("quadratic field needs one (d, d) matrix per agent")
        else:
            raise ConfigError("quadratic field needs a matrix or a list of matrices")
        self.d = d
        self.matrices = mats
        self.rows = np.stack([mats[i, i, :] for i in range(d)])
        self.lipschitz = float(
            max(np.linalg.norm(mats[i], 2) for i in range(d))
        )

    def vector(self, x):
        return -(self.rows @ x)

    def component(self, i, view):
        return float(-(self.rows[i] @ view))

    def vector_views(self, views):
        return -np.einsum("ij,ji->i", self.rows, views)


class ScaledIdentityField(Field):
    """f(x) = gain * x; gain=-1 is the classic stable line, +1 expansive."""

    def __init__(self, gain: float, d: int):
        self.gain = float(gain)
        self.d = int(d)
        self.lipschitz = abs(self.gain)

    def vector(self, x):
        return self.gain * x

    def component(self, i, view):
        return self.gain * float(view[i])

    def vector_views(self, views):
        return self.gain * np.diagonal(views).copy()


# ---------------------------------------------------------------------------
# smooth benchmark surfaces for gradient runs


@dataclass(eq=False)
class QuadraticBowl:
    """pi(theta) = 0.5 theta' M theta with M positive definite."""

    matrix: np.ndarray
    name: str = field(default="quadratic-bowl", init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("quadratic bowl needs a square matrix")
        if not np.allclose(m, m.T):
            raise ConfigError("quadratic bowl matrix must be symmetric")
        if np.linalg.eigvalsh(m).min() <= 0:
            raise ConfigError("quadratic bowl matrix must be positive definite")
        self.matrix = m
        self.d = m.shape[0]
        # gradient magnification of a bias in the stationarity bound
        self.stationarity_factor = float(np.linalg.norm(m, 2))

    def value(self, theta: np.ndarray) -> float:
        return float(0.5 * theta @ self.matrix @ theta)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        return self.matrix @ theta


@dataclass(eq=False)
class Rosenbrock:
    """pi(theta) = (a - t1)^2 + b (t2 - t1^2)^2 on R^2."""

    a: float = 1.0
    b: float = 100.0
    name: str = field(default="rosenbrock", init=False)

    def __post_init__(self):
        self.d = 2
        self.stationarity_factor = 2.0

    def value(self, theta: np.ndarray) -> float:
        t1, t2 = float(theta[0]), float(theta[1])
        return (self.a - t1) ** 2 + self.b * (t2 - t1 * t1) ** 2

    def grad(self, theta: np.ndarray) -> np.ndarray:
        t1, t2 = float(theta[0]), float(theta[1])
        g1 = -2.0 * (self.a - t1) - 4.0 * self.b * t1 * (t2 - t1 * t1)
        g2 = 2.0 * self.b * (t2 - t1 * t1)
        return np.array([g1, g2])


Surface = QuadraticBowl | Rosenbrock


class GradientDescentField(Field):
    """f(theta) = -grad pi(theta); the error model stands in for gradient
    estimator bias."""

    def __init__(self, surface: Surface):
        self.surface = surface
        self.d = surface.d
        self.lipschitz = None

    def vector(self, x):
        return -self.surface.grad(x)

    def component(self, i, view):
        return float(-self.surface.grad(view)[i])


def gradient_field(surface: Surface) -> GradientDescentField:
    return GradientDescentField(surface)


def random_pd_matrix(
    d: int,
    rng: np.random.Generator,
    eig_range: tuple[float, float] = (0.5, 2.0),
) -> np.ndarray:
    """Random symmetric positive-definite matrix Q' diag(lam) Q with Q from
    the QR factorisation of a Gaussian matrix and lam uniform in eig_range."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = rng.uniform(eig_range[0], eig_range[1], size=d)
    m = q.T @ np.diag(lam) @ q
    return (m + m.T) / 2.0
