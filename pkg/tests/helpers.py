"""Shared fixtures for the test modules."""

import numpy as np

from relaxkit.model import StateSpaceModel


def first_order():
    return StateSpaceModel(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]),
                           np.zeros((1, 1)), label="first_order")


def oscillator():
    return StateSpaceModel(np.array([[0.0, 1.0], [-2.0, -1.0]]), np.array([[0.0], [1.0]]),
                           np.array([[1.0, 0.0]]), np.zeros((1, 1)), label="oscillator")


def random_stable(rng, n, m=None, p=None):
    """Random Hurwitz system with eigenvalue real parts in [-3, -0.3]."""
    m = m or n
    p = p or m
    X = rng.standard_normal((n, n))
    A = X - X.T
    A = 0.5 * A / max(np.linalg.norm(A, 2), 1.0) - np.diag(rng.uniform(0.3, 3.0, n))
    S = rng.standard_normal((n, n)) + 2 * np.eye(n)
    A = S @ A @ np.linalg.inv(S)
    return StateSpaceModel(A, rng.standard_normal((n, m)), rng.standard_normal((p, n)),
                           np.zeros((p, m)))


def relaxation_draw(seed, include_D=False):
    """The relaxation family used across suites: n <= 8, m <= 3.

    Returns the system and a generator seeded apart from the system's own
    for drawing signals, directions and transforms.
    """
    from relaxkit.gen import random_relaxation
    rng = np.random.default_rng(1000 + seed)
    m = int(rng.integers(1, 4))
    n_modes = int(rng.integers(1, 8 // m + 1))
    rank = m if seed % 2 else 1
    return random_relaxation(seed, n_modes=n_modes, m=m, rank_max=rank,
                             include_D=include_D), rng
