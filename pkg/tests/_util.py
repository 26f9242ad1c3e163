"""Small constructors shared by the tests."""

import numpy as np

D = lambda *a: np.diag(np.array(a, dtype=complex))  # noqa: E731


def well_conditioned(rng, d, max_cond=1e2):
    while True:
        V = np.eye(d) + 0.5 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(d)
        if np.linalg.cond(V) <= max_cond:
            return V


def conjugate(V, diag):
    return V @ np.diag(np.asarray(diag, dtype=complex)) @ np.linalg.inv(V)


def jordan(lam, size):
    J = lam * np.eye(size, dtype=complex)
    J += np.diag(np.ones(size - 1), 1)
    return J


def randvec(rng, d, scale=1.0):
    return scale * (rng.normal(size=d) + 1j * rng.normal(size=d)) / np.sqrt(2)
