"""Shared fixtures and independent oracles.

The oracle helpers here deliberately materialize the dense quantities
the library avoids (full residual matrices, from-scratch objectives) so
tests compare the fast paths against direct definitions.
"""

import numpy as np
import pytest


def dense_objective(Y, D, C, lam):
    """Objective evaluated from its definition, no identities."""
    C = np.asarray(C)
    resid = np.asarray(Y) - D @ C.T
    return float(np.sum(resid * resid)) + lam * lam * int(np.count_nonzero(C))


def dense_residual_excluding(Y, D, C, j):
    """Residual with atom j's rank-one term removed, built explicitly."""
    C = np.asarray(C)
    return np.asarray(Y) - D @ C.T + np.outer(D[:, j], C[:, j])


def random_instance(rng, n, N, J, code_density=0.3, scale=1.0):
    """A random (Y, D, C) triple: unit-norm atoms, sparse codes."""
    Y = scale * rng.standard_normal((n, N))
    D = rng.standard_normal((n, J))
    D /= np.linalg.norm(D, axis=0)
    C = rng.standard_normal((N, J)) * (rng.random((N, J)) < code_density)
    return Y, D, C


def make_camera_like(size=512, seed=123):
    """Deterministic synthetic grayscale scene: smooth shading, edges, texture.

    Stand-in used only if scikit-image's sample data is unavailable.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    img = 90 + 70 * np.sin(2 * np.pi * (1.3 * x + 0.4 * y)) + 50 * y
    img += 45 * ((x - 0.35) ** 2 + (y - 0.55) ** 2 < 0.08)  # disc
    img += 35 * (np.sin(40 * np.pi * x) * (y > 0.7))  # stripes
    img += rng.normal(0, 2.0, img.shape)  # mild film grain
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def natural_image():
    """A 512x512 grayscale uint8 test image."""
    try:
        from skimage import data

        return np.asarray(data.camera(), dtype=np.uint8)
    except Exception:
        return make_camera_like()


def make_smooth_scene(size=512, seed=7):
    """Deterministic synthetic grayscale scene with gentle gradients only.

    Stand-in used only if scikit-image's sample data is unavailable.
    """
    y, x = np.mgrid[0:size, 0:size] / size
    img = 60 + 120 * np.exp(-((x - 0.4) ** 2 + (y - 0.45) ** 2) / 0.12)
    img += 40 * np.exp(-((x - 0.75) ** 2 + (y - 0.2) ** 2) / 0.02)
    img += 25 * x + 15 * np.sin(2 * np.pi * 0.7 * y)
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def smooth_image():
    """A 512x512 low-texture grayscale uint8 image (lunar surface)."""
    try:
        from skimage import data

        return np.asarray(data.moon(), dtype=np.uint8)
    except Exception:
        return make_smooth_scene()


@pytest.fixture(scope="session")
def small_image(natural_image):
    """A 128x128 crop for quick pipeline tests."""
    return natural_image[128:256, 128:256].copy()
