"""Synthetic benchmark data: points planted on a random affine subspace.

Used by the scaling experiments and the demos: the points lie exactly on a
random d'-dimensional affine patch through the cube center, so the tail of
the covariance spectrum is exactly zero and the accuracy of a run is driven
by the private mechanism alone.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError
from .noise import SeededGenerator
from .pca import Dataset

__all__ = ["planted_subspace_dataset"]


def planted_subspace_dataset(n: int, d: int, d_prime: int, gen: SeededGenerator):
    """n points uniform on a random d'-dimensional affine section of [0,1]^d.

    A random orthonormal basis through the cube center defines the
    subspace; points are drawn uniformly over its full intersection with
    the cube by rejection from the smallest axis box in subspace
    coordinates that contains the section.  Returns (Dataset, info) with
    the basis, center and the per-direction extents.
    """
    if d_prime < 1 or d_prime > d:
        raise InvalidParameterError(f"need 1 <= d' <= d, got d'={d_prime}, d={d}")
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got {n}")
    basis, _ = np.linalg.qr(gen.standard_normal((d, d_prime)))
    center = np.full(d, 0.5)
    # along direction j alone, |t_j| is capped by the first cube face hit
    extent = 0.5 / np.abs(basis).max(axis=0)
    points = np.empty((d, 0))
    while points.shape[1] < n:
        batch = max(2 * (n - points.shape[1]), 128)
        t = (gen.random((d_prime, batch)) * 2.0 - 1.0) * extent[:, None]
        cand = center[:, None] + basis @ t
        inside = ((cand >= 0.0) & (cand <= 1.0)).all(axis=0)
        points = np.concatenate([points, cand[:, inside]], axis=1)
    points = np.clip(points[:, :n], 0.0, 1.0)
    info = {"basis": basis, "center": center, "extent": extent}
    return Dataset(points), info
