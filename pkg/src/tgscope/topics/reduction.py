from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateInput(ValueError):
    pass


@dataclass
class Projection:
    """Affine map onto the leading principal axes: ``(x - mean) @ basis.T``."""

    mean: np.ndarray
    basis: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - self.mean) @ self.basis.T


def reduce_dims(matrix: np.ndarray, reduced_dim: int, seed: int = 0) -> tuple[np.ndarray, Projection]:
    """Project rows onto the top ``reduced_dim`` principal components.

    Uses an exact SVD of the mean-centred data, so the result does not depend
    on ``seed``; component signs are fixed so that each basis row's largest
    absolute entry is positive.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise DegenerateInput("expected a 2-D matrix")
    n, dim = x.shape
    if reduced_dim < 1 or reduced_dim > dim:
        raise DegenerateInput(f"reduced_dim must be in [1, {dim}], got {reduced_dim}")
    if n < reduced_dim:
        raise DegenerateInput(f"need at least {reduced_dim} rows, got {n}")
    mean = x.mean(axis=0)
    _, _, vt = np.linalg.svd(x - mean, full_matrices=False)
    basis = vt[:reduced_dim].copy()
    pivots = np.argmax(np.abs(basis), axis=1)
    signs = np.sign(basis[np.arange(reduced_dim), pivots])
    signs[signs == 0] = 1.0
    basis *= signs[:, None]
    proj = Projection(mean=mean, basis=basis)
    return proj.transform(x), proj
