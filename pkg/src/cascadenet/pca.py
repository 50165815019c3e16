"""Principal components of flattened grid samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .linalg import as_matrix, fix_signs, symmetric_eigen

# Eigenvalues below this fraction of the largest are treated as exact zeros
# when mapping Gram eigenvectors back to feature space.
NULL_RATIO = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Training mean plus an orthonormal basis of principal directions.

    Attributes
    ----------
    mean : ndarray, shape (D,)
    components : ndarray, shape (D, k_max)
        Orthonormal columns in order of decreasing variance.
    variances : ndarray, shape (k_max,)
        Sample variance (divisor N-1) captured by each component.
    """

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray

    @property
    def k_max(self) -> int:
        return self.components.shape[1]

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def truncate(self, k: int) -> "PcaModel":
        _check_k(k, self.k_max)
        return PcaModel(self.mean, self.components[:, :k].copy(), self.variances[:k].copy())

    def transform(self, x, k: int | None = None) -> np.ndarray:
        return transform(self, x, k)

    def inverse_transform(self, scores) -> np.ndarray:
        return inverse_transform(self, scores)


def _check_k(k, k_max):
    if not 1 <= k <= k_max:
        raise ParameterError(f"k must lie in [1, {k_max}], got {k}")


def _complete_basis(basis: np.ndarray, dim: int, needed: int) -> np.ndarray:
    """Extend orthonormal columns ``basis`` with ``needed`` further unit vectors.

    Candidates are the standard basis vectors, orthogonalised twice against
    what is already present (Gram-Schmidt with reorthogonalisation).
    """
    cols = [basis[:, i] for i in range(basis.shape[1])]
    for e in range(dim):
        if needed == 0:
            break
        v = np.zeros(dim)
        v[e] = 1.0
        for _ in range(2):
            for u in cols:
                v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            cols.append(v / norm)
            needed -= 1
    return np.column_stack(cols) if cols else np.zeros((dim, 0))


def fit(train, k_max: int, method: str = "auto", off_diag_tol: float = 1e-13) -> PcaModel:
    """Fit ``k_max`` principal components to the rows of ``train``.

    Parameters
    ----------
    train : array_like, shape (N, D)
    k_max : int
        Number of components kept; ``1 <= k_max <= min(N - 1, D)``.
    method : {"auto", "gram", "covariance"}
        ``"gram"`` diagonalises the N x N matrix of centred inner products and
        maps eigenvectors back to feature space; ``"covariance"`` diagonalises
        the D x D covariance. ``"auto"`` picks the Gram route when N <= D.

    Notes
    -----
    Identical rows give zero variances; the returned basis is then an
    arbitrary (but deterministic) orthonormal set.
    """
    x = as_matrix(train, "train")
    n, d = x.shape
    if n < 2:
        raise ParameterError("PCA needs at least 2 training rows")
    if not isinstance(k_max, (int, np.integer)) or not 1 <= k_max <= min(n - 1, d):
        raise ParameterError(f"k_max must lie in [1, {min(n - 1, d)}], got {k_max}")
    if method == "auto":
        method = "gram" if n <= d else "covariance"

    mean = x.mean(axis=0)
    xc = x - mean

    if method == "covariance":
        eig = symmetric_eigen(xc.T @ xc / (n - 1), off_diag_tol)
        variances = eig.values[:k_max]
        components = eig.vectors[:, :k_max]
    elif method == "gram":
        eig = symmetric_eigen(xc @ xc.T, off_diag_tol)
        top = eig.values[0] if eig.values.size else 0.0
        usable = [
            i for i in range(k_max) if eig.values[i] > NULL_RATIO * top and top > 0.0
        ]
        mapped = xc.T @ eig.vectors[:, usable]
        mapped /= np.linalg.norm(mapped, axis=0)
        components = _complete_basis(mapped, d, k_max - len(usable))
        variances = np.zeros(k_max)
        variances[: len(usable)] = eig.values[usable] / (n - 1)
    else:
        raise ParameterError(f"unknown PCA method {method!r}")

    variances = np.maximum(variances, 0.0)
    return PcaModel(mean, fix_signs(components), variances)


def transform(model: PcaModel, x, k: int | None = None) -> np.ndarray:
    """Scores of ``x`` on the first ``k`` components.

    ``x`` may be one sample of length D or a batch of shape (N, D).
    """
    k = model.k_max if k is None else k
    _check_k(k, model.k_max)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ShapeError(f"sample length {x.shape[-1]} does not match D={model.dim}")
    return (x - model.mean) @ model.components[:, :k]


def inverse_transform(model: PcaModel, scores) -> np.ndarray:
    """Map scores on the leading components back to input space."""
    scores = np.asarray(scores, dtype=np.float64)
    k = scores.shape[-1]
    if not 1 <= k <= model.k_max:
        raise ParameterError(f"got {k} scores for a model with k_max={model.k_max}")
    return model.mean + scores @ model.components[:, :k].T
