"""Matrix-tuple algebra for anisotropic scaling exponents.

A scaling exponent on an N-parameter field with values in R^n is a tuple
Theta = (Theta_1, ..., Theta_N) of symmetric positive-definite n x n
matrices.  Two contractions appear throughout the package:

* ``star_index(t, theta)``  -- the matrix  sum_j t_j * Theta_j,
* ``star_apply(theta, vectors)`` -- the vector  sum_j Theta_j @ v_j.

For n = 1 both reduce to ordinary inner products.

Matrix exponentials of symmetric matrices are computed through the
symmetric eigendecomposition (Q diag(e^lambda) Q^T), never through a
Pade approximation, so the result is symmetric positive definite by
construction.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._jsonio import dump_json, load_json
from .errors import CommutationError, DimensionMismatchError

# Relative tolerance for accepting a matrix as symmetric.
SYMMETRY_RTOL = 1e-12
# Relative commutator-defect threshold below which a tuple counts as commuting.
COMMUTATION_RTOL = 1e-10


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value of ``a``.

    Computed from the symmetric eigendecomposition of ``a.T @ a`` so that
    symmetric, skew-symmetric and general square inputs are all handled by
    the same routine.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got ndim={a.ndim}")
    w = np.linalg.eigvalsh(a.T @ a)
    return float(np.sqrt(max(float(w[-1]), 0.0)))


def _check_symmetric(a: np.ndarray, what: str) -> None:
    defect = spectral_norm(a - a.T)
    scale = spectral_norm(a)
    if defect > SYMMETRY_RTOL * scale:
        raise DimensionMismatchError(
            f"{what} is not symmetric: asymmetry {defect:.3e} exceeds "
            f"{SYMMETRY_RTOL:g} * norm ({scale:.3e})"
        )


def mat_exp_sym(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix.

    Uses the eigendecomposition ``a = Q diag(w) Q^T`` and returns
    ``Q diag(exp(w)) Q^T``, re-symmetrized to remove rounding skew.  The
    result is symmetric positive definite for any symmetric input.
    """
    a = np.asarray(a, dtype=float)
    _check_symmetric(a, "mat_exp_sym input")
    w, q = np.linalg.eigh(a)
    r = (q * np.exp(w)) @ q.T
    return (r + r.T) / 2.0


def star_index(t: Sequence[float], theta: "ThetaTuple") -> np.ndarray:
    """Contraction ``sum_j t_j * Theta_j`` of an index against the tuple."""
    t = np.asarray(t, dtype=float)
    if t.shape != (theta.N,):
        raise DimensionMismatchError(
            f"index has length {t.shape}, tuple has N={theta.N} axes"
        )
    return np.tensordot(t, theta.stacked, axes=1)


def star_apply(theta: "ThetaTuple", vectors: Sequence[Sequence[float]]) -> np.ndarray:
    """Contraction ``sum_j Theta_j @ v_j`` of the tuple against N vectors."""
    v = np.asarray(vectors, dtype=float)
    if v.shape != (theta.N, theta.n):
        raise DimensionMismatchError(
            f"expected {theta.N} vectors of length {theta.n}, got shape {v.shape}"
        )
    return np.einsum("jab,jb->a", theta.stacked, v)


def commutation_defect(mats: Sequence[np.ndarray]) -> float:
    """Largest relative commutator norm over all pairs of matrices."""
    worst = 0.0
    norms = [spectral_norm(m) for m in mats]
    for j in range(len(mats)):
        for l in range(j + 1, len(mats)):
            comm = mats[j] @ mats[l] - mats[l] @ mats[j]
            denom = norms[j] * norms[l]
            if denom > 0.0:
                worst = max(worst, spectral_norm(comm) / denom)
    return worst


def check_commuting(theta: "ThetaTuple") -> tuple[bool, float]:
    """Return ``(commuting, max relative commutator defect)`` for the tuple."""
    defect = theta.commutation_defect
    return defect <= COMMUTATION_RTOL, defect


def min_eigenvalue(theta: "ThetaTuple") -> float:
    """Smallest eigenvalue over all matrices of the tuple.

    This is the decay rate that controls truncation depths; the tuple
    invariant guarantees it is strictly positive.
    """
    return theta.min_eigenvalue


class ThetaTuple:
    """Tuple of N symmetric positive-definite n x n scaling matrices.

    Symmetry and positive definiteness are enforced at construction; the
    commuting flag is evaluated once (true iff every pairwise relative
    commutator defect is at most 1e-10) and exposed as a property.
    Instances are immutable; the matrix exponentials ``exp(t)`` of integer
    contractions are memoized because the transforms evaluate them at
    every site of a window.
    """

    def __init__(self, mats: Sequence[np.ndarray]):
        mats = [np.array(m, dtype=float) for m in mats]
        if len(mats) == 0:
            raise DimensionMismatchError("ThetaTuple needs at least one matrix")
        n = mats[0].shape[0] if mats[0].ndim == 2 else -1
        eigs = []
        for j, m in enumerate(mats):
            if m.ndim != 2 or m.shape != (n, n):
                raise DimensionMismatchError(
                    f"Theta[{j}] has shape {m.shape}, expected ({n}, {n})"
                )
            if not np.all(np.isfinite(m)):
                raise DimensionMismatchError(f"Theta[{j}] has non-finite entries")
            _check_symmetric(m, f"Theta[{j}]")
            w = np.linalg.eigvalsh(m)
            if w[0] <= 0.0:
                raise DimensionMismatchError(
                    f"Theta[{j}] is not positive definite "
                    f"(smallest eigenvalue {w[0]:.6e})"
                )
            eigs.append(float(w[0]))
            m.setflags(write=False)
        self._mats = tuple(mats)
        self._stacked = np.stack(mats)
        self._stacked.setflags(write=False)
        self._min_eig = min(eigs)
        self._defect = commutation_defect(mats)
        self._exp_cache: dict = {}
        # Scratch cache used by the transforms for per-window exponential
        # stacks; keyed on (lo, hi, sign).
        self._stack_cache: dict = {}

    @property
    def n(self) -> int:
        return self._mats[0].shape[0]

    @property
    def N(self) -> int:
        return len(self._mats)

    @property
    def mats(self) -> tuple:
        return self._mats

    @property
    def stacked(self) -> np.ndarray:
        """All matrices as one read-only (N, n, n) array."""
        return self._stacked

    @property
    def commuting(self) -> bool:
        return self._defect <= COMMUTATION_RTOL

    @property
    def commutation_defect(self) -> float:
        return self._defect

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eig

    def exp(self, t: Sequence[int]) -> np.ndarray:
        """Memoized ``mat_exp_sym(star_index(t, self))`` for integer indices."""
        key = tuple(int(x) for x in t)
        if len(key) != self.N or any(k != x for k, x in zip(key, t)):
            raise DimensionMismatchError(
                f"exp() expects an integer index of length {self.N}, got {t!r}"
            )
        cached = self._exp_cache.get(key)
        if cached is None:
            cached = mat_exp_sym(star_index(key, self))
            cached.setflags(write=False)
            self._exp_cache[key] = cached
        return cached

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "mats": [m.reshape(-1).tolist() for m in self._mats],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaTuple":
        try:
            n = int(d["n"])
            nn = int(d["N"])
            flat = d["mats"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionMismatchError(f"malformed ThetaTuple dict: {exc}") from exc
        if len(flat) != nn:
            raise DimensionMismatchError(
                f"ThetaTuple dict declares N={nn} but carries {len(flat)} matrices"
            )
        mats = []
        for j, row in enumerate(flat):
            m = np.asarray(row, dtype=float)
            if m.shape != (n * n,):
                raise DimensionMismatchError(
                    f"Theta[{j}] flat data has length {m.size}, expected {n * n}"
                )
            mats.append(m.reshape(n, n))
        return cls(mats)

    def save(self, path) -> None:
        dump_json(self.to_dict(), path)

    @classmethod
    def load(cls, path) -> "ThetaTuple":
        return cls.from_dict(load_json(path))

    def require_commuting(self, what: str = "operation") -> None:
        if not self.commuting:
            raise CommutationError(
                f"{what} requires a commuting tuple; max relative commutator "
                f"defect {self._defect:.3e} exceeds {COMMUTATION_RTOL:g}"
            )

    def __repr__(self) -> str:
        return f"ThetaTuple(n={self.n}, N={self.N}, commuting={self.commuting})"
