"""Exact multimode Gaussian-state engine: construction, displacement,
permutation, tensoring, and homodyne measurement.

A state is represented by its quadrature mean vector and covariance matrix,
ordered ``(x_1, p_1, ..., x_m, p_m)``. The convention is fixed so that

* the vacuum has quadrature variance 1,
* a coherent state with complex label ``a`` has mean ``sqrt(2) * (Re a, Im a)``,
* an x-squeezed mode with squeezing parameter ``r`` has x-homodyne outcomes
  distributed as ``N(0, e^{-r})``, and displacing it by ``b`` shifts the
  outcome mean to ``sqrt(2) * Re b``.

All operations return new states; states are immutable after construction
and safe to share across parallel trials. Random sampling always consumes an
explicitly supplied :class:`numpy.random.Generator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# construction-time symmetry tolerance and PSD eigenvalue tolerance used by
# validate(); symmetrization on construction keeps chained Schur updates from
# drifting
SYMMETRY_TOL = 1e-10
PSD_TOL = -1e-9

_SQRT2 = np.sqrt(2.0)


class Quadrature(Enum):
    """The two canonical quadratures of a bosonic mode."""

    X = "x"
    P = "p"


@dataclass(frozen=True)
class GaussianState:
    """A Gaussian state of ``m`` modes.

    Args:
        mean: length ``2m`` quadrature mean vector, ordered
            ``(x_1, p_1, ..., x_m, p_m)``.
        cov: ``2m x 2m`` covariance matrix in the same ordering. It is
            symmetrized as ``(C + C^T)/2`` on construction.

    Raises:
        ValueError: on shape mismatch or non-finite entries.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size == 0 or mean.size % 2 != 0:
            raise ValueError(f"mean must have even positive length, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not np.isfinite(mean).all() or not np.isfinite(cov).all():
            raise ValueError("state moments must be finite")
        cov = (cov + cov.T) / 2.0
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def _trusted(cls, mean: np.ndarray, cov: np.ndarray) -> "GaussianState":
        # internal fast path: caller guarantees fresh, finite, symmetric arrays
        obj = object.__new__(cls)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(obj, "mean", mean)
        object.__setattr__(obj, "cov", cov)
        return obj

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    def validate(self) -> None:
        """Check the state invariants: finite moments, symmetric covariance,
        smallest covariance eigenvalue above the PSD tolerance.

        Raises:
            ValueError: if any invariant is violated.
        """
        if not np.isfinite(self.mean).all() or not np.isfinite(self.cov).all():
            raise ValueError("state moments must be finite")
        residual = np.abs(self.cov - self.cov.T).max()
        if residual > SYMMETRY_TOL:
            raise ValueError(f"covariance asymmetry {residual} exceeds {SYMMETRY_TOL}")
        smallest = np.linalg.eigvalsh(self.cov)[0]
        if smallest < PSD_TOL:
            raise ValueError(f"covariance eigenvalue {smallest} below {PSD_TOL}")


@dataclass(frozen=True)
class HomodyneRecord:
    """Outcome of a single homodyne measurement.

    ``mode_index`` refers to the mode numbering of the state the measurement
    chain started from (modes removed by earlier measurements keep their
    original index).
    """

    mode_index: int
    quadrature: Quadrature
    outcome: float


def make_squeezed_x(r: float) -> GaussianState:
    """Single mode squeezed along x: covariance ``diag(e^{-r}, e^{r})``, zero mean."""
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    return GaussianState._trusted(
        np.zeros(2), np.diag([np.exp(-r), np.exp(r)]).copy()
    )


def make_squeezed_p(r: float) -> GaussianState:
    """Single mode squeezed along p: covariance ``diag(e^{r}, e^{-r})``, zero mean."""
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    return GaussianState._trusted(
        np.zeros(2), np.diag([np.exp(r), np.exp(-r)]).copy()
    )


def make_coherent(z: complex) -> GaussianState:
    """Coherent state with complex label ``z``: vacuum covariance, mean
    ``sqrt(2) * (Re z, Im z)``."""
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError("coherent amplitude must be finite")
    return GaussianState._trusted(
        np.array([_SQRT2 * z.real, _SQRT2 * z.imag]), np.eye(2)
    )


def make_vacuum(modes: int = 1) -> GaussianState:
    """Vacuum state of ``modes`` modes."""
    if modes < 1:
        raise ValueError("modes must be >= 1")
    return GaussianState._trusted(np.zeros(2 * modes), np.eye(2 * modes))


def tensor(*states: GaussianState) -> GaussianState:
    """Tensor product of two or more states; the first argument's modes come
    first in the result."""
    if len(states) < 2:
        raise ValueError("tensor needs at least two states")
    sizes = [s.mean.size for s in states]
    total = sum(sizes)
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((total, total))
    offset = 0
    for s, size in zip(states, sizes):
        cov[offset : offset + size, offset : offset + size] = s.cov
        offset += size
    return GaussianState._trusted(mean, cov)


def displace(state: GaussianState, mode: int, beta: complex) -> GaussianState:
    """Displace one mode by complex ``beta``: the mode's ``(x, p)`` mean shifts
    by ``sqrt(2) * (Re beta, Im beta)``; the covariance is untouched.

    Args:
        state: input state.
        mode: index of the mode to displace.
        beta: complex displacement amplitude.

    Returns:
        The displaced state.

    Raises:
        ValueError: if ``mode`` is out of range.
    """
    if not 0 <= mode < state.modes:
        raise ValueError(f"mode {mode} out of range for {state.modes}-mode state")
    beta = complex(beta)
    mean = state.mean.copy()
    mean[2 * mode] += _SQRT2 * beta.real
    mean[2 * mode + 1] += _SQRT2 * beta.imag
    return GaussianState._trusted(mean, state.cov)


def displace_all(state: GaussianState, alphas: np.ndarray) -> GaussianState:
    """Displace every mode, component ``j`` by ``alphas[j]``.

    Raises:
        ValueError: if ``len(alphas) != state.modes``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    if alphas.shape != (state.modes,):
        raise ValueError(
            f"need one displacement per mode ({state.modes}), got shape {alphas.shape}"
        )
    mean = state.mean.copy()
    mean[0::2] += _SQRT2 * alphas.real
    mean[1::2] += _SQRT2 * alphas.imag
    return GaussianState._trusted(mean, state.cov)


def _check_permutation(perm: np.ndarray, m: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.intp)
    if perm.shape != (m,) or not np.array_equal(np.sort(perm), np.arange(m)):
        raise ValueError(f"not a permutation of 0..{m - 1}: {perm!r}")
    return perm


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    """Inverse of a permutation given as an index array."""
    perm = np.asarray(perm, dtype=np.intp)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def permute_vector(values: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Move entry ``j`` to position ``perm[j]``, mirroring how
    :func:`permute_modes` moves mode ``j`` to position ``perm[j]``."""
    values = np.asarray(values)
    out = np.empty_like(values)
    out[np.asarray(perm, dtype=np.intp)] = values
    return out


def unpermute_vector(values: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Inverse of :func:`permute_vector`: entry ``j`` of the result is the
    component that ``perm`` placed at position ``perm[j]``."""
    return np.asarray(values)[np.asarray(perm, dtype=np.intp)]


def _permute_by_inverse(state: GaussianState, inv: np.ndarray) -> GaussianState:
    # inv already validated by the caller
    qidx = np.empty(2 * inv.size, dtype=np.intp)
    qidx[0::2] = 2 * inv
    qidx[1::2] = 2 * inv + 1
    return GaussianState._trusted(
        state.mean.take(qidx), state.cov.take(qidx, 0).take(qidx, 1)
    )


def permute_modes(state: GaussianState, perm: np.ndarray) -> GaussianState:
    """Reorder modes so that input mode ``j`` becomes output mode ``perm[j]``
    (equivalently, output mode ``i`` is input mode ``perm^{-1}(i)``). Mean and
    covariance are permuted in ``(x, p)`` pairs.

    Raises:
        ValueError: if ``perm`` is not a permutation of the mode indices.
    """
    perm = _check_permutation(perm, state.modes)
    return _permute_by_inverse(state, invert_permutation(perm))


def homodyne(
    state: GaussianState,
    mode: int,
    quadrature: Quadrature,
    rng: np.random.Generator,
) -> tuple[float, GaussianState]:
    """Measure one quadrature of one mode and condition the rest of the state.

    The outcome is drawn from the Gaussian marginal of the chosen quadrature.
    The measured mode is removed from the state; the remaining modes are
    conditioned on the outcome through the Schur-complement update

    ``mu' = mu_r + S_rq (outcome - mu_q) / S_qq``,
    ``Sigma' = Sigma_rr - S_rq S_qr / S_qq``.

    Args:
        state: input state.
        mode: index of the mode to measure.
        quadrature: which quadrature to measure.
        rng: random generator supplying the outcome draw.

    Returns:
        ``(outcome, posterior)`` where the posterior has ``modes - 1`` modes.

    Raises:
        ValueError: if ``mode`` is out of range or the marginal variance of
            the chosen quadrature is not positive.
    """
    if not 0 <= mode < state.modes:
        raise ValueError(f"mode {mode} out of range for {state.modes}-mode state")
    q = 2 * mode + (0 if quadrature is Quadrature.X else 1)
    mean, cov = state.mean, state.cov
    var = cov[q, q]
    if var <= 0.0:
        raise ValueError(f"degenerate marginal variance {var} for homodyne")
    outcome = mean[q] + np.sqrt(var) * rng.standard_normal()

    # drop both quadratures of the measured mode; the kept indices form the
    # two contiguous ranges [0, a) and [b, 2m)
    a, b = 2 * mode, 2 * mode + 2
    k = mean.size - 2
    post_mean = np.concatenate((mean[:a], mean[b:]))
    post_cov = np.empty((k, k))
    post_cov[:a, :a] = cov[:a, :a]
    post_cov[:a, a:] = cov[:a, b:]
    post_cov[a:, :a] = cov[b:, :a]
    post_cov[a:, a:] = cov[b:, b:]
    cross = np.concatenate((cov[:a, q], cov[b:, q]))
    if cross.any():
        gain = cross / var
        post_mean += gain * (outcome - mean[q])
        post_cov -= np.outer(gain, cross)
        post_cov = (post_cov + post_cov.T) / 2.0
    return float(outcome), GaussianState._trusted(post_mean, post_cov)


def sample_homodyne(
    state: GaussianState,
    mode: int,
    quadrature: Quadrature,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``size`` independent homodyne outcomes of one quadrature, i.e. the
    outcome statistics of repeatedly preparing ``state`` and measuring. No
    posterior is produced.
    """
    if not 0 <= mode < state.modes:
        raise ValueError(f"mode {mode} out of range for {state.modes}-mode state")
    q = 2 * mode + (0 if quadrature is Quadrature.X else 1)
    var = state.cov[q, q]
    if var <= 0.0:
        raise ValueError(f"degenerate marginal variance {var} for homodyne")
    return state.mean[q] + np.sqrt(var) * rng.standard_normal(size)
