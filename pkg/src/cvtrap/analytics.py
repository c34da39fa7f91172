"""Closed-form quantities of the trap-code authentication scheme, plus a
Monte Carlo phase-average oracle for the displacement-twirl factor.

Displacement vectors over the ``n + 2z`` cipher modes use the fixed layout
``[message_0 .. message_{n-1}, X_0 .. X_{z-1}, P_0 .. P_{z-1}]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .cvgauss import unpermute_vector

_SQRT2 = math.sqrt(2.0)

# factor used for the "much greater than" parameter inequalities; margin * e^{-r/2}
# is treated as the width of the soft threshold region
DEFAULT_MARGIN = 5.0


@dataclass(frozen=True)
class SchemeParams:
    """Parameters governing every stage of the scheme.

    Args:
        n: code block length (number of message modes).
        z: number of traps per quadrature (``2z`` traps in total).
        t: number of correctable modes; the code distance is ``2t + 1``.
        r: trap squeezing parameter, >= 0.
        eps: verification threshold; trap outcomes must land in ``[-eps, eps]``.
        Delta: per-axis standard deviation of the one-time-pad displacements.
        delta: message-noise threshold; defaults to ``eps / sqrt(2)``.
        margin: required ratio ``eps / e^{-r/2}``; default 5, set lower to
            explore weakly separated regimes.

    Raises:
        ValueError: if any validity invariant fails (``2z > n``,
            ``t <= (n-1)/2``, threshold separation, ``Delta >= 10 eps``).
    """

    n: int
    z: int
    t: int
    r: float
    eps: float
    Delta: float
    delta: float | None = None
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.z < 1:
            raise ValueError("z must be a positive integer")
        if 2 * self.z <= self.n:
            raise ValueError(f"need 2z > n, got n={self.n}, z={self.z}")
        if self.t < 0 or 2 * self.t > self.n - 1:
            raise ValueError(f"need 0 <= t <= (n-1)/2, got t={self.t}, n={self.n}")
        if not (np.isfinite(self.r) and self.r >= 0.0):
            raise ValueError("r must be finite and >= 0")
        if not (self.eps > 0.0):
            raise ValueError("eps must be > 0")
        if self.margin < 0.0:
            raise ValueError("margin must be >= 0")
        if self.eps < self.margin * math.exp(-self.r / 2.0):
            raise ValueError(
                f"eps={self.eps} not separated from the squeezing width "
                f"e^(-r/2)={math.exp(-self.r / 2.0):.6g} by margin {self.margin}"
            )
        if self.delta is None:
            object.__setattr__(self, "delta", self.eps / _SQRT2)
        if not (self.delta > 0.0):
            raise ValueError("delta must be > 0")
        if self.Delta < 10.0 * self.eps:
            raise ValueError(f"need Delta >= 10*eps, got Delta={self.Delta}, eps={self.eps}")

    @property
    def modes(self) -> int:
        return self.n + 2 * self.z


def split_layout(vec: np.ndarray, params: SchemeParams):
    """Split a displacement vector in scheme layout into its message,
    X-trap, and P-trap blocks."""
    vec = np.asarray(vec)
    if vec.shape != (params.modes,):
        raise ValueError(f"expected length {params.modes}, got shape {vec.shape}")
    n, z = params.n, params.z
    return vec[:n], vec[n : n + z], vec[n + z :]


def g1(beta, r: float, eps: float):
    """Probability that an x-homodyne outcome of an x-squeezed mode displaced
    by ``beta`` lands in ``[-eps, eps]``:

    ``g1 = erf(e^{r/2}(eps + sqrt(2) Re beta)/sqrt(2))/2
         + erf(e^{r/2}(eps - sqrt(2) Re beta)/sqrt(2))/2``.

    Accepts scalars or arrays of ``beta``; depends on ``Re beta`` only.
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    shift = _SQRT2 * np.real(beta)
    scale = np.exp(r / 2.0) / _SQRT2
    out = 0.5 * erf(scale * (eps + shift)) + 0.5 * erf(scale * (eps - shift))
    return float(out) if np.isscalar(beta) or np.ndim(out) == 0 else out


def g2(beta, r: float, eps: float):
    """Same as :func:`g1` for the p quadrature: depends on ``Im beta`` only."""
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    shift = _SQRT2 * np.imag(beta)
    scale = np.exp(r / 2.0) / _SQRT2
    out = 0.5 * erf(scale * (eps + shift)) + 0.5 * erf(scale * (eps - shift))
    return float(out) if np.isscalar(beta) or np.ndim(out) == 0 else out


def big_g(perm: np.ndarray, alpha: np.ndarray, params: SchemeParams) -> float:
    """Overall trap-pass probability of a displacement attack ``alpha`` under
    key permutation ``perm``: the product of :func:`g1` over the X-trap
    components and :func:`g2` over the P-trap components of the unpermuted
    attack vector. Message components are ignored.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (params.modes,):
        raise ValueError(f"expected length {params.modes}, got shape {alpha.shape}")
    v = unpermute_vector(alpha, perm)
    _, xs, ps = split_layout(v, params)
    return float(np.prod(g1(xs, params.r, params.eps)) * np.prod(g2(ps, params.r, params.eps)))


def hamming_weight_delta(u: np.ndarray, delta: float) -> int:
    """Number of components with magnitude strictly above ``delta``."""
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    return int(np.count_nonzero(np.abs(np.asarray(u, dtype=complex)) > delta))


def indicator_I(perm: np.ndarray, alpha: np.ndarray, params: SchemeParams) -> int:
    """Ideal-world acceptance indicator: 1 iff the unpermuted attack vector has
    at most ``t`` message components above ``delta`` in magnitude, every X-trap
    component with ``|Re| <= eps/sqrt(2)``, and every P-trap component with
    ``|Im| <= eps/sqrt(2)``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (params.modes,):
        raise ValueError(f"expected length {params.modes}, got shape {alpha.shape}")
    v = unpermute_vector(alpha, perm)
    u, xs, ps = split_layout(v, params)
    bound = params.eps / _SQRT2
    ok = (
        hamming_weight_delta(u, params.delta) <= params.t
        and bool(np.all(np.abs(xs.real) <= bound))
        and bool(np.all(np.abs(ps.imag) <= bound))
    )
    return 1 if ok else 0


def eps_dec(params: SchemeParams) -> float:
    """Probability that an untampered ciphertext is rejected, due purely to the
    squeezing tails of the traps:

    ``eps_dec = 1 - erf(eps * e^{r/2} / sqrt(2))^{2z}``.
    """
    factor = erf(params.eps * math.exp(params.r / 2.0) / _SQRT2)
    return float(1.0 - factor ** (2 * params.z))


def p_exact(u: int, n: int, z: int) -> float:
    """Probability that a uniformly random permutation of ``n + 2z`` modes
    places ``u`` marked modes entirely within the first ``n`` positions:
    ``C(n, u) / C(n+2z, u)``.

    Computed as a ratio of exact integer products, so the result is the
    correctly rounded double for every argument. ``u > n`` returns 0 (the
    marked modes cannot all fit).
    """
    if n < 1 or z < 1:
        raise ValueError("n and z must be positive integers")
    if u < 0:
        raise ValueError("u must be >= 0")
    if u > n:
        return 0.0
    num = 1
    den = 1
    m = n + 2 * z
    for j in range(u):
        num *= n - j
        den *= m - j
    return num / den


def eta_bound(n: int, z: int, t: int) -> float:
    """Security bound ``(n / (n + 2z))^{t+1}`` on the real-vs-ideal
    distinguishing advantage; requires ``2z > n`` and ``t >= 0``."""
    if n < 1 or z < 1 or 2 * z <= n:
        raise ValueError(f"need positive n, z with 2z > n, got n={n}, z={z}")
    if t < 0:
        raise ValueError("t must be >= 0")
    return (n / (n + 2 * z)) ** (t + 1)


def twirl_factor(beta: complex, betap: complex, Delta: float) -> float:
    """Damping factor ``exp(-2 Delta^2 |beta - betap|^2)`` that averaging over
    Gaussian displacements of per-axis variance ``Delta^2`` applies to a
    cross term between displacements ``beta`` and ``betap``."""
    if Delta <= 0.0:
        raise ValueError("Delta must be > 0")
    diff = complex(beta) - complex(betap)
    return math.exp(-2.0 * Delta**2 * (diff.real**2 + diff.imag**2))


def twirl_mc_oracle(
    beta: complex,
    betap: complex,
    Delta: float,
    samples: int,
    rng: np.random.Generator,
) -> complex:
    """Monte Carlo estimate of the same averaging: the empirical mean of the
    phase ``exp(g*(conj(betap) - conj(beta)) - conj(g)*(betap - beta))`` over
    ``g`` with real and imaginary parts i.i.d. ``N(0, Delta^2)``.

    The exponent is purely imaginary, so every sample lies on the unit circle;
    the imaginary part of the estimate should vanish. Returns the complex
    sample mean.
    """
    if Delta <= 0.0:
        raise ValueError("Delta must be > 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = complex(betap) - complex(beta)
    x = rng.normal(0.0, Delta, samples)
    y = rng.normal(0.0, Delta, samples)
    # g*(conj d) - conj(g)*d = 2i Im(g * conj(d)) with g = x + iy
    phase = 2.0 * (y * d.real - x * d.imag)
    return complex(np.cos(phase).mean(), np.sin(phase).mean())
