"""The authentication scheme: key generation, encoding (code block + traps +
permutation + one-time pad), attack application, and decoding (inverse
operations + homodyne trap verification + oracle message recovery).

The code block is realized as a declared oracle: encoding places the logical
coherent state in message slot 0 and vacuum in slots 1..n-1, and decoding
consults the ground-truth displacement ledger to decide correctability. The
decoder's accept/reject decision never reads the ledger; only homodyne
outcomes do.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analytics import SchemeParams, hamming_weight_delta
from .cvgauss import (
    GaussianState,
    HomodyneRecord,
    Quadrature,
    _permute_by_inverse,
    displace_all,
    homodyne,
    invert_permutation,
    make_coherent,
    make_squeezed_p,
    make_squeezed_x,
    make_vacuum,
    tensor,
    unpermute_vector,
)

_SQRT2 = np.sqrt(2.0)


class Flag(Enum):
    ACC = "acc"
    REJ = "rej"


@dataclass(frozen=True)
class LogicalMessage:
    """Single-mode message restricted to a coherent-state label."""

    amplitude: complex

    def __post_init__(self):
        a = complex(self.amplitude)
        if not (np.isfinite(a.real) and np.isfinite(a.imag)):
            raise ValueError("message amplitude must be finite")
        object.__setattr__(self, "amplitude", a)


#: Fixed dummy message emitted on reject (vacuum label). Rejection is
#: signalled by identity with this object.
DUMMY_MESSAGE = LogicalMessage(0j)


@dataclass(frozen=True)
class AuthKey:
    """Secret key: a permutation of the ``n + 2z`` modes and a one-time-pad
    displacement vector with per-axis variance ``Delta^2``."""

    perm: np.ndarray
    otp: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.intp)
        otp = np.asarray(self.otp, dtype=complex)
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("perm is not a permutation")
        if otp.shape != (perm.size,):
            raise ValueError("otp length does not match perm")
        perm.flags.writeable = False
        otp.flags.writeable = False
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "otp", otp)

    @classmethod
    def _trusted(cls, perm: np.ndarray, otp: np.ndarray) -> "AuthKey":
        # internal fast path for keygen output
        obj = object.__new__(cls)
        perm.flags.writeable = False
        otp.flags.writeable = False
        object.__setattr__(obj, "perm", perm)
        object.__setattr__(obj, "otp", otp)
        return obj


@dataclass(frozen=True)
class CipherState:
    """Ciphertext register plus simulation instrumentation.

    ``ledger`` is the net non-key displacement applied so far, indexed in
    cipher-wire mode order (the attacker acts on wire modes and has no key, so
    wire order is the only order it can be recorded in). The decoder maps it
    through the inverse key permutation before consulting the code oracle; the
    accept/reject decision itself never reads it.
    """

    state: GaussianState
    ledger: np.ndarray

    def __post_init__(self):
        ledger = np.asarray(self.ledger, dtype=complex)
        if ledger.shape != (self.state.modes,):
            raise ValueError("ledger length does not match state modes")
        ledger.flags.writeable = False
        object.__setattr__(self, "ledger", ledger)

    @classmethod
    def _trusted(cls, state: GaussianState, ledger: np.ndarray) -> "CipherState":
        obj = object.__new__(cls)
        ledger.flags.writeable = False
        object.__setattr__(obj, "state", state)
        object.__setattr__(obj, "ledger", ledger)
        return obj


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of decoding: accept/reject flag, the 2z trap measurement
    records, the recovered (or dummy) message, the code oracle's
    correctability verdict, and whether the traps passed while the message
    carried uncorrectable noise."""

    flag: Flag
    traps: tuple[HomodyneRecord, ...]
    message: LogicalMessage
    correctable: bool
    gminusi_event: bool

    def __post_init__(self):
        if self.flag is Flag.REJ and self.message is not DUMMY_MESSAGE:
            raise ValueError("rejected decode must carry the dummy message")
        if self.gminusi_event and self.flag is not Flag.ACC:
            raise ValueError("gminusi_event implies acceptance")


def keygen(params: SchemeParams, rng: np.random.Generator) -> AuthKey:
    """Draw a uniform random mode permutation and a complex Gaussian
    one-time-pad vector with per-axis standard deviation ``Delta``.

    Consumes the generator in a fixed order: the permutation, then ``2m``
    normals (``m`` real parts followed by ``m`` imaginary parts).
    """
    m = params.modes
    perm = rng.permutation(m)
    axes = rng.normal(0.0, params.Delta, 2 * m)
    return AuthKey._trusted(perm, axes[:m] + 1j * axes[m:])


def plain_state(params: SchemeParams, msg: LogicalMessage) -> GaussianState:
    """The pre-key state in scheme layout: the logical coherent state in
    message slot 0, vacuum in slots 1..n-1, then z x-squeezed and z p-squeezed
    traps."""
    blocks = [make_coherent(msg.amplitude)]
    if params.n > 1:
        blocks.append(make_vacuum(params.n - 1))
    blocks.extend(make_squeezed_x(params.r) for _ in range(params.z))
    blocks.extend(make_squeezed_p(params.r) for _ in range(params.z))
    return tensor(*blocks)


def encode_state(plain: GaussianState, key: AuthKey) -> CipherState:
    """Apply the key to an already-built plain state: permute the modes, then
    displace by the one-time pad. The ledger starts at zero."""
    if plain.modes != key.perm.size:
        raise ValueError("key size does not match state modes")
    st = _permute_by_inverse(plain, invert_permutation(key.perm))
    st = displace_all(st, key.otp)
    return CipherState._trusted(st, np.zeros(plain.modes, dtype=complex))


def encode(params: SchemeParams, key: AuthKey, msg: LogicalMessage) -> CipherState:
    """Full encoding map: build the plain state for ``msg`` and apply the key."""
    return encode_state(plain_state(params, msg), key)


def apply_attack(cipher: CipherState, attack, rng: np.random.Generator) -> CipherState:
    """Sample one branch of a displacement-mixture attack and apply it to the
    cipher wire modes, recording the branch vector in the ledger."""
    alpha = attack.sample(rng)
    if alpha.shape != (cipher.state.modes,):
        raise ValueError(
            f"attack acts on {alpha.size} modes, cipher has {cipher.state.modes}"
        )
    return CipherState._trusted(displace_all(cipher.state, alpha), cipher.ledger + alpha)


def qecc_oracle_decode(
    residual: np.ndarray, params: SchemeParams
) -> tuple[bool, complex]:
    """Code-oracle verdict on a message-block residual displacement vector:
    correctable iff at most ``t`` components exceed ``delta`` in magnitude.
    When uncorrectable, the logical error is the residual of the designated
    logical slot (slot 0); when correctable the logical error is 0.
    """
    residual = np.asarray(residual, dtype=complex)
    if residual.shape != (params.n,):
        raise ValueError(f"expected length {params.n}, got shape {residual.shape}")
    if hamming_weight_delta(residual, params.delta) <= params.t:
        return True, 0j
    return False, complex(residual[0])


def measure_traps(
    state: GaussianState, params: SchemeParams, rng: np.random.Generator
) -> tuple[bool, tuple[HomodyneRecord, ...], GaussianState]:
    """Homodyne all 2z traps of a state in scheme layout: x on the X traps,
    p on the P traps. Returns the acceptance verdict (every outcome in
    ``[-eps, eps]``), the measurement records, and the n-mode posterior.
    """
    n, z, eps = params.n, params.z, params.eps
    records = []
    accept = True
    # measured modes are removed, so the next trap is always at index n
    for j in range(z):
        outcome, state = homodyne(state, n, Quadrature.X, rng)
        records.append(HomodyneRecord(n + j, Quadrature.X, outcome))
        accept = accept and abs(outcome) <= eps
    for j in range(z):
        outcome, state = homodyne(state, n, Quadrature.P, rng)
        records.append(HomodyneRecord(n + z + j, Quadrature.P, outcome))
        accept = accept and abs(outcome) <= eps
    return accept, tuple(records), state


def decode(
    params: SchemeParams,
    key: AuthKey,
    cipher: CipherState,
    rng: np.random.Generator,
) -> DecodeResult:
    """Full decoding map: undo the one-time pad and the permutation, verify
    the traps by homodyne detection, and on acceptance recover the message
    through the code oracle.

    On reject the message block is discarded and the fixed dummy message is
    returned. The correctability verdict is reported in either case (it is
    pure ledger instrumentation).
    """
    if cipher.state.modes != params.modes:
        raise ValueError(
            f"cipher has {cipher.state.modes} modes, scheme needs {params.modes}"
        )
    st = displace_all(cipher.state, -key.otp)
    st = permute_modes(st, invert_permutation(key.perm))
    accept, records, posterior = measure_traps(st, params, rng)

    residual = unpermute_vector(cipher.ledger, key.perm)
    correctable, logical_error = qecc_oracle_decode(residual[: params.n], params)

    if accept:
        raw = complex(posterior.mean[0], posterior.mean[1]) / _SQRT2
        # the oracle removes the slot-0 residual when correctable and leaves
        # the corrupted value otherwise
        message = LogicalMessage(raw - residual[0] + logical_error)
        flag = Flag.ACC
    else:
        message = DUMMY_MESSAGE
        flag = Flag.REJ
    return DecodeResult(
        flag=flag,
        traps=records,
        message=message,
        correctable=correctable,
        gminusi_event=accept and not correctable,
    )


# --- ciphertext checkpoint format -------------------------------------------
#
# Binary layout (documented for harness checkpointing):
#   header: '<III' little-endian uint32 (n, z, format version)
#   mean:   2m float64 little-endian, m = n + 2z, order (x1, p1, ..., xm, pm)
#   cov:    (2m)^2 float64 little-endian, row-major
#   ledger: 2m float64 little-endian, (Re l_0, Im l_0, ..., Re l_{m-1}, Im l_{m-1})

CIPHER_FORMAT_VERSION = 1
_HEADER = struct.Struct("<III")


def cipher_to_bytes(cipher: CipherState, n: int, z: int) -> bytes:
    """Serialize a cipher state (means, covariance, ledger) to the flat
    little-endian layout above."""
    m = n + 2 * z
    if cipher.state.modes != m:
        raise ValueError(f"cipher has {cipher.state.modes} modes, header says {m}")
    ledger_flat = np.empty(2 * m)
    ledger_flat[0::2] = cipher.ledger.real
    ledger_flat[1::2] = cipher.ledger.imag
    parts = [
        _HEADER.pack(n, z, CIPHER_FORMAT_VERSION),
        np.ascontiguousarray(cipher.state.mean, dtype="<f8").tobytes(),
        np.ascontiguousarray(cipher.state.cov, dtype="<f8").tobytes(),
        ledger_flat.astype("<f8").tobytes(),
    ]
    return b"".join(parts)


def cipher_from_bytes(data: bytes) -> tuple[CipherState, int, int]:
    """Inverse of :func:`cipher_to_bytes`; returns ``(cipher, n, z)``."""
    if len(data) < _HEADER.size:
        raise ValueError("truncated cipher blob")
    n, z, version = _HEADER.unpack_from(data)
    if version != CIPHER_FORMAT_VERSION:
        raise ValueError(f"unsupported cipher format version {version}")
    m = n + 2 * z
    expect = _HEADER.size + 8 * (2 * m + 4 * m * m + 2 * m)
    if len(data) != expect:
        raise ValueError(f"cipher blob has {len(data)} bytes, expected {expect}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    mean = body[: 2 * m].astype(float)
    cov = body[2 * m : 2 * m + 4 * m * m].astype(float).reshape(2 * m, 2 * m)
    ledger_flat = body[2 * m + 4 * m * m :]
    ledger = ledger_flat[0::2] + 1j * ledger_flat[1::2]
    return CipherState(GaussianState(mean, cov), ledger), n, z


def save_cipher(path, cipher: CipherState, n: int, z: int) -> None:
    with open(path, "wb") as fh:
        fh.write(cipher_to_bytes(cipher, n, z))


def load_cipher(path) -> tuple[CipherState, int, int]:
    with open(path, "rb") as fh:
        return cipher_from_bytes(fh.read())
