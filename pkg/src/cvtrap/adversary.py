"""Attack constructors: discrete mixtures of multi-mode displacement vectors,
plus a plain-text file format for exchanging them.

Attack description file grammar (whitespace-separated decimals, ``#`` starts
a comment that runs to end of line):

    <m>                                   number of modes
    <weight> <re_0> <im_0> ... <re_{m-1}> <im_{m-1}>    one record per branch

Records may wrap lines arbitrarily; only token order matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class AttackSpec:
    """A probabilistic mixture of displacement attacks on the cipher wire.

    ``branches`` is a tuple of ``(weight, alpha)`` pairs; weights are
    non-negative and sum to 1 within ``WEIGHT_TOL``, and every ``alpha`` is a
    complex vector of the same length.
    """

    branches: tuple

    def __post_init__(self):
        if not self.branches:
            raise ValueError("attack needs at least one branch")
        norm = []
        m = None
        for weight, alpha in self.branches:
            weight = float(weight)
            alpha = np.asarray(alpha, dtype=complex)
            if weight < 0.0:
                raise ValueError(f"negative branch weight {weight}")
            if alpha.ndim != 1:
                raise ValueError("branch vector must be one-dimensional")
            if not np.isfinite(alpha.view(float)).all():
                raise ValueError("branch vector must be finite")
            if m is None:
                m = alpha.size
            elif alpha.size != m:
                raise ValueError("branch vectors must all have the same length")
            alpha.flags.writeable = False
            norm.append((weight, alpha))
        total = sum(w for w, _ in norm)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"branch weights sum to {total}, expected 1")
        cum = np.cumsum([w for w, _ in norm])
        cum[-1] = 1.0
        cum.flags.writeable = False
        object.__setattr__(self, "branches", tuple(norm))
        object.__setattr__(self, "_cum", cum)

    @property
    def modes(self) -> int:
        return self.branches[0][1].size

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one branch vector according to the weights."""
        if len(self.branches) == 1:
            return self.branches[0][1]
        i = int(np.searchsorted(self._cum, rng.random(), side="right"))
        return self.branches[min(i, len(self.branches) - 1)][1]


def attack_identity(m: int) -> AttackSpec:
    """The null attack: a single zero-displacement branch."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return AttackSpec(((1.0, np.zeros(m, dtype=complex)),))


def attack_fixed_modes(m: int, modes, amp: complex) -> AttackSpec:
    """Single-branch attack displacing the listed wire modes by ``amp``."""
    modes = [int(i) for i in modes]
    idx = sorted(set(modes))
    if len(idx) != len(modes):
        raise ValueError("mode indices must be distinct")
    if idx and (idx[0] < 0 or idx[-1] >= m):
        raise ValueError(f"mode index out of range for {m} modes")
    alpha = np.zeros(m, dtype=complex)
    alpha[idx] = complex(amp)
    return AttackSpec(((1.0, alpha),))


def attack_random_modes(
    m: int,
    u: int,
    amp_magnitude: float,
    rng: np.random.Generator,
    branches: int = 1,
) -> AttackSpec:
    """Attack hitting ``u`` uniformly chosen distinct wire modes, each
    displaced by ``amp_magnitude`` with an independent uniform phase. One
    branch per draw; ``branches`` draws with equal weight."""
    if not 0 <= u <= m:
        raise ValueError(f"need 0 <= u <= m, got u={u}, m={m}")
    if branches < 1:
        raise ValueError("branches must be >= 1")
    out = []
    for _ in range(branches):
        alpha = np.zeros(m, dtype=complex)
        if u:
            idx = rng.choice(m, size=u, replace=False)
            phases = rng.uniform(0.0, 2.0 * np.pi, u)
            alpha[idx] = amp_magnitude * np.exp(1j * phases)
        out.append((1.0 / branches, alpha))
    return AttackSpec(tuple(out))


def attack_mixture(specs) -> AttackSpec:
    """Weighted mixture of attacks, flattened into a single branch list."""
    specs = list(specs)
    if not specs:
        raise ValueError("mixture needs at least one component")
    total = sum(float(w) for w, _ in specs)
    if any(float(w) < 0.0 for w, _ in specs) or abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError("mixture weights must be a probability distribution")
    flat = []
    for w, spec in specs:
        for bw, alpha in spec.branches:
            flat.append((float(w) * bw, alpha))
    return AttackSpec(tuple(flat))


def parse_attack_text(text: str) -> AttackSpec:
    """Parse the attack file grammar documented in the module docstring."""
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens:
        raise ValueError("attack description is empty")
    try:
        m = int(tokens[0])
    except ValueError:
        raise ValueError(f"first token must be the mode count, got {tokens[0]!r}")
    if m < 1:
        raise ValueError("mode count must be >= 1")
    body = tokens[1:]
    record = 1 + 2 * m
    if not body or len(body) % record != 0:
        raise ValueError(
            f"expected records of 1 weight + {2 * m} floats, got {len(body)} tokens"
        )
    branches = []
    for k in range(0, len(body), record):
        try:
            values = [float(tok) for tok in body[k : k + record]]
        except ValueError as exc:
            raise ValueError(f"bad decimal in attack description: {exc}")
        alpha = np.array(values[1::2]) + 1j * np.array(values[2::2])
        branches.append((values[0], alpha))
    return AttackSpec(tuple(branches))


def parse_attack_file(path) -> AttackSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_attack_text(fh.read())


def write_attack_file(path, spec: AttackSpec) -> None:
    """Write an attack in the file grammar, one branch per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{spec.modes}\n")
        for weight, alpha in spec.branches:
            cols = [repr(weight)]
            for a in alpha:
                cols.append(repr(a.real))
                cols.append(repr(a.imag))
            fh.write(" ".join(cols) + "\n")
