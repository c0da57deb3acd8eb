"""Symplectic GF(2) representation of the n-qubit Pauli group.

An operator is stored as i^phase * X(x_bits) * Z(z_bits) with the X part to
the left of the Z part.  Bit i of x_bits / z_bits refers to qubit i; bit
vectors are plain Python integers, so multiply and commute cost one popcount
each regardless of n.  With this normal form the product rule is

    (i^p X(x1)Z(z1)) (i^q X(x2)Z(z2))
        = i^(p + q + 2*|z1 & x2|) X(x1^x2) Z(z1^z2)

because each Z crossing an X to its right contributes ZX = -XZ.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, ResourceLimitError

_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PREFIX_VALUE = {"+": 0, "+i": 1, "-": 2, "-i": 3, "": 0, "i": 1, "-i": 3}


@dataclass(frozen=True)
class PauliOp:
    """Immutable n-qubit Pauli: i^phase * X(x_bits) * Z(z_bits)."""

    n: int
    x_bits: int
    z_bits: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        limit = 1 << self.n
        if not (0 <= self.x_bits < limit and 0 <= self.z_bits < limit):
            raise ValueError("bit vector exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        return multiply(self, other)

    def adjoint(self) -> "PauliOp":
        # (i^p XZ)^dag = (-i)^p Z X = i^(-p) (-1)^|x&z| XZ
        ph = (-self.phase + 2 * (self.x_bits & self.z_bits).bit_count()) % 4
        return PauliOp(self.n, self.x_bits, self.z_bits, ph)

    @property
    def support(self) -> int:
        return self.x_bits | self.z_bits

    def __str__(self) -> str:
        return format_pauli(self)


def identity(n: int) -> PauliOp:
    return PauliOp(n, 0, 0, 0)


def single(n: int, qubit: int, kind: str, phase: int = 0) -> PauliOp:
    """One-site X, Y, or Z embedded in n qubits."""
    if not 0 <= qubit < n:
        raise ValueError("qubit index out of range")
    if kind == "X":
        return PauliOp(n, 1 << qubit, 0, phase)
    if kind == "Z":
        return PauliOp(n, 0, 1 << qubit, phase)
    if kind == "Y":
        # Y = i XZ
        return PauliOp(n, 1 << qubit, 1 << qubit, (phase + 1) % 4)
    raise ValueError(f"unknown Pauli letter: {kind}")


def _check_same_n(a: PauliOp, b: PauliOp):
    if a.n != b.n:
        raise ValueError(f"qubit count mismatch: {a.n} vs {b.n}")


def multiply(a: PauliOp, b: PauliOp) -> PauliOp:
    """Exact group product with phase tracking."""
    _check_same_n(a, b)
    ph = (a.phase + b.phase + 2 * (a.z_bits & b.x_bits).bit_count()) % 4
    return PauliOp(a.n, a.x_bits ^ b.x_bits, a.z_bits ^ b.z_bits, ph)


def commutes(a: PauliOp, b: PauliOp) -> bool:
    """True iff ab == ba (symplectic pairing is even)."""
    _check_same_n(a, b)
    return ((a.x_bits & b.z_bits).bit_count() + (a.z_bits & b.x_bits).bit_count()) % 2 == 0


def weight(a: PauliOp) -> int:
    """Number of qubits acted on non-trivially."""
    return (a.x_bits | a.z_bits).bit_count()


def to_dense(a: PauliOp, max_qubits: int | None = None) -> np.ndarray:
    """Dense 2^n x 2^n unitary in the computational basis.

    Column c holds i^phase * (-1)^|z & c| at row c ^ x: one scatter instead
    of an n-fold Kronecker product.
    """
    cap = DEFAULT_CONFIG.dense_bridge_max_qubits if max_qubits is None else max_qubits
    if a.n > cap:
        raise ResourceLimitError(f"dense bridge capped at {cap} qubits, got {a.n}")
    dim = 1 << a.n
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & a.z_bits) & 1)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[cols ^ a.x_bits, cols] = (1j ** a.phase) * signs
    return mat


def format_pauli(a: PauliOp) -> str:
    """Render as sign prefix + one letter per site, e.g. "-iXZII"."""
    letters = []
    n_y = 0
    for q in range(a.n):
        x = a.x_bits >> q & 1
        z = a.z_bits >> q & 1
        if x and z:
            letters.append("Y")
            n_y += 1
        elif x:
            letters.append("X")
        elif z:
            letters.append("Z")
        else:
            letters.append("I")
    # each Y printed absorbs one factor of i out of the X·Z normal form
    return _PREFIX[(a.phase - n_y) % 4] + "".join(letters)


def parse_pauli(text: str) -> PauliOp:
    """Inverse of `format_pauli`; accepts +, -, +i, -i, i or no prefix."""
    body = text.lstrip("+-i")
    prefix = text[: len(text) - len(body)]
    if prefix not in _PREFIX_VALUE:
        raise ValueError(f"bad phase prefix in {text!r}")
    if not body:
        raise ValueError("empty Pauli string")
    x = z = 0
    n_y = 0
    for q, ch in enumerate(body):
        if ch in ("X", "Y"):
            x |= 1 << q
        if ch in ("Z", "Y"):
            z |= 1 << q
        if ch == "Y":
            n_y += 1
        if ch not in "IXYZ":
            raise ValueError(f"bad Pauli letter {ch!r} in {text!r}")
    return PauliOp(len(body), x, z, (_PREFIX_VALUE[prefix] + n_y) % 4)


def apply_to_vector(a: PauliOp, vec: np.ndarray) -> np.ndarray:
    """Matrix-free action on state vectors (length-2^n array or stack of columns)."""
    dim = 1 << a.n
    if vec.shape[0] != dim:
        raise ValueError("vector length does not match qubit count")
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & a.z_bits) & 1)
    if vec.ndim > 1:
        signs = signs[:, None]
    out = np.empty_like(vec, dtype=complex)
    out[cols ^ a.x_bits] = (1j ** a.phase) * signs * vec[cols]
    return out
