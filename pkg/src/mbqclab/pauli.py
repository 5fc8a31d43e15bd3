"""Signed Pauli strings on a 1D qubit chain, plus the operators used throughout.

Conventions
-----------
* Sites are 1-based, ``1 <= i <= n_sites``; the chain length ``N`` is odd.
* A :class:`PauliString` is ``phase * P_1 (x) P_2 (x) ... (x) P_N`` with
  ``P_i in {I, X, Y, Z}`` and ``phase in {+1, +i, -1, -i}`` tracked exactly
  as a power of ``i``.
* Dense promotions place site 1 on the most significant bit, so
  ``to_matrix() == kron(P_1, P_2, ..., P_N) * phase``.

The constructors below build the stabilizer generators of the cluster chain,
the two chain symmetries, and the string order operators (full strings
``K_{>=k}`` and segment strings ``K_{k,l}``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

_LETTERS = "IXYZ"
_I, _X, _Y, _Z = 0, 1, 2, 3

# product letter and phase (power of i) tables: row * column
_PROD_LETTER = np.array(
    [
        [0, 1, 2, 3],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
    ],
    dtype=np.uint8,
)
_PROD_PHASE = np.array(
    [
        [0, 0, 0, 0],
        [0, 0, 1, 3],
        [0, 3, 0, 1],
        [0, 1, 3, 0],
    ],
    dtype=np.uint8,
)

_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

DENSE_SITE_LIMIT = 14

_TOKEN_RE = re.compile(r"([IXYZ])(\d+)")
_HEAD_RE = re.compile(r"^\s*([+-])\s*(i?)\s*(.*?)\s*$")


@dataclass(frozen=True)
class PauliString:
    """Immutable signed tensor product of single-site Pauli letters.

    Attributes
    ----------
    n_sites : int
        Chain length N.
    letters : bytes
        One byte per site, values 0..3 encoding I, X, Y, Z.
    phase_power : int
        The global phase is ``i ** phase_power`` with ``phase_power in 0..3``.
    """

    n_sites: int
    letters: bytes
    phase_power: int = 0

    def __post_init__(self):
        if self.n_sites <= 0:
            raise ValueError(f"n_sites must be positive, got {self.n_sites}")
        if len(self.letters) != self.n_sites:
            raise ValueError(
                f"letters has {len(self.letters)} entries for n_sites={self.n_sites}"
            )
        if any(b > 3 for b in self.letters):
            raise ValueError("letter codes must be in 0..3")
        if not 0 <= self.phase_power <= 3:
            object.__setattr__(self, "phase_power", self.phase_power % 4)

    # ------------------------------------------------------------------ build
    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites, bytes(n_sites), 0)

    @classmethod
    def from_text_letters(cls, text: str, phase: complex = 1) -> "PauliString":
        """Build from a compact letter string like ``"IZXXZ"``."""
        codes = bytes(_LETTERS.index(c) for c in text.upper())
        return cls(len(codes), codes, _phase_to_power(phase))

    @classmethod
    def from_sites(cls, n_sites: int, sites: dict[int, str], phase: complex = 1) -> "PauliString":
        """Build from a map of 1-based site -> letter; unspecified sites are I."""
        codes = bytearray(n_sites)
        for site, letter in sites.items():
            if not 1 <= site <= n_sites:
                raise IndexError(f"site {site} outside chain 1..{n_sites}")
            codes[site - 1] = _LETTERS.index(letter.upper())
        return cls(n_sites, bytes(codes), _phase_to_power(phase))

    # ------------------------------------------------------------- properties
    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_power]

    @property
    def is_hermitian(self) -> bool:
        """True iff the global phase is real (each letter is Hermitian)."""
        return self.phase_power in (0, 2)

    @property
    def is_identity(self) -> bool:
        return self.phase_power == 0 and self.letters == bytes(self.n_sites)

    def letter(self, site: int) -> str:
        if not 1 <= site <= self.n_sites:
            raise IndexError(f"site {site} outside chain 1..{self.n_sites}")
        return _LETTERS[self.letters[site - 1]]

    @property
    def support(self) -> tuple[int, ...]:
        """1-based sites carrying a non-identity letter."""
        return tuple(i + 1 for i, b in enumerate(self.letters) if b != _I)

    # ------------------------------------------------------------------ group
    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.n_sites != other.n_sites:
            raise ValueError(
                f"length mismatch: {self.n_sites} vs {other.n_sites} sites"
            )
        a = np.frombuffer(self.letters, dtype=np.uint8)
        b = np.frombuffer(other.letters, dtype=np.uint8)
        letters = _PROD_LETTER[a, b].tobytes()
        power = (self.phase_power + other.phase_power + int(_PROD_PHASE[a, b].sum())) % 4
        return PauliString(self.n_sites, letters, power)

    def conjugate_transpose(self) -> "PauliString":
        """Hermitian conjugate; letters are self-adjoint, only the phase flips."""
        power = self.phase_power if self.phase_power in (0, 2) else (self.phase_power + 2) % 4
        return PauliString(self.n_sites, self.letters, power)

    # ------------------------------------------------------------- promotions
    def masks(self) -> tuple[int, int, int]:
        """Bit masks (site 1 = MSB): flip mask (X|Y), sign mask (Z|Y), Y count."""
        flip = 0
        sign = 0
        n_y = 0
        for i, b in enumerate(self.letters):
            bit = 1 << (self.n_sites - 1 - i)
            if b in (_X, _Y):
                flip |= bit
            if b in (_Z, _Y):
                sign |= bit
            if b == _Y:
                n_y += 1
        return flip, sign, n_y

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply to a dense statevector of length ``2 ** n_sites``."""
        dim = 1 << self.n_sites
        if vec.shape != (dim,):
            raise ValueError(f"statevector shape {vec.shape} != ({dim},)")
        flip, sign, n_y = self.masks()
        idx = np.arange(dim, dtype=np.uint64)
        parity = np.bitwise_count(idx & np.uint64(sign)) & 1
        coeff = self.phase * (1j ** n_y) * np.where(parity, -1.0, 1.0)
        out = np.empty(dim, dtype=complex)
        out[idx ^ np.uint64(flip)] = coeff * vec
        return out

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; refuses chains longer than ``DENSE_SITE_LIMIT``."""
        if self.n_sites > DENSE_SITE_LIMIT:
            raise ValueError(
                f"dense promotion limited to {DENSE_SITE_LIMIT} sites, got {self.n_sites}"
            )
        mat = reduce(np.kron, (_MATRICES[b] for b in self.letters))
        return self.phase * mat

    def to_mpo(self) -> list[np.ndarray]:
        """Bond-dimension-1 MPO tensors ``(1, 1, 2, 2)``, phase on the first site."""
        tensors = [_MATRICES[b].reshape(1, 1, 2, 2).copy() for b in self.letters]
        tensors[0] = tensors[0] * self.phase
        return tensors

    # ------------------------------------------------------------------- text
    def __str__(self) -> str:
        head = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase_power]
        body = " ".join(
            f"{_LETTERS[b]}{i + 1}" for i, b in enumerate(self.letters) if b != _I
        )
        return f"{head}{body}" if body else f"{head}I"

    @classmethod
    def parse(cls, text: str, n_sites: int) -> "PauliString":
        """Inverse of ``str``; e.g. ``"+Z1 X2 X4 Z5"``."""
        m = _HEAD_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        sign, imag, body = m.groups()
        power = {("+", ""): 0, ("+", "i"): 1, ("-", ""): 2, ("-", "i"): 3}[(sign, imag)]
        codes = bytearray(n_sites)
        body = body.strip()
        if body and body != "I":
            consumed = _TOKEN_RE.findall(body)
            if "".join(f"{l}{s}" for l, s in consumed) != body.replace(" ", ""):
                raise ValueError(f"cannot parse Pauli string body {body!r}")
            for letter, site_text in consumed:
                site = int(site_text)
                if not 1 <= site <= n_sites:
                    raise IndexError(f"site {site} outside chain 1..{n_sites}")
                if codes[site - 1] != _I:
                    raise ValueError(f"site {site} given twice in {text!r}")
                codes[site - 1] = _LETTERS.index(letter)
        return cls(n_sites, bytes(codes), power)


def _phase_to_power(phase: complex) -> int:
    for p, value in enumerate(_PHASES):
        if abs(phase - value) < 1e-12:
            return p
    raise ValueError(f"phase must be one of +1, +i, -1, -i, got {phase}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Group product with exact accumulated phase."""
    return a * b


# --------------------------------------------------------------------- chain
@dataclass(frozen=True)
class ChainSpec:
    """An odd-length chain at position ``alpha`` inside the cluster phase.

    ``alpha`` must satisfy ``|alpha| < pi/4``; outside that window the model
    leaves the phase and every downstream quantity is undefined.
    """

    n_sites: int
    alpha: float

    def __post_init__(self):
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError(f"n_sites must be an odd integer >= 3, got {self.n_sites}")
        if not abs(self.alpha) < math.pi / 4:
            raise ValueError(
                f"alpha={self.alpha} outside the cluster phase (|alpha| < pi/4)"
            )


# ------------------------------------------------------------- constructors
def _check_odd(n_sites: int):
    if n_sites % 2 == 0 or n_sites < 3:
        raise ValueError(f"chain length must be odd and >= 3, got {n_sites}")


def string_order_geq(k: int, n_sites: int) -> PauliString:
    """Full string order operator ``K_{>=k}`` running from site k to the chain end.

    For odd k this is ``Z_k X_{k+1} X_{k+3} .. X_{N-1} Z_N``; for even k the
    alternating X's continue through ``X_N`` and there is no trailing Z.
    """
    _check_odd(n_sites)
    if not 1 <= k <= n_sites - 1:
        raise IndexError(f"k={k} outside 1..{n_sites - 1}")
    sites = {k: "Z"}
    for j in range(k + 1, n_sites + 1, 2):
        sites[j] = "X"
    if k % 2 == 1:
        sites[n_sites] = "Z"  # overwrites nothing: X's stop at N-1 for odd k
    return PauliString.from_sites(n_sites, sites)


def string_order_pair(k: int, l: int, n_sites: int) -> PauliString:
    """Segment string order operator ``K_{k,l} = Z_k X_{k+1} X_{k+3} .. X_{l-1} Z_l``."""
    _check_odd(n_sites)
    if not (1 <= k < l <= n_sites):
        raise IndexError(f"need 1 <= k < l <= {n_sites}, got k={k}, l={l}")
    if (l - k) % 2 != 0:
        raise ValueError(f"l - k must be even, got k={k}, l={l}")
    sites = {k: "Z", l: "Z"}
    for j in range(k + 1, l, 2):
        sites[j] = "X"
    return PauliString.from_sites(n_sites, sites)


def symmetry_generators(n_sites: int) -> tuple[PauliString, PauliString]:
    """The two Z2 x Z2 generators ``(g0, g1)`` of the protecting symmetry."""
    _check_odd(n_sites)
    g0 = {1: "Z", n_sites: "Z"}
    for j in range(2, n_sites, 2):
        g0[j] = "X"
    g1 = {j: "X" for j in range(1, n_sites + 1, 2)}
    return (
        PauliString.from_sites(n_sites, g0),
        PauliString.from_sites(n_sites, g1),
    )


def cluster_stabilizer(i: int, n_sites: int) -> PauliString:
    """Stabilizer generator ``K_i = Z_{i-1} X_i Z_{i+1}`` with open-end forms."""
    _check_odd(n_sites)
    if not 1 <= i <= n_sites:
        raise IndexError(f"i={i} outside 1..{n_sites}")
    sites = {i: "X"}
    if i > 1:
        sites[i - 1] = "Z"
    if i < n_sites:
        sites[i + 1] = "Z"
    return PauliString.from_sites(n_sites, sites)
