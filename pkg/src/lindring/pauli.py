"""Sparse operator algebra over Pauli strings on a spin-1/2 ring.

Operators are stored as dictionaries mapping Pauli strings (words over
I, X, Y, Z; site 0 is the leftmost letter) to complex amplitudes.
Products of primitive strings are again primitive strings up to a phase
in {1, -1, 1j, -1j}, so all algebra is exact for integer and dyadic
amplitudes.  The Hilbert-Schmidt inner product is normalized so that
primitive strings are orthonormal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

LABELS = "IXYZ"
_LABEL_SET = frozenset(LABELS)

# amplitudes below this are dropped after arithmetic
PRUNE_TOL = 1e-14

# single-site products: (a, b) -> (phase, a*b)
_MUL1 = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}

_DENSE1 = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def mul_strings(s: str, t: str) -> tuple[complex, str]:
    """Product of two primitive strings: returns (phase, string)."""
    phase = 1 + 0j
    out = []
    for a, b in zip(s, t):
        p, c = _MUL1[(a, b)]
        phase *= p
        out.append(c)
    return phase, "".join(out)


class PauliOperator:
    """An operator on an n-site ring, sparse in the Pauli-string basis."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict[str, complex] | None = None, prune: bool = True):
        self.n = int(n)
        self.terms: dict[str, complex] = {}
        if terms:
            for s, c in terms.items():
                if len(s) != self.n or not _LABEL_SET.issuperset(s):
                    raise ValueError(f"bad Pauli string {s!r} for n={self.n}")
                c = complex(c)
                if not prune or abs(c) > PRUNE_TOL:
                    self.terms[s] = self.terms.get(s, 0j) + c
            if prune:
                self.terms = {s: c for s, c in self.terms.items() if abs(c) > PRUNE_TOL}

    @classmethod
    def _unchecked(cls, n: int, terms: dict[str, complex]) -> "PauliOperator":
        # internal arithmetic: strings are valid by construction
        op = cls.__new__(cls)
        op.n = n
        op.terms = {s: c for s, c in terms.items() if abs(c) > PRUNE_TOL}
        return op

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "PauliOperator":
        return cls(n, {})

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, {"I" * n: 1.0})

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliOperator":
        return cls(len(label), {label: coeff})

    def copy(self) -> "PauliOperator":
        return PauliOperator(self.n, dict(self.terms), prune=False)

    def coefficient(self, label: str) -> complex:
        return self.terms.get(label, 0j)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def is_zero(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    # -- linear structure --------------------------------------------------

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise ValueError("size mismatch")
        out = dict(self.terms)
        for s, c in other.terms.items():
            out[s] = out.get(s, 0j) + c
        return PauliOperator._unchecked(self.n, out)

    def __sub__(self, other: "PauliOperator") -> "PauliOperator":
        return self + (-1.0) * other

    def __neg__(self) -> "PauliOperator":
        return (-1.0) * self

    def __mul__(self, scalar: complex) -> "PauliOperator":
        scalar = complex(scalar)
        return PauliOperator._unchecked(self.n, {s: scalar * c for s, c in self.terms.items()})

    __rmul__ = __mul__

    # -- multiplicative structure ------------------------------------------

    def __matmul__(self, other: "PauliOperator") -> "PauliOperator":
        """Operator product."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        out: dict[str, complex] = {}
        for s, cs in self.terms.items():
            for t, ct in other.terms.items():
                phase, u = mul_strings(s, t)
                out[u] = out.get(u, 0j) + phase * cs * ct
        return PauliOperator._unchecked(self.n, out)

    def dagger(self) -> "PauliOperator":
        """Hermitian conjugate (strings are self-adjoint, amplitudes conjugate)."""
        return PauliOperator(self.n, {s: c.conjugate() for s, c in self.terms.items()}, prune=False)

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    # -- metric ------------------------------------------------------------

    def hs_inner(self, other: "PauliOperator") -> complex:
        """tr(A^dag B) / 2^n; primitive strings are orthonormal."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        a, b = self.terms, other.terms
        if len(b) < len(a):
            return complex(sum(a[s].conjugate() * b[s] for s in b if s in a))
        return complex(sum(a[s].conjugate() * b[s] for s in a if s in b))

    def hs_norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    # -- ring geometry -------------------------------------------------------

    def translate(self, k: int) -> "PauliOperator":
        """Shift every site by k (site s content moves to site s+k mod n)."""
        k = k % self.n
        if k == 0:
            return self.copy()
        return PauliOperator(
            self.n, {s[-k:] + s[:-k]: c for s, c in self.terms.items()}, prune=False
        )

    def embed(self, n: int, offset: int = 0) -> "PauliOperator":
        """Pad with identities to an n-site ring, window start at `offset`."""
        if n < self.n:
            raise ValueError("target ring shorter than operator window")
        pad = "I" * (n - self.n)
        out = {s + pad: c for s, c in self.terms.items()}
        op = PauliOperator(n, out, prune=False)
        return op.translate(offset) if offset % n else op

    def embed_at_sites(self, n: int, sites: tuple[int, ...]) -> "PauliOperator":
        """Embed mapping window site i to ring site sites[i] (all distinct)."""
        if len(sites) != self.n or len(set(s % n for s in sites)) != self.n:
            raise ValueError("need as many distinct target sites as window sites")
        out: dict[str, complex] = {}
        for s, c in self.terms.items():
            word = ["I"] * n
            for i, site in enumerate(sites):
                word[site % n] = s[i]
            key = "".join(word)
            out[key] = out.get(key, 0j) + c
        return PauliOperator(n, out, prune=False)

    # -- dense form ----------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; guarded to n <= 10."""
        if self.n > 10:
            raise ValueError("dense form limited to n <= 10 sites")
        dim = 2 ** self.n
        out = np.zeros((dim, dim), dtype=complex)
        for s, c in self.terms.items():
            m = np.array([[c]], dtype=complex)
            for ch in s:
                m = np.kron(m, _DENSE1[ch])
            out += m
        return out

    def __repr__(self) -> str:
        return f"PauliOperator(n={self.n}, {format_operator(self)!r})"


def commutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return a @ b - b @ a


def anticommutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return a @ b + b @ a


# -- locality ---------------------------------------------------------------


@dataclass(frozen=True)
class LocalityReport:
    """Locality of an operator on the ring.

    r is the width of the widest primitive term, where the width of a
    string is the smallest number of consecutive sites (allowing wrap
    around the ring boundary) containing all its non-identity letters.
    `exact` means every term has width exactly r.  `support` is the
    width of the smallest consecutive window covering every term, and
    `window_start` its first site.
    """

    r: int
    exact: bool
    support: int
    window_start: int


def _circular_cover(n: int, occupied: set[int]) -> tuple[int, int]:
    """Width and start of the smallest cyclic window covering `occupied`."""
    if not occupied:
        return 0, 0
    runs = []  # maximal runs of free sites: (length, start)
    length = 0
    for i in range(2 * n):
        if (i % n) in occupied:
            if length:
                runs.append((min(length, n), i - length))
            length = 0
        else:
            length += 1
    if length:
        runs.append((min(length, n), 2 * n - length))
    if not runs:
        return n, 0
    gap, start = max(runs)
    return n - gap, (start + gap) % n


def locality(op: PauliOperator) -> LocalityReport:
    """Classify op per the consecutive-window definition of r-locality."""
    n = op.n
    widths = []
    union: set[int] = set()
    for s, c in op.terms.items():
        occ = {i for i, ch in enumerate(s) if ch != "I"}
        union |= occ
        w, _ = _circular_cover(n, occ)
        widths.append(w)
    if not widths:
        return LocalityReport(r=0, exact=True, support=0, window_start=0)
    r = max(widths)
    support, start = _circular_cover(n, union)
    return LocalityReport(r=r, exact=all(w == r for w in widths), support=support, window_start=start)


def partial_trace(op: PauliOperator, sites: tuple[int, ...]) -> PauliOperator:
    """Trace out the given sites (factor 2 per site, identity letters only)."""
    drop = sorted(set(s % op.n for s in sites))
    if len(drop) >= op.n:
        raise ValueError("cannot trace out every site")
    weight = 2.0 ** len(drop)
    out: dict[str, complex] = {}
    for s, c in op.terms.items():
        if any(s[i] != "I" for i in drop):
            continue
        key = "".join(ch for i, ch in enumerate(s) if i not in drop)
        out[key] = out.get(key, 0j) + weight * c
    return PauliOperator(op.n - len(drop), out)


# -- text format --------------------------------------------------------------

_DECIMAL = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_COMPLEX_RE = re.compile(
    rf"^\(\s*([+-]?{_DECIMAL})\s*(?:([+-]\s*{_DECIMAL})\s*i\s*)?\)"
)
_REAL_RE = re.compile(rf"^[+-]?{_DECIMAL}")
_STRING_RE = re.compile(r"^[IXYZ]+")


def parse_operator(text: str, n: int | None = None) -> PauliOperator:
    """Parse an operator expression.

    Grammar: terms joined by + or -, each term an optional coefficient,
    an optional '*', and a Pauli string over IXYZ.  Coefficients are
    decimals or parenthesized complex literals such as (1.5-0.25i).
    '#' starts a comment; whitespace is ignored.
    """
    body = text.split("#", 1)[0]
    s = re.sub(r"\s+", "", body)
    if not s:
        if n is None:
            raise ValueError("empty operator expression and no ring size given")
        return PauliOperator.zero(n)
    terms: dict[str, complex] = {}
    pos = 0
    first = True
    while pos < len(s):
        sign = 1.0
        took_sign = False
        while pos < len(s) and s[pos] in "+-":
            if s[pos] == "-":
                sign = -sign
            took_sign = True
            pos += 1
        if not first and not took_sign:
            raise ValueError(f"expected + or - at column {pos} in {text!r}")
        first = False
        coeff = 1 + 0j
        if pos < len(s) and s[pos] == "(":
            m = _COMPLEX_RE.match(s[pos:])
            if not m:
                raise ValueError(f"bad complex coefficient at column {pos} in {text!r}")
            re_part = float(m.group(1))
            im_part = float(m.group(2).replace(" ", "")) if m.group(2) else 0.0
            coeff = complex(re_part, im_part)
            pos += m.end()
            if pos < len(s) and s[pos] == "*":
                pos += 1
        else:
            m = _REAL_RE.match(s[pos:])
            if m:
                coeff = complex(float(m.group(0)), 0.0)
                pos += m.end()
                if pos < len(s) and s[pos] == "*":
                    pos += 1
        m = _STRING_RE.match(s[pos:])
        if not m:
            raise ValueError(f"expected Pauli string at column {pos} in {text!r}")
        label = m.group(0)
        pos += m.end()
        if n is not None and len(label) != n:
            raise ValueError(f"string {label!r} has {len(label)} sites, expected {n}")
        if n is None:
            n = len(label)
        terms[label] = terms.get(label, 0j) + sign * coeff
    return PauliOperator(n, terms)


def _format_coeff(c: complex) -> str:
    c = complex(c)
    if abs(c.imag) <= PRUNE_TOL:
        r = c.real
        return repr(int(r)) if r == int(r) else repr(r)
    re_s = repr(int(c.real)) if c.real == int(c.real) else repr(c.real)
    im = c.imag
    sign = "+" if im >= 0 else "-"
    im_s = repr(int(abs(im))) if abs(im) == int(abs(im)) else repr(abs(im))
    return f"({re_s}{sign}{im_s}i)"


def format_operator(op: PauliOperator) -> str:
    """Inverse of parse_operator; terms in lexicographic string order."""
    if not op.terms:
        return "0*" + "I" * op.n
    pieces = []
    for s in sorted(op.terms):
        c = op.terms[s]
        if abs(c.imag) <= PRUNE_TOL and c.real < 0:
            pieces.append(("-", f"{_format_coeff(-c)}*{s}"))
        else:
            pieces.append(("+", f"{_format_coeff(c)}*{s}"))
    head_sign, head = pieces[0]
    out = ("-" if head_sign == "-" else "") + head
    for sign, piece in pieces[1:]:
        out += f" {sign} {piece}"
    return out
