"""Local Lindblad generators and their action on ring operators.

A generator with window width r consists of a Hermitian Hamiltonian h
on r sites and a dissipator given either in diagonal form (a list of
jump operators L_k) or in structure form (a Hermitian, positive
semidefinite coefficient matrix gamma over the non-identity Pauli
strings of the window).  Acting on an observable A it produces

    i [A, h] + sum_{j,k} gamma_{jk} ([P_j A, P_k] + [P_j, A P_k])

which in diagonal form reads i[A, h] + sum_k (2 L_k A L_k^dag
- {L_k^dag L_k, A}).  The same expression governs conservation:
A is conserved when the generator maps it to zero.
"""

from __future__ import annotations

import itertools
import re

import numpy as np
import scipy.linalg

from .pauli import PauliOperator, parse_operator, format_operator, partial_trace

GAMMA_HERMITICITY_TOL = 1e-12
GAMMA_PSD_TOL = 1e-10
KERNEL_TOL = 1e-10
UNITAL_TOL = 1e-12


def all_strings(r: int) -> list[str]:
    """All Pauli strings on r sites, lexicographic, I < X < Y < Z, site 0 first."""
    return ["".join(t) for t in itertools.product("IXYZ", repeat=r)]


def basis_strings(r: int) -> list[str]:
    """The non-identity strings, in the same order; structure-form basis."""
    return [s for s in all_strings(r) if s != "I" * r]


class LindbladGenerator:
    """Window-local generator; exactly one of `lindblads` or `gamma` is set."""

    def __init__(self, r, hamiltonian=None, lindblads=None, gamma=None):
        self.r = int(r)
        if hamiltonian is None:
            hamiltonian = PauliOperator.zero(self.r)
        if hamiltonian.n != self.r:
            raise ValueError("hamiltonian window does not match r")
        if not hamiltonian.is_hermitian(1e-12):
            raise ValueError("hamiltonian must be Hermitian")
        self.hamiltonian = hamiltonian
        if (lindblads is None) == (gamma is None):
            raise ValueError("give either jump operators or a structure matrix")
        if lindblads is not None:
            self.form = "diagonal"
            self.lindblads = list(lindblads)
            for L in self.lindblads:
                if L.n != self.r:
                    raise ValueError("jump operator window does not match r")
            self.gamma = None
        else:
            self.form = "structure"
            g = np.asarray(gamma, dtype=complex)
            m = len(basis_strings(self.r))
            if g.shape != (m, m):
                raise ValueError(f"gamma must be {m}x{m} for r={self.r}")
            if np.abs(g - g.conj().T).max() > GAMMA_HERMITICITY_TOL:
                raise ValueError("gamma must be Hermitian")
            self.gamma = g
            self.lindblads = None

    # -- action -------------------------------------------------------------

    def apply(self, rho: PauliOperator, offset: int = 0) -> PauliOperator:
        """Generator embedded at `offset` acting on a ring operator."""
        n = rho.n
        if n < self.r:
            raise ValueError("ring shorter than generator window")
        out = PauliOperator.zero(n)
        if self.hamiltonian.num_terms:
            h = self.hamiltonian.embed(n, offset)
            out = out + 1j * (rho @ h - h @ rho)
        if self.form == "diagonal":
            for L in self.lindblads:
                Le = L.embed(n, offset)
                Ld = Le.dagger()
                out = out + 2.0 * (Le @ rho @ Ld) - (Ld @ Le @ rho) - (rho @ Ld @ Le)
        else:
            basis = basis_strings(self.r)
            embedded: dict[int, PauliOperator] = {}

            def emb(i):
                if i not in embedded:
                    embedded[i] = PauliOperator.from_label(basis[i]).embed(n, offset)
                return embedded[i]

            rows, cols = np.nonzero(np.abs(self.gamma) > 0)
            for j, k in zip(rows, cols):
                g = self.gamma[j, k]
                Pj, Pk = emb(int(j)), emb(int(k))
                out = out + (2.0 * g) * (Pj @ rho @ Pk) - g * (Pk @ Pj @ rho) - g * (rho @ Pk @ Pj)
        return out

    def apply_at_sites(self, rho: PauliOperator, sites: tuple[int, ...]) -> PauliOperator:
        """Generator action with window site i placed at ring site sites[i]."""
        n = rho.n
        out = PauliOperator.zero(n)
        if self.hamiltonian.num_terms:
            h = self.hamiltonian.embed_at_sites(n, sites)
            out = out + 1j * (rho @ h - h @ rho)
        if self.form == "diagonal":
            for L in self.lindblads:
                Le = L.embed_at_sites(n, sites)
                Ld = Le.dagger()
                out = out + 2.0 * (Le @ rho @ Ld) - (Ld @ Le @ rho) - (rho @ Ld @ Le)
        else:
            basis = basis_strings(self.r)
            embedded: dict[int, PauliOperator] = {}

            def emb(i):
                if i not in embedded:
                    embedded[i] = PauliOperator.from_label(basis[i]).embed_at_sites(n, sites)
                return embedded[i]

            rows, cols = np.nonzero(np.abs(self.gamma) > 0)
            for j, k in zip(rows, cols):
                g = self.gamma[j, k]
                Pj, Pk = emb(int(j)), emb(int(k))
                out = out + (2.0 * g) * (Pj @ rho @ Pk) - g * (Pk @ Pj @ rho) - g * (rho @ Pk @ Pj)
        return out

    def unital_defect(self) -> PauliOperator:
        """Image of the window identity; zero exactly when the map is unital."""
        return self.apply(PauliOperator.identity(self.r))

    def is_unital(self, tol: float = UNITAL_TOL) -> bool:
        return self.unital_defect().hs_norm() <= tol


def superop_matrix(gen: LindbladGenerator) -> np.ndarray:
    """Matrix of the generator in the full string basis of its window.

    Entry (m, k) is the string-m amplitude of the image of string k;
    strings ordered lexicographically with I < X < Y < Z.  Real for
    Hermiticity-preserving generators.  Guarded to r <= 3.
    """
    if gen.r > 3:
        raise ValueError("superoperator matrix limited to r <= 3")
    strings = all_strings(gen.r)
    dim = len(strings)
    M = np.zeros((dim, dim), dtype=complex)
    for k, s in enumerate(strings):
        img = gen.apply(PauliOperator.from_label(s))
        for m, t in enumerate(strings):
            c = img.terms.get(t)
            if c is not None:
                M[m, k] = c
    if np.abs(M.imag).max() < 1e-12:
        return np.ascontiguousarray(M.real)
    return M


def kernel(gen: LindbladGenerator, tol: float = KERNEL_TOL) -> list[PauliOperator]:
    """Orthonormal basis of the generator's kernel on its window.

    Null directions are singular vectors with singular value below
    tol times the largest singular value.
    """
    M = superop_matrix(gen)
    if not np.any(M):
        ns = np.eye(M.shape[0])
    else:
        ns = scipy.linalg.null_space(M, rcond=tol)
    strings = all_strings(gen.r)
    ops = []
    for col in range(ns.shape[1]):
        vec = ns[:, col]
        ops.append(PauliOperator(gen.r, {s: vec[i] for i, s in enumerate(strings)}))
    return ops


def validate_psd(gen: LindbladGenerator, tol: float = GAMMA_PSD_TOL) -> np.ndarray:
    """Eigenvalues of gamma, raising if any is below -tol."""
    if gen.form != "structure":
        raise ValueError("only structure-form generators carry gamma")
    w = np.linalg.eigvalsh(gen.gamma)
    if w.min() < -tol:
        raise ValueError(f"gamma is not positive semidefinite (min eig {w.min():.3e})")
    return w


def diagonalize_structure(gen: LindbladGenerator, tol: float = GAMMA_PSD_TOL) -> LindbladGenerator:
    """Equivalent diagonal form: jump operators from the eigenbasis of gamma."""
    if gen.form != "structure":
        raise ValueError("generator is already diagonal")
    w, v = np.linalg.eigh(gen.gamma)
    if w.min() < -tol:
        raise ValueError(f"gamma is not positive semidefinite (min eig {w.min():.3e})")
    basis = basis_strings(gen.r)
    ls = []
    for k in range(len(w)):
        if w[k] <= tol:
            continue
        coeff = np.sqrt(w[k]) * v[:, k]
        ls.append(PauliOperator(gen.r, {s: coeff[i] for i, s in enumerate(basis)}))
    return LindbladGenerator(gen.r, hamiltonian=gen.hamiltonian, lindblads=ls)


def to_structure(gen: LindbladGenerator) -> LindbladGenerator:
    """Equivalent structure form.

    Identity components of jump operators act as Hamiltonian terms
    i(c0* L - c0 L^dag) and are folded into the Hamiltonian.
    """
    if gen.form == "structure":
        return gen
    basis = basis_strings(gen.r)
    index = {s: i for i, s in enumerate(basis)}
    m = len(basis)
    g = np.zeros((m, m), dtype=complex)
    h = gen.hamiltonian
    ident = "I" * gen.r
    for L in gen.lindblads:
        c = np.zeros(m, dtype=complex)
        for s, amp in L.terms.items():
            if s != ident:
                c[index[s]] = amp
        g += np.outer(c, c.conj())
        c0 = L.terms.get(ident, 0j)
        if abs(c0) > 0:
            M = L - PauliOperator(gen.r, {ident: c0})
            h = h + 1j * (c0.conjugate() * M - c0 * M.dagger())
    return LindbladGenerator(gen.r, hamiltonian=h, gamma=g)


def reduced_generator(gen: LindbladGenerator) -> LindbladGenerator:
    """One-site generator obtained by tracing out the first window site.

    Defined so that partial_trace(gen.apply(embed(1 x sigma)), site 0)
    equals red.apply(sigma) exactly: the reduced Hamiltonian is the
    partial trace of the Hamiltonian plus a correction from identity
    cross terms of the contracted structure matrix, and the reduced
    gamma is the weighted contraction of gamma over the traced factor.
    """
    if gen.r != 2:
        raise ValueError("reduction is defined for two-site generators")
    sgen = to_structure(gen)
    labels = "IXYZ"
    pairs = [(a, b) for a in labels for b in labels if (a, b) != ("I", "I")]
    basis = basis_strings(2)
    assert basis == [a + b for a, b in pairs]
    g16 = np.zeros((4, 4, 4, 4), dtype=complex)  # (j, mu, k, lam)
    for (ji, (j, mu)) in enumerate(pairs):
        for (ki, (k, lam)) in enumerate(pairs):
            g16[labels.index(j), labels.index(mu), labels.index(k), labels.index(lam)] = \
                sgen.gamma[ji, ki]
    # contract the traced factor; tr(P_j P_j) = 2 fixes the weight
    g = 2.0 * np.einsum("amal->ml", g16)
    gamma_red = np.ascontiguousarray(g[1:, 1:])
    h_red = partial_trace(sgen.hamiltonian, (0,))
    extra = {}
    for lam in range(1, 4):
        w = 2.0 * g[0, lam].imag
        if abs(w) > 0:
            extra[labels[lam]] = extra.get(labels[lam], 0j) + w
    if extra:
        h_red = h_red + PauliOperator(1, extra)
    return LindbladGenerator(1, hamiltonian=h_red, gamma=gamma_red)


# -- file format ---------------------------------------------------------------

_SECTION_RE = re.compile(r"^\[(hamiltonian|lindblad|gamma)\]$")
_COMPLEX_TOKEN = re.compile(
    r"^\(?\s*([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*"
    r"(?:([+-]\s*[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*i)?\s*\)?$"
)


def _parse_complex_token(tok: str) -> complex:
    m = _COMPLEX_TOKEN.match(tok.strip())
    if not m:
        raise ValueError(f"bad matrix entry {tok!r}")
    re_part = float(m.group(1))
    im_part = float(m.group(2).replace(" ", "")) if m.group(2) else 0.0
    return complex(re_part, im_part)


def parse_generator_file(text: str) -> LindbladGenerator:
    """Read a generator description.

    Sections: [hamiltonian] with one operator expression per line
    (lines are summed), and either [lindblad] with one jump operator
    per line or [gamma] with an optional `order = <strings>` line
    followed by the rows of the structure matrix (entries are decimals
    or (a+bi) literals).
    """
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1)
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ValueError(f"content before any section header: {raw!r}")
        sections[current].append(line)
    if ("lindblad" in sections) == ("gamma" in sections):
        raise ValueError("need exactly one of [lindblad] or [gamma]")

    r = None
    hamiltonian = None
    if sections.get("hamiltonian"):
        ops = [parse_operator(line) for line in sections["hamiltonian"]]
        r = ops[0].n
        hamiltonian = ops[0]
        for op in ops[1:]:
            hamiltonian = hamiltonian + op

    if "lindblad" in sections:
        if not sections["lindblad"]:
            raise ValueError("[lindblad] section is empty")
        ls = [parse_operator(line) for line in sections["lindblad"]]
        r = r if r is not None else ls[0].n
        if any(L.n != r for L in ls):
            raise ValueError("jump operators and hamiltonian disagree on window size")
        if hamiltonian is None:
            hamiltonian = PauliOperator.zero(r)
        return LindbladGenerator(r, hamiltonian=hamiltonian, lindblads=ls)

    lines = sections["gamma"]
    if not lines:
        raise ValueError("[gamma] section is empty")
    order = None
    if lines[0].replace(" ", "").lower().startswith("order="):
        order = lines[0].split("=", 1)[1].split()
        lines = lines[1:]
    if order is None:
        if r is None:
            raise ValueError("cannot infer window size: give [hamiltonian] or an order line")
        order = basis_strings(r)
    else:
        r_try = len(order[0])
        if r is None:
            r = r_try
        if any(len(s) != r for s in order):
            raise ValueError("order strings disagree on window size")
    m = len(basis_strings(r))
    if len(order) != m or set(order) != set(basis_strings(r)):
        raise ValueError(f"order must list the {m} non-identity strings exactly once")
    rows = [[_parse_complex_token(tok) for tok in line.split()] for line in lines]
    if len(rows) != m or any(len(row) != m for row in rows):
        raise ValueError(f"gamma must have {m} rows of {m} entries")
    declared = np.array(rows, dtype=complex)
    # reorder into the canonical lexicographic basis
    perm = [order.index(s) for s in basis_strings(r)]
    gamma = declared[np.ix_(perm, perm)]
    if hamiltonian is None:
        hamiltonian = PauliOperator.zero(r)
    return LindbladGenerator(r, hamiltonian=hamiltonian, gamma=gamma)


def _format_complex_entry(c: complex) -> str:
    c = complex(c)
    if abs(c.imag) <= 1e-14:
        r = c.real
        return repr(int(r)) if r == int(r) else repr(r)
    re_s = repr(int(c.real)) if c.real == int(c.real) else repr(c.real)
    sign = "+" if c.imag >= 0 else "-"
    im = abs(c.imag)
    im_s = repr(int(im)) if im == int(im) else repr(im)
    return f"({re_s}{sign}{im_s}i)"


def format_generator_file(gen: LindbladGenerator) -> str:
    """Inverse of parse_generator_file."""
    out = []
    if gen.hamiltonian.num_terms:
        out.append("[hamiltonian]")
        out.append(format_operator(gen.hamiltonian))
    if gen.form == "diagonal":
        out.append("[lindblad]")
        for L in gen.lindblads:
            out.append(format_operator(L))
    else:
        out.append("[gamma]")
        out.append("order = " + " ".join(basis_strings(gen.r)))
        for row in gen.gamma:
            out.append(" ".join(_format_complex_entry(c) for c in row))
    return "\n".join(out) + "\n"
