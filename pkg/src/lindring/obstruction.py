"""Obstruction matrices for ring-sum conservation by dissipative generators.

Whether a width-r generator can conserve the ring sum of the canonical
density a = XX + mu YY + nu ZZ + w1 + 1w is decided by a finite family
of quadratic forms.  Each translation class of Pauli strings defines a
linear functional on the image of the summed density; expanding a
single unknown Lindblad operator L = sum_j c_j P_j and a window
Hamiltonian sum_m d_m Q_m turns the functional into c^dag Q c plus a
real linear term in d.  The forms are extracted numerically on a ring
long enough that a window cannot meet its own periodic image.

Combining the six primitive projections with weights
(1, mu, nu, 2h_x, 2h_y, 2h_z) cancels the Hamiltonian term
identically.  The combination is Hermitian; its imaginary part is pure
gauge spanned by the unitality forms (the freedom of adding a
divergence to the window identity image), and its real part is the
obstruction matrix C.  When C is negative definite, no generator of
that width with a nonzero dissipative part conserves the density.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .generators import LindbladGenerator, basis_strings
from .pauli import PauliOperator, mul_strings
from .rings import CanonicalParams, safe_ring_length

D_CANCEL_TOL = 1e-9
GAUGE_TOL = 1e-9
ZERO_BAND = 1e-9
DEFINITE_TOL = 1e-6
DEGENERACY_TOL = 1e-8
B2_TOL = 1e-10

NAMED_PATTERNS = ("xx", "yy", "zz", "x", "y", "z")
_PATTERN_STRINGS = {"xx": "XX", "yy": "YY", "zz": "ZZ", "x": "X", "y": "Y", "z": "Z"}

MU_AXIS = tuple(round(0.05 * k, 2) for k in range(21))
H_AXIS = (-2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """One projection equation: value on (c, d) is c^dag Q c + d_linear . d."""

    name: str
    basis: tuple[str, ...]
    Q: np.ndarray
    d_linear: np.ndarray

    def value(self, c, d=None) -> float:
        c = np.asarray(c, dtype=complex)
        v = float(np.real(np.conj(c) @ self.Q @ c))
        if d is not None:
            v += float(self.d_linear @ np.asarray(d, dtype=float))
        return v


@dataclass(frozen=True, eq=False)
class ObstructionMatrix:
    C: np.ndarray
    basis: str
    params: CanonicalParams
    gauge_residual: float = 0.0


@dataclass(frozen=True, eq=False)
class DefinitenessReport:
    eigenvalues: np.ndarray
    max_eigenvalue: float
    nullity: int
    verdict: str
    sylvester_minors: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class UnitalityWitness:
    w: PauliOperator
    residual: float


# -- projection equations ----------------------------------------------------


def _embed_string(s: str, n: int, offset: int) -> str:
    out = ["I"] * n
    for i, ch in enumerate(s):
        if ch != "I":
            out[(offset + i) % n] = ch
    return "".join(out)


def _component_ring_terms(n: int) -> dict[str, dict[str, complex]]:
    """Ring sums of the six density components, as coefficient tables."""
    comps = {
        "xx": {"XX": 1.0}, "yy": {"YY": 1.0}, "zz": {"ZZ": 1.0},
        "x": {"XI": 1.0, "IX": 1.0}, "y": {"YI": 1.0, "IY": 1.0},
        "z": {"ZI": 1.0, "IZ": 1.0},
    }
    out = {}
    for name, terms in comps.items():
        acc: dict[str, complex] = {}
        for s in range(n):
            for lab, c in terms.items():
                key = _embed_string(lab, n, s)
                acc[key] = acc.get(key, 0.0) + c
        out[name] = acc
    return out


def _relevant_offsets(pattern: str, n: int, r: int) -> list[int]:
    # Windows two or more sites away from the pattern contribute nothing:
    # the product string then has separated support and cannot match any
    # density string (contiguous, at most two sites wide).
    support = {i for i, ch in enumerate(pattern) if ch != "I"}
    reach = set()
    for site in support:
        reach.add((site - 1) % n)
        reach.add((site + 1) % n)
    reach |= support
    keep = []
    for s in range(n):
        window = {(s + i) % n for i in range(r)}
        if window & reach:
            keep.append(s)
    return keep


def _pattern_forms(pattern: str, n: int, r: int):
    """Q and l tables of one pattern projection against all six components."""
    basis = basis_strings(r)
    m = len(basis)
    comps = _component_ring_terms(n)
    names = list(comps)
    Qs = {c: np.zeros((m, m), dtype=complex) for c in names}
    ls = {c: np.zeros(m, dtype=complex) for c in names}
    offsets = _relevant_offsets(pattern, n, r)
    emb = [[_embed_string(b, n, s) for s in offsets] for b in basis]
    for j in range(m):
        for si in range(len(offsets)):
            Pj = emb[j][si]
            ph_jp, u_jp = mul_strings(Pj, pattern)
            ph_pj, u_pj = mul_strings(pattern, Pj)
            # Hamiltonian part: i<p| [A, Q_m] > picked up per window
            for c in names:
                coeff = comps[c].get(u_pj)
                if coeff is not None:
                    ls[c][j] += 1j * np.conj(ph_pj) * coeff
                coeff = comps[c].get(u_jp)
                if coeff is not None:
                    ls[c][j] -= 1j * np.conj(ph_jp) * coeff
            for k in range(m):
                Pk = emb[k][si]
                ph1, u1 = mul_strings(u_jp, Pk)
                ph_kj, u_kj = mul_strings(Pk, Pj)
                ph2, u2 = mul_strings(pattern, u_kj)
                ph3, u3 = mul_strings(u_kj, pattern)
                # dissipator: 2 P_j A P_k - P_k P_j A - A P_k P_j, read at p;
                # the sandwich picks up a conjugate through tr(p P_j P_u P_k) =
                # phase(P_j p P_k)^* [A]_u, the other two keep their phases
                for c in names:
                    terms = comps[c]
                    coeff = terms.get(u1)
                    if coeff is not None:
                        Qs[c][j, k] += 2.0 * np.conj(ph_jp * ph1) * coeff
                    coeff = terms.get(u2)
                    if coeff is not None:
                        Qs[c][j, k] -= ph_kj * ph2 * coeff
                    coeff = terms.get(u3)
                    if coeff is not None:
                        Qs[c][j, k] -= ph_kj * ph3 * coeff
    # adjoint bookkeeping: the form acts on c from both sides
    return {c: Qs[c].T for c in names}, ls


_FORM_CACHE: dict[tuple[int, str], tuple] = {}


def _basis_forms(r_gen: int, pattern: str):
    key = (r_gen, pattern)
    if key not in _FORM_CACHE:
        n = safe_ring_length(r_gen, 2)
        ring_pattern = _embed_string(pattern, n, 0)
        _FORM_CACHE[key] = _pattern_forms(ring_pattern, n, r_gen)
    return _FORM_CACHE[key]


def _density_weights(params: CanonicalParams) -> dict[str, float]:
    hx, hy, hz = params.h
    return {"xx": 1.0, "yy": params.mu, "zz": params.nu, "x": hx, "y": hy, "z": hz}


def _combination_weights(params: CanonicalParams) -> dict[str, float]:
    hx, hy, hz = params.h
    return {"xx": 1.0, "yy": params.mu, "zz": params.nu,
            "x": 2.0 * hx, "y": 2.0 * hy, "z": 2.0 * hz}


def conservation_forms(r_gen: int, params: CanonicalParams,
                       patterns=None) -> dict[str, QuadraticForm]:
    """Projection equations for the canonical density, one per pattern class.

    The six named equations use keys xx, yy, zz, x, y, z.  Additional
    translation classes can be requested by their site-0 anchored string
    (for example "zy" or "xIx"); each gives the quadratic form read off
    from the coefficient of that class in the image of the summed
    density.  Rotations and overall scale of `params` are ignored: both
    act by congruence and do not move the zero set.
    """
    if r_gen not in (2, 3):
        raise ValueError("generator width must be 2 or 3")
    if params.scale == 0.0:
        raise ValueError("density has no two-site part in canonical form")
    if patterns is None:
        patterns = NAMED_PATTERNS
    basis = tuple(basis_strings(r_gen))
    w = _density_weights(params)
    out = {}
    for pat in patterns:
        string = _PATTERN_STRINGS.get(pat, pat.upper())
        if not string or string.strip("IXYZ"):
            raise ValueError(f"bad pattern string: {pat!r}")
        Qs, ls = _basis_forms(r_gen, string)
        Q = sum(w[c] * Qs[c] for c in w)
        l = sum(w[c] * ls[c] for c in w)
        if np.abs(l.imag).max() > 1e-12:
            raise ArithmeticError("Hamiltonian functional is not real")
        out[pat] = QuadraticForm(name=pat, basis=basis, Q=Q, d_linear=l.real)
    return out


# -- unitality forms ---------------------------------------------------------


def _unitality_patterns(r_gen: int) -> dict[str, dict[str, float]]:
    ax = "XYZ"
    pats: dict[str, dict[str, float]] = {}
    if r_gen == 2:
        for a in ax:
            pats[2 * a.lower()] = {a + a: 1.0}
        for a, b in (("X", "Y"), ("X", "Z"), ("Y", "Z")):
            pats[(a + b).lower()] = {a + b: 1.0, b + a: 1.0}
        for a in ax:
            pats[a.lower()] = {a + "I": 1.0, "I" + a: 1.0}
        return pats
    # width 3: full windows, gapped windows, and placement sums
    for a, b, c in itertools.product(ax, repeat=3):
        pats[(a + b + c).lower()] = {a + b + c: 1.0}
    for a, b in itertools.product(ax, repeat=2):
        pats[f"{a.lower()}_{b.lower()}"] = {a + "I" + b: 1.0}
    for a, b in itertools.product(ax, repeat=2):
        pats[(a + b).lower()] = {a + b + "I": 1.0, "I" + a + b: 1.0}
    for a in ax:
        pats[a.lower()] = {a + "II": 1.0, "I" + a + "I": 1.0, "II" + a: 1.0}
    return pats


_UNITALITY_CACHE: dict[int, dict[str, QuadraticForm]] = {}


def unitality_forms(r_gen: int) -> dict[str, QuadraticForm]:
    """Quadratic forms of the window identity image, projected per class.

    These measure 2<pattern|[P_j, P_k]> and vanish on every generator
    whose identity image is a divergence, which is exactly the class a
    translation invariant conserver may use.  They are purely imaginary
    and carry no Hamiltonian part.
    """
    if r_gen not in (2, 3):
        raise ValueError("generator width must be 2 or 3")
    if r_gen not in _UNITALITY_CACHE:
        basis = tuple(basis_strings(r_gen))
        m = len(basis)
        zero_d = np.zeros(m)
        forms = {}
        for name, terms in _unitality_patterns(r_gen).items():
            U = np.zeros((m, m), dtype=complex)
            for j in range(m):
                for k in range(m):
                    ph, s = mul_strings(basis[j], basis[k])
                    c = terms.get(s)
                    if c is not None:
                        U[j, k] += 2.0 * c * ph
                    ph, s = mul_strings(basis[k], basis[j])
                    c = terms.get(s)
                    if c is not None:
                        U[j, k] -= 2.0 * c * ph
            forms[name] = QuadraticForm(name=name, basis=basis, Q=U.T, d_linear=zero_d)
        _UNITALITY_CACHE[r_gen] = forms
    return _UNITALITY_CACHE[r_gen]


# -- assembly ----------------------------------------------------------------


def _assemble_real(r_gen: int, params: CanonicalParams):
    forms = conservation_forms(r_gen, params)
    cw = _combination_weights(params)
    Ct = sum(cw[p] * forms[p].Q for p in NAMED_PATTERNS)
    lc = sum(cw[p] * forms[p].d_linear for p in NAMED_PATTERNS)
    d_scale = 1.0 + max(np.abs(forms[p].d_linear).max() for p in NAMED_PATTERNS)
    if np.abs(lc).max() > D_CANCEL_TOL * d_scale:
        raise ArithmeticError(
            f"Hamiltonian part failed to cancel (|l| = {np.abs(lc).max():.3e})")
    uf = unitality_forms(r_gen)
    cols = np.column_stack([f.Q.imag.ravel() for f in uf.values()])
    target = Ct.imag.ravel()
    alpha, *_ = np.linalg.lstsq(cols, target, rcond=None)
    residual = target - cols @ alpha
    gauge_residual = float(np.abs(residual).max())
    scale = 1.0 + float(np.abs(Ct).max())
    if gauge_residual > GAUGE_TOL * scale:
        raise ArithmeticError(
            f"imaginary part not spanned by unitality forms ({gauge_residual:.3e})")
    C = Ct.real.copy()
    return 0.5 * (C + C.T), gauge_residual


# combination basis: 9 symmetric then 6 antisymmetric pairings, unit norm
_COMBINATION_COLUMNS = (
    (("XX", 1),), (("YY", 1),), (("ZZ", 1),),
    (("IX", 1), ("XI", 1)), (("IY", 1), ("YI", 1)), (("IZ", 1), ("ZI", 1)),
    (("ZY", 1), ("YZ", 1)), (("ZX", 1), ("XZ", 1)), (("YX", 1), ("XY", 1)),
    (("IX", 1), ("XI", -1)), (("IY", 1), ("YI", -1)), (("IZ", 1), ("ZI", -1)),
    (("ZY", 1), ("YZ", -1)), (("XZ", 1), ("ZX", -1)), (("YX", 1), ("XY", -1)),
)


def combination_matrix() -> np.ndarray:
    """Unit-norm change of basis from primitive two-site strings."""
    basis = basis_strings(2)
    idx = {s: i for i, s in enumerate(basis)}
    S = np.zeros((len(basis), len(_COMBINATION_COLUMNS)))
    for col, spec in enumerate(_COMBINATION_COLUMNS):
        for lab, sgn in spec:
            S[idx[lab], col] = sgn
        S[:, col] /= np.linalg.norm(S[:, col])
    return S


def assemble_C_2site(params: CanonicalParams) -> ObstructionMatrix:
    """Obstruction matrix of a width-2 generator, in the combination basis."""
    C, gauge_residual = _assemble_real(2, params)
    S = combination_matrix()
    Cc = S.T @ C @ S
    Cc = 0.5 * (Cc + Cc.T)
    return ObstructionMatrix(
        C=Cc, basis="two-site combinations: 9 symmetric + 6 antisymmetric, unit norm",
        params=params, gauge_residual=gauge_residual)


def assemble_C_3site(params: CanonicalParams) -> ObstructionMatrix:
    """Obstruction matrix of a width-3 generator, over the 63 window strings."""
    C, gauge_residual = _assemble_real(3, params)
    return ObstructionMatrix(
        C=C, basis="primitive three-site window strings (63)",
        params=params, gauge_residual=gauge_residual)


def _c2_blocks(mu: float, nu: float, h) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    hx, hy, hz = h
    h2 = hx * hx + hy * hy + hz * hz
    A = 2.0 * np.outer(h, h) - np.diag([
        2 * h2 + mu * mu + nu * nu + mu * nu,
        2 * h2 + 1 + nu + nu * nu,
        2 * h2 + 1 + mu + mu * mu,
    ])
    At = A - np.diag([1.0, mu * mu, nu * nu])
    B = np.array([
        [0.0, -hz * (1 + mu + 2 * nu), hy * (1 + 2 * mu + nu)],
        [hz * (1 + mu + 2 * nu), 0.0, -hx * (2 + mu + nu)],
        [-hy * (1 + 2 * mu + nu), hx * (2 + mu + nu), 0.0],
    ])
    return A, At, B


def _c1_blocks(mu: float, nu: float, h):
    hx, hy, hz = h
    r2 = np.sqrt(2.0)
    A, _, _ = _c2_blocks(mu, nu, h)
    A1 = np.array([
        [-4 * hy ** 2 - 4 * hz ** 2 - mu ** 2 - nu ** 2, 4 * hz ** 2, 4 * hy ** 2],
        [4 * hz ** 2, -1 - 4 * hx ** 2 - 4 * hz ** 2 - nu ** 2, 4 * hx ** 2],
        [4 * hy ** 2, 4 * hx ** 2, -1 - 4 * hx ** 2 - 4 * hy ** 2 - mu ** 2],
    ])
    A2 = A + np.diag([2 * mu * nu, 2 * nu, 2 * mu])
    A3 = A2 + 4.0 * np.outer(h, h) - np.diag([
        1 + 12 * hx ** 2, mu ** 2 + 12 * hy ** 2, nu ** 2 + 12 * hz ** 2])
    B1 = r2 * np.array([
        [0.0, hy * (1 - nu), hz * (1 - mu)],
        [hx * (mu - nu), 0.0, -hz * (1 - mu)],
        [-hx * (mu - nu), -hy * (1 - nu), 0.0],
    ])
    B2 = r2 * np.array([
        [-4 * hy * hz, 2 * hx * hz, 2 * hx * hy],
        [2 * hy * hz, -4 * hx * hz, 2 * hx * hy],
        [2 * hy * hz, 2 * hx * hz, -4 * hx * hy],
    ])
    B3 = np.array([
        [0.0, hz * (1 + mu - 2 * nu), hy * (1 - 2 * mu + nu)],
        [hz * (1 + mu - 2 * nu), 0.0, hx * (mu + nu - 2)],
        [hy * (1 - 2 * mu + nu), hx * (mu + nu - 2), 0.0],
    ])
    return A1, A2, A3, B1, B2, B3


def closed_form_C_2site(params: CanonicalParams) -> ObstructionMatrix:
    """Closed-form width-2 obstruction matrix, 32 blockdiag(C1, C2).

    Same combination basis as assemble_C_2site; the two agree up to one
    global positive scalar independent of the parameters.
    """
    mu, nu, h = params.mu, params.nu, params.h
    A, At, B = _c2_blocks(mu, nu, h)
    C2 = np.block([[A, B.T], [B, At]])
    A1, A2, A3, B1, B2, B3 = _c1_blocks(mu, nu, h)
    C1 = np.block([[A1, B1, B2], [B1.T, A2, B3], [B2.T, B3.T, A3]])
    C = np.zeros((15, 15))
    C[:9, :9] = C1
    C[9:, 9:] = C2
    C = 32.0 * 0.5 * (C + C.T)
    return ObstructionMatrix(
        C=C, basis="two-site combinations: 9 symmetric + 6 antisymmetric, unit norm",
        params=params)


# -- definiteness ------------------------------------------------------------


def _sylvester_minors(C: np.ndarray) -> np.ndarray:
    return np.array([np.linalg.det(C[:k, :k]) for k in range(1, C.shape[0] + 1)])


def certify_definiteness(C: np.ndarray, zero_band: float = ZERO_BAND,
                         definite_tol: float = DEFINITE_TOL) -> DefinitenessReport:
    """Eigenvalue verdict with a Sylvester minor cross-check for small matrices.

    Zero means |lambda| < zero_band * (1 + max |lambda|).  The verdict is
    negative_definite when everything lies below the zero band,
    negative_semidefinite when the top of the spectrum sits inside it,
    and indefinite otherwise.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or not C.size:
        raise ValueError("matrix must be square and nonempty")
    scale = 1.0 + float(np.abs(C).max())
    if np.abs(C - C.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    ev = np.linalg.eigvalsh(0.5 * (C + C.T))
    max_eig = float(ev[-1])
    tol = zero_band * (1.0 + float(np.abs(ev).max()))
    nullity = int(np.sum(np.abs(ev) < tol))
    if max_eig >= tol:
        verdict = "indefinite"
    elif max_eig > -tol:
        verdict = "negative_semidefinite"
    else:
        verdict = "negative_definite"
    minors = None
    if C.shape[0] <= 15:
        minors = _sylvester_minors(C)
        # strict alternation of leading minors certifies negative definiteness;
        # enforce agreement only where every minor is decisively signed
        norm = max(1.0, float(np.abs(C).max()))
        decisive = all(abs(m) > tol * norm ** k for k, m in enumerate(minors, 1))
        if decisive:
            alternates = all((-1) ** k * m > 0 for k, m in enumerate(minors, 1))
            if alternates != (verdict == "negative_definite"):
                raise ArithmeticError("eigenvalue and Sylvester verdicts disagree")
    return DefinitenessReport(eigenvalues=ev, max_eigenvalue=max_eig,
                              nullity=nullity, verdict=verdict,
                              sylvester_minors=minors)


def c2prime_diagnostics(params: CanonicalParams):
    """Spectrum of the shifted antisymmetric-sector block and its cubic.

    The block C2' = 2 (C2 + diag(mu nu, nu, mu, 1 + mu nu, mu^2 + nu,
    nu^2 + mu)) has an (at least) doubly degenerate spectrum; its three
    distinct eigenvalues define a cubic whose leading coefficient obeys
    b2 = 4 (1 + mu^2 + nu^2 + 2(h_x^2 + h_y^2 + h_z^2)).  Both facts are
    re-checked here and violations raise, since they signal a
    transcription bug rather than an interesting parameter point.
    """
    mu, nu, h = params.mu, params.nu, params.h
    if not (0.0 <= mu <= 1.0 and 0.0 <= nu <= 1.0):
        raise ValueError("anisotropies must lie in [0, 1]")
    A, At, B = _c2_blocks(mu, nu, h)
    C2 = np.block([[A, B.T], [B, At]])
    shift = np.diag([mu * nu, nu, mu, 1 + mu * nu, mu ** 2 + nu, nu ** 2 + mu])
    C2p = 2.0 * (C2 + shift)
    ev = np.linalg.eigvalsh(C2p)
    scale = 1.0 + float(np.abs(ev).max())
    gaps = ev[1::2] - ev[0::2]
    if np.abs(gaps).max() > DEGENERACY_TOL * scale:
        raise ArithmeticError(
            f"spectrum of C2' is not doubly degenerate (gap {np.abs(gaps).max():.3e})")
    lam = 0.5 * (ev[0::2] + ev[1::2])
    b2 = -float(lam.sum())
    b1 = float(lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2])
    b0 = -float(lam[0] * lam[1] * lam[2])
    hx, hy, hz = h
    expected = 4.0 * (1 + mu ** 2 + nu ** 2 + 2 * (hx ** 2 + hy ** 2 + hz ** 2))
    if abs(b2 - expected) > B2_TOL * (1.0 + abs(expected)):
        raise ArithmeticError(f"b2 = {b2!r} deviates from {expected!r}")
    return ev, (b2, b1, b0)


def unitality_witness(gen: LindbladGenerator) -> UnitalityWitness:
    """Extract w with L(11) = w1 - 1w for a width-2 generator.

    The residual reports how far the identity image is from that
    divergence form; conserving generators on long rings must make it
    vanish.
    """
    if gen.r != 2:
        raise ValueError("witness extraction needs a two-site window")
    defect = gen.unital_defect()
    cols = []
    labels = ("X", "Y", "Z")
    for lab in labels:
        op = PauliOperator(2, {lab + "I": 1.0, "I" + lab: -1.0})
        cols.append(op)
    strings = sorted(set(itertools.chain(defect.terms,
                                         *(c.terms for c in cols))))
    M = np.array([[c.terms.get(s, 0.0) for c in cols] for s in strings])
    rhs = np.array([defect.terms.get(s, 0.0) for s in strings])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    # identity images of these generators are Hermitian, so w is real;
    # any imaginary leftover in the fit target lands in the residual
    sol = sol.real
    w = PauliOperator(1, {lab: complex(sol[i]) for i, lab in enumerate(labels)})
    residual = float(np.linalg.norm(M @ sol - rhs))
    return UnitalityWitness(w=w, residual=residual)


# -- parameter scans ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScanRow:
    mu: float
    nu: float
    hx: float
    hy: float
    hz: float
    max_eig: float
    nullity: int
    verdict: str


def family_grid(family: str, mu_axis=None, h_axis=None) -> list[tuple]:
    """Deterministic row-major grids for the four scanned model families."""
    mus = tuple(mu_axis) if mu_axis is not None else MU_AXIS
    hs = tuple(h_axis) if h_axis is not None else H_AXIS
    if family == "xyz":
        return [(mu, nu, 0.0, 0.0, 0.0) for mu in mus for nu in mus]
    if family == "ising-fields":
        return [(0.0, 0.0, 0.0, hy, hz) for hy in hs for hz in hs]
    if family == "xxz":
        return [(1.0, nu, 0.0, 0.0, hz) for nu in mus for hz in hs]
    if family == "xx-field":
        return [(1.0, 0.0, hx, 0.0, 0.0) for hx in hs]
    raise ValueError(f"unknown family: {family!r}")


def scan_point(r_gen: int, point, zero_band: float = ZERO_BAND,
               definite_tol: float = DEFINITE_TOL) -> ScanRow:
    """Definiteness verdict at a single grid point."""
    if r_gen not in (2, 3):
        raise ValueError("generator width must be 2 or 3")
    mu, nu, hx, hy, hz = point
    assemble = assemble_C_2site if r_gen == 2 else assemble_C_3site
    mat = assemble(CanonicalParams.at(mu, nu, (hx, hy, hz)))
    rep = certify_definiteness(mat.C, zero_band=zero_band,
                               definite_tol=definite_tol)
    return ScanRow(mu=float(mu), nu=float(nu), hx=float(hx),
                   hy=float(hy), hz=float(hz),
                   max_eig=rep.max_eigenvalue, nullity=rep.nullity,
                   verdict=rep.verdict)


def summarize_rows(r_gen: int, rows) -> dict:
    """Aggregate verdict counts and locate every semidefinite point."""
    counts = {"negative_definite": 0, "negative_semidefinite": 0, "indefinite": 0}
    semidefinite_points = []
    for row in rows:
        counts[row.verdict] += 1
        if row.verdict != "negative_definite":
            semidefinite_points.append((row.mu, row.nu, row.hx, row.hy, row.hz))
    on_line = all(abs(p[0]) < 1e-12 and abs(p[1]) < 1e-12
                  and abs(p[3]) < 1e-12 and abs(p[4]) < 1e-12
                  for p in semidefinite_points)
    return {
        "r_gen": r_gen,
        "points": len(rows),
        "counts": counts,
        "semidefinite_points": semidefinite_points,
        "semidefinite_only_on_ising_line": bool(on_line and not counts["indefinite"]),
    }


def scan(r_gen: int, grid, zero_band: float = ZERO_BAND,
         definite_tol: float = DEFINITE_TOL) -> tuple[list[ScanRow], dict]:
    """Definiteness verdicts over a parameter grid, in grid order.

    The summary records every semidefinite point and whether all of them
    sit on the mu = nu = h_y = h_z = 0 line, the only place a width-2 or
    width-3 conserver is not excluded.
    """
    if r_gen not in (2, 3):
        raise ValueError("generator width must be 2 or 3")
    rows = [scan_point(r_gen, point, zero_band=zero_band,
                       definite_tol=definite_tol) for point in grid]
    return rows, summarize_rows(r_gen, rows)


def rows_to_csv(rows) -> str:
    out = ["mu,nu,hx,hy,hz,max_eig,nullity,verdict"]
    for r in rows:
        out.append(f"{r.mu:.6g},{r.nu:.6g},{r.hx:.6g},{r.hy:.6g},{r.hz:.6g},"
                   f"{r.max_eig:.12g},{r.nullity},{r.verdict}")
    return "\n".join(out) + "\n"
