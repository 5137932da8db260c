"""Search for a conserving local generator as a convex feasibility problem.

Conservation of a fixed density is linear in the generator data: the
Hamiltonian coefficients enter through the commutator and the structure
matrix gamma enters through the dissipator, so for a fixed window width
the conserving generators form an affine subspace.  Requiring gamma to
be a physical dissipator adds the positive semidefinite cone, and the
normalization tr(gamma) = gamma_trace cuts away the dissipatorless
solutions that exist for every density.  A conserving generator with a
genuine dissipative part is therefore a point in the intersection of
an affine set with a compact slice of the PSD cone, and the search runs
alternating projections with Dykstra's correction between the two.

A point found this way is certified independently: the returned
generator is re-checked through the ring residuals, never through the
search state.  Failure to close the gap is reported as not_found with
the final distance to the affine set; it is not a proof that nothing
exists.  The matching impossibility certificate is the negative
definite obstruction matrix, which is attached to not_found results
for two-site targets.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .pauli import PauliOperator, mul_strings
from .generators import LindbladGenerator, basis_strings, diagonalize_structure
from .rings import (
    safe_ring_length,
    assemble_sum,
    canonical_form,
    global_conservation_residual,
    local_conservation_check,
    parse_density_file,
    format_density_file,
)
from .obstruction import (
    DefinitenessReport,
    assemble_C_2site,
    assemble_C_3site,
    certify_definiteness,
)

MAX_ITER = 5000
GAP_TOL = 1e-9
VERIFY_TOL = 1e-8
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
# a gap that stops improving marks a positive distance between the sets
STALL_MIN_ITER = 500
STALL_WINDOW = 250
STALL_RELATIVE = 1e-6
# window rule for the sublinear regime: the projections creep along a
# common face of the cone instead of plateauing outright
SNAPSHOT_PERIOD = 250
SNAPSHOT_MIN_DROP = 0.08
# the exact face completion only pays off when the sets nearly touch
COMPLETION_DISTANCE = 1e-2


class FeasibilityProblem:
    """Conservation targets plus the shape of the generator to search over.

    `target` is a single Hermitian window operator or a sequence of them
    (all must be conserved at once).  `mode` picks the constraint: local
    demands that the generator kill every placement of every target,
    global only the ring sums.  `gamma_trace` fixes tr(gamma) and must
    be positive; gamma = 0 solves every instance and is not interesting.
    """

    def __init__(self, target, r_gen: int, n: int | None = None,
                 mode: str = "global", gamma_trace: float = 1.0):
        if isinstance(target, PauliOperator):
            targets = (target,)
        else:
            targets = tuple(target)
        if not targets:
            raise ValueError("need at least one target")
        for a in targets:
            if not isinstance(a, PauliOperator):
                raise TypeError("targets must be PauliOperators")
            if not a.is_hermitian(1e-12):
                raise ValueError("targets must be Hermitian")
            if a.is_zero():
                raise ValueError("target is zero")
        if r_gen not in (1, 2, 3):
            raise ValueError("generator width must be 1, 2, or 3")
        if mode not in ("local", "global"):
            raise ValueError(f"unknown mode {mode!r}")
        gamma_trace = float(gamma_trace)
        if not gamma_trace > 0.0:
            raise ValueError("gamma_trace must be positive; gamma = 0 is the trivial solution")
        if n is None:
            n = max(safe_ring_length(r_gen, a.n) for a in targets)
        n = int(n)
        if n < max(r_gen, max(a.n for a in targets)):
            raise ValueError("ring shorter than the widest window")
        self.targets = targets
        self.r_gen = int(r_gen)
        self.n = n
        self.mode = mode
        self.gamma_trace = gamma_trace

    @property
    def target(self) -> PauliOperator:
        return self.targets[0]

    def key(self) -> tuple:
        sig = tuple(
            (a.n, tuple(sorted((s, round(c.real, 12), round(c.imag, 12))
                               for s, c in a.terms.items())))
            for a in self.targets)
        return (self.r_gen, self.n, self.mode, round(self.gamma_trace, 12), sig)


@dataclass(frozen=True, eq=False)
class AffineConstraints:
    """Real linear system K x = b over the packed (gamma, H) parameters."""

    matrix: np.ndarray
    rhs: np.ndarray
    labels: tuple[str, ...]
    r_gen: int
    dim_gamma: int


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: str  # feasible | not_found
    generator: LindbladGenerator | None
    residual: float | None
    iterations: int
    affine_distance: float
    certificate: DefinitenessReport | None = None


# -- real parametrization of (gamma, H) ---------------------------------------
# layout: [diag(gamma)] [sqrt2 * Re upper] [sqrt2 * Im upper] [H coefficients];
# the sqrt2 makes packing an isometry for the Frobenius norm, so projections
# computed on matrices stay projections on vectors


def _gamma_to_vector(gamma: np.ndarray) -> np.ndarray:
    m = gamma.shape[0]
    iu, ju = np.triu_indices(m, 1)
    upper = gamma[iu, ju]
    return np.concatenate([
        np.real(np.diag(gamma)),
        np.sqrt(2.0) * upper.real,
        np.sqrt(2.0) * upper.imag,
    ])


def _vector_to_gamma(v: np.ndarray, m: int) -> np.ndarray:
    iu, ju = np.triu_indices(m, 1)
    m2 = iu.size
    gamma = np.zeros((m, m), dtype=complex)
    gamma[np.arange(m), np.arange(m)] = v[:m]
    upper = (v[m:m + m2] + 1j * v[m + m2:m + 2 * m2]) / np.sqrt(2.0)
    gamma[iu, ju] = upper
    gamma[ju, iu] = upper.conj()
    return gamma


def pack_point(gamma, eta=None) -> np.ndarray:
    """Pack a Hermitian gamma and real Hamiltonian coefficients into x."""
    gamma = np.asarray(gamma, dtype=complex)
    m = gamma.shape[0]
    if gamma.shape != (m, m) or np.abs(gamma - gamma.conj().T).max() > 1e-10:
        raise ValueError("gamma must be square Hermitian")
    if eta is None:
        eta = np.zeros(m)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (m,):
        raise ValueError("Hamiltonian coefficients must match the gamma basis")
    return np.concatenate([_gamma_to_vector(gamma), eta])


def unpack_point(r_gen: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(basis_strings(r_gen))
    x = np.asarray(x, dtype=float)
    if x.shape != (m * m + m,):
        raise ValueError(f"point must have {m * m + m} entries for r={r_gen}")
    return _vector_to_gamma(x[:m * m], m), x[m * m:]


def generator_from_point(r_gen: int, x: np.ndarray) -> LindbladGenerator:
    gamma, eta = unpack_point(r_gen, x)
    labels = basis_strings(r_gen)
    ham = PauliOperator(r_gen, {s: complex(e) for s, e in zip(labels, eta)})
    return LindbladGenerator(r_gen, hamiltonian=ham, gamma=gamma)


# -- constraint rows -----------------------------------------------------------


def _window_sites(s: int, r: int, n: int) -> tuple[int, ...]:
    return tuple((s + i) % n for i in range(r))


def _splice(u: str, sites: tuple[int, ...], piece: str) -> str:
    chars = list(u)
    for w, ch in zip(sites, piece):
        chars[w] = ch
    return "".join(chars)


def _class_representative(s: str) -> str:
    return min(s[i:] + s[:i] for i in range(len(s)))


def _action_columns(r: int, A: PauliOperator, offsets, reduce_rows: bool):
    """Per-parameter images of A under the generator placed at `offsets`.

    gamma_cols[j][k] maps row keys to the coefficient multiplying
    gamma_jk in the image; ham_cols[j] does the same for the j-th
    Hamiltonian coefficient.  With reduce_rows the keys are translation
    class representatives and contributions of a whole class pile onto
    one key; for a translationally invariant image that only rescales
    rows, which a homogeneous system does not feel.
    """
    n = A.n
    basis = basis_strings(r)
    m = len(basis)
    prod_groups: dict[str, list[tuple[int, int, complex]]] = {}
    for k in range(m):
        for j in range(m):
            ph, w = mul_strings(basis[k], basis[j])
            prod_groups.setdefault(w, []).append((j, k, ph))
    gamma_cols = [[defaultdict(complex) for _ in range(m)] for _ in range(m)]
    ham_cols = [defaultdict(complex) for _ in range(m)]
    for s in offsets:
        sites = _window_sites(s, r, n)
        for u, coeff in A.terms.items():
            u_win = "".join(u[w] for w in sites)
            memo: dict[str, str] = {}

            def row_key(piece: str) -> str:
                got = memo.get(piece)
                if got is None:
                    full = _splice(u, sites, piece)
                    got = _class_representative(full) if reduce_rows else full
                    memo[piece] = got
                return got

            for j, Bj in enumerate(basis):
                ph_l, w_l = mul_strings(Bj, u_win)
                ph_r, w_r = mul_strings(u_win, Bj)
                # i [A, h] read term by term
                ham_cols[j][row_key(w_r)] += 1j * ph_r * coeff
                ham_cols[j][row_key(w_l)] -= 1j * ph_l * coeff
                row = gamma_cols[j]
                two_ph = 2.0 * ph_l * coeff
                for k, Bk in enumerate(basis):
                    ph2, w2 = mul_strings(w_l, Bk)
                    row[k][row_key(w2)] += two_ph * ph2
            for w, members in prod_groups.items():
                ph_l, w_l = mul_strings(w, u_win)
                ph_r, w_r = mul_strings(u_win, w)
                key_l = row_key(w_l)
                key_r = row_key(w_r)
                cl = ph_l * coeff
                cr = ph_r * coeff
                for j, k, ph in members:
                    col = gamma_cols[j][k]
                    col[key_l] -= ph * cl
                    col[key_r] -= ph * cr
    return gamma_cols, ham_cols


_CONSTRAINT_CACHE: dict[tuple, AffineConstraints] = {}
_PROJECTOR_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def build_affine_constraints(problem: FeasibilityProblem) -> AffineConstraints:
    """Linear rows that a conserving (gamma, H) must satisfy, plus the trace row.

    Global mode projects the residual of each target's ring sum onto
    translation classes of ring strings; local mode keeps one row per
    placement of each target and per ring string.  Real and imaginary
    parts of each projection become separate rows.
    """
    key = problem.key()
    cached = _CONSTRAINT_CACHE.get(key)
    if cached is not None:
        return cached
    r, n = problem.r_gen, problem.n
    m = len(basis_strings(r))
    dim_gamma = m * m
    dim = dim_gamma + m
    blocks = []
    if problem.mode == "global":
        for t, a in enumerate(problem.targets):
            A = assemble_sum(a, n)
            blocks.append((f"target{t}", _action_columns(r, A, range(n), True)))
    else:
        for t, a in enumerate(problem.targets):
            for k in range(n):
                A = a.embed(n, k)
                blocks.append((f"target{t}@{k}", _action_columns(r, A, (0,), False)))

    iu, ju = np.triu_indices(m, 1)
    m2 = iu.size
    rows = []
    labels = []
    for prefix, (gamma_cols, ham_cols) in blocks:
        keys: dict[str, int] = {}
        for j in range(m):
            for k in range(m):
                for s in gamma_cols[j][k]:
                    keys.setdefault(s, len(keys))
            for s in ham_cols[j]:
                keys.setdefault(s, len(keys))
        block = np.zeros((2 * len(keys), dim))

        def put(col: int, entries: dict[str, complex], scale: complex) -> None:
            for s, v in entries.items():
                v = v * scale
                ridx = 2 * keys[s]
                block[ridx, col] += v.real
                block[ridx + 1, col] += v.imag

        for i in range(m):
            put(i, gamma_cols[i][i], 1.0)
        inv = 1.0 / np.sqrt(2.0)
        for t_idx in range(m2):
            i, j = int(iu[t_idx]), int(ju[t_idx])
            put(m + t_idx, gamma_cols[i][j], inv)
            put(m + t_idx, gamma_cols[j][i], inv)
            put(m + m2 + t_idx, gamma_cols[i][j], 1j * inv)
            put(m + m2 + t_idx, gamma_cols[j][i], -1j * inv)
        for j in range(m):
            put(dim_gamma + j, ham_cols[j], 1.0)
        rows.append(block)
        for s in keys:
            labels.append(f"{prefix}:{s}:re")
            labels.append(f"{prefix}:{s}:im")

    trace_row = np.zeros((1, dim))
    trace_row[0, :m] = 1.0
    rows.append(trace_row)
    labels.append("trace")
    matrix = np.vstack(rows)
    rhs = np.zeros(matrix.shape[0])
    rhs[-1] = problem.gamma_trace
    out = AffineConstraints(matrix=matrix, rhs=rhs, labels=tuple(labels),
                            r_gen=r, dim_gamma=dim_gamma)
    _CONSTRAINT_CACHE[key] = out
    return out


def _affine_projector(problem: FeasibilityProblem, cons: AffineConstraints):
    key = problem.key()
    svd = _PROJECTOR_CACHE.get(key)
    if svd is None:
        U, sv,Vt = np.linalg.svd(cons.matrix, full_matrices=False)
        keep = sv > sv[0] * 1e-13 if sv.size else slice(0)
        svd = (U[:, keep], sv[keep], Vt[keep])
        _PROJECTOR_CACHE[key] = svd
    U, sv, Vt = svd
    K, b = cons.matrix, cons.rhs

    def project(x: np.ndarray) -> np.ndarray:
        # least-squares correction; an orthogonal projection even when
        # K x = b has no exact solution
        return x - Vt.T @ ((U.T @ (K @ x - b)) / sv)

    return project


# -- cone slice projection -----------------------------------------------------


def _project_simplex(lam: np.ndarray, tau: float) -> np.ndarray:
    """Euclidean projection of eigenvalues onto {lam >= 0, sum lam = tau}."""
    u = np.sort(lam)[::-1]
    css = np.cumsum(u) - tau
    ks = np.arange(1, u.size + 1)
    mask = u - css / ks > 0
    k = int(ks[mask][-1])
    theta = css[k - 1] / k
    return np.maximum(lam - theta, 0.0)


def _project_cone(x: np.ndarray, m: int, tau: float) -> np.ndarray:
    """Project the gamma block onto {PSD, fixed trace}; H passes through."""
    out = x.copy()
    gamma = _vector_to_gamma(x[:m * m], m)
    lam, V = np.linalg.eigh(gamma)
    lam = _project_simplex(lam, tau)
    out[:m * m] = _gamma_to_vector((V * lam) @ V.conj().T)
    return out


# -- search and verification ---------------------------------------------------


def verify_candidate(gen: LindbladGenerator, problem: FeasibilityProblem) -> float:
    """Worst conservation residual of the candidate, straight off the ring."""
    if gen.form == "structure":
        try:
            # same action, far fewer dissipator terms than the dense pairs
            gen = diagonalize_structure(gen, tol=1e-13)
        except ValueError:
            pass  # gamma too indefinite to factor; measure it as is
    worst = 0.0
    for a in problem.targets:
        if problem.mode == "global":
            res = global_conservation_residual(gen, a, problem.n)
        else:
            _, res, _ = local_conservation_check(gen, a, problem.n)
        worst = max(worst, res)
    return worst


def _obstruction_certificate(problem: FeasibilityProblem) -> DefinitenessReport | None:
    if len(problem.targets) != 1 or problem.r_gen not in (2, 3):
        return None
    a = problem.targets[0]
    if a.n != 2:
        return None
    try:
        params = canonical_form(a)
        assemble = assemble_C_2site if problem.r_gen == 2 else assemble_C_3site
        return certify_definiteness(assemble(params).C)
    except (ValueError, ArithmeticError):
        return None


def _accept(gen: LindbladGenerator, problem: FeasibilityProblem,
            iterations: int, affine_distance: float) -> FeasibilityResult | None:
    """Independent certification of a candidate; None when it does not pass."""
    residual = verify_candidate(gen, problem)
    eigs = np.linalg.eigvalsh(gen.gamma)
    trace_err = abs(float(np.trace(gen.gamma).real) - problem.gamma_trace)
    if residual < VERIFY_TOL and eigs[0] > -PSD_TOL and trace_err < TRACE_TOL:
        return FeasibilityResult(
            status="feasible", generator=gen, residual=float(residual),
            iterations=iterations, affine_distance=affine_distance)
    return None


_COMPLEMENT_CACHE: dict[tuple, np.ndarray] = {}


def _conserving_complement(problem: FeasibilityProblem, cons: AffineConstraints) -> np.ndarray:
    """Orthonormal basis of the packed directions no conserving gamma has.

    A gamma conserves the targets with the help of some Hamiltonian
    exactly when its image under the homogeneous gamma rows lies in the
    range of the Hamiltonian rows; eliminating that range leaves a small
    matrix whose row space is the orthogonal complement of the
    conserving gammas.  The complement is far thinner than the span, so
    every projection downstream goes through it.
    """
    key = problem.key()
    if key in _COMPLEMENT_CACHE:
        return _COMPLEMENT_CACHE[key]
    m = len(basis_strings(problem.r_gen))
    hom = cons.matrix[cons.rhs == 0.0]
    ham_cols = hom[:, m * m:]
    reduced = hom[:, :m * m]
    if ham_cols.size:
        u_ham, sv, _ = np.linalg.svd(ham_cols, full_matrices=False)
        u_ham = u_ham[:, sv > 1e-12 * max(sv[0] if sv.size else 0.0, 1.0)]
        reduced = reduced - u_ham @ (u_ham.T @ reduced)
    q, r, _ = scipy.linalg.qr(reduced.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int((diag > 1e-10 * max(diag[0] if diag.size else 0.0, 1.0)).sum())
    comp = q[:, :rank]
    _COMPLEMENT_CACHE[key] = comp
    return comp


def _complete_on_face(problem: FeasibilityProblem, cons: AffineConstraints,
                      warm_x: np.ndarray) -> np.ndarray | None:
    """Exact completion once the projections have nearly met.

    Near a common face of the cone the outer loop closes the gap only
    sublinearly, so restrict gamma to the conserving span and finish
    there: alternate between the span (with the trace pinned) and the
    cone, which converges geometrically whenever the face has relative
    interior, and fall back to a low-rank factorization for faces too
    thin for that.  Returns a packed point or None.
    """
    m = len(basis_strings(problem.r_gen))
    tau = problem.gamma_trace
    comp = _conserving_complement(problem, cons)
    # trace functional in packed coordinates: the first m slots are diag(gamma)
    d = np.zeros(m * m)
    d[:m] = 1.0
    w_t = d - comp @ (comp.T @ d)
    wt_norm2 = float(w_t[:m].sum())
    if wt_norm2 < 1e-20:
        return None  # every conserving gamma is traceless

    def project_affine(v):
        v = v - comp @ (comp.T @ v)
        return v + w_t * ((tau - v[:m].sum()) / wt_norm2)

    v = project_affine(warm_x[:m * m])
    gamma_ok = None
    best_neg, stall = np.inf, 0
    for _ in range(500):
        gamma = _vector_to_gamma(v, m)
        lam, V = np.linalg.eigh(gamma)
        neg = float(np.linalg.norm(np.minimum(lam, 0.0)))
        if neg < 1e-14 * max(1.0, tau):
            gamma_ok = gamma
            break
        if neg > best_neg * (1.0 - 1e-2):
            stall += 1
            if stall >= 25:
                break
        else:
            stall = 0
        best_neg = min(best_neg, neg)
        v = project_affine(_gamma_to_vector((V * np.maximum(lam, 0.0)) @ V.conj().T))
    if gamma_ok is None:
        gamma_ok = _rank_refine(comp, m, tau, _vector_to_gamma(v, m))
        if gamma_ok is None:
            return None
    lam, V = np.linalg.eigh(gamma_ok)
    gamma_ok = (V * np.maximum(lam, 0.0)) @ V.conj().T
    trace = float(np.trace(gamma_ok).real)
    if trace <= 1e-12 * tau:
        return None
    gamma_ok = gamma_ok * (tau / trace)
    gpacked = _gamma_to_vector(gamma_ok)
    K, b = cons.matrix, cons.rhs
    eta, *_ = np.linalg.lstsq(K[:, m * m:], b - K[:, :m * m] @ gpacked, rcond=None)
    return np.concatenate([gpacked, eta])


def _rank_refine(comp: np.ndarray, m: int, tau: float,
                 gamma: np.ndarray) -> np.ndarray | None:
    """Gauss-Newton on a factor U: drive U U^dag onto the span exactly.

    A face with no relative interior (an isolated PSD ray inside a large
    span) starves alternating projections; parametrizing gamma by a thin
    factor turns membership into a smooth root-finding problem that
    converges quadratically from the stalled iterate.  Residuals are the
    components along the complement plus the trace, otherwise U = 0 is a
    root.  Returns the refined gamma (trace tau) or None.
    """
    lam_seed, V_seed = np.linalg.eigh(gamma)
    top = float(lam_seed[-1])
    if top <= 0.0:
        return None
    r0 = int((lam_seed > 1e-2 * top).sum())
    ranks = sorted({max(r0, 1), r0 + 1, min(r0 + 3, m)})

    # a direction E_ab touches only row/column a of gamma, so its packed
    # image lives on 2m-1 slots; gather those complement rows instead of
    # multiplying full columns
    iu, ju = np.triu_indices(m, k=1)
    pair_slot = np.zeros((m, m), dtype=int)
    noff = iu.size
    pair_slot[iu, ju] = m + np.arange(noff)
    others = [np.delete(np.arange(m), a) for a in range(m)]
    re_rows = [comp[pair_slot[np.minimum(o, a), np.maximum(o, a)]]
               for a, o in enumerate(others)]
    im_rows = [comp[pair_slot[np.minimum(o, a), np.maximum(o, a)] + noff]
               for a, o in enumerate(others)]
    sqrt2 = np.sqrt(2.0)

    def jac_column(a, b, part, U):
        # d(U U^dag) along dU = part * E_ab, projected on the complement
        z = np.empty(m - 1, dtype=complex)
        o = others[a]
        below = o < a
        z[below] = np.conj(part) * U[o[below], b]
        z[~below] = part * np.conj(U[o[~below], b])
        dval = 2.0 * (part * np.conj(U[a, b])).real
        col = comp[a] * dval
        col = col + (sqrt2 * z.real) @ re_rows[a]
        col = col + (sqrt2 * z.imag) @ im_rows[a]
        return np.append(col, dval)

    for rank in ranks:
        if rank > m:
            continue
        U = V_seed[:, -rank:] * np.sqrt(np.clip(lam_seed[-rank:], 1e-12, None))
        ok = False
        for _ in range(60):
            trace = float(np.einsum("ij,ij->", U, U.conj()).real)
            resid = np.append(comp.T @ _gamma_to_vector(U @ U.conj().T),
                              trace - tau)
            if np.linalg.norm(resid) < 1e-13 * max(1.0, tau):
                ok = True
                break
            J = np.column_stack([jac_column(a, b, part, U)
                                 for b in range(rank)
                                 for a in range(m)
                                 for part in (1.0, 1j)])
            delta, *_ = np.linalg.lstsq(J, -resid, rcond=None)
            dU = (delta[0::2] + 1j * delta[1::2]).reshape(rank, m).T
            U = U + dU
        if ok:
            return U @ U.conj().T
    return None


def search(problem: FeasibilityProblem, max_iter: int = MAX_ITER,
           tol: float = GAP_TOL, seed: int = 0) -> FeasibilityResult:
    """Dykstra alternating projections between the affine rows and the cone slice.

    Runs until the two projections agree to `tol` and the affine rows are
    satisfied tightly enough for the independent verifier, or until the
    gap stops closing (a plateau marks a positive distance between the
    sets, slow creep marks a shared tangent face), or to max_iter.  When
    the sets nearly touch an exact completion on the conserving span
    finishes the job; every returned point is re-certified from scratch.
    """
    cons = build_affine_constraints(problem)
    project_affine = _affine_projector(problem, cons)
    K, b = cons.matrix, cons.rhs
    m = len(basis_strings(problem.r_gen))
    tau = problem.gamma_trace

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(cons.matrix.shape[1]) * (tau / m)
    x = _project_cone(x, m, tau)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    converged = False
    iterations = 0
    gap = np.inf
    best_gap = np.inf
    since_best = 0
    snapshot = np.inf
    for iterations in range(1, max_iter + 1):
        y = project_affine(x + p)
        p = x + p - y
        w = y + q
        z = _project_cone(w, m, tau)
        q = w - z
        x = z
        gap = float(np.linalg.norm(z - y))
        if gap < tol and np.linalg.norm(K @ z - b) < 0.5 * VERIFY_TOL:
            converged = True
            break
        if gap < best_gap * (1.0 - STALL_RELATIVE):
            best_gap = gap
            since_best = 0
        else:
            since_best += 1
            if iterations >= STALL_MIN_ITER and since_best >= STALL_WINDOW:
                break
        if iterations % SNAPSHOT_PERIOD == 0:
            if iterations >= STALL_MIN_ITER and gap > snapshot * (1.0 - SNAPSHOT_MIN_DROP):
                break
            snapshot = gap

    affine_distance = float(np.linalg.norm(x - project_affine(x)))
    if converged:
        got = _accept(generator_from_point(problem.r_gen, x),
                      problem, iterations, affine_distance)
        if got is not None:
            return got
    if affine_distance < COMPLETION_DISTANCE * max(1.0, tau):
        cand = _complete_on_face(problem, cons, x)
        if cand is not None:
            dist = float(np.linalg.norm(cand - project_affine(cand)))
            got = _accept(generator_from_point(problem.r_gen, cand),
                          problem, iterations, dist)
            if got is not None:
                return got
    return FeasibilityResult(
        status="not_found", generator=None, residual=None,
        iterations=iterations, affine_distance=affine_distance,
        certificate=_obstruction_certificate(problem))


# -- problem files -------------------------------------------------------------


def parse_problem_file(text: str) -> FeasibilityProblem:
    """Read a density (r=<int> header plus operator lines) and a [problem] section."""
    head, sep, tail = text.partition("[problem]")
    if not sep:
        raise ValueError("missing [problem] section")
    target = parse_density_file(head)
    opts: dict[str, str] = {}
    for raw in tail.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad problem line: {raw!r}")
        key, val = (t.strip() for t in line.split("=", 1))
        opts[key] = val
    unknown = set(opts) - {"r_gen", "n", "mode", "gamma_trace"}
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    if "r_gen" not in opts:
        raise ValueError("problem section must set r_gen")
    return FeasibilityProblem(
        target,
        r_gen=int(opts["r_gen"]),
        n=int(opts["n"]) if "n" in opts else None,
        mode=opts.get("mode", "global"),
        gamma_trace=float(opts.get("gamma_trace", 1.0)),
    )


def format_problem_file(problem: FeasibilityProblem) -> str:
    if len(problem.targets) != 1:
        raise ValueError("problem files hold a single target")
    return (
        format_density_file(problem.targets[0])
        + "[problem]\n"
        + f"r_gen = {problem.r_gen}\n"
        + f"n = {problem.n}\n"
        + f"mode = {problem.mode}\n"
        + f"gamma_trace = {problem.gamma_trace!r}\n"
    )
