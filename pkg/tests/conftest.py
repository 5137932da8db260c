import numpy as np

from lindring.pauli import PauliOperator
from lindring.generators import LindbladGenerator, basis_strings


def random_operator(rng, n, num_terms=6, hermitian=False):
    terms = {}
    for _ in range(num_terms):
        s = "".join("IXYZ"[i] for i in rng.integers(0, 4, size=n))
        c = complex(rng.standard_normal(), 0.0 if hermitian else rng.standard_normal())
        terms[s] = terms.get(s, 0j) + c
    return PauliOperator(n, terms)


def random_hermitian_window(rng, n, num_terms=6):
    return random_operator(rng, n, num_terms=num_terms, hermitian=True)


def random_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    b = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    g = b @ b.conj().T
    return g / np.trace(g).real


def random_structure_generator(rng, r, rank=None, with_h=True):
    m = len(basis_strings(r))
    h = random_hermitian_window(rng, r) if with_h else PauliOperator.zero(r)
    return LindbladGenerator(r, hamiltonian=h, gamma=random_psd(rng, m, rank))


def dense_lindblad_apply(gen, rho, offset=0):
    """Dense-matrix oracle for the generator action."""
    n = rho.n
    out = np.zeros((2**n, 2**n), dtype=complex)
    d = rho.to_dense()
    h = gen.hamiltonian.embed(n, offset).to_dense()
    out += 1j * (d @ h - h @ d)
    if gen.form == "diagonal":
        ls = [L.embed(n, offset).to_dense() for L in gen.lindblads]
        for L in ls:
            Ld = L.conj().T
            out += 2 * L @ d @ Ld - Ld @ L @ d - d @ Ld @ L
    else:
        ps = [PauliOperator.from_label(s).embed(n, offset).to_dense() for s in basis_strings(gen.r)]
        m = len(ps)
        for j in range(m):
            for k in range(m):
                g = gen.gamma[j, k]
                if g == 0:
                    continue
                out += g * (2 * ps[j] @ d @ ps[k] - ps[k] @ ps[j] @ d - d @ ps[k] @ ps[j])
    return out
