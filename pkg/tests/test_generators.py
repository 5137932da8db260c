import numpy as np
import pytest

from conftest import (
    dense_lindblad_apply,
    random_hermitian_window,
    random_operator,
    random_psd,
    random_structure_generator,
)
from lindring.pauli import PauliOperator, parse_operator, partial_trace
from lindring.generators import (
    LindbladGenerator,
    all_strings,
    basis_strings,
    diagonalize_structure,
    format_generator_file,
    kernel,
    parse_generator_file,
    reduced_generator,
    superop_matrix,
    to_structure,
    validate_psd,
)


def exchange_generator():
    return LindbladGenerator(2, lindblads=[parse_operator("XX + YY + ZZ")])


def dephasing_generator(axis="X"):
    return LindbladGenerator(1, lindblads=[parse_operator(axis)])


def test_exchange_acts_exactly_on_one_site_x():
    gen = exchange_generator()
    img = gen.apply(parse_operator("XI"))
    # exact integer amplitudes, no tolerance
    assert img.terms == {"XI": (-8 + 0j), "IX": (8 + 0j)}


def test_exchange_superop_entries():
    gen = exchange_generator()
    M = superop_matrix(gen)
    strings = all_strings(2)
    i_xi, i_ix = strings.index("XI"), strings.index("IX")
    assert M[i_xi, i_xi] == -8
    assert M[i_ix, i_xi] == 8


def test_dephasing_superop_diagonal():
    M = superop_matrix(dephasing_generator("X"))
    assert np.allclose(np.diag(M), [0, 0, -4, -4])
    assert np.abs(M - np.diag(np.diag(M))).max() == 0


def test_apply_against_dense_oracle():
    rng = np.random.default_rng(42)
    for trial in range(120):
        r = 1 + int(rng.integers(2))
        n = r + int(rng.integers(3))
        offset = int(rng.integers(n))
        if trial % 2:
            gen = random_structure_generator(rng, r)
        else:
            ls = [random_operator(rng, r, num_terms=3) for _ in range(1 + int(rng.integers(2)))]
            gen = LindbladGenerator(r, hamiltonian=random_hermitian_window(rng, r), lindblads=ls)
        rho = random_operator(rng, n)
        got = gen.apply(rho, offset=offset).to_dense()
        want = dense_lindblad_apply(gen, rho, offset=offset)
        assert np.abs(got - want).max() < 1e-10


def test_apply_wraps_ring_boundary():
    gen = dephasing_generator("X")
    rho = parse_operator("1.0*IIZ")
    img = gen.apply(rho, offset=2)
    assert img.coefficient("IIZ") == -4


def test_trace_and_hermiticity_preserved():
    rng = np.random.default_rng(9)
    ident = PauliOperator.identity(3)
    for _ in range(20):
        gen = random_structure_generator(rng, 2)
        rho = random_operator(rng, 3, hermitian=True)
        img = gen.apply(rho, offset=int(rng.integers(3)))
        assert abs(ident.hs_inner(img)) < 1e-12
        assert img.is_hermitian(1e-11)


def test_kernel_dephasing():
    ops = kernel(dephasing_generator("X"))
    assert len(ops) == 2
    span = {s for op in ops for s in op.terms}
    assert span == {"I", "X"}


def test_kernel_xx_dissipator():
    gen = LindbladGenerator(2, lindblads=[parse_operator("XX")])
    ops = kernel(gen)
    assert len(ops) == 8
    expected = {"II", "XX", "XI", "IX", "YY", "YZ", "ZY", "ZZ"}
    got = {s for op in ops for s in op.terms}
    assert got == expected


def test_kernel_exchange_symmetric_subspace():
    ops = kernel(exchange_generator())
    assert len(ops) == 10
    # every kernel element is swap-symmetric
    for op in ops:
        for s, c in op.terms.items():
            assert abs(op.coefficient(s[::-1]) - c) < 1e-10


def test_kernel_orthonormal():
    ops = kernel(exchange_generator())
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            want = 1.0 if i == j else 0.0
            assert abs(a.hs_inner(b) - want) < 1e-10


def test_one_site_kernels_at_most_two_dimensional():
    rng = np.random.default_rng(77)
    for _ in range(60):
        gen = random_structure_generator(rng, 1)
        assert len(kernel(gen)) <= 2


def test_unitality():
    assert exchange_generator().is_unital()
    lowering = LindbladGenerator(1, lindblads=[parse_operator("0.5*X + (0+0.5i)*Y")])
    assert not lowering.is_unital()
    defect = lowering.unital_defect()
    assert defect.hs_norm() > 0.1


def test_to_structure_matches_diagonal():
    rng = np.random.default_rng(5)
    for _ in range(20):
        ls = [random_operator(rng, 2, num_terms=4) for _ in range(2)]
        gen = LindbladGenerator(2, hamiltonian=random_hermitian_window(rng, 2), lindblads=ls)
        sgen = to_structure(gen)
        rho = random_operator(rng, 3)
        d = (gen.apply(rho, offset=1) - sgen.apply(rho, offset=1)).hs_norm()
        assert d < 1e-10


def test_diagonalize_structure_roundtrip():
    rng = np.random.default_rng(15)
    for _ in range(10):
        gen = random_structure_generator(rng, 2, rank=3)
        dgen = diagonalize_structure(gen)
        rho = random_operator(rng, 2)
        assert (gen.apply(rho) - dgen.apply(rho)).hs_norm() < 1e-10


def test_gamma_validation():
    m = len(basis_strings(1))
    bad = -np.eye(m)
    gen = LindbladGenerator(1, gamma=bad)
    with pytest.raises(ValueError):
        validate_psd(gen)
    with pytest.raises(ValueError):
        diagonalize_structure(gen)
    with pytest.raises(ValueError):
        LindbladGenerator(1, gamma=np.array([[0, 1j], [1j, 0], [0, 0]]))
    with pytest.raises(ValueError):
        LindbladGenerator(1, gamma=np.array([[0, 1], [2, 0], [0, 0]])[:2, :])


def test_reduced_generator_of_xx_pair_noise():
    basis = basis_strings(2)
    g = np.zeros((15, 15))
    i = basis.index("XX")
    g[i, i] = 1.0
    gen = LindbladGenerator(2, gamma=g)
    red = reduced_generator(gen)
    assert red.r == 1
    assert np.allclose(red.gamma, np.diag([2.0, 0, 0]))
    assert red.hamiltonian.is_zero()


def test_reduced_generator_defining_identity():
    rng = np.random.default_rng(31)
    for _ in range(30):
        gen = random_structure_generator(rng, 2)
        red = reduced_generator(gen)
        validate_psd(red)
        for label in "IXYZ":
            sigma = PauliOperator.from_label(label)
            lifted = sigma.embed(2, offset=1)
            want = partial_trace(gen.apply(lifted), (0,))
            got = red.apply(sigma)
            assert (want - got).hs_norm() < 1e-10


def test_reduced_generator_hamiltonian_part():
    h = parse_operator("0.5*IZ + 2.0*XX + 1.0*ZI")
    gen = LindbladGenerator(2, hamiltonian=h, gamma=np.zeros((15, 15)))
    red = reduced_generator(gen)
    assert abs(red.hamiltonian.coefficient("Z") - 1.0) < 1e-14
    assert abs(red.hamiltonian.coefficient("X")) < 1e-14


def test_generator_file_roundtrip_diagonal():
    gen = LindbladGenerator(
        2,
        hamiltonian=parse_operator("0.25*ZZ"),
        lindblads=[parse_operator("XX + YY + ZZ"), parse_operator("0.5*IX")],
    )
    text = format_generator_file(gen)
    back = parse_generator_file(text)
    assert back.form == "diagonal"
    assert (back.hamiltonian - gen.hamiltonian).hs_norm() < 1e-12
    rng = np.random.default_rng(2)
    rho = random_operator(rng, 2)
    assert (back.apply(rho) - gen.apply(rho)).hs_norm() < 1e-12


def test_generator_file_roundtrip_gamma():
    rng = np.random.default_rng(8)
    gen = random_structure_generator(rng, 1)
    text = format_generator_file(gen)
    back = parse_generator_file(text)
    assert back.form == "structure"
    assert np.abs(back.gamma - gen.gamma).max() < 1e-12


def test_generator_file_gamma_order_permutation():
    text = """
[gamma]
order = Z X Y
1 0 0
0 2 0
0 0 3
"""
    gen = parse_generator_file(text)
    # canonical order X Y Z
    assert np.allclose(gen.gamma, np.diag([2.0, 3.0, 1.0]))


def test_generator_file_errors():
    with pytest.raises(ValueError):
        parse_generator_file("[lindblad]\nXX\n[gamma]\n1\n")
    with pytest.raises(ValueError):
        parse_generator_file("XX\n")
    with pytest.raises(ValueError):
        parse_generator_file("[hamiltonian]\nXX\n")
    with pytest.raises(ValueError):
        parse_generator_file("[gamma]\norder = X Y\n1 0\n0 1\n")


def test_nontrivial_gamma_psd_eigenvalues():
    rng = np.random.default_rng(4)
    gen = random_structure_generator(rng, 2, rank=4)
    w = validate_psd(gen)
    assert w.min() > -1e-12
    assert abs(w.sum() - 1.0) < 1e-12
