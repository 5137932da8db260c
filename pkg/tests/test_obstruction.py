import numpy as np
import pytest

from lindring.pauli import PauliOperator, parse_operator
from lindring.generators import LindbladGenerator, basis_strings
from lindring.rings import CanonicalParams, assemble_sum
from lindring.obstruction import (
    H_AXIS,
    assemble_C_2site,
    assemble_C_3site,
    c2prime_diagnostics,
    certify_definiteness,
    closed_form_C_2site,
    combination_matrix,
    conservation_forms,
    family_grid,
    rows_to_csv,
    scan,
    unitality_forms,
    unitality_witness,
)

ISING = CanonicalParams.at(0.0, 0.0)


def coeff_vector(op, r):
    return np.array([op.terms.get(s, 0.0) for s in basis_strings(r)], dtype=complex)


def random_params(rng):
    mu, nu = rng.uniform(0, 1, 2)
    h = tuple(rng.uniform(-2, 2, 3))
    return CanonicalParams.at(mu, nu, h)


# -- projection equations -----------------------------------------------------


def test_named_equations_vanish_on_ising_dephasing():
    forms = conservation_forms(2, ISING)
    assert list(forms) == ["xx", "yy", "zz", "x", "y", "z"]
    c = coeff_vector(parse_operator("XX"), 2)
    for f in forms.values():
        assert f.value(c) == 0.0


def test_equations_match_generator_action():
    # the form value must reproduce the pattern coefficient of the image
    # of the summed density under the actual generator
    rng = np.random.default_rng(5)
    for r_gen, n in ((2, 8), (3, 10)):
        strings = basis_strings(r_gen)
        m = len(strings)
        for _ in range(3 if r_gen == 2 else 2):
            params = random_params(rng)
            hx, hy, hz = params.h
            a = parse_operator(
                f"XX + {params.mu} YY + {params.nu} ZZ"
                f" + {hx} XI + {hx} IX + {hy} YI + {hy} IY + {hz} ZI + {hz} IZ")
            ring = assemble_sum(a, n)
            c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            d = rng.standard_normal(m)
            L = PauliOperator(r_gen, dict(zip(strings, c)))
            ham = PauliOperator(r_gen, dict(zip(strings, d + 0j)))
            gen = LindbladGenerator(r_gen, hamiltonian=ham, lindblads=[L])
            image = PauliOperator.zero(n)
            for s in range(n):
                image = image + gen.apply(ring, s)
            forms = conservation_forms(r_gen, params)
            for name, pat in (("xx", "XX"), ("zz", "ZZ"), ("y", "Y")):
                want = complex(PauliOperator.from_label(pat).embed(n).hs_inner(image))
                got = forms[name].value(c, d)
                assert abs(want.imag) < 1e-9
                assert got == pytest.approx(want.real, abs=1e-9)


def test_equation_hamiltonian_parts_cancel_only_in_combination():
    rng = np.random.default_rng(0)
    params = CanonicalParams.at(0.5, 0.2, (0.3, 0.1, -0.4))
    forms = conservation_forms(2, params)
    for f in forms.values():
        assert np.abs(f.d_linear).max() > 0.5
    hx, hy, hz = params.h
    weights = {"xx": 1.0, "yy": params.mu, "zz": params.nu,
               "x": 2 * hx, "y": 2 * hy, "z": 2 * hz}
    combined = sum(weights[k] * forms[k].d_linear for k in forms)
    assert np.abs(combined).max() < 1e-12
    for _ in range(500):
        d = rng.standard_normal(15)
        assert abs(combined @ d) < 1e-10


def test_extra_pattern_classes_on_request():
    forms = conservation_forms(2, ISING, patterns=("zy", "xIx"))
    assert set(forms) == {"zy", "xIx"}
    c = coeff_vector(parse_operator("XX"), 2)
    for f in forms.values():
        assert np.abs(f.Q - f.Q.conj().T).max() < 1e-12
        # the Ising dephasing conserves everything, class by class
        assert abs(f.value(c)) < 1e-12


def test_conservation_forms_input_errors():
    with pytest.raises(ValueError):
        conservation_forms(4, ISING)
    with pytest.raises(ValueError):
        conservation_forms(2, CanonicalParams(0.0, 0.0, (0, 0, 0),
                                              np.eye(3), np.eye(3), 0.0, 0.0))
    with pytest.raises(ValueError):
        conservation_forms(2, ISING, patterns=("xq",))


# -- unitality forms ----------------------------------------------------------


def test_unitality_form_counts_and_structure():
    uf2 = unitality_forms(2)
    uf3 = unitality_forms(3)
    assert set(uf2) == {"xx", "yy", "zz", "xy", "xz", "yz", "x", "y", "z"}
    assert len(uf3) == 48
    for f in list(uf2.values()) + list(uf3.values()):
        assert np.abs(f.d_linear).max() == 0
        assert np.abs(f.Q.real).max() < 1e-13
        assert np.abs(f.Q - f.Q.conj().T).max() < 1e-13


def test_unitality_forms_vanish_on_hermitian_jumps():
    c = coeff_vector(parse_operator("XX"), 2)
    for f in unitality_forms(2).values():
        assert f.value(c) == 0.0
    c3 = coeff_vector(PauliOperator(3, {"XYZ": 1.0, "ZII": 0.5}), 3)
    for f in unitality_forms(3).values():
        assert abs(f.value(c3)) < 1e-12


def test_unitality_form_matches_identity_image():
    # lowering jump on the first site: identity image is 2 Z1
    low = PauliOperator(2, {"XI": 0.5, "YI": 0.5j})
    gen = LindbladGenerator(2, lindblads=[low])
    defect = gen.unital_defect()
    c = coeff_vector(low, 2)
    uf = unitality_forms(2)
    for name, pattern in (("x", "XI + IX"), ("z", "ZI + IZ")):
        direct = complex(parse_operator(pattern).hs_inner(defect))
        assert uf[name].value(c) == pytest.approx(direct.real, abs=1e-12)
    assert uf["z"].value(c) == pytest.approx(2.0)


def test_unitality_witness_recovers_divergence_form():
    gen = LindbladGenerator(2, lindblads=[
        PauliOperator(2, {"XI": 0.5, "YI": 0.5j}),
        PauliOperator(2, {"IX": 0.5, "IY": -0.5j}),
    ])
    wit = unitality_witness(gen)
    assert wit.residual < 1e-12
    assert set(wit.w.terms) == {"Z"}
    assert wit.w.terms["Z"] == pytest.approx(2.0, abs=1e-12)
    assert abs(wit.w.hs_inner(PauliOperator.identity(1))) < 1e-15


def test_unitality_witness_flags_bad_defect():
    # a single raising jump leaks weight that no divergence can absorb
    gen = LindbladGenerator(2, lindblads=[PauliOperator(2, {"XI": 0.5, "YI": 0.5j})])
    wit = unitality_witness(gen)
    assert wit.residual == pytest.approx(np.sqrt(2))
    unital = LindbladGenerator(2, lindblads=[parse_operator("XX")])
    assert unitality_witness(unital).residual < 1e-15
    with pytest.raises(ValueError):
        unitality_witness(LindbladGenerator(1, lindblads=[parse_operator("X")]))


# -- assembly and closed form -------------------------------------------------


def test_assembled_matches_closed_form_up_to_global_scalar():
    rng = np.random.default_rng(17)
    points = [random_params(rng) for _ in range(50)]
    points += [ISING, CanonicalParams.at(1, 1), CanonicalParams.at(1, 0, (0.5, 0, 0))]
    scalars = []
    for p in points:
        a = assemble_C_2site(p)
        c = closed_form_C_2site(p)
        assert a.C.shape == (15, 15) and c.C.shape == (15, 15)
        assert np.abs(a.C - a.C.T).max() < 1e-12
        denom = float(a.C.ravel() @ a.C.ravel())
        s = float(c.C.ravel() @ a.C.ravel()) / denom
        assert np.abs(c.C - s * a.C).max() < 1e-9
        scalars.append(s)
    scalars = np.array(scalars)
    assert scalars.min() > 0
    assert np.abs(scalars - scalars[0]).max() < 1e-9
    # this normalization puts the fitted scalar at exactly 4
    assert scalars[0] == pytest.approx(4.0, abs=1e-12)


def test_gauge_residual_certificate_is_small():
    rng = np.random.default_rng(23)
    for r_gen in (2, 3):
        p = random_params(rng)
        m = assemble_C_2site(p) if r_gen == 2 else assemble_C_3site(p)
        assert m.gauge_residual < 1e-10 * (1 + np.abs(m.C).max())


def test_combination_has_gauge_content_before_subtraction():
    # the raw Hermitian combination is genuinely complex; only after
    # removing the unitality span does it become the real matrix C
    params = CanonicalParams.at(0.4, 0.7, (0.9, -0.3, 0.2))
    forms = conservation_forms(2, params)
    hx, hy, hz = params.h
    w = {"xx": 1.0, "yy": params.mu, "zz": params.nu,
         "x": 2 * hx, "y": 2 * hy, "z": 2 * hz}
    Ct = sum(w[k] * forms[k].Q for k in forms)
    assert np.abs(Ct - Ct.conj().T).max() < 1e-12
    assert np.abs(Ct.imag).max() > 0.1


def test_closed_form_block_identities():
    rng = np.random.default_rng(2)
    for _ in range(5):
        p = random_params(rng)
        C = closed_form_C_2site(p).C / 32.0
        A = C[9:12, 9:12]
        At = C[12:15, 12:15]
        assert np.allclose(At - A, -np.diag([1.0, p.mu**2, p.nu**2]), atol=1e-12)
        A2 = C[3:6, 3:6]
        assert np.allclose(A2 - A, np.diag([2 * p.mu * p.nu, 2 * p.nu, 2 * p.mu]),
                           atol=1e-12)
        assert np.abs(C[:9, 9:]).max() == 0  # block diagonal across sectors


def test_c2_origin_spectrum():
    C2 = closed_form_C_2site(ISING).C[9:, 9:]
    ev = np.linalg.eigvalsh(C2)
    assert abs(ev[-1]) < 1e-12
    assert (ev[:-1] < -1e-6).all()


def test_c1_nullity_two_on_ising_field_line():
    for hx in (0.0, 0.3):
        C = closed_form_C_2site(CanonicalParams.at(0, 0, (hx, 0, 0))).C
        rep = certify_definiteness(C[:9, :9])
        assert rep.verdict == "negative_semidefinite"
        assert rep.nullity == 2


def test_heisenberg_point_negative_definite():
    for build in (assemble_C_2site, closed_form_C_2site):
        rep = certify_definiteness(build(CanonicalParams.at(1, 1)).C)
        assert rep.verdict == "negative_definite"
        assert rep.max_eigenvalue < -1e-3


def test_ising_kernel_direction_is_the_dephasing():
    m = assemble_C_2site(ISING)
    rep = certify_definiteness(m.C)
    assert rep.verdict == "negative_semidefinite"
    assert rep.nullity == 3
    S = combination_matrix()
    c_prim = coeff_vector(parse_operator("XX"), 2)
    c_comb = S.T @ c_prim  # unit-norm columns make this the coordinate map
    assert np.abs(m.C @ c_comb).max() < 1e-12


def test_multi_jump_sums_stay_negative():
    rng = np.random.default_rng(9)
    C = assemble_C_2site(CanonicalParams.at(0.5, 0.3, (0.1, -0.2, 0.4))).C
    for _ in range(20):
        vs = [rng.standard_normal(15) + 1j * rng.standard_normal(15) for _ in range(3)]
        total = sum(float(np.real(np.conj(v) @ C @ v)) for v in vs)
        norm2 = sum(float(np.real(np.conj(v) @ v)) for v in vs)
        assert total < -1e-9 * norm2


# -- 63 x 63 ------------------------------------------------------------------


def test_3site_origin_semidefinite_nullity_stable():
    m = assemble_C_3site(ISING)
    assert m.C.shape == (63, 63)
    nullities = []
    for zb in (1e-9, 1e-8, 1e-7):
        rep = certify_definiteness(m.C, zero_band=zb)
        assert rep.verdict == "negative_semidefinite"
        assert abs(rep.max_eigenvalue) < 1e-8
        nullities.append(rep.nullity)
    assert nullities[0] == nullities[1] == nullities[2]


def test_3site_xyz_and_field_points_definite():
    for params in (CanonicalParams.at(1, 1), CanonicalParams.at(0.5, 0.3),
                   CanonicalParams.at(0, 0, (0, 0.3, 0.2)),
                   CanonicalParams.at(1, 0, (0.5, 0, 0))):
        rep = certify_definiteness(assemble_C_3site(params).C)
        assert rep.verdict == "negative_definite"


def test_3site_keeps_ising_line_conservers():
    # dephasing along the coupling axis still conserves with a field h_x
    m = assemble_C_3site(CanonicalParams.at(0, 0, (0.7, 0, 0)))
    rep = certify_definiteness(m.C)
    assert rep.verdict == "negative_semidefinite"
    c = coeff_vector(PauliOperator(3, {"XII": 1.0}), 3)
    assert abs(float(np.real(np.conj(c) @ m.C @ c))) < 1e-12


# -- definiteness reports -----------------------------------------------------


def test_certify_trivial_matrices():
    rep = certify_definiteness(np.diag([-1.0, -2.0]))
    assert rep.verdict == "negative_definite"
    assert rep.nullity == 0
    assert np.allclose(rep.sylvester_minors, [-1.0, 2.0])
    rep = certify_definiteness(np.diag([-1.0, 0.0]))
    assert rep.verdict == "negative_semidefinite"
    assert rep.nullity == 1
    rep = certify_definiteness(np.diag([-1.0, 2.0]))
    assert rep.verdict == "indefinite"


def test_certify_rejects_bad_input():
    with pytest.raises(ValueError):
        certify_definiteness(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        certify_definiteness(np.zeros((2, 3)))


def test_certify_skips_minors_above_dim_15():
    rep = certify_definiteness(-np.eye(16))
    assert rep.sylvester_minors is None
    assert rep.verdict == "negative_definite"


def test_eigenvalue_and_sylvester_agree_on_scan_points():
    rng = np.random.default_rng(31)
    for _ in range(10):
        rep = certify_definiteness(assemble_C_2site(random_params(rng)).C)
        assert rep.sylvester_minors is not None
        alternates = all((-1) ** k * m > 0
                         for k, m in enumerate(rep.sylvester_minors, 1))
        assert alternates == (rep.verdict == "negative_definite")


# -- the shifted antisymmetric block ------------------------------------------


def test_c2prime_heisenberg_coefficients():
    ev, (b2, b1, b0) = c2prime_diagnostics(CanonicalParams.at(1, 1))
    assert b2 == pytest.approx(12.0, abs=1e-10)
    assert len(ev) == 6


def test_c2prime_identity_and_floor_on_grid():
    rng = np.random.default_rng(13)
    axis = (0.0, 0.25, 0.5, 0.75, 1.0)
    hs = (0.0, 0.4, -1.2)
    for mu in axis:
        for nu in axis:
            for h in hs:
                p = CanonicalParams.at(mu, nu, (h, -h / 2, h / 3))
                ev, (b2, b1, b0) = c2prime_diagnostics(p)
                expect = 4 * (1 + mu**2 + nu**2 + 2 * (h**2 + h**2 / 4 + h**2 / 9))
                assert b2 == pytest.approx(expect, abs=1e-9)
                assert b2 >= 4.0 - 1e-12
                gaps = ev[1::2] - ev[0::2]
                assert np.abs(gaps).max() < 1e-8 * (1 + np.abs(ev).max())


def test_c2prime_shift_never_lowers_top_of_spectrum():
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = random_params(rng)
        ev, _ = c2prime_diagnostics(p)
        C2 = closed_form_C_2site(p).C[9:, 9:] / 32.0
        top2 = np.linalg.eigvalsh(2.0 * C2)[-1]
        assert ev[-1] >= top2 - 1e-12


def test_c2prime_rejects_out_of_range_anisotropy():
    with pytest.raises(ValueError):
        c2prime_diagnostics(CanonicalParams.at(1.5, 0.0))


# -- scans ---------------------------------------------------------------------


def test_scan_xyz_family_definite_except_origin():
    axis = (0.0, 0.25, 0.5, 0.75, 1.0)
    rows, summary = scan(2, family_grid("xyz", mu_axis=axis))
    assert summary["points"] == 25
    assert summary["counts"]["indefinite"] == 0
    assert summary["semidefinite_points"] == [(0.0, 0.0, 0.0, 0.0, 0.0)]
    assert summary["semidefinite_only_on_ising_line"]


def test_scan_field_families_all_definite():
    rows, summary = scan(2, family_grid("xxz", mu_axis=(0.0, 0.5, 1.0),
                                        h_axis=(-1.0, 0.1, 2.0)))
    assert summary["counts"]["negative_definite"] == summary["points"]
    rows, summary = scan(2, family_grid("xx-field"))
    assert summary["counts"]["negative_definite"] == len(H_AXIS)


def test_scan_3site_small_grid():
    rows, summary = scan(3, family_grid("xyz", mu_axis=(0.0, 0.5, 1.0)))
    assert summary["counts"] == {"negative_definite": 8,
                                 "negative_semidefinite": 1, "indefinite": 0}
    assert summary["semidefinite_only_on_ising_line"]


def test_scan_rows_deterministic_and_csv():
    grid = family_grid("ising-fields", h_axis=(-0.5, 0.0, 0.5))
    rows1, _ = scan(2, grid)
    rows2, _ = scan(2, grid)
    assert [(r.hy, r.hz) for r in rows1] == [(r.hy, r.hz) for r in rows2]
    csv = rows_to_csv(rows1)
    lines = csv.strip().split("\n")
    assert lines[0] == "mu,nu,hx,hy,hz,max_eig,nullity,verdict"
    assert len(lines) == 10
    assert rows_to_csv(rows2) == csv


def test_family_grid_unknown_name():
    with pytest.raises(ValueError):
        family_grid("kitaev")
