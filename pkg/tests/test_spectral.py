import numpy as np
import pytest
from conftest import random_operator
from hypothesis import given, settings
from hypothesis import strategies as st

from perjacobi.cpoly import CPoly, max_coeff_diff, roots
from perjacobi.examples import example_2i, example_2ii, example_3ii, pathological
from perjacobi.floquet import (
    branch_points,
    fundamental_solutions,
    monodromy,
    unperturbed_discriminant,
)
from perjacobi.inverse import ambiguity_potentials, potential_to_operator
from perjacobi.operator import (
    JacobiOperator,
    SignPattern,
    borg_family,
    normalize,
    sign_flip,
    unperturbed,
)
from perjacobi.spectral import (
    antiperiodic_eigenvalues,
    borg_classify,
    characteristic_polynomial,
    classify_eigenvalue,
    cluster_match,
    dirichlet_interlacing,
    dirichlet_spectrum,
    double_period_matrix,
    exceptional_kappas,
    floquet_matrix,
    floquet_spectrum,
    interval_spectrum_check,
    is_diagonalizable,
    jordan_structure,
    periodic_eigenvalues,
    trace_identities,
    trace_spectrum,
)

SQ2 = np.sqrt(2.0)


def free_eigs_2n(N):
    k = np.arange(N + 1)
    lam = -2 * np.cos(np.pi * k / N)
    return np.concatenate([lam, lam[1:-1]])


# Floquet spectra


def test_floquet_spectrum_free_n2_quarter():
    fam = floquet_spectrum(monodromy(unperturbed(2)), np.pi / 2)
    assert np.allclose(sorted(fam.values.expanded().real), [-SQ2, SQ2], atol=1e-12)
    assert fam.kind == "floquet" and fam.kappa == np.pi / 2


def test_floquet_spectrum_endpoints_are_periodic_and_antiperiodic():
    md = monodromy(random_operator(np.random.default_rng(0), 5))
    assert cluster_match(floquet_spectrum(md, 0).values.expanded(), periodic_eigenvalues(md).values.expanded()) < 1e-9
    assert (
        cluster_match(floquet_spectrum(md, np.pi).values.expanded(), antiperiodic_eigenvalues(md).values.expanded())
        < 1e-9
    )


def test_floquet_spectrum_rejects_kappa_outside():
    with pytest.raises(ValueError):
        floquet_spectrum(monodromy(unperturbed(2)), 4.0)


def test_exceptional_kappas_free_n2():
    assert np.allclose(exceptional_kappas(monodromy(unperturbed(2))), [np.pi])


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.integers(1, 8))
def test_exceptional_kappa_count_bound(seed, N):
    ks = exceptional_kappas(monodromy(random_operator(np.random.default_rng(seed), N, real=seed % 2 == 0)))
    assert len(ks) <= N - 1 or N == 1 and not ks
    assert all(0 <= k <= np.pi for k in ks)


def test_exceptional_kappas_random_complex_mostly_empty():
    rng = np.random.default_rng(1)
    empty = sum(not exceptional_kappas(monodromy(random_operator(rng, 4))) for _ in range(20))
    assert empty >= 15


# arcs


def _hausdorff_to_interval(pts, lo=-2.0, hi=2.0, probe=2001):
    grid = np.linspace(lo, hi, probe)
    d1 = np.abs(pts[:, None] - grid[None, :]).min(0).max()
    d2 = np.maximum(np.abs(pts.imag), np.maximum(lo - pts.real, pts.real - hi).clip(0)).max()
    return max(d1, d2)


@pytest.mark.parametrize("op", [unperturbed(3), unperturbed(4), example_2i()], ids=["free3", "free4", "ex2i"])
def test_trace_spectrum_covers_interval(op):
    slices = 256
    arcs = trace_spectrum(monodromy(op), slices)
    # |dλ/dκ| <= 1 on these arcs, so the κ grid spacing bounds the λ spacing
    assert _hausdorff_to_interval(arcs.points()) <= 2 * np.pi / (slices - 1)


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_arc_points_lie_on_the_spectrum(seed, N):
    op = random_operator(np.random.default_rng(seed), N)
    md = monodromy(op)
    arcs = trace_spectrum(md, 64)
    for arc in arcs.arcs:
        d = np.array([md.delta(z) for z in arc.lam])
        assert np.abs(d.imag).max() <= 1e-6
        assert d.real.min() >= -2 - 1e-6 and d.real.max() <= 2 + 1e-6
    # N arcs per slice before any split
    kappas = np.concatenate([a.kappa for a in arcs.arcs])
    _, counts = np.unique(kappas, return_counts=True)
    assert counts.min() >= N


def test_trace_spectrum_csv_and_validation():
    arcs = trace_spectrum(monodromy(unperturbed(2)), 8)
    csv = arcs.to_csv()
    assert csv.startswith("kappa,re,im,arc_id\n")
    with pytest.raises(ValueError):
        trace_spectrum(monodromy(unperturbed(2)), 1)


def test_conjugate_operator_has_conjugate_spectrum():
    op = random_operator(np.random.default_rng(3), 3)
    p1 = trace_spectrum(monodromy(op), 32).points()
    p2 = trace_spectrum(monodromy(op.conj()), 32).points()
    assert cluster_match(np.conj(p1), p2) < 1e-8


# matrices


def test_floquet_matrix_real_kappa_zero_is_symmetric():
    op = random_operator(np.random.default_rng(4), 5, real=True)
    M = floquet_matrix(op, 0.0)
    assert np.allclose(M, M.T) and np.allclose(M.imag, 0)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_floquet_matrix_small_periods(N):
    op, _ = normalize(random_operator(np.random.default_rng(N), N))
    md = monodromy(op)
    for k in (0.0, 0.4, np.pi):
        p = characteristic_polynomial(floquet_matrix(op, k))
        assert max_coeff_diff(p, md.delta - 2 * np.cos(k)) < 1e-10


def test_floquet_matrix_n2_by_hand():
    a0, a1, b0, b1 = 1.3, -0.7 + 0.2j, 0.5j, -1.0
    op = JacobiOperator([a0, a1], [b0, b1])
    k = 0.9
    M = floquet_matrix(op, k)
    off = a0 * np.exp(1j * k / 2) + a1 * np.exp(-1j * k / 2)
    off2 = a0 * np.exp(-1j * k / 2) + a1 * np.exp(1j * k / 2)
    assert np.allclose(M, [[b0, off], [off2, b1]])


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(1, 8))
def test_floquet_matrix_characteristic_polynomial(seed, N):
    rng = np.random.default_rng(seed)
    op, _ = normalize(random_operator(rng, N))
    md = monodromy(op)
    for k in rng.uniform(0, np.pi, 10):
        M = floquet_matrix(op, k)
        assert max_coeff_diff(characteristic_polynomial(M), md.delta - 2 * np.cos(k)) <= 1e-7
        got = np.linalg.eigvals(M)
        assert cluster_match(got, floquet_spectrum(md, k).values.expanded()) <= 1e-6


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_double_period_matrix_characteristic_polynomial(seed, N):
    op, _ = normalize(random_operator(np.random.default_rng(seed), N))
    md = monodromy(op)
    L = double_period_matrix(op)
    assert max_coeff_diff(characteristic_polynomial(L), md.delta_squared_minus_4) <= 1e-7
    bp = branch_points(md)
    assert cluster_match(np.linalg.eigvals(L), bp.all_roots.expanded()) <= 1e-6
    assert len(bp.all_roots) >= N + 1


def test_double_period_matrix_real_symmetric():
    L = double_period_matrix(random_operator(np.random.default_rng(5), 4, real=True))
    assert np.allclose(L, L.T) and np.allclose(L.imag, 0)


def test_double_period_matrix_free_eigenvalues():
    L = double_period_matrix(unperturbed(4))
    assert cluster_match(np.linalg.eigvals(L), free_eigs_2n(4)) < 1e-6


FREE_DISCRIMINANT_OPS = {
    "free4": unperturbed(4),
    "free5": unperturbed(5),
    "flip6": sign_flip(unperturbed(6), SignPattern([-1, 1, -1, 1, 1, 1])),
    "ex2i": example_2i(),
    "ex2ii": example_2ii(),
    "ex3ii": example_3ii(),
    "borg3k0": borg_family(3, 0),
}


@pytest.mark.parametrize("name", FREE_DISCRIMINANT_OPS)
def test_free_discriminant_gives_free_double_period_eigenvalues(name):
    op = FREE_DISCRIMINANT_OPS[name]
    assert max_coeff_diff(monodromy(op).delta, unperturbed_discriminant(op.N)) < 1e-9
    rs = roots(characteristic_polynomial(double_period_matrix(op)))
    assert cluster_match(rs.expanded(), free_eigs_2n(op.N)) <= 1e-6


# Jordan structure and classification


def test_classify_free_interior_is_coexistence():
    op = unperturbed(4)
    md = monodromy(op)
    for k in (1, 2, 3):
        c = classify_eigenvalue(op, -2 * np.cos(np.pi * k / 4), md)
        assert c.structure == "coexistence" and not c.branch_point and not c.pathology_second_kind


@pytest.mark.parametrize("lam", [-2.0, 2.0])
def test_classify_free_edges_are_jordan_branch_points(lam):
    c = classify_eigenvalue(unperturbed(4), lam)
    assert c.structure == "jordan" and c.branch_point and not c.pathology_second_kind


def test_classify_tabulated_potential_sqrt2_is_second_kind_pathology():
    c = classify_eigenvalue(example_3ii(), SQ2)
    assert c.structure == "jordan" and not c.branch_point and c.pathology_second_kind
    assert c.multiplier == -1


def test_classify_rejects_non_periodic_point():
    with pytest.raises(ValueError):
        classify_eigenvalue(unperturbed(4), 0.3)


def test_jordan_structure_free_l8_diagonalizable():
    op = unperturbed(4)
    info = jordan_structure(double_period_matrix(op), branch_points(monodromy(op)).all_roots)
    assert is_diagonalizable(info)
    assert sum(j.algebraic for j in info) == 8


def test_jordan_structure_tabulated_potential_l8():
    op = example_3ii()
    info = jordan_structure(double_period_matrix(op), branch_points(monodromy(op)).all_roots)
    prof = {round(j.value.real, 6): (j.algebraic, j.geometric, j.generalized) for j in info}
    assert prof == {
        -2.0: (1, 1, 1),
        round(-SQ2, 6): (2, 1, 2),
        0.0: (2, 1, 2),
        round(SQ2, 6): (2, 1, 2),
        2.0: (1, 1, 1),
    }
    assert not any(j.borderline for j in info)


def test_jordan_structure_identity():
    info = jordan_structure(np.eye(5), [(1.0, 5)])
    assert (info[0].algebraic, info[0].geometric, info[0].generalized) == (5, 5, 5)


# Dirichlet spectrum and traces


def test_dirichlet_pathological_triple_zero():
    fam = dirichlet_spectrum(pathological())
    assert len(fam.values) == 1 and fam.values.multiplicities[0] == 3
    assert abs(fam.values.values[0]) < 1e-6
    assert fam.factored_residual < 1e-12


def test_dirichlet_of_ambiguity_potential():
    op = potential_to_operator(ambiguity_potentials(0)[0])
    got = dirichlet_spectrum(op).values.expanded()
    assert cluster_match(got, [0, np.sqrt(3.5), -np.sqrt(3.5)]) < 1e-9


def test_dirichlet_rejects_period_one():
    with pytest.raises(ValueError):
        dirichlet_spectrum(unperturbed(1))


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.integers(2, 8))
def test_dirichlet_real_operators_interlace(seed, N):
    op = random_operator(np.random.default_rng(seed), N, real=True)
    fam = dirichlet_spectrum(op)
    assert np.abs(fam.values.values.imag).max() <= 1e-8
    assert np.all(fam.values.multiplicities == 1)
    assert dirichlet_interlacing(op)


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.integers(2, 8))
def test_factored_dirichlet_form(seed, N):
    op = random_operator(np.random.default_rng(seed), N)
    fam = dirichlet_spectrum(op)
    vN = fundamental_solutions(op).v[N]
    assert fam.factored_residual <= 1e-8 * max(1.0, np.abs(vN.coeffs).max())


def test_trace_identities_free():
    tr = trace_identities(unperturbed(5))
    assert tr.max_residual() < 1e-12
    assert abs(tr.sum_dirichlet) < 1e-12 and abs(tr.sum_periodic_antiperiodic) < 1e-12


def test_trace_identities_random_complex_n5():
    tr = trace_identities(random_operator(np.random.default_rng(8), 5))
    assert tr.max_residual() <= 1e-7


def test_trace_identities_tabulated_potential_sum_zero():
    tr = trace_identities(example_3ii())
    assert abs(tr.sum_periodic_antiperiodic) < 1e-9


# interval spectrum and Borg-type classification


def test_interval_example_2ii():
    op = example_2ii()
    v = interval_spectrum_check(op, 128)
    assert v.verdict == "interval"
    assert np.allclose(v.endpoints, [-2, 2], atol=1e-6)
    assert max_coeff_diff(monodromy(op).delta, CPoly([2, 0, -4, 0, 1])) < 1e-9


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_interval_free(N):
    v = interval_spectrum_check(unperturbed(N), 64)
    assert v.verdict == "interval" and np.allclose(v.endpoints, [-2, 2], atol=1e-6)
    assert all(v.checks.values())


def test_interval_random_complex_is_not_interval():
    rng = np.random.default_rng(9)
    verdicts = [interval_spectrum_check(random_operator(rng, 4), 32).verdict for _ in range(10)]
    assert verdicts.count("not an interval") >= 8


def test_borg_family_m2_k1_roundtrip():
    bc = borg_classify(borg_family(2, 1), 128)
    assert bc.outcome == "classified" and bc.k == 1
    assert abs(bc.s**2 - 2) < 1e-6


@pytest.mark.parametrize("M,k", [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)])
def test_borg_family_has_free_discriminant(M, k):
    op = borg_family(M, k)
    assert max_coeff_diff(monodromy(op).delta, unperturbed_discriminant(2 * M)) <= 1e-7


def test_borg_family_nonzero_k_discriminant_value():
    # a(n)^2 = 1 ± sqrt2 alternating gives Δ = λ^4 - 4λ^2 + 6, not the free discriminant
    assert max_coeff_diff(monodromy(borg_family(2, 1)).delta, CPoly([6, 0, -4, 0, 1])) < 1e-12


def test_borg_essentially_unperturbed():
    for op in (unperturbed(4), sign_flip(unperturbed(3), SignPattern([-1, -1, 1]))):
        bc = borg_classify(op, 64)
        assert bc.outcome == "classified" and bc.k == 0 and abs(bc.s) < 1e-12


def test_borg_tabulated_potential_hypothesis_not_met():
    bc = borg_classify(example_3ii(), 64)
    assert bc.outcome == "hypothesis not met" and bc.diagonalizable is False
