import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from illpose import GridSpec, InvalidArgument, build_from_id, compute_spectrum
from illpose.gallery import (
    build_embedding_surrogate,
    build_hausdorff,
    build_integration,
    build_mixed_integration,
    build_multiplication,
    cell_to_legendre,
    hausdorff_entry,
    integration_kernel,
    legendre_orthonormal,
)
from illpose.multipliers import multiplier_from_name


def test_integration_single_point():
    A = build_integration(1, GridSpec(1))
    assert A.entries.tolist() == [[0.5]]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_integration_lower_triangular(m):
    A = build_integration(m, GridSpec(32)).entries
    assert np.all(np.triu(A, 1) == 0)
    assert A.shape == (32, 32)


def test_integration_matches_kernel_for_m2():
    N = 40
    A = build_integration(2, GridSpec(N)).entries
    s = t = GridSpec(N).nodes()
    K = integration_kernel(2, s[:, None], t[None, :]) / N
    below = np.tril(np.ones((N, N), bool), -1)
    assert np.allclose(A[below], K[below], rtol=0, atol=1e-15)
    assert np.allclose(np.diag(A), (0.5 / N) ** 2)


def test_integration_discrete_spectrum_closed_form():
    # J J^T is the inverse of a tridiagonal matrix; its singular values are
    # (h/2) cot((2n-1) pi / (4N)), which tend to 1/((n-1/2) pi)
    N = 512
    s = compute_spectrum(build_integration(1, GridSpec(N))).values
    n = np.arange(1, N + 1)
    exact = (0.5 / N) / np.tan((2 * n - 1) * np.pi / (4 * N))
    assert np.allclose(s, exact, rtol=1e-12, atol=0)


def test_integration_transpose_same_spectrum():
    A = build_integration(1, GridSpec(64)).entries
    assert np.allclose(np.linalg.svd(A, compute_uv=False), np.linalg.svd(A.T, compute_uv=False), atol=1e-14)


def test_integration_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        build_integration(0, GridSpec(4))
    with pytest.raises(InvalidArgument):
        build_integration(1, GridSpec(4, "unit_square"))
    with pytest.raises(InvalidArgument):
        build_integration(1, GridSpec(4, scheme="legendre_basis"))


def test_entries_read_only():
    A = build_integration(1, GridSpec(4))
    with pytest.raises(ValueError):
        A.entries[0, 0] = 1.0


def test_embedding_surrogate_small():
    A = build_embedding_surrogate(1, 1, 4)
    assert np.allclose(A.entries, np.diag([1, 1 / 2, 1 / 3, 1 / 4]))


def test_embedding_surrogate_dim2():
    A = build_embedding_surrogate(2, 2, 8)
    d = np.diag(A.entries)
    assert d.size == 64
    assert np.all(d > 0) and np.all(np.diff(d) <= 0)
    assert d[0] == pytest.approx(1 / 3)


def test_embedding_rejects_dim():
    with pytest.raises(InvalidArgument):
        build_embedding_surrogate(1, 3, 4)


def test_legendre_orthonormal():
    x, w = np.polynomial.legendre.leggauss(20)
    t, w = (x + 1) / 2, w / 2
    P = legendre_orthonormal(12, t)
    assert np.allclose((P * w) @ P.T, np.eye(12), atol=1e-13)


def test_hausdorff_first_column():
    B = build_hausdorff(3, GridSpec(3, scheme="legendre_basis")).entries
    assert np.allclose(B[:, 0], [1, 1 / 2, 1 / 3], atol=1e-15)


def test_hausdorff_second_column_symbolic():
    t = sp.symbols("t")
    p2 = sp.sqrt(3) * (2 * t - 1)
    oracle = [float(sp.integrate(t ** (j - 1) * p2, (t, 0, 1))) for j in (1, 2)]
    B = build_hausdorff(2, GridSpec(2, scheme="legendre_basis")).entries
    assert np.allclose(B[:, 1], oracle, atol=1e-15)
    assert oracle[1] == pytest.approx(np.sqrt(3) / 6)


def test_hausdorff_entry_closed_form_symbolic():
    t = sp.symbols("t")
    for i in range(1, 6):
        p = sp.sqrt(2 * i - 1) * sp.legendre(i - 1, 2 * t - 1)
        for j in range(1, 7):
            exact = float(sp.integrate(t ** (j - 1) * p, (t, 0, 1)))
            assert hausdorff_entry(j, i) == pytest.approx(exact, abs=1e-15)


def test_hausdorff_quadrature_matches_closed_form():
    N = 16
    B = build_hausdorff(N, GridSpec(N, scheme="legendre_basis")).entries
    ref = np.array([[hausdorff_entry(j, i) for i in range(1, N + 1)] for j in range(1, N + 1)])
    assert np.allclose(B, ref, atol=1e-13)


def test_hausdorff_cell_basis_consistent():
    N = 12
    Bl = build_hausdorff(N, GridSpec(N, scheme="legendre_basis")).entries
    Bc = build_hausdorff(N, GridSpec(N)).entries
    assert np.allclose(Bc, Bl @ cell_to_legendre(N), atol=1e-12)


def test_hausdorff_rows_limit():
    with pytest.raises(InvalidArgument):
        build_hausdorff(5, GridSpec(4, scheme="legendre_basis"))


def test_hausdorff_kind():
    assert build_hausdorff(4, GridSpec(4, scheme="legendre_basis")).kind == "noncompact_model"


def test_mixed_single_point():
    assert build_mixed_integration(1).entries.tolist() == [[0.25]]


def test_mixed_kronecker_identity():
    N = 24
    s1 = compute_spectrum(build_integration(1, GridSpec(N))).values
    s2 = compute_spectrum(build_mixed_integration(N)).values
    assert np.allclose(s2, np.sort(np.outer(s1, s1).ravel())[::-1], rtol=0, atol=1e-10)


def test_multiplication_linear():
    A = build_multiplication(multiplier_from_name("linear:1"), GridSpec(4))
    assert np.allclose(np.diag(A.entries), [1 / 8, 3 / 8, 5 / 8, 7 / 8])
    assert A.kind == "noncompact_model"


def test_multiplication_half_line():
    f = multiplier_from_name("inv-poly:1")
    A = build_multiplication(f, GridSpec(1000, "half_line_truncated", T=100.0))
    d = np.diag(A.entries)
    assert np.all(np.diff(d) < 0)
    assert d[0] == pytest.approx(1.0) and d[-1] == pytest.approx(1 / 101)


def test_multiplication_rejects_negative():
    from illpose.multipliers import MultiplierSpec

    f = MultiplierSpec("neg", lambda t: t - 0.5)
    with pytest.raises(InvalidArgument):
        build_multiplication(f, GridSpec(8))


def test_multiplier_composed_with_J_equivalent():
    from illpose.spectral import compare_operators

    N = 256
    MJ = build_from_id("M:power:1*J^m:1", N)
    J = build_from_id("J^m:1", N)
    verdict, fwd, bwd = compare_operators(compute_spectrum(MJ), compute_spectrum(J), (4, N // 4))
    assert fwd.ratio_trend == "bounded" and bwd.ratio_trend == "bounded"


def test_build_from_id_errors():
    with pytest.raises(InvalidArgument, match="valid forms"):
        build_from_id("K:1", 8)


def test_grid_validation():
    with pytest.raises(InvalidArgument):
        GridSpec(0)
    with pytest.raises(InvalidArgument):
        GridSpec(4, "half_line_truncated")
    with pytest.raises(InvalidArgument):
        GridSpec(4, T=3.0)
    assert GridSpec(5, "unit_square").dimension == 25


def test_csv_export(tmp_path):
    A = build_integration(1, GridSpec(5))
    p = tmp_path / "J.csv"
    A.to_csv(p)
    assert np.array_equal(np.loadtxt(p, delimiter=","), A.entries)


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 3), N=st.integers(1, 40))
def test_integration_shape_finite(m, N):
    A = build_integration(m, GridSpec(N))
    assert A.shape == (N, N) and np.all(np.isfinite(A.entries))
