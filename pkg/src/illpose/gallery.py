"""Finite-dimensional discretizations of the operator gallery.

Every builder is a pure function returning an immutable
:class:`~illpose.grid.OperatorMatrix`.

Stable identifiers (see :func:`build_from_id`):

==================  ==============================================
``J^m:<m>``         Riemann-Liouville integration of order ``m``
``E^k:<k>:<dim>``   diagonal surrogate of the Sobolev embedding
``BH``              Hausdorff moment operator (Legendre basis)
``J2``              mixed integration on the unit square
``M:<fname>``       multiplication by a registered multiplier
``X*Y``             composition, e.g. ``BH*J^m:1``
==================  ==============================================
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import InvalidArgument
from .grid import GridSpec, OperatorMatrix, compose


def _check_positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InvalidArgument(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _integration_base(n):
    h = 1.0 / n
    a = np.tril(np.full((n, n), h), -1)
    a[np.diag_indices(n)] = h / 2
    return a


def _integration_exact(n, m):
    import flint

    def exact(prec):
        h = flint.fmpq(1, n)
        rows = [[h if j < i else (h / 2 if j == i else flint.fmpq(0)) for j in range(n)] for i in range(n)]
        base = flint.arb_mat(rows)
        out = base
        for _ in range(m - 1):
            out = out * base
        return out

    return exact


def build_integration(m: int, grid: GridSpec) -> OperatorMatrix:
    """Midpoint collocation matrix of the integration operator ``J^m``.

    For ``m = 1`` the entry ``(i, j)`` is ``h`` below the diagonal and
    ``h/2`` on it (the midpoint of the jump of the Heaviside kernel).
    Higher orders are the ``m``-fold product of that matrix. For ``m = 2``
    this coincides with ``h * (s_i - t_j)`` below the diagonal; plain kernel
    collocation for ``m >= 2`` carries a spurious, exponentially small
    singular value, the product does not.

    Parameters
    ----------
    m : int
        Order, ``m >= 1``.
    grid : GridSpec
        Must be a ``unit_interval`` grid with ``midpoint_collocation``.

    Returns
    -------
    OperatorMatrix
        Lower triangular ``N x N`` matrix labelled ``J^m:<m>``.
    """
    m = _check_positive_int("m", m)
    if grid.domain != "unit_interval" or grid.scheme != "midpoint_collocation":
        raise InvalidArgument("build_integration needs a unit_interval grid with midpoint_collocation")
    n = grid.n_points
    base = _integration_base(n)
    a = np.linalg.matrix_power(base, m)
    return OperatorMatrix(a, grid, f"J^m:{m}", exact=_integration_exact(n, m))


def integration_kernel(m: int, s, t):
    """Riemann-Liouville kernel ``(s - t)^(m-1) / (m-1)!`` for ``t < s``, else 0."""
    d = np.asarray(s, dtype=float) - np.asarray(t, dtype=float)
    return np.where(d > 0, np.clip(d, 0, None) ** (m - 1) / factorial(m - 1), 0.0)


def build_embedding_surrogate(k: int, dim: int, N: int) -> OperatorMatrix:
    """Diagonal operator whose singular values follow the embedding asymptotics.

    ``dim=1`` gives ``n^-k`` for ``n = 1..N``. ``dim=2`` gives the values
    ``(1 + i^2 + j^2)^(-k/2)``, ``1 <= i, j <= N``, sorted descending.
    """
    k = _check_positive_int("k", k)
    N = _check_positive_int("N", N)
    if dim == 1:
        vals = np.arange(1, N + 1, dtype=float) ** (-float(k))
        grid = GridSpec(N, "unit_interval", "diagonal_surrogate")
    elif dim == 2:
        i = np.arange(1, N + 1, dtype=float)
        vals = (1.0 + i[:, None] ** 2 + i[None, :] ** 2) ** (-k / 2.0)
        vals = np.sort(vals.ravel())[::-1]
        grid = GridSpec(N, "unit_square", "diagonal_surrogate")
    else:
        raise InvalidArgument(f"dim must be 1 or 2, got {dim!r}")
    return OperatorMatrix(np.diag(vals), grid, f"E^k:{k}:{dim}", structure="diagonal")


def legendre_orthonormal(n_basis: int, t) -> np.ndarray:
    """Orthonormal shifted Legendre polynomials ``p_1..p_n`` on [0, 1] at ``t``.

    Returns an array of shape ``(n_basis, len(t))``; ``p_1 = 1``,
    ``p_2 = sqrt(3) (2t - 1)``.
    """
    x = 2.0 * np.asarray(t, dtype=float) - 1.0
    out = np.empty((n_basis, x.size))
    prev, cur = np.ones_like(x), x
    out[0] = prev
    if n_basis > 1:
        out[1] = cur
    for d in range(1, n_basis - 1):
        prev, cur = cur, ((2 * d + 1) * x * cur - d * prev) / (d + 1)
        out[d + 1] = cur
    out *= np.sqrt(2.0 * np.arange(n_basis) + 1.0)[:, None]
    return out


def _hausdorff_cells_exact(rows, n):
    import flint

    def exact(prec):
        q = [[flint.fmpq((k + 1) ** j - k**j, j * n**j) for k in range(n)] for j in range(1, rows + 1)]
        return flint.arb_mat(q) * flint.arb(n).sqrt()

    return exact


def build_hausdorff(rows: int, grid: GridSpec) -> OperatorMatrix:
    """Finite section of the Hausdorff moment operator ``z -> (int t^(j-1) z dt)_j``.

    With ``scheme="legendre_basis"`` the domain coordinates are the
    orthonormal shifted Legendre polynomials and entry ``(j, i)`` is
    ``int_0^1 t^(j-1) p_i(t) dt``, evaluated by Gauss-Legendre quadrature
    that is exact for these polynomial integrands.

    With ``scheme="midpoint_collocation"`` the domain coordinates are the
    orthonormal cell indicators of the uniform grid, matching
    :func:`build_integration`; entry ``(j, k)`` is
    ``(t_{k+1}^j - t_k^j) / (j sqrt(h))``. Both matrices agree through the
    cell-to-Legendre transfer, because moments of degree below ``N`` only see
    the projection onto polynomials of degree below ``N``.
    """
    rows = _check_positive_int("rows", rows)
    n = grid.n_points
    if grid.domain != "unit_interval":
        raise InvalidArgument("build_hausdorff needs a unit_interval grid")
    if rows > n:
        raise InvalidArgument(f"rows={rows} exceeds the basis size {n}")
    j = np.arange(1, rows + 1)
    if grid.scheme == "legendre_basis":
        x, w = np.polynomial.legendre.leggauss(n)
        t, w = (x + 1.0) / 2.0, w / 2.0
        p = legendre_orthonormal(n, t)
        mono = t[None, :] ** (j - 1)[:, None]
        a = (mono * w) @ p.T
        exact = None
    elif grid.scheme == "midpoint_collocation":
        edges = np.linspace(0.0, 1.0, n + 1)
        pw = edges[None, :] ** j[:, None]
        a = np.diff(pw, axis=1) / j[:, None] * np.sqrt(n)
        exact = _hausdorff_cells_exact(rows, n)
    else:
        raise InvalidArgument("build_hausdorff needs legendre_basis or midpoint_collocation")
    # B^(H) is bounded but not compact
    return OperatorMatrix(a, grid, "BH", kind="noncompact_model", exact=exact)


def hausdorff_entry(j: int, i: int) -> float:
    """Closed form of ``int_0^1 t^(j-1) p_i(t) dt`` (zero for ``i > j``)."""
    if i > j:
        return 0.0
    val = Fraction(factorial(j - 1) ** 2, factorial(j - i) * factorial(j + i - 1))
    return float(val) * np.sqrt(2 * i - 1)


def cell_to_legendre(n: int) -> np.ndarray:
    """Legendre coefficients of the orthonormal cell indicators (``n x n``)."""
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(0.0, 1.0, n + 1)
    h = 1.0 / n
    out = np.zeros((n, n))
    for k in range(n):
        t = edges[k] + h * (x + 1.0) / 2.0
        out[:, k] = legendre_orthonormal(n, t) @ (w * h / 2.0)
    return out / np.sqrt(h)


def build_mixed_integration(N: int) -> OperatorMatrix:
    """Mixed integration on the unit square as the Kronecker square of ``J``."""
    N = _check_positive_int("N", N)
    j1 = build_integration(1, GridSpec(N))
    return OperatorMatrix(
        np.kron(j1.entries, j1.entries),
        GridSpec(N, "unit_square", "midpoint_collocation"),
        "J2",
        structure="kronecker",
        factors=(j1, j1),
    )


def build_multiplication(f, grid: GridSpec) -> OperatorMatrix:
    """Diagonal matrix ``diag(f(t_1), ..., f(t_N))`` on the grid nodes."""
    if grid.domain == "unit_square":
        raise InvalidArgument("multiplication operators are one-dimensional")
    with np.errstate(all="ignore"):
        vals = np.asarray(f.eval(grid.nodes()), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InvalidArgument(f"multiplier {f.name} is not finite on the grid")
    if np.any(vals < 0):
        raise InvalidArgument(f"multiplier {f.name} takes negative values on the grid")
    return OperatorMatrix(np.diag(vals), grid, f"M:{f.name}", kind="noncompact_model", structure="diagonal")


_ID_PATTERNS = (
    (re.compile(r"^J\^m:(\d+)$"), "integration"),
    (re.compile(r"^E\^k:(\d+):([12])$"), "embedding"),
    (re.compile(r"^BH$"), "hausdorff"),
    (re.compile(r"^J2$"), "mixed"),
    (re.compile(r"^M:(.+)$"), "multiplier"),
)

VALID_IDS = ("J^m:<m>", "E^k:<k>:<dim>", "BH", "J2", "M:<fname>", "<id>*<id>")


def parse_id(identifier: str):
    """Split a single (non-composite) identifier into ``(family, args)``."""
    ident = identifier.strip()
    for pat, family in _ID_PATTERNS:
        m = pat.match(ident)
        if m:
            return family, m.groups()
    raise InvalidArgument(f"unknown operator identifier {identifier!r}; valid forms: {', '.join(VALID_IDS)}")


def build_from_id(identifier: str, N: int) -> OperatorMatrix:
    """Build a gallery operator from its stable identifier at level ``N``.

    In a composition ``BH*...`` the Hausdorff factor is built in the cell
    basis so it acts on the output of the collocation matrices.
    """
    parts = [p.strip() for p in identifier.split("*")]
    if len(parts) > 1:
        ops = []
        for k, part in enumerate(parts):
            if part == "BH" and k < len(parts) - 1:
                ops.append(build_hausdorff(N, GridSpec(N, "unit_interval", "midpoint_collocation")))
            else:
                ops.append(build_from_id(part, N))
        out = ops[-1]
        for op in reversed(ops[:-1]):
            out = compose(op, out)
        return OperatorMatrix(out.entries, out.grid, identifier.replace(" ", ""), out.kind, exact=out.exact)

    family, args = parse_id(identifier)
    if family == "integration":
        return build_integration(int(args[0]), GridSpec(N))
    if family == "embedding":
        return build_embedding_surrogate(int(args[0]), int(args[1]), N)
    if family == "hausdorff":
        return build_hausdorff(N, GridSpec(N, "unit_interval", "legendre_basis"))
    if family == "mixed":
        return build_mixed_integration(N)
    from .multipliers import multiplier_from_name

    f = multiplier_from_name(args[0])
    return build_multiplication(f, f.default_grid(N))
