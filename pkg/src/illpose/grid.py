"""Discretization carriers: grids and operator matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgument

DOMAINS = ("unit_interval", "unit_square", "half_line_truncated")
SCHEMES = ("midpoint_collocation", "legendre_basis", "diagonal_surrogate")
KINDS = ("compact_model", "noncompact_model")


@dataclass(frozen=True)
class GridSpec:
    """Grid on which an operator is discretized.

    Parameters
    ----------
    n_points : int
        Points per coordinate direction; a ``unit_square`` grid has
        ``n_points**2`` unknowns.
    domain : str
        One of ``unit_interval``, ``unit_square``, ``half_line_truncated``.
    scheme : str
        One of ``midpoint_collocation``, ``legendre_basis``,
        ``diagonal_surrogate``.
    T : float, optional
        Truncation endpoint, required for ``half_line_truncated``.
    """

    n_points: int
    domain: str = "unit_interval"
    scheme: str = "midpoint_collocation"
    T: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.n_points, bool) or not isinstance(self.n_points, (int, np.integer)):
            raise InvalidArgument(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < 1:
            raise InvalidArgument(f"n_points must be >= 1, got {self.n_points}")
        if self.domain not in DOMAINS:
            raise InvalidArgument(f"unknown domain {self.domain!r}; expected one of {DOMAINS}")
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.domain == "half_line_truncated":
            if self.T is None or not np.isfinite(self.T) or self.T <= 0:
                raise InvalidArgument("half_line_truncated needs a finite truncation T > 0")
        elif self.T is not None:
            raise InvalidArgument(f"T is only meaningful for half_line_truncated, not {self.domain}")

    @property
    def dimension(self) -> int:
        return self.n_points**2 if self.domain == "unit_square" else self.n_points

    @property
    def h(self) -> float:
        if self.domain == "half_line_truncated":
            return self.T / max(self.n_points - 1, 1)
        return 1.0 / self.n_points

    def nodes(self) -> np.ndarray:
        """Grid nodes; midpoints on [0, 1], endpoint-inclusive uniform on [0, T]."""
        n = self.n_points
        if self.domain == "half_line_truncated":
            return np.linspace(0.0, self.T, n)
        mid = (np.arange(n) + 0.5) / n
        if self.domain == "unit_square":
            s1, s2 = np.meshgrid(mid, mid, indexing="ij")
            return np.column_stack([s1.ravel(), s2.ravel()])
        return mid


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix discretizing one gallery operator.

    ``exact``, when present, rebuilds the same matrix in ball arithmetic at a
    requested working precision (bits); it enables extended-precision spectra.
    ``structure`` is ``"dense"``, ``"diagonal"`` or ``"kronecker"``; for the
    latter ``factors`` holds the Kronecker factors in order.
    """

    entries: np.ndarray
    grid: GridSpec
    label: str
    kind: str = "compact_model"
    structure: str = "dense"
    factors: tuple = ()
    exact: Optional[Callable[[int], object]] = field(default=None, repr=False)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2:
            raise InvalidArgument(f"{self.label}: entries must be a 2-D array")
        if not np.all(np.isfinite(a)):
            raise InvalidArgument(f"{self.label}: entries must be finite")
        if self.kind not in KINDS:
            raise InvalidArgument(f"{self.label}: unknown kind {self.kind!r}")
        if a is self.entries:
            a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def shape(self) -> tuple:
        return self.entries.shape

    def __matmul__(self, other):
        return compose(self, other)

    def to_csv(self, path) -> None:
        """Row-major CSV with 17 significant digits."""
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


def compose(left: OperatorMatrix, right: OperatorMatrix, label: str | None = None) -> OperatorMatrix:
    """Product ``left @ right`` with metadata.

    The product is compact as soon as one factor is (compact operators form
    an ideal). Exact builders compose when both factors carry one.
    """
    if left.shape[1] != right.shape[0]:
        raise InvalidArgument(
            f"cannot compose {left.label} {left.shape} with {right.label} {right.shape}"
        )
    kind = "compact_model" if "compact_model" in (left.kind, right.kind) else "noncompact_model"
    exact = None
    if left.exact is not None and right.exact is not None:
        lx, rx = left.exact, right.exact

        def exact(prec, _l=lx, _r=rx):
            return _l(prec) * _r(prec)

    return OperatorMatrix(
        entries=left.entries @ right.entries,
        grid=right.grid,
        label=label or f"{left.label}*{right.label}",
        kind=kind,
        exact=exact,
    )
