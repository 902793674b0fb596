"""Singular spectra, decay-rate fits and spectrum comparison."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument, NumericalFailure
from .grid import OperatorMatrix
from .relations import OrderingVerdict, Relation

log = logging.getLogger(__name__)

KAPPA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 21))
MODEL_ORDER = ("power", "polylog", "exponential")

# quarter-window decision constants
VANISHING_BELOW = 0.25
DIVERGING_ABOVE = 4.0
BOUNDED_BAND = (0.5, 2.0)
BOUNDED_SPREAD = 10.0


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Singular values ``s_1 >= s_2 >= ... >= 0`` of one operator.

    ``noise_floor`` bounds the absolute error of the computed values;
    entries below it are not resolved.
    """

    values: np.ndarray
    level: int
    label: str
    noise_floor: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise InvalidArgument("spectrum values must be one-dimensional")
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise InvalidArgument(f"{self.label}: spectrum must be non-negative and non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __getitem__(self, n):
        """1-based access ``s[n]``."""
        return self.values[n - 1]

    def window(self, window) -> np.ndarray:
        a, b = window
        return self.values[a - 1 : b]

    def to_csv(self, path) -> None:
        n = np.arange(1, self.values.size + 1)
        with open(path, "w") as fh:
            fh.write("n,s_n\n")
            for k, v in zip(n, self.values):
                fh.write(f"{k},{v:.17g}\n")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ``log s_n`` to one decay model.

    power: ``log s = log c - theta log n``;
    polylog: ``log s = log c - theta log n + beta log log n``;
    exponential: ``log s = log c - gamma n^kappa``.
    """

    model: str
    residual: float
    window: tuple
    log_c: float
    theta: Optional[float] = None
    beta: Optional[float] = None
    gamma_kappa: Optional[tuple] = None

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.model == "power":
            y = self.log_c - self.theta * np.log(n)
        elif self.model == "polylog":
            with np.errstate(invalid="ignore", divide="ignore"):
                y = self.log_c - self.theta * np.log(n) + self.beta * np.log(np.log(n))
        else:
            g, k = self.gamma_kappa
            y = self.log_c - g * n**k
        return np.exp(y)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "theta": self.theta,
            "beta": self.beta,
            "gamma_kappa": list(self.gamma_kappa) if self.gamma_kappa else None,
            "log_c": self.log_c,
            "residual": self.residual,
            "window": list(self.window),
        }


@dataclass(frozen=True, eq=False)
class SpectrumComparison:
    """Ratios ``rho_n = s_n(A') / s_n(A)`` over a window and their trend."""

    ratios: np.ndarray
    ratio_sup: float
    ratio_trend: str
    window: tuple
    quarter_ratio: float
    spread: float
    prime_label: str = "A'"
    base_label: str = "A"

    def to_dict(self) -> dict:
        return {
            "prime": self.prime_label,
            "base": self.base_label,
            "window": list(self.window),
            "ratio_sup": self.ratio_sup,
            "ratio_trend": self.ratio_trend,
            "quarter_ratio": self.quarter_ratio,
            "spread": self.spread,
        }


def default_window(length: int) -> tuple:
    """Comparison window ``[max(4, L // 64), L // 4]`` for a spectrum of length ``L``."""
    lo = max(4, length // 64)
    hi = max(lo, length // 4)
    return (lo, min(hi, length))


def _check_window(window, length, min_len=1):
    try:
        a, b = (int(window[0]), int(window[1]))
    except (TypeError, ValueError, IndexError):
        raise InvalidArgument(f"window must be an index pair, got {window!r}") from None
    if not (1 <= a <= b <= length):
        raise InvalidArgument(f"window {window} outside [1, {length}]")
    if b - a + 1 < min_len:
        raise InvalidArgument(f"window {window} shorter than {min_len}")
    return (a, b)


# ---------------------------------------------------------------------------
# singular value decomposition


def _is_diagonal(a: np.ndarray) -> bool:
    return a.shape[0] == a.shape[1] and np.count_nonzero(a - np.diag(np.diag(a))) == 0


def singular_values(a: np.ndarray, label: str = "") -> np.ndarray:
    """Singular values of a dense array, exact for diagonal input."""
    if _is_diagonal(a):
        return np.sort(np.abs(np.diag(a)))[::-1]
    try:
        return np.sort(np.linalg.svd(a, compute_uv=False))[::-1]
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc), label) from exc


def svd_factors(A: OperatorMatrix):
    """Thin SVD ``A = U diag(s) Vt`` sorted descending.

    Uses the Kronecker structure when the operator declares it, and the
    exact signed-permutation factors for diagonal matrices.
    """
    if A.structure == "kronecker" and A.factors:
        U, s, Vt = svd_factors(A.factors[0])
        for f in A.factors[1:]:
            U2, s2, Vt2 = svd_factors(f)
            U, s, Vt = np.kron(U, U2), np.outer(s, s2).ravel(), np.kron(Vt, Vt2)
        order = np.argsort(-s, kind="stable")
        return U[:, order], s[order], Vt[order]
    if A.structure == "diagonal" or _is_diagonal(A.entries):
        d = np.diag(A.entries)
        order = np.argsort(-np.abs(d), kind="stable")
        n = d.size
        U = np.zeros((n, n))
        U[order, np.arange(n)] = np.where(d[order] < 0, -1.0, 1.0)
        Vt = np.zeros((n, n))
        Vt[np.arange(n), order] = 1.0
        return U, np.abs(d)[order], Vt
    try:
        return np.linalg.svd(A.entries, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc), A.label) from exc


def _extended_spectrum(A: OperatorMatrix, bits: int):
    import flint

    old = flint.ctx.prec
    flint.ctx.prec = bits
    try:
        M = A.exact(bits)
        G = M * M.transpose() if M.nrows() <= M.ncols() else M.transpose() * M
        ev = G.eig(nonstop=True, algorithm="approx")
    except Exception as exc:  # flint raises plain ValueError/ArithmeticError
        raise NumericalFailure(f"extended-precision eigensolver failed: {exc}", A.label) from exc
    finally:
        flint.ctx.prec = old
    lam = np.array([float(x.real.mid()) for x in ev])
    vals = np.sort(np.sqrt(np.clip(lam, 0.0, None)))[::-1]
    floor = vals[0] * np.sqrt(len(vals) * 2.0 ** (-bits)) if vals.size else 0.0
    return vals, floor


def compute_spectrum(A: OperatorMatrix, precision: Optional[int] = None) -> SpectrumResult:
    """Singular values of ``A``, sorted non-increasing.

    Parameters
    ----------
    A : OperatorMatrix
    precision : int, optional
        Working precision in bits. When given, ``A.exact`` is required and
        the spectrum is computed from the Gram matrix in ball arithmetic,
        which resolves values far below double-precision roundoff.
    """
    if precision is not None:
        if A.exact is None:
            raise InvalidArgument(f"{A.label} has no exact representation for extended precision")
        vals, floor = _extended_spectrum(A, int(precision))
    elif A.structure == "diagonal" or _is_diagonal(A.entries):
        vals = np.sort(np.abs(np.diag(A.entries)))[::-1]
        floor = 0.0
    else:
        vals = singular_values(A.entries, A.label)
        floor = (vals[0] if vals.size else 0.0) * np.finfo(float).eps * max(A.shape)
    return SpectrumResult(vals, A.grid.n_points, A.label, float(floor))


# ---------------------------------------------------------------------------
# decay fits


def _lstsq(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return coef, resid


def _windowed_logs(s: SpectrumResult, window):
    window = _check_window(window, len(s), min_len=8)
    vals = s.window(window)
    if np.any(vals <= 0):
        raise InvalidArgument(f"{s.label}: non-positive singular values in window {window}")
    n = np.arange(window[0], window[1] + 1, dtype=float)
    return window, n, np.log(vals)


def fit_power(s: SpectrumResult, window) -> DecayFit:
    window, n, y = _windowed_logs(s, window)
    (c, theta), r = _lstsq(np.column_stack([np.ones_like(n), -np.log(n)]), y)
    return DecayFit("power", r, window, float(c), theta=float(theta))


def fit_polylog(s: SpectrumResult, window) -> Optional[DecayFit]:
    """Poly-log fit on the part of the window with ``n >= 3``; None if fewer than 3 points."""
    window, n, y = _windowed_logs(s, window)
    keep = n >= 3
    if keep.sum() < 3:
        return None
    n, y = n[keep], y[keep]
    X = np.column_stack([np.ones_like(n), -np.log(n), np.log(np.log(n))])
    (c, theta, beta), r = _lstsq(X, y)
    return DecayFit("polylog", r, window, float(c), theta=float(theta), beta=float(beta))


def fit_exponential(s: SpectrumResult, window) -> Optional[DecayFit]:
    """Exponential fit; ``kappa`` scanned over 0.1, 0.2, ..., 2.0."""
    window, n, y = _windowed_logs(s, window)
    best = None
    for kappa in KAPPA_GRID:
        (c, gamma), r = _lstsq(np.column_stack([np.ones_like(n), -(n**kappa)]), y)
        if gamma <= 0:
            continue
        if best is None or r < best.residual:
            best = DecayFit("exponential", r, window, float(c), gamma_kappa=(float(gamma), kappa))
    return best


def _is_better(candidate: DecayFit, incumbent: DecayFit) -> bool:
    # numerical ties go to the simpler (earlier) model
    tol = 1e-10 + 1e-6 * max(candidate.residual, incumbent.residual)
    return candidate.residual < incumbent.residual - tol


def fit_decay(s: SpectrumResult, window=None) -> DecayFit:
    """Fit all three decay models and return the one with smallest residual.

    Ties (up to roundoff) are broken toward power, then polylog.
    """
    if window is None:
        window = default_window(len(s))
    best = fit_power(s, window)
    for cand in (fit_polylog(s, window), fit_exponential(s, window)):
        if cand is not None and _is_better(cand, best):
            best = cand
    return best


# ---------------------------------------------------------------------------
# comparison


def _geomean(x):
    if np.any(x == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(x))))


def classify_trend(ratios) -> tuple:
    """Trend of a ratio sequence from its first and last quarter.

    Quarter means are geometric, which makes the rule exactly antisymmetric
    under ``rho -> 1/rho``. Returns ``(trend, quarter_ratio, spread)``.
    """
    rho = np.asarray(ratios, dtype=float)
    q = max(1, rho.size // 4)
    first, last = _geomean(rho[:q]), _geomean(rho[-q:])
    if first == 0:
        qr = np.nan if last == 0 else np.inf
    else:
        qr = last / first
    lo = rho.min()
    spread = np.inf if lo == 0 else float(rho.max() / lo)
    if qr < VANISHING_BELOW:
        trend = "vanishing"
    elif qr > DIVERGING_ABOVE:
        trend = "diverging"
    elif BOUNDED_BAND[0] <= qr <= BOUNDED_BAND[1] and spread < BOUNDED_SPREAD:
        trend = "bounded"
    else:
        trend = "inconclusive"
    return trend, float(qr), spread


def compare_spectra(sA_prime: SpectrumResult, sA: SpectrumResult, window=None) -> SpectrumComparison:
    """Compare ``s_n(A')`` against ``s_n(A)`` over a window (1-based, inclusive)."""
    length = min(len(sA_prime), len(sA))
    if window is None:
        window = default_window(length)
    window = _check_window(window, length)
    base = sA.window(window)
    if np.any(base <= 0):
        raise InvalidArgument(f"{sA.label}: zero singular value in window {window}, ratio undefined")
    rho = sA_prime.window(window) / base
    trend, qr, spread = classify_trend(rho)
    return SpectrumComparison(
        ratios=rho,
        ratio_sup=float(rho.max()),
        ratio_trend=trend,
        window=window,
        quarter_ratio=qr,
        spread=spread,
        prime_label=sA_prime.label,
        base_label=sA.label,
    )


def verdict_from_comparison(c_forward: SpectrumComparison, c_backward: SpectrumComparison) -> OrderingVerdict:
    """Decision table turning two swapped comparisons into a verdict.

    ``c_forward`` compares ``A'`` against ``A``; the verdict's subject is
    ``A'`` unless the evidence orders ``A`` below ``A'``.
    """
    if tuple(c_forward.window) != tuple(c_backward.window):
        raise InvalidArgument(f"windows differ: {c_forward.window} vs {c_backward.window}")
    f, b = c_forward.ratio_trend, c_backward.ratio_trend
    prime, base = c_forward.prime_label, c_forward.base_label
    evidence = [f"spectra:{prime}/{base}:{f}", f"spectra:{base}/{prime}:{b}"]

    def v(rel, subject=prime, reference=base):
        return OrderingVerdict(rel, subject, reference, evidence=["spectra"], notes=evidence)

    if "inconclusive" in (f, b):
        return v(Relation.UNDECIDED)
    if f == "bounded" and b == "bounded":
        return v(Relation.EQUIVALENT)
    if f == "vanishing" and b == "diverging":
        return v(Relation.STRICTLY_MORE_ILL_POSED)
    if f == "bounded" and b == "diverging":
        return v(Relation.MORE_ILL_POSED)
    if f == "diverging" and b == "vanishing":
        return v(Relation.STRICTLY_MORE_ILL_POSED, base, prime)
    if f == "diverging" and b == "bounded":
        return v(Relation.MORE_ILL_POSED, base, prime)
    return v(Relation.UNDECIDED)


def compare_operators(sA_prime: SpectrumResult, sA: SpectrumResult, window=None):
    """Forward and backward comparison plus verdict, on a common window."""
    if window is None:
        window = default_window(min(len(sA_prime), len(sA)))
    fwd = compare_spectra(sA_prime, sA, window)
    bwd = compare_spectra(sA, sA_prime, window)
    return verdict_from_comparison(fwd, bwd), fwd, bwd
