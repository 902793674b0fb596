"""Factorization witnesses, polar decomposition, Douglas constants and guards."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, NumericalFailure
from .grid import OperatorMatrix
from .relations import OrderingVerdict, Relation
from .spectral import classify_trend, compute_spectrum, default_window, singular_values, svd_factors

log = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10
RESIDUAL_RTOL = 1e-8
PINV_RTOL = 1e-12
EXACT_NORM_MAX_DIM = 1024


def _opnorm(M: np.ndarray) -> float:
    """Spectral norm; above ``EXACT_NORM_MAX_DIM`` the Frobenius upper bound."""
    if M.size == 0:
        return 0.0
    if min(M.shape) > EXACT_NORM_MAX_DIM:
        return float(np.linalg.norm(M))
    return float(np.linalg.norm(M, 2))


def orthogonality_defect(R: np.ndarray) -> float:
    """``||R^T R - I||_2``."""
    R = np.asarray(R, dtype=float)
    return _opnorm(R.T @ R - np.eye(R.shape[1]))


@dataclass(frozen=True, eq=False)
class FactorizationWitness:
    """Numerical certificate of ``A' = R A S`` on a leading subspace.

    ``residual`` is ``||(A' - R A S) P||_2`` where ``P`` spans the leading
    ``rank`` right singular vectors of ``A'`` (stored as ``domain_basis``);
    with ``rank`` equal to the full dimension it is the plain residual.
    The witness lives on one discretization level and says nothing about
    the continuum factorization.
    """

    R: np.ndarray
    S: np.ndarray
    sigma: np.ndarray
    rank: int
    residual: float
    orthogonality_defect: float
    tolerance: float
    prime_label: str = "A'"
    base_label: str = "A"
    domain_basis: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def sound(self) -> bool:
        return self.orthogonality_defect <= ORTHOGONALITY_TOL and self.residual <= self.tolerance

    def certificate(self) -> dict:
        return {
            "prime": self.prime_label,
            "base": self.base_label,
            "residual": float(self.residual),
            "orthogonality_defect": float(self.orthogonality_defect),
            "rank": int(self.rank),
            "tolerance": float(self.tolerance),
            "sigma_max": float(self.sigma.max()) if self.sigma.size else 0.0,
            "sound": bool(self.sound),
        }

    def export(self, directory, write_matrices: bool = True) -> list:
        """Write ``R.csv``, ``S.csv``, ``sigma.csv`` and ``certificate.json``.

        Returns the written paths. Set ``write_matrices=False`` to skip the
        two dense factors for very large levels.
        """
        os.makedirs(directory, exist_ok=True)
        paths = []
        if write_matrices:
            for name, M in (("R", self.R), ("S", self.S)):
                p = os.path.join(directory, f"{name}.csv")
                np.savetxt(p, M, delimiter=",", fmt="%.17g")
                paths.append(p)
        p = os.path.join(directory, "sigma.csv")
        np.savetxt(p, self.sigma, fmt="%.17g")
        paths.append(p)
        p = os.path.join(directory, "certificate.json")
        with open(p, "w") as fh:
            json.dump(self.certificate(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(p)
        return paths


def _complete_basis(Ur: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose leading columns are ``Ur``."""
    m, r = Ur.shape
    if r == m:
        return Ur
    Q, T = np.linalg.qr(np.hstack([Ur, np.eye(m)]), mode="complete")
    signs = np.sign(np.diag(T)[:r])
    signs[signs == 0] = 1.0
    Q[:, :r] *= signs
    return Q


def _truncated_residual(A_prime, R, A, S, P) -> float:
    return _opnorm(A_prime @ P - R @ (A @ (S @ P)))


def build_witness(A_prime: OperatorMatrix, A: OperatorMatrix, rank: Optional[int] = None) -> FactorizationWitness:
    """Witness ``A' = R A S`` from the two singular value decompositions.

    ``S`` maps the right singular vectors of ``A'`` to those of ``A`` scaled
    by ``sigma_i = s_i(A') / s_i(A)``; ``R`` maps the left singular vectors
    of ``A`` to those of ``A'`` and is completed to an orthogonal matrix.

    Parameters
    ----------
    A_prime, A : OperatorMatrix
        Operators with the same number of rows.
    rank : int, optional
        Truncation rank, default a quarter of the smaller dimension.
    """
    if A_prime.shape[0] != A.shape[0]:
        raise InvalidArgument(f"range dimensions differ: {A_prime.shape} vs {A.shape}")
    max_rank = min(min(A_prime.shape), min(A.shape))
    if rank is None:
        rank = max(1, max_rank // 4)
    if isinstance(rank, bool) or not isinstance(rank, (int, np.integer)) or not 1 <= rank <= max_rank:
        raise InvalidArgument(f"rank must be in [1, {max_rank}], got {rank!r}")
    Up, sp, Vtp = svd_factors(A_prime)
    U, s, Vt = svd_factors(A)
    if np.any(s[:rank] <= 0):
        raise InvalidArgument(f"{A.label}: vanishing singular value within rank {rank}")
    sigma = sp[:rank] / s[:rank]
    S = (Vt[:rank].T * sigma) @ Vtp[:rank]
    if Up.shape[1] == Up.shape[0] and U.shape[1] == U.shape[0]:
        R = Up @ U.T
    else:
        R = _complete_basis(Up[:, :rank]) @ _complete_basis(U[:, :rank]).T
    P = Vtp[:rank].T
    a_p, a = A_prime.entries, A.entries
    # (A' - R A S) P = A' P - R A V_r diag(sigma): cheaper than forming R A S
    resid = _opnorm(a_p @ P - R @ ((a @ Vt[:rank].T) * sigma))
    return FactorizationWitness(
        R=R,
        S=S,
        sigma=sigma,
        rank=int(rank),
        residual=resid,
        orthogonality_defect=orthogonality_defect(R),
        tolerance=RESIDUAL_RTOL * float(sp[0]) if sp.size else 0.0,
        prime_label=A_prime.label,
        base_label=A.label,
        domain_basis=P,
    )


def direct_witness(A_prime: OperatorMatrix, A: OperatorMatrix, R, S) -> FactorizationWitness:
    """Certificate for user-supplied factors, with the full residual ``||A' - R A S||``."""
    R = np.asarray(R, dtype=float)
    S = np.asarray(S, dtype=float)
    if R.shape != (A_prime.shape[0], A.shape[0]) or S.shape != (A.shape[1], A_prime.shape[1]):
        raise InvalidArgument(f"factor shapes {R.shape}, {S.shape} do not fit {A_prime.shape} and {A.shape}")
    resid = _opnorm(A_prime.entries - R @ A.entries @ S)
    s1 = float(np.linalg.norm(A_prime.entries, 2)) if A_prime.entries.size else 0.0
    return FactorizationWitness(
        R=R,
        S=S,
        sigma=np.linalg.svd(S, compute_uv=False),
        rank=min(A_prime.shape),
        residual=resid,
        orthogonality_defect=orthogonality_defect(R),
        tolerance=max(RESIDUAL_RTOL * s1, 1e-14),
        prime_label=A_prime.label,
        base_label=A.label,
    )


def compose_witnesses(
    w_outer: FactorizationWitness,
    w_inner: FactorizationWitness,
    A_second: OperatorMatrix,
    A: OperatorMatrix,
):
    """Chain ``A'' = R1 A' S1`` and ``A' = R2 A S2`` into ``A'' = (R1 R2) A (S2 S1)``.

    Returns ``(witness, bound)`` where ``bound`` is
    ``residual1 + ||R1|| residual2 ||S1||``; the composed residual is
    measured on the leading subspace of ``w_outer``.
    """
    if w_outer.base_label != w_inner.prime_label:
        log.warning("composing %s with %s: labels do not chain", w_outer.base_label, w_inner.prime_label)
    R = w_outer.R @ w_inner.R
    S = w_inner.S @ w_outer.S
    P = w_outer.domain_basis if w_outer.domain_basis is not None else np.eye(A_second.shape[1])
    resid = _truncated_residual(A_second.entries, R, A.entries, S, P)
    bound = w_outer.residual + _opnorm(w_outer.R) * w_inner.residual * _opnorm(w_outer.S)
    w = FactorizationWitness(
        R=R,
        S=S,
        sigma=np.linalg.svd(S, compute_uv=False)[: w_outer.rank],
        rank=w_outer.rank,
        residual=resid,
        orthogonality_defect=orthogonality_defect(R),
        tolerance=w_outer.tolerance,
        prime_label=A_second.label,
        base_label=A.label,
        domain_basis=P,
    )
    return w, bound


def polar_absolute(A: OperatorMatrix):
    """Polar decomposition ``A = U |A|``.

    Returns ``(absA, U)`` with ``absA = V diag(s) V^T`` and ``U = W V^T`` from
    the SVD ``A = W diag(s) V^T``. ``U`` has orthonormal columns (it is
    orthogonal for square ``A``), also when ``A`` is rank deficient.
    """
    if A.shape[0] < A.shape[1]:
        raise InvalidArgument(f"{A.label}: polar decomposition needs a square or tall matrix, got {A.shape}")
    try:
        W, s, Vt = np.linalg.svd(A.entries, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc), A.label) from exc
    absA = (Vt.T * s) @ Vt
    absA = 0.5 * (absA + absA.T)
    U = W @ Vt
    out = OperatorMatrix(absA, A.grid, f"|{A.label}|", A.kind)
    return out, U


def polar_witnesses(A: OperatorMatrix):
    """Witnesses ``A = U |A| I`` and ``|A| = U^T A I``."""
    absA, U = polar_absolute(A)
    n = A.shape[1]
    return direct_witness(A, absA, U, np.eye(n)), direct_witness(absA, A, U.T, np.eye(n))


# ---------------------------------------------------------------------------
# Douglas range inclusion


@dataclass(frozen=True)
class DouglasEstimate:
    """Douglas constants ``C(N)`` across discretization levels."""

    levels: tuple
    constants: tuple
    classification: str
    prime_label: str = "A'"
    base_label: str = "A"

    def to_dict(self) -> dict:
        return {
            "prime": self.prime_label,
            "base": self.base_label,
            "levels": list(self.levels),
            "constants": list(self.constants),
            "classification": self.classification,
        }


def douglas_constant_at(A_prime: OperatorMatrix, A: OperatorMatrix, R=None) -> float:
    """Largest generalized singular value of the pencil ``((A')^T R, A^T)``.

    Equals ``||(A')^T R U_k diag(1/s_k)||_2`` where ``U_k, s_k`` are the left
    singular pairs of ``A`` above the cutoff ``1e-12 s_1``.
    """
    if A_prime.shape[0] != A.shape[0]:
        raise InvalidArgument(f"range dimensions differ: {A_prime.shape} vs {A.shape}")
    m = A.shape[0]
    R = np.eye(m) if R is None else np.asarray(R, dtype=float)
    if R.shape != (m, m):
        raise InvalidArgument(f"R must be {m}x{m}, got {R.shape}")
    U, s, _ = svd_factors(A)
    if s.size == 0 or s[0] == 0:
        raise InvalidArgument(f"{A.label}: degenerate pencil, A^T is numerically zero")
    k = int(np.sum(s > PINV_RTOL * s[0]))
    M = A_prime.entries.T @ (R @ (U[:, :k] / s[:k]))
    return _opnorm(M)


def classify_levels(values: Sequence[float]) -> str:
    """``bounded`` if max/min < 4; ``diverging`` if strictly increasing with last/first > 10."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)) or np.any(v <= 0):
        return "diverging" if np.any(np.isinf(v)) else "inconclusive"
    if v.max() / v.min() < 4:
        return "bounded"
    if np.all(np.diff(v) > 0) and v[-1] / v[0] > 10:
        return "diverging"
    return "inconclusive"


def _at_level(spec, N):
    if callable(spec) and not isinstance(spec, OperatorMatrix):
        return spec(N)
    if isinstance(spec, str):
        from .gallery import build_from_id

        return build_from_id(spec, N)
    return spec


def douglas_constant(
    A_prime,
    A,
    R=None,
    levels: Sequence[int] = (64, 128, 256),
) -> DouglasEstimate:
    """Douglas constant per level and its classification.

    Parameters
    ----------
    A_prime, A : str, callable or OperatorMatrix
        Gallery identifier or a builder ``N -> OperatorMatrix``. A fixed
        matrix is only sensible with a single level.
    R : array, callable or None
        Orthogonal alignment of the range spaces; identity when omitted.
    levels : sequence of int
        Increasing discretization sizes.
    """
    levels = [int(N) for N in levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidArgument(f"levels must be non-empty and increasing, got {levels}")
    consts = []
    lp = lb = None
    for N in levels:
        ap, a = _at_level(A_prime, N), _at_level(A, N)
        lp, lb = ap.label, a.label
        r = R(N) if callable(R) else R
        consts.append(douglas_constant_at(ap, a, r))
    return DouglasEstimate(tuple(levels), tuple(consts), classify_levels(consts), lp, lb)


# ---------------------------------------------------------------------------
# codimension lemma


@dataclass(frozen=True)
class CodimReport:
    c_lower: float
    c_hat: float
    c_bar: float
    holds: bool
    ratio_window: tuple
    window: tuple
    m: int
    trend: str

    def to_dict(self) -> dict:
        return {
            "c_lower": self.c_lower,
            "c_hat": self.c_hat,
            "c_bar": self.c_bar,
            "holds": self.holds,
            "ratio_window": list(self.ratio_window),
            "window": list(self.window),
            "m": self.m,
            "trend": self.trend,
        }


def codim_lemma_check(A: OperatorMatrix, m: int, window=None) -> CodimReport:
    """Check that removing ``m`` range directions keeps the decay order.

    ``Q`` annihilates the top ``m`` left singular vectors of ``A``. Over the
    window the report gives ``c_lower = min s_2n(A)/s_n(A)``,
    ``c_hat = max s_2n(A)/s_n(QA)``, ``c_bar = max s_n(QA)/s_n(A)`` and
    ``ratio_window = (min, max)`` of ``s_n(QA)/s_n(A)``. ``holds`` requires
    finite constants, ``c_lower > 0`` and a ratio ``s_2n/s_n`` that does
    not trend to zero across the window.
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m!r}")
    L = min(A.shape)
    if m >= L:
        raise InvalidArgument(f"m={m} must be below the dimension {L}")
    if window is None:
        window = (1, L // 2)
    a, b = int(window[0]), int(window[1])
    if not (1 <= a <= b) or 2 * b > L or b + m > L:
        raise InvalidArgument(f"window {window} out of range for length {L} and m={m}")
    U, s, _ = svd_factors(A)
    Um = U[:, :m]
    QA = A.entries - Um @ (Um.T @ A.entries)
    sq = singular_values(QA, A.label)
    n = np.arange(a, b + 1)
    sn, s2n, sqn = s[n - 1], s[2 * n - 1], sq[n - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        low = np.where(sn > 0, s2n / sn, 0.0)
        hat = np.where(sqn > 0, s2n / sqn, np.where(s2n > 0, np.inf, 0.0))
        bar = np.where(sn > 0, sqn / sn, np.inf)
    c_lower, c_hat, c_bar = float(low.min()), float(hat.max()), float(bar.max())
    trend = classify_trend(low)[0] if c_lower > 0 else "vanishing"
    finite = np.isfinite([c_hat, c_bar]).all()
    holds = bool(c_lower > 0 and finite and trend == "bounded")
    return CodimReport(
        c_lower=c_lower,
        c_hat=c_hat,
        c_bar=c_bar,
        holds=holds,
        ratio_window=(float(bar.min()), float(bar.max())),
        window=(a, b),
        m=int(m),
        trend=trend,
    )


# ---------------------------------------------------------------------------
# compactness guard


def compactness_guard(
    A_prime_kind: str,
    A_kind: str,
    verdict: Optional[OrderingVerdict] = None,
    prime_label: str = "A'",
    base_label: str = "A",
) -> Optional[OrderingVerdict]:
    """Apply the rule that a non-compact operator is never below a compact one.

    Returns None when both kinds agree. Otherwise the returned verdict
    records the excluded relation, and an incoming verdict placing the
    compact operator below the non-compact one is upgraded to strict.
    """
    if A_prime_kind == A_kind:
        return None
    if A_prime_kind == "compact_model":
        compact, noncompact = prime_label, base_label
    else:
        compact, noncompact = base_label, prime_label
    excluded = f"{noncompact} ⊀ {compact}"
    evidence = list(verdict.evidence) if verdict else []
    notes = list(verdict.notes) if verdict else []
    if "guard_compactness" not in evidence:
        evidence.append("guard_compactness")
    witness = verdict.witness if verdict else None
    if verdict is not None and verdict.orders_subject_below and verdict.subject == compact:
        return OrderingVerdict(
            Relation.STRICTLY_MORE_ILL_POSED, compact, noncompact, witness, evidence, [excluded], notes
        )
    if verdict is not None and verdict.orders_subject_below and verdict.subject == noncompact:
        notes.append(f"guard contradicts {verdict.relation.value}; relation left undecided")
    return OrderingVerdict(Relation.UNDECIDED, prime_label, base_label, witness, evidence, [excluded], notes)


# ---------------------------------------------------------------------------
# left-inverse ratio probe


@dataclass(frozen=True)
class LeftInverseReport:
    max_ratio: float
    attained_at: tuple
    per_operator: tuple
    increasing: bool
    infinite: bool

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "attained_at": list(self.attained_at),
            "per_operator": [list(p) for p in self.per_operator],
            "increasing": self.increasing,
            "infinite": self.infinite,
        }


def left_inverse_ratio_probe(
    T,
    A_family: Sequence[OperatorMatrix],
    window=None,
    precision: Optional[int] = None,
) -> LeftInverseReport:
    """Maximum of ``s_n(A) / s_n(T A)`` over a family and a window of indices.

    Parameters
    ----------
    T : OperatorMatrix or callable
        Fixed operator, or ``A -> OperatorMatrix`` building ``T`` at the
        level of each family member.
    A_family : sequence of OperatorMatrix
    window : pair of int, optional
        Index window; per member the default window of its spectrum.
    precision : int, optional
        Bits for the spectrum of ``T A`` (extended precision).

    Zero values of ``s_n(TA)`` yield an infinite ratio with ``infinite`` set.
    """
    if not A_family:
        raise InvalidArgument("A_family is empty")
    per, best, where, infinite = [], -1.0, None, False
    for A in A_family:
        t = T(A) if callable(T) and not isinstance(T, OperatorMatrix) else T
        TA = t @ A
        sA = compute_spectrum(A)
        sTA = compute_spectrum(TA, precision=precision)
        L = min(len(sA), len(sTA))
        a, b = window if window is not None else default_window(L)
        if not 1 <= a <= b <= L:
            raise InvalidArgument(f"window {(a, b)} outside [1, {L}]")
        num, den = sA.window((a, b)), sTA.window((a, b))
        with np.errstate(divide="ignore"):
            r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
        k = int(np.argmax(r))
        val = float(r[k])
        infinite |= not np.isfinite(val)
        per.append((A.label, A.grid.n_points, val, a + k))
        if val > best:
            best, where = val, (A.label, A.grid.n_points, a + k)
    vals = [p[2] for p in per]
    increasing = bool(all(y > x for x, y in zip(vals, vals[1:])))
    return LeftInverseReport(best, where, tuple(per), increasing, bool(infinite))
