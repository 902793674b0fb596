"""Regularization filters and the boundedness dichotomy probe."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import ceil
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .grid import OperatorMatrix
from .spectral import svd_factors

log = logging.getLogger(__name__)

KINDS = ("tikhonov", "spectral_cutoff", "landweber")
ALIASES = {"cutoff": "spectral_cutoff", "tsvd": "spectral_cutoff"}
DEFAULT_ALPHAS = tuple(10.0 ** -k for k in range(1, 9))


@dataclass(frozen=True)
class GeneratorFamily:
    """Filter ``g_alpha`` replacing ``1/lambda``.

    tikhonov ``1/(lambda + alpha)``; spectral_cutoff ``1/lambda`` for
    ``lambda >= alpha`` else 0; landweber ``sum_{j<k} omega (1 - omega lambda)^j``
    with ``k = ceil(1/alpha)``. ``omega=None`` means ``0.5 / s_1(A)^2``,
    fixed when the family is applied to an operator.
    """

    kind: str = "tikhonov"
    omega: Optional[float] = None

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise InvalidArgument(f"unknown generator family {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.omega is not None and not (np.isfinite(self.omega) and self.omega > 0):
            raise InvalidArgument(f"landweber step must be positive, got {self.omega!r}")

    def bind(self, s1: float) -> "GeneratorFamily":
        """Resolve the landweber step against ``s_1`` and check ``omega < 1/s_1^2``."""
        if self.kind != "landweber":
            return self
        omega = 0.5 / s1**2 if self.omega is None else self.omega
        if s1 > 0 and omega * s1**2 >= 1:
            raise InvalidArgument(f"landweber step {omega} must be below 1/s_1^2 = {1 / s1**2}")
        return GeneratorFamily("landweber", omega)

    def __call__(self, lam, alpha: float) -> np.ndarray:
        if not alpha > 0:
            raise InvalidArgument(f"alpha must be positive, got {alpha!r}")
        lam = np.asarray(lam, dtype=float)
        if self.kind == "tikhonov":
            return 1.0 / (lam + alpha)
        if self.kind == "spectral_cutoff":
            with np.errstate(divide="ignore"):
                return np.where(lam >= alpha, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
        if self.omega is None:
            raise InvalidArgument("landweber step unset; call bind(s1) first")
        k = ceil(1.0 / alpha)
        w = self.omega
        with np.errstate(divide="ignore", invalid="ignore"):
            # (1 - (1 - w lam)^k) / lam, stable for small w lam
            val = -np.expm1(k * np.log1p(-w * lam)) / np.where(lam > 0, lam, 1.0)
        return np.where(lam > 0, val, w * k)


@dataclass(frozen=True, eq=False)
class RegularizationProfile:
    alphas: np.ndarray
    norms: np.ndarray
    classification: str
    family: str
    errors: Optional[np.ndarray] = None
    prime_label: str = "A'"
    base_label: str = "A"

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "prime": self.prime_label,
            "base": self.base_label,
            "alphas": [float(a) for a in self.alphas],
            "norms": [float(v) for v in self.norms],
            "classification": self.classification,
        }
        if self.errors is not None:
            out["errors"] = [float(e) for e in self.errors]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("alpha,norm\n")
            for a, v in zip(self.alphas, self.norms):
                fh.write(f"{a:.17g},{v:.17g}\n")


def classify_profile(norms) -> str:
    """Growth-based reading of a norm trajectory ordered by decreasing alpha.

    ``uniformly_bounded`` if max / first < 4; ``unbounded`` if last / first
    >= 10 and the last step still increases; otherwise ``inconclusive``.
    """
    v = np.asarray(norms, dtype=float)
    first, top = v[0], v.max()
    if top == 0:
        return "uniformly_bounded"
    growth = np.inf if first == 0 else top / first
    if growth < 4:
        return "uniformly_bounded"
    last_growth = np.inf if first == 0 else v[-1] / first
    if last_growth >= 10 and v.size > 1 and v[-1] > v[-2]:
        return "unbounded"
    return "inconclusive"


def _check_alphas(alphas):
    a = np.asarray(DEFAULT_ALPHAS if alphas is None else alphas, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise InvalidArgument("alphas must be a non-empty 1-D grid")
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise InvalidArgument("alphas must be finite and positive")
    if np.any(np.diff(a) >= 0):
        raise InvalidArgument("alphas must be strictly decreasing")
    return a


def dichotomy_probe(
    A_prime: OperatorMatrix,
    A: OperatorMatrix,
    R=None,
    family: GeneratorFamily = GeneratorFamily(),
    alphas=None,
) -> RegularizationProfile:
    """Norms ``||g_alpha(A^T A) A^T R^T A'||_2`` along a decreasing alpha grid.

    With ``A = U diag(s) V^T`` the probed operator equals
    ``V diag(g(s^2) s) U^T R^T A'``, so the norm is that of
    ``diag(g(s^2) s) U^T R^T A'``.
    """
    if A_prime.shape[0] != A.shape[0]:
        raise InvalidArgument(f"range dimensions differ: {A_prime.shape} vs {A.shape}")
    a = _check_alphas(alphas)
    U, s, _ = svd_factors(A)
    fam = family.bind(float(s[0]) if s.size else 0.0)
    if s.size and a[0] > s[0] ** 2:
        log.info("alpha %.3g exceeds s_1(A)^2 = %.3g", a[0], s[0] ** 2)
    m = A.shape[0]
    RT = np.eye(m) if R is None else np.asarray(R, dtype=float).T
    B = U.T @ (RT @ A_prime.entries)
    lam = s**2
    norms = np.array([np.linalg.norm((fam(lam, al) * s)[:, None] * B, 2) for al in a])
    return RegularizationProfile(a, norms, classify_profile(norms), fam.kind, None, A_prime.label, A.label)


def pointwise_dichotomy(
    A: OperatorMatrix,
    y,
    family: GeneratorFamily = GeneratorFamily(),
    alphas=None,
    x0=None,
) -> RegularizationProfile:
    """Trajectory of ``||g_alpha(A^T A) A^T y||`` and, given ``x0``, the error to ``x0``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (A.shape[0],):
        raise InvalidArgument(f"y must have length {A.shape[0]}, got shape {y.shape}")
    a = _check_alphas(alphas)
    U, s, Vt = svd_factors(A)
    fam = family.bind(float(s[0]) if s.size else 0.0)
    c = U.T @ y
    lam = s**2
    coef = [fam(lam, al) * s * c for al in a]
    norms = np.array([np.linalg.norm(v) for v in coef])
    errors = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (A.shape[1],):
            raise InvalidArgument(f"x0 must have length {A.shape[1]}")
        errors = np.array([np.linalg.norm(Vt.T @ v - x0) for v in coef])
    return RegularizationProfile(a, norms, classify_profile(norms), fam.kind, errors, "y", A.label)
