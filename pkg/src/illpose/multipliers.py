"""Non-compact multiplication operators compared through their quotient."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidArgument, NumericalFailure, PreconditionViolation
from .grid import GridSpec, OperatorMatrix
from .relations import OrderingVerdict, Relation

log = logging.getLogger(__name__)

DOMAIN_KINDS = ("finite_measure_unit_interval", "infinite_measure_half_line")
MONOTONICITY = ("increasing_from_zero", "decreasing_to_zero", "none")
DEFAULT_DYADIC_LEVELS = (4, 6, 8)
DEFAULT_TRUNCATIONS = (10.0, 100.0, 1000.0)
DEFAULT_T = 100.0
STABLE_BELOW = 2.0
GROWTH_AT_LEAST = 10.0


@dataclass(frozen=True)
class MultiplierSpec:
    """Named multiplier ``f >= 0`` with its domain and declared monotonicity.

    ``monomial = (c, kappa)`` marks ``f(t) = c t^kappa``; quotients of two
    monomials are then evaluated in closed form.
    """

    name: str
    func: Callable = field(repr=False, compare=False)
    domain_kind: str = "finite_measure_unit_interval"
    monotonicity: str = "none"
    monomial: Optional[tuple] = None

    def __post_init__(self):
        if self.domain_kind not in DOMAIN_KINDS:
            raise InvalidArgument(f"unknown domain kind {self.domain_kind!r}")
        if self.monotonicity not in MONOTONICITY:
            raise InvalidArgument(f"unknown monotonicity {self.monotonicity!r}")

    def eval(self, t) -> np.ndarray:
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def default_grid(self, N: int, T: float = DEFAULT_T) -> GridSpec:
        if self.domain_kind == "infinite_measure_half_line":
            return GridSpec(N, "half_line_truncated", "midpoint_collocation", T=T)
        return GridSpec(N)

    def check_monotonicity(self, nodes) -> None:
        """Raise if the declared monotonicity fails on sorted ``nodes``."""
        if self.monotonicity == "none":
            return
        v = self.eval(np.sort(nodes))
        d = np.diff(v)
        ok = np.all(d >= 0) if self.monotonicity == "increasing_from_zero" else np.all(d <= 0)
        if not ok:
            raise InvalidArgument(f"multiplier {self.name} is not {self.monotonicity} on the grid")


def _float_param(name, text):
    try:
        v = float(text)
    except ValueError:
        raise InvalidArgument(f"bad parameter {text!r} for multiplier {name}") from None
    if not np.isfinite(v) or v <= 0:
        raise InvalidArgument(f"multiplier {name} needs a positive parameter, got {text!r}")
    return v


def multiplier_from_name(name: str) -> MultiplierSpec:
    """Registered multipliers: ``linear:c``, ``power:kappa``, ``exp-inv:kappa``, ``inv-poly:p``.

    ``linear:c`` is ``c t`` and ``power:kappa`` is ``t^kappa`` on (0, 1];
    ``exp-inv:kappa`` is ``exp(-1/t^kappa)`` on (0, 1]; ``inv-poly:p`` is
    ``(1 + t)^(-p)`` on the half line.
    """
    kind, _, arg = name.strip().partition(":")
    if kind == "linear":
        c = _float_param(kind, arg)
        return MultiplierSpec(name, lambda t: c * t, "finite_measure_unit_interval", "increasing_from_zero", (c, 1.0))
    if kind == "power":
        k = _float_param(kind, arg)
        return MultiplierSpec(name, lambda t: t**k, "finite_measure_unit_interval", "increasing_from_zero", (1.0, k))
    if kind == "exp-inv":
        k = _float_param(kind, arg)
        return MultiplierSpec(name, lambda t: np.exp(-1.0 / t**k), "finite_measure_unit_interval", "increasing_from_zero")
    if kind == "inv-poly":
        p = _float_param(kind, arg)
        return MultiplierSpec(name, lambda t: (1.0 + t) ** (-p), "infinite_measure_half_line", "decreasing_to_zero")
    raise InvalidArgument(
        f"unknown multiplier {name!r}; valid forms: linear:c, power:kappa, exp-inv:kappa, inv-poly:p"
    )


def quotient(f_num: MultiplierSpec, f_den: MultiplierSpec, t) -> np.ndarray:
    """``f_num(t) / f_den(t)``; zero denominators raise."""
    t = np.asarray(t, dtype=float)
    if f_num.monomial and f_den.monomial:
        (c1, k1), (c2, k2) = f_num.monomial, f_den.monomial
        if np.any(t == 0):
            raise InvalidArgument("grid hits the essential zero t = 0")
        return (c1 / c2) * (t ** (k1 - k2) if k1 != k2 else np.ones_like(t))
    with np.errstate(under="ignore", over="ignore"):
        den = f_den.eval(t)
        num = f_num.eval(t)
    if np.any(den == 0):
        k = int(np.argmax(den == 0))
        raise InvalidArgument(f"multiplier {f_den.name} vanishes at node t={t[k]:.6g}; refine away from the zero")
    return num / den


@dataclass(frozen=True)
class QuotientReport:
    sup_ratio: float
    attained_near: float
    both_directions: tuple
    verdict: OrderingVerdict
    levels: tuple
    forward_sups: tuple
    backward_sups: tuple
    forward_class: str
    backward_class: str

    def to_dict(self) -> dict:
        return {
            "sup_ratio": self.sup_ratio,
            "attained_near": self.attained_near,
            "both_directions": list(self.both_directions),
            "levels": list(self.levels),
            "forward_sups": list(self.forward_sups),
            "backward_sups": list(self.backward_sups),
            "forward_class": self.forward_class,
            "backward_class": self.backward_class,
            "verdict": self.verdict.to_dict(),
        }


def refinement_nodes(spec: MultiplierSpec, grid: GridSpec, level) -> np.ndarray:
    """Nodes of one refinement level.

    Unit interval: midpoints of ``2^level`` uniform cells plus the dyadic
    points ``2^0 .. 2^-level``, so deeper levels reach closer to ``t = 0``
    and every level contains ``t = 1``. Half line: ``grid.n_points``
    equispaced nodes on ``[0, level]``.
    """
    if spec.domain_kind == "infinite_measure_half_line":
        return np.linspace(0.0, float(level), grid.n_points)
    level = int(level)
    if level < 0:
        raise InvalidArgument(f"dyadic refinement level must be >= 0, got {level}")
    cells = 2**level
    dyadic = 2.0 ** -np.arange(0, level + 1)
    return np.unique(np.concatenate([(np.arange(cells) + 0.5) / cells, dyadic]))


def classify_sups(sups) -> str:
    v = np.asarray(sups, dtype=float)
    if v.size < 2:
        return "inconclusive"
    if not np.isfinite(v[-1]) or v[-1] / v[0] >= GROWTH_AT_LEAST:
        return "unbounded"
    if v[-1] / v[-2] < STABLE_BELOW:
        return "bounded"
    return "inconclusive"


def quotient_verdict(
    f_prime: MultiplierSpec,
    f: MultiplierSpec,
    grid: Optional[GridSpec] = None,
    refinement_levels: Optional[Sequence] = None,
) -> QuotientReport:
    """Decide ``H' = M_{f'}`` against ``H = M_f`` from the sup of both quotients.

    Parameters
    ----------
    f_prime, f : MultiplierSpec
        Multipliers on the same kind of domain.
    grid : GridSpec, optional
        Supplies the node count on the half line (default 64 points); on
        the unit interval the refinement levels fix the nodes.
    refinement_levels : sequence, optional
        Dyadic depths for the unit interval (default 4, 6, 8) or truncation
        endpoints ``T`` for the half line (default 10, 100, 1000).
    """
    if f_prime.domain_kind != f.domain_kind:
        raise InvalidArgument(f"domain kinds differ: {f_prime.domain_kind} vs {f.domain_kind}")
    grid = grid or GridSpec(64)
    half_line = f.domain_kind == "infinite_measure_half_line"
    levels = tuple(refinement_levels or (DEFAULT_TRUNCATIONS if half_line else DEFAULT_DYADIC_LEVELS))
    fwd, bwd, where = [], [], None
    for lev in levels:
        t = refinement_nodes(f, grid, lev)
        for spec in (f_prime, f):
            with np.errstate(under="ignore"):
                vals = spec.eval(t)
            if np.any(vals == 0) or not np.all(np.isfinite(vals)):
                raise InvalidArgument(f"multiplier {spec.name} is zero or non-finite on level {lev}; grid must avoid exact zeros")
            spec.check_monotonicity(t)
        q = quotient(f_prime, f, t)
        k = int(np.argmax(q))
        fwd.append(float(q[k]))
        where = float(t[k])
        bwd.append(float(np.max(quotient(f, f_prime, t))))
    cf, cb = classify_sups(fwd), classify_sups(bwd)
    evidence = [f"quotient:{f_prime.name}/{f.name}:{cf}", f"quotient:{f.name}/{f_prime.name}:{cb}"]
    hp, h = f"M:{f_prime.name}", f"M:{f.name}"
    if cf == "bounded" and cb == "bounded":
        rel, subj, ref = Relation.EQUIVALENT, hp, h
    elif cf == "bounded" and cb == "unbounded":
        rel, subj, ref = Relation.STRICTLY_MORE_ILL_POSED, hp, h
    elif cf == "unbounded" and cb == "bounded":
        rel, subj, ref = Relation.STRICTLY_MORE_ILL_POSED, h, hp
    else:
        rel, subj, ref = Relation.UNDECIDED, hp, h
    verdict = OrderingVerdict(rel, subj, ref, evidence=["quotient"], notes=evidence)
    return QuotientReport(
        sup_ratio=fwd[-1],
        attained_near=where,
        both_directions=(fwd[-1], bwd[-1]),
        verdict=verdict,
        levels=levels,
        forward_sups=tuple(fwd),
        backward_sups=tuple(bwd),
        forward_class=cf,
        backward_class=cb,
    )


def build_selfadjoint_pair(f_prime: MultiplierSpec, f: MultiplierSpec, grid: GridSpec):
    """Diagonal factorization ``H' = R H S`` with ``R = I`` and ``S = diag(f'/f)``.

    Returns ``(H_prime, H, S, R)``. Raises PreconditionViolation when the
    quotient is not finite on the grid.
    """
    from .gallery import build_multiplication

    H = build_multiplication(f, grid)
    Hp = build_multiplication(f_prime, grid)
    t = grid.nodes()
    with np.errstate(divide="ignore", invalid="ignore"):
        try:
            q = quotient(f_prime, f, t)
        except InvalidArgument as exc:
            raise PreconditionViolation(f"quotient {f_prime.name}/{f.name} unbounded on the grid: {exc}") from None
    if not np.all(np.isfinite(q)):
        raise PreconditionViolation(f"quotient {f_prime.name}/{f.name} is not finite on the grid")
    S = OperatorMatrix(np.diag(q), grid, f"S:{f_prime.name}/{f.name}", kind="noncompact_model", structure="diagonal")
    R = np.eye(grid.n_points)
    resid = float(np.max(np.abs(Hp.entries - R @ H.entries @ S.entries), initial=0.0))
    scale = float(np.max(np.abs(Hp.entries), initial=0.0))
    if resid > 1e-14 * max(scale, 1.0):
        raise NumericalFailure(f"diagonal factorization residual {resid:.3g} too large", Hp.label)
    return Hp, H, S, R
