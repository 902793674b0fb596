"""Acceptance criteria, one pass/fail line each (see the terminal summary)."""

import csv
import json
import time

import numpy as np
import pytest

from illpose import GridSpec, OperatorMatrix, build_from_id, polar_absolute
from illpose.config import ExperimentConfig
from illpose.experiments import Session, run_experiment
from illpose.multipliers import multiplier_from_name as mult, quotient_verdict
from illpose.ordering import codim_lemma_check, douglas_constant
from illpose.regularization import GeneratorFamily, dichotomy_probe
from illpose.relations import Relation
from illpose.report import safe_name
from illpose.spectral import (
    SpectrumResult,
    compare_spectra,
    compute_spectrum,
    fit_decay,
    fit_power,
    verdict_from_comparison,
)

STRICT = Relation.STRICTLY_MORE_ILL_POSED


def load(path):
    with open(path) as fh:
        return json.load(fh)


def read_spectrum(path):
    with open(path) as fh:
        return np.array([float(r["s_n"]) for r in csv.DictReader(fh)])


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    t0 = time.perf_counter()
    rep = run_experiment(ExperimentConfig("paper-suite", output_dir=str(out)))
    return out, rep, time.perf_counter() - t0


# ---------------------------------------------------------------- 1


def test_criterion_1_integration_oracle(criterion):
    t0 = time.perf_counter()
    s = compute_spectrum(build_from_id("J^m:1", 512)).values[:64]
    elapsed = time.perf_counter() - t0
    # continuum oracle from the eigenproblem J*J u = s^2 u, u(1) = 0, u'(0) = 0
    n = np.arange(1, 65)
    oracle = 1 / ((n - 0.5) * np.pi)
    err = np.abs(s / oracle - 1)
    k = int(np.argmax(err))
    criterion(1, err.max() <= 0.01 and elapsed < 5,
              f"max rel err {err.max():.4%} at n={k + 1} (tol 1%), runtime {elapsed:.2f}s (< 5s)")


# ---------------------------------------------------------------- 2


def test_criterion_2_power_rates(criterion):
    thetas = []
    for m in (1, 2, 3):
        sp = compute_spectrum(build_from_id(f"J^m:{m}", 512))
        thetas.append(fit_power(sp, (16, 128)).theta)
    ok = all(abs(t - m) <= 0.15 for t, m in zip(thetas, (1, 2, 3)))
    criterion(2, ok, "theta(J^m) = " + ", ".join(f"{t:.3f}" for t in thetas) + " (each within m +- 0.15)")


def test_criterion_2_verdicts(criterion, suite):
    out, _, _ = suite
    wrong = []
    for k in (1, 2, 3):
        for m in (1, 2, 3):
            v = load(out / f"compare_E{k}_vs_J{m}" / "report.json")["verdict"]
            if k > m:
                good = v["relation"] == STRICT.value and v["subject"] == f"E^k:{k}:1"
            elif k < m:
                good = v["relation"] == STRICT.value and v["subject"] == f"J^m:{m}"
            else:
                good = v["relation"] == Relation.EQUIVALENT.value
            if not good:
                wrong.append(f"E{k}/J{m}: {v['subject']} {v['relation']} {v['reference']}")
    criterion(2, not wrong, "9 E^k vs J^m verdicts correct" if not wrong else "wrong: " + "; ".join(wrong))


# ---------------------------------------------------------------- 3


@pytest.fixture(scope="module")
def mixed_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("mixed")
    S = Session()
    t0 = time.perf_counter()
    sp = S.spectrum("J2", 64)
    fit = fit_decay(sp, (8, 256))
    r1 = run_experiment(ExperimentConfig("compare", ("J2", "E^k:1:2"), (64,), output_dir=str(out / "a")), S)
    r2 = run_experiment(ExperimentConfig("compare", ("E^k:2:2", "J2"), (64,), output_dir=str(out / "b")), S)
    return sp, fit, r1, r2, time.perf_counter() - t0


def test_criterion_3_polylog_fit(criterion, mixed_run):
    sp, fit, _, _, elapsed = mixed_run
    ok = sp.values.size == 4096 and fit.model == "polylog" and 0.85 <= fit.theta <= 1.15 and elapsed < 60
    criterion(3, ok, f"J2 at N=64 ({sp.values.size} values): selected {fit.model}, theta {fit.theta} "
                     f"(need polylog, theta in [0.85, 1.15]), runtime {elapsed:.1f}s (< 60s)")


def test_criterion_3_mixed_below_E1(criterion, mixed_run):
    v = mixed_run[2].verdict
    criterion(3, v.relation == STRICT and v.subject == "J2", f"J2 vs E^1: {v.subject} {v.relation.value} {v.reference}")


def test_criterion_3_E2_below_mixed(criterion, mixed_run):
    v = mixed_run[3].verdict
    criterion(3, v.relation == STRICT and v.subject == "E^k:2:2",
              f"E^2 vs J2: {v.subject} {v.relation.value} {v.reference} (need E^2 strictly more ill-posed)")


# ---------------------------------------------------------------- 4


def test_criterion_4_hausdorff_ratio(criterion, suite):
    d = suite[0] / "compare_hausdorff"
    sp = read_spectrum(d / "spectrum_BH_J_m_1_256.csv")
    sj = read_spectrum(d / "spectrum_J_m_1_256.csv")
    r = (sp / sj)[7:64]
    q = r.size // 4
    first, last = r[:q].mean(), r[-q:].mean()
    ok = bool(np.all(np.diff(r) < 0)) and last < first / 4
    criterion(4, ok, f"ratio strictly decreasing on [8,64]: {bool(np.all(np.diff(r) < 0))}, "
                     f"last/first quarter mean {last / first:.3g} (< 0.25)")


def test_criterion_4_left_inverse_probe(criterion, suite):
    probe = load(suite[0] / "hausdorff_probe" / "report.json")["results"]["probe"]
    per = [p[2] for p in probe["per_operator"]]
    ok = [p[1] for p in probe["per_operator"]] == [64, 128, 256] and all(b > a for a, b in zip(per, per[1:]))
    criterion(4, ok, "probe max ratio over N=64,128,256: " + ", ".join(f"{v:.3g}" for v in per))


# ---------------------------------------------------------------- 5


def _s1_prime(item_dir, prime, level):
    csv_path = item_dir / f"spectrum_{safe_name(prime)}_{level}.csv"
    if csv_path.exists():
        return read_spectrum(csv_path)[0]
    return float(np.linalg.norm(build_from_id(prime, level).entries, 2))


def test_criterion_5_witnesses(criterion, suite):
    out = suite[0]
    certs = sorted(out.rglob("certificate.json"))
    bad = []
    for path in certs:
        c = load(path)
        item = path.parent.parent
        inputs = load(item / "report.json")["inputs"]
        level = inputs["levels"][-1] if "levels" in inputs else inputs["level"]
        s1 = _s1_prime(item, c["prime"], level)
        if not (c["orthogonality_defect"] <= 1e-10 and c["residual"] <= 1e-8 * s1):
            bad.append(f"{item.name}/{path.parent.name}")
    criterion(5, certs and not bad,
              f"{len(certs)} suite witnesses: defect <= 1e-10 and residual <= 1e-8 s1(A')" + (f"; failing {bad}" if bad else ""))


def test_criterion_5_transitivity(criterion, suite):
    comp = load(suite[0] / "transitivity" / "report.json")["results"]["composition"]
    res, bound = comp["composed"]["residual"], comp["bound"]
    criterion(5, res <= bound * (1 + 1e-12) + 1e-15 and comp["composed"]["sound"],
              f"J^3 < J^2 < J composed residual {res:.3g} <= bound {bound:.3g}")


# ---------------------------------------------------------------- 6


def test_criterion_6_douglas(criterion):
    fwd = douglas_constant("J^m:2", "J^m:1", levels=(64, 128, 256))
    bwd = douglas_constant("J^m:1", "J^m:2", levels=(64, 128, 256))
    c, b = np.asarray(fwd.constants), np.asarray(bwd.constants)
    ok = c.max() / c.min() < 4 and b[-1] / b[0] > 10
    criterion(6, ok, f"C(J^2,J) spread x{c.max() / c.min():.3f} (< 4); C(J,J^2) growth x{b[-1] / b[0]:.1f} (> 10)")


# ---------------------------------------------------------------- 7


@pytest.mark.parametrize("family", ["tikhonov", "spectral_cutoff"])
def test_criterion_7_dichotomy(criterion, family):
    J1, J2 = build_from_id("J^m:1", 256), build_from_id("J^m:2", 256)
    g = GeneratorFamily(family)
    p = dichotomy_probe(J2, J1, None, g)
    q = dichotomy_probe(J1, J2, None, g)
    assert p.alphas[0] == 1e-1 and p.alphas[-1] == pytest.approx(1e-8)
    # the cutoff filter keeps no mode at the largest alpha, so growth may be inf
    with np.errstate(divide="ignore"):
        growth = q.norms[-1] / q.norms[0]
    ok = p.classification == "uniformly_bounded" and q.classification == "unbounded" and growth >= 10
    criterion(7, ok, f"{family}: (J^2,J) {p.classification}, (J,J^2) {q.classification} growth x{growth:.3g}")


# ---------------------------------------------------------------- 8


def test_criterion_8_multipliers(criterion):
    lin = quotient_verdict(mult("linear:3"), mult("linear:2"))
    exp = quotient_verdict(mult("exp-inv:1"), mult("power:1"))
    half = quotient_verdict(mult("inv-poly:2"), mult("inv-poly:1"), GridSpec(1000))
    ok = (
        lin.verdict.relation == Relation.EQUIVALENT and lin.sup_ratio == 3 / 2
        and exp.verdict.relation == STRICT and abs(exp.sup_ratio - np.exp(-1)) <= 1e-6
        and half.verdict.relation == STRICT and abs(half.sup_ratio - 1) <= 1e-6
    )
    criterion(8, ok, f"linear {lin.verdict.relation.value} sup {lin.sup_ratio!r}; "
                     f"exp {exp.verdict.relation.value} sup {exp.sup_ratio:.10f}; "
                     f"half-line {half.verdict.relation.value} sup {half.sup_ratio:.10f}")


# ---------------------------------------------------------------- 9


def test_criterion_9_codim(criterion):
    h = codim_lemma_check(OperatorMatrix(np.diag(1 / np.arange(1, 65.0)), GridSpec(64), "h"), 1)
    e = codim_lemma_check(OperatorMatrix(np.diag(2.0 ** -np.arange(1, 65.0)), GridSpec(64), "e"), 1, (1, 32))
    j = codim_lemma_check(build_from_id("J^m:1", 256), 2, (4, 32))
    lo, hi = j.ratio_window
    ok = h.c_lower == 0.5 and h.holds and not e.holds and j.holds and 0.25 <= lo <= hi <= 1
    criterion(9, ok, f"1/n: c_lower {h.c_lower!r} holds {h.holds}; 2^-n holds {e.holds}; "
                     f"J m=2 holds {j.holds} ratio [{lo:.3f}, {hi:.3f}]")


# ---------------------------------------------------------------- 10


def test_criterion_10_properties(criterion, tmp_path):
    rng = np.random.default_rng(20240601)
    polar = 0.0
    for n in range(1, 25):
        a = rng.standard_normal((n + n % 3, n))
        absA, U = polar_absolute(OperatorMatrix(a, GridSpec(n), "a"))
        s = np.linalg.svd(a, compute_uv=False)
        polar = max(polar, np.linalg.norm(a - U @ absA.entries, 2),
                    np.max(np.abs(np.sort(np.linalg.eigvalsh(absA.entries))[::-1] - s)))

    n = np.arange(1, 129, dtype=float)
    fit_err = 0.0
    for theta in np.linspace(0.5, 3, 11):
        f = fit_decay(SpectrumResult(n**-theta, 128, "p"), (4, 128))
        fit_err = max(fit_err, abs(f.theta - theta) if f.model == "power" else np.inf)
        vals = n**-theta * np.log(np.maximum(n, 3)) ** (0.5 * theta)
        vals[:2] = vals[2]
        g = fit_decay(SpectrumResult(vals, 128, "q"), (3, 128))
        fit_err = max(fit_err, abs(g.theta - theta) if g.model == "polylog" else np.inf)

    anti = refl = True
    pair = {"vanishing": "diverging", "diverging": "vanishing", "bounded": "bounded"}
    for _ in range(50):
        a = SpectrumResult(np.sort(rng.uniform(1e-3, 1, 32))[::-1], 32, "a")
        b = SpectrumResult(np.sort(rng.uniform(1e-3, 1, 32) * rng.uniform(0, 1))[::-1] + 1e-9, 32, "b")
        f, g = compare_spectra(a, b, (1, 32)), compare_spectra(b, a, (1, 32))
        if f.ratio_trend in pair:
            anti &= g.ratio_trend == pair[f.ratio_trend]
        c = compare_spectra(a, a, (1, 32))
        refl &= verdict_from_comparison(c, c).relation == Relation.EQUIVALENT

    cfg = ExperimentConfig("compare", ("E^k:2:1", "J^m:1"), (128,))
    for name in ("x", "y"):
        run_experiment(cfg.with_overrides(output_dir=str(tmp_path / name)))
    files = sorted(str(p.relative_to(tmp_path / "x")) for p in (tmp_path / "x").rglob("*")
                   if p.is_file() and p.name != "timings.json")
    same = files and all((tmp_path / "x" / f).read_bytes() == (tmp_path / "y" / f).read_bytes() for f in files)

    ok = polar <= 1e-10 and fit_err <= 1e-6 and anti and refl and same
    criterion(10, ok, f"polar err {polar:.2g} (<= 1e-10), fit round-trip err {fit_err:.2g} (<= 1e-6), "
                      f"antisymmetry {anti}, reflexivity {refl}, {len(files)} files byte-identical {bool(same)}")


def test_suite_runtime_budget(suite):
    out, rep, elapsed = suite
    assert rep.ok
    timings = load(out / "timings.json")
    assert max(timings.values()) < 60 and elapsed < 600
