"""Experiment pipelines behind the command line."""

from __future__ import annotations

import logging
import os
import time
from contextlib import contextmanager
from dataclasses import replace

from .config import ExperimentConfig, validate
from .errors import InvalidArgument, NumericalFailure
from .gallery import build_from_id, build_hausdorff
from .grid import GridSpec
from .multipliers import build_selfadjoint_pair, multiplier_from_name, quotient_verdict
from .ordering import (
    EXACT_NORM_MAX_DIM,
    build_witness,
    codim_lemma_check,
    compactness_guard,
    compose_witnesses,
    direct_witness,
    douglas_constant,
    left_inverse_ratio_probe,
)
from .regularization import GeneratorFamily, dichotomy_probe
from .relations import OrderingVerdict, Relation
from .report import VerdictReport, render_plot_data, safe_name, write_spectrum_csv
from .spectral import compare_operators, compute_spectrum, default_window, fit_decay

log = logging.getLogger(__name__)

HAUSDORFF_BITS = 320


class Session:
    """Per-run caches of operators and spectra, shared by suite items."""

    def __init__(self):
        self._ops = {}
        self._spectra = {}

    def op(self, ident: str, N: int):
        key = (ident, N)
        if key not in self._ops:
            self._ops[key] = build_from_id(ident, N)
        return self._ops[key]

    def spectrum(self, ident: str, N: int, precision=None):
        A = self.op(ident, N)
        if A.exact is None:
            precision = None
        key = (ident, N, precision)
        if key not in self._spectra:
            self._spectra[key] = compute_spectrum(A, precision=precision)
        return self._spectra[key]


class _Stop(Exception):
    pass


@contextmanager
def _stage(report: VerdictReport, name: str):
    t0 = time.perf_counter()
    try:
        yield
    except NumericalFailure as exc:
        report.failure = {"stage": name, "message": str(exc)}
        raise _Stop from exc
    finally:
        report.timings[name] = round(time.perf_counter() - t0, 6)


def _fit_or_none(spec, window, notes):
    try:
        return fit_decay(spec, window or default_window(len(spec)))
    except InvalidArgument as exc:
        notes.append(f"no fit for {spec.label} at N={spec.level}: {exc}")
        return None


def _export_witness(report, witness, directory):
    name = f"witness_{safe_name(witness.prime_label)}__{safe_name(witness.base_label)}"
    big = max(witness.R.shape) > EXACT_NORM_MAX_DIM
    paths = witness.export(os.path.join(directory, name), write_matrices=not big)
    for p in paths:
        report.add_artifact(p)
    if big:
        report.results.setdefault("notes", []).append(f"{name}: R and S not written (dimension {witness.R.shape[0]})")
    return paths


# ---------------------------------------------------------------------------
# single experiments


def _spectrum(cfg, report, S):
    notes = report.results.setdefault("notes", [])
    rows = []
    for ident in cfg.operators:
        for N in cfg.levels:
            with _stage(report, f"spectrum:{ident}:{N}"):
                sp = S.spectrum(ident, N, cfg.precision)
            fit = _fit_or_none(sp, cfg.window, notes)
            if fit is not None:
                report.fits.append(fit)
            path = write_spectrum_csv(sp, report.output_dir)
            report.add_artifact(path)
            report.data["spectra"].append((sp, fit))
            rows.append({"label": sp.label, "level": N, "s1": float(sp.values[0]), "noise_floor": sp.noise_floor})
    report.results["spectra"] = rows


def _compare(cfg, report, S):
    ip, ib = cfg.operators
    notes = report.results.setdefault("notes", [])
    verdict = None
    for N in cfg.levels:
        with _stage(report, f"spectra:{N}"):
            sp, sb = S.spectrum(ip, N, cfg.precision), S.spectrum(ib, N, cfg.precision)
        for spec in (sp, sb):
            report.add_artifact(write_spectrum_csv(spec, report.output_dir))
            fit = _fit_or_none(spec, cfg.window, notes)
            if fit is not None:
                report.fits.append(fit)
            report.data["spectra"].append((spec, fit))
        window = cfg.window or default_window(min(len(sp), len(sb)))
        verdict, fwd, bwd = compare_operators(sp, sb, window)
        report.comparisons += [fwd, bwd]
    Ap, Ab = S.op(ip, cfg.levels[-1]), S.op(ib, cfg.levels[-1])
    guarded = compactness_guard(Ap.kind, Ab.kind, verdict, Ap.label, Ab.label)
    if guarded is not None:
        verdict = guarded
    if verdict.orders_subject_below:
        subj, ref = (Ap, Ab) if verdict.subject == Ap.label else (Ab, Ap)
        with _stage(report, "witness"):
            try:
                verdict.witness = build_witness(subj, ref, cfg.rank)
            except InvalidArgument as exc:
                notes.append(f"no witness: {exc}")
        if verdict.witness is not None:
            _export_witness(report, verdict.witness, report.output_dir)
    report.verdict = verdict


def _factorize(cfg, report, S):
    ip, ib = cfg.operators
    certs = []
    for N in cfg.levels:
        with _stage(report, f"witness:{N}"):
            w = build_witness(S.op(ip, N), S.op(ib, N), cfg.rank)
        sub = os.path.join(report.output_dir, f"N{N}") if len(cfg.levels) > 1 else report.output_dir
        _export_witness(report, w, sub)
        certs.append({"level": N, **w.certificate()})
    report.results["witnesses"] = certs


def _douglas(cfg, report, S):
    ip, ib = cfg.operators
    with _stage(report, "douglas"):
        est = douglas_constant(lambda N: S.op(ip, N), lambda N: S.op(ib, N), None, cfg.levels)
    report.results["douglas"] = est.to_dict()
    report.data["douglas"].append(est)
    path = os.path.join(report.output_dir, "douglas.csv")
    with open(path, "w") as fh:
        fh.write("N,C\n")
        for N, c in zip(est.levels, est.constants):
            fh.write(f"{N},{c:.17g}\n")
    report.add_artifact(path)
    if est.classification == "bounded":
        report.verdict = OrderingVerdict(Relation.MORE_ILL_POSED, est.prime_label, est.base_label, evidence=["douglas"])
    else:
        report.verdict = OrderingVerdict(
            Relation.UNDECIDED,
            est.prime_label,
            est.base_label,
            evidence=["douglas"],
            notes=[f"Douglas constant {est.classification} with R = I; other orthogonal R not searched"],
        )


def _dichotomy(cfg, report, S):
    ip, ib = cfg.operators
    N = cfg.levels[-1]
    family = GeneratorFamily(cfg.family)
    with _stage(report, f"dichotomy:{N}"):
        prof = dichotomy_probe(S.op(ip, N), S.op(ib, N), None, family, cfg.alphas)
    report.results["profile"] = prof.to_dict()
    report.data["profiles"].append(prof)
    path = os.path.join(report.output_dir, f"profile_{prof.family}.csv")
    prof.to_csv(path)
    report.add_artifact(path)


def _multiplier(cfg, report, S):
    fp, f = (multiplier_from_name(op[2:]) for op in cfg.operators)
    N = cfg.levels[-1]
    with _stage(report, "quotient"):
        qr = quotient_verdict(fp, f, GridSpec(N), cfg.refinement)
    verdict = qr.verdict
    if verdict.orders_subject_below:
        num, den = (fp, f) if verdict.subject == f"M:{fp.name}" else (f, fp)
        with _stage(report, "pair"):
            Hp, H, Sq, R = build_selfadjoint_pair(num, den, den.default_grid(N))
            verdict.witness = direct_witness(Hp, H, R, Sq.entries)
        _export_witness(report, verdict.witness, report.output_dir)
    report.results["quotient"] = {k: v for k, v in qr.to_dict().items() if k != "verdict"}
    report.verdict = verdict


def _codim(cfg, report, S):
    (ident,) = cfg.operators
    rows = []
    for N in cfg.levels:
        with _stage(report, f"codim:{N}"):
            rows.append({"level": N, **codim_lemma_check(S.op(ident, N), cfg.m, cfg.window).to_dict()})
    report.results["codim"] = rows


# ---------------------------------------------------------------------------
# suite


def _hausdorff_probe(out_dir, levels=(64, 128, 256)):
    report = VerdictReport("left-inverse-probe", {"T": "BH", "family": "J^m:1", "levels": list(levels)}, output_dir=out_dir)
    os.makedirs(out_dir, exist_ok=True)

    def T(A):
        n = A.grid.n_points
        return build_hausdorff(n, GridSpec(n, "unit_interval", "midpoint_collocation"))

    family = [build_from_id("J^m:1", N) for N in levels]
    try:
        with _stage(report, "probe"):
            res = left_inverse_ratio_probe(T, family, precision=HAUSDORFF_BITS)
        report.results["probe"] = res.to_dict()
    except _Stop:
        pass
    report.write()
    return report


def _transitivity(out_dir, N=256):
    report = VerdictReport("transitivity", {"chain": ["J^m:3", "J^m:2", "J^m:1"], "level": N}, output_dir=out_dir)
    os.makedirs(out_dir, exist_ok=True)
    try:
        with _stage(report, "witnesses"):
            J1, J2_, J3 = (build_from_id(f"J^m:{m}", N) for m in (1, 2, 3))
            w1, w2 = build_witness(J3, J2_), build_witness(J2_, J1)
            wc, bound = compose_witnesses(w1, w2, J3, J1)
        for w in (w1, w2, wc):
            _export_witness(report, w, out_dir)
        report.results["composition"] = {
            "outer": w1.certificate(),
            "inner": w2.certificate(),
            "composed": wc.certificate(),
            "bound": bound,
            "within_bound": bool(wc.residual <= bound * (1 + 1e-12) + 1e-15),
        }
    except _Stop:
        pass
    report.write()
    return report


def suite_items():
    """The fixed reproduction set as ``(name, config)``; ``None`` marks special items."""
    C = ExperimentConfig
    items = [
        ("spectrum_Jm", C("spectrum", ("J^m:1", "J^m:2", "J^m:3"), (512,), (16, 128))),
        ("compare_J2_vs_J1", C("compare", ("J^m:2", "J^m:1"), (512,))),
        ("compare_J3_vs_J1", C("compare", ("J^m:3", "J^m:1"), (512,))),
    ]
    for k in (1, 2, 3):
        for m in (1, 2, 3):
            items.append((f"compare_E{k}_vs_J{m}", C("compare", (f"E^k:{k}:1", f"J^m:{m}"), (512,))))
    items += [
        ("spectrum_mixed", C("spectrum", ("J2",), (64,), (8, 256))),
        ("compare_mixed_vs_E1", C("compare", ("J2", "E^k:1:2"), (64,))),
        ("compare_E2_vs_mixed", C("compare", ("E^k:2:2", "J2"), (64,))),
        ("compare_hausdorff", C("compare", ("BH*J^m:1", "J^m:1"), (256,), (8, 64), precision=HAUSDORFF_BITS)),
        ("hausdorff_probe", None),
        ("multiplier_linear", C("multiplier", ("M:linear:3", "M:linear:2"), (256,))),
        ("multiplier_exp", C("multiplier", ("M:exp-inv:1", "M:power:1"), (256,))),
        ("multiplier_half_line", C("multiplier", ("M:inv-poly:2", "M:inv-poly:1"), (1000,))),
        ("douglas_J2_J1", C("douglas", ("J^m:2", "J^m:1"), (64, 128, 256))),
        ("douglas_J1_J2", C("douglas", ("J^m:1", "J^m:2"), (64, 128, 256))),
    ]
    for fam in ("tikhonov", "cutoff"):
        items.append((f"dichotomy_{fam}_J2_J1", C("dichotomy", ("J^m:2", "J^m:1"), (256,), family=fam)))
        items.append((f"dichotomy_{fam}_J1_J2", C("dichotomy", ("J^m:1", "J^m:2"), (256,), family=fam)))
    items += [
        ("codim_J1", C("codim", ("J^m:1",), (256,), (4, 32), m=2)),
        ("transitivity", None),
    ]
    return items


def _paper_suite(cfg, report, S):
    rows = []
    for name, sub in suite_items():
        sub_dir = os.path.join(report.output_dir, name)
        t0 = time.perf_counter()
        if name == "hausdorff_probe":
            r = _hausdorff_probe(sub_dir)
        elif name == "transitivity":
            r = _transitivity(sub_dir)
        else:
            r = run_experiment(replace(sub, output_dir=sub_dir), session=S)
        report.timings[name] = round(time.perf_counter() - t0, 6)
        row = {"name": name, "experiment": r.experiment, "ok": r.ok, "dir": name}
        if r.verdict is not None:
            row["verdict"] = {"relation": r.verdict.relation.value, "subject": r.verdict.subject, "reference": r.verdict.reference}
        rows.append(row)
        report.add_artifact(os.path.join(sub_dir, "report.json"))
        if not r.ok and report.failure is None:
            report.failure = {"stage": name, "message": r.failure["message"]}
    report.results["items"] = rows


PIPELINES = {
    "spectrum": _spectrum,
    "compare": _compare,
    "factorize": _factorize,
    "douglas": _douglas,
    "dichotomy": _dichotomy,
    "multiplier": _multiplier,
    "codim": _codim,
    "paper-suite": _paper_suite,
}


def run_experiment(config: ExperimentConfig, session: Session | None = None) -> VerdictReport:
    """Run one experiment, write its artifacts and ``report.json``.

    A numerical failure stops the pipeline; the partial report records the
    failing stage in ``failure``.
    """
    cfg = validate(config)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    report = VerdictReport(cfg.experiment, cfg.to_dict(), output_dir=out)
    seed = os.environ.get("ILLPOSE_SEED")
    if seed is not None:
        report.inputs["seed"] = seed
    try:
        PIPELINES[cfg.experiment](cfg, report, session or Session())
    except _Stop:
        log.error("numerical failure in stage %s", report.failure["stage"])
    if report.data["spectra"] or report.data["profiles"] or report.data["douglas"]:
        render_plot_data(report)
    report.write()
    return report
