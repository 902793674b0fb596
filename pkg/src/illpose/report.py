"""Report objects, deterministic JSON and plot-ready CSV output."""

from __future__ import annotations

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


def format_float(x: float) -> str:
    """17 significant digits; non-finite values become strings."""
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and every float written with 17 digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if hasattr(obj, "to_dict"):
        return dumps(obj.to_dict(), indent, _level)
    if hasattr(obj, "value"):
        return json.dumps(obj.value)
    return json.dumps(str(obj))


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def safe_name(label: str) -> str:
    """File-system friendly form of a gallery label, e.g. ``J^m:1`` -> ``J_m_1``."""
    return re.sub(r"[^A-Za-z0-9.\-]+", "_", label).strip("_")


@dataclass
class VerdictReport:
    """Outcome of one experiment.

    ``timings`` are written to a ``timings.json`` sidecar so ``report.json``
    stays byte-identical across reruns. ``data`` keeps in-memory results
    (spectra with fits, profiles, Douglas estimates) for :func:`render_plot_data`.
    """

    experiment: str
    inputs: dict
    verdict: Optional[object] = None
    fits: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    failure: Optional[dict] = None
    output_dir: Optional[str] = None
    data: dict = field(default_factory=lambda: {"spectra": [], "profiles": [], "douglas": []})
    schema_version: str = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return self.failure is None

    def rel(self, path) -> str:
        return os.path.relpath(path, self.output_dir) if self.output_dir else str(path)

    def add_artifact(self, path) -> str:
        r = self.rel(path)
        if r not in self.artifacts:
            self.artifacts.append(r)
        return r

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "inputs": self.inputs,
            "verdict": self.verdict.to_dict() if self.verdict is not None else None,
            "fits": [f.to_dict() if hasattr(f, "to_dict") else f for f in self.fits],
            "comparisons": [c.to_dict() if hasattr(c, "to_dict") else c for c in self.comparisons],
            "artifacts": sorted(self.artifacts),
            "results": self.results,
            "failure": self.failure,
            "timings": "timings.json",
        }

    def write(self) -> str:
        """Write ``report.json`` and ``timings.json`` into ``output_dir``."""
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, "report.json")
        write_json(os.path.join(self.output_dir, "timings.json"), self.timings)
        write_json(path, self.to_dict())
        return path


def write_spectrum_csv(spectrum, directory) -> str:
    path = os.path.join(directory, f"spectrum_{safe_name(spectrum.label)}_{spectrum.level}.csv")
    spectrum.to_csv(path)
    return path


def render_plot_data(report: VerdictReport, directory: Optional[str] = None) -> list:
    """Plot-ready CSVs for the spectra, profiles and Douglas sweeps of a report.

    Spectrum files have columns ``n, s_n, fit, in_window`` (the fitted
    model overlay, evaluated everywhere); profile files ``alpha, norm``
    with alpha decreasing; Douglas files ``N, C`` with N increasing.
    Returns the written paths; an empty report writes nothing.
    """
    directory = directory or os.path.join(report.output_dir, "plots")
    spectra, profiles, douglas = (report.data.get(k, []) for k in ("spectra", "profiles", "douglas"))
    if not (spectra or profiles or douglas):
        log.warning("report for %s has no spectra or profiles; nothing to plot", report.experiment)
        return []
    os.makedirs(directory, exist_ok=True)
    paths, index = [], []
    for spec, fit in spectra:
        n = np.arange(1, len(spec) + 1)
        path = os.path.join(directory, f"loglog_{safe_name(spec.label)}_{spec.level}.csv")
        with open(path, "w") as fh:
            fh.write("n,s_n,fit,in_window\n")
            with np.errstate(all="ignore"):
                overlay = fit.predict(n) if fit is not None else np.full(n.size, np.nan)
            lo, hi = fit.window if fit is not None else (0, -1)
            for k, s, f in zip(n, spec.values, overlay):
                fh.write(f"{k},{s:.17g},{f:.17g},{int(lo <= k <= hi)}\n")
        paths.append(path)
        if fit is not None:
            index.append({"file": os.path.basename(path), "model": fit.model, "residual": fit.residual})
    for k, prof in enumerate(profiles):
        path = os.path.join(directory, f"profile_{prof.family}_{safe_name(prof.prime_label)}__{safe_name(prof.base_label)}.csv")
        order = np.argsort(-prof.alphas, kind="stable")
        with open(path, "w") as fh:
            fh.write("alpha,norm\n")
            for a, v in zip(prof.alphas[order], prof.norms[order]):
                fh.write(f"{a:.17g},{v:.17g}\n")
        paths.append(path)
    for est in douglas:
        path = os.path.join(directory, f"douglas_{safe_name(est.prime_label)}__{safe_name(est.base_label)}.csv")
        order = np.argsort(est.levels, kind="stable")
        with open(path, "w") as fh:
            fh.write("N,C\n")
            for i in order:
                fh.write(f"{est.levels[i]},{est.constants[i]:.17g}\n")
        paths.append(path)
    if index:
        p = os.path.join(directory, "overlays.json")
        write_json(p, index)
        paths.append(p)
    for p in paths:
        report.add_artifact(p)
    return paths
