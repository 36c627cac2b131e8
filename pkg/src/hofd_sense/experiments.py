"""Seeded replication harness for the benchmark experiments.

Each replication draws its own generator from ``SeedSequence([seed, r])``,
so replications can run in any order or in parallel and still give the same
numbers. Records are always written in replication order.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import GaussianMixtureSpec, PairStructure, centered_mixture, check_c2_gaussian, sample_mixture
from .exceptions import SpecError
from .hofd import GaussSeidelConfig, SmootherCache, ipdv_decompose
from .indices import dvp_sobol, generalized_indices
from .oracle import bilinear_model_indices, ishigami, ishigami_indices, linear4_model_indices

log = logging.getLogger(__name__)

EXPERIMENTS = ("bilinear", "bilinear_indep", "linear4", "ishigami")
METHODS = ("generalized", "dvp", "oracle")
RECORD_FIELDS = ("experiment", "setting", "replication", "index", "estimate", "method", "converged")
SUMMARY_FIELDS = (
    "experiment", "setting", "index", "method", "count", "mean", "std", "min", "q1", "median", "q3", "max",
)
BOXPLOT_FIELDS = ("experiment", "setting", "index", "method", "replication", "estimate")
MAX_NONCONVERGED = 0.2

LINEAR4_COEFFS = (5.0, 4.0, 3.0, 2.0)


def default_specs(experiment: str) -> tuple:
    """Input laws of an experiment: one mixture per independent draw."""
    if experiment == "bilinear":
        return (centered_mixture(0.2, [[0.5, 0.4], [0.4, 0.5]]),)
    if experiment == "bilinear_indep":
        return (centered_mixture(0.2, [[0.5, 0.0], [0.0, 0.5]]),)
    if experiment == "linear4":
        # laws of (X1, X3) and (X2, X4)
        return (
            centered_mixture(0.2, [[0.5, 0.4], [0.4, 0.5]]),
            centered_mixture(0.2, [[0.7, 0.37], [0.37, 0.3]]),
        )
    if experiment == "ishigami":
        return (centered_mixture(0.2, [[0.15, 0.3, 0.0], [0.3, 0.85, 0.0], [0.0, 0.0, 0.75]]),)
    raise SpecError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1000
    reps: int = 50
    seed: int = 0
    ishigami_a_grid: tuple = (3.0, 5.0, 7.0, 9.0)
    ishigami_b: float = 0.1
    specs: tuple = ()
    output_dir: str = "results"
    workers: int = 1
    epsilon: float | None = None
    max_iter: int = 100

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if int(self.n) < 100:
            raise SpecError(f"n must be at least 100, got {self.n}")
        if int(self.reps) < 1:
            raise SpecError(f"reps must be at least 1, got {self.reps}")
        if int(self.workers) < 1:
            raise SpecError("workers must be at least 1")
        self.n, self.reps, self.seed, self.workers = int(self.n), int(self.reps), int(self.seed), int(self.workers)
        self.ishigami_a_grid = tuple(float(a) for a in self.ishigami_a_grid)
        if self.experiment == "ishigami" and not self.ishigami_a_grid:
            raise SpecError("the a-grid is empty")
        specs = tuple(s if isinstance(s, GaussianMixtureSpec) else GaussianMixtureSpec.from_dict(s) for s in self.specs)
        expected = default_specs(self.experiment)
        if not specs:
            specs = expected
        if [s.dim for s in specs] != [s.dim for s in expected]:
            raise SpecError(f"{self.experiment} needs mixtures of dimensions {[s.dim for s in expected]}")
        self.specs = specs

    @classmethod
    def from_json(cls, text: str, **overrides) -> "ExperimentConfig":
        record = json.loads(text)
        record.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**record)

    @property
    def settings(self) -> tuple:
        if self.experiment == "ishigami":
            return tuple(f"a={a!r}" for a in self.ishigami_a_grid)
        return ("default",)

    @property
    def pairs(self) -> PairStructure:
        if self.experiment == "linear4":
            return PairStructure(((0, 2), (1, 3)))
        if self.experiment == "ishigami":
            return PairStructure(((0, 1), (2,)))
        return PairStructure(((0, 1),))

    @property
    def gs_config(self) -> GaussSeidelConfig:
        return GaussSeidelConfig(epsilon=self.epsilon, max_iter=self.max_iter)

    def model(self, setting: str):
        if self.experiment in ("bilinear", "bilinear_indep"):
            return lambda x: x[:, 0] + x[:, 1] + x[:, 0] * x[:, 1]
        if self.experiment == "linear4":
            return lambda x: x @ np.asarray(LINEAR4_COEFFS)
        a = self.ishigami_a_grid[self.settings.index(setting)]
        return lambda x: ishigami(x, a, self.ishigami_b)

    def oracle(self, setting: str):
        if self.experiment in ("bilinear", "bilinear_indep"):
            return bilinear_model_indices(self.specs[0])
        if self.experiment == "linear4":
            return linear4_model_indices(self.specs[0], self.specs[1], LINEAR4_COEFFS)
        a = self.ishigami_a_grid[self.settings.index(setting)]
        return ishigami_indices(self.specs[0], a, self.ishigami_b)

    def sample(self, r: int) -> np.ndarray:
        ss = np.random.SeedSequence([self.seed, r])
        if self.experiment != "linear4":
            return sample_mixture(self.specs[0], self.n, ss)
        s13, s24 = ss.spawn(2)
        x = np.empty((self.n, 4))
        x[:, [0, 2]] = sample_mixture(self.specs[0], self.n, s13)
        x[:, [1, 3]] = sample_mixture(self.specs[1], self.n, s24)
        return x

    def dvp_subsets(self) -> list:
        out = [(c,) for c in range(self.pairs.dim)]
        return out + list(self.pairs.pairs)


@dataclass
class RunRecord:
    experiment: str
    setting: str
    replication: int
    index: str
    estimate: float
    method: str
    converged: bool = True

    def row(self) -> list:
        return [
            self.experiment, self.setting, self.replication, self.index,
            repr(float(self.estimate)), self.method, "true" if self.converged else "false",
        ]


@dataclass
class ReplicationResult:
    """Everything one replication produced for one setting."""

    setting: str
    replication: int
    x: np.ndarray
    y: np.ndarray
    tables: list
    convergence: list
    report: object
    dvp: object

    @property
    def converged(self) -> bool:
        return all(c is None or c.converged for c in self.convergence)

    def records(self, experiment: str) -> list:
        out = []
        for name, value in self.report.flat().items():
            out.append(RunRecord(experiment, self.setting, self.replication, name, value, "generalized", self.converged))
        for name, value in self.dvp.estimates.items():
            out.append(RunRecord(experiment, self.setting, self.replication, f"S_{name}", value, "dvp", self.converged))
        out.append(RunRecord(experiment, self.setting, self.replication, "sum_all", self.dvp.sum_all, "dvp", self.converged))
        return out


def run_replication(cfg: ExperimentConfig, r: int) -> list:
    """One replication over every setting; all settings share the input sample."""
    x = cfg.sample(r)
    gs = cfg.gs_config
    cache = SmootherCache(x, gs.smoother)
    out = []
    for setting in cfg.settings:
        y = cfg.model(setting)(x)
        tables, reports = ipdv_decompose(x, y, cfg.pairs, gs, cache)
        report = generalized_indices(tables, y)
        dvp = dvp_sobol(x, y, cfg.dvp_subsets(), cache=cache)
        out.append(ReplicationResult(setting, r, x, y, tables, reports, report, dvp))
    return out


def _replication_records(args) -> list:
    cfg, r = args
    return [rec for res in run_replication(cfg, r) for rec in res.records(cfg.experiment)]


def certify(cfg: ExperimentConfig) -> list:
    """Admissibility gate; raises SpecError naming the violated condition."""
    reports = []
    for spec in cfg.specs:
        rep = check_c2_gaussian(spec)
        if not rep.holds:
            raise SpecError(f"input law fails the density lower-bound condition: {rep.details}")
        reports.append(rep)
    return reports


@dataclass
class RunOutcome:
    records: list
    n_nonconverged: int
    n_replications: int
    paths: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.n_nonconverged <= MAX_NONCONVERGED * self.n_replications


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunOutcome:
    """Certify the input laws, run every replication and write the result files."""
    certify(cfg)
    oracle_records = []
    for setting in cfg.settings:
        for name, value in cfg.oracle(setting).flat().items():
            oracle_records.append(RunRecord(cfg.experiment, setting, -1, name, value, "oracle"))
    jobs = [(cfg, r) for r in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_replication_records, jobs))
    else:
        batches = [_replication_records(job) for job in jobs]
    records = oracle_records + [rec for batch in batches for rec in batch]

    failed = {(rec.setting, rec.replication) for rec in records if not rec.converged}
    n_total = cfg.reps * len(cfg.settings)
    if failed:
        log.warning("%d of %d replications did not converge and are excluded from the summary", len(failed), n_total)
    outcome = RunOutcome(records, len(failed), n_total)
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        paths = {
            "records": os.path.join(cfg.output_dir, "records.csv"),
            "summary": os.path.join(cfg.output_dir, "summary.csv"),
            "boxplot": os.path.join(cfg.output_dir, "boxplot.csv"),
        }
        write_records(records, paths["records"])
        summary, boxplot = summarize(records)
        _write_rows(paths["summary"], SUMMARY_FIELDS, summary)
        _write_rows(paths["boxplot"], BOXPLOT_FIELDS, boxplot)
        outcome.paths = paths
    return outcome


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_records(records, path):
    _write_rows(path, RECORD_FIELDS, [rec.row() for rec in records])


def read_records(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RECORD_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(RECORD_FIELDS)}")
        out = []
        for row in reader:
            if row["method"] not in METHODS:
                raise ValueError(f"{path}: unknown method {row['method']!r}")
            out.append(RunRecord(
                row["experiment"], row["setting"], int(row["replication"]), row["index"],
                float(row["estimate"]), row["method"], row["converged"] == "true",
            ))
    return out


def summarize(records) -> tuple:
    """Summary rows and boxplot rows from run records.

    Non-convergent replications are left out. The standard deviation uses the
    ``reps - 1`` denominator and is empty for a single replication; oracle
    groups report a zero spread.
    """
    groups = {}
    for rec in records:
        if rec.converged:
            groups.setdefault((rec.experiment, rec.setting, rec.index, rec.method), []).append(rec)
    if not groups:
        raise ValueError("no usable records to summarize")
    summary, boxplot = [], []
    for key, recs in groups.items():
        v = np.array([rec.estimate for rec in recs])
        if key[3] == "oracle":
            std = repr(0.0)
        else:
            std = repr(float(np.std(v, ddof=1))) if v.size > 1 else ""
        q = np.percentile(v, [0, 25, 50, 75, 100])
        summary.append([*key, v.size, repr(float(v.mean())), std, *(repr(float(t)) for t in q)])
        if key[3] != "oracle":
            boxplot.extend([*key, rec.replication, repr(float(rec.estimate))] for rec in recs)
    return summary, boxplot


def summarize_file(in_path, out_path) -> tuple:
    """Summarize a records file; the boxplot file lands next to ``out_path``."""
    summary, boxplot = summarize(read_records(in_path))
    _write_rows(out_path, SUMMARY_FIELDS, summary)
    box_path = os.path.join(os.path.dirname(os.path.abspath(out_path)), "boxplot.csv")
    _write_rows(box_path, BOXPLOT_FIELDS, boxplot)
    return out_path, box_path
