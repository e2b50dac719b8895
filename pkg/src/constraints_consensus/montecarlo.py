"""Completion-time experiments for constraints consensus on random LPs.

A sweep draws, for every ``n`` in ``n_list`` and every run, a graph and an
LP instance from per-run seeds ``(seed, n, run)``, assigns constraint ``i``
to node ``i`` and records the completion round of nominal constraints
consensus.  The statistics helpers (one-sided t-test, Chernoff sample size,
empirical probability, line fit) are usable on their own.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betainc

from .consensus import RunOptions, run_constraints_consensus
from .errors import BudgetExceeded, EmptySample, InsufficientSamples, OutOfRange
from .lp import GENERATORS, lp_problem_and_constraints
from .network import diameter, gen_erdos_renyi, gen_line, gen_random_geometric

GRAPH_MODELS = ("line", "erdos_renyi", "rgg")
DEFAULT_BUDGET = 10**6


@dataclass
class ExperimentConfig:
    graph_model: str = "line"
    lp_model: str = "A"
    d: int = 4
    n_list: list = field(default_factory=lambda: [20, 40, 60])
    runs: int = 10
    seed: int = 0
    epsilon: float = 0.3  # Erdos-Renyi connectivity margin
    max_rounds: int | None = None
    budget: int = DEFAULT_BUDGET  # cap on sum(n) * runs

    def __post_init__(self):
        if self.graph_model not in GRAPH_MODELS:
            raise ValueError(f"unknown graph model {self.graph_model!r}")
        if self.lp_model not in GENERATORS:
            raise ValueError(f"unknown LP model {self.lp_model!r}")
        if self.d not in (2, 3, 4, 5):
            raise ValueError("d must be in {2, 3, 4, 5}")
        if not self.n_list or min(self.n_list) < self.d + 1:
            raise ValueError("every n must be at least d + 1")
        if self.runs < 1:
            raise ValueError("runs must be positive")

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        return cls(**doc)

    @property
    def tag(self) -> str:
        return f"{self.graph_model}_{self.lp_model}_d{self.d}"


@dataclass(frozen=True)
class RunRecord:
    n: int
    run: int
    completion: int | None
    diameter: int


def run_seeds(seed: int, n: int, run: int) -> tuple[np.random.Generator, np.random.Generator, int]:
    graph_ss, lp_ss, alg_ss = np.random.SeedSequence([seed, n, run]).spawn(3)
    return np.random.default_rng(graph_ss), np.random.default_rng(lp_ss), int(alg_ss.generate_state(1)[0])


def make_graph(model: str, n: int, rng: np.random.Generator, epsilon: float = 0.3):
    if model == "line":
        return gen_line(n)
    if model == "erdos_renyi":
        return gen_erdos_renyi(n, epsilon, rng)
    return gen_random_geometric(n, rng)


def run_single(cfg: ExperimentConfig, n: int, run: int) -> RunRecord:
    g_rng, lp_rng, alg_seed = run_seeds(cfg.seed, n, run)
    graph = make_graph(cfg.graph_model, n, g_rng, cfg.epsilon)
    lp = GENERATORS[cfg.lp_model](n, cfg.d, lp_rng)
    problem, H = lp_problem_and_constraints(lp)
    opts = RunOptions(seed=alg_seed, max_rounds=cfg.max_rounds, record=False)
    trace = run_constraints_consensus(problem, graph, H, opts)
    return RunRecord(n, run, trace.completion_round, int(diameter(graph)))


def _run_task(args):
    cfg, n, run = args
    return run_single(cfg, n, run)


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list  # RunRecord, ordered by (n, run)

    def by_n(self) -> dict:
        out: dict = {}
        for r in self.records:
            out.setdefault(r.n, []).append(r)
        return out

    def rows(self) -> list[dict]:
        rows = []
        for n, recs in sorted(self.by_n().items()):
            done = [r for r in recs if r.completion is not None]
            comp = np.array([r.completion for r in done], dtype=float)
            ratios = np.array([r.completion / r.diameter for r in done], dtype=float)
            k = len(done)
            std = float(comp.std(ddof=1)) if k > 1 else 0.0
            rstd = float(ratios.std(ddof=1)) if k > 1 else 0.0
            ratio = float(ratios.mean()) if k else math.nan
            lo, hi = confidence_interval(ratio, rstd, k)
            rows.append({
                "n": n,
                "mean_completion": float(comp.mean()) if k else math.nan,
                "std": std,
                "diameter": float(np.mean([r.diameter for r in recs])),
                "ratio": ratio,
                "ci_low": lo,
                "ci_high": hi,
                "max_ratio": float(ratios.max()) if k else math.nan,
                "runs": len(recs),
                "not_converged": len(recs) - k,
            })
        return rows

    def ratios(self, n: int) -> list[float]:
        return [r.completion / r.diameter for r in self.by_n()[n] if r.completion is not None]

    def fit(self) -> "LineFit":
        rows = self.rows()
        return fit_line([r["n"] for r in rows], [r["mean_completion"] for r in rows])

    def t_tests(self, mu0: float = 1.5) -> list[dict]:
        out = []
        for n in sorted(self.by_n()):
            xs = self.ratios(n)
            if len(xs) < 2:
                continue
            t, df, p = t_test_one_sample(xs, mu0)
            out.append({"n": n, "t": t, "df": df, "p_one_sided": p, "mu0": mu0})
        return out

    def to_json(self) -> dict:
        return {
            "config": asdict(self.config),
            "records": [asdict(r) for r in self.records],
            "rows": self.rows(),
            "fit": asdict(self.fit()),
            "t_tests": self.t_tests(),
        }


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    work = sum(cfg.n_list) * cfg.runs
    if work > cfg.budget:
        raise BudgetExceeded(f"sweep needs {work} node-runs, budget is {cfg.budget}")
    tasks = [(cfg, n, run) for n in cfg.n_list for run in range(cfg.runs)]
    if jobs > 1:
        # map preserves task order, so the result does not depend on scheduling
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        records = [_run_task(t) for t in tasks]
    return SweepResult(cfg, records)


# -- statistics ----------------------------------------------------------------

def student_t_cdf(t: float, df: int) -> float:
    """Student t distribution function through the regularized incomplete beta function."""
    x = df / (df + t * t)
    tail = 0.5 * betainc(0.5 * df, 0.5, x)
    return float(tail if t < 0 else 1.0 - tail)


def t_test_one_sample(samples, mu0: float) -> tuple[float, int, float]:
    """One-sample t statistic and the lower-tail p-value (alternative: mean < mu0)."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise InsufficientSamples("the t-test needs at least two samples")
    df = len(x) - 1
    mean, sd = float(x.mean()), float(x.std(ddof=1))
    if sd == 0.0:
        if mean == mu0:
            return 0.0, df, 0.5
        t = -math.inf if mean < mu0 else math.inf
        return t, df, 0.0 if mean < mu0 else 1.0
    t = (mean - mu0) / (sd / math.sqrt(len(x)))
    return t, df, student_t_cdf(t, df)


def chernoff_bound(epsilon: float, eta: float) -> float:
    """``log(2 / eta) / (2 epsilon^2)``: samples for ``P(|p_hat - p| > eps) < eta``."""
    if not (0 < epsilon < 1 and 0 < eta < 1):
        raise OutOfRange("epsilon and eta must lie in (0, 1)")
    return math.log(2.0 / eta) / (2.0 * epsilon * epsilon)


def chernoff_samples(epsilon: float, eta: float, exact: bool = False) -> int:
    """Number of Monte Carlo samples for accuracy ``epsilon`` and confidence ``1 - eta``.

    By default the bound is rounded up to two significant digits, the
    convention behind the usual quoted figure (27000 for 0.01 / 0.01);
    ``exact=True`` gives the smallest integer satisfying the bound.
    """
    bound = chernoff_bound(epsilon, eta)
    n = math.ceil(bound - 1e-9 * bound)
    if exact:
        return n
    step = 10 ** max(0, len(str(n)) - 2)
    return -(-n // step) * step


def empirical_probability(indicators) -> float:
    xs = list(indicators)
    if not xs:
        raise EmptySample("no samples")
    return sum(bool(x) for x in xs) / len(xs)


def confidence_interval(mean: float, std: float, k: int, z: float = 1.96) -> tuple[float, float]:
    """Normal-approximation interval ``mean +- z std / sqrt(k)``."""
    if k == 0:
        return math.nan, math.nan
    half = z * std / math.sqrt(k)
    return mean - half, mean + half


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float


def fit_line(x, y) -> LineFit:
    """Least-squares line; a single point gives slope 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise EmptySample("nothing to fit")
    if len(x) == 1 or np.ptp(x) == 0:
        return LineFit(0.0, float(y.mean()), 1.0)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return LineFit(float(slope), float(intercept), r2)


def export_plot_data(result: SweepResult, outdir) -> tuple[str, str]:
    """Write ``<tag>.csv`` (one row per n) and ``<tag>_fit.json``; return both paths."""
    os.makedirs(outdir, exist_ok=True)
    tag = result.config.tag
    csv_path = os.path.join(outdir, f"{tag}.csv")
    fit_path = os.path.join(outdir, f"{tag}_fit.json")
    cols = ["n", "mean_completion", "std", "diameter", "ratio", "ci_low", "ci_high"]
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for row in result.rows():
            w.writerow(row)
    with open(fit_path, "w") as fh:
        json.dump(asdict(result.fit()), fh, indent=2)
    return csv_path, fit_path
