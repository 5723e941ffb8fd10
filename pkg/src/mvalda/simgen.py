"""Scenario generators and the Monte-Carlo misclassification harness."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from mvalda.classifier import fit_mva, fit_naive_bayes, oracle_model, predict
from mvalda.errors import DomainError
from mvalda.npmle import SolverConfig
from mvalda.stats import LabeledMatrix

log = logging.getLogger(__name__)

SIGNAL_LENGTH = 100
NONSPARSE_TAIL_SD = 0.1
BETA_SCALE = 5.0
INV_GAMMA_SCALE = 10.0

# independent RNG streams within one replicate
_STREAM_MEANS, _STREAM_VARIANCES, _STREAM_TRAIN, _STREAM_TEST = range(4)


@dataclass(frozen=True)
class VarianceLaw:
    """Distribution of the per-feature variances.

    ``kind`` is one of ``two_point`` (params: base, delta, bulk),
    ``beta_scaled`` (shape beta; draws are ``5 * Beta(5, beta)``),
    ``inv_gamma`` (shape alpha; scale 10) or ``uniform`` (hi; low end 1).
    """

    kind: str
    params: tuple[float, ...]

    _ARITY = {"two_point": 3, "beta_scaled": 1, "inv_gamma": 1, "uniform": 1}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise DomainError(f"unknown variance law {self.kind!r}")
        params = tuple(float(x) for x in self.params)
        if len(params) != self._ARITY[self.kind]:
            raise DomainError(f"{self.kind} takes {self._ARITY[self.kind]} parameter(s), got {len(params)}")
        if not all(x > 0 for x in params):
            raise DomainError(f"{self.kind} parameters must be positive")
        if self.kind == "two_point" and not params[1] < 1:
            raise DomainError("two_point proportion must lie in (0, 1)")
        if self.kind == "uniform" and not params[0] > 1:
            raise DomainError("uniform upper end must exceed 1")
        object.__setattr__(self, "params", params)

    @classmethod
    def parse(cls, text: str) -> "VarianceLaw":
        """Parse ``two_point:1,0.005,6``, ``beta:1.5``, ``invgamma:2`` or ``uniform:9``."""
        aliases = {"beta": "beta_scaled", "invgamma": "inv_gamma", "inv_gamma": "inv_gamma",
                   "two_point": "two_point", "twopoint": "two_point", "uniform": "uniform",
                   "beta_scaled": "beta_scaled"}
        name, _, rest = text.partition(":")
        if name not in aliases or not rest:
            raise DomainError(f"cannot parse variance law {text!r}")
        try:
            params = tuple(float(x) for x in rest.split(","))
        except ValueError:
            raise DomainError(f"cannot parse variance law {text!r}") from None
        return cls(aliases[name], params)

    def label(self) -> str:
        return self.kind + ":" + ",".join(f"{x:g}" for x in self.params)


@dataclass(frozen=True)
class ScenarioSpec:
    p: int
    variance_law: VarianceLaw
    mean_structure: str = "sparse"
    n1_train: int = 25
    n2_train: int = 25
    n1_test: int = 100
    n2_test: int = 100
    replicates: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.mean_structure not in ("sparse", "non_sparse"):
            raise DomainError(f"mean structure must be sparse or non_sparse, got {self.mean_structure!r}")
        for name in ("p", "n1_train", "n2_train", "n1_test", "n2_test", "replicates"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        if self.n1_train < 2 or self.n2_train < 2:
            raise DomainError("each training class needs at least 2 samples")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def scenario_id(self) -> str:
        return f"{self.variance_law.label()}|{self.mean_structure}|p={self.p}"


def replicate_rng(seed: int, replicate: int, stream: int) -> np.random.Generator:
    """Generator determined only by ``(seed, replicate, stream)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, stream)))


def gen_means(spec: ScenarioSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Class means: a block of ones followed by zeros (sparse) or small noise."""
    k = min(spec.p, SIGNAL_LENGTH)
    mu1 = np.zeros(spec.p)
    mu1[:k] = 1.0
    if spec.mean_structure == "non_sparse":
        mu1[k:] = rng.normal(0.0, NONSPARSE_TAIL_SD, spec.p - k)
    return mu1, np.zeros(spec.p)


def gen_variances(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    law, p = spec.variance_law, spec.p
    if law.kind == "two_point":
        base, delta, bulk = law.params
        return np.where(rng.random(p) < delta, base, bulk)
    if law.kind == "beta_scaled":
        return BETA_SCALE * rng.beta(5.0, law.params[0], p)
    if law.kind == "inv_gamma":
        return INV_GAMMA_SCALE / rng.gamma(law.params[0], 1.0, p)
    return rng.uniform(1.0, law.params[0], p)


def _draw(mu1, mu2, sd, n1, n2, rng) -> LabeledMatrix:
    x1 = mu1 + sd * rng.standard_normal((n1, mu1.size))
    x2 = mu2 + sd * rng.standard_normal((n2, mu2.size))
    labels = np.r_[np.ones(n1, dtype=np.int64), np.full(n2, 2, dtype=np.int64)]
    return LabeledMatrix(np.vstack([x1, x2]), labels)


@dataclass(frozen=True)
class Truth:
    mu1: np.ndarray
    mu2: np.ndarray
    sigma2: np.ndarray


def gen_dataset(spec: ScenarioSpec, replicate: int = 0):
    """Draw ``(train, test, truth)`` for one replicate of a scenario."""
    mu1, mu2 = gen_means(spec, replicate_rng(spec.seed, replicate, _STREAM_MEANS))
    sigma2 = gen_variances(spec, replicate_rng(spec.seed, replicate, _STREAM_VARIANCES))
    sd = np.sqrt(sigma2)
    train = _draw(mu1, mu2, sd, spec.n1_train, spec.n2_train,
                  replicate_rng(spec.seed, replicate, _STREAM_TRAIN))
    test = _draw(mu1, mu2, sd, spec.n1_test, spec.n2_test,
                 replicate_rng(spec.seed, replicate, _STREAM_TEST))
    return train, test, Truth(mu1, mu2, sigma2)


def misclassification_rate(labels, predictions) -> float:
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.shape != predictions.shape or labels.size == 0:
        raise DomainError("labels and predictions must be nonempty and equally long")
    return float(np.mean(labels != predictions))


@dataclass
class EvalReport:
    scenario_id: str
    methods: tuple[str, ...]
    replicates: int
    # (method, replicate, rate), ordered by replicate then method
    records: list[tuple[str, int, float]] = field(default_factory=list)

    def rates(self, method: str) -> np.ndarray:
        return np.array([r for m, _, r in self.records if m == method])

    def aggregate(self) -> list[tuple[str, float, float]]:
        """``(method, mean, sd)`` per method; sd uses ``n - 1`` (0 for one replicate)."""
        out = []
        for m in self.methods:
            r = self.rates(m)
            sd = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
            out.append((m, float(np.mean(r)), sd))
        return out


def _normalize_methods(methods: Iterable[str]) -> tuple[str, ...]:
    order = ("MVA", "NB", "ORACLE")
    chosen = {m.upper() for m in methods}
    unknown = chosen - set(order)
    if unknown or not chosen:
        raise DomainError(f"methods must be a nonempty subset of {order}, got {sorted(methods)}")
    return tuple(m for m in order if m in chosen)


def run_replicate(spec: ScenarioSpec, replicate: int, methods, config: Optional[SolverConfig] = None):
    """Misclassification rate of each method on one fresh dataset."""
    config = config or SolverConfig()
    train, test, truth = gen_dataset(spec, replicate)
    n1, n2 = train.class_counts
    out = []
    for method in methods:
        if method == "MVA":
            model = fit_mva(train, config)
        elif method == "NB":
            model = fit_naive_bayes(train)
        else:
            model = oracle_model(truth.mu1, truth.mu2, truth.sigma2, (n1 / (n1 + n2), n2 / (n1 + n2)))
        out.append((method, replicate, misclassification_rate(test.labels, predict(model, test.values))))
    return out


def _run_replicate_star(args):
    return run_replicate(*args)


def run_monte_carlo(
    spec: ScenarioSpec,
    methods: Iterable[str] = ("MVA", "NB", "ORACLE"),
    config: Optional[SolverConfig] = None,
    n_jobs: int = 1,
) -> EvalReport:
    """Fit and evaluate every method on ``spec.replicates`` independent datasets.

    Replicate ``r`` only depends on ``(spec.seed, r)``, so the report is the
    same for any ``n_jobs`` and any method subset.
    """
    methods = _normalize_methods(methods)
    config = config or SolverConfig()
    jobs = [(spec, r, methods, config) for r in range(spec.replicates)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_replicate_star, jobs))
    else:
        results = []
        for job in jobs:
            results.append(run_replicate(*job))
            log.debug("replicate %d done", job[1])
    report = EvalReport(spec.scenario_id, methods, spec.replicates)
    for rows in results:
        report.records.extend(rows)
    return report
