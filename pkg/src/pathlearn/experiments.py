"""Experiment harness: recovery-vs-sample-size curves, transitive-edge census,
and full-pipeline recovery on benchmark networks.

Seeds: trial ``t`` at size ``n`` draws its graph and parameters from
``derive_seed(seed, n, t, attempt, 0 | 1)`` and runs grid point ``c`` with
query seed ``derive_seed(seed, n, t, c, 2)``. The same random networks are
therefore reused across the whole grid, and any single cell can be re-run
alone.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import statistics
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .asgn import compute_wmin_wmax, compute_wmin_wmax_transitive, random_asgn
from .discrete_cbn import (
    DiscreteCbn,
    compute_gamma,
    compute_gamma_transitive,
    max_pair_states,
    random_discrete_cbn,
)
from .errors import (
    CapacityError,
    CyclicAnswerError,
    DegenerateSampleError,
    FaithfulnessError,
    GenerationError,
    PathLearnError,
    ValidationError,
)
from .graph import Dag, count_transitive_edges, random_tr_dag
from .learner import RecoveryReport, learn_structure, learn_tr, plan_samples
from .model_io import NamedNetwork, load_network
from .queries import (
    EXACT_SAMPLER_LIMIT,
    AsgnSampler,
    CbnSampler,
    ContinuousPathQuery,
    ContinuousTransitiveQuery,
    DiscretePathQuery,
    DiscreteTransitiveQuery,
    PathOracle,
    TransitiveOracle,
)
from .seeding import derive_seed

log = logging.getLogger(__name__)

KINDS = ("phase-transition", "census", "benchmark-recovery")
PHASE_REGIMES = ("discrete", "continuous")
BENCH_MODES = ("planner", "fixed", "oracle")
MAX_GRAPH_ATTEMPTS = 100

# |V|, |E|, |RE| of the 21 reference benchmark networks
REFERENCE_CENSUS = {
    "alarm": (37, 46, 4),
    "andes": (223, 338, 45),
    "asia": (8, 8, 0),
    "barley": (48, 84, 14),
    "cancer": (5, 4, 0),
    "carpo": (60, 74, 0),
    "child": (20, 25, 1),
    "diabetes": (413, 602, 48),
    "earthquake": (5, 4, 0),
    "hailfinder": (56, 66, 4),
    "hepar2": (70, 123, 16),
    "insurance": (27, 52, 12),
    "link": (724, 1125, 0),
    "mildew": (35, 46, 6),
    "munin1": (186, 273, 1),
    "munin2": (1003, 1244, 6),
    "munin3": (1041, 1306, 6),
    "munin4": (1038, 1388, 6),
    "pigs": (441, 592, 0),
    "water": (32, 66, 0),
    "win95pts": (76, 112, 8),
}
REFERENCE_MEAN_PCT = 5.46
REFERENCE_MEDIAN_PCT = 0.48


@dataclass
class ExperimentConfig:
    """Settings for one experiment. Defaults are the desk-scale curve setup."""

    kind: str = "phase-transition"
    regime: str = "discrete"
    imperfect: bool = False
    n_values: list[int] = field(default_factory=lambda: [10, 15, 20])
    C_grid: list[float] = field(default_factory=lambda: [0, 2, 4, 6, 8, 10, 12, 14, 16])
    trials: int = 20
    delta: float = 0.01
    r_max: int = 5
    gamma_floor: float = 0.01
    alpha: float = 0.9
    edge_density: float = 0.1
    threshold: float | None = None
    seed: int = 0
    networks: list[str] = field(default_factory=list)
    mode: str = "planner"
    m_override: int | None = None
    batched: bool = False
    exact_limit: int = EXACT_SAMPLER_LIMIT

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        if self.regime not in PHASE_REGIMES:
            raise ValidationError(f"regime must be one of {PHASE_REGIMES}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if any(not math.isfinite(c) for c in self.C_grid):
            raise ValidationError("C values must be finite")
        if any(n < 2 for n in self.n_values):
            raise ValidationError("n values must be >= 2")
        if not 0.5 <= self.alpha <= 1:
            raise ValidationError("alpha must lie in [1/2, 1]")
        if self.mode not in BENCH_MODES:
            raise ValidationError(f"mode must be one of {BENCH_MODES}")
        if self.m_override is not None and self.m_override < 1:
            raise ValidationError("m_override must be >= 1")

    @classmethod
    def from_mapping(cls, data: Mapping) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def full_scale(cls, regime: str = "discrete", imperfect: bool = False) -> ExperimentConfig:
        """The full grid: n up to 60, C in 0..16, 40 trials. Takes hours."""
        return cls(
            regime=regime, imperfect=imperfect, n_values=[20, 40, 60],
            C_grid=[float(c) for c in range(17)], trials=40,
        )


@dataclass(frozen=True)
class CurveRow:
    n: int
    C: float
    m: int
    trials: int
    successes: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials


def samples_for(C: float, n: int, regime: str, r: int) -> int:
    """``ceil(e^C log(n r))`` for discrete, ``ceil(e^C log n)`` for continuous."""
    base = math.log(n * r) if regime == "discrete" else math.log(n)
    return max(1, math.ceil(math.exp(C) * base))


def trial_network(config: ExperimentConfig, n: int, trial: int):
    """Random transitively reduced graph with parameters for one trial.

    A discrete draw is redone with the next attempt index when computing
    its constants would exceed the enumeration cap, or when some path query
    would exceed the exact-sampler limit (``exact_limit``, so every query
    draws its histogram in one step).
    """
    for attempt in range(MAX_GRAPH_ATTEMPTS):
        g = random_tr_dag(n, config.edge_density, derive_seed(config.seed, n, trial, attempt, 0))
        pseed = derive_seed(config.seed, n, trial, attempt, 1)
        try:
            if config.regime == "discrete":
                cbn = random_discrete_cbn(g, config.r_max, config.gamma_floor, pseed)
                if max_pair_states(cbn) > config.exact_limit:
                    continue
                return cbn
            return random_asgn(g, pseed)
        except CapacityError:
            continue
        except GenerationError as exc:
            raise GenerationError(f"n={n}, trial={trial}: {exc}") from None
    raise GenerationError(f"n={n}, trial={trial}: no graph within the enumeration cap")


def _path_query(config: ExperimentConfig, net, m: int, seed: int):
    if config.regime == "discrete":
        sampler = CbnSampler(net, success=config.alpha if config.imperfect else None)
        return DiscretePathQuery(
            sampler, m, config.gamma_floor, config.threshold, seed,
            imperfect=config.imperfect, batched=config.batched,
        )
    consts = compute_wmin_wmax(net)
    sampler = AsgnSampler(net, spread=net.noise_variances if config.imperfect else None)
    return ContinuousPathQuery(sampler, m, consts.z, seed, batched=config.batched)


def run_phase_transition(
    config: ExperimentConfig, progress: Callable[[CurveRow], None] | None = None
) -> list[CurveRow]:
    """Exact-recovery frequency of the reduced graph for each ``(n, C)``."""
    rows = []
    for n in config.n_values:
        nets = [trial_network(config, n, t) for t in range(config.trials)]
        for c, C in enumerate(config.C_grid):
            m = samples_for(C, n, config.regime, config.r_max)
            wins = 0
            for t, net in enumerate(nets):
                query = _path_query(config, net, m, derive_seed(config.seed, n, t, c, 2))
                try:
                    wins += learn_tr(n, query).learned == net.dag
                except (CyclicAnswerError, DegenerateSampleError):
                    pass
            row = CurveRow(n, float(C), m, config.trials, wins)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


# --------------------------------------------------------------------------- census


@dataclass(frozen=True)
class CensusRow:
    name: str
    n: int | None = None
    edges: int | None = None
    transitive: int | None = None
    reference: tuple[int, int, int] | None = None
    error: str | None = None

    @property
    def ratio(self) -> float | None:
        if self.edges is None:
            return None
        return self.transitive / self.edges if self.edges else 0.0

    @property
    def drift(self) -> bool:
        """True when the file's counts differ from the reference table."""
        if self.reference is None or self.error is not None:
            return False
        return self.reference != (self.n, self.edges, self.transitive)


@dataclass
class CensusResult:
    rows: list[CensusRow]

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]

    @property
    def mean(self) -> float:
        return statistics.fmean(self.ratios) if self.ratios else float("nan")

    @property
    def median(self) -> float:
        return statistics.median(self.ratios) if self.ratios else float("nan")

    def table(self) -> list[list]:
        out = []
        for r in self.rows:
            if r.error is not None:
                out.append([r.name, "", "", "", "", f"error: {r.error}"])
                continue
            note = ""
            if r.drift:
                note = "differs from reference {}/{}/{}".format(*r.reference)
            out.append([r.name, r.n, r.edges, r.transitive, f"{100 * r.ratio:.2f}%", note])
        out.append(["mean", "", "", "", f"{100 * self.mean:.2f}%", ""])
        out.append(["median", "", "", "", f"{100 * self.median:.2f}%", ""])
        return out


def census_row(name: str, g: Dag) -> CensusRow:
    key = name.lower()
    return CensusRow(key, g.n, g.num_edges(), count_transitive_edges(g), REFERENCE_CENSUS.get(key))


def run_census(sources: Iterable[str | Path | NamedNetwork]) -> CensusResult:
    """|V|, |E|, transitive edges and their ratio per network; failures are recorded per row."""
    rows = []
    for src in sources:
        if isinstance(src, NamedNetwork):
            rows.append(census_row(src.name, src.dag))
            continue
        name = Path(str(src)).stem
        try:
            net = load_network(src)
        except (PathLearnError, OSError) as exc:
            rows.append(CensusRow(name.lower(), error=str(exc)))
            continue
        rows.append(census_row(name, net.dag))
    return CensusResult(rows)


# --------------------------------------------------------------------------- benchmark recovery


def run_benchmark_recovery(
    net: NamedNetwork,
    mode: str = "planner",
    delta: float = 0.01,
    seed: int = 0,
    m_override: int | None = None,
    threshold_rule: str = "half",
    batched: bool = False,
) -> RecoveryReport:
    """Both learning phases on a known network, scored against it.

    ``planner`` sizes each phase from measured network constants with the
    error budget split evenly between phases; ``fixed`` uses
    ``ceil(e^12 log(n r))`` samples per distribution; ``oracle`` answers
    every query from the true graph.
    """
    if mode not in BENCH_MODES:
        raise ValidationError(f"mode must be one of {BENCH_MODES}")
    if threshold_rule not in ("half", "gamma"):
        raise ValidationError("threshold_rule must be 'half' or 'gamma'")
    g = net.dag
    n = g.n
    notes: dict = {"network": net.name, "mode": mode}
    if mode == "oracle":
        report = learn_structure(n, PathOracle(g), TransitiveOracle(g))
        report.notes.update(notes)
        return report.with_truth(g)

    path_seed, trans_seed = derive_seed(seed, 0), derive_seed(seed, 1)
    if net.kind == "discrete":
        cbn: DiscreteCbn = net.payload
        r = cbn.r
        k = max((len(cbn.parents(j)) for j in range(n)), default=0)
        gamma = compute_gamma(cbn)
        gamma_t = compute_gamma_transitive(cbn)
        if not (gamma.faithful and gamma_t.faithful):
            raise FaithfulnessError(f"{net.name}: an edge has no interventional effect")
        if m_override is not None:
            m_path = m_trans = m_override
            notes["budget"] = "override"
        elif mode == "fixed":
            m_path = m_trans = samples_for(12.0, n, "discrete", r)
            notes["budget"] = "ceil(e^12 log(n r))"
        else:
            m_path = plan_samples("discrete", n, delta / 2, gamma=gamma.value, r=r).m_per_distribution
            m_trans = plan_samples(
                "transitive-discrete", n, delta / 2, gamma=gamma_t.value, r=r, max_parents=k
            ).m_per_distribution
            notes["budget"] = "planner from measured gamma, delta split between phases"
        notes.update(gamma=gamma.value, gamma_transitive=gamma_t.value, r=r, max_parents=k,
                     m_path=m_path, m_transitive=m_trans)
        sampler = CbnSampler(cbn)
        th_p = gamma.value if threshold_rule == "gamma" else None
        th_t = gamma_t.value if threshold_rule == "gamma" else None
        query = DiscretePathQuery(sampler, m_path, gamma.value, th_p, path_seed, batched=batched)
        tquery = DiscreteTransitiveQuery(sampler, m_trans, gamma_t.value, th_t, trans_seed)
    else:
        consts = compute_wmin_wmax(net.payload)
        consts_t = compute_wmin_wmax_transitive(net.payload)
        if not (consts.faithful and consts_t.faithful):
            raise FaithfulnessError(f"{net.name}: w_min vanishes")
        if m_override is not None:
            m_path = m_trans = m_override
            notes["budget"] = "override"
        elif mode == "fixed":
            m_path = m_trans = samples_for(12.0, n, "continuous", 1)
            notes["budget"] = "ceil(e^12 log n)"
        else:
            m_path = plan_samples("continuous", n, delta / 2, sigma_ub=consts.sigma_ub).m_per_distribution
            m_trans = plan_samples(
                "transitive-continuous", n, delta / 2, sigma_ub=consts_t.sigma_ub
            ).m_per_distribution
            notes["budget"] = "planner from measured constants, delta split between phases"
        notes.update(z=consts.z, z2=consts_t.z, sigma_ub=consts.sigma_ub,
                     sigma_ub_transitive=consts_t.sigma_ub, m_path=m_path, m_transitive=m_trans)
        sampler = AsgnSampler(net.payload)
        query = ContinuousPathQuery(sampler, m_path, consts.z, path_seed, batched=batched)
        tquery = ContinuousTransitiveQuery(sampler, m_trans, consts_t.z, 0.0, trans_seed)

    try:
        report = learn_structure(n, query, tquery)
    except CapacityError as exc:
        raise CapacityError(f"{net.name}: {exc}") from None
    report.notes.update(notes)
    return report.with_truth(g)


# --------------------------------------------------------------------------- plotting


def curve_svg(rows: Sequence[CurveRow], width: int = 480, height: int = 320) -> str:
    """Line chart of recovery frequency against C, one line per n."""
    pad = 48
    xs = [r.C for r in rows] or [0.0]
    x0, x1 = min(xs), max(xs)
    span = (x1 - x0) or 1.0

    def px(C):
        return pad + (C - x0) / span * (width - 2 * pad)

    def py(f):
        return height - pad - f * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{py(0)}" x2="{width - pad}" y2="{py(0)}" stroke="black"/>',
        f'<line x1="{pad}" y1="{py(0)}" x2="{pad}" y2="{py(1)}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">C</text>',
        f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})" '
        f'text-anchor="middle">P(recovered)</text>',
    ]
    for f in (0.0, 0.5, 1.0):
        out.append(f'<text x="{pad - 6}" y="{py(f) + 4:.1f}" text-anchor="end" font-size="10">{f:g}</text>')
    for C in sorted(set(xs)):
        out.append(f'<text x="{px(C):.1f}" y="{py(0) + 14:.1f}" text-anchor="middle" font-size="10">{C:g}</text>')
    ns = sorted({r.n for r in rows})
    for k, n in enumerate(ns):
        pts = sorted((r.C, r.frequency) for r in rows if r.n == n)
        color = colors[k % len(colors)]
        path = " ".join(f"{px(C):.1f},{py(f):.1f}" for C, f in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{width - pad + 4}" y="{pad + 14 * k}" font-size="11" fill="{color}">n={n}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
