"""Experiment configuration, per-trial pipeline and CSV sweep driver.

A trial is fully determined by (rng_seed, trial_index): the stream for
each trial is derived independently, so adding trials or sweeping other
parameters never perturbs earlier trials, and the graph built for one
trial is shared by every algorithm in the sweep (paired comparisons).
Noise is skipped entirely at error magnitude 0; the noise model's bias
term would otherwise rescale all distances and break noiseless
exactness.
"""

from __future__ import annotations

import csv
import re
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, TextIO

import numpy as np

from .cbl import cbl
from .clustering import ClusterParams, extract_clusters, initial_hop_distance, volume_threshold
from .localize2d import trilaterate
from .localize3d import quadrilaterate
from .metrics import EvalReport, evaluate
from .network import (
    Deployment,
    NoiseSpec,
    WsnGraph,
    apply_noise,
    build_unit_ball_graph,
    gen_planar_disjoint,
    gen_planar_intersecting,
    gen_random_cube,
    gen_random_square,
    planarity_factor,
)

ALGORITHMS = ("trilat2d", "quad", "cbl", "pc-cbl")

CSV_COLUMNS = (
    "deployment",
    "mu",
    "R",
    "err_mag",
    "trial_index",
    "algorithm",
    "recall_pct",
    "avg_offset",
    "flips",
    "n_clusters_found",
    "runtime_ms",
)

_NAME_RE = re.compile(r"^([DI])-(\d+)-(\d+)$")


@dataclass(frozen=True)
class DeploymentSpec:
    """Parsed deployment selector: kind plus cluster shape if planar."""

    kind: str  # "random" | "random2d" | "disjoint" | "intersecting"
    k: Optional[int] = None
    m: Optional[int] = None


def parse_deployment(name: str) -> DeploymentSpec:
    """Parse a deployment name: random, random2d, D-k-m or I-k-m."""
    if name in ("random", "random2d"):
        return DeploymentSpec(name)
    match = _NAME_RE.match(name)
    if not match:
        raise ValueError(
            f"bad deployment {name!r}: expected 'random', 'random2d', "
            "'D-<clusters>-<nodes per cluster>' or 'I-...'"
        )
    kind = "disjoint" if match.group(1) == "D" else "intersecting"
    return DeploymentSpec(kind, int(match.group(2)), int(match.group(3)))


@dataclass
class ExperimentConfig:
    """One sweep: deployment family, noise levels, trials and algorithms."""

    deployment: str = "random"
    nodes: int = 100  # node count for random deployments
    side: float = 100.0
    sensing_range: float = 40.0
    err_mags: tuple[float, ...] = (0.0,)
    trials: int = 50
    rng_seed: int = 1
    algorithms: tuple[str, ...] = ("quad",)
    robust_min_angle: Optional[float] = None
    seed_cap: Optional[int] = None

    def __post_init__(self):
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        parse_deployment(self.deployment)

    @property
    def spec(self) -> DeploymentSpec:
        return parse_deployment(self.deployment)

    @property
    def mu(self) -> Optional[float]:
        s = self.spec
        if s.k is None:
            return None
        return planarity_factor(s.k, s.k * s.m)


@dataclass
class TrialRecord:
    """One CSV row: a single (trial, algorithm) outcome."""

    deployment: str
    mu: Optional[float]
    R: float
    err_mag: float
    trial_index: int
    algorithm: str
    recall_pct: float
    avg_offset: Optional[float]
    flips: Optional[int]
    n_clusters_found: Optional[int]
    runtime_ms: float


def _config_coerce(key: str, value: str):
    if key in ("nodes", "trials", "seed", "seed_cap", "clusters"):
        return int(value)
    if key in ("side", "range", "robust_angle"):
        return float(value)
    if key == "error":
        return tuple(float(tok) for tok in value.split(","))
    if key == "algorithm":
        return tuple(tok.strip() for tok in value.split(","))
    if key == "deployment":
        return value
    raise ValueError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse a flat key=value config (one pair per line, # comments)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key=value")
        values[key.strip()] = _config_coerce(key.strip(), value.strip())
    kwargs = {}
    mapping = {
        "deployment": "deployment",
        "nodes": "nodes",
        "side": "side",
        "range": "sensing_range",
        "error": "err_mags",
        "trials": "trials",
        "seed": "rng_seed",
        "algorithm": "algorithms",
        "robust_angle": "robust_min_angle",
        "seed_cap": "seed_cap",
    }
    clusters = values.pop("clusters", None)
    for key, value in values.items():
        kwargs[mapping[key]] = value
    cfg = ExperimentConfig(**kwargs)
    if clusters is not None and cfg.spec.kind in ("disjoint", "intersecting"):
        raise ValueError("clusters is implied by the deployment name")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def trial_rngs(rng_seed: int, trial_index: int):
    """Independent deployment/noise generators for one trial."""
    root = np.random.SeedSequence([rng_seed, trial_index])
    dep_ss, noise_ss = root.spawn(2)
    return np.random.default_rng(dep_ss), np.random.default_rng(noise_ss)


def generate_deployment(cfg: ExperimentConfig, rng) -> Deployment:
    s = cfg.spec
    if s.kind == "random":
        return gen_random_cube(cfg.nodes, cfg.side, rng)
    if s.kind == "random2d":
        return gen_random_square(cfg.nodes, cfg.side, rng)
    if s.kind == "disjoint":
        return gen_planar_disjoint(s.k, s.m, cfg.side, rng)
    return gen_planar_intersecting(s.k, s.m, cfg.side, rng)


def build_trial_graph(
    cfg: ExperimentConfig, err_mag: float, trial_index: int
) -> tuple[Deployment, WsnGraph]:
    """Deployment plus (noisy) measurement graph for one trial."""
    rng_dep, rng_noise = trial_rngs(cfg.rng_seed, trial_index)
    deployment = generate_deployment(cfg, rng_dep)
    graph = build_unit_ball_graph(deployment, cfg.sensing_range)
    if err_mag > 0.0:
        graph = apply_noise(graph, NoiseSpec(err_mag, cfg.sensing_range), rng_noise)
    return deployment, graph


def dispatch_algorithm(
    algorithm: str,
    graph: WsnGraph,
    deployment: Deployment,
    err_mag: float,
    cfg: ExperimentConfig,
):
    """Run one localizer; returns (assignments, anchors, n_clusters_found)."""
    kappa = volume_threshold(err_mag)
    if algorithm == "trilat2d":
        f = trilaterate(
            graph,
            err_mag,
            robust_min_angle=cfg.robust_min_angle,
            seed_cap=cfg.seed_cap,
        )
        return f.assignments, f.anchors, None
    if algorithm == "quad":
        f = quadrilaterate(graph, err_mag, kappa, seed_cap=cfg.seed_cap)
        return f.assignments, f.anchors, None
    if algorithm == "cbl":
        if deployment.cluster_labels is None:
            raise ValueError("cbl needs a deployment with cluster labels")
        memberships = deployment.label_clusters()
        f, _ = cbl(
            graph,
            memberships,
            err_mag,
            kappa,
            robust_min_angle=cfg.robust_min_angle,
            seed_cap=cfg.seed_cap,
        )
        return f.assignments, f.anchors, None
    if algorithm == "pc-cbl":
        # Ground-truth labels are deliberately ignored here; clusters
        # come from the distance-only extraction.
        params = ClusterParams(
            kappa=kappa,
            theta=initial_hop_distance(graph),
            theta_increment=deployment.side / 100.0,
            theta_max=graph.R,
        )
        clusters, _ = extract_clusters(graph, err_mag, params=params)
        f, _ = cbl(
            graph,
            clusters,
            err_mag,
            kappa,
            robust_min_angle=cfg.robust_min_angle,
            seed_cap=cfg.seed_cap,
        )
        return f.assignments, f.anchors, len(clusters)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_trial(
    cfg: ExperimentConfig, trial_index: int, err_mag: Optional[float] = None
) -> list[TrialRecord]:
    """Run every configured algorithm on one trial's shared graph."""
    if err_mag is None:
        err_mag = cfg.err_mags[0]
    deployment, graph = build_trial_graph(cfg, err_mag, trial_index)
    records = []
    for algorithm in cfg.algorithms:
        start = time.perf_counter()
        assignments, anchors, n_clusters = dispatch_algorithm(
            algorithm, graph, deployment, err_mag, cfg
        )
        runtime_ms = (time.perf_counter() - start) * 1000.0
        report = evaluate(assignments, deployment.positions, graph.n, anchors)
        records.append(
            TrialRecord(
                deployment=cfg.deployment,
                mu=cfg.mu,
                R=cfg.sensing_range,
                err_mag=err_mag,
                trial_index=trial_index,
                algorithm=algorithm,
                recall_pct=report.recall_pct,
                avg_offset=report.avg_offset,
                flips=report.flips,
                n_clusters_found=n_clusters,
                runtime_ms=runtime_ms,
            )
        )
    return records


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _record_row(r: TrialRecord) -> list[str]:
    return [
        r.deployment,
        _cell(r.mu),
        _cell(r.R),
        _cell(r.err_mag),
        str(r.trial_index),
        r.algorithm,
        _cell(r.recall_pct),
        _cell(r.avg_offset),
        _cell(r.flips),
        _cell(r.n_clusters_found),
        _cell(r.runtime_ms),
    ]


def _mean(values: list) -> Optional[float]:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return sum(values) / len(values)


def _mean_row(cfg: ExperimentConfig, err_mag, algorithm, records) -> list[str]:
    return [
        cfg.deployment,
        _cell(cfg.mu),
        _cell(cfg.sensing_range),
        _cell(err_mag),
        "mean",
        algorithm,
        _cell(_mean([r.recall_pct for r in records])),
        _cell(_mean([r.avg_offset for r in records])),
        _cell(_mean([float(r.flips) if r.flips is not None else None for r in records])),
        _cell(
            _mean(
                [
                    float(r.n_clusters_found)
                    if r.n_clusters_found is not None
                    else None
                    for r in records
                ]
            )
        ),
        _cell(_mean([r.runtime_ms for r in records])),
    ]


def run_experiment(cfg: ExperimentConfig, stream: TextIO) -> int:
    """Stream the full sweep as CSV; returns the number of data rows.

    Rows appear per trial (flushed immediately, so an interrupted run
    leaves a valid prefix); each (error, algorithm) cell is followed by
    one aggregated mean row with "mean" in the trial column.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    data_rows = 0
    for err_mag in cfg.err_mags:
        by_algorithm: dict[str, list[TrialRecord]] = {a: [] for a in cfg.algorithms}
        for trial_index in range(cfg.trials):
            for record in run_trial(cfg, trial_index, err_mag):
                writer.writerow(_record_row(record))
                data_rows += 1
                by_algorithm[record.algorithm].append(record)
            stream.flush()
        for algorithm in cfg.algorithms:
            writer.writerow(
                _mean_row(cfg, err_mag, algorithm, by_algorithm[algorithm])
            )
        stream.flush()
    return data_rows
