"""Scenario-driven Monte Carlo experiment runner.

A scenario fixes (law, function, structure, adversary set, strategy,
n, trials, delta, gamma, seed); the runner samples sources, applies the
attack, decodes, classifies each trial as ok/E1/E2 and aggregates the
error-rate estimate with a Wilson interval.  Reports are a pure function
of (scenario, seed): per-trial seeds are sha256-derived from the master
seed and the trial index, so partial re-runs match.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import __version__ as _version
from .adversary import AttackStrategy, attack, strategy_from_json
from .decoder import (DecoderConfig, TrialTruth, build_decoder_config,
                      classify_error, decode)
from .examples_lib import resolve_example
from .probability import (JointPmf, apply_pointwise, derive_seed,
                          hamming_distortion, sample_iid)
from .structures import AdversaryStructure, TargetFunction


class ScenarioError(ValueError):
    """Malformed scenario file or references."""


@dataclass(frozen=True)
class Scenario:
    pmf: JointPmf
    f: TargetFunction
    structure: AdversaryStructure
    adversary_set: frozenset
    strategy: AttackStrategy
    n: int
    trials: int
    delta: float
    gamma: float
    seed: int
    name: str = "scenario"

    def __post_init__(self):
        if self.adversary_set not in self.structure.sets:
            raise ScenarioError("adversary set not in the structure")
        if self.n < 1 or self.trials < 1:
            raise ScenarioError("n and trials must be >= 1")
        if self.delta <= 0 or self.gamma <= 0:
            raise ScenarioError("delta and gamma must be positive")


def scenario_from_json_dict(d: dict, witness_lookup=None) -> Scenario:
    if "example" in d:
        pmf, f, structure = resolve_example(d["example"])
    else:
        pmf = JointPmf.from_json_dict(d["pmf"])
        f = TargetFunction.from_json_dict(d["function"])
        structure = AdversaryStructure.from_json_dict(d["structure"])
    if "structure" in d and "example" in d:
        structure = AdversaryStructure.from_json_dict(d["structure"])
    if "threshold" in d:
        structure = AdversaryStructure.threshold(structure.k, int(d["threshold"]))
    return Scenario(
        pmf=pmf, f=f, structure=structure,
        adversary_set=frozenset(d.get("adversary_set", [])),
        strategy=strategy_from_json(d.get("strategy", {"kind": "honest"}), witness_lookup),
        n=int(d["n"]), trials=int(d["trials"]),
        delta=float(d.get("delta", 0.1)), gamma=float(d.get("gamma", 0.05)),
        seed=int(d.get("seed", 0)), name=d.get("name", "scenario"),
    )


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    outcome: str            # ok | E1 | E2
    verdict_kind: str
    blamed: int | None
    distortion: float | None


@dataclass
class ExperimentReport:
    name: str
    trials: int
    counts: dict[str, int]
    blame_histogram: dict[int, int]
    eta_hat: float
    wilson_low: float
    wilson_high: float
    viable_precheck: bool
    seed: int
    config_echo: dict
    records: list[TrialRecord] = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = _version

    def core_dict(self) -> dict:
        """Deterministic part (wall clock excluded)."""
        return {
            "name": self.name,
            "trials": self.trials,
            "counts": dict(self.counts),
            "blame_histogram": {str(k): v for k, v in sorted(self.blame_histogram.items())},
            "eta_hat": self.eta_hat,
            "wilson": [self.wilson_low, self.wilson_high],
            "viable_precheck": self.viable_precheck,
            "seed": self.seed,
            "config": self.config_echo,
            "version": self.version,
        }

    def to_json_dict(self) -> dict:
        d = self.core_dict()
        d["wall_clock_sec"] = self.wall_clock
        return d

    def records_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["trial", "outcome", "verdict", "blamed", "distortion"])
        for r in self.records:
            w.writerow([r.trial, r.outcome, r.verdict_kind,
                        "" if r.blamed is None else r.blamed,
                        "" if r.distortion is None else f"{r.distortion:.6f}"])
        return buf.getvalue()


def wilson_interval(errors: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% (by default) score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = errors / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


_CONFIG_CACHE: dict[str, DecoderConfig] = {}


def _config_key(p: JointPmf, f: TargetFunction, structure: AdversaryStructure,
                delta: float, slack: float, mode: str) -> str:
    blob = json.dumps([p.to_json_dict(), f.to_json_dict(), structure.to_json_dict(),
                       delta, slack, mode], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def cached_decoder_config(p: JointPmf, f: TargetFunction, structure: AdversaryStructure,
                          delta: float, slack: float = 1e-7, mode: str = "float",
                          ) -> DecoderConfig:
    key = _config_key(p, f, structure, delta, slack, mode)
    if key not in _CONFIG_CACHE:
        _CONFIG_CACHE[key] = build_decoder_config(p, f, structure, delta,
                                                  mode=mode, slack=slack)
    return _CONFIG_CACHE[key]


def run_scenario(s: Scenario, threads: int = 1, keep_records: bool = True) -> ExperimentReport:
    """Monte Carlo estimate of the decoding error rate under one attack.

    The g-table construction doubles as the viability precheck: a
    construction conflict marks the report non-viable and the conflicted
    collections fall back to f (negative testing is allowed, not fatal).
    """
    start = time.monotonic()
    config = cached_decoder_config(s.pmf, s.f, s.structure, s.delta)
    pmf_float = s.pmf.to_float()

    def one_trial(t: int) -> TrialRecord:
        true_block = sample_iid(pmf_float, s.n, derive_seed(s.seed, "trial", t))
        reported = attack(s.strategy, s.adversary_set, true_block,
                          derive_seed(s.seed, "attack", t))
        verdict = decode(config, reported)
        true_z = apply_pointwise(s.f, true_block)
        truth = TrialTruth(true_block=true_block, adversary_set=s.adversary_set,
                           true_z=true_z)
        outcome = classify_error(verdict, truth, s.gamma)
        dist = None
        if verdict.kind == "estimate":
            dist = hamming_distortion(verdict.estimate, true_z)
        return TrialRecord(trial=t, outcome=outcome, verdict_kind=verdict.kind,
                           blamed=verdict.user, distortion=dist)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one_trial, range(s.trials)))
    else:
        records = [one_trial(t) for t in range(s.trials)]

    counts = {"ok": 0, "E1": 0, "E2": 0}
    blames: dict[int, int] = {}
    for r in records:
        counts[r.outcome] += 1
        if r.blamed is not None:
            blames[r.blamed] = blames.get(r.blamed, 0) + 1
    errors = counts["E1"] + counts["E2"]
    lo, hi = wilson_interval(errors, s.trials)
    echo = {
        "adversary_set": sorted(s.adversary_set),
        "strategy": type(s.strategy).__name__,
        "n": s.n, "trials": s.trials, "delta": s.delta, "gamma": s.gamma,
        "structure_sets": [sorted(x) for x in s.structure.sets],
    }
    return ExperimentReport(
        name=s.name, trials=s.trials, counts=counts, blame_histogram=blames,
        eta_hat=errors / s.trials, wilson_low=lo, wilson_high=hi,
        viable_precheck=config.viable, seed=s.seed, config_echo=echo,
        records=records if keep_records else [],
        wall_clock=time.monotonic() - start,
    )


def sweep(base: Scenario, axis: str, values: Sequence, threads: int = 1,
          ) -> list[ExperimentReport]:
    """One report per value of the swept axis (n, delta or gamma).

    All runs share the base master seed, so per-trial seeds coincide
    across the sweep wherever shapes allow.
    """
    if axis not in ("n", "delta", "gamma"):
        raise ScenarioError(f"cannot sweep axis {axis!r}")
    if not values:
        raise ScenarioError("sweep needs at least one value")
    reports = []
    for v in values:
        v = int(v) if axis == "n" else float(v)
        s = replace(base, **{axis: v}, name=f"{base.name}[{axis}={v}]")
        reports.append(run_scenario(s, threads=threads))
    return reports
