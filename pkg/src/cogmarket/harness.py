"""Monte Carlo harness comparing assignment mechanisms trial by trial.

Every mechanism sees the same utility tables in every trial, so per-trial
differences are purely mechanism effects. All randomness derives from the
scenario seed through counter-based per-trial streams, which makes runs
reproducible down to the byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .assign import AssignmentProblem, brute_force_assign, hungarian_assign, matching_welfare, random_matching
from .channel import ScenarioConfig, build_utility_tables, generate_realization, trial_generator
from .market import (
    compute_demand,
    excess_demand,
    gross_substitutes_check,
    requirement,
    run_english_auction,
    satiated_utility,
    verify_walrasian,
    walrasian_violations,
    _all_bundle_values,
)
from .matching import is_stable, run_stable_matching, verify_unique_pu_optimal, worst_case_bits

logger = logging.getLogger(__name__)

MECHANISMS = ("stable-matching", "english-auction", "hungarian", "random")

CSV_COLUMNS = (
    "mechanism",
    "trial",
    "su_sum_rate",
    "pu_sum_rate",
    "welfare",
    "proposals",
    "demands",
    "iterations",
    "bits",
)


@dataclass(frozen=True)
class TrialRecord:
    """Per-trial metrics of one mechanism.

    proposals and demands are message counts per SU (zero for mechanisms
    without that message type); bits is the total signalling volume.
    """

    mechanism: str
    trial: int
    su_sum_rate: float
    pu_sum_rate: float
    welfare: float
    proposals: float
    demands: float
    iterations: int
    bits: int


def _rates(matching, tables, pu_idle: str):
    su = 0.0
    pu = 0.0
    for l, k in enumerate(matching.channel_of):
        if k is None:
            pu += float(tables.u_pu_free[l] if pu_idle == "free" else tables.u_pu_self[l])
        else:
            su += float(tables.u_su[k, l])
            pu += float(tables.u_pu[l, k])
    return su, pu


def run_experiment(config: ScenarioConfig, mechanisms=MECHANISMS, pu_idle="free", check=True):
    """Run all trials of the scenario; one TrialRecord per (trial, mechanism).

    pu_idle picks the PU sum-rate contribution of unassigned channels:
    "free" uses the interference-free utility, "threshold" the QoS floor.
    With check set, stable matchings are re-verified (a failure raises) and
    auction outcomes are tested against the equilibrium conditions (a
    failure only logs, finite price steps legitimately miss the optimum).
    """
    if pu_idle not in ("free", "threshold"):
        raise ValueError("pu_idle must be 'free' or 'threshold'")
    unknown = set(mechanisms) - set(MECHANISMS)
    if unknown:
        raise ValueError(f"unknown mechanisms: {sorted(unknown)}")
    records = []
    values_tol = config.alpha * config.L
    for trial in range(config.trials):
        realization = generate_realization(config, trial)
        tables = build_utility_tables(realization, config)
        weighted = tables.weighted_values(config.lambda_)
        for mechanism in mechanisms:
            proposals = demands = 0.0
            iterations = bits = 0
            if mechanism == "stable-matching":
                matching, log = run_stable_matching(tables, config.quotas)
                if check and not is_stable(matching, tables, config.quotas):
                    raise RuntimeError(f"unstable matching on trial {trial}")
                proposals = sum(log.proposals_per_su) / config.K
                bits = log.bits_total
            elif mechanism == "english-auction":
                outcome, history = run_english_auction(tables, config)
                matching = outcome.as_matching(config.K)
                terminal = history[-1]
                iterations = terminal.iteration
                demands = terminal.demand_messages_changed / config.K
                bits = terminal.demand_messages_changed * config.L
                if check and not verify_walrasian(outcome, tables, config, values_tol):
                    logger.warning(
                        "trial %d: auction outcome misses equilibrium within %g: %s",
                        trial,
                        values_tol,
                        "; ".join(walrasian_violations(outcome, tables, config, values_tol)),
                    )
            elif mechanism == "hungarian":
                problem = AssignmentProblem(values=weighted, quotas=config.quotas)
                matching, _ = hungarian_assign(problem)
            else:  # random
                rng = trial_generator(config.seed, trial, stream=1)
                matching = random_matching(config.quotas, config.L, rng)
            su, pu = _rates(matching, tables, pu_idle)
            records.append(
                TrialRecord(
                    mechanism=mechanism,
                    trial=trial,
                    su_sum_rate=su,
                    pu_sum_rate=pu,
                    welfare=matching_welfare(matching, weighted),
                    proposals=proposals,
                    demands=demands,
                    iterations=int(iterations),
                    bits=int(bits),
                )
            )
    return records


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_records(records, stream, fmt="csv") -> None:
    """Serialize TrialRecords; csv uses fixed columns and 12 significant
    digits, json emits one object per record."""
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])
    elif fmt == "json":
        json.dump([asdict(rec) for rec in records], stream, indent=1)
        stream.write("\n")
    else:
        raise ValueError("format must be 'csv' or 'json'")


def records_to_string(records, fmt="csv") -> str:
    buf = io.StringIO()
    write_records(records, buf, fmt)
    return buf.getvalue()


def read_records(stream) -> list:
    """Inverse of write_records for the csv format."""
    out = []
    for row in csv.DictReader(stream):
        out.append(
            TrialRecord(
                mechanism=row["mechanism"],
                trial=int(row["trial"]),
                su_sum_rate=float(row["su_sum_rate"]),
                pu_sum_rate=float(row["pu_sum_rate"]),
                welfare=float(row["welfare"]),
                proposals=float(row["proposals"]),
                demands=float(row["demands"]),
                iterations=int(row["iterations"]),
                bits=int(row["bits"]),
            )
        )
    return out


SWEEP_AXES = ("snr_db", "alpha", "K", "quota", "lambda")

_METRICS = ("su_sum_rate", "pu_sum_rate", "welfare", "proposals", "demands", "iterations", "bits")


def _with_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "snr_db":
        return config.replace(snr_db=float(value))
    if axis == "alpha":
        return config.replace(alpha=float(value))
    if axis == "K":
        k = int(value)
        return config.replace(K=k, quotas=(config.quotas[0],) * k)
    if axis == "quota":
        return config.replace(quotas=(int(value),) * config.K)
    if axis == "lambda":
        return config.replace(lambda_=float(value))
    raise ValueError(f"axis must be one of {SWEEP_AXES}")


def sweep(config: ScenarioConfig, axis: str, values, mechanisms=MECHANISMS, pu_idle="free", check=True):
    """Re-run the experiment along one axis; aggregates mean and standard
    error per mechanism and metric. Returns one dict row per
    (axis value, mechanism)."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    rows = []
    for value in values:
        records = run_experiment(_with_axis(config, axis, value), mechanisms, pu_idle, check)
        for mechanism in mechanisms:
            sample = [r for r in records if r.mechanism == mechanism]
            row = {"axis": axis, "value": value, "mechanism": mechanism, "n": len(sample)}
            for metric in _METRICS:
                data = np.array([getattr(r, metric) for r in sample], dtype=float)
                row[f"{metric}_mean"] = float(data.mean())
                row[f"{metric}_se"] = float(data.std(ddof=1) / math.sqrt(len(data))) if len(data) > 1 else 0.0
            rows.append(row)
    return rows


def write_sweep(rows, stream, fmt="csv") -> None:
    if not rows:
        raise ValueError("no sweep rows to write")
    columns = list(rows[0])
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    elif fmt == "json":
        json.dump(rows, stream, indent=1)
        stream.write("\n")
    else:
        raise ValueError("format must be 'csv' or 'json'")


def lambda_grid(points: int = 21):
    """Evenly spaced weights covering both ends of the rate region."""
    return [i / (points - 1) for i in range(points)]


def invariant_suite(seed: int = 0, trials: int = 25):
    """Randomized self-checks over small instances.

    Returns (name, passed, detail) triples; used by the CLI verify command.
    """
    results = []

    def check(name, fn):
        try:
            fn()
            results.append((name, True, ""))
        except AssertionError as exc:
            results.append((name, False, str(exc)))

    def stable_matching_checks():
        config = ScenarioConfig(K=6, L=8, quotas=2, trials=trials, seed=seed)
        ceiling = config.K * worst_case_bits(config.L)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            matching, log = run_stable_matching(tables, config.quotas)
            assert is_stable(matching, tables, config.quotas), f"trial {trial} unstable"
            assert log.bits_total <= ceiling, f"trial {trial} exceeds {ceiling} bits"

    def full_quota_checks():
        config = ScenarioConfig(K=4, L=5, quotas=5, trials=trials, seed=seed + 1)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            matching, _ = run_stable_matching(tables, config.quotas, thresholds=[0.0] * config.L)
            assert verify_unique_pu_optimal(matching, tables, config.quotas), f"trial {trial}"

    def demand_checks():
        config = ScenarioConfig(K=3, L=8, quotas=3, trials=trials, seed=seed + 2)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            rng = trial_generator(config.seed, trial, stream=2)
            prices = rng.uniform(0.05, 1.5, size=config.L)
            for k in range(config.K):
                quota = config.quotas[k]
                demand = compute_demand(k, prices, tables, config.lambda_, quota)
                net = _all_bundle_values(
                    tables.weighted_values(config.lambda_)[k], prices, quota
                )
                best = net.max()
                mask = sum(1 << l for l in demand)
                assert net[mask] == best, f"trial {trial} SU {k} demand not optimal"
                maximizers = np.flatnonzero(net == best)
                assert all(mask & int(m) == mask for m in maximizers), (
                    f"trial {trial} SU {k} demand not minimal"
                )

    def excess_checks():
        config = ScenarioConfig(K=4, L=7, quotas=2, trials=trials, seed=seed + 3)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            rng = trial_generator(config.seed, trial, stream=2)
            prices = rng.uniform(0.05, 1.5, size=config.L)
            demands = [
                compute_demand(k, prices, tables, config.lambda_, config.quotas[k])
                for k in range(config.K)
            ]
            z = excess_demand(demands)
            scores = {}
            for mask in range(1 << config.L):
                subset = frozenset(l for l in range(config.L) if (mask >> l) & 1)
                scores[subset] = sum(requirement(d, subset) for d in demands) - len(subset)
            best = max(scores.values())
            assert scores[z] == best, f"trial {trial} excess set not a maximizer"
            for subset, score in scores.items():
                if score == best:
                    assert z <= subset, f"trial {trial} excess set not minimal"

    def auction_checks():
        config = ScenarioConfig(K=3, L=5, quotas=1, trials=trials, seed=seed + 4, alpha=0.01)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            outcome, history = run_english_auction(tables, config)
            bound = config.L * tables.weighted_values(config.lambda_).max() / config.alpha + config.L
            assert history[-1].iteration <= bound, f"trial {trial} ran too long"
            tol = config.alpha * config.L
            assert verify_walrasian(outcome, tables, config, tol), (
                f"trial {trial}: {walrasian_violations(outcome, tables, config, tol)}"
            )

    def hungarian_checks():
        config = ScenarioConfig(K=3, L=5, quotas=(1, 2, 1), trials=trials, seed=seed + 5)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            problem = AssignmentProblem.from_tables(tables, config.lambda_, config.quotas)
            _, fast = hungarian_assign(problem)
            _, exact = brute_force_assign(problem)
            assert fast == exact, f"trial {trial}: {fast} != {exact}"

    def substitutes_checks():
        config = ScenarioConfig(K=3, L=6, quotas=2, trials=trials, seed=seed + 6)
        for trial in range(config.trials):
            tables = build_utility_tables(generate_realization(config, trial), config)
            rng = trial_generator(config.seed, trial, stream=2)
            prices = rng.uniform(0.05, 1.0, size=config.L)
            bumps = rng.uniform(0.0, 1.0, size=config.L) * rng.integers(0, 2, size=config.L)
            higher = prices + bumps
            for k in range(config.K):
                assert gross_substitutes_check(
                    k, prices, higher, tables, config.lambda_, config.quotas[k]
                ), f"trial {trial} SU {k}"
                picks = sorted(rng.choice(config.L, size=4, replace=False))
                small, large = frozenset(picks[:2]), frozenset(picks)
                assert satiated_utility(k, small, tables, config.lambda_, 2) <= satiated_utility(
                    k, large, tables, config.lambda_, 2
                ) + 1e-12, f"trial {trial} SU {k} not monotone"

    def reproducibility_checks():
        config = ScenarioConfig(K=3, L=4, quotas=1, trials=5, seed=seed + 7)
        first = records_to_string(run_experiment(config))
        second = records_to_string(run_experiment(config))
        assert first == second, "repeated runs disagree"

    check("stable matching stability and signalling bound", stable_matching_checks)
    check("full-quota outcome is the per-channel PU optimum", full_quota_checks)
    check("greedy demand equals exhaustive demand", demand_checks)
    check("excess demand set is the minimal maximizer", excess_checks)
    check("auction terminates at a verified equilibrium", auction_checks)
    check("hungarian matches brute force welfare", hungarian_checks)
    check("gross substitutes and bundle monotonicity", substitutes_checks)
    check("byte-identical reruns", reproducibility_checks)
    return results
