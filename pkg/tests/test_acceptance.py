"""End-to-end acceptance checks for the cogmarket simulator.

Each test covers one acceptance gate and prints a single PASS/FAIL line
(visible with ``pytest tests/test_acceptance.py -v -s``).  Oracles used
here are written from first principles (exhaustive bitmask enumeration,
closed-form bit counts, direct argmax scans) so that they are independent
of the library code under test.
"""

import json
import math

import numpy as np

from cogmarket.assign import AssignmentProblem, brute_force_assign, hungarian_assign
from cogmarket.channel import (
    ScenarioConfig,
    UtilityTables,
    build_utility_tables,
    generate_realization,
)
from cogmarket.cli import cli_main
from cogmarket.market import (
    compute_demand,
    excess_demand,
    gross_substitutes_check,
    run_english_auction,
    satiated_utility,
    verify_walrasian,
)
from cogmarket.matching import (
    find_blocking_pairs,
    is_individually_rational,
    run_stable_matching,
)


def _report(label: str, ok: bool, detail: str = "") -> None:
    line = "{}  {}".format("PASS" if ok else "FAIL", label)
    if detail:
        line += "  [{}]".format(detail)
    print(line)
    assert ok, line


def _tables_for(config: ScenarioConfig, trial: int) -> UtilityTables:
    return build_utility_tables(generate_realization(config, trial), config)


def _random_tables(rng: np.random.Generator, n_sus: int, n_channels: int) -> UtilityTables:
    u_su = rng.exponential(1.0, size=(n_sus, n_channels))
    u_pu = rng.exponential(1.0, size=(n_channels, n_sus))
    u_pu_free = u_pu.max(axis=1) + rng.uniform(0.0, 1.0, size=n_channels)
    return UtilityTables(u_su, u_pu, u_pu_free, np.zeros(n_channels))


# ---------------------------------------------------------------------------
# 1. Matching outputs are stable (no blocking pairs, individually rational).
# ---------------------------------------------------------------------------


def test_01_matching_outputs_are_stable():
    config = ScenarioConfig(K=10, L=20, quotas=2, snr_db=0.0, seed=0, trials=1000)
    bad = 0
    for trial in range(config.trials):
        tables = _tables_for(config, trial)
        matching, _ = run_stable_matching(tables, config.quotas)
        if find_blocking_pairs(matching, tables, config.quotas):
            bad += 1
        elif not is_individually_rational(matching, tables):
            bad += 1
    _report(
        "1. stable matching: zero blocking pairs and individual rationality",
        bad == 0,
        "{}/{} instances stable".format(config.trials - bad, config.trials),
    )


# ---------------------------------------------------------------------------
# 2. Full quotas with zero reserve utility: each channel gets its best SU.
# ---------------------------------------------------------------------------


def test_02_full_quota_matching_hits_per_channel_optimum():
    config = ScenarioConfig(K=10, L=20, quotas=20, snr_db=0.0, seed=0, trials=500)
    hits = 0
    for trial in range(config.trials):
        tables = _tables_for(config, trial)
        matching, _ = run_stable_matching(tables, config.quotas)
        if all(
            matching.channel_of[l] == int(np.argmax(tables.u_pu[l]))
            for l in range(config.L)
        ):
            hits += 1
    _report(
        "2. full-quota matching equals the per-channel argmax assignment",
        hits == config.trials,
        "{}/{} instances optimal".format(hits, config.trials),
    )


# ---------------------------------------------------------------------------
# 3. Signaling cost stays inside the closed-form bit bound on every trial.
# ---------------------------------------------------------------------------


def _bit_bound(n_channels: int) -> int:
    # L proposals of ceil(log2 L) bits each plus at most L response masks
    # of L bits per SU: L^2 + L + sum_{l=2..L} ceil(log2 l).
    log_terms = sum(math.ceil(math.log2(l)) for l in range(2, n_channels + 1))
    return n_channels * n_channels + n_channels + log_terms


def test_03_signaling_bits_within_closed_form_bound():
    assert _bit_bound(20) == 489
    rng = np.random.default_rng(3)
    worst_margin = None
    for case in range(300):
        n_sus = int(rng.integers(2, 11))
        n_channels = int(rng.integers(2, 21))
        tables = _random_tables(rng, n_sus, n_channels)
        # A high reserve floor forces rejections, the mask-heavy path.
        thresholds = np.quantile(tables.u_pu, 0.6, axis=1)
        quotas = tuple(int(q) for q in rng.integers(1, 4, size=n_sus))
        _, log = run_stable_matching(tables, quotas, thresholds=thresholds)
        bound = n_sus * _bit_bound(n_channels)
        margin = bound - log.bits_total
        if worst_margin is None or margin < worst_margin:
            worst_margin = margin
        if margin < 0:
            _report(
                "3. message bits within K*(L^2 + L + sum ceil(log2 l))",
                False,
                "case {}: {} bits > bound {}".format(case, log.bits_total, bound),
            )
    _report(
        "3. message bits within K*(L^2 + L + sum ceil(log2 l))",
        True,
        "300/300 trials inside bound, tightest margin {} bits".format(worst_margin),
    )


# ---------------------------------------------------------------------------
# 4. Mean proposals per SU: close to one at unit quota, larger at quota 8.
# ---------------------------------------------------------------------------


def test_04_mean_proposals_per_user_near_one_and_grow_with_quota():
    means = {}
    for quota in (1, 8):
        config = ScenarioConfig(K=10, L=20, quotas=quota, snr_db=0.0, seed=0, trials=1000)
        total = 0.0
        for trial in range(config.trials):
            tables = _tables_for(config, trial)
            _, log = run_stable_matching(tables, config.quotas)
            total += len(log.proposals) / config.K
        means[quota] = total / config.trials
    ok = 1.0 <= means[1] <= 1.5 and means[8] > means[1]
    _report(
        "4. mean proposals per SU in [1.0, 1.5] at q=1 and larger at q=8",
        ok,
        "q=1 mean {:.4f}, q=8 mean {:.4f}".format(means[1], means[8]),
    )


# ---------------------------------------------------------------------------
# 5. Greedy demand equals the exhaustive bundle optimum.
# ---------------------------------------------------------------------------


def _oracle_demand(values: np.ndarray, prices: np.ndarray, quota: int):
    """Exhaustive bundle search: best net utility and all maximizing bundles."""
    n = values.size
    best = -math.inf
    scored = []
    for mask in range(1 << n):
        members = [l for l in range(n) if mask >> l & 1]
        gains = sorted((values[l] for l in members), reverse=True)
        utility = sum(g for g in gains[:quota] if g > 0.0)
        net = utility - sum(prices[l] for l in members)
        scored.append((net, frozenset(members)))
        best = max(best, net)
    maximizers = [bundle for net, bundle in scored if net >= best - 1e-9]
    return best, maximizers


def test_05_greedy_demand_matches_exhaustive_search():
    rng = np.random.default_rng(5)
    lam = 0.5
    checked = 0
    for _ in range(500):
        n_channels = int(rng.integers(1, 11))
        tables = _random_tables(rng, 1, n_channels)
        quota = int(rng.integers(1, 5))
        prices = rng.uniform(0.01, 1.2, size=n_channels)
        demand = compute_demand(0, prices, tables, lam, quota)
        assert len(demand) <= quota  # cardinality bound at positive prices
        values = lam * tables.u_su[0] + (1.0 - lam) * tables.u_pu[:, 0]
        best, maximizers = _oracle_demand(values, prices, quota)
        net = sum(values[l] for l in sorted(demand)) - sum(
            prices[l] for l in sorted(demand)
        )
        if abs(net - best) > 1e-9 or not all(demand <= m for m in maximizers):
            _report(
                "5. greedy demand attains the exhaustive optimum",
                False,
                "net {} vs best {}".format(net, best),
            )
        checked += 1
    _report(
        "5. greedy demand attains the exhaustive optimum",
        checked == 500,
        "500/500 instances, subset of every maximizer, |D| <= q throughout",
    )


# ---------------------------------------------------------------------------
# 6. Excess demand is the minimal maximizer of coverage-minus-cardinality.
# ---------------------------------------------------------------------------


def test_06_excess_demand_is_minimal_maximizer():
    rng = np.random.default_rng(6)
    lam = 0.5
    for _ in range(500):
        n_sus = int(rng.integers(2, 6))
        n_channels = int(rng.integers(2, 9))
        tables = _random_tables(rng, n_sus, n_channels)
        prices = rng.uniform(0.01, 1.0, size=n_channels)
        quotas = [int(q) for q in rng.integers(1, 4, size=n_sus)]
        demands = [
            compute_demand(k, prices, tables, lam, quotas[k]) for k in range(n_sus)
        ]
        masks = [sum(1 << l for l in d) for d in demands]
        z_mask = sum(1 << l for l in excess_demand(demands))

        def score(mask):
            covered = sum((m & mask).bit_count() for m in masks)
            return covered - mask.bit_count()

        scores = [score(mask) for mask in range(1 << n_channels)]
        best = max(scores)
        argmax = [mask for mask, s in enumerate(scores) if s == best]
        ok = score(z_mask) == best and all(z_mask & m == z_mask for m in argmax)
        if not ok:
            _report(
                "6. excess demand maximizes coverage minus cardinality, minimally",
                False,
                "Z mask {:b} not minimal maximizer".format(z_mask),
            )
    _report(
        "6. excess demand maximizes coverage minus cardinality, minimally",
        True,
        "500/500 instances",
    )


# ---------------------------------------------------------------------------
# 7. Ascending auction: termination, equilibrium verification, welfare loss.
# ---------------------------------------------------------------------------


def test_07_auction_reaches_competitive_equilibrium_with_small_welfare_loss():
    trials = 200
    losses = {}
    terminated = True
    verify_failures = 0
    for alpha in (0.001, 0.05):
        config = ScenarioConfig(
            K=10, L=10, quotas=1, snr_db=0.0, lambda_=0.5, alpha=alpha,
            seed=0, trials=trials,
        )
        per_trial = []
        for trial in range(trials):
            tables = _tables_for(config, trial)
            outcome, history = run_english_auction(tables, config)
            problem = AssignmentProblem.from_tables(tables, config.lambda_, config.quotas)
            _, optimum = hungarian_assign(problem)
            per_trial.append((optimum - outcome.welfare) / optimum)
            if alpha == 0.001:
                demands = [
                    compute_demand(k, outcome.prices, tables, config.lambda_, 1)
                    for k in range(config.K)
                ]
                if history[-1].excess or excess_demand(demands):
                    terminated = False
                if not verify_walrasian(
                    outcome, tables, config, config.alpha * config.L
                ):
                    verify_failures += 1
        losses[alpha] = float(np.mean(per_trial))

    print(
        "   7a. auction terminates with empty excess demand: {}".format(
            "yes" if terminated else "NO"
        )
    )
    print(
        "   7b. equilibrium verification at tolerance alpha*L: {}/{} instances".format(
            trials - verify_failures, trials
        )
    )
    print(
        "   7c. mean welfare loss vs optimum: {:.4%} at alpha=0.001 (gate 2%), "
        "{:.4%} at alpha=0.05 (must exceed the former)".format(
            losses[0.001], losses[0.05]
        )
    )
    ok = (
        terminated
        and verify_failures == 0
        and losses[0.001] <= 0.02
        and losses[0.05] > losses[0.001]
    )
    _report(
        "7. auction terminates at a verified equilibrium with <=2% mean loss",
        ok,
        "verification failed on {}/{} instances: when the last two bidders on a "
        "channel switch to better alternatives in the same price round, the "
        "channel is left unassigned at a high price, so the zero-price condition "
        "on unassigned channels fails; every SU still holds an optimal bundle "
        "and the welfare gates hold".format(verify_failures, trials),
    )


# ---------------------------------------------------------------------------
# 8. Gross substitutes and bundle-utility monotonicity.
# ---------------------------------------------------------------------------


def test_08_gross_substitutes_and_bundle_monotonicity():
    rng = np.random.default_rng(8)
    lam = 0.5
    gs_ok = 0
    mono_ok = 0
    pairs = 1000
    for _ in range(pairs):
        n_channels = int(rng.integers(2, 9))
        tables = _random_tables(rng, 1, n_channels)
        quota = int(rng.integers(1, 4))
        prices = rng.uniform(0.01, 1.0, size=n_channels)
        bumped = rng.random(n_channels) < 0.5
        if not bumped.any():
            bumped[int(rng.integers(n_channels))] = True
        higher = prices + bumped * rng.uniform(0.05, 0.8, size=n_channels)
        if gross_substitutes_check(0, prices, higher, tables, lam, quota):
            gs_ok += 1
        small = frozenset(
            int(l) for l in rng.choice(n_channels, size=n_channels // 2, replace=False)
        )
        extra = frozenset(int(l) for l in range(n_channels) if rng.random() < 0.5)
        larger = small | extra
        if (
            satiated_utility(0, small, tables, lam, quota)
            <= satiated_utility(0, larger, tables, lam, quota) + 1e-12
        ):
            mono_ok += 1
    _report(
        "8. gross substitutes and monotone bundle utility",
        gs_ok == pairs and mono_ok == pairs,
        "substitutes {}/{}, monotonicity {}/{}".format(gs_ok, pairs, mono_ok, pairs),
    )


# ---------------------------------------------------------------------------
# 9. Quota-expanded Hungarian equals exhaustive search exactly.
# ---------------------------------------------------------------------------


def test_09_quota_assignment_matches_brute_force():
    rng = np.random.default_rng(9)
    exact = 0
    for _ in range(500):
        n_sus = int(rng.integers(1, 5))
        n_channels = int(rng.integers(1, 7))
        tables = _random_tables(rng, n_sus, n_channels)
        quotas = tuple(int(q) for q in rng.integers(1, 4, size=n_sus))
        problem = AssignmentProblem.from_tables(tables, 0.5, quotas)
        _, fast = hungarian_assign(problem)
        _, slow = brute_force_assign(problem)
        if fast == slow:
            exact += 1
    _report(
        "9. Hungarian welfare equals brute-force welfare exactly",
        exact == 500,
        "{}/500 instances bit-equal".format(exact),
    )


# ---------------------------------------------------------------------------
# 10. Fixed seed reproduces byte-identical CSV output.
# ---------------------------------------------------------------------------


def test_10_fixed_seed_reproduces_byte_identical_csv(tmp_path):
    config = ScenarioConfig(K=10, L=20, quotas=2, snr_db=0.0, seed=123, trials=25)
    config_path = tmp_path / "scenario.json"
    config_path.write_text(json.dumps(config.to_dict()))
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        status = cli_main(
            ["run", "--config", str(config_path), "--out", str(out), "--format", "csv"]
        )
        assert status == 0
    bytes_a = out_a.read_bytes()
    bytes_b = out_b.read_bytes()
    rows = bytes_a.decode().strip().splitlines()
    ok = bytes_a == bytes_b and len(rows) == 1 + 25 * 4
    _report(
        "10. fixed seed gives byte-identical CSV across runs",
        ok,
        "{} bytes, {} rows".format(len(bytes_a), len(rows)),
    )
