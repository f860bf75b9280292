import math

import numpy as np
import pytest

from evcontracts import GaussianModel, LicenseFn, RandomStream, null_expectation
from evcontracts.multiround import (
    LicenseGrid,
    RandomizedAlignedStrategy,
    SingleStageStrategy,
    backward_induction,
    episodes_to_csv_rows,
    random_factor_license,
    simulate_policy,
    simulate_strategy,
    supermartingale_check,
)

NULL = GaussianModel(0.0)
GRID = LicenseGrid.from_cap(1.0, 50)
POLICY = backward_induction(4, 0.1, 1.2, GRID)
COSTS = [0.1] * 4


class TestSimulatePolicy:
    def test_deterministic(self):
        a = simulate_policy(POLICY, 1.2, 300, RandomStream(5, 0))
        b = simulate_policy(POLICY, 1.2, 300, RandomStream(5, 0))
        assert np.array_equal(a.profit, b.profit)
        assert np.array_equal(a.licenses, b.licenses)

    def test_replicate_streams_make_prefixes_agree(self):
        small = simulate_policy(POLICY, 1.2, 50, RandomStream(5, 0))
        large = simulate_policy(POLICY, 1.2, 200, RandomStream(5, 0))
        assert np.array_equal(small.profit, large.profit[:50])

    def test_mc_mean_matches_root_value(self):
        episodes = simulate_policy(POLICY, 1.2, 40_000, RandomStream(17, 0))
        se = episodes.profit.std(ddof=1) / math.sqrt(len(episodes))
        assert episodes.profit.mean() == pytest.approx(
            POLICY.root_value, abs=3.5 * se
        )

    def test_null_agent_never_profits_on_average(self):
        episodes = simulate_policy(POLICY, 0.0, 40_000, RandomStream(19, 0))
        se = episodes.profit.std(ddof=1) / math.sqrt(len(episodes))
        assert episodes.profit.mean() <= 3.0 * se

    def test_bookkeeping_identities(self):
        episodes = simulate_policy(POLICY, 1.2, 500, RandomStream(23, 0))
        assert np.allclose(
            episodes.profit,
            episodes.terminal_license + episodes.total_withdrawal - episodes.total_cost,
        )
        assert np.all(episodes.licenses >= -1e-15)
        assert np.all(episodes.total_cost <= sum(POLICY.costs) + 1e-15)
        # cost ledger equals 0.1 per round actually run
        assert np.allclose(episodes.total_cost, 0.1 * episodes.indicators.sum(axis=1))

    def test_record_view(self):
        episodes = simulate_policy(POLICY, 1.2, 20, RandomStream(29, 0))
        record = episodes[3]
        assert record.tau == int(episodes.tau[3])
        assert len(record.licenses) == record.tau
        assert record.profit == pytest.approx(float(episodes.profit[3]))
        if record.tau:
            assert record.terminal_license == record.licenses[-1]

    def test_grid_levels_only(self):
        episodes = simulate_policy(POLICY, 1.2, 500, RandomStream(31, 0))
        scaled = episodes.licenses / GRID.epsilon
        assert np.allclose(scaled, np.rint(scaled), atol=1e-9)

    def test_csv_rows(self):
        episodes = simulate_policy(POLICY, 1.2, 10, RandomStream(37, 0))
        rows = episodes_to_csv_rows(episodes)
        assert len(rows) == 10
        assert rows[0][0] == 0


class TestSimulateStrategy:
    def test_license_recursion_identity(self):
        rng = np.random.default_rng(101)
        strategy = RandomizedAlignedStrategy.draw(rng, 4)
        episodes = simulate_strategy(strategy, 4, COSTS, 0.0, 400, RandomStream(43, 0))
        for r in range(0, 400, 37):
            record = episodes[r]
            level = 0.0
            for k in range(record.tau):
                if record.indicators[k]:
                    factor = strategy.factors[k]
                    base = level + COSTS[k] - record.withdrawals[k]
                    level = base * float(factor(record.evidence[k]))
                else:
                    level = level - record.withdrawals[k]
                assert record.licenses[k] == pytest.approx(level, abs=1e-12)
                assert record.withdrawals[k] >= 0.0

    def test_withdrawals_never_exceed_license(self):
        rng = np.random.default_rng(7)
        strategy = RandomizedAlignedStrategy.draw(rng, 4)
        episodes = simulate_strategy(strategy, 4, COSTS, 0.0, 500, RandomStream(47, 0))
        level = np.zeros(500)
        for k in range(4):
            assert np.all(episodes.withdrawals[:, k] <= level + 1e-12)
            level = episodes.licenses[:, k]

    def test_factor_licenses_are_evalues(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            f = random_factor_license(rng)
            assert null_expectation(f, NULL) == pytest.approx(1.0, abs=1e-9)


class TestSupermartingale:
    def test_dp_policy_under_null_passes(self):
        episodes = simulate_policy(POLICY, 0.0, 30_000, RandomStream(53, 0))
        report = supermartingale_check(episodes, POLICY.costs)
        assert report.passes

    def test_randomized_aligned_strategies_pass(self):
        rng = np.random.default_rng(59)
        for k in range(5):
            strategy = RandomizedAlignedStrategy.draw(rng, 4)
            episodes = simulate_strategy(
                strategy, 4, COSTS, 0.0, 4000, RandomStream(61, k)
            )
            report = supermartingale_check(episodes, COSTS)
            assert report.passes

    def test_misaligned_update_extracts_its_excess(self):
        # single-stage strategy with a factor of null mass 1.2: expected
        # profit is exactly 0.2 times the stage cost
        factor = random_factor_license(np.random.default_rng(67)).scaled(1.2)
        assert null_expectation(factor, NULL) == pytest.approx(1.2, abs=1e-9)
        strategy = SingleStageStrategy(stage=2, factor=factor)
        episodes = simulate_strategy(strategy, 4, COSTS, 0.0, 30_000, RandomStream(71, 0))
        se = episodes.profit.std(ddof=1) / math.sqrt(len(episodes))
        assert episodes.profit.mean() == pytest.approx(0.2 * 0.1, abs=3.0 * se)
        report = supermartingale_check(episodes, COSTS)
        assert not report.passes

    def test_cost_ledger_validation(self):
        episodes = simulate_policy(POLICY, 0.0, 100, RandomStream(73, 0))
        with pytest.raises(ValueError):
            supermartingale_check(episodes, [0.2] * 4)
        with pytest.raises(ValueError):
            supermartingale_check(episodes, [0.1] * 3)


class TestValidation:
    def test_reps_positive(self):
        with pytest.raises(ValueError):
            simulate_policy(POLICY, 1.0, 0, RandomStream(1, 0))

    def test_strategy_needs_cost_per_round(self):
        strategy = SingleStageStrategy(1, LicenseFn([], [1.0]))
        with pytest.raises(ValueError):
            simulate_strategy(strategy, 3, [0.1], 0.0, 10, RandomStream(1, 0))
