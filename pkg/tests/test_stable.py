"""Tests for the stacked heavy-tailed process model."""

import itertools

import numpy as np
import pytest
from scipy import stats as sps

from htlpp.continuum import truncated_T_values
from htlpp.lattice import LatticeGrid, passage_time
from htlpp.stable import (
    ProcessGrid,
    StableSpec,
    directed_L,
    range_sup_weights,
    rescaled_L,
    simulate_processes,
    tail_estimate,
    top_jump_lower_bound,
)
from htlpp.stats import ks_two_sample, split_stream


def brute_partition_value(inc):
    """Best ordered-interval split by exhaustive enumeration of the cuts."""
    n, k = inc.shape
    totals = np.zeros((n, k + 1))
    totals[:, 1:] = np.cumsum(inc, axis=1)
    best = -np.inf
    for cuts in itertools.combinations_with_replacement(range(k + 1), n - 1):
        ends = (0,) + cuts + (k,)
        best = max(
            best,
            sum(totals[i, ends[i + 1]] - totals[i, ends[i]] for i in range(n)),
        )
    return best


def plain_grid(inc, m=1, delta=1.0):
    inc = np.asarray(inc, dtype=np.float64)
    return ProcessGrid(
        n=inc.shape[0],
        m=m,
        increments=inc,
        jumps=(np.zeros((0, 2)),) * inc.shape[0],
        delta=delta,
    )


class TestStableSpec:
    def test_domain_errors(self):
        with pytest.raises(ValueError):
            StableSpec(alpha=0.0, c_plus=1.0, c_minus=0.0, delta=0.1)
        with pytest.raises(ValueError):
            StableSpec(alpha=2.0, c_plus=1.0, c_minus=0.0, delta=0.1)
        with pytest.raises(ValueError):
            StableSpec(alpha=1.0, c_plus=0.0, c_minus=0.0, delta=0.1)
        with pytest.raises(ValueError):
            StableSpec(alpha=1.0, c_plus=1.0, c_minus=-0.5, delta=0.1)
        with pytest.raises(ValueError):
            StableSpec(alpha=1.0, c_plus=1.0, c_minus=0.0, delta=0.0)

    def test_jump_rates(self):
        spec = StableSpec(alpha=1.5, c_plus=1.0, c_minus=0.5, delta=0.01)
        assert spec.rate_above(2.0) == pytest.approx(1.5 / 1.5 * 2.0**-1.5)
        assert spec.positive_rate_above(2.0) == pytest.approx(1.0 / 1.5 * 2.0**-1.5)
        assert spec.total_rate == pytest.approx(spec.rate_above(0.01))
        with pytest.raises(ValueError):
            spec.rate_above(0.0)
        with pytest.raises(ValueError):
            spec.positive_rate_above(-1.0)

    def test_budget_constructor_hits_the_rate(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.5, budget=321.0)
        assert spec.total_rate == pytest.approx(321.0)
        with pytest.raises(ValueError):
            StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=0.0)

    def test_small_jump_std(self):
        spec = StableSpec(alpha=1.5, c_plus=1.0, c_minus=1.0, delta=0.04)
        assert spec.small_jump_std**2 == pytest.approx(2.0 * 0.04**0.5 / 0.5)

    def test_drift_regimes(self):
        low = StableSpec(alpha=0.5, c_plus=1.0, c_minus=0.0, delta=0.01)
        assert low.drift == pytest.approx(0.01**0.5 / 0.5)
        mid = StableSpec(alpha=1.0, c_plus=2.0, c_minus=1.0, delta=0.01)
        assert mid.drift == pytest.approx(np.log(0.01))
        high = StableSpec(alpha=1.5, c_plus=1.0, c_minus=0.0, delta=0.01)
        assert high.drift == pytest.approx(-(0.01**-0.5) / 0.5)
        for alpha in (0.5, 1.0, 1.5):
            sym = StableSpec(alpha=alpha, c_plus=1.0, c_minus=1.0, delta=0.01)
            assert sym.drift == 0.0

    def test_centered_jumps_have_mean_zero(self):
        # above 1 the retained jumps plus the surrogate drift cancel exactly
        spec = StableSpec(alpha=1.5, c_plus=2.0, c_minus=0.5, delta=0.05)
        mean_jumps = (
            (spec.c_plus - spec.c_minus)
            * spec.delta ** (1.0 - spec.alpha)
            / (spec.alpha - 1.0)
        )
        assert spec.drift + mean_jumps == pytest.approx(0.0, abs=1e-12)


class TestProcessGrid:
    def test_validation(self):
        ok = np.zeros((2, 6))
        none = (np.zeros((0, 2)),) * 2
        ProcessGrid(n=2, m=3, increments=ok, jumps=none, delta=1.0)
        with pytest.raises(ValueError):
            ProcessGrid(n=2, m=4, increments=ok, jumps=none, delta=1.0)
        with pytest.raises(ValueError):
            ProcessGrid(n=3, m=3, increments=ok, jumps=none, delta=1.0)
        with pytest.raises(ValueError):
            ProcessGrid(n=2, m=3, increments=ok, jumps=none[:1], delta=1.0)
        with pytest.raises(ValueError):
            ProcessGrid(n=2, m=3, increments=ok, jumps=none, delta=0.0)
        bad = ok.copy()
        bad[0, 0] = np.inf
        with pytest.raises(ValueError):
            ProcessGrid(n=2, m=3, increments=bad, jumps=none, delta=1.0)

    def test_jump_record_validation(self):
        inc = np.zeros((1, 4))
        good = (np.array([[0.5, 2.0], [1.5, -3.0]]),)
        g = ProcessGrid(n=1, m=2, increments=inc, jumps=good, delta=1.0)
        assert g.window == 2 and g.steps == 4
        with pytest.raises(ValueError):  # below the cutoff
            ProcessGrid(
                n=1, m=2, increments=inc, jumps=(np.array([[0.5, 0.5]]),), delta=1.0
            )
        with pytest.raises(ValueError):  # out of window
            ProcessGrid(
                n=1, m=2, increments=inc, jumps=(np.array([[2.5, 2.0]]),), delta=1.0
            )
        with pytest.raises(ValueError):  # unsorted
            ProcessGrid(
                n=1,
                m=2,
                increments=inc,
                jumps=(np.array([[1.5, 2.0], [0.5, 2.0]]),),
                delta=1.0,
            )

    def test_simulate_domain_errors(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=10.0)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            simulate_processes(spec, 0, 5, rng)
        with pytest.raises(ValueError):
            simulate_processes(spec, 2, 0, rng)
        with pytest.raises(ValueError):
            simulate_processes(spec, 2, 5, rng, window=0)

    def test_simulated_grid_shape_and_records(self):
        spec = StableSpec.for_jump_budget(1.2, 1.0, 0.5, budget=40.0)
        g = simulate_processes(spec, 4, 6, np.random.default_rng(8))
        assert g.increments.shape == (4, 24)
        assert g.window == 4
        for jumps in g.jumps:
            assert np.all(np.abs(jumps[:, 1]) > spec.delta)
            assert np.all(np.diff(jumps[:, 0]) >= 0.0)
            assert np.all((jumps[:, 0] >= 0.0) & (jumps[:, 0] <= 4.0))
        wide = simulate_processes(spec, 4, 6, np.random.default_rng(8), window=9)
        assert wide.increments.shape == (4, 54)

    def test_no_negative_jumps_when_c_minus_zero(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=60.0)
        g = simulate_processes(spec, 5, 4, np.random.default_rng(21))
        total = 0
        for jumps in g.jumps:
            assert np.all(jumps[:, 1] > 0.0)
            total += len(jumps)
        assert total > 0

    def test_reproducible_from_seed(self):
        spec = StableSpec.for_jump_budget(0.8, 1.0, 0.3, budget=30.0)
        a = simulate_processes(spec, 3, 5, np.random.default_rng(77))
        b = simulate_processes(spec, 3, 5, np.random.default_rng(77))
        assert np.array_equal(a.increments, b.increments)
        for ja, jb in zip(a.jumps, b.jumps):
            assert np.array_equal(ja, jb)


@pytest.fixture(scope="module")
def unit_block_sim():
    # 100 processes over 100 units = 10^4 unit blocks in one realization
    spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=200.0)
    grid = simulate_processes(spec, 100, 1, np.random.default_rng(5), window=100)
    return spec, grid


class TestJumpLaw:
    def test_rate_above_threshold_matches(self, unit_block_sim):
        spec, grid = unit_block_sim
        x = 0.303
        counts = self._block_counts(grid, x)
        mu = spec.positive_rate_above(x)
        se = counts.std() / np.sqrt(counts.size)
        assert abs(counts.mean() - mu) < 3.0 * se

    def test_block_counts_are_poisson(self, unit_block_sim):
        spec, grid = unit_block_sim
        x = 0.303
        flat = self._block_counts(grid, x).ravel()
        mu = spec.positive_rate_above(x)
        obs = np.bincount(flat)
        exp = sps.poisson.pmf(np.arange(obs.size), mu) * flat.size
        while exp[-1] < 5.0 and exp.size > 2:
            exp[-2] += exp[-1]
            obs[-2] += obs[-1]
            exp, obs = exp[:-1], obs[:-1]
        exp *= obs.sum() / exp.sum()
        assert sps.chisquare(obs, exp).pvalue > 0.001

    @staticmethod
    def _block_counts(grid, x):
        counts = np.zeros((grid.n, grid.window), dtype=np.int64)
        for i, jumps in enumerate(grid.jumps):
            above = jumps[jumps[:, 1] > x]
            blocks = np.minimum(above[:, 0].astype(np.int64), grid.window - 1)
            np.add.at(counts[i], blocks, 1)
        return counts


class TestTruncationRefinement:
    def test_halved_delta_extends_the_jump_list(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.5, budget=50.0)
        half = StableSpec(spec.alpha, spec.c_plus, spec.c_minus, spec.delta / 2.0)
        a = simulate_processes(spec, 2, 10, np.random.default_rng(42))
        b = simulate_processes(half, 2, 10, np.random.default_rng(42))
        for ja, jb in zip(a.jumps, b.jumps):
            assert len(jb) >= len(ja)
            keep = np.abs(jb[:, 1]) > spec.delta
            assert np.allclose(jb[keep], ja)

    def test_correction_variance_matches_annulus(self):
        # the surrogate swap inflates the correction variance by the factor
        # (sd - sd/2^((2-a)/2))^2 / annulus, ~3.5% at alpha = 1.8
        alpha = 1.8
        spec = StableSpec.for_jump_budget(alpha, 1.0, 0.5, budget=150.0)
        half = StableSpec(alpha, 1.0, 0.5, spec.delta / 2.0)
        diffs = np.empty(2000)
        for r in range(diffs.size):
            a = simulate_processes(spec, 1, 20, split_stream(909, r), window=1)
            b = simulate_processes(half, 1, 20, split_stream(909, r), window=1)
            diffs[r] = a.increments.sum() - b.increments.sum()
        annulus = (
            (spec.c_plus + spec.c_minus)
            * (spec.delta ** (2 - alpha) - (spec.delta / 2) ** (2 - alpha))
            / (2 - alpha)
        )
        assert np.var(diffs) == pytest.approx(annulus, rel=0.10)


class TestDirectedL:
    def test_single_process_is_the_full_increment(self):
        # both interval ends are pinned, so one process spans the window
        rng = np.random.default_rng(3)
        inc = rng.normal(size=(1, 12))
        assert directed_L(plain_grid(inc, m=3)) == pytest.approx(inc.sum())

    def test_zero_increments_give_zero(self):
        assert directed_L(plain_grid(np.zeros((3, 9)), m=3)) == 0.0

    def test_matches_cut_enumeration(self):
        rng = np.random.default_rng(14)
        for _ in range(60):
            n = int(rng.integers(1, 5))
            k = int(rng.integers(1, 7))
            inc = rng.normal(size=(n, k))
            got = directed_L(plain_grid(inc))
            assert got == pytest.approx(brute_partition_value(inc), abs=1e-12)

    def test_hand_example(self):
        inc = np.array([[2.0, -1.0, 0.5, 0.0], [-3.0, 1.0, -0.5, 4.0]])
        # best cut: first process takes the first step, second takes the rest
        assert directed_L(plain_grid(inc, m=2)) == pytest.approx(6.5)

    def test_refining_the_grid_never_decreases_L(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=200.0)
        for s in range(40):
            fine = simulate_processes(spec, 6, 24, np.random.default_rng(2000 + s))
            coarse = ProcessGrid(
                n=6,
                m=12,
                increments=fine.increments.reshape(6, -1, 2).sum(axis=2),
                jumps=fine.jumps,
                delta=fine.delta,
            )
            assert directed_L(coarse) <= directed_L(fine) + 1e-9


class TestRescaledL:
    def test_alpha_one_divisor_is_n_squared(self):
        spec = StableSpec(alpha=1.0, c_plus=1.0, c_minus=0.0, delta=0.01)
        inc = np.random.default_rng(2).normal(size=(4, 8))
        grid = plain_grid(inc, m=2)
        assert rescaled_L(grid, spec) == pytest.approx(directed_L(grid) / 16.0)

    def test_general_prefactor(self):
        spec = StableSpec(alpha=1.5, c_plus=2.0, c_minus=0.0, delta=0.01)
        inc = np.random.default_rng(4).normal(size=(3, 6))
        grid = plain_grid(inc, m=2)
        expect = (1.5 / 2.0) ** (1 / 1.5) * 3.0 ** (-2 / 1.5) * directed_L(grid)
        assert rescaled_L(grid, spec) == pytest.approx(expect)

    def test_time_scaling_in_distribution(self):
        # doubling the window matches scaling one window by 2^(1/alpha)
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=200.0)
        reps = 2000
        wide = np.empty(reps)
        square = np.empty(reps)
        for r in range(reps):
            wide[r] = directed_L(
                simulate_processes(spec, 20, 50, split_stream(31, r), window=40)
            )
            square[r] = 2.0 ** (1 / 1.5) * directed_L(
                simulate_processes(spec, 20, 50, split_stream(77, r))
            )
        assert ks_two_sample(wide, square) < 0.05  # observed 0.0160

    def test_matches_continuum_truncation(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=200.0)
        reps = 2000
        vals = np.empty(reps)
        for r in range(reps):
            vals[r] = rescaled_L(
                simulate_processes(spec, 50, 50, split_stream(13, r)), spec
            )
        reference = truncated_T_values(2000, 1.5, reps, np.random.default_rng(99))
        assert ks_two_sample(vals, reference) < 0.07  # observed 0.0190


class TestRangeSupWeights:
    def test_monotone_segment_gives_total_increment(self):
        inc = np.array([[0.5, 1.0, 0.25, 2.0, 0.5, 0.75]])
        x = range_sup_weights(plain_grid(inc, m=3))
        assert x.shape == (1, 2)
        assert x[0, 0] == pytest.approx(1.75)
        assert x[0, 1] == pytest.approx(3.25)

    def test_hand_drawup(self):
        inc = np.array([[1.0, -2.0, 3.0]])
        x = range_sup_weights(plain_grid(inc, m=3))
        assert x[0, 0] == pytest.approx(3.0)

    def test_nonnegative(self):
        inc = np.random.default_rng(9).normal(size=(4, 20))
        assert np.all(range_sup_weights(plain_grid(inc, m=5)) >= 0.0)

    def test_dominates_largest_positive_jump(self):
        spec = StableSpec.for_jump_budget(1.2, 1.0, 0.5, budget=80.0)
        for s in range(10):
            g = simulate_processes(spec, 6, 8, np.random.default_rng(600 + s))
            x = range_sup_weights(g)
            for i, jumps in enumerate(g.jumps):
                pos = jumps[jumps[:, 1] > 0.0]
                for t, size in pos:
                    b = min(int(t), g.window - 1)
                    assert x[i, b] >= size


class TestSandwich:
    def test_lower_and_upper_bracket_L(self):
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.3, budget=120.0)
        for s in range(60):
            g = simulate_processes(spec, 8, 10, np.random.default_rng(1000 + s))
            value = directed_L(g)
            upper = passage_time(LatticeGrid(range_sup_weights(g)))
            assert value <= upper + 1e-9
            for k in (1, 5, 20):
                assert top_jump_lower_bound(g, k) <= value + 1e-9

    def test_lower_bound_collects_an_isolated_jump(self):
        inc = np.zeros((2, 4))
        inc[0, 1] = 5.0
        grid = ProcessGrid(
            n=2,
            m=2,
            increments=inc,
            jumps=(np.array([[0.75, 5.0]]), np.zeros((0, 2))),
            delta=1.0,
        )
        assert top_jump_lower_bound(grid, 1) == pytest.approx(5.0)
        assert directed_L(grid) == pytest.approx(5.0)

    def test_lower_bound_respects_collection_order(self):
        # both jumps sit in one step, so a later process must skip the
        # earlier one; the bound settles for the better single jump
        inc = np.zeros((2, 2))
        inc[0, 0] = 3.0
        inc[1, 0] = 4.0
        grid = ProcessGrid(
            n=2,
            m=1,
            increments=inc,
            jumps=(np.array([[0.9, 3.0]]), np.array([[0.1, 4.0]])),
            delta=1.0,
        )
        assert top_jump_lower_bound(grid, 2) == pytest.approx(4.0)
        assert directed_L(grid) == pytest.approx(4.0)

    def test_k_validation(self):
        g = plain_grid(np.zeros((1, 2)), m=2)
        with pytest.raises(ValueError):
            top_jump_lower_bound(g, 0)


class TestTailEstimate:
    def test_injected_pareto_flattens_at_one(self):
        rng = np.random.default_rng(12)
        samples = rng.random(100_000) ** (-1 / 1.5)
        curve = tail_estimate(samples, [1.5, 3.0, 10.0], 1.5)
        assert np.all(np.abs(curve[:, 1] - 1.0) < 0.1)

    def test_strict_exceedance(self):
        curve = tail_estimate([1.0, 2.0, 3.0], [2.0], 1.5)
        assert curve[0, 1] == pytest.approx(2.0**1.5 / 3.0)

    def test_nonnegative_curve(self):
        curve = tail_estimate([-1.0, 0.5, 2.0], np.linspace(0.1, 5.0, 20), 0.7)
        assert np.all(curve[:, 1] >= 0.0)

    def test_plateau_near_positive_rate_constant(self):
        # 10^5 unit blocks at alpha=1.5, c+=1: target c+/alpha = 2/3
        spec = StableSpec.for_jump_budget(1.5, 1.0, 0.0, budget=100.0)
        parts = []
        for part in range(10):
            g = simulate_processes(spec, 10, 50, split_stream(555, part), window=1000)
            parts.append(range_sup_weights(g).ravel())
        samples = np.concatenate(parts)
        x = np.quantile(samples, 0.999)
        value = tail_estimate(samples, [x], 1.5)[0, 1]
        assert 0.5 < value < 0.9  # observed 0.678

    def test_errors(self):
        with pytest.raises(ValueError):
            tail_estimate([], [1.0], 1.5)
        with pytest.raises(ValueError):
            tail_estimate([1.0], [], 1.5)
        with pytest.raises(ValueError):
            tail_estimate([1.0], [0.0], 1.5)
        with pytest.raises(ValueError):
            tail_estimate([1.0], [1.0], 2.5)
        with pytest.raises(ValueError):
            tail_estimate([np.inf], [1.0], 1.5)
