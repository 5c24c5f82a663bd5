import numpy as np
import pytest

from qseq.stochproc import (
    ConditionalTable,
    HiddenMarkovModel,
    Trajectory,
    count_windows,
    load_hmm,
    load_table,
    load_trajectory,
    sample_trajectory,
    save_hmm,
    save_table,
    save_trajectory,
    stationary_distribution,
    true_conditional,
    uniform_renewal,
)


def power_iteration_stationary(hmm, iters=20_000):
    """Independent oracle for the stationary distribution."""
    t = hmm.symbol_matrices().sum(axis=0)
    pi = np.full(hmm.num_states, 1.0 / hmm.num_states)
    for _ in range(iters):
        pi = pi @ t
    return pi


def brute_force_tick_probs(order):
    """P(tick | j steps since last tick) for gaps uniform on {0..order-1}."""
    gap_prob = np.full(order, 1.0 / order)  # gap = number of 0s before the 1
    probs = []
    for j in range(order):
        at_least_j = gap_prob[j:].sum()
        probs.append(gap_prob[j] / at_least_j)
    return np.array(probs)


class TestUniformRenewal:
    def test_order_one_always_ticks(self):
        hmm = uniform_renewal(1)
        assert hmm.num_states == 1
        assert hmm.edges == ((0, 1, 0, 1.0),)

    def test_order_three_tick_probs(self):
        hmm = uniform_renewal(3)
        ticks = {f: p for f, sym, t, p in hmm.edges if sym == 1}
        np.testing.assert_allclose(
            [ticks[0], ticks[1], ticks[2]], brute_force_tick_probs(3), atol=1e-15
        )

    def test_last_state_ticks_surely(self):
        for order in (1, 2, 5, 8):
            hmm = uniform_renewal(order)
            last = [e for e in hmm.edges if e[0] == order - 1]
            assert last == [(order - 1, 1, 0, 1.0)]

    def test_bad_order(self):
        with pytest.raises(ValueError):
            uniform_renewal(0)

    def test_edge_probability_validation(self):
        with pytest.raises(ValueError):
            HiddenMarkovModel(2, ((0, 1, 1, 0.5), (1, 1, 0, 1.0)))


class TestStationary:
    def test_single_state(self):
        np.testing.assert_allclose(stationary_distribution(uniform_renewal(1)), [1.0])

    def test_order_three_exact(self):
        pi = stationary_distribution(uniform_renewal(3))
        np.testing.assert_allclose(pi, [0.5, 1 / 3, 1 / 6], atol=1e-12)

    def test_matches_power_iteration(self):
        for order in (2, 4, 7):
            hmm = uniform_renewal(order)
            np.testing.assert_allclose(
                stationary_distribution(hmm), power_iteration_stationary(hmm), atol=1e-10
            )

    def test_stationary_tick_probability(self):
        for order in (2, 3, 5, 8):
            hmm = uniform_renewal(order)
            pi = stationary_distribution(hmm)
            tick = sum(
                pi[f] * p for f, sym, _t, p in hmm.edges if sym == 1
            )
            assert abs(tick - 2.0 / (order + 1)) < 1e-12


class TestSampleTrajectory:
    def test_order_one_all_ones(self):
        traj = sample_trajectory(uniform_renewal(1), 12, seed=0)
        assert traj.symbols == "1" * 12

    def test_deterministic(self):
        hmm = uniform_renewal(4)
        a = sample_trajectory(hmm, 5000, seed=99)
        b = sample_trajectory(hmm, 5000, seed=99)
        assert a.symbols == b.symbols
        assert sample_trajectory(hmm, 5000, seed=100).symbols != a.symbols

    def test_order_three_tick_frequency(self):
        traj = sample_trajectory(uniform_renewal(3), 1_000_000, seed=5)
        freq = traj.bits().mean()
        assert abs(freq - 0.5) < 0.002  # 3 sigma for p = 1/2

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory("")
        with pytest.raises(ValueError):
            Trajectory("0102")


class TestTrueConditional:
    def test_tick_collapses_belief(self):
        table = true_conditional(uniform_renewal(3), 1, 1)
        np.testing.assert_allclose(table.rows["1"].dist, [2 / 3, 1 / 3], atol=1e-12)

    def test_tick_then_zero(self):
        table = true_conditional(uniform_renewal(3), 2, 1)
        np.testing.assert_allclose(table.rows["10"].dist, [0.5, 0.5], atol=1e-12)

    def test_zero_past_single_stationary_row(self):
        table = true_conditional(uniform_renewal(3), 0, 2)
        assert list(table.rows) == [""]
        row = table.rows[""]
        assert abs(row.weight - 1.0) < 1e-12
        assert abs(row.dist.sum() - 1.0) < 1e-12

    def test_impossible_past_omitted(self):
        # order 3 cannot emit three 0s in a row
        table = true_conditional(uniform_renewal(3), 3, 1)
        assert "000" not in table.rows

    def test_renewal_structure_exact(self):
        # a past ending in "1" followed by j zeros pins the belief to state j,
        # so the tick probability is exactly 1/(order - j)
        for order in (3, 5):
            m_steps = 4
            table = true_conditional(uniform_renewal(order), m_steps, 1)
            checked = 0
            for past, row in table.rows.items():
                if "1" not in past:
                    continue
                j = len(past) - past.rindex("1") - 1
                assert abs(row.dist[1] - 1.0 / (order - j)) < 1e-12
                checked += 1
            assert checked > 0

    def test_weighted_rows_reproduce_marginal(self):
        hmm = uniform_renewal(4)
        m_steps, l_steps = 3, 2
        table = true_conditional(hmm, m_steps, l_steps)
        marginal = np.zeros(1 << l_steps)
        for row in table.rows.values():
            marginal += row.weight * row.dist
        stationary = true_conditional(hmm, 0, l_steps).rows[""].dist
        np.testing.assert_allclose(marginal, stationary, atol=1e-12)
        total = sum(row.weight for row in table.rows.values())
        assert abs(total - 1.0) < 1e-12


class TestCountWindows:
    def test_alternating(self):
        table = count_windows(Trajectory("0101010101"), 1, 1)
        np.testing.assert_allclose(table.rows["0"].dist, [0.0, 1.0])
        np.testing.assert_allclose(table.rows["1"].dist, [1.0, 0.0])

    def test_constant_zero(self):
        table = count_windows(Trajectory("0000"), 1, 1)
        assert list(table.rows) == ["0"]
        row = table.rows["0"]
        assert row.weight == 1.0
        np.testing.assert_allclose(row.dist, [1.0, 0.0])

    def test_window_count(self):
        table = count_windows(Trajectory("0101010101"), 2, 1)
        total = sum(r.weight for r in table.rows.values())
        assert abs(total - 1.0) < 1e-12

    def test_too_short_raises(self):
        with pytest.raises(ValueError):
            count_windows(Trajectory("01"), 2, 1)

    def test_converges_to_true_conditional(self):
        hmm = uniform_renewal(3)
        traj = sample_trajectory(hmm, 1_000_000, seed=17)
        empirical = count_windows(traj, 2, 1)
        exact = true_conditional(hmm, 2, 1)
        for past, row in exact.rows.items():
            got = empirical.rows[past]
            assert np.max(np.abs(got.dist - row.dist)) <= 0.01
            assert abs(got.weight - row.weight) <= 0.01

    def test_ergodic_convergence_rate(self):
        # weighted TV distance shrinks roughly like T^(-1/2)
        from qseq.metrics import total_variation

        for order in (3, 5):
            hmm = uniform_renewal(order)
            distances = []
            for size in (1_000, 10_000, 100_000):
                traj = sample_trajectory(hmm, size, seed=23 + order)
                distances.append(
                    total_variation(true_conditional(hmm, 2, 1), count_windows(traj, 2, 1))
                )
            assert distances[2] < distances[1] < distances[0]
            assert distances[2] < 0.01


class TestFiles:
    def test_trajectory_round_trip(self, tmp_path):
        path = tmp_path / "traj.txt"
        save_trajectory(path, Trajectory("0110"))
        assert load_trajectory(path).symbols == "0110"
        assert path.read_text() == "0110\n"

    def test_table_round_trip(self, tmp_path):
        table = true_conditional(uniform_renewal(3), 2, 1)
        path = tmp_path / "table.json"
        save_table(path, table)
        loaded = load_table(path)
        assert loaded.past_steps == 2 and loaded.future_steps == 1
        for past, row in table.rows.items():
            np.testing.assert_allclose(loaded.rows[past].dist, row.dist)
            assert abs(loaded.rows[past].weight - row.weight) < 1e-15

    def test_hmm_round_trip(self, tmp_path):
        hmm = uniform_renewal(4)
        path = tmp_path / "hmm.json"
        save_hmm(path, hmm)
        loaded = load_hmm(path)
        assert loaded == hmm
