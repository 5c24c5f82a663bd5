import numpy as np
import pytest

from qseq.metrics import (
    EPS_COSINE,
    co_emission,
    co_emission_detailed,
    kl_rate,
    kl_rate_detailed,
    metric_report,
    overlap_terms,
    total_variation,
)
from qseq.stochproc import ConditionalTable, TableRow


def single_row_table(p, weight=1.0, past="0"):
    length = int(np.log2(len(p)))
    table = ConditionalTable(len(past), length)
    table.rows[past] = TableRow(weight, np.asarray(p, dtype=float))
    return table


def pair(p, q, past="0"):
    return single_row_table(p, past=past), single_row_table(q, past=past)


class TestOverlapTerms:
    def test_equal_uniform(self):
        terms = overlap_terms([0.5, 0.5], [0.5, 0.5])
        assert terms.p_norm_sq == terms.q_norm_sq == terms.dot == 0.5
        assert abs(terms.cosine - 1.0) < 1e-12

    def test_orthogonal(self):
        terms = overlap_terms([1.0, 0.0], [0.0, 1.0])
        assert terms.dot == 0.0 and terms.cosine == 0.0

    def test_point_mass_vs_uniform(self):
        terms = overlap_terms([1.0, 0.0], [0.5, 0.5])
        assert abs(terms.dot - 0.5) < 1e-15
        assert abs(terms.cosine - np.sqrt(2) / 2) < 1e-12

    def test_cosine_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = rng.random(8)
            q = rng.random(8)
            terms = overlap_terms(p / p.sum(), q / q.sum())
            assert -1e-12 <= terms.cosine <= 1.0 + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            overlap_terms([1.0], [0.5, 0.5])

    def test_not_normalized(self):
        with pytest.raises(ValueError):
            overlap_terms([0.7, 0.7], [0.5, 0.5])


class TestKlRate:
    def test_identical_tables_zero(self):
        ref, model = pair([0.3, 0.7], [0.3, 0.7])
        assert abs(kl_rate(ref, model)) < 1e-12

    def test_hand_value_half_quarter(self):
        ref, model = pair([0.5, 0.5], [0.25, 0.75])
        expect = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)
        assert abs(kl_rate(ref, model) - expect) < 1e-9
        assert abs(expect - 0.14384) < 5e-6

    def test_hand_value_log_two(self):
        ref, model = pair([1.0, 0.0], [0.5, 0.5])
        assert abs(kl_rate(ref, model) - np.log(2.0)) < 1e-9

    def test_future_steps_divisor(self):
        ref = single_row_table([0.25, 0.25, 0.25, 0.25])
        model = single_row_table([0.4, 0.1, 0.4, 0.1])
        one = kl_rate(ref, model)
        direct = float(np.sum(ref.rows["0"].dist * np.log(ref.rows["0"].dist / model.rows["0"].dist)))
        assert abs(one - direct / 2.0) < 1e-12

    def test_zero_reference_entries_ignored(self):
        ref, model = pair([1.0, 0.0], [0.9, 0.1])
        assert np.isfinite(kl_rate(ref, model))

    def test_missing_model_row_uniform_fallback(self):
        ref = single_row_table([1.0, 0.0])
        model = ConditionalTable(1, 1)
        value = kl_rate_detailed(ref, model)
        assert abs(value.nats - np.log(2.0)) < 1e-12
        assert value.degenerate_rows == 1

    def test_horizon_mismatch(self):
        ref = single_row_table([1.0, 0.0])
        other = ConditionalTable(2, 1)
        with pytest.raises(ValueError):
            kl_rate(ref, other)

    def test_nonnegative_random(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p = rng.random(4)
            q = rng.random(4)
            ref, model = pair(p / p.sum(), q / q.sum())
            assert kl_rate(ref, model) >= -1e-12


class TestCoEmission:
    def test_identical_zero(self):
        ref, model = pair([0.3, 0.7], [0.3, 0.7])
        assert abs(co_emission(ref, model)) < 1e-12

    def test_hand_value(self):
        ref, model = pair([1.0, 0.0], [0.5, 0.5])
        expect = -np.log(np.sqrt(2) / 2)
        assert abs(co_emission(ref, model) - expect) < 1e-9
        assert abs(expect - 0.34657) < 5e-6

    def test_orthogonal_floored(self):
        ref, model = pair([1.0, 0.0], [0.0, 1.0])
        assert abs(co_emission(ref, model) + np.log(EPS_COSINE)) < 1e-9

    def test_nonnegative_random(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = rng.random(4)
            q = rng.random(4)
            ref, model = pair(p / p.sum(), q / q.sum())
            assert co_emission(ref, model) >= -1e-12


class TestFaithfulness:
    def test_zero_iff_rows_match(self):
        rng = np.random.default_rng(3)
        p = rng.random(4)
        p /= p.sum()
        for eps in (0.0, 1e-4, 1e-2):
            q = p + eps * np.array([1.0, -1.0, 0.5, -0.5])
            q = np.clip(q, 1e-9, None)
            q /= q.sum()
            ref, model = pair(p, q)
            kl = kl_rate(ref, model)
            coem = co_emission(ref, model)
            if eps == 0.0:
                assert kl < 1e-12 and coem < 1e-12
            else:
                assert kl > 1e-12 and coem > 1e-12

    def test_shrinking_perturbation_shrinks_metrics(self):
        p = np.array([0.4, 0.1, 0.3, 0.2])
        direction = np.array([0.3, -0.1, -0.1, -0.1])
        kls, coems = [], []
        for eps in (0.3, 0.1, 0.03, 0.01):
            q = p + eps * direction
            q /= q.sum()
            ref, model = pair(p, q)
            kls.append(kl_rate(ref, model))
            coems.append(co_emission(ref, model))
        assert all(a > b for a, b in zip(kls, kls[1:]))
        assert all(a > b for a, b in zip(coems, coems[1:]))


class TestHelpers:
    def test_total_variation_absent_row_counts_full(self):
        ref = single_row_table([1.0, 0.0])
        empty = ConditionalTable(1, 1)
        assert abs(total_variation(ref, empty) - 1.0) < 1e-15

    def test_report_schema(self):
        ref, model = pair([0.5, 0.5], [0.25, 0.75])
        report = metric_report(ref, model, "kl")
        assert set(report) == {"metric", "M", "L", "value_nats", "degenerate_rows"}
        assert report["M"] == 1 and report["L"] == 1
        with pytest.raises(ValueError):
            metric_report(ref, model, "hellinger")


class TestModelBackedQueries:
    def test_kl_rate_against_conditional_view(self):
        from qseq.ansatz import ConditionalView, build_universal_1q_memory
        from qseq.stochproc import true_conditional, uniform_renewal

        rng = np.random.default_rng(4)
        reference = true_conditional(uniform_renewal(3), 2, 1)
        theta = rng.uniform(0, 2 * np.pi, 8)
        view = ConditionalView(build_universal_1q_memory(), theta, 1)
        value = kl_rate(reference, view)
        # independent accumulation over rows
        expect = 0.0
        for past, row in reference.rows.items():
            dist, _ = view.conditional(past)
            mask = row.dist > 0
            expect += row.weight * float(
                np.sum(row.dist[mask] * np.log(row.dist[mask] / np.maximum(dist[mask], 1e-12)))
            )
        assert abs(value - expect) < 1e-12

    def test_degenerate_view_rows_counted(self):
        from qseq.ansatz import ConditionalView, build_universal_1q_memory
        from qseq.stochproc import ConditionalTable, TableRow

        reference = ConditionalTable(2, 1)
        reference.rows["01"] = TableRow(1.0, np.array([0.5, 0.5]))
        view = ConditionalView(build_universal_1q_memory(), np.zeros(8), 1)
        value = kl_rate_detailed(reference, view)
        assert value.degenerate_rows == 1
        assert abs(value.nats) < 1e-12  # uniform fallback equals the reference row
