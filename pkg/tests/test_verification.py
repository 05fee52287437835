import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import expand_table
from firm import FirmSpec, firm_scores, scoring_matrix
from firm.verification import (
    BinaryCounts,
    CategoricalForecastCase,
    ContingencyTable,
    UndefinedMeasureError,
    collapse_to_binary,
    csi,
    csi_optimal_threshold,
    estimate_alpha_naive,
    estimate_alpha_signal_detection,
    far,
    gerrity_matrix,
    gerrity_score,
    gerrity_top_category_optimal,
    mean_score,
    pod,
    pofd,
    peirce_skill_score,
    tabulate,
    tabulate_cases,
)

OCF_BINARY = BinaryCounts(228, 296, 205, 77984)
OFFICIAL_BINARY = BinaryCounts(346, 178, 531, 77658)


def _textbook_gerrity(table, r):
    """Independent transcription of the Gerrity (1992) score, loop by loop."""
    K = len(r)
    a = []
    for k in range(K - 1):
        pk = sum(r[: k + 1])
        a.append((1 - pk) / pk)
    s = np.zeros((K, K))
    for i in range(K):
        for j in range(K):
            lo, hi = min(i, j), max(i, j)
            total = 0.0
            for k in range(lo):
                total += 1 / a[k]
            total -= hi - lo
            for k in range(hi, K - 1):
                total += a[k]
            s[i, j] = total / (K - 1)
    c = np.asarray(table, float)
    return float((c * s).sum() / c.sum())


class TestTabulate:
    def test_empty(self):
        assert tabulate([], [], 3) == ContingencyTable.zeros(3)
        assert tabulate_cases([], 3).total == 0

    def test_single_case(self):
        t = tabulate_cases([CategoricalForecastCase(1, observed_category=0)], 3)
        expected = np.zeros((3, 3), int)
        expected[1, 0] = 1
        np.testing.assert_array_equal(t.counts, expected)

    def test_reconstructs_published_table(self, ocf_table):
        f, o = expand_table(ocf_table.counts)
        t = tabulate(f, o, 3)
        assert t == ocf_table
        assert t.counts[0, 0] == 77984 and t.counts[1, 2] == 50 and t.counts[2, 2] == 27
        assert t.total == 78713

    def test_cases_with_real_observations(self):
        cases = [CategoricalForecastCase(2, observation=120.0), CategoricalForecastCase(0, observation=50.0)]
        t = tabulate_cases(cases, 3, thresholds=(50, 100))
        assert t.counts[2, 2] == 1 and t.counts[0, 0] == 1
        with pytest.raises(ValueError, match="thresholds"):
            tabulate_cases(cases, 3)

    def test_out_of_range_names_record(self):
        with pytest.raises(ValueError, match="record 2"):
            tabulate([0, 1, 3], [0, 0, 0], 3)
        with pytest.raises(ValueError, match="record 0: observed"):
            tabulate([0], [-1], 3)

    def test_case_needs_one_outcome(self):
        with pytest.raises(ValueError):
            CategoricalForecastCase(0)
        with pytest.raises(ValueError):
            CategoricalForecastCase(0, observation=1.0, observed_category=0)

    def test_table_addition_is_merge(self):
        rng = np.random.default_rng(1)
        f, o = rng.integers(0, 3, 500), rng.integers(0, 3, 500)
        assert tabulate(f[:200], o[:200], 3) + tabulate(f[200:], o[200:], 3) == tabulate(f, o, 3)

    def test_immutable(self, ocf_table):
        with pytest.raises(ValueError):
            ocf_table.counts[0, 0] = 1

    def test_csv_round_trip(self, ocf_table):
        text = ocf_table.to_csv(["none", "heavy", "very heavy"])
        assert text.splitlines()[0] == "forecast\\observed,none,heavy,very heavy"
        assert ContingencyTable.from_csv(text) == ocf_table


class TestBinary:
    def test_collapse(self, ocf_table, official_table):
        assert collapse_to_binary(ocf_table) == OCF_BINARY
        assert collapse_to_binary(official_table) == OFFICIAL_BINARY
        assert collapse_to_binary(ContingencyTable.zeros(3)) == (0, 0, 0, 0)

    def test_collapse_upper_split(self, ocf_table):
        assert collapse_to_binary(ocf_table, 1) == (27, 87, 15 + 6, 77984 + 259 + 199 + 136)

    def test_collapse_invalid_split(self, ocf_table):
        for k in (-1, 2):
            with pytest.raises(ValueError):
                collapse_to_binary(ocf_table, k)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=60), st.integers(0, 2))
    def test_collapse_commutes_with_tabulate(self, pairs, k):
        f = [p[0] for p in pairs]
        o = [p[1] for p in pairs]
        fw = np.array(f, int) > k
        ev = np.array(o, int) > k
        direct = (int(np.sum(fw & ev)), int(np.sum(~fw & ev)), int(np.sum(fw & ~ev)), int(np.sum(~fw & ~ev)))
        assert collapse_to_binary(tabulate(f, o, 4), k) == direct

    def test_measures_on_ocf(self):
        assert pod(OCF_BINARY) == pytest.approx(0.4351, abs=5e-5)
        assert far(OCF_BINARY) == pytest.approx(0.4734, abs=5e-5)
        assert pofd(OCF_BINARY) == pytest.approx(2.622e-3, abs=5e-7)
        assert csi(OCF_BINARY) == pytest.approx(228 / 729)
        assert csi_optimal_threshold(OCF_BINARY) == pytest.approx(228 / 957, rel=1e-15)
        assert csi_optimal_threshold(OCF_BINARY) == pytest.approx(0.2383, abs=1e-4)
        assert peirce_skill_score(OCF_BINARY) == pytest.approx(0.4325, abs=5e-5)

    def test_degenerate(self):
        c = BinaryCounts(0, 0, 0, 10)
        for fn in (pod, far, csi):
            with pytest.raises(UndefinedMeasureError):
                fn(c)
        assert pofd(c) == 0

    def test_perfect(self):
        c = BinaryCounts(5, 0, 0, 7)
        assert (pod(c), far(c), csi(c), peirce_skill_score(c)) == (1, 0, 1, 1)

    def test_csi_threshold_cases(self):
        assert csi_optimal_threshold(BinaryCounts(3, 3, 3, 0)) == 0.25
        assert csi_optimal_threshold(BinaryCounts(0, 2, 1, 0)) == 0
        with pytest.raises(UndefinedMeasureError):
            csi_optimal_threshold(BinaryCounts(0, 0, 0, 4))

    def test_peirce_independent(self):
        assert peirce_skill_score(BinaryCounts(10, 30, 20, 60)) == pytest.approx(0)


class TestGerrity:
    def test_two_category_is_peirce(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            counts = rng.integers(1, 500, size=(2, 2))
            t = ContingencyTable(counts)
            assert gerrity_score(t) == pytest.approx(peirce_skill_score(collapse_to_binary(t)), abs=1e-12)

    def test_perfect(self):
        assert gerrity_score(ContingencyTable(np.diag([50, 30, 5]))) == pytest.approx(1, abs=1e-12)

    def test_textbook_oracle(self):
        rng = np.random.default_rng(11)
        r = (0.8, 0.15, 0.05)
        for _ in range(20):
            counts = rng.integers(0, 300, size=(3, 3))
            assert gerrity_score(ContingencyTable(counts), r) == pytest.approx(_textbook_gerrity(counts, r), abs=1e-12)

    def test_equitable(self):
        # constant forecasts and random forecasts score zero in expectation
        r = np.array([0.6, 0.3, 0.1])
        g = gerrity_matrix(r)
        assert np.allclose(g @ r, 0)

    def test_zero_base_rate(self):
        with pytest.raises(UndefinedMeasureError):
            gerrity_matrix([0.5, 0.5, 0.0])

    def test_top_category_trivial(self):
        r = (0.7, 0.2, 0.1)
        assert gerrity_top_category_optimal((0, 0, 1), r)
        assert not gerrity_top_category_optimal((1, 0, 0), r)

    def test_top_category_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(5000):
            r = rng.dirichlet([2, 2, 2])
            if r.min() < 1e-3:
                continue
            p = rng.dirichlet([1, 1, 1])
            reward = gerrity_matrix(r) @ p
            best = int(np.argmax(reward))
            gap = np.sort(reward)[-1] - np.sort(reward)[-2]
            if gap < 1e-9:
                continue
            assert gerrity_top_category_optimal(p, r) == (best == 2)


class TestAlphaEstimates:
    def test_naive(self):
        assert estimate_alpha_naive(BinaryCounts(1, 4, 4, 9)) == 0.5
        assert estimate_alpha_naive(OCF_BINARY) == pytest.approx(0.4092, abs=5e-5)
        assert estimate_alpha_naive(BinaryCounts(5, 0, 3, 9)) == 1
        with pytest.raises(UndefinedMeasureError):
            estimate_alpha_naive(BinaryCounts(5, 0, 0, 9))

    def test_signal_detection_published(self):
        assert estimate_alpha_signal_detection(OCF_BINARY) == pytest.approx(0.75, abs=0.005)
        assert estimate_alpha_signal_detection(OFFICIAL_BINARY) == pytest.approx(0.89, abs=0.005)

    def test_signal_detection_symmetric(self):
        # POD = 1 - POFD and h + m = f + c give tau = 1
        assert estimate_alpha_signal_detection(BinaryCounts(30, 70, 70, 30)) == pytest.approx(0.5, abs=1e-12)

    def test_signal_detection_scale_invariant(self):
        a = estimate_alpha_signal_detection(OFFICIAL_BINARY)
        for k in (2, 7, 1000):
            scaled = BinaryCounts(*(k * v for v in OFFICIAL_BINARY))
            assert estimate_alpha_signal_detection(scaled) == pytest.approx(a, abs=1e-12)

    def test_signal_detection_degenerate(self):
        with pytest.raises(UndefinedMeasureError):
            estimate_alpha_signal_detection(BinaryCounts(10, 0, 3, 40))
        with pytest.raises(UndefinedMeasureError):
            estimate_alpha_signal_detection(BinaryCounts(10, 2, 0, 40))


class TestMeanScore:
    def test_published_tables(self, rainfall_spec, ocf_table, official_table):
        s = scoring_matrix(rainfall_spec)
        ocf = mean_score(ocf_table, s)
        off = mean_score(official_table, s)
        assert ocf.total == pytest.approx(7.054e-3, abs=5e-6)
        assert ocf.miss == pytest.approx(6.136e-3, abs=5e-6)
        assert ocf.miss / ocf.total == pytest.approx(0.87, abs=0.005)
        assert off.total == pytest.approx(7.207e-3, abs=5e-6)
        assert off.miss == pytest.approx(3.564e-3, abs=5e-6)
        assert off.miss / off.total == pytest.approx(0.49, abs=0.005)

    def test_matches_per_case_mean(self, rainfall_spec, ocf_table):
        f, o = expand_table(ocf_table.counts)
        total, miss, fa = firm_scores(rainfall_spec, f, observed_categories=o)
        ms = mean_score(ocf_table, scoring_matrix(rainfall_spec))
        assert ms.total == pytest.approx(total.mean(), rel=1e-13)
        assert ms.miss == pytest.approx(miss.mean(), rel=1e-13)
        assert ms.false_alarm == pytest.approx(fa.mean(), rel=1e-13)

    def test_exact_on_small_multiset(self):
        spec = FirmSpec((0, 1), (1, 2), 0.5)
        t = ContingencyTable(np.array([[1, 1, 0], [0, 0, 1], [1, 0, 0]]))
        f, o = expand_table(t.counts)
        total, _, _ = firm_scores(spec, f, observed_categories=o)
        assert mean_score(t, scoring_matrix(spec)).total == total.mean()

    def test_empty(self, rainfall_spec):
        with pytest.raises(UndefinedMeasureError):
            mean_score(ContingencyTable.zeros(3), scoring_matrix(rainfall_spec))
