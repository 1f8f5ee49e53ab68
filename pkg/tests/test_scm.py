import numpy as np
import pytest
from dataclasses import replace

from causal_diffusion.scm import (
    DEFAULT_QUERY,
    Intervention,
    MaskedColumnError,
    SCM_NAMES,
    SampleMatrix,
    Scm,
    apply_do,
    ate,
    builtin_scm,
    constant_noise,
    export_csv,
    normalize,
    sample_interventional,
    sample_observational,
    to_normalized,
    to_raw,
    with_all_observed,
    with_noise,
    zero_noise,
)

# X_5 = x + 4 U_1 + 2 U_3 + 2 U_4 + U_5 under do(X_2 = x) in m1_simple
M1_DO_X5_STD = 5.0


def forced_noise(scm: Scm, values) -> Scm:
    return replace(scm, noise=tuple(constant_noise(v) for v in values))


class TestSampleObservational:
    def test_zero_noise_gives_zero_rows(self):
        scm = with_noise(with_all_observed(builtin_scm("m1_simple")), zero_noise)
        matrix = sample_observational(scm, 4, seed=0)
        assert np.array_equal(matrix.data, np.zeros((4, 5)))

    def test_forced_noise_single_draw(self):
        scm = forced_noise(with_all_observed(builtin_scm("m1_simple")), (1, 0, 0, 0, 0))
        matrix = sample_observational(scm, 1, seed=0)
        assert matrix.data[0].tolist() == [1.0, 1.0, 2.0, 2.0, 5.0]

    def test_same_seed_reproduces(self):
        scm = builtin_scm("m2_complex")
        a = sample_observational(scm, 50, seed=11)
        b = sample_observational(scm, 50, seed=11)
        assert np.array_equal(a.data, b.data, equal_nan=True)

    def test_masked_columns_are_blanked(self):
        matrix = sample_observational(builtin_scm("m1_simple"), 10, seed=0)
        assert np.isnan(matrix.data[:, 0]).all()
        assert np.isnan(matrix.data[:, 3]).all()
        assert np.isfinite(matrix.data[:, 1]).all()

    def test_needs_positive_count(self):
        with pytest.raises(ValueError):
            sample_observational(builtin_scm("m1_simple"), 0, seed=0)


class TestSampleMatrixMasking:
    def test_masked_read_raises_and_is_counted(self):
        matrix = sample_observational(builtin_scm("m1_simple"), 5, seed=0)
        with pytest.raises(MaskedColumnError):
            matrix.column(1)
        assert matrix.read_counts[0] == 1
        matrix.column(2)
        assert matrix.read_counts[1] == 1

    def test_out_of_range_column(self):
        matrix = sample_observational(builtin_scm("m1_simple"), 5, seed=0)
        with pytest.raises(ValueError, match="out of range"):
            matrix.column(6)


class TestApplyDo:
    def test_m1_removes_incoming_edge(self):
        scm = builtin_scm("m1_simple")
        done = apply_do(scm, Intervention(2, 1.5))
        assert (1, 2) not in done.dag.edges
        assert done.dag.edges == scm.dag.edges - {(1, 2)}
        matrix = sample_observational(with_all_observed(done), 8, seed=0)
        assert np.all(matrix.data[:, 1] == 1.5)

    def test_root_do_keeps_graph(self):
        scm = builtin_scm("m1_simple")
        done = apply_do(scm, Intervention(1, 2.0))
        assert done.dag.edges == scm.dag.edges
        matrix = sample_observational(with_all_observed(done), 3, seed=0)
        assert np.all(matrix.data[:, 0] == 2.0)

    def test_m2_removes_incoming_edge(self):
        scm = builtin_scm("m2_simple")
        done = apply_do(scm, Intervention(4, 0.0))
        assert (3, 4) not in done.dag.edges

    def test_idempotent(self):
        scm = builtin_scm("m1_complex")
        iv = Intervention(2, 0.7)
        once = apply_do(scm, iv)
        twice = apply_do(once, iv)
        a = sample_observational(once, 40, seed=5)
        b = sample_observational(twice, 40, seed=5)
        assert once.dag == twice.dag
        assert np.array_equal(a.data, b.data, equal_nan=True)

    def test_commutes_across_nodes(self):
        scm = builtin_scm("m2_simple")
        iv_a, iv_b = Intervention(3, 1.0), Intervention(4, -1.0)
        ab = apply_do(apply_do(scm, iv_a), iv_b)
        ba = apply_do(apply_do(scm, iv_b), iv_a)
        a = sample_observational(ab, 40, seed=5)
        b = sample_observational(ba, 40, seed=5)
        assert ab.dag == ba.dag
        assert np.array_equal(a.data, b.data, equal_nan=True)

    def test_consistency_with_natural_value(self):
        # clamping a node to the value it takes anyway reproduces the rows
        scm = forced_noise(with_all_observed(builtin_scm("m1_simple")), (1, 0, 0, 0, 0))
        natural = sample_observational(scm, 6, seed=0)
        clamped = sample_observational(apply_do(scm, Intervention(2, 1.0)), 6, seed=0)
        assert np.array_equal(natural.data, clamped.data)


class TestInterventionalOracle:
    def test_zero_noise_zero_intervention(self):
        scm = with_noise(builtin_scm("m1_simple"), zero_noise)
        draws = sample_interventional(scm, Intervention(2, 0.0), 5, 10, seed=0)
        assert np.all(draws == 0.0)

    def test_zero_noise_unit_intervention(self):
        scm = with_noise(builtin_scm("m1_simple"), zero_noise)
        draws = sample_interventional(scm, Intervention(2, 1.0), 5, 10, seed=0)
        assert np.all(draws == 1.0)

    def test_target_must_differ(self):
        with pytest.raises(ValueError):
            sample_interventional(builtin_scm("m1_simple"), Intervention(2, 1.0), 2, 10, 0)

    @pytest.mark.parametrize("x_value", [0.0, 1.0, -2.0])
    def test_m1_simple_mean_matches_analytic(self, x_value):
        n = 1_000_000
        draws = sample_interventional(
            builtin_scm("m1_simple"), Intervention(2, x_value), 5, n, seed=9
        )
        se = M1_DO_X5_STD / np.sqrt(n)
        assert abs(draws.mean() - x_value) < 3 * se

    def test_m1_simple_variance_constant_in_x(self):
        scm = builtin_scm("m1_simple")
        stds = [
            sample_interventional(scm, Intervention(2, x), 5, 200_000, seed=3).std()
            for x in (0.0, 2.0)
        ]
        assert all(abs(s - M1_DO_X5_STD) < 0.05 for s in stds)

    def test_monte_carlo_rate(self):
        # |mean - x| stays inside 3 SE as n grows by decades
        scm = builtin_scm("m1_simple")
        for n in (10**3, 10**4, 10**5):
            draws = sample_interventional(scm, Intervention(2, 1.0), 5, n, seed=100 + n)
            assert abs(draws.mean() - 1.0) < 3 * M1_DO_X5_STD / np.sqrt(n)


class TestAte:
    def test_zero_value_is_exactly_zero(self):
        assert ate(builtin_scm("m1_simple"), 2, 5, 0.0, 1000, seed=4) == 0.0

    @pytest.mark.parametrize("x_value", [1.0, -2.0])
    def test_m1_simple_matches_analytic(self, x_value):
        got = ate(builtin_scm("m1_simple"), 2, 5, x_value, 100_000, seed=4)
        # both arms share exogenous draws, so the difference is exact up to
        # float arithmetic; keep the generic 3-SE bound anyway
        assert abs(got - x_value) < 3 * np.sqrt(2) * M1_DO_X5_STD / np.sqrt(100_000)

    def test_cause_equals_outcome_rejected(self):
        with pytest.raises(ValueError):
            ate(builtin_scm("m1_simple"), 2, 2, 1.0, 10, 0)


class TestBuiltins:
    def test_names(self):
        assert set(SCM_NAMES) == set(DEFAULT_QUERY)
        for name in SCM_NAMES:
            assert builtin_scm(name).dag.node_count in (5, 6)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown SCM"):
            builtin_scm("m3_simple")

    def test_m1_dags(self):
        dag = builtin_scm("m1_simple").dag
        assert dag.edges == frozenset({(1, 2), (1, 3), (3, 4), (2, 5), (4, 5)})
        assert dag.observed == (False, True, True, False, True)

    def test_m2_dags(self):
        dag = builtin_scm("m2_complex").dag
        assert dag.edges == frozenset(
            {(1, 2), (2, 3), (3, 4), (3, 5), (2, 6), (4, 6), (5, 6)}
        )
        assert dag.observed == (True, False, True, True, True, True)

    def test_m1_simple_f3(self):
        f3 = builtin_scm("m1_simple").equations[2]
        assert f3({1: np.array([2.0])}, np.array([0.5]))[0] == pytest.approx(4.5)

    def test_m2_simple_f4(self):
        f4 = builtin_scm("m2_simple").equations[3]
        assert f4({3: np.array([2.0])}, np.array([0.25]))[0] == pytest.approx(10.25)

    def test_m1_complex_f4_not_additive(self):
        f4 = builtin_scm("m1_complex").equations[3]
        # x3 + x3 u + u
        assert f4({3: np.array([3.0])}, np.array([0.5]))[0] == pytest.approx(5.0)

    def test_m2_complex_f6_arguments(self):
        f6 = builtin_scm("m2_complex").equations[5]
        p = {2: np.array([2.0]), 4: np.array([3.0]), 5: np.array([5.0])}
        # x2^2 x4 + x2 x5 + x4 x5 + x2 u
        assert f6(p, np.array([1.0]))[0] == pytest.approx(4 * 3 + 2 * 5 + 3 * 5 + 2)

    def test_m1_complex_f3_uses_its_parent(self):
        f3 = builtin_scm("m1_complex").equations[2]
        out = f3({1: np.array([0.0])}, np.array([0.0]))
        assert out[0] == pytest.approx(1.0 / 1.1)


class TestNormalization:
    def test_observed_columns_standardized(self):
        matrix = sample_observational(builtin_scm("m1_simple"), 500, seed=8)
        normed = normalize(matrix)
        for node in (2, 3, 5):
            col = normed.column(node)
            assert abs(col.mean()) < 1e-6
            assert abs(col.std() - 1.0) < 1e-6
            mean, std = normed.normalization[node - 1]
            assert np.allclose(matrix.data[:, node - 1], col * std + mean)

    def test_masked_columns_have_no_transform(self):
        normed = normalize(sample_observational(builtin_scm("m1_simple"), 50, seed=8))
        assert normed.normalization[0] is None
        assert normed.normalization[3] is None

    def test_value_mapping_roundtrip(self):
        normed = normalize(sample_observational(builtin_scm("m2_simple"), 200, seed=1))
        for node in (1, 3, 4, 5, 6):
            assert to_raw(normed.normalization, node, to_normalized(normed.normalization, node, 2.5)) == pytest.approx(2.5)

    def test_missing_transform_rejected(self):
        normed = normalize(sample_observational(builtin_scm("m1_simple"), 50, seed=8))
        with pytest.raises(ValueError, match="no normalization"):
            to_raw(normed.normalization, 1, 0.0)


class TestExport:
    def test_csv_layout(self, tmp_path):
        matrix = sample_observational(builtin_scm("m1_simple"), 3, seed=0)
        path = tmp_path / "data.csv"
        export_csv(matrix, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# unobserved: 1 4"
        assert lines[1] == "X1,X2,X3,X4,X5"
        assert len(lines) == 5
        cells = lines[2].split(",")
        assert cells[0] == "nan" and cells[3] == "nan"
        assert float(cells[1]) == matrix.data[0, 1]

    def test_all_observed_comment(self, tmp_path):
        matrix = sample_observational(with_all_observed(builtin_scm("m1_simple")), 2, seed=0)
        path = tmp_path / "data.csv"
        export_csv(matrix, path)
        assert path.read_text().splitlines()[0] == "# unobserved:"
