import filecmp
import os

import numpy as np
import pytest

from causal_diffusion.cli import main
from causal_diffusion.diffusion import TrainConfig
from causal_diffusion.harness import (
    ExperimentConfig,
    ate_report,
    derive_seed,
    emit_histogram,
    histogram_report,
    intervened_values,
    run_experiment,
    write_summary,
)
from causal_diffusion.metrics import KernelSpec


def tiny_config(scm_name="m1_simple", out_dir=None, **overrides):
    defaults = dict(
        scm_name=scm_name,
        n_train=100,
        n_generate=50,
        n_values=2,
        n_seeds=1,
        base_seed=0,
        oracle_n=50,
        train=TrainConfig(epochs=2, batch_size=32, T=10, hidden=(6, 6, 6)),
        out_dir=str(out_dir) if out_dir is not None else None,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestConfig:
    def test_default_query_filled(self):
        config = tiny_config("m2_complex")
        assert (config.cause, config.outcome) == (4, 6)

    def test_unknown_scm(self):
        with pytest.raises(ValueError, match="unknown SCM"):
            tiny_config("m9_simple")

    def test_bad_value_range(self):
        with pytest.raises(ValueError, match="low < high"):
            tiny_config(value_low=3.0, value_high=-3.0)

    def test_counts_positive(self):
        with pytest.raises(ValueError, match="positive"):
            tiny_config(n_values=0)

    def test_derive_seed_is_stable(self):
        assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
        assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)

    def test_intervened_values_in_range_and_shared(self):
        config = tiny_config(n_values=10)
        values = intervened_values(config)
        assert values.shape == (10,)
        assert np.all((values > -3) & (values < 3))
        assert np.array_equal(values, intervened_values(config))


class TestRunExperiment:
    def test_rows_and_files(self, tmp_path):
        config = tiny_config(out_dir=tmp_path / "out")
        rows = run_experiment(config)
        assert [r.method for r in rows] == ["dcm", "bdcm"]
        for row in rows:
            assert row.example == "m1_simple"
            assert len(row.raw) == config.n_seeds * config.n_values
            scores = [entry[3] for entry in row.raw]
            assert row.mmd_mean == pytest.approx(np.mean(scores), abs=1e-12)
            assert row.mmd_std == pytest.approx(np.std(scores, ddof=1), abs=1e-12)
            assert all(s >= 0 for s in scores)
        base = tmp_path / "out"
        assert (base / "summary.csv").is_file()
        assert (base / "m1_simple" / "values.csv").is_file()
        assert (base / "m1_simple" / "seed0" / "mmd_dcm.csv").is_file()
        assert (base / "m1_simple" / "seed0" / "mmd_bdcm.csv").is_file()

    def test_gammas_shared_between_methods(self, tmp_path):
        rows = run_experiment(tiny_config(out_dir=None))
        dcm, bdcm = rows
        assert [e[:3] for e in dcm.raw] == [e[:3] for e in bdcm.raw]

    def test_byte_identical_reruns(self, tmp_path):
        config_a = tiny_config(out_dir=tmp_path / "a")
        config_b = tiny_config(out_dir=tmp_path / "b")
        run_experiment(config_a)
        run_experiment(config_b)
        for dirpath, _, filenames in os.walk(tmp_path / "a"):
            rel = os.path.relpath(dirpath, tmp_path / "a")
            for fname in filenames:
                left = os.path.join(dirpath, fname)
                right = os.path.join(tmp_path / "b", rel, fname)
                assert filecmp.cmp(left, right, shallow=False), f"{rel}/{fname} differs"

    def test_summary_recomputable_from_raw(self, tmp_path):
        config = tiny_config(out_dir=tmp_path / "out")
        run_experiment(config)
        raw = {}
        for method in ("dcm", "bdcm"):
            scores = []
            for seed_idx in range(config.n_seeds):
                path = tmp_path / "out" / "m1_simple" / f"seed{seed_idx}" / f"mmd_{method}.csv"
                for line in path.read_text().splitlines()[1:]:
                    scores.append(float(line.split(",")[2]))
            raw[method] = scores
        for line in (tmp_path / "out" / "summary.csv").read_text().splitlines()[1:]:
            example, method, mean, std, n = line.split(",")
            assert example == "m1_simple"
            assert float(mean) == pytest.approx(np.mean(raw[method]), abs=1e-12)
            assert float(std) == pytest.approx(np.std(raw[method], ddof=1), abs=1e-12)
            assert int(n) == len(raw[method])

    def test_write_summary_layout(self, tmp_path):
        rows = run_experiment(tiny_config())
        path = tmp_path / "summary.csv"
        write_summary(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "example,method,mmd_mean,mmd_std,n"
        assert len(lines) == 3

    def test_errors_carry_seed_value_method_context(self):
        # intervening on an unobserved node fails in training; the harness
        # must say where
        config = tiny_config("m1_simple", cause=4, outcome=5)
        with pytest.raises(RuntimeError, match="m1_simple: training failed at seed 0"):
            run_experiment(config)

    def test_training_data_masked_columns_never_read(self):
        from causal_diffusion.harness import train_models

        config = tiny_config("m1_simple")
        data, _, _ = train_models(config, seed_idx=0)
        assert data.read_counts[0] == 0
        assert data.read_counts[3] == 0


class TestHistogram:
    def test_identical_samples_identical_counts(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(200)
        path = tmp_path / "hist.csv"
        emit_histogram(x, x.copy(), bins=12, path=path)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_left,method_count,truth_count"
        assert len(lines) == 13
        for line in lines[1:]:
            _, a, b = line.split(",")
            assert a == b

    def test_disjoint_supports_never_overlap(self, tmp_path):
        path = tmp_path / "hist.csv"
        emit_histogram([0.0, 0.5, 1.0], [10.0, 10.5, 11.0], bins=20, path=path)
        for line in path.read_text().splitlines()[1:]:
            _, a, b = line.split(",")
            assert int(a) == 0 or int(b) == 0

    def test_counts_cover_all_samples(self, tmp_path):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal(150), rng.standard_normal(80) + 1
        path = tmp_path / "hist.csv"
        emit_histogram(x, y, bins=10, path=path)
        totals = np.array(
            [[int(c) for c in line.split(",")[1:]] for line in path.read_text().splitlines()[1:]]
        ).sum(axis=0)
        assert totals.tolist() == [150, 80]

    def test_constant_data(self, tmp_path):
        path = tmp_path / "hist.csv"
        emit_histogram([2.0, 2.0], [2.0], bins=4, path=path)
        assert len(path.read_text().splitlines()) == 5

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_histogram([], [1.0], bins=4, path=tmp_path / "h.csv")

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_histogram([1.0, 2.0], [1.0], bins=2, path=tmp_path)

    def test_histogram_report_writes_file(self, tmp_path):
        path = tmp_path / "hist.csv"
        histogram_report(tiny_config(), "bdcm", value=0.5, bins=8, path=path)
        assert len(path.read_text().splitlines()) == 9


class TestAteReport:
    def test_zero_value_gives_exactly_zero(self):
        method_ate, oracle_ate = ate_report(tiny_config(), "dcm", 0.0, oracle_n=200)
        assert method_ate == 0.0
        assert oracle_ate == 0.0

    def test_returns_pair(self):
        method_ate, oracle_ate = ate_report(tiny_config(), "bdcm", 1.0, oracle_n=2000)
        assert np.isfinite(method_ate) and np.isfinite(oracle_ate)

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="unknown method"):
            ate_report(tiny_config(), "pcm", 1.0)


CLI_TINY = [
    "--epochs", "2", "--batch-size", "32", "--timesteps", "10",
    "--n-train", "100", "--n-generate", "50",
]


class TestCli:
    def test_adjust_prints_set(self, tmp_path, capsys):
        dag_file = tmp_path / "dag.txt"
        dag_file.write_text("5\n1 2\n1 3\n3 4\n2 5\n4 5\nunobserved: 1 4\n")
        assert main(["adjust", "--dag", str(dag_file), "--cause", "2", "--outcome", "5"]) == 0
        assert capsys.readouterr().out.strip() == "{3}"

    def test_adjust_prints_none(self, tmp_path, capsys):
        dag_file = tmp_path / "dag.txt"
        dag_file.write_text("3\n2 1\n2 3\nunobserved: 2\n")
        assert main(["adjust", "--dag", str(dag_file), "--cause", "1", "--outcome", "3"]) == 0
        assert capsys.readouterr().out.strip() == "none"

    def test_adjust_empty_set(self, tmp_path, capsys):
        dag_file = tmp_path / "dag.txt"
        dag_file.write_text("3\n1 2\n2 3\nunobserved:\n")
        assert main(["adjust", "--dag", str(dag_file), "--cause", "2", "--outcome", "3"]) == 0
        assert capsys.readouterr().out.strip() == "{}"

    def test_missing_dag_file_fails_with_diagnostic(self, tmp_path, capsys):
        code = main(["adjust", "--dag", str(tmp_path / "nope.txt"), "--cause", "1", "--outcome", "2"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_run_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "results"
        code = main(
            ["run", "--scm", "m1_simple", "--seeds", "1", "--values", "1", "--out", str(out)]
            + CLI_TINY
        )
        assert code == 0
        assert (out / "summary.csv").is_file()
        stdout = capsys.readouterr().out
        assert "m1_simple dcm" in stdout and "m1_simple bdcm" in stdout

    def test_histogram_command(self, tmp_path):
        out = tmp_path / "hist.csv"
        code = main(
            ["histogram", "--scm", "m1_simple", "--method", "bdcm", "--value", "0.3",
             "--out", str(out), "--bins", "6"] + CLI_TINY
        )
        assert code == 0
        assert len(out.read_text().splitlines()) == 7

    def test_ate_command(self, capsys):
        code = main(["ate", "--scm", "m1_simple", "--method", "dcm", "--value", "0"] + CLI_TINY)
        assert code == 0
        out = capsys.readouterr().out
        assert "dcm ate = 0" in out
        assert "oracle ate = 0" in out

    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nepochs = 2\nn_train = 100\nn_generate = 50\ntimesteps = 10\nbatch_size = 32\n")
        out = tmp_path / "results"
        code = main(
            ["run", "--scm", "m1_simple", "--seeds", "1", "--values", "1",
             "--epochs", "500", "--out", str(out), "--config", str(cfg)]
        )
        assert code == 0

    def test_config_file_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epoch = 2\n")
        code = main(
            ["run", "--scm", "m1_simple", "--seeds", "1", "--values", "1",
             "--out", str(tmp_path / "o"), "--config", str(cfg)]
        )
        assert code == 1
        assert "unknown config key" in capsys.readouterr().err
