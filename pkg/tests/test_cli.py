import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from eegaug import augment, dataio, genmod
from eegaug.cli import main
from eegaug.diffcore import stream


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


def make_small_file(path, seed=0, n_per_class=20, labeled=True):
    spec = dataio.SynthSpec(2, 4, 2, n_per_class, class_sep=2.0, seed=seed)
    ds = dataio.synth_generate(spec)
    if not labeled:
        ds = dataio.LabeledDataset(ds.features, None, 0)
    dataio.save_features(path, ds)
    return ds


# --- synth ---

def test_synth_writes_expected_dims(runner, tmp_path):
    out = tmp_path / "d.eafx"
    res = invoke(runner, "synth", "--preset", "seed-like",
                 "--samples-per-class", 3, "--out", out)
    assert res.exit_code == 0
    ds = dataio.load_features(out)
    assert ds.dim == 310
    assert ds.n_samples == 9


def test_synth_deap_preset_dims(runner, tmp_path):
    out = tmp_path / "d.eafx"
    res = invoke(runner, "synth", "--preset", "deap-like",
                 "--samples-per-class", 2, "--out", out)
    assert res.exit_code == 0
    assert dataio.load_features(out).dim == 128


def test_unknown_flag_exits_2(runner):
    res = runner.invoke(main, ["synth", "--nonsense", "1"])
    assert res.exit_code == 2


# --- features ---

def test_features_from_sinusoid(runner, tmp_path):
    fs = 200.0
    t = np.arange(int(fs) * 4) / fs
    signals = np.stack([np.sin(2 * np.pi * 10.0 * t),
                        np.sin(2 * np.pi * 20.0 * t)])
    src = tmp_path / "sig.npz"
    np.savez(src, signals=signals, fs=fs)
    out = tmp_path / "f.eafx"
    res = invoke(runner, "features", "--input", src, "--feature", "psd",
                 "--scheme", "seed5", "--out", out)
    assert res.exit_code == 0
    ds = dataio.load_features(out)
    assert ds.dim == 2 * 5
    assert ds.n_samples == 4


def test_features_missing_input_exits_2_naming_flag(runner, tmp_path):
    res = runner.invoke(main, ["features", "--input", str(tmp_path / "nope.npz"),
                               "--out", str(tmp_path / "o.eafx")])
    assert res.exit_code == 2
    assert "--input" in res.output


def test_features_de_white_noise_calibration(runner, tmp_path):
    rng = stream(3, "cli-de")
    signals = rng.standard_normal((1, 200 * 600))
    src = tmp_path / "white.npz"
    np.savez(src, signals=signals, fs=200.0)
    out = tmp_path / "de.eafx"
    res = invoke(runner, "features", "--input", src, "--feature", "de",
                 "--lds-ratio", 0, "--out", out)
    assert res.exit_code == 0
    ds = dataio.load_features(out)
    target = 0.5 * math.log(2 * math.pi * math.e)
    means = ds.x.mean(axis=0)
    # the wide gamma band (20 bins) has negligible bias
    assert abs(means[4] - target) < 0.05
    assert np.all(np.abs(means - target) < 0.15)


def test_features_labeled_trials(runner, tmp_path):
    fs = 200.0
    rng = stream(4, "cli-lab")
    signals = rng.standard_normal((3, 2, int(fs) * 2))
    src = tmp_path / "lab.npz"
    np.savez(src, signals=signals, fs=fs, labels=np.array([0, 1, 0]))
    out = tmp_path / "lab.eafx"
    res = invoke(runner, "features", "--input", src, "--feature", "de",
                 "--out", out)
    assert res.exit_code == 0
    ds = dataio.load_features(out)
    assert ds.n_samples == 6
    np.testing.assert_array_equal(ds.labels, [0, 0, 1, 1, 0, 0])


# --- train-gen ---

def test_train_gen_conditional_checkpoint_tag(runner, tmp_path):
    data = tmp_path / "d.eafx"
    make_small_file(data)
    out = tmp_path / "m.eagm"
    res = invoke(runner, "train-gen", "--data", data, "--model", "cwgan",
                 "--epochs", 1, "--hidden", "8", "--out", out)
    assert res.exit_code == 0
    ck = genmod.load_checkpoint(out)
    assert ck.kind == "cwgan"
    assert (tmp_path / "m.losses.csv").exists()


def test_train_gen_wgan_on_unlabeled_ok_cwgan_rejected(runner, tmp_path):
    data = tmp_path / "u.eafx"
    make_small_file(data, labeled=False)
    ok = runner.invoke(main, ["train-gen", "--data", str(data), "--model", "wgan",
                              "--epochs", 1, "--hidden", "8",
                              "--out", str(tmp_path / "w.eagm")])
    assert ok.exit_code == 0
    bad = runner.invoke(main, ["train-gen", "--data", str(data), "--model", "cwgan",
                               "--epochs", 1, "--hidden", "8",
                               "--out", str(tmp_path / "c.eagm")])
    assert bad.exit_code == 2
    assert "label" in bad.output


def test_train_gen_zero_epochs_equals_initialization(runner, tmp_path):
    data = tmp_path / "d.eafx"
    ds = make_small_file(data, seed=5)
    out = tmp_path / "init.eagm"
    res = invoke(runner, "train-gen", "--data", data, "--model", "vae",
                 "--epochs", 0, "--hidden", "8", "--seed", 7, "--out", out)
    assert res.exit_code == 0
    loaded = genmod.load_model(out)
    fresh = genmod.build_vae(ds.dim, stream(7, "cli-train-gen", "vae"),
                             hidden=(8,))
    for k, v in fresh.params.items():
        np.testing.assert_allclose(loaded.params[k].data,
                                   v.data.astype(np.float32), atol=1e-7)


# --- augment ---

def test_augment_gau_appends_exact_count(runner, tmp_path):
    data = tmp_path / "d.eafx"
    ds = make_small_file(data)
    out = tmp_path / "aug.eafx"
    res = invoke(runner, "augment", "--data", data, "--method", "gau",
                 "--n", 200, "--out", out)
    assert res.exit_code == 0
    augmented = dataio.load_features(out)
    assert augmented.n_samples == ds.n_samples + 200
    sidecar = augment.read_sidecar((tmp_path / "aug.eafx.sidecar.csv").read_text())
    assert len(sidecar) == 200


def test_augment_zero_rows_is_identity(runner, tmp_path):
    data = tmp_path / "d.eafx"
    make_small_file(data)
    out = tmp_path / "same.eafx"
    res = invoke(runner, "augment", "--data", data, "--method", "gau",
                 "--n", 0, "--out", out)
    assert res.exit_code == 0
    assert out.read_bytes() == data.read_bytes()


def test_augment_selective_sidecar_confidences(runner, tmp_path):
    data = tmp_path / "d.eafx"
    make_small_file(data, n_per_class=30)
    out = tmp_path / "sel.eafx"
    res = invoke(runner, "augment", "--data", data, "--method", "swgan",
                 "--n", 25, "--threshold", 0.9, "--gen-epochs", 40,
                 "--gen-lr", 1e-3, "--gen-hidden", "16,16", "--out", out)
    assert res.exit_code == 0
    sidecar = augment.read_sidecar((tmp_path / "sel.eafx.sidecar.csv").read_text())
    assert len(sidecar) == 25
    assert all(row.confidence > 0.9 for row in sidecar)


def test_augment_rounds_exhausted_exits_1_with_rate(runner, tmp_path):
    data = tmp_path / "d.eafx"
    make_small_file(data)
    res = runner.invoke(main, ["augment", "--data", str(data), "--method", "swgan",
                               "--n", 10, "--threshold", "1.0", "--max-rounds", "2",
                               "--gen-epochs", "0", "--gen-hidden", "8",
                               "--out", str(tmp_path / "x.eafx")])
    assert res.exit_code == 1
    assert "acceptance rate" in res.output


# --- evaluate ---

def test_evaluate_reports_fold_accuracies(runner, tmp_path):
    data = tmp_path / "d.eafx"
    make_small_file(data, n_per_class=25)
    out = tmp_path / "acc.csv"
    res = invoke(runner, "evaluate", "--data", data, "--out", out)
    assert res.exit_code == 0
    assert "mean" in res.output
    assert out.read_text().startswith("fold,accuracy")


# --- sweep ---

def sweep_config(tmp_path, counts, methods=("gau",), seeds=(0,)):
    config = {
        "dataset": {"synth": {"preset": "seed-scarce", "samples_per_class": 12,
                              "seed": 1, "class_sep": 2.0, "label_noise": 0.0}},
        "methods": list(methods),
        "classifiers": ["svm"],
        "counts": list(counts),
        "seeds": list(seeds),
        "output_dir": str(tmp_path / "out"),
        "options": {"svm_c_grid": [1.0], "gen_epochs": 5, "vae_epochs": 5,
                    "gen_hidden": [8], "gen_batch": 8},
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config))
    return path


def test_sweep_baseline_only_and_manifest(runner, tmp_path):
    cfg = sweep_config(tmp_path, [0])
    res = invoke(runner, "sweep", "--config", cfg)
    assert res.exit_code == 0
    out = tmp_path / "out"
    report = (out / "report.csv").read_text()
    assert report.count("\n") == 6  # header + 5 folds
    manifest = json.loads((out / "manifest.json").read_text())
    assert any("report.csv" in f for f in manifest["files"])


def test_sweep_rejects_unknown_config_keys(runner, tmp_path):
    cfg = sweep_config(tmp_path, [0])
    raw = json.loads(cfg.read_text())
    raw["surprise"] = True
    cfg.write_text(json.dumps(raw))
    res = runner.invoke(main, ["sweep", "--config", str(cfg)])
    assert res.exit_code == 2
    assert "surprise" in res.output


def test_sweep_requires_baseline_count(runner, tmp_path):
    cfg = sweep_config(tmp_path, [100])
    res = runner.invoke(main, ["sweep", "--config", str(cfg)])
    assert res.exit_code == 1


def test_sweep_reruns_byte_identical_and_cached(runner, tmp_path):
    cfg = sweep_config(tmp_path, [0, 20], methods=("gau", "rda"))
    # seed-scarce preset is 62-channel, so rda uses the bundled montage
    res = invoke(runner, "sweep", "--config", cfg)
    assert res.exit_code == 0
    out = tmp_path / "out"
    first = (out / "report.csv").read_bytes()
    cache_files = sorted((out / "cache").rglob("*.json"))
    assert cache_files
    stamps = {p: p.stat().st_mtime_ns for p in cache_files}

    res = invoke(runner, "sweep", "--config", cfg)
    assert res.exit_code == 0
    assert (out / "report.csv").read_bytes() == first
    for p, stamp in stamps.items():
        assert p.stat().st_mtime_ns == stamp  # cached cells were not recomputed


def test_sweep_two_output_dirs_byte_identical(runner, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    cfg1 = sweep_config(tmp_path / "a", [0, 15])
    cfg2 = sweep_config(tmp_path / "b", [0, 15])
    assert invoke(runner, "sweep", "--config", cfg1).exit_code == 0
    assert invoke(runner, "sweep", "--config", cfg2).exit_code == 0
    a = (tmp_path / "a" / "out" / "report.csv").read_bytes()
    b = (tmp_path / "b" / "out" / "report.csv").read_bytes()
    assert a == b


def test_sweep_plot_flag_writes_svg(runner, tmp_path):
    cfg = sweep_config(tmp_path, [0, 10])
    res = invoke(runner, "sweep", "--config", cfg, "--plot")
    assert res.exit_code == 0
    svg = (tmp_path / "out" / "accuracy_vs_count.svg").read_text()
    assert svg.startswith("<svg")


# --- plot ---

def test_plot_curves_from_report(runner, tmp_path):
    cfg = sweep_config(tmp_path, [0, 10])
    invoke(runner, "sweep", "--config", cfg)
    out = tmp_path / "curves.svg"
    res = invoke(runner, "plot", "--kind", "curves", "--report",
                 tmp_path / "out" / "report.csv", "--out", out)
    assert res.exit_code == 0
    assert out.read_text().startswith("<svg")


def test_plot_pca_scatter(runner, tmp_path):
    real = tmp_path / "real.eafx"
    gen = tmp_path / "gen.eafx"
    make_small_file(real, seed=1)
    make_small_file(gen, seed=2)
    out = tmp_path / "pca.svg"
    res = invoke(runner, "plot", "--kind", "pca", "--real", real,
                 "--generated", gen, "--out", out)
    assert res.exit_code == 0
    assert "circle" in out.read_text()


def test_plot_pca_missing_inputs_exit_2(runner, tmp_path):
    res = runner.invoke(main, ["plot", "--kind", "pca",
                               "--out", str(tmp_path / "x.svg")])
    assert res.exit_code == 2
