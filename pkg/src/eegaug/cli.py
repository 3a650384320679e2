"""Command line for the augmentation pipeline: one verb per stage.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.
Diagnostics go to standard error; every produced artifact lands under the
requested output location and is written atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import augment as aug
from . import clf, dataio, evalx, featx, genmod, plotting
from .diffcore import stream as make_stream


def _fail(message, code=1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _write_text(path, text):
    dataio.atomic_write(path, text.encode())


def _write_manifest(out_dir, config_hash, files):
    manifest = {"config_hash": config_hash,
                "files": sorted(str(f) for f in files)}
    _write_text(out_dir / "manifest.json",
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@click.group()
def main():
    """Generative augmentation experiments for spectral feature vectors."""


# --- synth ---

@main.command()
@click.option("--preset", type=click.Choice(["seed-like", "deap-like",
                                             "seed-scarce"]),
              default="seed-like", show_default=True)
@click.option("--samples-per-class", type=int, default=None,
              help="Override the preset's per-class sample count.")
@click.option("--class-sep", type=float, default=None)
@click.option("--label-noise", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth(preset, samples_per_class, class_sep, label_noise, seed, out):
    """Generate a synthetic labeled feature file."""
    makers = {"seed-like": dataio.seed_like, "deap-like": dataio.deap_like,
              "seed-scarce": dataio.seed_scarce}
    kw = {"seed": seed}
    if samples_per_class is not None:
        kw["samples_per_class"] = samples_per_class
    if class_sep is not None:
        kw["class_sep"] = class_sep
    if label_noise is not None:
        kw["label_noise"] = label_noise
    try:
        ds = dataio.synth_generate(makers[preset](**kw))
        dataio.save_features(out, ds)
    except ValueError as err:
        _fail(err, code=2)
    click.echo(f"wrote {ds.n_samples} samples x {ds.dim} dims to {out}")


# --- features ---

@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="npz file with 'signals' and 'fs'.")
@click.option("--feature", type=click.Choice(["psd", "de"]), default="de",
              show_default=True)
@click.option("--scheme", type=click.Choice(["seed5", "deap4"]), default="seed5",
              show_default=True)
@click.option("--lds-ratio", type=float, default=0.1, show_default=True,
              help="Smoother noise ratio; pass 0 to disable smoothing.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def features(input_path, feature, scheme, lds_ratio, out):
    """Extract windowed spectral features from raw signals."""
    band_scheme = featx.SEED5 if scheme == "seed5" else featx.DEAP4
    try:
        archive = np.load(input_path)
        if "signals" not in archive or "fs" not in archive:
            raise ValueError("input must contain 'signals' and 'fs' arrays")
        signals = archive["signals"]
        fs = float(archive["fs"])
        labels = archive["labels"] if "labels" in archive else None
        if signals.ndim == 2:
            signals = signals[None, :, :]
            if labels is not None:
                labels = np.atleast_1d(labels)
        if labels is not None and labels.shape != (signals.shape[0],):
            raise ValueError("one label per trial required")
    except ValueError as err:
        _fail(err, code=2)

    try:
        ratio = lds_ratio if lds_ratio > 0 else None
        mats, row_labels = [], []
        for t in range(signals.shape[0]):
            fm = featx.extract(signals[t], fs, band_scheme, feature, ratio)
            mats.append(fm.data)
            if labels is not None:
                row_labels.append(np.full(fm.n_samples, labels[t]))
        data = np.concatenate(mats).astype(np.float32)
        full = featx.FeatureMatrix(data, fm.n_channels, fm.n_bands, feature)
        if labels is not None:
            y = np.concatenate(row_labels).astype(np.uint32)
            ds = dataio.LabeledDataset(full, y, int(y.max()) + 1 if y.size else 0)
        else:
            ds = dataio.LabeledDataset(full, None, 0)
        dataio.save_features(out, ds)
    except ValueError as err:
        _fail(err, code=2)
    except Exception as err:
        _fail(err)
    click.echo(f"wrote {ds.n_samples} windows x {ds.dim} dims to {out}")


# --- train-gen ---

@main.command("train-gen")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", "kind", type=click.Choice(["vae", "cvae", "wgan", "cwgan"]),
              required=True)
@click.option("--epochs", type=int, default=None,
              help="Defaults: 300 for the GAN family, 200 for the VAE family.")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--lr", type=float, default=None,
              help="Defaults: 1e-4 for the GAN family, 1e-3 for the VAE family.")
@click.option("--latent-dim", type=int, default=None)
@click.option("--hidden", type=str, default="256,256,256", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train_gen(data, kind, epochs, batch_size, lr, latent_dim, hidden, seed, out):
    """Train a generator and write its checkpoint plus a loss trace CSV."""
    try:
        ds = dataio.load_features(data)
        conditional = kind in ("cvae", "cwgan")
        if conditional and ds.labels is None:
            raise ValueError(f"--model {kind} needs labeled data")
        widths = tuple(int(w) for w in hidden.split(","))
    except (ValueError, dataio.FormatError) as err:
        _fail(err, code=2)

    n_classes = ds.n_classes if conditional else 0
    init = make_stream(seed, "cli-train-gen", kind)
    gan_family = kind in ("wgan", "cwgan")
    try:
        if gan_family:
            model = genmod.build_gan(ds.dim, init, noise_dim=latent_dim,
                                     n_classes=n_classes, hidden=widths)
            cfg = genmod.gan_config(seed=seed, epochs=300 if epochs is None else epochs,
                                    batch_size=batch_size,
                                    **({} if lr is None else {"lr": lr}))
        else:
            model = genmod.build_vae(ds.dim, init, latent_dim=latent_dim,
                                     n_classes=n_classes, hidden=widths)
            cfg = genmod.vae_config(seed=seed, epochs=200 if epochs is None else epochs,
                                    batch_size=batch_size,
                                    **({} if lr is None else {"lr": lr}))
        model.meta = {"n_channels": ds.features.n_channels,
                      "n_bands": ds.features.n_bands,
                      "feature_kind": ds.features.feature_kind}
        trace = genmod.train(model, ds.x, ds.labels if conditional else None,
                             config=cfg)
        genmod.save_model(out, model, seed=seed)
    except genmod.TrainingDiverged as err:
        _fail(f"training diverged: {err}")
    except ValueError as err:
        _fail(err, code=2)

    trace_path = Path(out).with_suffix(".losses.csv")
    if trace and "critic_loss" in trace[0]:
        lines = ["epoch,critic_loss,generator_loss"] + [
            f"{t['epoch']},{t['critic_loss']!r},{t['generator_loss']!r}"
            for t in trace]
    else:
        lines = ["epoch,loss"] + [f"{t['epoch']},{t['loss']!r}" for t in trace]
    _write_text(trace_path, "\n".join(lines) + "\n")
    click.echo(f"wrote checkpoint {out} and trace {trace_path}")


# --- augment ---

@main.command("augment")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--method", type=click.Choice(list(aug.METHODS)), required=True)
@click.option("--n", "count", type=int, required=True)
@click.option("--threshold", type=float, default=0.9, show_default=True)
@click.option("--max-rounds", type=int, default=50, show_default=True)
@click.option("--sigma", type=float, default=0.001, show_default=True)
@click.option("--angle", type=float, default=18.0, show_default=True)
@click.option("--gen-epochs", type=int, default=300, show_default=True)
@click.option("--gen-lr", type=float, default=1e-4, show_default=True)
@click.option("--gen-batch", type=int, default=32, show_default=True)
@click.option("--gen-hidden", type=str, default="256,256,256", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def augment_cmd(data, method, count, threshold, max_rounds, sigma, angle,
                gen_epochs, gen_lr, gen_batch, gen_hidden, seed, out):
    """Append generated rows to a dataset; writes the result plus a sidecar."""
    try:
        ds = dataio.load_features(data)
        if ds.labels is None:
            raise ValueError("augmentation needs a labeled dataset")
        plan = aug.AugmentationPlan(method, count, threshold=threshold,
                                    max_rounds=max_rounds, sigma=sigma,
                                    angle_deg=angle)
        options = evalx.SweepOptions(
            gen_epochs=gen_epochs, vae_epochs=gen_epochs, gen_lr=gen_lr,
            gen_batch=gen_batch,
            gen_hidden=tuple(int(w) for w in gen_hidden.split(",")),
            threshold=threshold, max_rounds=max_rounds, sigma=sigma,
            angle_deg=angle)
    except (ValueError, dataio.FormatError) as err:
        _fail(err, code=2)

    try:
        rows, labels, prov = evalx.build_pool(method, ds, count, seed, 0, options)
        if len(rows) < count:
            raise aug.RoundsExhausted(len(rows), count, max_rounds, 0.0)
        rows, labels, prov = rows[:count], labels[:count], prov[:count]
    except aug.RoundsExhausted as err:
        _fail(f"selective acceptance fell short: {err}")
    except genmod.TrainingDiverged as err:
        _fail(f"generator training diverged: {err}")

    augmented = ds.with_rows(rows.astype(np.float32), labels)
    dataio.save_features(out, augmented)
    sidecar = Path(str(out) + ".sidecar.csv")
    _write_text(sidecar, aug.sidecar_csv(prov))
    click.echo(f"wrote {augmented.n_samples} rows to {out} "
               f"({count} appended); sidecar {sidecar}")


# --- evaluate ---

@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--classifier", type=click.Choice(["svm", "dnn"]), default="svm",
              show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dnn-epochs", type=int, default=300, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def evaluate(data, classifier, folds, seed, dnn_epochs, out):
    """Cross-validated accuracy of a classifier on a labeled feature file."""
    try:
        ds = dataio.load_features(data)
        if ds.labels is None:
            raise ValueError("evaluation needs a labeled dataset")
        plan = evalx.make_folds(ds, folds, seed)
    except (ValueError, dataio.FormatError) as err:
        _fail(err, code=2)
    options = evalx.SweepOptions(folds=folds, dnn_epochs=dnn_epochs)
    cell = evalx.run_cell(ds, "gau", classifier, 0, plan, seed, options)
    if cell.status != "ok":
        _fail(cell.reason)
    for fold, acc in enumerate(cell.accuracies):
        click.echo(f"fold {fold}: {acc:.4f}")
    click.echo(f"mean {np.mean(cell.accuracies):.4f} "
               f"std {np.std(cell.accuracies):.4f}")
    if out:
        lines = ["fold,accuracy"] + [f"{i},{a!r}"
                                     for i, a in enumerate(cell.accuracies)]
        _write_text(out, "\n".join(lines) + "\n")


# --- sweep ---

_CONFIG_KEYS = {"dataset", "methods", "classifiers", "counts", "seeds",
                "output_dir", "jobs", "options"}
_SYNTH_KEYS = {"preset", "samples_per_class", "seed", "class_sep", "label_noise"}
_OPTION_KEYS = {f.name for f in
                __import__("dataclasses").fields(evalx.SweepOptions)} - {"montage"}


def _load_config(path):
    with open(path) as fh:
        raw = json.load(fh)
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("methods", "classifiers", "counts"):
        if key not in raw or not isinstance(raw[key], list) or not raw[key]:
            raise ValueError(f"config needs a nonempty list {key!r}")
    for m in raw["methods"]:
        if m not in aug.METHODS:
            raise ValueError(f"unknown method {m!r}")
    for c in raw["classifiers"]:
        if c not in ("svm", "dnn"):
            raise ValueError(f"unknown classifier {c!r}")
    dataset = raw.get("dataset")
    if not isinstance(dataset, dict) or not ({"path", "synth"} & set(dataset)):
        raise ValueError("config needs dataset.path or dataset.synth")
    if "synth" in dataset:
        unknown = set(dataset["synth"]) - _SYNTH_KEYS
        if unknown:
            raise ValueError(f"unknown dataset.synth keys: {sorted(unknown)}")
    options = raw.get("options", {})
    unknown = set(options) - _OPTION_KEYS
    if unknown:
        raise ValueError(f"unknown options keys: {sorted(unknown)}")
    raw.setdefault("seeds", [0])
    raw.setdefault("jobs", 1)
    raw.setdefault("output_dir", "sweep-out")
    return raw


def _config_dataset(config):
    dataset = config["dataset"]
    if "path" in dataset:
        return dataio.load_features(dataset["path"])
    synth_cfg = dict(dataset["synth"])
    preset = synth_cfg.pop("preset", "seed-like")
    makers = {"seed-like": dataio.seed_like, "deap-like": dataio.deap_like,
              "seed-scarce": dataio.seed_scarce}
    if preset not in makers:
        raise ValueError(f"unknown synth preset {preset!r}")
    return dataio.synth_generate(makers[preset](**synth_cfg))


def _config_hash(config, dataset):
    canon = json.dumps(config, sort_keys=True).encode()
    h = hashlib.sha256(canon)
    h.update(dataio.dataset_bytes(dataset))
    return h.hexdigest()[:16]


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True,
                                                         dir_okay=False),
              required=True)
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Overrides the config file's output_dir.")
@click.option("--jobs", type=int, default=None,
              help="Overrides the config file's worker count.")
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Also emit an accuracy-vs-count SVG.")
def sweep(config_path, output_dir, jobs, plot):
    """Run the full augmentation sweep described by a config file."""
    try:
        config = _load_config(config_path)
        options_kw = {k: tuple(v) if isinstance(v, list) else v
                      for k, v in config.get("options", {}).items()}
        options = evalx.SweepOptions(**options_kw)
        dataset = _config_dataset(config)
    except (ValueError, dataio.FormatError, OSError) as err:
        _fail(err, code=2)

    out_dir = Path(output_dir or config["output_dir"])
    jobs = jobs if jobs is not None else config["jobs"]
    out_dir.mkdir(parents=True, exist_ok=True)
    config_hash = _config_hash(config, dataset)
    cache_dir = out_dir / "cache" / config_hash
    cache_dir.mkdir(parents=True, exist_ok=True)

    def cell_hook(key, value):
        name = "_".join(str(p) for p in key[1:]) + ".json"
        path = cache_dir / name
        if value is None:
            if not path.exists():
                return None
            blob = json.loads(path.read_text())
            return evalx.CellResult(**blob)
        blob = {"method": value.method, "classifier": value.classifier,
                "count": value.count, "seed": value.seed,
                "accuracies": value.accuracies, "status": value.status,
                "reason": value.reason}
        _write_text(path, json.dumps(blob, sort_keys=True))
        return None

    reports = []
    for seed in config["seeds"]:
        reports.append(evalx.run_sweep(dataset, config["methods"],
                                       config["classifiers"], config["counts"],
                                       seed, options=options, jobs=jobs,
                                       cell_hook=cell_hook))
    report = evalx.merge_reports(reports)

    files = []
    csv_path = out_dir / "report.csv"
    _write_text(csv_path, report.to_csv())
    files.append(csv_path)
    md_path = out_dir / "report.md"
    _write_text(md_path, report.to_markdown())
    files.append(md_path)
    if plot:
        series = {}
        for (method, c), by_count in report.aggregates().items():
            series[f"{method}+{c}"] = [(count, mean)
                                       for count, (mean, _) in by_count.items()]
        svg_path = out_dir / "accuracy_vs_count.svg"
        _write_text(svg_path, plotting.svg_curves(
            series, "mean accuracy vs appended rows", "appended rows",
            "mean accuracy"))
        files.append(svg_path)
    _write_manifest(out_dir, config_hash, files + [out_dir / "manifest.json"])

    click.echo(report.to_markdown())
    if report.failures:
        click.echo(f"{len(report.failures)} cells failed; see report.csv",
                   err=True)
    if not report.rows:
        _fail("every cell failed")
    click.echo(f"report written to {csv_path}")


# --- plot ---

@main.command("plot")
@click.option("--kind", type=click.Choice(["curves", "pca"]), required=True)
@click.option("--report", "report_path", type=click.Path(exists=True,
                                                         dir_okay=False),
              default=None, help="report.csv from a sweep (curves).")
@click.option("--real", type=click.Path(exists=True, dir_okay=False),
              default=None, help="real feature file (pca).")
@click.option("--generated", type=click.Path(exists=True, dir_okay=False),
              default=None, help="generated feature file (pca).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def plot_cmd(kind, report_path, real, generated, out):
    """Render sweep curves or a 2-D PCA scatter of real vs generated rows."""
    if kind == "curves":
        if report_path is None:
            _fail("--kind curves needs --report", code=2)
        series = {}
        with open(report_path) as fh:
            header = fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) < 7 or parts[5] == "missing":
                    continue
                method, c, _, count, seed, fold, acc = parts[:7]
                series.setdefault(f"{method}+{c}", {}).setdefault(
                    int(count), []).append(float(acc))
        if not series:
            _fail("report holds no successful cells", code=2)
        curves = {name: sorted((count, float(np.mean(v)))
                               for count, v in by.items())
                  for name, by in series.items()}
        _write_text(out, plotting.svg_curves(curves,
                                             "mean accuracy vs appended rows",
                                             "appended rows", "mean accuracy"))
    else:
        if real is None or generated is None:
            _fail("--kind pca needs --real and --generated", code=2)
        try:
            ds_r = dataio.load_features(real)
            ds_g = dataio.load_features(generated)
        except dataio.FormatError as err:
            _fail(err, code=2)
        proj_r = plotting.pca_project(ds_r.x)
        proj_g = plotting.pca_project(ds_g.x, reference=ds_r.x)
        groups = {"real": (proj_r, True), "generated": (proj_g, False)}
        _write_text(out, plotting.svg_scatter(groups, "real vs generated (PCA)"))
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
