"""Command-line entry point.

Commands: validate, featurize, train, crossval, report, resample-report,
synth.  Options resolve as CLI flag > config file (--config TOML) > default;
MOODPIPE_SEED provides the global seed default.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evaluation, features_io, synth
from .config import PipelineConfig
from .corpus import KINDS, load_corpus
from .errors import MoodpipeError
from .models import fit_stack
from .nn.rng import RngState
from .sampling import build_training_samples, resample_summary


def _config(config_path, **overrides) -> PipelineConfig:
    base = PipelineConfig.from_toml(config_path) if config_path else PipelineConfig()
    return base.override(**overrides)


def _echo_issues(corpus):
    for issue in corpus.issues:
        click.echo(str(issue))


_kind_option = click.option("--kind", type=click.Choice(KINDS), default=None,
                            help="Corpus kind (default three-response).")
_config_option = click.option("--config", "config_path",
                              type=click.Path(exists=True, dir_okay=False),
                              default=None, help="TOML config file.")
_seed_option = click.option("--seed", type=int, default=None, envvar="MOODPIPE_SEED",
                            help="Global seed (env MOODPIPE_SEED).")


@click.group()
def main():
    """Multimodal depression-screening pipeline."""


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@_kind_option
@_config_option
def validate(root, kind, config_path):
    """Validate a corpus tree; exit 0 iff fully valid."""
    cfg = _config(config_path, corpus_root=str(root), kind=kind)
    try:
        corpus = load_corpus(cfg.corpus_root, cfg.kind)
    except MoodpipeError as exc:
        click.echo(f"invalid corpus: {exc}")
        sys.exit(1)
    _echo_issues(corpus)
    dep, non = corpus.count_labels()
    click.echo(f"{len(corpus.participants)} participants: "
               f"{dep} depressed / {non} non-depressed")
    sys.exit(0 if corpus.ok else 1)


@main.command()
@click.option("--corpus", "corpus_root", type=click.Path(exists=True, file_okay=False),
              default=None, help="Corpus root directory.")
@_kind_option
@_config_option
@click.option("--text", "only_text", is_flag=True, help="Text features only.")
@click.option("--audio", "only_audio", is_flag=True, help="Audio features only.")
def featurize(corpus_root, kind, config_path, only_text, only_audio):
    """Write mel-spectrogram and text-embedding files into the corpus tree."""
    cfg = _config(config_path, corpus_root=corpus_root, kind=kind)
    corpus = load_corpus(cfg.corpus_root, cfg.kind, load_audio=False)
    do_text = only_text or not only_audio
    do_audio = only_audio or not only_text
    report = features_io.featurize_corpus(
        corpus, mel_bins=cfg.mel_bins, frame_ms=cfg.frame_ms, hop_ms=cfg.hop_ms,
        do_audio=do_audio, do_text=do_text)
    click.echo(f"written {report['written']}, up-to-date {report['skipped']}")
    for r in report["rejections"]:
        click.echo(f"rejected {r['participant']} response {r['response']}: {r['reason']}")
    if report["rejections"]:
        click.echo(f"{len(report['rejections'])} response(s) rejected")


def _load_features(cfg):
    corpus = load_corpus(cfg.corpus_root, cfg.kind, load_audio=False)
    corpus.require_valid()
    try:
        features = features_io.load_corpus_features(corpus, cfg.mel_bins)
    except MoodpipeError as exc:
        raise click.ClickException(str(exc)) from exc
    return corpus, features


_MODALITIES = {"audio": ("audio",), "text": ("text",),
               "fusion": ("audio", "text", "fusion"),
               "all": ("audio", "text", "fusion")}


@main.command()
@click.option("--modality", type=click.Choice(sorted(_MODALITIES)), required=True)
@click.option("--corpus", "corpus_root", type=click.Path(exists=True, file_okay=False),
              default=None)
@_kind_option
@_config_option
@_seed_option
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=None, help="Batch size (0 = full batch).")
@click.option("--lr", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def train(modality, corpus_root, kind, config_path, seed, epochs, batch, lr, out_dir):
    """Train on the whole corpus (balanced/augmented) and save checkpoints."""
    cfg = _config(config_path, corpus_root=corpus_root, kind=kind, seed=seed,
                  epochs=epochs, batch=batch, lr=lr, out_dir=out_dir)
    corpus, features = _load_features(cfg)
    rng = RngState(cfg.seed)
    samples = build_training_samples(list(features.values()), cfg.kind,
                                     rng.child("sampling"))
    stack = fit_stack(samples, modalities=_MODALITIES[modality],
                      mel_bins=cfg.mel_bins, clusters=cfg.clusters,
                      lr=cfg.lr, epochs=cfg.epochs,
                      batch_size=cfg.batch or None, seed=rng.child("train").seed)
    out = Path(cfg.out_dir)
    evaluation._save_stack(stack, out)
    curves = {}
    for name, est in (("audio", stack.audio), ("text", stack.text),
                      ("fusion", stack.fusion)):
        if est is not None:
            curves[name] = est.loss_curve_
    (out / "loss_curves.json").write_text(json.dumps(curves, indent=2) + "\n",
                                          encoding="utf-8")
    click.echo(f"checkpoints written to {out}")


@main.command()
@click.option("--modality", type=click.Choice(sorted(_MODALITIES)), default="all")
@click.option("--corpus", "corpus_root", type=click.Path(exists=True, file_okay=False),
              default=None)
@_kind_option
@_config_option
@_seed_option
@click.option("--k", type=int, default=None, help="Number of folds.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=None, help="Batch size (0 = full batch).")
@click.option("--lr", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--save-checkpoints", is_flag=True, help="Keep per-fold checkpoints.")
def crossval(modality, corpus_root, kind, config_path, seed, k, epochs, batch, lr,
             out_dir, save_checkpoints):
    """Stratified k-fold cross-validation; writes report.json and report.txt."""
    cfg = _config(config_path, corpus_root=corpus_root, kind=kind, seed=seed,
                  k=k, epochs=epochs, batch=batch, lr=lr, out_dir=out_dir)
    corpus, features = _load_features(cfg)
    hyper = {"mel_bins": cfg.mel_bins, "clusters": cfg.clusters, "lr": cfg.lr,
             "epochs": cfg.epochs, "batch_size": cfg.batch or None}
    report = evaluation.run_crossval(
        corpus, features, modalities=_MODALITIES[modality], k=cfg.k, seed=cfg.seed,
        hyper=hyper,
        checkpoint_dir=Path(cfg.out_dir) / "checkpoints" if save_checkpoints else None)
    path = evaluation.write_report(report, cfg.out_dir)
    click.echo(evaluation.render_table(report), nl=False)
    click.echo(f"report written to {path}")


@main.command()
@click.argument("report_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "as_csv", is_flag=True, help="Machine-readable output.")
def report(report_json, as_csv):
    """Render a stored crossval report as a table (or CSV)."""
    doc = json.loads(Path(report_json).read_text(encoding="utf-8"))
    out = evaluation.render_csv(doc) if as_csv else evaluation.render_table(doc)
    click.echo(out, nl=False)


@main.command("resample-report")
@click.option("--corpus", "corpus_root", type=click.Path(exists=True, file_okay=False),
              default=None)
@_kind_option
@_config_option
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write JSON here instead of stdout.")
def resample_report(corpus_root, kind, config_path, seed, out_path):
    """Summarize what class balancing does to this corpus's training set."""
    cfg = _config(config_path, corpus_root=corpus_root, kind=kind, seed=seed)
    corpus, features = _load_features(cfg)
    summary = resample_summary(list(features.values()), cfg.kind,
                               RngState(cfg.seed).child("sampling"))
    doc = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(doc, encoding="utf-8")
        click.echo(f"summary written to {out_path}")
    else:
        click.echo(doc, nl=False)


@main.command("synth")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--depressed", type=int, default=30, show_default=True)
@click.option("--control", type=int, default=132, show_default=True)
@click.option("--kind", type=click.Choice(KINDS), default="three-response",
              show_default=True)
@click.option("--separability", type=click.Choice(["separable", "noisy"]),
              default="separable", show_default=True)
@click.option("--noise-sigma", type=float, default=0.0, show_default=True)
@click.option("--responses", type=int, default=None,
              help="Responses per participant (default 3 / 12 by kind).")
@click.option("--questionnaire", type=click.Choice(["sds", "phq8"]), default="sds",
              show_default=True)
@_seed_option
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML file with the same keys (flags win).")
def synth_cmd(out_dir, depressed, control, kind, separability, noise_sigma,
              responses, questionnaire, seed, spec_path):
    """Generate a deterministic synthetic corpus."""
    flag_for = {"n_depressed": ("depressed", depressed),
                "n_control": ("control", control),
                "kind": ("kind", kind),
                "separability": ("separability", separability),
                "noise_sigma": ("noise_sigma", noise_sigma),
                "responses": ("responses", responses),
                "questionnaire": ("questionnaire", questionnaire),
                "seed": ("seed", seed if seed is not None else 0)}
    values = {key: val for key, (_, val) in flag_for.items()}
    if spec_path:
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        file_values = tomllib.loads(Path(spec_path).read_text(encoding="utf-8"))
        unknown = set(file_values) - set(values)
        if unknown:
            raise click.ClickException(f"unknown spec keys: {sorted(unknown)}")
        ctx = click.get_current_context()
        for key, val in file_values.items():
            flag_name = flag_for[key][0]
            source = ctx.get_parameter_source(flag_name)
            if source != click.core.ParameterSource.COMMANDLINE:
                values[key] = val
    try:
        spec = synth.SynthSpec(**values)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    root = synth.generate(spec, out_dir)
    click.echo(f"synthetic corpus at {root} "
               f"({spec.n_depressed} depressed / {spec.n_control} control)")


if __name__ == "__main__":
    main()
