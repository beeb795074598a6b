"""Click CLI entrypoint for distilkit."""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
import sys
from collections.abc import Sequence
from datetime import UTC, datetime
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .bench import BenchModel, BenchPlan, run_plan, write_csv, write_plot_data
from .config import Config, load_config, validate_config
from .corpus import clean_files, corpus_stats, dedup_merge, load_rules
from .datasets import read_predictions, write_predictions
from .distill import encode_lines, init_student, pretrain_mlm, train_distill
from .encoder import (
    PRESETS,
    ModelConfig,
    count_params,
    get_preset_config,
    load_checkpoint,
    new_model,
    save_checkpoint,
    size_table,
)
from .errors import ConfigError, DistilkitError
from .fileio import atomic_write_text, sha256_file
from .finetune import (
    TASK_PRESETS,
    attach_head,
    evaluate,
    finetune,
    get_preset,
    load_task_model,
    predict,
    run_seeds,
    save_task_model,
)
from .formatters import render_report
from .loyalty import Divergence, LoyaltyMetric, multi_teacher_loyalty
from .models import RunManifest
from .tokenizer import Casing, load_vocab

console = Console(stderr=True)
out = Console()

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------

_config_option = click.option(
    "--config",
    default=None,
    help="Path to distilkit.toml (default: $DISTILKIT_CONFIG_DIR or ./distilkit.toml).",
    metavar="FILE",
)
_seed_option = click.option(
    "--seed", type=int, default=None, help="Random seed (default 42).", metavar="N"
)
_threads_option = click.option(
    "--threads", type=int, default=None, help="Worker threads (default 1).", metavar="N"
)
_format_option = click.option(
    "--format",
    "output_format",
    default=None,
    type=click.Choice(["table", "json"], case_sensitive=False),
    help="Report format (default table).",
)
_vocab_option = click.option(
    "--vocab",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="WordPiece vocabulary file, one token per line.",
    metavar="FILE",
)
_casing_option = click.option(
    "--casing",
    default=Casing.CASED.value,
    type=click.Choice([c.value for c in Casing]),
    show_default=True,
    help="Whether text is lowercased before WordPiece.",
)


def _run_options(fn):
    for option in reversed((_config_option, _seed_option, _threads_option, _format_option)):
        fn = option(fn)
    return fn


def _abort(msg: str, exit_code: int = 1) -> None:
    console.print(f"[bold red]Error:[/] {msg}")
    sys.exit(exit_code)


def _handle_errors(fn):
    """Turn library errors into an error message and exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DistilkitError as exc:
            _abort(str(exc))
        except OSError as exc:
            _abort(f"{exc.strerror or exc}: {exc.filename}" if exc.filename else str(exc))

    return wrapper


def _load_config(config, seed, threads, output_format) -> Config:
    try:
        return load_config(config, seed=seed, threads=threads, output_format=output_format)
    except ConfigError as exc:
        _report_config_errors(exc.errors)


def _report_config_errors(errors: Sequence[str]) -> None:
    for err in errors:
        console.print(f"[bold red]Config error:[/] {err}")
    sys.exit(1)


def _validate(cfg: Config) -> Config:
    errors = validate_config(cfg)
    if errors:
        _report_config_errors(errors)
    return cfg


def _load_and_validate(config, seed, threads, output_format) -> Config:
    return _validate(_load_config(config, seed, threads, output_format))


def _emit(record: dict | list[dict], cfg: Config, title: str = "") -> None:
    rendered = render_report(record, fmt=cfg.run.output_format, title=title)
    if cfg.run.output_format == "json":
        click.echo(rendered)
    else:
        out.print(rendered, end="", markup=False, highlight=False, soft_wrap=True)


def _manifest_path(command: str, output: Path) -> Path:
    if output.is_dir():
        return output / f"{command}.manifest.json"
    return output.with_name(output.name + ".manifest.json")


def _write_manifest(
    command: str,
    cfg: Config,
    inputs: Sequence[str | Path],
    outputs: Sequence[str | Path],
    anchor: str | Path,
) -> None:
    manifest = RunManifest(
        command=command,
        config=cfg.to_dict(),
        seed=cfg.run.seed,
        threads=cfg.run.threads,
        inputs=[str(p) for p in inputs],
        outputs={str(p): sha256_file(p) for p in outputs if Path(p).is_file()},
        timestamp=datetime.now(UTC).isoformat(timespec="seconds"),
        version=__version__,
    )
    path = _manifest_path(command, Path(anchor))
    atomic_write_text(path, json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False) + "\n")
    logger.debug("Wrote manifest %s.", path)


def _write_report(record: dict, path: str | None) -> None:
    if path:
        atomic_write_text(path, json.dumps(record, indent=2, ensure_ascii=False) + "\n")


def _read_lines(paths: Sequence[str]) -> list[str]:
    lines: list[str] = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            lines.extend(line.rstrip("\n") for line in fh)
    return lines


# ---------------------------------------------------------------------------
# CLI group
# ---------------------------------------------------------------------------


@click.group()
@click.version_option(package_name="distilkit")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Log debug detail.")
def cli(verbose):
    """distilkit: distil BERT-style encoders and measure what the student kept."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


# ---------------------------------------------------------------------------
# clean
# ---------------------------------------------------------------------------


@cli.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--output-dir", required=True, type=click.Path(file_okay=False), metavar="DIR",
    help="Directory for the cleaned files (same file names as the inputs).",
)
@click.option("--rules", type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="TOML cleaning rules; overrides [cleaning] in the config.")
@click.option("--dedup", "dedup_output", metavar="FILE",
              help="Also merge the cleaned files into FILE without duplicate lines.")
@_run_options
@_handle_errors
def clean(inputs, output_dir, rules, dedup_output, config, seed, threads, output_format):
    """Filter noisy lines out of raw corpus files."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    cleaning = load_rules(rules) if rules else cfg.cleaning
    target = Path(output_dir)
    target.mkdir(parents=True, exist_ok=True)
    jobs = [(Path(src), target / Path(src).name) for src in inputs]
    if len({dst for _, dst in jobs}) != len(jobs):
        _abort("input files must have distinct names")

    reports = clean_files(jobs, cleaning, workers=cfg.run.threads)
    outputs = [dst for _, dst in jobs]
    record = {"files": [r.to_dict() for r in reports]}
    if dedup_output:
        record["merged"] = dedup_merge(outputs, dedup_output).to_dict()
        outputs.append(Path(dedup_output))
    else:
        total = corpus_stats(outputs[0])
        for path in outputs[1:]:
            total = total + corpus_stats(path)
        record["stats"] = total.to_dict()
    _emit(record, cfg, title="Cleaning")
    _write_manifest("clean", cfg, inputs, outputs, dedup_output or target)


# ---------------------------------------------------------------------------
# init-model / params
# ---------------------------------------------------------------------------


@cli.command("init-model")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Named architecture.")
@click.option("--layers", type=int, help="Number of encoder layers.")
@click.option("--hidden", type=int, help="Hidden size.")
@click.option("--heads", type=int, help="Attention heads.")
@click.option("--vocab-size", type=int, help="Vocabulary size.")
@click.option("--max-position", type=int, help="Longest supported sequence.")
@click.option("--output", required=True, metavar="FILE", help="Checkpoint to write.")
@_run_options
@_handle_errors
def init_model(preset, layers, hidden, heads, vocab_size, max_position, output,
               config, seed, threads, output_format):
    """Write a randomly initialised encoder checkpoint."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    sizes = {
        "num_layers": layers, "hidden": hidden, "num_heads": heads,
        "vocab_size": vocab_size, "max_position": max_position,
    }
    overrides = {k: v for k, v in sizes.items() if v is not None}
    if preset:
        model_config = get_preset_config(preset, **overrides)
    else:
        missing = [f"--{k.replace('num_', '').replace('_', '-')}" for k in
                   ("num_layers", "hidden", "num_heads", "vocab_size") if k not in overrides]
        if missing:
            _abort(f"without --preset these options are required: {', '.join(missing)}")
        model_config = ModelConfig(**overrides)
    model = new_model(model_config, seed=cfg.run.seed)
    save_checkpoint(model, output, metadata={"preset": preset, "seed": cfg.run.seed})
    _emit({"output": output, "params": count_params(model), **model_config.to_dict()}, cfg,
          title="New model")
    _write_manifest("init-model", cfg, [], [output], output)


@cli.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="Count the parameters of this checkpoint instead of the presets.")
@_run_options
@_handle_errors
def params(checkpoint, config, seed, threads, output_format):
    """Print parameter counts and float32 sizes."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    if checkpoint:
        model = load_checkpoint(checkpoint)
        _emit({"checkpoint": checkpoint, "params": count_params(model),
               "params_with_mlm_head": count_params(model, include_mlm_head=True)}, cfg)
        return
    _emit([row.to_dict() for row in size_table()], cfg, title="Model sizes")


# ---------------------------------------------------------------------------
# pretrain / distill
# ---------------------------------------------------------------------------

_corpus_option = click.option(
    "--corpus", "corpus_paths", multiple=True, required=True,
    type=click.Path(exists=True, dir_okay=False), metavar="FILE",
    help="Training text, one example per line (repeatable).",
)
_metrics_option = click.option(
    "--metrics", "metrics_path", metavar="FILE", help="Per-step loss CSV to write."
)


def _distill_overrides(cfg: Config, **flags) -> Config:
    overrides = {k: v for k, v in flags.items() if v is not None}
    if overrides:
        cfg.distill = dataclasses.replace(cfg.distill, **overrides)
    return cfg


def _training_options(fn):
    options = (
        click.option("--epochs", type=int, help="Training epochs."),
        click.option("--batch-size", type=int, help="Examples per step."),
        click.option("--learning-rate", type=float, help="Peak learning rate."),
        click.option("--max-len", type=int, help="Tokens per example."),
    )
    for option in reversed(options):
        fn = option(fn)
    return fn


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Encoder checkpoint to train.")
@_vocab_option
@_casing_option
@_corpus_option
@click.option("--output", required=True, metavar="FILE", help="Checkpoint to write.")
@_metrics_option
@_training_options
@_run_options
@_handle_errors
def pretrain(model_path, vocab, casing, corpus_paths, output, metrics_path, epochs, batch_size,
             learning_rate, max_len, config, seed, threads, output_format):
    """Train an encoder with the masked-language-model loss alone."""
    cfg = _load_config(config, seed, threads, output_format)
    _distill_overrides(cfg, epochs=epochs, batch_size=batch_size,
                       learning_rate=learning_rate, max_len=max_len)
    _validate(cfg)
    tokens = load_vocab(vocab, casing)
    model = load_checkpoint(model_path)
    corpus = encode_lines(_read_lines(corpus_paths), tokens, cfg.distill.max_len)
    result = pretrain_mlm(model, corpus, cfg.distill, tokens, metrics_path=metrics_path)
    save_checkpoint(result.student, output, metadata={"pretrained_from": model_path})
    final = result.metrics[-1]
    _emit({"steps": len(result.metrics), "final_mlm_loss": final.mlm}, cfg, title="Pretraining")
    outputs = [output] + ([metrics_path] if metrics_path else [])
    _write_manifest("pretrain", cfg, [model_path, vocab, *corpus_paths], outputs, output)


@cli.command()
@click.option("--teacher", "teacher_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="Teacher checkpoint (repeat for an ensemble).")
@click.option("--student", "student_path", type=click.Path(exists=True, dir_okay=False),
              metavar="FILE", help="Student checkpoint (default: built from the first teacher).")
@click.option("--student-layers", type=int,
              help="Layers of a student built from the first teacher (default: half).")
@_vocab_option
@_casing_option
@_corpus_option
@click.option("--output", required=True, metavar="FILE", help="Student checkpoint to write.")
@_metrics_option
@click.option("--lambda-kd", type=float, help="Weight of the distillation loss.")
@click.option("--lambda-mlm", type=float, help="Weight of the masked-LM loss.")
@click.option("--lambda-cos", type=float, help="Weight of the cosine alignment loss.")
@click.option("--temperature", type=float, help="Softmax temperature.")
@_training_options
@_run_options
@_handle_errors
def distill(teacher_paths, student_path, student_layers, vocab, casing, corpus_paths, output,
            metrics_path, lambda_kd, lambda_mlm, lambda_cos, temperature, epochs, batch_size,
            learning_rate, max_len, config, seed, threads, output_format):
    """Distil one teacher, or an ensemble of teachers, into a smaller student."""
    cfg = _load_config(config, seed, threads, output_format)
    _distill_overrides(
        cfg, lambda_kd=lambda_kd, lambda_mlm=lambda_mlm, lambda_cos=lambda_cos,
        temperature=temperature, epochs=epochs, batch_size=batch_size,
        learning_rate=learning_rate, max_len=max_len,
    )
    _validate(cfg)
    tokens = load_vocab(vocab, casing)
    teachers = [load_checkpoint(p) for p in teacher_paths]
    if student_path:
        student = load_checkpoint(student_path)
    else:
        layers = student_layers or teachers[0].config.num_layers // 2
        student = init_student(teachers[0], layers)
    corpus = encode_lines(_read_lines(corpus_paths), tokens, cfg.distill.max_len)
    result = train_distill(
        teachers, student, corpus, cfg.distill, tokens,
        metrics_path=metrics_path, workers=cfg.run.threads,
    )
    save_checkpoint(result.student, output, metadata={"teachers": list(teacher_paths)})
    final = result.metrics[-1]
    _emit(
        {
            "teachers": len(teachers),
            "student_layers": result.student.config.num_layers,
            "steps": len(result.metrics),
            "final_total_loss": final.total,
            "zero_vector_positions": result.diagnostics.zero_vector_positions,
            "empty_kd_batches": result.diagnostics.empty_kd_batches,
        },
        cfg, title="Distillation",
    )
    inputs = [*teacher_paths, *([student_path] if student_path else []), vocab, *corpus_paths]
    outputs = [output] + ([metrics_path] if metrics_path else [])
    _write_manifest("distill", cfg, inputs, outputs, output)


# ---------------------------------------------------------------------------
# finetune / predict / evaluate
# ---------------------------------------------------------------------------

_task_option = click.option(
    "--task", type=click.Choice(sorted(TASK_PRESETS)), help="Evaluation task."
)


def _task_of(task_model, task: str | None):
    name = task or task_model.task
    if not name:
        _abort("the checkpoint does not name its task; pass --task")
    return get_preset(name)


@cli.command("finetune")
@click.option("--task", required=True, type=click.Choice(sorted(TASK_PRESETS)),
              help="Evaluation task.")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Encoder checkpoint to start from.")
@_vocab_option
@_casing_option
@click.option("--train", "train_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Training data.")
@click.option("--dev", "dev_path", type=click.Path(exists=True), metavar="FILE",
              help="Development data for metrics and early stopping.")
@click.option("--output", required=True, metavar="FILE", help="Task model checkpoint.")
@click.option("--seeds", type=click.IntRange(min=1), default=1, show_default=True,
              help="Repeat with this many seeds and report mean and std.")
@click.option("--epochs", type=int, help="Override the preset epoch count.")
@click.option("--batch-size", type=int, help="Override the preset batch size.")
@click.option("--learning-rate", type=float, help="Override the preset learning rate.")
@click.option("--warmup-steps", type=int, help="Override the preset warmup.")
@click.option("--max-len", type=int, help="Tokens per example.")
@_run_options
@_handle_errors
def finetune_cmd(task, model_path, vocab, casing, train_path, dev_path, output, seeds, epochs,
                 batch_size, learning_rate, warmup_steps, max_len, config, seed, threads,
                 output_format):
    """Fine-tune an encoder on one of the evaluation tasks."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    preset = get_preset(task)
    flags = {
        "epochs": epochs, "batch_size": batch_size, "learning_rate": learning_rate,
        "warmup_steps": warmup_steps, "max_len": max_len,
    }
    hp = preset.hyperparams.with_overrides(cfg.finetune.get(task, {}))
    hp = hp.with_overrides({k: v for k, v in flags.items() if v is not None})
    hp = dataclasses.replace(hp, seed=cfg.run.seed)
    errors = hp.validate()
    if errors:
        _report_config_errors([f"[finetune.{task}] {e}" for e in errors])
    if seeds > 1 and not dev_path:
        _abort("--seeds needs --dev to report metrics")

    tokens = load_vocab(vocab, casing)
    base = load_checkpoint(model_path)
    train_data = preset.read(train_path)
    dev_data = preset.read(dev_path) if dev_path else []
    labels = preset.label_set(train_data, dev_data)
    kind = preset.kind(labels)
    train_features = preset.features(train_data, tokens, labels, hp.max_len)
    dev_features = preset.features(dev_data, tokens, labels, hp.max_len) if dev_path else None

    def build(run_seed: int):
        return attach_head(base.copy(), kind, run_seed, hp.dropout, labels, task)

    if seeds > 1:
        built = []

        def build_and_keep(run_seed: int):
            built.append(build(run_seed))
            return built[-1]

        seed_list = [cfg.run.seed + i for i in range(seeds)]
        summary = run_seeds(
            build_and_keep, train_features, dev_features, hp, seed_list, metrics=preset.metrics
        )
        trained = built[0]
        record = summary.to_dict()
    else:
        result = finetune(build(cfg.run.seed), train_features, dev_features, hp,
                          metrics=preset.metrics)
        trained = result.task_model
        record = {"task": task, **result.dev_metrics, "epochs_run": len(result.history)}
        if result.best_epoch is not None:
            record["best_epoch"] = result.best_epoch
    save_task_model(trained, output, metadata={"base": model_path, "seed": cfg.run.seed})
    _emit(record, cfg, title=f"Fine-tuning {task}")
    inputs = [model_path, vocab, train_path, *([dev_path] if dev_path else [])]
    _write_manifest("finetune", cfg, inputs, [output], output)


@cli.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Task model checkpoint.")
@_vocab_option
@_casing_option
@click.option("--data", "data_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Dataset to predict.")
@_task_option
@click.option("--output", required=True, metavar="FILE", help="Prediction TSV to write.")
@click.option("--max-len", type=int, default=128, show_default=True, help="Tokens per example.")
@_run_options
@_handle_errors
def predict_cmd(model_path, vocab, casing, data_path, task, output, max_len, config, seed,
                threads, output_format):
    """Write a prediction set for a dataset."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    task_model = load_task_model(model_path)
    preset = _task_of(task_model, task)
    features = preset.features(
        preset.read(data_path), load_vocab(vocab, casing), task_model.label_names, max_len
    )
    predictions = predict(task_model, features, workers=cfg.run.threads)
    write_predictions(predictions, output)
    _emit({"output": output, "predictions": len(predictions), "kind": predictions.kind.value},
          cfg, title="Predictions")
    _write_manifest("predict", cfg, [model_path, vocab, data_path], [output], output)


@cli.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Task model checkpoint.")
@_vocab_option
@_casing_option
@click.option("--data", "data_path", required=True, type=click.Path(exists=True),
              metavar="FILE", help="Gold dataset.")
@_task_option
@click.option("--max-len", type=int, default=128, show_default=True, help="Tokens per example.")
@click.option("--output", metavar="FILE", help="Also write the metrics as JSON.")
@_run_options
@_handle_errors
def evaluate_cmd(model_path, vocab, casing, data_path, task, max_len, output, config, seed,
                 threads, output_format):
    """Score a task model on a gold dataset."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    task_model = load_task_model(model_path)
    preset = _task_of(task_model, task)
    features = preset.features(
        preset.read(data_path), load_vocab(vocab, casing), task_model.label_names, max_len
    )
    record = {"task": preset.name,
              **evaluate(task_model, features, preset.metrics, workers=cfg.run.threads)}
    _emit(record, cfg, title=f"Evaluation {preset.name}")
    if output:
        _write_report(record, output)
        _write_manifest("evaluate", cfg, [model_path, vocab, data_path], [output], output)


# ---------------------------------------------------------------------------
# loyalty
# ---------------------------------------------------------------------------


@cli.command()
@click.option("--teacher", "teacher_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="Teacher prediction set (repeat to average over teachers).")
@click.option("--student", "student_path", required=True,
              type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="Student prediction set.")
@click.option("--metric", "metric_names", multiple=True,
              type=click.Choice([m.value for m in LoyaltyMetric]),
              help="Restrict to these metrics (default: by prediction kind).")
@click.option("--divergence", default=Divergence.JS.value, show_default=True,
              type=click.Choice([d.value for d in Divergence]),
              help="Divergence behind probability loyalty.")
@click.option("--output", metavar="FILE", help="Also write the report as JSON.")
@_run_options
@_handle_errors
def loyalty(teacher_paths, student_path, metric_names, divergence, output, config, seed,
            threads, output_format):
    """Measure how closely a student follows its teacher(s)."""
    cfg = _load_and_validate(config, seed, threads, output_format)
    teachers = [read_predictions(p) for p in teacher_paths]
    student = read_predictions(student_path)
    report = multi_teacher_loyalty(teachers, student, divergence, metric_names or None)
    record = report.to_dict()
    _emit(record, cfg, title="Loyalty")
    if output:
        _write_report(record, output)
        _write_manifest("loyalty", cfg, [*teacher_paths, student_path], [output], output)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _parse_lengths(ctx, param, value):
    if value is None:
        return None
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter("expected comma-separated integers, e.g. 16,32,64") from None


@cli.command()
@click.option("--model", "model_paths", multiple=True,
              type=click.Path(exists=True, dir_okay=False), metavar="FILE",
              help="Checkpoint to time (repeatable).")
@click.option("--preset", "preset_names", multiple=True, type=click.Choice(sorted(PRESETS)),
              help="Time a randomly initialised preset (repeatable).")
@click.option("--lengths", callback=_parse_lengths, metavar="N,N,...",
              help="Sequence lengths (default 16,32,64,128,256,512).")
@click.option("--reps", type=int, help="Timed repetitions per length.")
@click.option("--warmup", type=int, help="Untimed repetitions per length.")
@click.option("--batch-size", type=int, help="Sequences per forward pass.")
@click.option("--output", required=True, metavar="FILE", help="Results CSV to write.")
@click.option("--plot", "plot_path", metavar="FILE", help="Also write plot data.")
@_run_options
@_handle_errors
def bench(model_paths, preset_names, lengths, reps, warmup, batch_size, output, plot_path,
          config, seed, threads, output_format):
    """Time forward passes over random sequences of graded lengths."""
    cfg = _load_config(config, seed, threads, output_format)
    overrides = {"lengths": lengths, "reps": reps, "warmup": warmup, "batch_size": batch_size}
    cfg.bench = dataclasses.replace(
        cfg.bench, **{k: v for k, v in overrides.items() if v is not None}
    )
    _validate(cfg)
    if not model_paths and not preset_names:
        _abort("pass at least one --model or --preset")
    models = [BenchModel(Path(p).stem, load_checkpoint(p)) for p in model_paths]
    models += [
        BenchModel(name, new_model(get_preset_config(name), seed=cfg.run.seed))
        for name in preset_names
    ]
    rows = run_plan(BenchPlan.from_settings(models, cfg.bench, threads=cfg.run.threads))
    write_csv(rows, output)
    outputs = [output]
    if plot_path:
        write_plot_data(rows, plot_path)
        outputs.append(plot_path)
    _emit([row.to_dict() for row in rows], cfg, title="Forward latency")
    _write_manifest("bench", cfg, list(model_paths), outputs, output)
