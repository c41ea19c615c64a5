"""Batch command-line surface over the pipeline stages.

Every stage reads and writes plain directories, so any step can be re-run
or substituted (for example with hand-corrected gold labels) before the
next one.

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import pipeline
from .corpus import CorpusError, compute_stats, load_corpus, stats_csv
from .gateway import Gateway, GatewayError, load_gateway_config
from .model import DatasetId, Strategy
from .persistence import PersistenceError

_DATASET_CHOICE = click.Choice([d.value for d in DatasetId])
_STRATEGY_CHOICE = click.Choice([s.value for s in Strategy])

USAGE_EXIT = 1
DATA_EXIT = 2
PROVIDER_EXIT = 3


def _gateway(config_path: str | None, cache_dir: str | None) -> Gateway:
    path = Path(config_path) if config_path else pipeline.demo_config_path()
    return Gateway(load_gateway_config(path), cache_dir=cache_dir)


def _models(raw: str) -> list[str]:
    models = [m.strip() for m in raw.split(",") if m.strip()]
    if not models:
        raise click.BadParameter("expected a comma-separated model list")
    return models


def _emit_prompts(result: pipeline.StageResult) -> None:
    for label, prompt in result.prompts:
        click.echo(f"--- {label} ---")
        click.echo(prompt)
        click.echo()


def _finish(result: pipeline.StageResult) -> None:
    """Report failures on stderr and exit with the worst failure class."""
    for failure in result.failures:
        click.echo(
            f"{failure.dispute_id}: {failure.kind}: {failure.detail}", err=True
        )
    if "provider" in result.failure_kinds:
        sys.exit(PROVIDER_EXIT)
    if "data" in result.failure_kinds:
        sys.exit(DATA_EXIT)


def _config_options(fn):
    fn = click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Gateway configuration JSON; defaults to the bundled mock-provider config.",
    )(fn)
    fn = click.option(
        "--cache-dir",
        default=None,
        help="Response cache directory (overrides DRASSIST_CACHE_DIR and the config).",
    )(fn)
    return fn


@click.group()
def cli() -> None:
    """Dispute-resolution assistance pipeline."""


@cli.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", required=True, type=_DATASET_CHOICE)
@click.option("--models", "models_raw", required=True, help="Comma-separated chat model ids.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--merge-model", default=None, help="Model that merges candidate summaries; defaults to the first of --models.")
@click.option("--parallel", default=4, show_default=True, help="Concurrent disputes.")
@click.option("--dry-run", is_flag=True, help="Print the exact prompts and make no calls.")
@_config_options
def summarize(corpus_dir, dataset, models_raw, out_dir, merge_model, parallel, dry_run, config_path, cache_dir):
    """Write per-model and merged structured summaries for a corpus."""
    result = pipeline.summarize_corpus(
        corpus_dir,
        DatasetId(dataset),
        _models(models_raw),
        out_dir,
        gateway=_gateway(config_path, cache_dir),
        merge_model_id=merge_model,
        parallel=parallel,
        dry_run=dry_run,
    )
    _emit_prompts(result)
    _finish(result)


@cli.command(name="ground-truth")
@click.option("--summaries", "summaries_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt-model", required=True, help="Model that reads decided labels off the full dispute text.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--parallel", default=4, show_default=True)
@click.option("--dry-run", is_flag=True, help="Print the exact prompts and make no calls.")
@_config_options
def ground_truth(summaries_dir, corpus_dir, gt_model, out_dir, parallel, dry_run, config_path, cache_dir):
    """Derive gold labels for every summarized dispute."""
    result = pipeline.ground_truth_corpus(
        summaries_dir,
        corpus_dir,
        gt_model,
        out_dir,
        gateway=_gateway(config_path, cache_dir),
        parallel=parallel,
        dry_run=dry_run,
    )
    _emit_prompts(result)
    _finish(result)


@cli.command()
@click.option("--summaries", "summaries_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--strategy", required=True, type=_STRATEGY_CHOICE)
@click.option("--models", "models_raw", required=True, help="Comma-separated chat model ids in priority order.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--parallel", default=4, show_default=True)
@click.option("--dry-run", is_flag=True, help="Print the exact prompts and make no calls.")
@_config_options
def resolve(summaries_dir, strategy, models_raw, out_dir, parallel, dry_run, config_path, cache_dir):
    """Predict the stronger party (and, per strategy, demand and argument
    labels) from the merged summaries."""
    result = pipeline.resolve_corpus(
        summaries_dir,
        Strategy(strategy),
        _models(models_raw),
        out_dir,
        gateway=_gateway(config_path, cache_dir),
        parallel=parallel,
        dry_run=dry_run,
    )
    _emit_prompts(result)
    _finish(result)


@cli.command()
@click.option("--resolutions", "resolutions_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--embed-model", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--parallel", default=4, show_default=True)
@_config_options
def align(resolutions_dir, gt_dir, embed_model, out_dir, parallel, config_path, cache_dir):
    """Match predicted demand/argument items onto the gold items by
    embedding distance."""
    result = pipeline.align_corpus(
        resolutions_dir,
        gt_dir,
        embed_model,
        out_dir,
        gateway=_gateway(config_path, cache_dir),
        parallel=parallel,
    )
    _finish(result)


@cli.command()
@click.option("--resolutions", "resolutions_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--alignments", "alignments_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def ensemble(resolutions_dir, alignments_dir, out_dir):
    """Majority-vote the three models' outputs per dispute and strategy."""
    result = pipeline.ensemble_corpus(resolutions_dir, alignments_dir, out_dir)
    _finish(result)


@cli.command()
@click.option("--resolutions", "resolutions_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--alignments", "alignments_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--baseline", type=click.Choice(["majority", "random"]), default=None, help="Append a baseline row set to the report.")
@click.option("--seed", default=0, show_default=True, help="Random-baseline seed.")
@click.option("--summaries", "summaries_dir", default=None, type=click.Path(exists=True, file_okay=False), help="Needed (with --embed-model) for the justification report.")
@click.option("--embed-model", default=None)
@click.option("--justification-report", "justification_path", default=None, type=click.Path(dir_okay=False))
@_config_options
def evaluate(resolutions_dir, gt_dir, alignments_dir, report_path, baseline, seed, summaries_dir, embed_model, justification_path, config_path, cache_dir):
    """Score resolutions against gold labels and write the report CSV."""
    gateway = _gateway(config_path, cache_dir) if justification_path else None
    _, result = pipeline.evaluate_corpus(
        resolutions_dir,
        gt_dir,
        alignments_dir,
        report_path,
        baseline=baseline,
        seed=seed,
        summaries_dir=summaries_dir,
        embed_model_id=embed_model,
        gateway=gateway,
        justification_report_path=justification_path,
    )
    click.echo(Path(report_path).read_text(encoding="utf-8"), nl=False)
    _finish(result)


@cli.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", type=_DATASET_CHOICE, default=DatasetId.AUTO_INSURANCE.value, show_default=True, help="Dataset tag for the loaded disputes; the statistics themselves are dataset-independent.")
def stats(corpus_dir, dataset):
    """Print corpus descriptive statistics as CSV."""
    loaded = load_corpus(corpus_dir, DatasetId(dataset))
    for name, detail in loaded.malformed:
        click.echo(f"{name}: skipped: {detail}", err=True)
    click.echo(stats_csv(compute_stats(loaded.disputes)), nl=False)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Gateway configuration JSON; defaults to the bundled mock-provider config.")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="service-data", show_default=True, help="Where disputes, runs and reports are persisted.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False), help="Static review-UI bundle served under /ui; defaults to ./frontend/dist when present.")
@click.option("--cache-dir", default=None)
def serve(config_path, port, host, data_dir, ui_dir, cache_dir):
    """Run the review HTTP service."""
    import uvicorn

    from .service import create_app

    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(gateway=_gateway(config_path, cache_dir), data_dir=data_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(USAGE_EXIT)
    except click.ClickException as exc:
        exc.show()
        sys.exit(USAGE_EXIT)
    except click.Abort:
        sys.exit(USAGE_EXIT)
    except GatewayError as exc:
        click.echo(f"provider error: {exc}", err=True)
        sys.exit(PROVIDER_EXIT)
    except (pipeline.PipelineError, CorpusError, PersistenceError, OSError, ValueError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(DATA_EXIT)


if __name__ == "__main__":
    main()
