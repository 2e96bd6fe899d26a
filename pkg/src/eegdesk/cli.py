"""Command-line front door: info, explore, detect, report, serve."""

from __future__ import annotations

import json

import click

from .classifiers import BaselineBackend, RemoteBackend
from .config import load_config
from .detection import DetectionConfig, detect, events_to_csv
from .errors import EegDeskError
from .exploration import explore
from .knowledge import HashEmbedding, KnowledgeBase, RemoteEmbedding
from .recording import base_info
from .reporting import ChatNarrator, DeterministicDecider, generate_report
from .toolbox import ToolRegistry


def _load(path):
    from .edf import parse_edf_file

    return parse_edf_file(path)


def _backend(config):
    if config.classifier_url:
        return RemoteBackend(config.classifier_url)
    return BaselineBackend()


def _knowledge(config):
    embedding = RemoteEmbedding(config.embed_url) if config.embed_url else HashEmbedding()
    return KnowledgeBase.builtin(backend=embedding)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file; EEGDESK_* env vars override it.")
@click.pass_context
def main(ctx, config_path):
    """EEG analysis engine: perception, exploration, detection, reporting."""
    ctx.obj = load_config(config_path)


@main.command()
@click.argument("edf_file", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.pass_obj
def info(config, edf_file, as_json):
    """Print recording metadata, channel regions, and age-band notes."""
    rec = _load(edf_file)
    summary = base_info(rec, _knowledge(config))
    if as_json:
        click.echo(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(summary.to_text())


@main.command("explore")
@click.argument("edf_file", type=click.Path(exists=True))
@click.option("--from", "t_start", type=float, required=True, help="start second")
@click.option("--to", "t_end", type=float, required=True, help="end second")
@click.option("--dt", type=float, default=10.0, show_default=True, help="segment length")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def explore_cmd(config, edf_file, t_start, t_end, dt, as_json):
    """Analyze an interval segment by segment and summarize."""
    rec = _load(edf_file)
    registry = ToolRegistry(rec, _backend(config), _knowledge(config))
    try:
        summary = explore(rec, registry, t_start, t_end, dt)
    except EegDeskError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
        return
    click.echo(f"Interval [{t_start:g}, {t_end:g}] s, dt={dt:g} s")
    click.echo(summary.assessment)
    for rhythm in summary.rhythms:
        click.echo(f"  rhythm: {rhythm}")
    for event in summary.localized_events:
        click.echo(
            f"  event: {event['label']} in segment {event['segment_index']} "
            f"{event['window']} ({event['extent'] or 'extent unknown'})"
        )


@main.command("detect")
@click.argument("edf_file", type=click.Path(exists=True))
@click.option("--target", default="seiz", show_default=True,
              type=click.Choice(["seiz", "artf", "eyem", "muscle"]))
@click.option("--threshold", type=float, default=None,
              help="escalation threshold (default from config)")
@click.option("-o", "--output", type=click.Path(), default=None,
              help="write events as CSV instead of stdout")
@click.pass_obj
def detect_cmd(config, edf_file, target, threshold, output):
    """Scan for events coarse-to-fine and print one event per line."""
    rec = _load(edf_file)
    cfg = DetectionConfig(
        escalation_threshold=threshold
        if threshold is not None
        else config.escalation_threshold
    )
    try:
        result = detect(rec, target=target, cfg=cfg, backend=_backend(config))
    except EegDeskError as exc:
        raise click.ClickException(str(exc))
    csv_text = events_to_csv(result.events)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        click.echo(f"{len(result.events)} event(s) -> {output}")
    else:
        click.echo(csv_text, nl=False)
    click.echo(
        f"# coarse windows: {result.stats.coarse_windows}, escalated: "
        f"{result.stats.escalated_windows}, fine windows: {result.stats.fine_windows}",
        err=True,
    )


@main.command("report")
@click.argument("edf_file", type=click.Path(exists=True))
@click.option("--mode", default="template", show_default=True,
              type=click.Choice(["template", "chat"]))
@click.option("-o", "--output", type=click.Path(), default=None)
@click.option("--draft", "draft_path", type=click.Path(), default=None,
              help="also write the machine-readable draft")
@click.pass_obj
def report_cmd(config, edf_file, mode, output, draft_path):
    """Generate a structured EEG report for the whole recording."""
    rec = _load(edf_file)
    registry = ToolRegistry(rec, _backend(config), _knowledge(config))
    narrator = None
    if mode == "chat":
        if not config.chat_url:
            raise click.ClickException("chat mode needs chat_url in config")
        narrator = ChatNarrator(config.chat_url, model=config.chat_model)
    try:
        result = generate_report(
            rec,
            registry,
            DeterministicDecider(config.refine_threshold),
            mode=mode,
            narrator=narrator,
        )
    except EegDeskError as exc:
        raise click.ClickException(str(exc))
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(result.text)
        click.echo(f"report -> {output}")
    else:
        click.echo(result.text)
    if draft_path:
        with open(draft_path, "w", encoding="utf-8") as fh:
            json.dump(result.draft.to_dict(), fh, indent=2, sort_keys=True)
        click.echo(f"draft -> {draft_path}", err=True)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--store", "store_root", type=click.Path(), default=None,
              help="store directory (default from config)")
@click.pass_obj
def serve_cmd(config, host, port, store_root):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    from .store import FileStore

    store = FileStore(store_root or config.store_root)
    app = create_app(store, config=config)
    click.echo(f"serving on http://{host}:{port} (store: {store.root})", err=True)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main(prog_name="eegdesk")
