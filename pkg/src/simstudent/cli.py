"""Operator command line: generate corpora, train, evaluate, serve, replay.

Exit codes: 0 success, 1 evaluation mismatch/divergence, 2 usage or missing
file (click), 3 validation failure in inputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .acts import TrainingConfig, load_classifier, save_classifier
from .acts import train as train_acts
from .config import Config, config_from_record, load_config
from .corpus import (
    cross_validate,
    cross_validate_relations,
    generate_relation_corpus,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .entities import (
    RelationTrainingConfig,
    load_relation_corpus,
    load_relation_scorer,
    save_relation_corpus,
    save_relation_scorer,
    train_relation_scorer,
)
from .errors import SimStudentError
from .fixtures import run_act_fixtures, run_relation_fixtures
from .pretrained import build_engine, default_classifier, default_relation_scorer
from .sessionlog import read_log, replay_log, verify_session_replay
from .uncertainty import calibration_report, ensemble_classify
from .acts import featurize, normalize

VALIDATION_EXIT = 3


def _fail_validation(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(VALIDATION_EXIT)


def _write_json(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


@click.group()
def main() -> None:
    """Simulated-student dialogue system operations."""


@main.command("gen-corpus")
@click.option("--seed", default=13, show_default=True)
@click.option("--n", "n_per_class", default=100, show_default=True, help="Utterances per class.")
@click.option("--kind", type=click.Choice(["acts", "relations"]), default="acts", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
def gen_corpus(seed: int, n_per_class: int, kind: str, out: str) -> None:
    """Write a synthetic corpus as newline-delimited JSON."""
    try:
        if kind == "acts":
            save_corpus(generate_synthetic(seed, n_per_class), out)
        else:
            save_relation_corpus(generate_relation_corpus(seed, max(n_per_class, 1)), out)
    except (SimStudentError, ValueError) as exc:
        _fail_validation(str(exc))
    click.echo(f"wrote {kind} corpus to {out}")


@main.command("train")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--relation-corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--relation-seed", default=17, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def train_cmd(corpus: str, relation_corpus: Optional[str], relation_seed: int, seed: int, out: str) -> None:
    """Train the act classifier and relation scorer; write both model files."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        act_corpus = load_corpus(corpus)
        classifier = train_acts(act_corpus, TrainingConfig(seed=seed))
        if relation_corpus:
            rel_corpus = load_relation_corpus(relation_corpus)
        else:
            rel_corpus = generate_relation_corpus(relation_seed)
        scorer = train_relation_scorer(rel_corpus, RelationTrainingConfig(seed=seed))
    except SimStudentError as exc:
        _fail_validation(str(exc))
    save_classifier(classifier, out_dir / "act_classifier.json")
    save_relation_scorer(scorer, out_dir / "relation_scorer.json")
    click.echo(f"wrote {out_dir / 'act_classifier.json'}")
    click.echo(f"wrote {out_dir / 'relation_scorer.json'}")


@main.command("cv")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["acts", "relations"]), default="acts", show_default=True)
@click.option("--k", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--json-out", type=click.Path(dir_okay=False))
def cv_cmd(corpus: str, kind: str, k: int, seed: int, json_out: Optional[str]) -> None:
    """Cross-validate a corpus and print the per-fold report."""
    try:
        if kind == "acts":
            report = cross_validate(load_corpus(corpus), k=k, seed=seed)
        else:
            report = cross_validate_relations(load_relation_corpus(corpus), k=k, seed=seed)
    except SimStudentError as exc:
        _fail_validation(str(exc))
    click.echo(report.to_table())
    _write_json(json_out, report.to_json())


@main.command("calibrate")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--classifier", "classifier_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, help="Ensemble mask stream seed.")
@click.option("--json-out", type=click.Path(dir_okay=False))
def calibrate_cmd(
    corpus: str, classifier_path: Optional[str], seed: int, json_out: Optional[str]
) -> None:
    """Calibration report (ECE, accuracy, mean entropy) for a classifier."""
    config = Config(seed=seed)
    clf = load_classifier(classifier_path) if classifier_path else default_classifier()
    try:
        items = load_corpus(corpus)
        pairs = []
        for text, act in items:
            dist = ensemble_classify(
                clf, featurize(normalize(text), clf.hash_space), config.uncertainty()
            )
            pairs.append((dist.mean_probs, int(act)))
        report = calibration_report(pairs)
    except SimStudentError as exc:
        _fail_validation(str(exc))
    click.echo(report.to_table())
    _write_json(json_out, report.to_json())


@main.command("eval-fixtures")
@click.option("--classifier", "classifier_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scorer", "scorer_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--json-out", type=click.Path(dir_okay=False))
def eval_fixtures_cmd(
    classifier_path: Optional[str], scorer_path: Optional[str], json_out: Optional[str]
) -> None:
    """Run the shipped fixture suites; nonzero exit when a suite fails."""
    clf = load_classifier(classifier_path) if classifier_path else default_classifier()
    scorer = load_relation_scorer(scorer_path) if scorer_path else default_relation_scorer()
    act_report = run_act_fixtures(clf)
    relation_report = run_relation_fixtures(scorer)
    for report in (relation_report, act_report):
        for line in report.lines():
            click.echo(line)
    _write_json(
        json_out,
        json.dumps(
            {"relations": relation_report.to_record(), "acts": act_report.to_record()},
            indent=2,
        ),
    )
    if not (act_report.passed and relation_report.passed):
        sys.exit(1)


@main.command("replay")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
def replay_cmd(log_path: str) -> None:
    """Reconstruct a session log, print transcripts, verify determinism."""
    try:
        records = read_log(log_path)
        replayed = replay_log(records)
    except ValueError as exc:
        _fail_validation(str(exc))
    divergences: list[str] = []
    for sid, rep in sorted(replayed.sessions.items()):
        click.echo(f"session {sid} [{rep.session.phase.value}]")
        for turn in rep.session.turns:
            click.echo(f"  {turn.turn_id:3d} {turn.speaker.value:>22}: {turn.text}")
        divergences.extend(verify_session_replay(rep))
    if divergences:
        for d in divergences:
            click.echo(f"divergence: {d}", err=True)
        sys.exit(1)
    click.echo("replay ok: recomputed turns match the stored log")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=None, help="Override the configured port.")
@click.option("--log-dir", type=click.Path(file_okay=False), default=None)
@click.option("--classifier", "classifier_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scorer", "scorer_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--templates", "template_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tau-act", type=float, default=None, help="Entropy escalation threshold (nats).")
@click.option("--tau-entity", type=float, default=None, help="Minimum entity confidence.")
@click.option("--supervisor-token", default=None)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(
    config_path: Optional[str],
    port: Optional[int],
    log_dir: Optional[str],
    classifier_path: Optional[str],
    scorer_path: Optional[str],
    template_path: Optional[str],
    scenario_path: Optional[str],
    tau_act: Optional[float],
    tau_entity: Optional[float],
    supervisor_token: Optional[str],
    ui_dir: Optional[str],
    host: str,
) -> None:
    """Run the dialogue service."""
    import uvicorn

    from .service import ServiceRuntime, create_app

    try:
        config = load_config(config_path) if config_path else Config()
        overrides = {
            key: value
            for key, value in {
                "port": port,
                "log_dir": log_dir,
                "classifier_path": classifier_path,
                "scorer_path": scorer_path,
                "template_path": template_path,
                "scenario_path": scenario_path,
                "tau_act": tau_act,
                "tau_entity": tau_entity,
                "supervisor_token": supervisor_token,
            }.items()
            if value is not None
        }
        if overrides:
            config = config_from_record({**config.to_record(), **overrides})
        engine = build_engine(config)
    except SimStudentError as exc:
        _fail_validation(str(exc))

    log_base = Path(config.log_dir) if config.log_dir else Path(".")
    log_base.mkdir(parents=True, exist_ok=True)
    runtime = ServiceRuntime(engine, config, log_base / "sessions.ndjson")
    runtime.rehydrate()
    default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    ui = Path(ui_dir) if ui_dir else (default_ui if default_ui.is_dir() else None)
    app = create_app(runtime, ui_dir=ui)
    click.echo(f"serving on http://{host}:{config.port} (log: {runtime.log.path})")
    uvicorn.run(app, host=host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
