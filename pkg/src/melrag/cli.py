"""Command-line pipeline: split, index, retrieve, classify, evaluate, compare.

Every subcommand is a batch step over files; outputs are byte-stable for
fixed inputs and seed. Exit codes: 0 success, 1 validation or usage error,
2 backend failure (a classify run where at least one case errored after
retries).
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .backend import BackendConfig, make_backend
from .bundle import read_bundle
from .errors import BackendError, MelragError
from .evaluation import (
    evaluate_predictions,
    recovery_between,
    recovery_to_dict,
    render_recovery_text,
    render_report_text,
    report_to_dict,
    save_split,
    stratified_split,
)
from .index import build_index, load_index, save_index
from .model import (
    Label,
    load_cases,
    load_predictions,
    save_predictions,
    truth_from_cases,
)
from .pipeline import classify_cases
from .prompting import build_prompt
from .serialize import SerializationMode

_MODE_CHOICES = click.Choice([m.value for m in SerializationMode])


@click.group()
@click.version_option(version=__version__, prog_name="melrag")
def cli() -> None:
    """Retrieval-augmented melanoma classification experiments."""


# --- split --------------------------------------------------------------------

@cli.command("split")
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--train-frac", default=0.7, show_default=True, type=float)
@click.option("--val-frac", default=0.2, show_default=True, type=float,
              help="Validation share of the training pool.")
@click.option("--seed", default=0, show_default=True, type=int)
def split_cmd(cases_path: str, out_path: str, train_frac: float, val_frac: float, seed: int) -> None:
    """Two-stage stratified split of a cases file into train/val/test ids."""
    cases = load_cases(cases_path)
    assignment = stratified_split(
        cases, train_frac=train_frac, val_frac_of_train=val_frac, seed=seed
    )
    save_split(assignment, out_path)
    truth = truth_from_cases(cases)
    for name, ids in (
        ("train", assignment.train_ids),
        ("val", assignment.val_ids),
        ("test", assignment.test_ids),
    ):
        pos = sum(1 for i in ids if truth[i] is Label.MALIGNANT)
        click.echo(f"{name} {len(ids)} ({pos} malignant)")


# --- index --------------------------------------------------------------------

@cli.command("index")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--normalize", is_flag=True, default=False,
              help="L2-normalize vectors (cosine instead of raw dot product).")
def index_cmd(bundle_path: str, out_path: str, normalize: bool) -> None:
    """Build a searchable index from an embedding bundle."""
    bundle = read_bundle(bundle_path)
    index = build_index(bundle, normalize=normalize)
    save_index(index, out_path)
    click.echo(f"indexed {index.count} vectors dim {index.dim_}")


# --- retrieve -------------------------------------------------------------------

def _query_vectors(index, query_bundle, ids: tuple[str, ...]):
    """Resolve (id, vector) pairs from the query bundle or the index itself."""
    source = query_bundle if query_bundle is not None else index.source_bundle
    pairs = []
    for case_id in ids:
        try:
            pairs.append((case_id, source.multimodal_vector(case_id)))
        except KeyError:
            raise MelragError(f"id {case_id!r} not found in the query source") from None
    return pairs


@cli.command("retrieve")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--id", "ids", multiple=True, help="Query case id (repeatable).")
@click.option("--query-bundle", "query_bundle_path", type=click.Path(exists=True, dir_okay=False),
              help="Bundle supplying query vectors; defaults to the index's own rows.")
@click.option("-k", "k", default=2, show_default=True, type=int)
@click.option("--include-self", is_flag=True, default=False,
              help="Keep the query's own id among its neighbors.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Write JSONL here instead of stdout.")
def retrieve_cmd(index_path, ids, query_bundle_path, k, include_self, out_path) -> None:
    """Top-k nearest cases for each query id."""
    if k < 1:
        raise click.UsageError("k must be >= 1 for retrieval")
    index = load_index(index_path)
    query_bundle = read_bundle(query_bundle_path) if query_bundle_path else None
    if not ids:
        if query_bundle is None:
            raise click.UsageError("pass --id or --query-bundle")
        ids = query_bundle.ids
    lines = []
    for case_id, vector in _query_vectors(index, query_bundle, tuple(ids)):
        exclude = () if include_self else (case_id,)
        neighbors = index.query_top_k(vector, k, exclude_ids=exclude)
        lines.append(json.dumps({
            "id": case_id,
            "neighbors": [{"id": n.id, "score": n.score} for n in neighbors],
        }, ensure_ascii=False))
    text = "\n".join(lines) + ("\n" if lines else "")
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


# --- classify -------------------------------------------------------------------

def _parse_k_options(ks: tuple[int, ...], k_sweep: str | None) -> list[int]:
    values: list[int] = list(ks)
    if k_sweep:
        try:
            values.extend(int(part) for part in k_sweep.split(",") if part.strip())
        except ValueError:
            raise click.UsageError(f"bad --k-sweep value {k_sweep!r}") from None
    if not values:
        values = [2]
    if any(v < 0 for v in values):
        raise click.UsageError("k must be >= 0")
    seen: set[int] = set()
    return [v for v in values if not (v in seen or seen.add(v))]


def _sweep_path(path: str, k: int, sweep: bool) -> Path:
    if not sweep:
        return Path(path)
    p = Path(path)
    return p.with_name(f"{p.stem}.k{k}{p.suffix}")


def _gen_params(pairs: tuple[str, ...]) -> dict:
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise click.UsageError(f"--gen-param expects KEY=VALUE, got {pair!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


@cli.command("classify")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Case records for queries and retrieved neighbors.")
@click.option("--query-bundle", "query_bundle_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--id", "only_ids", multiple=True, help="Restrict to these query ids.")
@click.option("-k", "ks", multiple=True, type=int, help="Neighbor count (repeat to sweep).")
@click.option("--k-sweep", default=None, help="Comma-separated ks, e.g. 1,2,3,4.")
@click.option("--mode", default=SerializationMode.ATTRIBUTE_VALUE.value, show_default=True,
              type=_MODE_CHOICES)
@click.option("--backend", "backend_kind", default="mock", show_default=True,
              type=click.Choice(["mock", "http"]))
@click.option("--endpoint", envvar="MELRAG_ENDPOINT", default=None,
              help="HTTP backend URL [env: MELRAG_ENDPOINT].")
@click.option("--timeout-s", envvar="MELRAG_TIMEOUT_S", default=30.0, type=float,
              show_default=True, help="[env: MELRAG_TIMEOUT_S]")
@click.option("--retries", default=2, show_default=True, type=int)
@click.option("--backoff-s", default=0.5, show_default=True, type=float)
@click.option("--max-in-flight", default=1, show_default=True, type=int)
@click.option("--schema", default="simple", show_default=True,
              type=click.Choice(["simple", "openai_chat"]))
@click.option("--gen-param", "gen_params", multiple=True,
              help="Generation pass-through KEY=VALUE (repeatable).")
@click.option("--include-self", is_flag=True, default=False)
@click.option("--dump-prompts", "dump_dir", type=click.Path(file_okay=False),
              help="Also write each prompt verbatim to DIR/<case_id>.txt.")
@click.option("--trace", is_flag=True, default=False,
              help="Log request/response bodies (images elided).")
def classify_cmd(
    index_path, cases_path, query_bundle_path, out_path, only_ids, ks, k_sweep,
    mode, backend_kind, endpoint, timeout_s, retries, backoff_s, max_in_flight,
    schema, gen_params, include_self, dump_dir, trace,
) -> None:
    """Retrieve, prompt, and classify every query case; write preds JSONL."""
    if trace:
        logging.basicConfig(stream=sys.stderr)
        logging.getLogger("melrag.backend").setLevel(logging.DEBUG)
    k_values = _parse_k_options(ks, k_sweep)
    sweep = len(k_values) > 1

    config = BackendConfig(
        kind=backend_kind,
        endpoint=endpoint if backend_kind == "http" else None,
        timeout_s=timeout_s,
        max_in_flight=max_in_flight,
        retries=retries,
        backoff_s=backoff_s,
        schema=schema,
        generation=_gen_params(gen_params),
    )
    try:
        config.validate()
    except ValueError as e:
        raise click.UsageError(str(e)) from None
    backend = make_backend(config)

    index = load_index(index_path)
    cases = {c.id: c for c in load_cases(cases_path)}
    query_bundle = read_bundle(query_bundle_path)
    query_ids = tuple(only_ids) if only_ids else query_bundle.ids
    queries = []
    for qid in query_ids:
        if qid not in cases:
            raise MelragError(f"query id {qid!r} has no case record")
        try:
            queries.append((cases[qid], query_bundle.multimodal_vector(qid)))
        except KeyError:
            raise MelragError(f"query id {qid!r} not in the query bundle") from None

    failures = 0
    for k in k_values:
        preds = classify_cases(
            queries, index, cases, backend,
            mode=SerializationMode(mode), k=k,
            exclude_self=not include_self, max_in_flight=max_in_flight,
        )
        dest = _sweep_path(out_path, k, sweep)
        save_predictions(preds, dest)
        if dump_dir:
            dump_root = Path(dump_dir)
            if sweep:
                dump_root = dump_root / f"k{k}"
            dump_root.mkdir(parents=True, exist_ok=True)
            for case, vector in queries:
                exclude = () if include_self else (case.id,)
                retrieved = (
                    index.query_top_k(vector, k, exclude_ids=exclude)
                    if k > 0 and index.count else []
                )
                neighbors = [cases[n.id] for n in retrieved]
                prompt = build_prompt(case, neighbors, SerializationMode(mode), k=len(neighbors))
                (dump_root / f"{case.id}.txt").write_text(prompt.text, encoding="utf-8")
        errored = sum(1 for p in preds if p.error is not None)
        failures += errored
        click.echo(f"k={k}: wrote {len(preds)} predictions to {dest}"
                   + (f" ({errored} backend failures)" if errored else ""))
    if failures:
        raise SystemExit(2)


# --- evaluate -------------------------------------------------------------------

@cli.command("evaluate")
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=".", show_default=True, type=click.Path(file_okay=False))
def evaluate_cmd(preds_path: str, cases_path: str, out_dir: str) -> None:
    """Confusion metrics for a predictions file; writes report.txt/report.json."""
    preds = load_predictions(preds_path)
    truth = truth_from_cases(load_cases(cases_path))
    report = evaluate_predictions(preds, truth)
    text = render_report_text(report)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(text, encoding="utf-8")
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, indent=2)
        f.write("\n")
    click.echo(text, nl=False)


# --- compare --------------------------------------------------------------------

@cli.command("compare")
@click.option("--baseline", "baseline_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ours", "ours_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=".", show_default=True, type=click.Path(file_okay=False))
def compare_cmd(baseline_path: str, ours_path: str, cases_path: str, out_dir: str) -> None:
    """Error-recovery rates of one prediction set over a baseline."""
    baseline = load_predictions(baseline_path)
    ours = load_predictions(ours_path)
    truth = truth_from_cases(load_cases(cases_path))
    recovery = recovery_between(baseline, ours, truth)
    text = render_recovery_text(recovery)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "recovery.txt").write_text(text, encoding="utf-8")
    with open(out / "recovery.json", "w", encoding="utf-8") as f:
        json.dump(recovery_to_dict(recovery), f, indent=2)
        f.write("\n")
    click.echo(text, nl=False)


# --- dump-prompt ----------------------------------------------------------------

@cli.command("dump-prompt")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--id", "case_id", required=True)
@click.option("--query-bundle", "query_bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-k", "k", default=2, show_default=True, type=int)
@click.option("--mode", default=SerializationMode.ATTRIBUTE_VALUE.value, show_default=True,
              type=_MODE_CHOICES)
@click.option("--include-self", is_flag=True, default=False)
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def dump_prompt_cmd(index_path, cases_path, case_id, query_bundle_path, k, mode,
                    include_self, out_path) -> None:
    """Print the exact prompt that classify would send for one case."""
    if k < 0:
        raise click.UsageError("k must be >= 0")
    index = load_index(index_path)
    cases = {c.id: c for c in load_cases(cases_path)}
    if case_id not in cases:
        raise MelragError(f"id {case_id!r} has no case record")
    query_bundle = read_bundle(query_bundle_path) if query_bundle_path else None
    if k > 0 and index.count:
        (_, vector), = _query_vectors(index, query_bundle, (case_id,))
        exclude = () if include_self else (case_id,)
        retrieved = index.query_top_k(vector, k, exclude_ids=exclude)
    else:
        retrieved = []
    neighbors = [cases[n.id] for n in retrieved if n.id in cases]
    if len(neighbors) != len(retrieved):
        raise MelragError("a retrieved neighbor has no case record")
    prompt = build_prompt(cases[case_id], neighbors, SerializationMode(mode), k=len(neighbors))
    if out_path:
        Path(out_path).write_text(prompt.text, encoding="utf-8")
    else:
        click.echo(prompt.text)


def main(argv: list[str] | None = None) -> int:
    """Entry point mapping errors to exit codes (0 ok, 1 invalid, 2 backend)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except SystemExit as e:
        return int(e.code or 0)
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.UsageError as e:
        click.echo(f"error: {e.format_message()}", err=True)
        if e.ctx is not None:
            click.echo(e.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except BackendError as e:
        click.echo(f"backend error: {e}", err=True)
        return 2
    except MelragError as e:
        click.echo(f"error: {e}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
