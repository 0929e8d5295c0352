"""Command-line interface.

Subcommands: ``annotate`` (segment + profile a transcript corpus),
``dialogue`` (teacher-student simulation), ``pairs`` (preference-pair
construction), ``rerank`` (level-targeted candidate reranking),
``aggregate`` (grouped normalized-average tables) and ``prefeval``
(preference-objective evaluation over scored pairs).

Exit codes: 0 success, 64 usage error, 65 data/format error, 69 endpoint
error, 2 resource/IO error. Configuration precedence is flags, then
environment (DIALOGKIT_MANIFEST, DIALOGKIT_API_TOKEN), then bundled
defaults. Output files are written atomically (temp + rename).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import aggregate as agg
from . import alignment, dialogue as dlg, ingest, lexicons, metrics
from .errors import (
    EmptyTranscriptError,
    EndpointError,
    FormatError,
    ResourceError,
    SchemaError,
)

EXIT_OK = 0
EXIT_RESOURCE = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_ENDPOINT = 69

TURN_CHOICES = (2, 4, 6, 8)
LENGTH_CHOICES = (50, 100, 150, 200, 250)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _manifest_path(value: Optional[str]) -> Path:
    if value:
        return Path(value)
    env = os.environ.get("DIALOGKIT_MANIFEST")
    if env:
        return Path(env)
    return lexicons.default_manifest_path()


# --- annotate -----------------------------------------------------------------

_WORKER_BUNDLE = None
_WORKER_WINDOW = 3


def _worker_init(manifest: str, segment_window: int) -> None:
    global _WORKER_BUNDLE, _WORKER_WINDOW
    _WORKER_BUNDLE = lexicons.load_bundle(manifest)
    _WORKER_WINDOW = segment_window


def _annotate_one(payload: tuple[int, dict]) -> tuple[int, dict, dict]:
    ordinal, doc = payload
    d = ingest.dialogue_from_dict(doc)
    prof = metrics.profile(d, _WORKER_BUNDLE)
    d.meta = metrics.dialogue_meta(
        d, _WORKER_BUNDLE, segment_window=_WORKER_WINDOW, precomputed=prof
    )
    return ordinal, ingest.dialogue_to_dict(d), metrics.profile_row(d.dialog_id, prof)


def annotate_dialogues(
    dialogues: Sequence[ingest.Dialogue],
    manifest: Path,
    jobs: int = 1,
    segment_window: int = 3,
    with_rows: bool = False,
):
    """Profile each dialogue, optionally across a process pool; output order
    is by input ordinal regardless of completion order. With ``with_rows``
    also returns one flat CSV row per dialogue."""
    payloads = [(i, ingest.dialogue_to_dict(d)) for i, d in enumerate(dialogues)]
    if jobs <= 1:
        _worker_init(str(manifest), segment_window)
        results = [_annotate_one(p) for p in payloads]
    else:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_worker_init, initargs=(str(manifest), segment_window)
        ) as pool:
            results = list(pool.map(_annotate_one, payloads, chunksize=16))
    results.sort(key=lambda item: item[0])
    docs = [doc for _, doc, _ in results]
    if with_rows:
        return docs, [row for _, _, row in results]
    return docs


def _cmd_annotate(args) -> int:
    manifest = _manifest_path(args.manifest)
    bundle = lexicons.load_bundle(manifest)  # fail fast with the manifest key in the message
    del bundle
    with open(args.corpus, "r", encoding="utf-8") as fh:
        utterances = ingest.parse_transcript(fh, format=args.format, strict=args.strict)
    turns = ingest.segment_turns(utterances)
    stem = Path(args.corpus).stem
    dialogues = list(
        ingest.iter_dialogues(
            turns, per_speaker=args.per_speaker, source_stem=stem, drop_short=args.drop_short
        )
    )
    docs, rows = annotate_dialogues(dialogues, manifest, jobs=args.jobs,
                                    segment_window=args.segment_window, with_rows=True)
    if args.csv:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["span_id", *metrics.PROFILE_COLUMNS])
        writer.writeheader()
        writer.writerows(rows)
        _atomic_write(Path(args.csv), buf.getvalue())
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            _atomic_write(out_dir / f"{doc['dialogID']}.json",
                          json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    else:
        buf = io.StringIO()
        for doc in docs:
            buf.write(json.dumps(doc, ensure_ascii=False))
            buf.write("\n")
        _atomic_write(Path(args.out), buf.getvalue())
    print(f"annotated {len(docs)} dialogues from {len(turns)} turns "
          f"({sum(1 for d in dialogues if d.short)} short)")
    coverages = [d["meta"].get("coverage") or {} for d in docs]
    for name in ("aoa", "cefr", "mfam", "mpoly"):
        values = [c[name] for c in coverages if name in c]
        if values:
            print(f"coverage[{name}]: mean {sum(values) / len(values):.3f}")
    return EXIT_OK


# --- dialogue -----------------------------------------------------------------

def _make_generator(script: Optional[str], url: Optional[str], role: str,
                    model: Optional[str], system_prompt: Optional[str] = None) -> dlg.Generator:
    if script:
        return dlg.ScriptedGenerator.from_file(script, role)
    if url:
        return dlg.HttpGenerator(url, role, model=model, system_prompt=system_prompt)
    raise ResourceError(f"no {role} endpoint configured (need --{role}-script or --{role}-url)")


def _cmd_dialogue(args) -> int:
    starters = dlg.load_starters(args.starters)
    turn_counts = args.turns or [2]
    token_budgets = args.max_tokens or [50]
    for t in turn_counts:
        if t % 2 != 0 or t < 2:
            raise ValueError(f"turns must be even and >= 2, got {t}")
    system_prompt = args.teacher_system_prompt
    if args.caregiver_age:
        system_prompt = dlg.render_meta_prompt(args.caregiver_age)
    # all randomness is drawn up front from the base seed, so results do not
    # depend on worker scheduling
    rng = random.Random(args.seed)
    tasks = []
    for n_turns in turn_counts:
        for budget in token_budgets:
            for k in range(args.n):
                run_seed = None if args.seed is None else args.seed + len(tasks)
                tasks.append((n_turns, budget, k, rng.choice(starters), run_seed))
    out_dir = Path(args.out_dir)

    def run_one(task):
        n_turns, budget, k, starter, run_seed = task
        student = _make_generator(args.student_script, args.student_url,
                                  "student", args.student_model)
        teacher = _make_generator(args.teacher_script, args.teacher_url,
                                  "teacher", args.teacher_model, system_prompt)
        result = dlg.run_dialogue(
            starter,
            student,
            teacher,
            n_turns,
            student_decoding=dlg.student_params(max_new_tokens=budget, seed=run_seed),
            teacher_decoding=dlg.teacher_params(max_new_tokens=budget, seed=run_seed),
            retries=args.retries,
            record_timestamp=args.timestamps,
            seed=run_seed,
        )
        dlg.write_generated_dialogue(result, out_dir, k)
        return (n_turns, budget, k, result.aborted, result.error)

    if args.jobs <= 1:
        outcomes = [run_one(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(run_one, tasks))
    aborted = 0
    for n_turns, budget, k, was_aborted, error in outcomes:
        if was_aborted:
            aborted += 1
            print(f"aborted: turns={n_turns} max_tokens={budget} k={k}: {error}",
                  file=sys.stderr)
    print(f"wrote {len(outcomes)} dialogues to {out_dir} ({aborted} aborted)")
    return EXIT_ENDPOINT if aborted else EXIT_OK


# --- pairs ----------------------------------------------------------------------

def _pairs_from_generated(path: Path, cfg: alignment.PairFilterConfig):
    doc = json.loads(path.read_text(encoding="utf-8"))
    dlg.validate_generated(doc)
    turns = doc["turns"]
    for i in range(1, len(turns) - 1):
        if turns[i]["role"] != "student" or turns[i + 1]["role"] != "teacher":
            continue
        context = [f"{t['role'].capitalize()}: {t['clean_text']}" for t in turns[:i]]
        prompt = "\n".join(context + ["Student:"])
        yield alignment.build_pair(prompt, turns[i]["clean_text"], turns[i + 1]["clean_text"], cfg)


def _cmd_pairs(args) -> int:
    cfg = alignment.PairFilterConfig(
        copy_jaccard_threshold=args.copy_threshold, prompt_ngram=args.prompt_ngram
    )
    sources = sorted(Path(args.generated_dir).glob("*.json"))
    if args.dry_run:
        print(f"plan: read {len(sources)} generated dialogues from {args.generated_dir}, "
              f"filter (jaccard<{cfg.copy_jaccard_threshold}, {cfg.prompt_ngram}-gram), "
              f"slice into {args.slices} iterations (seed {args.seed}), "
              f"write {args.out} and {args.rejects}")
        return EXIT_OK
    pairs: list[alignment.PreferencePair] = []
    rejects: list[alignment.Rejection] = []
    for path in sources:
        for result in _pairs_from_generated(path, cfg):
            if isinstance(result, alignment.PreferencePair):
                pairs.append(result)
            else:
                rejects.append(result)
    sliced = alignment.slice_iterations(pairs, k=args.slices, seed=args.seed)
    flat = [p for chunk in sliced for p in chunk]
    buf = io.StringIO()
    alignment.write_pairs_jsonl(flat, buf)
    _atomic_write(Path(args.out), buf.getvalue())
    if args.rejects:
        rbuf = io.StringIO()
        for r in rejects:
            rbuf.write(json.dumps({
                "prompt": r.prompt, "chosen": r.chosen, "rejected": r.rejected,
                "filters": dict(r.filters), "failed_rules": list(r.failed_rules),
            }, ensure_ascii=False))
            rbuf.write("\n")
        _atomic_write(Path(args.rejects), rbuf.getvalue())
    print(f"built {len(pairs)} pairs ({len(rejects)} rejected) "
          f"across {args.slices} iteration slices")
    return EXIT_OK


# --- rerank ----------------------------------------------------------------------

def _cmd_rerank(args) -> int:
    target = lexicons.CefrLevel[args.target.upper()]
    if args.dry_run:
        print(f"plan: rerank candidates from {args.candidates} toward {target.name} "
              f"(alpha={args.alpha}, beta={args.beta}), write {args.out or 'stdout'}")
        return EXIT_OK
    bundle = lexicons.load_bundle(_manifest_path(args.manifest))
    with open(args.candidates, "r", encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    candidates = []
    for i, row in enumerate(rows):
        if "text" not in row:
            raise SchemaError("missing key", f"$[{i}].text")
        level_name = row.get("predicted_level")
        if level_name:
            level = lexicons.CefrLevel[str(level_name).upper()]
        else:
            level = alignment.predict_cefr_level(row["text"], bundle.cefr).level
        candidates.append(alignment.Candidate(
            text=row["text"],
            original_rank=int(row.get("original_rank", i)),
            predicted_level=level,
        ))
    ranked = alignment.rerank(candidates, target, alpha=args.alpha, beta=args.beta)
    lines = [json.dumps({
        "text": c.text, "original_rank": c.original_rank,
        "predicted_level": c.predicted_level.name,
        "score": c.score, "selected": c.selected,
    }, ensure_ascii=False) for c in ranked]
    payload = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(Path(args.out), payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


# --- aggregate ---------------------------------------------------------------------

def _parse_directions(spec: Optional[str]) -> dict[str, str]:
    if not spec:
        return {}
    out = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ValueError(f"bad direction {part!r}, expected name=+ or name=-")
        name, sign = part.split("=", 1)
        if sign not in ("+", "-"):
            raise ValueError(f"direction for {name!r} must be + or -")
        out[name.strip()] = sign
    return out


def _cmd_aggregate(args) -> int:
    records_path = args.records or str(agg.fixture_path("dialogue_metrics_full.csv"))
    metric_set = tuple(args.metrics.split(",")) if args.metrics else agg.DEFAULT_METRIC_SET
    directions = _parse_directions(args.directions)
    if args.config:
        config = agg.CalibrationConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        metric_set = config.metrics
        directions = dict(config.directions)
    if args.dry_run:
        print(f"plan: read {records_path}, group means by ({args.group_by}), normalize within "
              f"({args.pool_by}) pools over {list(metric_set)}, emit {args.format}")
        return EXIT_OK
    records = agg.read_records_csv(records_path)
    means = agg.aggregate_means(records, keys=tuple(args.group_by.split(",")))
    rows: list[agg.AggregateRow] = []
    for _, pool in agg.group_records(means, keys=tuple(args.pool_by.split(","))):
        rows.extend(agg.norm_avg(pool, metric_set=metric_set, directions=directions))
    table = agg.emit_table(rows, format=args.format, metric_set=metric_set)
    if args.out:
        _atomic_write(Path(args.out), table)
    else:
        sys.stdout.write(table)
    print(f"aggregated {len(rows)} rows from {len(records)} records", file=sys.stderr)
    return EXIT_OK


# --- prefeval ----------------------------------------------------------------------

def _cmd_prefeval(args) -> int:
    if args.dry_run:
        print(f"plan: score {args.scores} with {args.objective} "
              f"(beta={args.beta}), write curve to {args.out or 'stdout'}")
        return EXIT_OK
    with open(args.scores, "r", encoding="utf-8") as fh:
        table = alignment.read_scored_pairs_jsonl(fh)
    rows = []
    margins = []
    for step, pair_id in enumerate(sorted(table), start=1):
        sides = table[pair_id]
        if "chosen" not in sides or "rejected" not in sides:
            raise SchemaError(f"pair {pair_id!r} is missing a side")
        if args.objective == "orpo":
            terms = alignment.orpo_terms(sides["chosen"], sides["rejected"])
        else:
            terms = alignment.cpo_terms(sides["chosen"], sides["rejected"], beta=args.beta)
        margins.append(terms.margin)
        rows.append({
            "step": step,
            "reward_chosen": f"{terms.reward_chosen:.6f}",
            "reward_rejected": f"{terms.reward_rejected:.6f}",
            "margin": f"{terms.margin:.6f}",
            "accuracy": f"{alignment.reward_accuracy(margins):.6f}",
        })
    buf = io.StringIO()
    alignment.write_reward_curve_csv(rows, buf)
    if args.out:
        _atomic_write(Path(args.out), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    accuracy = alignment.reward_accuracy(margins)
    print(f"accuracy {accuracy:.3f} over {len(margins)} pairs"
          if accuracy is not None else "no pairs")
    return EXIT_OK


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialogkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="segment a transcript corpus and profile each dialogue")
    p.add_argument("corpus", help="transcript file")
    p.add_argument("--format", choices=("two_column", "prefixed"), default="two_column")
    p.add_argument("--manifest", help="resource manifest JSON (default: bundled demo)")
    p.add_argument("--out", default="annotated.jsonl", help="JSON-Lines output path")
    p.add_argument("--out-dir", help="write one JSON file per dialogue instead")
    p.add_argument("--csv", help="also write a flat profile CSV (one row per dialogue)")
    p.add_argument("--per-speaker", type=int, default=5, help="turns sampled per speaker")
    p.add_argument("--drop-short", action="store_true", help="drop incomplete trailing dialogues")
    p.add_argument("--strict", action="store_true", help="fail on unparseable lines")
    p.add_argument("--segment-window", type=int, default=3, help="turns per metric segment")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("dialogue", help="simulate teacher-student dialogues")
    p.add_argument("--student-script", help="scripted student responses, one per line")
    p.add_argument("--teacher-script", help="scripted teacher responses, one per line")
    p.add_argument("--student-url", help="chat-completions endpoint for the student")
    p.add_argument("--teacher-url", help="chat-completions endpoint for the teacher")
    p.add_argument("--student-model", help="model id sent to the student endpoint")
    p.add_argument("--teacher-model", help="model id sent to the teacher endpoint")
    p.add_argument("--turns", type=int, nargs="+", choices=TURN_CHOICES,
                   help="total turns per dialogue (even)")
    p.add_argument("--max-tokens", type=int, nargs="+", choices=LENGTH_CHOICES,
                   help="per-turn token budgets")
    p.add_argument("--n", type=int, default=1, help="dialogues per (turns, max-tokens) setting")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--retries", type=int, default=5)
    p.add_argument("--starters", help="starter list JSON (default: bundled)")
    p.add_argument("--timestamps", action="store_true",
                   help="record wall-clock time in metadata (breaks reproducibility)")
    p.add_argument("--teacher-system-prompt", help="system prompt for an HTTP teacher")
    p.add_argument("--caregiver-age",
                   help="render the caregiver meta-prompt for this age as the "
                        "teacher system prompt (e.g. '2-3 years')")
    p.add_argument("--jobs", type=int, default=1,
                   help="dialogues generated concurrently (one dialogue stays sequential)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_dialogue)

    p = sub.add_parser("pairs", help="build preference pairs from generated dialogues")
    p.add_argument("--generated-dir", required=True, help="directory of dialogue JSON files")
    p.add_argument("--out", default="pairs.jsonl")
    p.add_argument("--rejects", default="rejects.jsonl")
    p.add_argument("--copy-threshold", type=float, default=0.8)
    p.add_argument("--prompt-ngram", type=int, default=8)
    p.add_argument("--slices", type=int, default=5, help="disjoint iteration slices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("rerank", help="rerank candidates toward a target level")
    p.add_argument("--candidates", required=True, help="JSONL with text/original_rank")
    p.add_argument("--target", required=True, help="target level A1..C2")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--manifest", help="resource manifest (for level prediction)")
    p.add_argument("--out")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_rerank)

    p = sub.add_parser("aggregate", help="grouped min-max normalized metric tables")
    p.add_argument("--records", help="flat record CSV (default: bundled reference table)")
    p.add_argument("--group-by", default="model,turns,length")
    p.add_argument("--pool-by", default="turns,length",
                   help="keys defining each normalization pool")
    p.add_argument("--metrics", help="comma-separated metric columns")
    p.add_argument("--directions", help="e.g. aoa=+,cefr=-")
    p.add_argument("--config", help="calibration config JSON {metric_set, directions}")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("prefeval", help="evaluate preference objectives on scored pairs")
    p.add_argument("--scores", required=True, help="JSONL {pair_id, role, token_logprobs}")
    p.add_argument("--objective", choices=("orpo", "cpo"), default="orpo")
    p.add_argument("--beta", type=float, default=0.1, help="cpo reward scale")
    p.add_argument("--out", help="reward curve CSV path")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_prefeval)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FormatError, SchemaError, EmptyTranscriptError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        for line in exc.attempts:
            print(f"  {line}", file=sys.stderr)
        return EXIT_ENDPOINT
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
