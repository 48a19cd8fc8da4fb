"""Command-line entry point: ``lcsh-pipeline <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 stage failure,
3 name-service failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .authority_store import AuthorityError, AuthorityStore, Scheme, load_authorities
from .eval_harness import aggregate, compare_title, side_by_side
from .filter_engine import ConceptList, FilterConfig, run_filters
from .lcnaf_client import DEFAULT_ENDPOINT, ClientConfig, Mode, NameClient, NameServiceError
from .marc_io import SegmentClassifier, emit, load_agent_corpus, load_baseline_corpus
from .marc_synth import SynthesisError, synthesize
from .places import Gazetteer
from .term_index import CacheError, TermIndex, build_index, cached_index, file_digest, save_index
from .validator import Validator

log = logging.getLogger("lcsh_pipeline")

EXIT_OK, EXIT_USAGE, EXIT_STAGE, EXIT_SERVICE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class StageFailure(Exception):
    def __init__(self, stage: str, item: str, cause: Exception):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed on {item}: {cause}")


@dataclass
class PipelineConfig:
    lcsh: str | None = None
    lcgft: str | None = None
    lcsh_cache: str | None = None
    lcgft_cache: str | None = None
    name_mode: str = "fixture"
    name_endpoint: str = DEFAULT_ENDPOINT
    name_fixtures: str | None = None
    name_timeout: float = 10.0
    name_retries: int = 3
    name_delay: float = 0.5
    threshold: float = 0.20
    fuzzy_threshold: float = 0.60
    k: int = 5
    bt_depth: int = 3
    order_mode: str = "canonical"
    geo_exceptions: str | None = None
    provider: str | None = None
    format: str = "text"
    workers: int = 1

    def check(self, needs: Sequence[str] = ()) -> None:
        for name in needs:
            if getattr(self, name) is None:
                raise UsageError(f"missing required setting {name!r}")
        for name in ("lcsh", "lcgft", "name_fixtures", "geo_exceptions"):
            value = getattr(self, name)
            if value is not None and name in needs and not Path(value).exists():
                raise UsageError(f"{name}: {value} does not exist")
        for name in ("threshold", "fuzzy_threshold"):
            if not 0 < getattr(self, name) <= 1:
                raise UsageError(f"{name} must be in (0, 1]")
        if self.k < 1 or self.bt_depth < 1 or self.workers < 1:
            raise UsageError("k, bt_depth and workers must be positive")
        if self.order_mode not in ("canonical", "given"):
            raise UsageError("order_mode must be 'canonical' or 'given'")
        if self.format not in ("text", "json"):
            raise UsageError("format must be 'text' or 'json'")

    def name_client(self) -> NameClient:
        try:
            return NameClient(ClientConfig(
                mode=Mode(self.name_mode), endpoint=self.name_endpoint,
                fixture_dir=Path(self.name_fixtures) if self.name_fixtures else None,
                timeout=self.name_timeout, max_retries=self.name_retries,
                min_interval=self.name_delay))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, value: Any) -> Any:
    default = _FIELDS[name].default
    if value is None:
        return None
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(_FIELDS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        base = Path(args.config).parent
        for key, value in data.items():
            if key in ("lcsh", "lcgft", "lcsh_cache", "lcgft_cache", "name_fixtures",
                       "geo_exceptions") and value is not None:
                value = str(base / value)
            values[key] = value
    for name in _FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return PipelineConfig(**{k: _coerce(k, v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


# -- shared loading -----------------------------------------------------------

def _load(cfg: PipelineConfig, scheme: Scheme) -> tuple[AuthorityStore, TermIndex]:
    path = cfg.lcsh if scheme is Scheme.LCSH else cfg.lcgft
    cache = cfg.lcsh_cache if scheme is Scheme.LCSH else cfg.lcgft_cache
    store = load_authorities(path, scheme)
    log.info("%s: %s", scheme.value, store.report.summary())
    return store, cached_index(store, path, cache)


def _require_files(*paths: str) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"{p} does not exist")


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


# -- commands -------------------------------------------------------------------

def cmd_build_index(cfg: PipelineConfig, scheme: Scheme, out=None) -> str:
    out = out or sys.stdout
    needs = ["lcsh"] if scheme is Scheme.LCSH else ["lcgft"]
    cfg.check(needs)
    path = getattr(cfg, scheme.value)
    cache = getattr(cfg, f"{scheme.value}_cache")
    store = load_authorities(path, scheme)
    index = build_index(store)
    line = f"{len(store)} records, {len(index)} documents"
    if cache:
        save_index(index, cache, file_digest(path))
        digest = hashlib.sha256(Path(cache).read_bytes()).hexdigest()
        line += f", cache {cache} sha256={digest}"
    r = store.report
    if r.skipped or r.duplicates or r.dangling:
        line += f" ({len(r.skipped)} skipped, {len(r.duplicates)} duplicates, {len(r.dangling)} dangling links)"
    print(line, file=out)
    return line


def cmd_search(cfg: PipelineConfig, scheme: Scheme, query: str, out=None) -> list:
    out = out or sys.stdout
    cfg.check(["lcsh"] if scheme is Scheme.LCSH else ["lcgft"])
    store, index = _load(cfg, scheme)
    hits = index.search(query, cfg.k)
    for rank, h in enumerate(hits, start=1):
        print(f"{rank}\t{h.score:.6f}\t{h.record_id}\t{h.label_role}\t{h.matched_label}", file=out)
    return hits


def _provider_concepts(cfg: PipelineConfig, work_path: str) -> dict:
    if not cfg.provider:
        raise UsageError("--work needs a provider command")
    work = Path(work_path).read_text(encoding="utf-8")
    proc = subprocess.run(cfg.provider, shell=True, input=work, capture_output=True, text=True)
    if proc.returncode != 0:
        raise StageFailure("concept analysis", cfg.provider, RuntimeError(proc.stderr.strip()))
    return json.loads(proc.stdout)


def cmd_run(cfg: PipelineConfig, concept_path: str | None, out_dir: str,
            work_path: str | None = None, out=None) -> list:
    out = out or sys.stdout
    cfg.check(["lcsh", "lcgft"])
    _require_files(*(p for p in (concept_path, work_path) if p))
    outdir = Path(out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if work_path:
            doc = _provider_concepts(cfg, work_path)
        else:
            with open(concept_path, encoding="utf-8") as fh:
                doc = json.load(fh)
        concepts = ConceptList.from_json(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise StageFailure("concept list", str(concept_path or work_path), exc) from exc
    _write_json(outdir / "1-concepts.json", concepts.to_json())

    lcsh, lcsh_index = _load(cfg, Scheme.LCSH)
    lcgft, lcgft_index = _load(cfg, Scheme.LCGFT)
    try:
        candidates, report = run_filters(concepts.concepts, lcsh, FilterConfig(cfg.threshold, cfg.bt_depth))
    except ValueError as exc:
        raise StageFailure("quantitative filtering", "concept list", exc) from exc
    _write_json(outdir / "2-candidates.json",
                {"candidates": [c.to_json() for c in candidates], "report": report.to_json()})

    validator = Validator(lcsh, lcgft, lcsh_index, lcgft_index,
                          cfg.name_client() if any(c.intended_tag in ("600", "610", "611")
                                                   for c in candidates) else None,
                          cfg.fuzzy_threshold, cfg.k,
                          Gazetteer.load(cfg.geo_exceptions), cfg.order_mode)
    accepted, rejected = validator.validate_all(candidates, cfg.workers)
    _write_json(outdir / "3-validated.json",
                {"validated": [v.to_json() for v in accepted],
                 "rejected": [r.to_json() for r in rejected]})

    fields = []
    for v in accepted:
        try:
            fields.append(synthesize(v))
        except SynthesisError as exc:
            raise StageFailure("MARC synthesis", v.authorized_base, exc) from exc
    ext = "txt" if cfg.format == "text" else "json"
    doc = emit(fields, cfg.format)
    (outdir / f"4-fields.{ext}").write_text(doc, encoding="utf-8")
    out.write(doc)
    return fields


def cmd_evaluate(cfg: PipelineConfig, agent_path: str, baseline_path: str,
                 out_dir: str | None = None, out=None):
    out = out or sys.stdout
    cfg.check([name for name in ("lcsh", "lcgft") if getattr(cfg, name)])
    _require_files(agent_path, baseline_path)
    lcsh = load_authorities(cfg.lcsh, Scheme.LCSH) if cfg.lcsh else None
    lcgft = load_authorities(cfg.lcgft, Scheme.LCGFT) if cfg.lcgft else None
    classifier = SegmentClassifier(lcsh, lcgft)
    try:
        agent = {e.work_id: e for e in load_agent_corpus(agent_path)}
        baseline = load_baseline_corpus(baseline_path, classifier)
    except (OSError, ValueError, KeyError) as exc:
        raise StageFailure("evaluation input", f"{agent_path} / {baseline_path}", exc) from exc
    reports = []
    tables = []
    for entry in baseline:
        fields = agent[entry.work_id].items if entry.work_id in agent else ()
        report = compare_title(fields, entry.items, lcsh, lcgft, work_id=entry.work_id)
        reports.append(report)
        tables.append(side_by_side(report, entry.title))
    summary = aggregate(reports)
    if out_dir:
        outdir = Path(out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_json(outdir / "reports.json", [r.to_json() for r in reports])
        _write_json(outdir / "summary.json", summary.to_json())
        (outdir / "side_by_side.txt").write_text("\n".join(tables), encoding="utf-8")
    if cfg.format == "json":
        out.write(json.dumps(summary.to_json(), ensure_ascii=False, indent=2) + "\n")
    else:
        for key, value in summary.means.items():
            out.write(f"{key:<22} {value:.3f}\n")
        out.write(f"name headings (600/610): agent {summary.agent_name_works} works, "
                  f"baseline {summary.baseline_name_works} works\n")
        out.write(f"form subdivisions: agent $v {summary.agent_v_count}, "
                  f"baseline {summary.baseline_form_subdivisions}\n")
        out.write(f"overlap: per baseline heading {summary.overlap_per_baseline:.3f}, "
                  f"per agent heading {summary.overlap_per_agent:.3f}\n")
    return reports, summary


def cmd_record_fixtures(cfg: PipelineConfig, queries: Sequence[str], out=None) -> list[Path]:
    out = out or sys.stdout
    cfg.check()
    if not cfg.name_fixtures:
        raise UsageError("record-fixtures needs --name_fixtures")
    cfg = dataclasses.replace(cfg, name_mode="live")
    client = cfg.name_client()
    paths = []
    for q in queries:
        path = client.record_fixture(q)
        print(f"{q}\t{path}", file=out)
        paths.append(path)
    return paths


# -- argument parsing -------------------------------------------------------------

def _flag(parser: argparse.ArgumentParser, name: str, **kw) -> None:
    dashed = name.replace("_", "-")
    names = [f"--{name}"] + ([f"--{dashed}"] if dashed != name else [])
    parser.add_argument(*names, dest=name, default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config; flags override its keys")
    common.add_argument("-v", "--verbose", action="store_true")
    for name, f in _FIELDS.items():
        kind = type(f.default) if f.default is not None else str
        _flag(common, name, type=kind if kind in (int, float) else str)

    parser = argparse.ArgumentParser(
        prog="lcsh-pipeline", description="Draft LCSH subject fields and compare them with catalog records.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", parents=[common], help="build and cache a TF-IDF index")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)

    p = sub.add_parser("search", parents=[common], help="ranked authority search (diagnostic)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="lcsh")
    p.add_argument("query")

    p = sub.add_parser("run", parents=[common], help="filter, validate and synthesize one work")
    p.add_argument("concepts", nargs="?", help="concept-list JSON document")
    p.add_argument("--work", help="work description JSON, passed to the provider command")
    p.add_argument("--out", required=True, help="directory for stage documents")

    p = sub.add_parser("evaluate", parents=[common], help="compare agent fields with baseline headings")
    p.add_argument("agent")
    p.add_argument("baseline")
    p.add_argument("--out", help="directory for reports")

    p = sub.add_parser("record-fixtures", parents=[common], help="capture live name-service responses")
    p.add_argument("queries", nargs="+")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "build-index":
            cmd_build_index(cfg, Scheme(args.scheme))
        elif args.command == "search":
            cmd_search(cfg, Scheme(args.scheme), args.query)
        elif args.command == "run":
            if not args.concepts and not args.work:
                raise UsageError("give a concept-list document or --work")
            cmd_run(cfg, args.concepts, args.out, args.work)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.agent, args.baseline, args.out)
        elif args.command == "record-fixtures":
            cmd_record_fixtures(cfg, args.queries)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NameServiceError as exc:
        print(f"name service error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except (StageFailure, AuthorityError, CacheError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
