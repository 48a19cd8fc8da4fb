import hashlib
import json
import sys

import pytest

from lcsh_pipeline.authority_store import Scheme
from lcsh_pipeline.cli import PipelineConfig, cmd_build_index, cmd_evaluate, cmd_run, main
from lcsh_pipeline.marc_io import display_to_canonical

from support import FIXTURES, golden

T04 = FIXTURES / "concepts" / "t04_banker_to_the_poor.json"
AGENT = FIXTURES / "golden" / "agent_corpus.ndjson"
BASELINE = FIXTURES / "golden" / "baseline_corpus.ndjson"

FLAGS = ["--lcsh", str(FIXTURES / "lcsh.ndjson"), "--lcgft", str(FIXTURES / "lcgft.ndjson"),
         "--name_fixtures", str(FIXTURES / "names")]


def config(**kw):
    return PipelineConfig(lcsh=str(FIXTURES / "lcsh.ndjson"), lcgft=str(FIXTURES / "lcgft.ndjson"),
                          name_fixtures=str(FIXTURES / "names"), **kw)


def concepts_doc(*concepts):
    return {"work": {"title": "Test work"}, "concepts": list(concepts)}


def write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def title4_lines():
    work = next(w for w in golden()["works"] if w["work_id"] == "T04")
    return [display_to_canonical(row["display"]) for row in work["agent"]]


def test_build_index_stats_line(tmp_path, capsys):
    cfg = PipelineConfig(lcgft=str(FIXTURES / "lcgft.ndjson"), lcgft_cache=str(tmp_path / "gf.idx"))
    line = cmd_build_index(cfg, Scheme.LCGFT)
    assert line.startswith("10 records, 14 documents, cache ")
    assert capsys.readouterr().out.strip() == line


def test_rebuild_gives_identical_cache(tmp_path):
    digests = []
    for name in ("a.idx", "b.idx"):
        cache = tmp_path / name
        cmd_build_index(PipelineConfig(lcsh=str(FIXTURES / "lcsh.ndjson"), lcsh_cache=str(cache)),
                        Scheme.LCSH)
        digests.append(hashlib.sha256(cache.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_search_command(capsys):
    assert main(["search", "--scheme", "lcsh", "--k", "3", *FLAGS, "exchange rates"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
    assert 1 <= len(rows) <= 3
    assert rows[0][0] == "1"
    assert rows[0][4] == "Exchange rates"
    assert rows[0][3] == "variant"


def test_run_title_four(tmp_path, capsys):
    fields = cmd_run(config(), str(T04), str(tmp_path))
    out = capsys.readouterr().out
    assert out.splitlines() == title4_lines()
    assert len(fields) == 5
    for name in ("1-concepts.json", "2-candidates.json", "3-validated.json", "4-fields.txt"):
        assert (tmp_path / name).is_file()
    report = json.loads((tmp_path / "2-candidates.json").read_text())["report"]
    assert [d["label"] for d in report["dropped_coverage"]] == ["Bangladesh"]
    assert (tmp_path / "4-fields.txt").read_text().splitlines() == title4_lines()


def test_run_is_byte_identical(tmp_path, capsys):
    for d in ("one", "two"):
        assert main(["run", str(T04), "--out", str(tmp_path / d), *FLAGS]) == 0
    capsys.readouterr()
    for name in ("1-concepts.json", "2-candidates.json", "3-validated.json", "4-fields.txt"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_run_json_format(tmp_path, capsys):
    cmd_run(config(format="json"), str(T04), str(tmp_path))
    fields = json.loads((tmp_path / "4-fields.json").read_text())
    assert [f["tag"] for f in fields] == ["600", "610", "650", "650", "655"]
    assert json.loads(capsys.readouterr().out) == fields


def test_run_empty_concept_list(tmp_path, capsys):
    path = write(tmp_path / "c.json", concepts_doc())
    assert cmd_run(config(), str(path), str(tmp_path / "out")) == []
    assert capsys.readouterr().out == ""
    stage2 = json.loads((tmp_path / "out" / "2-candidates.json").read_text())
    assert stage2["candidates"] == [] and stage2["report"]["dropped_coverage"] == []
    stage3 = json.loads((tmp_path / "out" / "3-validated.json").read_text())
    assert stage3 == {"validated": [], "rejected": []}


def test_run_below_threshold_only(tmp_path, capsys):
    path = write(tmp_path / "c.json", concepts_doc(
        {"label": "Poverty", "kind": "topical", "coverage": 0.05, "predominance_rank": 1}))
    assert cmd_run(config(), str(path), str(tmp_path / "out")) == []
    assert capsys.readouterr().out == ""
    stage2 = json.loads((tmp_path / "out" / "2-candidates.json").read_text())
    assert stage2["candidates"] == []
    assert len(stage2["report"]["dropped_coverage"]) == 1


def test_rejections_do_not_abort(tmp_path, capsys):
    path = write(tmp_path / "c.json", concepts_doc(
        {"label": "Poverty", "kind": "topical", "coverage": 0.9, "predominance_rank": 1},
        {"label": "Zqxv nonexistent", "kind": "topical", "coverage": 0.8, "predominance_rank": 2}))
    assert main(["run", str(path), "--out", str(tmp_path / "out"), *FLAGS]) == 0
    assert capsys.readouterr().out == "650 _0 $aPoverty.\n"
    stage3 = json.loads((tmp_path / "out" / "3-validated.json").read_text())
    assert len(stage3["rejected"]) == 1


def test_evaluate_writes_reports(tmp_path, capsys):
    reports, summary = cmd_evaluate(config(), str(AGENT), str(BASELINE), str(tmp_path))
    assert len(reports) == 10
    assert {p.name for p in tmp_path.iterdir()} == {"reports.json", "summary.json", "side_by_side.txt"}
    assert len(json.loads((tmp_path / "reports.json").read_text())) == 10
    out = capsys.readouterr().out
    assert "per baseline heading" in out and "per agent heading" in out


def test_evaluate_identical_corpora(tmp_path, capsys):
    _, summary = cmd_evaluate(config(), str(AGENT), str(AGENT))
    assert set(summary.means.values()) == {1.0}


def test_evaluate_single_work_summary_equals_report(tmp_path, capsys):
    one = tmp_path / "one.ndjson"
    one.write_text(BASELINE.read_text().splitlines()[4] + "\n")
    reports, summary = cmd_evaluate(config(), str(AGENT), str(one))
    assert summary.means == reports[0].scores()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    write(cfg, {"lcsh": str(FIXTURES / "lcsh.ndjson"), "lcgft": str(FIXTURES / "lcgft.ndjson"),
                "name_fixtures": str(FIXTURES / "names"), "threshold": 0.95})
    assert main(["run", str(T04), "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    # critical entities survive any threshold
    assert [line[:3] for line in capsys.readouterr().out.splitlines()] == ["600", "610", "655"]
    assert main(["run", str(T04), "--config", str(cfg), "--threshold", "0.2",
                 "--out", str(tmp_path / "b")]) == 0
    assert capsys.readouterr().out.splitlines() == title4_lines()


def test_dashed_flag_spelling(tmp_path, capsys):
    flags = ["--lcsh", str(FIXTURES / "lcsh.ndjson"), "--lcgft", str(FIXTURES / "lcgft.ndjson"),
             "--name-fixtures", str(FIXTURES / "names"), "--order-mode", "canonical"]
    assert main(["run", str(T04), "--out", str(tmp_path), *flags]) == 0
    assert capsys.readouterr().out.splitlines() == title4_lines()


def test_config_paths_are_relative_to_config_file(tmp_path, capsys):
    cfg = FIXTURES / "pipeline.json"
    assert json.loads(cfg.read_text())["lcsh"] == "lcsh.ndjson"
    assert main(["run", str(T04), "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines() == title4_lines()


def test_provider_hook(tmp_path, capsys):
    work = write(tmp_path / "work.json", {"title": "Banker to the Poor"})
    provider = f"{sys.executable} -c \"import sys; sys.stdin.read(); print(open({str(T04)!r}).read())\""
    assert main(["run", "--work", str(work), "--provider", provider,
                 "--out", str(tmp_path / "out"), *FLAGS]) == 0
    assert capsys.readouterr().out.splitlines() == title4_lines()


@pytest.mark.parametrize("argv", [
    ["run", str(T04), "--out", "x", "--lcsh", "/nonexistent.ndjson", "--lcgft", "/nonexistent"],
    ["run", "/nonexistent.json", "--out", "x", *FLAGS],
    ["run", "--out", "x", *FLAGS],
    ["run", str(T04), "--out", "x", "--threshold", "1.5", *FLAGS],
    ["build-index", "--scheme", "lcsh"],
    ["bogus-command"],
    ["run", str(T04), "--out", "x", "--order_mode", "sideways", *FLAGS],
])
def test_usage_errors_exit_one(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_unknown_config_key_exits_one(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"lcsh": "x", "colour": "blue"})
    assert main(["build-index", "--scheme", "lcsh", "--config", str(cfg)]) == 1
    assert "colour" in capsys.readouterr().err


def test_stage_failure_exits_two(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "out"), *FLAGS]) == 2
    assert "concept list" in capsys.readouterr().err


def test_name_service_failure_exits_three(tmp_path, capsys):
    path = write(tmp_path / "c.json", concepts_doc(
        {"label": "Nobody, Unrecorded", "kind": "personal_name", "coverage": 0.9,
         "predominance_rank": 1}))
    assert main(["run", str(path), "--out", str(tmp_path / "out"), *FLAGS]) == 3
    assert (tmp_path / "out" / "2-candidates.json").is_file()
