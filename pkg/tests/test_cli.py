import csv
import io
import json

import pytest
from click.testing import CliRunner

from geoknap.cli import BENCH_FIELDS, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from geoknap.core import Instance, Item, Mode, Packing, Placement
from geoknap.core.io import read_instance, read_packing, write_instance, write_packing


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, inst):
    path = tmp_path / name
    write_instance(inst, path)
    return str(path)


def _cubes(N=10, d=2, *items):
    return Instance(N, d, Mode.HYPERCUBE, [Item.cube(i, s, p) for i, s, p in items])


def test_version(runner):
    assert runner.invoke(main, ["--version"]).exit_code == EXIT_OK


@pytest.mark.parametrize("mode", ["hypercube", "rectangle", "rectangle-rotating"])
def test_gen_is_deterministic(runner, tmp_path, mode):
    args = ["gen", "--mode", mode, "--n", "20", "--N", "50", "--seed", "4"]
    a = runner.invoke(main, args + ["--out", str(tmp_path / "a.jsonl")])
    b = runner.invoke(main, args + ["--out", str(tmp_path / "b.jsonl")])
    assert a.exit_code == b.exit_code == EXIT_OK
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    inst = read_instance(tmp_path / "a.jsonl")
    assert inst.n == 20 and inst.N == 50 and inst.mode.value == mode


def test_gen_edge_cases(runner, tmp_path):
    res = runner.invoke(main, ["gen", "--n", "0", "--out", str(tmp_path / "e.jsonl")])
    assert res.exit_code == EXIT_OK
    assert len((tmp_path / "e.jsonl").read_text().splitlines()) == 1
    assert runner.invoke(main, ["gen", "--mode", "rectangle", "--d", "3"]).exit_code == EXIT_USAGE
    clustered = runner.invoke(main, ["gen", "--profile", "clustered", "--n", "5"])
    assert clustered.exit_code == EXIT_OK and len(clustered.stdout.splitlines()) == 6


def test_solve_empty(runner, tmp_path):
    path = _write(tmp_path, "empty.jsonl", _cubes(5, 3))
    res = runner.invoke(main, ["solve", path, "--epsilon", "1/33"])
    assert res.exit_code == EXIT_OK
    summary = json.loads(res.stdout)
    assert summary["profit"] == 0 and summary["feasible"]


@pytest.mark.parametrize("mode", ["hypercube", "rectangle", "rectangle-rotating"])
def test_solve_summary_matches_verifier(runner, tmp_path, mode):
    inst_path = str(tmp_path / "i.jsonl")
    runner.invoke(main, ["gen", "--mode", mode, "--n", "30", "--N", "100", "--seed", "1", "--out", inst_path])
    pk_path = str(tmp_path / "p.jsonl")
    res = runner.invoke(main, ["solve", inst_path, "--epsilon", "1/4", "--budget", "4", "--out", pk_path,
                               "--out-implicit", str(tmp_path / "s.json")])
    assert res.exit_code == EXIT_OK, res.output
    summary = json.loads(res.stdout)
    check = runner.invoke(main, ["verify", inst_path, pk_path])
    assert check.exit_code == EXIT_OK
    assert json.loads(check.stdout)["profit"] == summary["profit"]
    assert summary["profit"] <= summary["estimate"]
    assert json.loads((tmp_path / "s.json").read_text())


def test_solve_eps_precondition(runner, tmp_path):
    path = _write(tmp_path, "c.jsonl", _cubes(10, 2, ("a", 3, 5)))
    res = runner.invoke(main, ["solve", path, "--epsilon", "1/3"])
    assert res.exit_code == EXIT_OK
    assert "warning" in res.stderr
    assert json.loads(res.stdout)["eps_precondition"] == "violated"
    assert runner.invoke(main, ["solve", path, "--epsilon", "1/3", "--strict-eps"]).exit_code == EXIT_USAGE
    assert runner.invoke(main, ["solve", path, "--epsilon", "0.3"]).exit_code == EXIT_USAGE
    assert runner.invoke(main, ["solve", path, "--epsilon", "1/17", "--strict-eps"]).exit_code == EXIT_OK


def test_solve_io_errors(runner, tmp_path):
    assert runner.invoke(main, ["solve", str(tmp_path / "missing.jsonl")]).exit_code == EXIT_IO
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"N": 10, "d": 2, "mode": "hypercube"}\n{"id": "a", "s": -1, "p": 2}\n')
    assert runner.invoke(main, ["solve", str(bad)]).exit_code == EXIT_IO


def test_verify_exit_codes(runner, tmp_path):
    inst = _cubes(10, 2, ("a", 6, 1), ("b", 6, 1))
    path = _write(tmp_path, "i.jsonl", inst)
    good, clash, ghost = (tmp_path / f"{n}.jsonl" for n in ("good", "clash", "ghost"))
    write_packing(Packing(10, 2, (Placement("a", (0, 0)),)), good)
    write_packing(Packing(10, 2, (Placement("a", (0, 0)), Placement("b", (2, 2)))), clash)
    write_packing(Packing(10, 2, (Placement("zz", (0, 0)),)), ghost)
    assert runner.invoke(main, ["verify", path, str(good)]).exit_code == EXIT_OK
    res = runner.invoke(main, ["verify", path, str(clash)])
    assert res.exit_code == EXIT_INFEASIBLE
    assert ["overlap", "a", "b"] in json.loads(res.stdout)["violations"]
    assert runner.invoke(main, ["verify", path, str(ghost)]).exit_code == EXIT_IO


def _script(tmp_path, text):
    path = tmp_path / "script.txt"
    path.write_text(text)
    return str(path)


def test_dynamic_examples(runner, tmp_path):
    path = _write(tmp_path, "i.jsonl", _cubes(10, 2))
    script = _script(tmp_path, '# comment\ninsert {"id": "a", "s": 3, "p": 7}\nestimate\ncontains a\n')
    res = runner.invoke(main, ["dynamic", path, script, "--epsilon", "1/4"])
    assert res.exit_code == EXIT_OK
    assert res.stdout.splitlines() == ["ok", "7", "true"]
    script = _script(tmp_path, 'insert {"id": "a", "s": 3, "p": 7}\ndelete a\nestimate\n')
    assert runner.invoke(main, ["dynamic", path, script]).stdout.splitlines() == ["ok", "ok", "0"]


def test_dynamic_output_and_replay(runner, tmp_path):
    inst_path = str(tmp_path / "i.jsonl")
    runner.invoke(main, ["gen", "--mode", "rectangle", "--n", "12", "--N", "40", "--out", inst_path])
    out = tmp_path / "snap.jsonl"
    text = f'insert {{"id": "x", "h": 5, "w": 30, "p": 40}}\ndelete i0\nestimate\noutput {out}\ncontains x\n'
    script = _script(tmp_path, text)
    first = runner.invoke(main, ["dynamic", inst_path, script, "--epsilon", "1/4", "--budget", "3"])
    second = runner.invoke(main, ["dynamic", inst_path, script, "--epsilon", "1/4", "--budget", "3"])
    assert first.exit_code == EXIT_OK and first.stdout == second.stdout
    lines = first.stdout.splitlines()
    pk = read_packing(out)
    start = read_instance(inst_path)
    now = start.with_items([it for it in start.items if it.id != "i0"] + [Item.rect("x", 5, 30, 40)])
    assert lines[:2] == ["ok", "ok"] and lines[3] == f"{out} {pk.profit(now)}"
    assert lines[4] == ("true" if "x" in pk.ids() else "false")


def test_dynamic_errors(runner, tmp_path):
    path = _write(tmp_path, "i.jsonl", _cubes(10, 2, ("a", 3, 5)))
    res = runner.invoke(main, ["dynamic", path, _script(tmp_path, "estimate\ndelete nope\n"), "--epsilon", "1/4"])
    assert res.exit_code == EXIT_IO
    assert res.stdout.splitlines() == ["5"] and "nope" in res.stderr
    assert runner.invoke(main, ["dynamic", path, _script(tmp_path, "jump\n")]).exit_code == EXIT_IO
    dup = _script(tmp_path, 'insert {"id": "a", "s": 1, "p": 1}\n')
    assert runner.invoke(main, ["dynamic", path, dup]).exit_code == EXIT_IO


def test_bench(runner, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    res = runner.invoke(main, ["bench", str(empty)])
    assert res.exit_code == EXIT_OK and res.stdout.strip() == ",".join(BENCH_FIELDS)
    data = tmp_path / "data"
    data.mkdir()
    for k, mode in enumerate(["hypercube", "rectangle", "rectangle-rotating"]):
        runner.invoke(main, ["gen", "--mode", mode, "--n", str(4 + 10 * k), "--N", "20", "--seed", str(k),
                             "--out", str(data / f"{k}.jsonl")])
    out = tmp_path / "bench.csv"
    res = runner.invoke(main, ["bench", str(data), "--epsilons", "1/4,1/8", "--budgets", "2", "--out", str(out)])
    assert res.exit_code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 6
    for row in rows:
        assert float(row["ratio_single"]) >= 1 and float(row["ratio_nfdh"]) >= 1
        if row["oracle"]:
            assert int(row["profit"]) <= int(row["oracle"])
    assert any(row["oracle"] for row in rows) and any(not row["oracle"] for row in rows)
    assert runner.invoke(main, ["bench", str(data), "--epsilons", "0.3"]).exit_code == EXIT_USAGE


def test_oracle_command(runner, tmp_path):
    path = _write(tmp_path, "i.jsonl", _cubes(4, 2, ("a", 3, 5), ("b", 2, 4)))
    res = runner.invoke(main, ["oracle", path, "--out", str(tmp_path / "o.jsonl")])
    assert res.exit_code == EXIT_OK and json.loads(res.stdout)["profit"] == 5
    assert read_packing(tmp_path / "o.jsonl").ids() == ["a"]
    assert runner.invoke(main, ["oracle", path, "--max-items", "1"]).exit_code == EXIT_USAGE
