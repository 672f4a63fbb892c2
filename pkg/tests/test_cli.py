import json
import subprocess
import sys

import pytest

from helpers import GOLDEN, GRAPHS
from verma_kit import c_components, parse_graph
from verma_kit.cli import main
from verma_kit.graph import admg_c_components


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def graph(name):
    return GRAPHS / (name if "." in name else f"{name}.txt")


class TestComponents:
    @pytest.mark.parametrize(
        "name, expected",
        [("fig1a", "{A} {C} {B,D}\n"), ("fig2", "{V1,V3} {V2,V4}\n"), ("fig3a.admg", "{V2} {V1,V3,V4}\n")],
    )
    def test_partition(self, capsys, name, expected):
        assert run(capsys, "components", graph(name)) == (0, expected, "")

    def test_no_hidden(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("observed A B C\nedge A -> B\nedge B -> C\n")
        assert run(capsys, "components", f)[1] == "{A} {B} {C}\n"

    def test_parse_error_exit_status(self, capsys, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("observed A B\nedge A -> B\nedge B -> A\n")
        code, out, err = run(capsys, "components", f)
        assert code == 2 and not out
        assert "line 3" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "components", tmp_path / "nope.txt")[0] == 2


class TestProject:
    def test_fig1a(self, capsys):
        code, out, _ = run(capsys, "project", graph("fig1a"))
        assert code == 0 and "biedge B <-> D" in out.splitlines()

    def test_fig2(self, capsys):
        lines = run(capsys, "project", graph("fig2"))[1].splitlines()
        for expected in ("edge V1 -> V2", "biedge V1 <-> V3", "biedge V2 <-> V4"):
            assert expected in lines

    def test_no_hidden(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("observed A B\nedge A -> B\n")
        out = run(capsys, "project", f)[1]
        assert "edge A -> B" in out and "biedge" not in out

    def test_admg_input_rejected(self, capsys):
        code, out, err = run(capsys, "project", graph("fig3a.admg"))
        assert code == 2 and not out and "bidirected" in err

    @pytest.mark.parametrize("name", GOLDEN)
    def test_round_trip_components(self, capsys, name):
        out = run(capsys, "project", graph(name))[1]
        src = parse_graph(graph(name).read_text())
        assert admg_c_components(parse_graph(out)) == c_components(src)


class TestFind:
    def test_fig1a(self, capsys):
        code, out, _ = run(capsys, "find", graph("fig1a"))
        assert code == 0
        assert "functional: Σ_{b}[ P(d|c,b,a) * P(b|a) ] is independent of {a}" in out

    def test_fig1b(self, capsys):
        out = run(capsys, "find", graph("fig1b"))[1]
        assert "0 functional" in out and "functional:" not in out

    def test_fig4_machine(self, capsys):
        out = run(capsys, "find", graph("fig4a"), "--dedup", "numeric", "--format", "machine")[1]
        doc = json.loads(out)
        funcs = [c for c in doc["constraints"] if c["kind"] == "functional"]
        in_component = [c for c in funcs if "V5" in c["scope"]]
        assert len(in_component) == 3
        assert sum(c["subsumed_by"] is not None for c in in_component) == 1
        assert list(doc["metadata"]) == ["graph_hash", "graph_type", "order", "orders", "config"]
        assert list(doc["constraints"][0]) == [
            "id", "kind", "rendered_expression", "quantity", "scope", "claimed_args", "extraneous",
            "x", "others", "given", "derivation", "subsumed_by", "orders",
        ]

    def test_cap_error(self, capsys, tmp_path):
        # a single seven-node component exceeds a cap of six
        names = [f"V{i}" for i in range(1, 8)]
        lines = ["observed " + " ".join(names), "hidden U"] + [f"edge U -> {v}" for v in names]
        f = tmp_path / "big.txt"
        f.write_text("\n".join(lines) + "\n")
        code, out, err = run(capsys, "find", f, "--max-component-size", 6)
        assert code == 2 and not out
        assert "{V1,V2,V3,V4,V5,V6,V7}" in err


class TestVerify:
    def test_fig1a(self, capsys):
        code, out, _ = run(capsys, "verify", graph("fig1a"), "--trials", 50, "--seed", 7)
        assert code == 0 and "all constraints hold" in out
        assert "(50/50)" in out

    def test_fig3(self, capsys):
        code, out, _ = run(capsys, "verify", graph("fig3a"), "--trials", 50)
        assert code == 0 and "PASS" in out and "FAIL" not in out

    def test_machine(self, capsys):
        code, out, _ = run(capsys, "verify", graph("fig4a"), "--trials", 5, "--format", "machine")
        doc = json.loads(out)
        assert code == 0 and doc["all_hold"] and len(doc["results"]) == 4

    def test_failure_exit_status(self, capsys):
        # a tolerance below rounding error makes the check fail
        code, out, _ = run(capsys, "verify", graph("fig1a"), "--trials", 5, "--tol", "1e-30")
        assert code == 1 and "FAIL" in out

    @pytest.mark.parametrize("bad", [["--trials", "0"], ["--tol", "0"], ["--domain-size", "1"]])
    def test_usage_errors(self, capsys, bad):
        with pytest.raises(SystemExit) as info:
            main(["verify", str(graph("fig1a")), *bad])
        assert info.value.code == 2

    def test_state_space_cap(self, capsys):
        code, _, err = run(capsys, "verify", graph("fig4a"), "--trials", 1, "--domain-size", 40)
        assert code == 2 and "cap" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["components", "fig4a"],
        ["project", "fig2"],
        ["find", "fig4a", "--dedup", "numeric"],
        ["find", "fig4a", "--format", "machine", "--orders", "all"],
        ["verify", "fig3a", "--trials", "5"],
        ["verify", "fig2", "--trials", "5", "--format", "machine"],
    ],
)
def test_byte_determinism(argv):
    cmd = [sys.executable, "-m", "verma_kit", argv[0], str(graph(argv[1])), *argv[2:]]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first and first == second
