import json
import os

import pytest

from prefrank.cli import main

from test_model import BINARY, net_doc


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return str(path)


class TestValidate:
    def test_flight_ok(self, flight_path, capsys):
        assert main(["validate", flight_path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["acyclic"] is True

    def test_cycle_is_domain_error(self, tmp_path, capsys):
        doc = net_doc([("X", BINARY), ("Y", BINARY)], cp=[("X", "Y"), ("Y", "X")])
        path = write_json(tmp_path / "cycle.json", doc)
        assert main(["validate", path]) == 2

    def test_invalid_net_is_domain_error(self, tmp_path):
        path = write_json(tmp_path / "bad.json", {"variables": [{"name": "X", "domain": ["a"]}]})
        assert main(["validate", path]) == 2

    def test_missing_file_is_usage_error(self):
        assert main(["validate", "no-such-file.json"]) == 1


class TestCompile:
    def test_flight_value_function(self, flight_path, tmp_path, capsys):
        out = str(tmp_path / "vf.json")
        assert main(["compile", flight_path, "-o", out]) == 0
        doc = json.load(open(out))
        entries = sum(len(f["table"]) for f in doc["factors"])
        assert entries == 24
        assert "24 entries" in capsys.readouterr().out

    def test_system_dump(self, flight_path, tmp_path):
        out = str(tmp_path / "vf.json")
        dump = str(tmp_path / "system.json")
        assert main(["compile", flight_path, "-o", out, "--dump-system", dump]) == 0
        doc = json.load(open(dump))
        assert len(doc["constraints"]) == 54
        assert all("provenance" in c for c in doc["constraints"])

    def test_random_vertex_policy_seeded(self, flight_path, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert main(["compile", flight_path, "-o", a, "--policy", "random-vertex", "--seed", "4"]) == 0
        assert main(["compile", flight_path, "-o", b, "--policy", "random-vertex", "--seed", "4"]) == 0
        assert open(a).read() == open(b).read()


class TestRank:
    def test_rank_output_format(self, flight_path, flights_csv_path, tmp_path, capsys):
        vf = str(tmp_path / "vf.json")
        main(["compile", flight_path, "-o", vf])
        capsys.readouterr()
        assert main(["rank", vf, flights_csv_path, "-k", "10"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 10
        rank, item_id, score = lines[0].split(",")
        assert rank == "1" and item_id.startswith("f")
        int(score)


class TestOracle:
    def test_consistent_flight(self, flight_path, capsys):
        assert main(["oracle", flight_path, "--consistent"]) == 0
        assert "consistent" in capsys.readouterr().out

    def test_inconsistent_exit_2(self, tmp_path, capsys):
        doc = net_doc(
            [("X", BINARY), ("Y", BINARY)],
            cp=[("X", "Y"), ("Y", "X")],
        )
        doc["cpts"] = [
            {
                "variable": "X",
                "rows": [
                    {"given": {"Y": "a"}, "order": [["a", "b"]]},
                    {"given": {"Y": "b"}, "order": [["b", "a"]]},
                ],
            },
            {
                "variable": "Y",
                "rows": [
                    {"given": {"X": "a"}, "order": [["b", "a"]]},
                    {"given": {"X": "b"}, "order": [["a", "b"]]},
                ],
            },
        ]
        path = write_json(tmp_path / "cyc.json", doc)
        assert main(["oracle", path, "--consistent"]) == 2
        assert "inconsistent" in capsys.readouterr().out

    def test_pairs_report(self, flight_path, capsys):
        assert main(["oracle", flight_path, "--pairs"]) == 0
        out = capsys.readouterr().out
        assert "entailed pairs: 431" in out

    def test_cap(self, flight_path):
        assert main(["oracle", flight_path, "--pairs", "--cap", "8"]) == 2


class TestSimulate:
    def test_tiny_experiment(self, tmp_path, capsys):
        config = {
            "params": {"variable_count": [3, 4], "domain_size": [2, 2]},
            "runs": 3,
            "items_size": 12,
            "k": 4,
            "seed": 5,
        }
        path = write_json(tmp_path / "config.json", config)
        out = str(tmp_path / "results")
        assert main(["simulate", "--config", path, "--out", out]) == 0
        stats = json.load(open(os.path.join(out, "stats_ga.json")))
        assert stats["runs"] == 3


class TestUsage:
    def test_unknown_command_exits_1(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 1

    def test_missing_args_exit_1(self):
        with pytest.raises(SystemExit) as err:
            main(["compile"])
        assert err.value.code == 1
