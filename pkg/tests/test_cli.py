import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from ptower.cli import main
from ptower.instances import (
    instance_to_json,
    load_instance,
    load_instance_file,
)
from ptower.errors import SchemaError
from ptower.tower import random_instance

FIXTURES = Path(__file__).parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestOmega:
    def test_p3_n1(self, capsys):
        code, out, _ = run_cli(capsys, "omega", "--p", "3",
                               "--precision", "4", "--n", "1")
        assert code == 0
        assert out == "3 3 1\nmu=0 lambda=2\n"

    def test_n0(self, capsys):
        code, out, _ = run_cli(capsys, "omega", "--p", "5",
                               "--precision", "3", "--n", "0")
        assert code == 0
        assert out == "1\nmu=0 lambda=0\n"

    def test_p2_n2(self, capsys):
        code, out, _ = run_cli(capsys, "omega", "--p", "2",
                               "--precision", "6", "--n", "2")
        assert code == 0
        assert out == "4 6 4 1\nmu=0 lambda=3\n"

    def test_bad_prime(self, capsys):
        code, _, err = run_cli(capsys, "omega", "--p", "4",
                               "--precision", "2", "--n", "1")
        assert code == 1
        assert "prime" in err


class TestLayers:
    def test_z9_text(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "z9_tower.json"),
                               "--n-max", "2")
        assert code == 0
        assert out == ("n type e_n\n"
                       "0 [1] 1\n"
                       "1 [2] 2\n"
                       "2 [2] 2\n"
                       "stable from n=1\n")

    def test_z9_with_fit(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "z9_tower.json"),
                               "--n-max", "4")
        assert code == 0
        assert "fit: mu=0 lambda=0 nu=2 from n=1" in out

    def test_elementary_t(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "elementary_t.json"),
                               "--n-max", "6")
        assert code == 0
        lines = out.splitlines()
        assert lines[1] == "0 [] 0"
        assert lines[7] == "6 [6] 6"
        assert lines[-1] == "fit: mu=0 lambda=1 nu=0 from n=0"

    def test_negative_nu_flagged(self, capsys, tmp_path):
        f = tmp_path / "p.json"
        f.write_text(json.dumps({
            "kind": "elementary", "p": 3, "precision": 6,
            "summands": [{"type": "p-power", "mu": 1}],
        }))
        code, out, _ = run_cli(capsys, "layers", str(f), "--n-max", "4")
        assert code == 0
        assert "nu=-1" in out and "abstract-module quotient" in out

    def test_csv_rfc4180(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "z9_tower.json"),
                               "--n-max", "2", "--format", "csv")
        assert code == 0
        assert out.startswith("n,type,e\r\n0,[1],1\r\n")

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "z9_tower.json"),
                               "--n-max", "3", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["layers"][0] == {"e": 1, "n": 0, "type": [1]}
        assert data["stabilization_index"] == 1

    def test_descent_file_compiles(self, capsys):
        code, out, _ = run_cli(capsys, "layers",
                               str(FIXTURES / "descent_hand.json"))
        assert code == 0
        assert out.splitlines()[1] == "0 [] 0"
        assert out.splitlines()[2] == "1 [1] 1"

    def test_schema_violation_exit_1(self, capsys, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text(json.dumps({
            "kind": "tower", "p": 3, "exponents": [2], "sigma": [[4]],
            "c_bar_generators": [[3]], "extra_field": 1,
        }))
        code, _, err = run_cli(capsys, "layers", str(f))
        assert code == 1
        assert "extra_field" in err or "additional" in err.lower()

    def test_level_past_finite_length_exit_1(self, capsys, tmp_path):
        f = tmp_path / "short.json"
        f.write_text(json.dumps({
            "kind": "tower", "p": 3, "exponents": [2], "sigma": [[4]],
            "c_bar_generators": [[3]], "d": 1,
        }))
        code, _, err = run_cli(capsys, "layers", str(f), "--n-max", "5")
        assert code == 1
        assert "exceeds" in err

    def test_infinite_quotient_exit_2(self, capsys, tmp_path):
        # the quotient by omega_1 is infinite at levels >= 1
        f = tmp_path / "inf.json"
        f.write_text(json.dumps({
            "kind": "elementary", "p": 3, "precision": 4,
            "summands": [{"type": "distinguished", "coeffs": [3, 3, 1]}],
        }))
        code, _, err = run_cli(capsys, "layers", str(f), "--n-max", "4")
        assert code == 2
        assert "inconsistency" in err

    def test_precision_cap_exit_3(self, capsys, tmp_path, monkeypatch):
        # omega_4 on the quotient by T^3 - 3 needs precision above 4
        monkeypatch.setenv("TOWER_MAX_PRECISION", "4")
        f = tmp_path / "deep.json"
        f.write_text(json.dumps({
            "kind": "elementary", "p": 3, "precision": 4,
            "summands": [{"type": "distinguished", "coeffs": [-3, 0, 0, 1]}],
        }))
        code, _, err = run_cli(capsys, "layers", str(f), "--n-max", "4")
        assert code == 3
        assert "TOWER_MAX_PRECISION" in err
        monkeypatch.delenv("TOWER_MAX_PRECISION")
        code2, out, _ = run_cli(capsys, "layers", str(f), "--n-max", "4")
        assert code2 == 0
        assert out.splitlines()[5] == "4 [4,4,3] 11"


class TestFukuda:
    def test_z9_mod_p(self, capsys):
        code, out, _ = run_cli(capsys, "fukuda",
                               str(FIXTURES / "z9_tower.json"),
                               "--k", "1", "--n-max", "6")
        assert code == 0
        assert out == ("hypothesis holds at p^1: layers 0 and 1 agree\n"
                       "conclusion verified: layers 0..6 agree at p^1\n"
                       "C-bar in p^1 X-bar: verified\n"
                       "rank formulation: agrees\n")

    def test_z9_full_hypothesis_fails(self, capsys):
        code, out, _ = run_cli(capsys, "fukuda",
                               str(FIXTURES / "z9_tower.json"),
                               "--k", "full", "--n-max", "6")
        assert code == 0
        assert out.startswith("hypothesis fails (no claim)")

    def test_batch(self, capsys):
        code, out, _ = run_cli(capsys, "fukuda", "--random", "25",
                               "--seed", "3", "--p", "3")
        assert code == 0
        assert out == "25/25 consistent\n"

    def test_bad_k(self, capsys):
        code, _, err = run_cli(capsys, "fukuda",
                               str(FIXTURES / "z9_tower.json"),
                               "--k", "half")
        assert code == 1


class TestInfer:
    def test_mu37_line(self, capsys):
        code, out, _ = run_cli(capsys, "infer", "--p", "37", "--a0", "1",
                               "--a1", "1", "--ramhyp")
        assert code == 0
        assert out == (
            "ramification hypothesis: asserted by user (not verified)\n"
            "observed: A_0 = Z/37, A_1 = Z/37\n"
            "A_n ≅ Z/37 for all n ≥ 1\n")

    def test_plain_radical_line(self, capsys):
        code, out, _ = run_cli(capsys, "infer", "--p", "37", "--a0", "-",
                               "--a1", "-", "--ramhyp")
        assert code == 0
        assert out == (
            "ramification hypothesis: asserted by user (not verified)\n"
            "observed: A_0 = 0, A_1 = 0\n"
            "A_n trivial for all n\n")

    def test_not_applicable(self, capsys):
        code, out, _ = run_cli(capsys, "infer", "--p", "37", "--a0", "-",
                               "--a1", "1", "--ramhyp")
        assert code == 0
        assert out.endswith("theorem not applicable: A_1 and A_0 differ\n")

    def test_mod_pk_variant(self, capsys):
        code, out, _ = run_cli(capsys, "infer", "--p", "3", "--a0", "2,1",
                               "--a1", "3,1", "--ramhyp", "--k", "1")
        assert code == 0
        assert "A_n/p^1 A_n ≅ Z/3 ⊕ Z/3 for all n ≥ 1" in out

    def test_enumeration(self, capsys):
        code, out, _ = run_cli(capsys, "infer", "--p", "37", "--a0", "1",
                               "--a1", "1", "--ramhyp", "--n-target", "3")
        assert code == 0
        assert out.endswith("  n=1: Z/37\n  n=2: Z/37\n  n=3: Z/37\n")

    def test_requires_ramhyp(self, capsys):
        code, _, err = run_cli(capsys, "infer", "--p", "37", "--a0", "1",
                               "--a1", "1")
        assert code == 1
        assert "ramification" in err

    def test_requires_levels(self, capsys):
        code, _, err = run_cli(capsys, "infer", "--p", "37", "--a0", "1",
                               "--ramhyp")
        assert code == 1
        assert "levels 0 and 1" in err


class TestOracleCmd:
    def test_hand_fixture(self, capsys):
        code, out, _ = run_cli(capsys, "oracle",
                               str(FIXTURES / "descent_hand.json"))
        assert code == 0
        assert out == ("n=0: equal []\n"
                       "n=1: equal [1]\n"
                       "oracle: all levels equal\n")

    def test_random_batch(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "--random", "6",
                               "--seed", "7", "--p", "3", "--d", "1",
                               "--delta", "z2")
        assert code == 0
        assert out == "6/6 equal\n"

    def test_budget_exit_3(self, capsys):
        code, _, err = run_cli(capsys, "oracle",
                               str(FIXTURES / "descent_hand.json"),
                               "--budget", "2")
        assert code == 3
        assert "budget" in err.lower() or "closure" in err

    def test_emit_round_trip(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "oracle", "--random", "2",
                             "--seed", "11", "--p", "2", "--d", "2",
                             "--delta", "z2", "--emit", str(tmp_path))
        assert code == 0
        emitted = sorted(tmp_path.glob("*.json"))
        assert len(emitted) == 2
        for path in emitted:
            code1, out1, _ = run_cli(capsys, "oracle", str(path))
            code2, out2, _ = run_cli(capsys, "oracle", str(path))
            assert code1 == code2 == 0
            assert out1 == out2
            assert "all levels equal" in out1


class TestLemmaAug:
    def test_preset(self, capsys):
        code, out, _ = run_cli(capsys, "lemma-aug", "--preset", "s3",
                               "--p", "3", "--d", "1", "--n", "0",
                               "--precision", "3")
        assert code == 0
        assert out == "verified\n"

    def test_inline_table(self, capsys):
        code, out, _ = run_cli(capsys, "lemma-aug",
                               "--table", "[[0,1],[1,0]]",
                               "--p", "3", "--d", "1", "--n", "1",
                               "--precision", "4")
        assert code == 0
        assert out == "verified\n"


class TestInstanceRoundTrip:
    def test_tower_serialize_reload(self):
        inst = random_instance(3, 9)
        data = json.loads(instance_to_json(inst))
        again = load_instance(data)
        assert again.module == inst.module
        assert again.c_bar.gens == inst.c_bar.gens
        assert again.d == inst.d

    def test_reingested_results_identical(self, capsys, tmp_path):
        inst = random_instance(5, 4, allow_unbounded=False)
        path = tmp_path / "t.json"
        path.write_text(instance_to_json(inst))
        copy = load_instance_file(str(path))
        path2 = tmp_path / "t2.json"
        path2.write_text(instance_to_json(copy))
        assert path.read_text() == path2.read_text()
        code1, out1, _ = run_cli(capsys, "layers", str(path))
        code2, out2, _ = run_cli(capsys, "layers", str(path2))
        assert code1 == code2 == 0
        assert out1 == out2

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            load_instance({"kind": "mystery"})


class TestDeterminism:
    def test_byte_identical_across_hash_seeds(self, tmp_path):
        """Seeded commands must not depend on interpreter hash
        randomization; run the same command under two PYTHONHASHSEED
        values and compare bytes."""
        cmds = [
            ["oracle", "--random", "4", "--seed", "5", "--p", "3",
             "--d", "2", "--delta", "z2"],
            ["fukuda", "--random", "10", "--seed", "1", "--p", "2"],
            ["omega", "--p", "5", "--precision", "4", "--n", "2"],
            ["layers", str(FIXTURES / "z9_tower.json"), "--n-max", "4",
             "--format", "json"],
        ]
        for cmd in cmds:
            outputs = []
            for hashseed in ("1", "77"):
                env = dict(os.environ, PYTHONHASHSEED=hashseed)
                proc = subprocess.run(
                    [sys.executable, "-m", "ptower.cli", *cmd],
                    capture_output=True, env=env, check=True)
                outputs.append(proc.stdout)
            assert outputs[0] == outputs[1], cmd
