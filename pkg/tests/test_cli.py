import json

import pytest

from ppsbox.cli import EXIT_DEGENERATE, EXIT_INPUT, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestAbl:
    def test_idle_token(self, capsys):
        code, out, _ = run(capsys, "abl", "--preset", "singlet-xy", "--dirs", "_,x")
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["result"]["distribution"]["d"] == pytest.approx(1.0, abs=1e-12)

    def test_dash_with_equals(self, capsys):
        code, out, _ = run(capsys, "abl", "--preset", "singlet-xy", "--dirs=-,x")
        assert code == EXIT_OK

    def test_events_file(self, capsys, tmp_path):
        ev = tmp_path / "ev.json"
        ev.write_text(json.dumps([
            {"type": "measure", "label": "A", "party": 1, "direction": "z"},
            {"type": "unitary", "party": 1, "gate": "X", "when": {"label": "A", "outcome": "d"}},
            {"type": "measure", "label": "B", "party": 2, "direction": "z"},
        ]))
        code, out, _ = run(capsys, "abl", "--preset", "singlet-singlet", "--events", str(ev))
        assert code == EXIT_OK
        dist = json.loads(out)["result"]["distribution"]
        assert sum(v for k, v in dist.items() if k[1] == "d") == pytest.approx(1.0)


class TestErrors:
    def test_malformed_json(self, capsys, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        code, _, err = run(capsys, "classify", "--ensemble", str(f))
        assert code == EXIT_INPUT
        assert "input error" in err

    def test_unnormalized_state(self, capsys, tmp_path):
        f = tmp_path / "ens.json"
        f.write_text(json.dumps({
            "initial": {"num_parties": 2, "amplitudes": [[1, 0], [1, 0], [0, 0], [0, 0]]},
            "final": {"num_parties": 2, "amplitudes": [[1, 0], [0, 0], [0, 0], [0, 0]]},
        }))
        assert run(capsys, "classify", "--ensemble", str(f))[0] == EXIT_INPUT

    def test_degenerate(self, capsys, tmp_path):
        f = tmp_path / "ens.json"
        f.write_text(json.dumps({
            "initial": {"num_parties": 1, "amplitudes": [[1, 0], [0, 0]]},
            "final": {"num_parties": 1, "amplitudes": [[0, 0], [1, 0]]},
        }))
        code, out, _ = run(capsys, "abl", "--ensemble", str(f), "--dirs", "z")
        assert code == EXIT_DEGENERATE
        assert out == ""

    def test_unknown_preset(self, capsys):
        assert run(capsys, "classify", "--preset", "nope")[0] == EXIT_INPUT

    def test_bad_subcommand(self, capsys):
        assert run(capsys, "frobnicate")[0] == EXIT_INPUT

    def test_csv_only_for_d_alpha(self, capsys):
        assert run(capsys, "ghz", "--format", "csv")[0] == EXIT_INPUT

    def test_no_output_file_on_failure(self, capsys, tmp_path):
        out = tmp_path / "o.json"
        run(capsys, "classify", "--preset", "nope", "--out", str(out))
        assert not out.exists()


class TestOutputs:
    def test_ghz(self, capsys):
        code, out, _ = run(capsys, "ghz")
        r = json.loads(out)["result"]
        assert r["P_A_down_alice_z_alone"] == pytest.approx(0.0, abs=1e-12)
        assert r["P_A_up_with_bob_x"] == pytest.approx(0.5, abs=1e-12)

    def test_document_header(self, capsys):
        doc = json.loads(run(capsys, "classify", "--preset", "eq3-swapped", "--seed", "9")[1])
        assert doc["tool"] == "ppsbox"
        assert doc["seed"] == 9
        assert doc["config"]["preset"] == "eq3-swapped"
        assert doc["result"]["label"] == "SwappedPair"

    def test_d_alpha_csv(self, capsys):
        code, out, _ = run(capsys, "d-alpha", "--format", "csv", "--alphas", "0.5", "--no-cross-check")
        lines = out.splitlines()
        assert lines[0].startswith("# ppsbox")
        assert lines[1] == "alpha,d,b_max,converged"
        assert lines[2].startswith("0.5,")

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, stdout, _ = run(capsys, "pr-game", "--out", str(out))
        assert code == EXIT_OK and stdout == ""
        assert json.loads(out.read_text())["result"]["success"]["11"] == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "argv",
        [
            ("scan", "--preset", "equal-partial", "--samples", "300", "--seed", "4"),
            ("chsh-max", "--preset", "eq3-swapped", "--grid", "8", "--refine-iters", "500"),
            ("pr-game", "--rounds", "50", "--seed", "2"),
        ],
    )
    def test_deterministic(self, capsys, argv):
        first = run(capsys, *argv)[1]
        second = run(capsys, *argv)[1]
        assert first == second


class TestDefaults:
    def test_sample_defaults_per_command(self, capsys):
        scan = json.loads(run(capsys, "scan", "--preset", "eq9")[1])
        assert scan["config"]["samples"] == 10_000
        assert scan["result"]["samples"] == 10_000
        attack = json.loads(run(capsys, "attack")[1])
        assert attack["config"]["samples"] == 1_000
