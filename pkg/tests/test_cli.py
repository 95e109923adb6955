import json
import subprocess
import sys

import pytest

from xmspace import cli
from xmspace.construction import ledger_from_text


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_params_c0(capsys, tmp_path):
    out = tmp_path / "c0.txt"
    code, cap = run(capsys, "params", "--space", "c0", "--out", str(out))
    assert code == 0
    ledger, blocks = ledger_from_text(out.read_text())
    assert ledger.k0 == 2 and blocks.starts == (5, 10, 23, 54)
    assert "constant_C = 28" in cap.out


def test_params_rejects_spaces_without_upper_estimate(capsys):
    assert run(capsys, "params", "--space", "tsirelson")[0] == cli.EXIT_INPUT
    assert run(capsys, "params", "--space", "lp:1")[0] == cli.EXIT_INPUT


def test_norm_certificate_revalidates(capsys, tmp_path):
    params = tmp_path / "l2.txt"
    run(capsys, "params", "--space", "lp:2", "--out", str(params))
    code, cap = run(capsys, "norm", "--space", "lp:2", "--params", str(params),
                    "--vector", "5:1,9:1/2,19:-2/3,21:1")
    assert code == 0
    rec = json.loads(cap.out)
    setup = cli.load_setup(cli.RunConfig(space="lp:2", params=str(params)))
    assert cli.check_norm_record(rec, setup)
    rec["value"] = "7/3"
    assert not cli.check_norm_record(rec, setup)


def test_dualnorm_of_block_average(capsys):
    code, cap = run(capsys, "dualnorm", "--space", "c0", "--u-coefficients", "1:1")
    rec = json.loads(cap.out)
    assert code == 0 and rec["lower"] == rec["upper"] == "1"
    assert cli.check_dual_record(rec, cli.load_setup(cli.RunConfig(space="c0")))


def test_dualnorm_needs_an_input(capsys):
    assert run(capsys, "dualnorm", "--space", "c0")[0] == cli.EXIT_INPUT


def test_norm_budget_exit(capsys):
    # last coordinates of F_1, F_2, F_3: the search must branch past the root
    code, cap = run(capsys, "norm", "--space", "lp:2", "--budget", "2", "--vector", "8:1,16:1,34:1")
    assert code == cli.EXIT_BUDGET
    assert json.loads(cap.out)["exhaustive"] is False


def test_verify_writes_report_and_csv(capsys, tmp_path):
    out = tmp_path / "l1.jsonl"
    code, cap = run(capsys, "verify", "--lemma", "L1", "--space", "lp:2", "--trials", "10",
                    "--out", str(out))
    assert code == 0
    assert cap.out.splitlines()[1].startswith("L1,lp:2,10,10,0,0,0,0")
    header, records = cli.read_report(str(out))
    assert header["lemma"] == "L1" and len(records) == 10
    assert out.with_suffix(".csv").read_text() == cap.out


def test_verify_is_deterministic_modulo_header(capsys, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.jsonl"
        run(capsys, "verify", "--lemma", "T3", "--space", "c0", "--trials", "5", "--seed", "9", "--out", str(out))
        outs.append(out.read_text().splitlines()[1:])
    assert outs[0] == outs[1]


def test_parallel_campaign_matches_serial(tmp_path):
    setup = cli.load_setup(cli.RunConfig(space="c0"))
    serial = cli.run_campaign(cli.RunConfig(space="c0", lemma="L5", trials=6, workers=1), setup)
    parallel = cli.run_campaign(cli.RunConfig(space="c0", lemma="L5", trials=6, workers=2), setup)
    assert serial == parallel


@pytest.mark.parametrize("lemma", ["L2", "L3", "L4", "L5", "T3"])
def test_negative_controls_exit_zero_when_all_caught(capsys, lemma):
    code, cap = run(capsys, "verify", "--lemma", lemma, "--space", "lp:2", "--trials", "5",
                    "--violate-hypothesis")
    assert code == 0
    assert cap.out.splitlines()[1].split(",")[5] == "5"     # hypothesis-failed column


def test_negative_control_impossible_on_c0(capsys):
    assert run(capsys, "verify", "--lemma", "L1", "--space", "c0", "--trials", "3",
               "--violate-hypothesis")[0] == cli.EXIT_INPUT


def test_report_command(capsys, tmp_path):
    out = tmp_path / "c3.jsonl"
    run(capsys, "verify", "--lemma", "C3", "--space", "c0", "--trials", "4", "--out", str(out))
    code, cap = run(capsys, "report", "--input", str(out))
    assert code == 0 and cap.out.splitlines()[1].startswith("C3,c0,4,4")


def test_config_file(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# campaign\nspace = c0\nlemma = L1\ntrials = 3\nseed = 4\n")
    code, cap = run(capsys, "--config", str(conf), "verify")
    assert code == 0 and "L1,c0,3,3" in cap.out
    with pytest.raises(ValueError):
        cli.RunConfig.from_text("colour = blue")


def test_cache_dir_reuses_ledger(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    s1 = cli.load_setup(cli.RunConfig(space="lp:3"))
    assert list(tmp_path.iterdir())
    assert cli.load_setup(cli.RunConfig(space="lp:3")) == s1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "xmspace", "norm", "--space", "c0", "--vector", "5:1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["value"] == "1"
