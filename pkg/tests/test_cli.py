import json

import pytest

from ecseq import cli
from ecseq.core import BitString, FiniteDistribution, read_bit_file, write_bit_file


def run(*argv):
    return cli.main(list(argv))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture
def spread_run(tmp_path):
    bits = tmp_path / "omega.bits"
    alloc = tmp_path / "alloc.json"
    report = tmp_path / "spread.report.json"
    code = run("spread", "--weights", "inverse-triangular", "--length", "8192",
               "--seed", "1", "--out", str(bits), "--alloc-out", str(alloc),
               "--report", str(report))
    assert code == cli.EXIT_OK
    return bits, alloc, report


def test_spread_deterministic_rerun(tmp_path, spread_run):
    bits, _, _ = spread_run
    again = tmp_path / "again.bits"
    assert run("spread", "--weights", "inverse-triangular", "--length", "8192",
               "--seed", "1", "--out", str(again)) == cli.EXIT_OK
    assert bits.read_bytes() == again.read_bytes()
    other_seed = tmp_path / "other.bits"
    assert run("spread", "--weights", "inverse-triangular", "--length", "8192",
               "--seed", "2", "--out", str(other_seed)) == cli.EXIT_OK
    assert bits.read_bytes() != other_seed.read_bytes()


def test_spread_bad_preset(tmp_path):
    assert run("spread", "--weights", "bogus", "--length", "64",
               "--out", str(tmp_path / "x.bits")) == cli.EXIT_BAD_PARAMS


def test_spread_m0_override_below_certified(tmp_path):
    assert run("spread", "--weights", "inverse-triangular", "--length", "64",
               "--m0", "4", "--out", str(tmp_path / "x.bits")) == cli.EXIT_BAD_PARAMS


def test_check_windows_clean_and_tampered(tmp_path, spread_run):
    bits, alloc, _ = spread_run
    assert run("check-windows", "--bits", str(bits), "--alloc", str(alloc),
               "--m-max", "10", "--samples", "20") == cli.EXIT_OK
    # flip one early bit: it repeats inside larger windows, so recovery must trip
    x = read_bit_file(bits)
    flipped = x.to_bits()
    flipped[0] ^= 1
    bad = tmp_path / "bad.bits"
    write_bit_file(bad, BitString.from_bits(flipped))
    assert run("check-windows", "--bits", str(bad), "--alloc", str(alloc),
               "--m-max", "10", "--samples", "20") == cli.EXIT_VERIFY_FAILED


def test_check_windows_mmax_below_start(tmp_path, spread_run, capsys):
    bits, alloc, _ = spread_run
    assert run("check-windows", "--bits", str(bits), "--alloc", str(alloc),
               "--m-max", "3") == cli.EXIT_OK
    assert "warning" in capsys.readouterr().out


def test_spread_report_verifies(spread_run):
    _, _, report = spread_run
    assert run("verify", "--report", str(report)) == cli.EXIT_OK


def test_spread_report_tamper_fails_verify(tmp_path, spread_run):
    _, _, report = spread_run
    doc = read_json(report)
    doc["results"]["output_sha256"] = "0" * 64
    bad = tmp_path / "tampered.json"
    with open(bad, "w") as fh:
        json.dump(doc, fh)
    assert run("verify", "--report", str(bad)) == cli.EXIT_VERIFY_FAILED


def test_family_two_level_report(tmp_path):
    out = tmp_path / "family.json"
    report = tmp_path / "family.report.json"
    assert run("family", "--alpha", "3/5", "--epsilon", "1/2", "--n-min", "2",
               "--seed", "3", "--out", str(out), "--report", str(report)) == cli.EXIT_OK
    doc = read_json(report)
    assert doc["results"]["random_length"] == 2
    assert doc["results"]["top_length"] == 26
    assert run("verify", "--report", str(report)) == cli.EXIT_OK


def test_family_derandomize_and_schedule(tmp_path):
    dist = tmp_path / "dist.json"
    with open(dist, "w") as fh:
        json.dump(FiniteDistribution.uniform(10).to_json(), fh)
    report = tmp_path / "derand.report.json"
    assert run("family", "--alpha", "9/10", "--epsilon", "1/4",
               "--derandomize", str(dist), "--level-length", "5",
               "--seed", "5", "--report", str(report)) == cli.EXIT_OK
    assert run("verify", "--report", str(report)) == cli.EXIT_OK

    report2 = tmp_path / "schedule.report.json"
    assert run("family", "--alpha", "9/10", "--schedule", "3", "--seed", "11",
               "--report", str(report2)) == cli.EXIT_OK
    doc = read_json(report2)
    assert len(doc["results"]["intervals"]) == 3
    assert run("verify", "--report", str(report2)) == cli.EXIT_OK


def test_adversary_uniform_toy(tmp_path):
    dist = tmp_path / "dist.json"
    with open(dist, "w") as fh:
        json.dump(FiniteDistribution.uniform(4).to_json(), fh)
    out = tmp_path / "adversary.json"
    report = tmp_path / "adversary.report.json"
    assert run("adversary", "--dist", str(dist), "--n", "2", "--epsilon", "1/2",
               "--out", str(out), "--report", str(report)) == cli.EXIT_OK
    doc = read_json(report)
    assert doc["parameters"]["n"] == 2
    assert doc["results"]["N"] == 3
    assert doc["certificates"]["avoid_probability"] == "7/16"
    assert doc["results"]["family"]["strings"] == ["00", "00", "10"]
    assert run("verify", "--report", str(report)) == cli.EXIT_OK


def test_family_levels_avoid_loop(tmp_path):
    family = tmp_path / "family.json"
    report = tmp_path / "levels.report.json"
    assert run("family", "--alpha", "3/10", "--levels", "8,9,10", "--seed", "42",
               "--out", str(family), "--report", str(report)) == cli.EXIT_OK
    assert run("verify", "--report", str(report)) == cli.EXIT_OK
    out = tmp_path / "y.bits"
    avoid_report = tmp_path / "avoid.report.json"
    assert run("avoid", "--family", str(family), "--length", "2000", "--seed", "5",
               "--out", str(out), "--report", str(avoid_report)) == cli.EXIT_OK
    assert run("verify", "--report", str(avoid_report)) == cli.EXIT_OK


def test_avoid_success_and_verify(tmp_path):
    family = tmp_path / "family.json"
    with open(family, "w") as fh:
        json.dump({"alpha": "1/1", "levels": [
            {"length": 3, "kind": "sampled",
             "strings_hex": ["0", "7"], "pool_chain": [], "pool_size": "8"},
        ]}, fh)
    out = tmp_path / "x.bits"
    report = tmp_path / "avoid.report.json"
    assert run("avoid", "--family", str(family), "--length", "200", "--seed", "4",
               "--out", str(out), "--report", str(report)) == cli.EXIT_OK
    text = read_bit_file(out).to_text()
    assert "000" not in text and "111" not in text
    assert run("verify", "--report", str(report)) == cli.EXIT_OK


def test_avoid_unsatisfiable_budget_exit(tmp_path):
    family = tmp_path / "family.json"
    with open(family, "w") as fh:
        json.dump({"alpha": "1/1", "levels": [
            {"length": 1, "kind": "sampled",
             "strings_hex": ["0", "1"], "pool_chain": [], "pool_size": "2"},
        ]}, fh)
    assert run("avoid", "--family", str(family), "--length", "8", "--seed", "0",
               "--budget", "50") == cli.EXIT_BUDGET


def test_profile_and_verify(tmp_path):
    bits = tmp_path / "x.bits"
    write_bit_file(bits, BitString.from_text("01" * 200))
    report = tmp_path / "profile.report.json"
    csv = tmp_path / "profile.csv"
    assert run("profile", "--bits", str(bits), "--window", "64", "--stride", "16",
               "--report", str(report), "--csv", str(csv)) == cli.EXIT_OK
    assert csv.read_text().startswith("offset,bits\n")
    assert run("verify", "--report", str(report)) == cli.EXIT_OK


def test_verify_unknown_report(tmp_path):
    path = tmp_path / "odd.json"
    with open(path, "w") as fh:
        json.dump({"command": "mystery"}, fh)
    assert run("verify", "--report", str(path)) == cli.EXIT_BAD_PARAMS


def test_missing_file_is_bad_params(tmp_path):
    assert run("profile", "--bits", str(tmp_path / "nope.bits"),
               "--window", "8") == cli.EXIT_BAD_PARAMS
