import json
import subprocess
import sys

import pytest

from pimsner_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    return [line.split("\t") for line in out.splitlines() if line and not line.startswith("#")]


def test_assumptions_cuntz(capsys):
    code, out, _ = run(capsys, "assumptions", "builtin:O2", "--depth", "3")
    assert code == 0
    assert ["2", "yes", "1/4", "yes", "-"] in rows(out)
    assert "all checks passed" in out


def test_assumptions_golden_mean(capsys):
    code, out, _ = run(capsys, "assumptions", "builtin:golden", "--backend", "sft")
    assert code == 0
    code, out, _ = run(capsys, "inspect", "builtin:golden", "--backend", "sft", "--depth", "4")
    assert ["4", "1"] in rows(out)  # beta_4 = 0


def test_assumptions_non_primitive_graph(capsys, tmp_path):
    path = tmp_path / "id.json"
    path.write_text(json.dumps({"matrix": [[1, 0], [0, 1]]}), encoding="utf-8")
    code, out, _ = run(capsys, "assumptions", str(path))
    assert code == 2 and "not primitive" in out


def test_assumptions_fibonacci_fails_decomposition(capsys):
    code, out, _ = run(capsys, "assumptions", "builtin:fib", "--depth", "2")
    assert code == 2
    assert "q differs on paths sharing range" in out


def test_spectrum_rows(capsys):
    code, out, _ = run(capsys, "spectrum", "builtin:O2", "--n-min", "-2", "--n-max", "2", "--k-max", "2")
    assert code == 0
    table = rows(out)
    assert table[0] == ["n", "k", "rank", "psi"]
    assert ["1", "0", "2", "1"] in table
    assert table[1] == ["0", "0", "1", "0"]


def test_spectrum_precondition(capsys):
    code, out, err = run(capsys, "spectrum", "builtin:fib")
    assert code == 3 and out == "" and "Assumption 2" in err


def test_spectrum_golden_ranks_are_cylinder_counts(capsys):
    args = ["--backend", "sft", "--depth", "4", "--n-min", "-2", "--n-max", "2", "--k-max", "2"]
    _, spec, _ = run(capsys, "spectrum", "builtin:golden", *args)
    _, cells, _ = run(capsys, "groupoid-check", "builtin:golden", *args, "--cyl-depth", "4")
    ranks = {(r[0], r[1]): r[2] for r in rows(spec)[1:]}
    counts = {(r[0], r[1]): r[2] for r in rows(cells)[1:-1]}
    assert ranks == counts


def test_kms_table(capsys):
    code, out, _ = run(capsys, "kms", "builtin:O3", "--depth", "3")
    assert code == 0
    table = rows(out)
    assert ["1.2.3", "1.2.3", "1/27", "1/27"] in table
    assert ["@0", "@0", "1", "1"] in table
    assert sum(len(r) == 4 for r in table) == 1 + (1 + 3 + 9 + 27)
    assert "off-diagonal pairs" in out


def test_ktheory(capsys):
    code, out, _ = run(capsys, "ktheory", "builtin:O4")
    assert code == 0 and ["K1", "Z/3", "0", "3"] in rows(out)
    code, out, _ = run(capsys, "ktheory", "builtin:golden", "--backend", "sft")
    assert code == 0 and ["K1", "0", "0", "()"] in rows(out)


def test_groupoid_check(capsys):
    code, out, _ = run(capsys, "groupoid-check", "builtin:golden", "--backend", "sft",
                       "--n-min", "-1", "--n-max", "1", "--k-max", "1", "--cyl-depth", "3")
    assert code == 0 and "all checks passed (window" in out


def test_groupoid_check_window_reach(capsys):
    code, _, err = run(capsys, "groupoid-check", "builtin:golden", "--backend", "sft",
                       "--n-max", "2", "--k-max", "2", "--cyl-depth", "3")
    assert code == 1 and "window reach" in err


def test_commutators(capsys, tmp_path):
    code, out, _ = run(capsys, "commutators", "builtin:O2", "--depth", "4", "--figures", str(tmp_path))
    assert code == 0
    norms = [float(r[2]) for r in rows(out)[1:]]
    assert norms == pytest.approx([2.5**0.5] * 4, abs=1e-10)
    assert (tmp_path / "commutators-O2-commutators.png").stat().st_size > 0


def test_smeb_backend_with_variant(capsys):
    code, out, _ = run(capsys, "spectrum", "--backend", "smeb-test", "--psi", "variant-b", "--depth", "2")
    assert code == 0
    for n, k, rank, psi in rows(out)[1:]:
        if rank != "0":
            assert int(k) == max(0, -int(n))


def test_theta_table_and_figures(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "builtin:O2", "--depth", "2", "--theta-t", "2",
                       "--figures", str(tmp_path))
    assert code == 0 and "# theta" in out
    assert sorted(p.name for p in tmp_path.iterdir()) == ["spectrum-O2-spectrum.png", "spectrum-O2-theta.png"]


@pytest.mark.parametrize("argv", [
    ["spectrum", "builtin:O2", "--depth", "3"],
    ["kms", "builtin:O2", "--depth", "2", "--format", "json"],
    ["commutators", "builtin:golden", "--backend", "sft", "--depth", "3", "--float"],
])
def test_output_is_deterministic(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_json_mirror(capsys):
    _, tsv, _ = run(capsys, "spectrum", "builtin:O2", "--depth", "2")
    _, js, _ = run(capsys, "spectrum", "builtin:O2", "--depth", "2", "--format", "json")
    doc = json.loads(js)
    assert doc["meta"]["exit_code"] == 0
    table = doc["tables"][0]
    assert [[str(r[c]) for c in table["columns"]] for r in table["rows"]] == rows(tsv)[1:]


@pytest.mark.parametrize("argv, code", [
    (["spectrum", "builtin:nope"], 1),
    (["spectrum", "/does/not/exist.json"], 1),
    (["spectrum"], 1),
    (["kms", "builtin:golden", "--backend", "sft"], 1),
    (["groupoid-check", "builtin:O2"], 3),
    (["spectrum", "builtin:O2", "--theta-t", "1", "--backend", "sft"], 3),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code
    assert "pimsner-lab:" in capsys.readouterr().err


def test_usage_errors_exit_with_one():
    for argv in (["nonsense"], ["spectrum", "builtin:O2", "--psi", "made-up"]):
        proc = subprocess.run([sys.executable, "-m", "pimsner_lab.cli", *argv], capture_output=True, text=True)
        assert proc.returncode == 1 and "error" in proc.stderr


def test_bad_json_input(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2", encoding="utf-8")
    code, _, err = run(capsys, "inspect", str(path))
    assert code == 1 and "invalid JSON" in err
