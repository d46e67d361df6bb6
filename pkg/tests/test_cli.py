import pytest

from prossim.cli import HEADER, main


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv("PROS_DATA", raising=False)


def test_stats(data_path, capsys):
    assert main(["stats", "--data", str(data_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:3] == ["N = 699", "malignant = 241", "p = 0.3448"]
    assert out[4].startswith("Bare Nuclei,")
    assert len(out) == 4 + 11


def test_missing_dataset_is_config_error(tmp_path, capsys):
    missing = tmp_path / "absent.data"
    assert main(["stats", "--data", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err
    assert main(["stats"]) == 2


def test_data_error_exit_code(tmp_path):
    bad = tmp_path / "bad.data"
    bad.write_text("1,2,3\n")
    assert main(["stats", "--data", str(bad)]) == 3


def test_env_var_supplies_data(data_path, monkeypatch, capsys):
    monkeypatch.setenv("PROS_DATA", str(data_path))
    assert main(["stats"]) == 0


def test_example_is_stable(capsys):
    assert main(["example"]) == 0
    first = capsys.readouterr().out
    main(["example"])
    assert capsys.readouterr().out == first
    assert "0.4766 0.4766 0.0468 0.0000 0.0000" in first
    assert "selected unit: u11" in first


def test_simulate_csv(data_path, tmp_path, capsys):
    out = tmp_path / "r.csv"
    args = ["simulate", "--data", str(data_path), "--design", "pros", "--model", "5",
            "--set-size", "3,6", "--replicates", "200", "--seed", "9", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[:4] == ["pros", "Model 5", "3", "18"] and row[-1] == "9"
    assert all(len(x.split(".")[1]) == 4 for x in row[6:12])
    assert "reduction" in capsys.readouterr().err
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_config_file_and_override(data_path, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# example\ndata = {data_path}\ndesign = pros\n"
                   "concomitant = Bare Nuclei:2\nconcomitant = Normal Nucleoli\n"
                   "set-size = 3\nreplicates = 50  # tiny\n")
    assert main(["simulate", "--config", str(cfg), "--replicates", "60"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[1] == "inline" and row[4] == "Bare Nuclei:2;Normal Nucleoli:1" and row[5] == "60"


@pytest.mark.parametrize("extra", [
    ["--model", "42"],
    ["--concomitant", "Nope"],
    ["--model", "1", "--concomitant", "Bare Nuclei"],
    ["--model", "3", "--alpha", "0.5,0.6"],
    ["--model", "1", "--set-size", "x"],
    ["--model", "1", "--concomitant", "Bare Nuclei:0.2"],
])
def test_invalid_configs(data_path, extra, capsys):
    assert main(["simulate", "--data", str(data_path), "--replicates", "50"] + extra) == 2
    assert "error" in capsys.readouterr().err


def test_srs_and_rss_designs(data_path, capsys):
    assert main(["simulate", "--data", str(data_path), "--design", "srs", "--replicates", "100"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("srs,,1,54,,100,")
    assert main(["simulate", "--data", str(data_path), "--design", "rss",
                 "--concomitant", "Uniformity of Cell Size", "--set-size", "9", "--replicates", "100"]) == 0


def test_study_writes_tables(data_path, tmp_path, monkeypatch):
    from prossim import harness
    real = harness.study2_preset

    def small(pop=None, replicates=0, master_seed=0):
        spec = real(pop, replicates, master_seed)
        keep = [i for i, c in enumerate(spec.configs) if c.model.name == "Model 5"]
        return harness.StudySpec(tuple(spec.configs[i] for i in keep), replicates, master_seed,
                                 "study2", {"pros_no_ties": [0, 1, 2], "pros_ties": [3, 4, 5]})

    monkeypatch.setattr(harness, "study2_preset", small)
    out = tmp_path / "s2"
    assert main(["study", "study2", "--data", str(data_path), "--replicates", "100",
                 "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["property_checks.txt", "pros_no_ties.csv",
                                                      "pros_ties.csv"]
    assert (out / "pros_ties.csv").read_text().startswith(HEADER)
