import json

import numpy as np
import pytest

from chamberflow.cli import main
from chamberflow.flag_boundary import opposite_flag, standard_flag
from chamberflow.reportio import flag_to_json, matrix_to_json

from conftest import conjugated, rotation2


@pytest.fixture()
def workdir(tmp_path):
    g = np.diag([4.0, 1.0, 0.25])
    (tmp_path / "g.json").write_text(json.dumps(matrix_to_json(g)))
    (tmp_path / "fa.json").write_text(json.dumps(flag_to_json(standard_flag(3))))
    (tmp_path / "fb.json").write_text(json.dumps(flag_to_json(opposite_flag(3))))
    pts = {"points": [{"v": [1.0], "c": []}, {"v": [np.sqrt(2.0)], "c": []}]}
    (tmp_path / "pts.json").write_text(json.dumps(pts))
    g1 = np.diag([9.0, 1 / 9.0])
    g2 = rotation2(np.pi / 4) @ g1 @ rotation2(np.pi / 4).T
    fam = {"seeds": [matrix_to_json(g1), matrix_to_json(g2)], "r": 0.18, "eps": 0.16}
    (tmp_path / "fam2.json").write_text(json.dumps(fam))
    return tmp_path


def _run(args, out=None):
    argv = list(args)
    if out is not None:
        argv += ["--output", str(out)]
    return main(argv)


@pytest.mark.parametrize("kind", ["kan", "kan-minus", "cartan", "bruhat", "jordan"])
def test_decompose_kinds(workdir, kind):
    out = workdir / f"{kind}.json"
    assert _run(["decompose", str(workdir / "g.json"), "--kind", kind], out) == 0
    report = json.loads(out.read_text())
    assert report


def test_decompose_jordan_values(workdir):
    out = workdir / "j.json"
    assert _run(["decompose", str(workdir / "g.json"), "--kind", "jordan"], out) == 0
    lam = json.loads(out.read_text())["lambda"]
    assert lam == pytest.approx([np.log(4.0), 0.0, -np.log(4.0)])


def test_transverse_exit_codes(workdir):
    out = workdir / "t.json"
    assert _run(["transverse", str(workdir / "fa.json"), str(workdir / "fb.json")], out) == 0
    assert json.loads(out.read_text())["transverse"] is True
    assert _run(["transverse", str(workdir / "fa.json"), str(workdir / "fa.json")], out) == 1


def test_lox_report(workdir):
    out = workdir / "lox.json"
    assert _run(["lox", str(workdir / "g.json")], out) == 0
    report = json.loads(out.read_text())
    assert report["lambda"] == pytest.approx([np.log(4.0), 0.0, -np.log(4.0)])
    assert report["gap"] == pytest.approx(np.log(4.0))


def test_density_subcommands(workdir):
    out = workdir / "d.json"
    code = _run(
        ["density", "select", "--input", str(workdir / "pts.json"), "--delta", "0.05", "--window=-1,1"],
        out,
    )
    assert code == 0
    assert json.loads(out.read_text())["covered"] is True
    code = _run(
        ["density", "cone", "--input", str(workdir / "pts.json"), "--delta", "0.05", "--window", "0,2"],
        out,
    )
    assert code == 0
    assert json.loads(out.read_text())["covered"] is True


def test_schottky_build_and_cone_csv(workdir):
    out = workdir / "b.json"
    assert _run(["schottky", "build", str(workdir / "fam2.json")], out) == 0
    assert json.loads(out.read_text())["generators"] == 2
    csv = workdir / "cone.csv"
    assert _run(["limit-cone", str(workdir / "fam2.json"), "--max-len", "3", "--csv", str(csv)], out) == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0].startswith("word_id,length,lambda_1")
    assert len(lines) == 1 + 2 + 4 + 8


def test_svg_emission_is_deterministic(tmp_path):
    a = conjugated(168, list(np.exp([7.0, 2.0, -9.0])))
    b = conjugated(169, list(np.exp([9.0, -2.0, -7.0])))
    fam = {"seeds": [matrix_to_json(a), matrix_to_json(b)], "r": 0.15, "eps": 0.15}
    fam_path = tmp_path / "fam3.json"
    fam_path.write_text(json.dumps(fam))
    svgs = []
    for tag in ("one", "two"):
        svg = tmp_path / f"{tag}.svg"
        out = tmp_path / f"{tag}.json"
        assert _run(["limit-cone", str(fam_path), "--max-len", "2", "--svg", str(svg)], out) == 0
        svgs.append(svg.read_bytes())
    assert svgs[0] == svgs[1]
    assert svgs[0].startswith(b"<svg")


def test_configuration_error_exit_codes(workdir):
    assert main(["decompose", str(workdir / "missing.json")]) == 2
    assert main(["no-such-command"]) == 2
    bad = workdir / "bad.json"
    bad.write_text("{not json")
    assert main(["decompose", str(bad)]) == 2


def test_verify_failure_reporting(workdir):
    cfg = workdir / "tight.json"
    cfg.write_text(json.dumps({"tolerances": {"tol_recon": 1e-15}}))
    out = workdir / "v.json"
    assert main(["verify", "--config", str(cfg), "--output", str(out)]) == 1
    body = out.read_text()
    assert '"passed": false' in body


def test_env_seed_overrides_flag(workdir, monkeypatch):
    out1 = workdir / "v1.json"
    out2 = workdir / "v2.json"
    monkeypatch.setenv("CHAMBERFLOW_SEED", "42")
    assert main(["verify", "--seed", "7", "--output", str(out1)]) == 0
    monkeypatch.delenv("CHAMBERFLOW_SEED")
    assert main(["verify", "--seed", "42", "--output", str(out2)]) == 0
    # identical bodies: the env seed won over the conflicting flag
    body1 = out1.read_text().splitlines()[:-3]
    body2 = out2.read_text().splitlines()[:-3]
    assert body1 == body2
