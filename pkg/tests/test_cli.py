import csv
import io
import json

import pytest

from cosrays.cli import SCHEMA_VERSION, main
from cosrays.render import read_ppm


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_trace_ray_csv(tmp_path, capsys):
    out = tmp_path / "ray.csv"
    code, _, _ = run(capsys, "trace-ray", "--family", "sinh", "--k", "1", "--address", "(0R)*",
                     "--t", "0.5:10:64", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) >= 64
    assert all(abs(float(r["im"])) < 1e-9 for r in rows)


def test_land(capsys):
    code, out, _ = run(capsys, "land", "--family", "sinh", "--k", "1", "--address", "(0R)*")
    obj = json.loads(out)
    assert code == 0 and obj["converged"] is True
    assert abs(complex(*obj["landing"])) < 1e-8
    assert obj["version"] == SCHEMA_VERSION


def test_find_params(capsys):
    code, out, _ = run(capsys, "find-params", "--fixed-value-family", "--k", "1")
    obj = json.loads(out)
    assert code == 0 and obj["residual"] < 1e-12
    assert len(obj["postsingular"]) == 4


def test_itinerary_and_classify(capsys):
    code, out, _ = run(capsys, "itinerary", "--point", "0,0", "--length", "5")
    assert code == 0 and json.loads(out)["twice"] == [0] * 5
    code, out, _ = run(capsys, "classify", "--point", "0,0")
    obj = json.loads(out)
    assert code == 0 and obj["kind"] == "LandingPoint" and "(0L)*" in obj["addresses"]


def test_escape_stats_and_boxdim(capsys):
    code, out, _ = run(capsys, "escape-stats", "--samples", "2000", "--seed", "3")
    first = json.loads(out)
    code2, out2, _ = run(capsys, "escape-stats", "--samples", "2000", "--seed", "3")
    assert code == code2 == 0 and out == out2 and first["fraction"] >= 0.9
    code, out, _ = run(capsys, "boxdim", "--kind", "escaping", "--resolution", "256", "--budget", "30")
    assert code == 0 and json.loads(out)["slope"] >= 1.9


def test_render(tmp_path, capsys):
    paths = [tmp_path / "a.ppm", tmp_path / "b.ppm"]
    for p in paths:
        code, _, _ = run(capsys, "render", "--size", "48x32", "--budget", "10",
                         "--overlay", "partition", "--overlay", "ray:(0R)*", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert read_ppm(paths[0]).shape == (32, 48, 3)


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "family": "sinh", "k": 2, "address": "(0L)*"}))
    code, out, _ = run(capsys, "land", "--config", str(cfg))
    assert code == 0 and abs(complex(*json.loads(out)["landing"])) < 1e-8
    # explicit flags win over the file
    code, out, _ = run(capsys, "land", "--config", str(cfg), "--address", "0R (0L)*")
    # for 2 pi sinh this ray lands on the zero i pi
    assert abs(complex(*json.loads(out)["landing"]) - 1j * 3.141592653589793) < 1e-8


def test_config_version_checked(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 7}))
    code, _, err = run(capsys, "land", "--config", str(cfg))
    assert code == 2 and "version" in err


@pytest.mark.parametrize("argv", [
    [],
    ["no-such-command"],
    ["land"],
    ["land", "--address", "0R"],
    ["trace-ray", "--address", "(0R)*", "--t", "1:2"],
    ["land", "--a", "1,0", "--address", "(0R)*"],
    ["render", "--size", "10"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_domain_error(capsys):
    # 0 < t_s is fine but t_min = 0 is not a potential on the ray
    code, _, err = run(capsys, "trace-ray", "--address", "(0R)*", "--t", "0:1:4")
    assert code == 1 and "error" in json.loads(err)
