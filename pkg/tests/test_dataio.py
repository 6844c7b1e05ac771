import hashlib
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from deltaxrr import dataio, forward
from deltaxrr.errors import ConfigError, OutputError, ParseError


@pytest.fixture()
def curve():
    q = np.linspace(1.5, 3.0, 7)
    r = 1e-4 * (1.0 + 0.3 * np.cos(q))
    return forward.ReflectivityCurve(q=q, r=r, energy_ev=1300.0,
                                     sigma_r=0.01 * r)


def test_curve_round_trip(tmp_path, curve):
    path = tmp_path / "c.txt"
    dataio.write_curve(path, curve, extra_header={"note": "round trip"})
    back = dataio.read_curve(path)
    assert_allclose(back.q, curve.q, rtol=1e-8)
    assert_allclose(back.r, curve.r, rtol=1e-8)
    assert_allclose(back.sigma_r, curve.sigma_r, rtol=1e-8)
    assert back.energy_ev == 1300.0
    assert "note: round trip" in path.read_text()


def test_curve_round_trip_without_sigma(tmp_path, curve):
    path = tmp_path / "c.txt"
    bare = forward.ReflectivityCurve(q=curve.q, r=curve.r, energy_ev=1300.0)
    dataio.write_curve(path, bare)
    back = dataio.read_curve(path)
    assert back.sigma_r is None
    assert back.theta_deg is None


def test_theta_abscissa_converts_to_q(tmp_path):
    theta = np.array([5.0, 10.0, 15.0])
    lines = ["# energy_ev: 1300.0", "# abscissa: theta_deg"]
    lines += ["%.9e 1.0e-3" % t for t in theta]
    path = tmp_path / "t.txt"
    path.write_text("\n".join(lines) + "\n")
    back = dataio.read_curve(path)
    assert_allclose(back.q, forward.q_from_theta(theta, 1300.0), rtol=1e-8)
    assert_allclose(back.theta_deg, theta, rtol=1e-12)


def test_read_curve_header_errors(tmp_path):
    body = "1.0 2.0e-3\n2.0 1.0e-3\n"
    p1 = tmp_path / "no_absc.txt"
    p1.write_text("# energy_ev: 1300\n" + body)
    with pytest.raises(ConfigError):
        dataio.read_curve(p1)
    p2 = tmp_path / "bad_absc.txt"
    p2.write_text("# energy_ev: 1300\n# abscissa: furlongs\n" + body)
    with pytest.raises(ConfigError):
        dataio.read_curve(p2)
    p3 = tmp_path / "no_energy.txt"
    p3.write_text("# abscissa: q_nm^-1\n" + body)
    with pytest.raises(ConfigError):
        dataio.read_curve(p3)
    p4 = tmp_path / "bad_energy.txt"
    p4.write_text("# energy_ev: soft\n# abscissa: q_nm^-1\n" + body)
    with pytest.raises(ConfigError):
        dataio.read_curve(p4)
    with pytest.raises(ConfigError):
        dataio.read_curve(tmp_path / "missing.txt")


def test_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# energy_ev: 1300\n# abscissa: q_nm^-1\n"
                    "1.0 2.0e-3\n2.0 oops\n")
    with pytest.raises(ParseError) as err:
        dataio.read_curve(path)
    assert err.value.line == 4
    assert "line 4" in str(err.value)


def test_parse_error_on_column_count(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# energy_ev: 1300\n# abscissa: q_nm^-1\n1.0\n")
    with pytest.raises(ParseError) as err:
        dataio.read_curve(path)
    assert err.value.line == 3


def test_parse_error_on_mixed_columns(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# energy_ev: 1300\n# abscissa: q_nm^-1\n"
                    "1.0 2.0e-3\n2.0 1.0e-3 1.0e-5\n")
    with pytest.raises(ParseError):
        dataio.read_curve(path)


def test_parse_error_on_empty_body(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# energy_ev: 1300\n# abscissa: q_nm^-1\n")
    with pytest.raises(ParseError) as err:
        dataio.read_curve(path)
    assert err.value.line == 1


def test_scan_round_trip(tmp_path):
    scan = forward.EnergyScan(theta_deg=10.0,
                              energies_ev=np.array([1300.0, 1310.0, 1320.0]),
                              r=np.array([0.5, 0.4, 0.3]), normalized=False)
    path = tmp_path / "scan.txt"
    dataio.write_scan(path, scan)
    back = dataio.read_scan(path)
    assert_allclose(back.energies_ev, scan.energies_ev, rtol=1e-9)
    assert_allclose(back.r, scan.r, rtol=1e-9)
    assert back.theta_deg == 10.0
    assert back.normalized is False


def test_read_scan_header_errors(tmp_path):
    p1 = tmp_path / "s1.txt"
    p1.write_text("# theta_deg: 10\n# abscissa: q_nm^-1\n1300 0.5\n1310 0.4\n")
    with pytest.raises(ConfigError):
        dataio.read_scan(p1)
    p2 = tmp_path / "s2.txt"
    p2.write_text("# abscissa: energy_ev\n1300 0.5\n1310 0.4\n")
    with pytest.raises(ConfigError):
        dataio.read_scan(p2)


def test_write_failure_raises_output_error(tmp_path, curve):
    with pytest.raises(OutputError):
        dataio.write_curve(tmp_path / "no_such_dir" / "c.txt", curve)


def test_file_sha256(tmp_path):
    path = tmp_path / "blob.bin"
    payload = b"reflectivity\n"
    path.write_bytes(payload)
    assert dataio.file_sha256(path) == hashlib.sha256(payload).hexdigest()


def test_manifest_timestamp_honors_epoch_pin(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    assert dataio.manifest_timestamp() == "2023-11-14T22:13:20Z"


def test_build_manifest_shape(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    f = tmp_path / "in.txt"
    f.write_text("payload\n")
    man = dataio.build_manifest(command=["synth", "-o", "out"],
                                inputs=[str(f)], config={"seed": 1},
                                tables={"si": str(f)}, seed=1,
                                version="1.0")
    assert sorted(man) == ["command", "config", "created", "inputs",
                           "seed", "tables", "version"]
    assert man["created"] == "2023-11-14T22:13:20Z"
    assert man["inputs"][str(f)] == dataio.file_sha256(f)
    assert man["tables"]["si"] == dataio.file_sha256(f)
    out = tmp_path / "manifest.json"
    dataio.write_manifest(out, man)
    assert json.loads(out.read_text()) == man


def test_load_config_defaults_are_fresh():
    cfg = dataio.load_config(None)
    assert cfg == dataio.DEFAULT_CONFIG
    assert cfg is not dataio.DEFAULT_CONFIG
    cfg["energies"]["below"] = 999.0
    assert dataio.DEFAULT_CONFIG["energies"]["below"] == 1300.0


def write_cfg(tmp_path, obj):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return path


def test_load_config_merges_and_validates(tmp_path):
    path = write_cfg(tmp_path, {"window": [2.0, 4.5], "seed": 7})
    cfg = dataio.load_config(path)
    assert cfg["window"] == [2.0, 4.5]
    assert cfg["seed"] == 7
    assert cfg["theta_deg"] == 10.0


@pytest.mark.parametrize("obj,fragment", [
    ({"windw": [1, 2]}, "not recognized"),
    ({"window": "wide"}, "wrong type"),
    ({"window": [1.0]}, "two numbers"),
    ({"window": [5.0, 1.0]}, "increasing"),
    ({"energies": {"middle": 1320.0}}, "energies.middle"),
    ({"energies": {"below": "low"}}, "wrong type"),
    ({"seed": True}, "seed"),
    ({"solver": "bfgs"}, "solver"),
])
def test_load_config_rejects(tmp_path, obj, fragment):
    with pytest.raises(ConfigError) as err:
        dataio.load_config(write_cfg(tmp_path, obj))
    assert fragment in str(err.value)


def test_load_config_bad_json_has_line(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{\n  "seed": 1,\n}\n')
    with pytest.raises(ParseError) as err:
        dataio.load_config(path)
    assert err.value.line == 3


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        dataio.load_config(tmp_path / "nope.json")
