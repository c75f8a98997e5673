"""Command-line runner: determinism, exit codes, report contents."""
import csv
import io
import json

import numpy as np

from geolab import cli
from geolab import models as M
from geolab import serialize as S

CHEEGER = '{"kind": "Cheeger", "t_or_r": -2}'


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_curvature_table_deterministic(tmp_path):
    code1, a = run(tmp_path, "curvature-table", "--metric", CHEEGER, "--samples", "4", "--seed", "7", name="a")
    code2, b = run(tmp_path, "curvature-table", "--metric", CHEEGER, "--samples", "4", "--seed", "7", name="b")
    assert code1 == code2 == 0
    assert a == b
    assert all(float(r["rel_err"]) < 1e-3 for r in rows(a))


def test_curvature_table_flat_and_undeformed(tmp_path):
    code, text = run(tmp_path, "curvature-table", "--model", "minkowski", "--samples", "3",
                     "--metric", '{"kind": "Minkowski", "t_or_r": 1.5}')
    assert code == 0
    for r in rows(text):
        for key in ("kappa_numeric", "sectional", "scalar"):
            assert abs(float(r[key])) < 1e-6
    # [TRIVIAL] t = 0 leaves kappa_t equal to kappa_0
    code, text = run(tmp_path, "curvature-table", "--samples", "3", "--metric", '{"kind": "Cheeger", "t_or_r": 0}')
    assert code == 0
    for r in rows(text):
        assert abs(float(r["kappa_t"]) - float(r["kappa_0"])) < 1e-12


def test_exit_codes(tmp_path):
    assert cli.main(["curvature-table", "--model", "torus"]) == cli.EXIT_CONFIG
    assert cli.main(["curvature-table", "--metric", "not json"]) == cli.EXIT_CONFIG
    assert cli.main(["ricci-sweep", "--metric", '{"kind": "Ambient"}']) == cli.EXIT_CONFIG
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "su2", "metric": {"kind": "Cheeger", "t_or_r": -2},
                               "points": [[1, 0, 0, 0]]}))
    assert cli.main(["curvature-table", "--config", str(cfg)]) == cli.EXIT_DEGENERATE
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["curvature-table", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_ricci_sweep_hopf(tmp_path):
    code, text = run(tmp_path, "ricci-sweep", "--action", "hopf", "--metric", CHEEGER, "--samples", "20",
                     "--format", "json")
    doc = json.loads(text)
    assert code == 0 and doc["passed"]
    assert doc["summary"]["min_ricci"] > 0


def test_ricci_sweep_reports_negative_ricci(tmp_path):
    # the conjugation action has directions with negative Ricci; the runner must say so
    code, text = run(tmp_path, "ricci-sweep", "--metric", CHEEGER, "--samples", "60", "--format", "json")
    doc = json.loads(text)
    assert doc["passed"] == (doc["summary"]["min_ricci"] > 0)
    assert code == (cli.EXIT_OK if doc["passed"] else cli.EXIT_FAIL)


def test_fixed_points_s7(tmp_path):
    # [PAPER] the real circle (cos a, sin a) is fixed
    code, text = run(tmp_path, "fixed-points", "--model", "s7", "--samples", "30", "--format", "json")
    doc = json.loads(text)
    assert code == 0
    assert "real-circle" in doc["summary"]["fixed_families"]
    fam = {r[1]: r[2] for r in doc["rows"] if r[1] == "random"}
    assert set(fam.values()) == {"Z2"}


def test_orbit_compare(tmp_path):
    code, text = run(tmp_path, "orbit-compare", "--samples", "3")
    assert code == 0
    assert max(float(r["residual"]) for r in rows(text)) < 1e-5


def test_geodesic(tmp_path):
    code, text = run(tmp_path, "geodesic", "--metric", '{"kind": "FixedLorentz", "t_or_r": -2}',
                     "--action", "hopf", "--samples", "4", "--horizon", "3")
    assert code == 0
    r = rows(text)
    assert len(r) == 4 and all(x["aborted"] == "" for x in r)


def test_serialize_round_trip(rng):
    p = M.random_point("s7", rng)
    v = M.random_tangent(p, rng)
    back = S.vector_from_json(json.loads(json.dumps(S.vector_to_json(v))))
    assert np.array_equal(back.flat, v.flat) and np.array_equal(back.base.flat, p.flat)
    x = float(rng.standard_normal())
    assert float(S.fmt(x)) == x
    assert S.csv_text(["a"], [[0.1]]) == "a\n0.10000000000000001\n"
