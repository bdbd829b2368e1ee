import csv
import json

import pytest

from planartri.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, main
from planartri.pipeline import save_scene, synthetic_two_plane_scene


@pytest.fixture(scope="module")
def scene_path(tmp_path_factory):
    scene, _ = synthetic_two_plane_scene(seed=3, per_plane=12, outliers=2, n_views=3)
    path = tmp_path_factory.mktemp("scene") / "scene.json"
    save_scene(scene, path)
    return str(path)


@pytest.fixture(scope="module")
def no_plane_scene(tmp_path_factory):
    scene, _ = synthetic_two_plane_scene(seed=3, per_plane=12, outliers=2, n_views=3)
    scene.plane = None
    path = tmp_path_factory.mktemp("scene") / "scene_np.json"
    save_scene(scene, path)
    return str(path)


def _rows(path, drop=("wall_time_ns",)):
    rows = list(csv.reader(open(path)))
    keep = [i for i, h in enumerate(rows[0]) if h not in drop]
    return [[r[i] for i in keep] for r in rows]


def _twice(tmp_path, argv, suffix=".csv"):
    outs = []
    for k in range(2):
        out = str(tmp_path / f"run{k}{suffix}")
        assert main(argv + ["--out", out]) in (EXIT_OK, EXIT_CHECK)
        outs.append(out)
    return outs


def test_eddeg_formula_only(capsys):
    assert main(["eddeg", "--views", "2", "--formula-only"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "closed form: 8" in out and "PASS" in out


def test_eddeg_empirical_deterministic(tmp_path):
    a, b = _twice(tmp_path, ["eddeg", "--views", "2", "--trials", "5", "--seed", "1"])
    assert open(a, "rb").read() == open(b, "rb").read()
    rows = _rows(a)
    assert rows[0] == ["trial", "finite_count"] and len(rows) == 6


def test_bench_deterministic(tmp_path):
    a, b = _twice(tmp_path, ["bench", "--views", "2", "--points", "2", "--iters", "3", "--seed", "5"])
    assert _rows(a) == _rows(b)
    assert _rows(a, drop=())[0] == ["method", "iteration", "e_tr", "wall_time_ns", "seed"]


def test_stability_deterministic(tmp_path):
    a, b = _twice(tmp_path, ["stability", "--views", "2", "--samples", "10", "--seed", "2"])
    assert open(a, "rb").read() == open(b, "rb").read()


@pytest.mark.parametrize("method", ["uc", "c", "h", "fast"])
def test_triangulate_deterministic(tmp_path, scene_path, method):
    a, b = _twice(tmp_path, ["triangulate", "--scene", scene_path, "--method", method])
    assert open(a, "rb").read() == open(b, "rb").read()
    rows = _rows(a)
    assert rows[0][0] == "track" and len(rows) == 27


def test_triangulate_detected_plane(tmp_path, no_plane_scene):
    out = str(tmp_path / "t.csv")
    assert main(["triangulate", "--scene", no_plane_scene, "--method", "c", "--plane-index", "1", "--out", out]) == EXIT_OK
    assert len(_rows(out)) == 13
    assert main(["triangulate", "--scene", no_plane_scene, "--method", "c", "--plane-index", "7", "--out", out]) == EXIT_INPUT


def test_detect_planes_deterministic(tmp_path, scene_path):
    a, b = _twice(tmp_path, ["detect-planes", "--scene", scene_path, "--num-planes", "2"], ".json")
    assert open(a, "rb").read() == open(b, "rb").read()
    doc = json.load(open(a))
    assert len(doc) == 2 and all(d["support"] == 12 for d in doc)


def test_pipeline_deterministic(tmp_path, scene_path):
    a, b = _twice(tmp_path, ["pipeline", "--scene", scene_path, "--views", "2"])
    assert open(a, "rb").read() == open(b, "rb").read()


def test_input_errors(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["triangulate", "--scene", str(tmp_path / "missing.json"), "--method", "c", "--out", out]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["detect-planes", "--scene", str(bad), "--num-planes", "1", "--out", out]) == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        main(["bench"])
    assert exc.value.code == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        main(["stability", "--views", "5", "--out", out])
    assert exc.value.code == EXIT_INPUT
    assert main(["eddeg", "--views", "1", "--formula-only"]) == EXIT_INPUT


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "planartri", "eddeg", "--views", "3", "--formula-only"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "closed form: 24" in r.stdout
