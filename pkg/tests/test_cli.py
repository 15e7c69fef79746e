import io
import json
import math
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from merodyn import IterationBudget, Palette
from merodyn.cli import JobConfig, UsageError, run
from merodyn.render import resolve_threads
from merodyn.verify import exp_plane_suite, golden_path


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out=out, err=err)
    recs = [json.loads(line) for line in out.getvalue().splitlines()]
    errs = [json.loads(line) for line in err.getvalue().splitlines()]
    return code, recs, errs


finite = st.floats(-1e6, 1e6, allow_nan=False)
cplx = st.builds(complex, finite, finite)
opt = st.none

jobs = st.builds(
    JobConfig,
    command=st.sampled_from(["render", "solve", "probe", "ray", "boundary", "verify"]),
    family_id=st.sampled_from(["exp", "tan", "f2rho:0.5,0.25", "precomp"]),
    action=st.sampled_from([None, "vc", "mis", "density", "schwarzian"]),
    center=opt() | cplx, width=opt() | finite, height=opt() | finite,
    resolution=opt() | st.tuples(st.integers(1, 4096), st.integers(1, 4096)),
    guess=opt() | cplx, p=opt() | st.integers(2, 9), pole=opt() | st.integers(-5, 5),
    m=opt() | st.integers(1, 6), n=opt() | st.integers(0, 5), sv_index=st.integers(0, 2),
    at=opt() | cplx, radii=opt() | st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=4).map(tuple),
    p_max=st.integers(2, 8), seed=opt() | cplx, theta=opt() | st.floats(0, 1, exclude_max=True),
    tmin=st.floats(-100, -1), dt_max=opt() | st.floats(0.01, 100), level=opt() | st.floats(0.01, 0.99),
    budget=st.builds(IterationBudget, max_iter=st.integers(10, 10000), eps_hit=st.floats(1e-12, 1e-6)),
    out=opt() | st.text("abc./_", min_size=1, max_size=12),
    palette=opt() | st.just(Palette(capture=(1, 2, 3))),
    threads=opt() | st.integers(1, 64), bless=st.booleans(),
)


@settings(max_examples=200)
@given(jobs)
def test_job_config_json_round_trip(job):
    again = JobConfig.from_json(job.to_json())
    assert again == job
    assert again.to_json() == job.to_json()


def test_job_config_rejects_unknown_fields():
    with pytest.raises(UsageError):
        JobConfig.from_dict({"command": "render", "colour": 3})


def test_render_writes_only_its_output(tmp_path):
    before = set(os.listdir(tmp_path))
    out = tmp_path / "tan.ppm"
    code, recs, errs = call("render", "--family", "tan", "--center", "0,0", "--width", "12",
                            "--height", "12", "--res", "32x24", "--out", str(out))
    assert code == 0 and not errs
    assert set(os.listdir(tmp_path)) - before == {"tan.ppm"}
    assert out.read_bytes().startswith(b"P6\n32 24\n255\n")
    assert recs[0]["type"] == "RenderResult" and recs[0]["resolution"] == [32, 24]


def test_render_csv_and_png(tmp_path):
    for name in ("g.csv", "g.png"):
        code, _, _ = call("render", "--family", "exp", "--center=-1,0", "--width", "4",
                          "--height", "4", "--res", "8x8", "--out", str(tmp_path / name))
        assert code == 0 and (tmp_path / name).stat().st_size > 0
    assert (tmp_path / "g.csv").read_text().count("\n") == 65


def test_render_budget_and_palette(tmp_path):
    bud = tmp_path / "b.json"
    bud.write_text(IterationBudget(max_iter=300).to_json())
    code, _, _ = call("render", "--family", "tan", "--center", "0,0", "--width", "1", "--height", "1",
                      "--res", "2x2", "--out", str(tmp_path / "a.ppm"), "--budget", str(bud),
                      "--palette", '{"periods": [[9, 8, 7]]}')
    assert code == 0
    assert (tmp_path / "a.ppm").read_bytes()[-3:] == bytes([9, 8, 7])


def test_unknown_family_is_a_usage_error(tmp_path):
    code, recs, errs = call("render", "--family", "nosuch", "--center", "0,0", "--width", "1",
                            "--height", "1", "--res", "8x8", "--out", str(tmp_path / "x.ppm"))
    assert code == 2 and not recs and errs[0]["error"] == "UnknownFamily"
    assert not (tmp_path / "x.ppm").exists()


@pytest.mark.parametrize("argv", [
    ["render", "--family", "tan"],
    ["render", "--family", "tan", "--center", "0,0", "--width", "nan", "--height", "1",
     "--res", "8x8", "--out", "x.ppm"],
    ["render", "--family", "tan", "--center", "0,0", "--width", "1", "--height", "1",
     "--res", "8by8", "--out", "x.ppm"],
    ["render", "--family", "tan", "--center", "0,0", "--width", "1", "--height", "1",
     "--res", "8x8", "--out", "x.gif"],
    ["solve", "vc", "--family", "tan", "--p", "2", "--guess", "1,2,3"],
    ["render", "--family", "tan", "--center", "0,0", "--width", "1", "--height", "1",
     "--res", "8x8", "--out", "x.ppm", "--budget", '{"bogus": 1}'],
    ["solve"],
    [],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, recs, errs = call(*argv)
    assert code == 2 and errs[0]["type"] == "Error" and errs[0]["exit_code"] == 2
    assert os.listdir(tmp_path) == []


def test_solve_vc():
    code, recs, _ = call("solve", "vc", "--family", "tan", "--p", "2", "--pole", "0", "--guess", "0,-1.5")
    assert code == 0 and recs[0]["type"] == "VirtualCycleHit"
    assert recs[0]["lam"] == pytest.approx([0.0, -math.pi / 2], abs=1e-12)


def test_solve_mis_and_numerical_failure():
    code, recs, _ = call("solve", "mis", "--family", "exp", "--m", "2", "--n", "1", "--guess", "1.8,1.6")
    assert code == 0 and recs[0]["repelling_check"] > 1
    code, recs, errs = call("solve", "mis", "--family", "exp", "--m", "1", "--n", "0", "--guess", "1,1")
    assert code == 3 and not recs and errs[0]["error"] == "NoConvergence"


def test_not_repelling_record_carries_the_hit():
    code, _, errs = call("solve", "mis", "--family", "tanh2", "--m", "2", "--n", "1", "--guess", "0,3.1")
    assert code == 3 and errs[0]["error"] == "NotRepelling" and errs[0]["hit"]["type"] == "MisiurewiczHit"


def test_probe_density():
    code, recs, _ = call("probe", "density", "--family", "tan", "--at", "0,-1.5707963267948966",
                         "--radii", "0.5,0.1", "--threads", "2")
    assert code == 0 and [r["radius"] for r in recs] == [0.5, 0.1]
    assert all(r["hit"] is not None for r in recs)
    code, _, errs = call("probe", "density", "--family", "exp", "--at", "0,0", "--radii", "0.5")
    assert code == 2 and errs[0]["error"] == "FamilyHasNoPoles"


def test_ray_csv(tmp_path):
    out = tmp_path / "ray.csv"
    code, recs, _ = call("ray", "--family", "tan", "--seed", "0,1.2", "--theta", "auto",
                         "--tmin", "-18", "--out", str(out))
    assert code == 0 and recs[0]["landing"]["kind"] == "FiniteVirtualCenter"
    lines = out.read_text().splitlines()
    assert lines[0] == "t,re,im,abs_rho,arg_rho,residual"
    t, re, im, a, arg, res = (float(v) for v in lines[-1].split(","))
    assert t == -18 and a == pytest.approx(math.exp(-18))


def test_ray_at_requested_angle(tmp_path):
    code, recs, _ = call("ray", "--family", "tan", "--seed", "0,1.2", "--theta", "0.25",
                         "--tmin", "-18", "--out", str(tmp_path / "r.csv"))
    assert code == 0 and recs[0]["theta"] == pytest.approx(0.25, abs=1e-9)
    assert abs(complex(*recs[0]["landing"]["lam"]) - 0.5j * math.pi) < 1e-6


def test_stalled_ray_exits_3_but_keeps_its_csv(tmp_path):
    out = tmp_path / "r.csv"
    code, recs, errs = call("ray", "--family=exp", "--seed=-2,0", "--tmin", "-12", "--out", str(out))
    assert code == 3 and errs[0]["error"] == "Stalled"
    assert recs[0]["landing"]["kind"] == "Stalled" and out.exists()


def test_boundary(tmp_path):
    out = tmp_path / "b.csv"
    code, recs, _ = call("boundary", "--family", "tan", "--seed", "0.5,0", "--level", "0.9",
                         "--out", str(out))
    assert code == 0 and recs[0]["closed"]
    assert out.read_text().splitlines()[0] == "re,im,phi"
    code, _, _ = call("boundary", "--family", "tan", "--seed", "0.5,0", "--level", "1.5",
                      "--out", str(out))
    assert code == 2


@pytest.mark.parametrize("suite", ["schwarzian", "tangent-centers", "exp-plane"])
def test_verify_suites(suite):
    code, recs, _ = call("verify", suite)
    assert code == 0 and recs[-1]["type"] == "VerifySummary" and recs[-1]["passed"]


def test_golden_is_shipped_and_bless_regenerates(tmp_path):
    assert golden_path().exists()
    g = tmp_path / "golden.csv"
    assert exp_plane_suite(bless=True, golden=g)[0].passed
    assert g.read_text() == golden_path().read_text()
    g.write_text(g.read_text().replace(",1,1,", ",1,2,", 5))
    assert not exp_plane_suite(golden=g)[0].passed


def test_dump_and_run_config(tmp_path):
    out = tmp_path / "t.csv"
    code, recs, _ = call("render", "--family", "tan", "--center", "0,0", "--width", "2",
                         "--height", "2", "--res", "4x4", "--out", str(out), "--dump-config")
    assert code == 0 and not out.exists()
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps(recs[0]))
    code, recs, _ = call("--config", str(cfg))
    assert code == 0 and out.exists() and recs[0]["type"] == "RenderResult"


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("MERODYN_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(5) == 5
    monkeypatch.delenv("MERODYN_THREADS")
    assert resolve_threads(None) == (os.cpu_count() or 1)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "merodyn", "solve", "vc", "--family", "tan", "--p", "2",
                        "--guess", "0,1.6"], capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0
    assert json.loads(r.stdout)["lam"] == pytest.approx([0.0, math.pi / 2])
    r = subprocess.run([sys.executable, "-m", "merodyn", "verify", "nosuch"], capture_output=True,
                       text=True, cwd=tmp_path)
    assert r.returncode == 2 and json.loads(r.stderr)["type"] == "Error"
