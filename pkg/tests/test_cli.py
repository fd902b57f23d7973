import math

import numpy as np
import pytest

from ergmlab.cli import main
from ergmlab.graphs import Graph
from ergmlab.graphons import StepGraphon


def run(out_path, argv):
    code = main(argv + ["--out", str(out_path)])
    text = out_path.read_text() if out_path.exists() else ""
    return code, text


def body_lines(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_header_contract(tmp_path):
    out = tmp_path / "psi.txt"
    code, text = run(out, ["psi", "--beta1", "0", "--beta2", "0"])
    assert code == 0
    head = text.splitlines()[:3]
    assert head[0].startswith("# command: ergmlab psi")
    assert head[1].startswith("# seed:")
    assert head[2].startswith("# version:")


def test_psi_zero_model(tmp_path):
    out = tmp_path / "psi.txt"
    code, text = run(out, ["psi", "--beta1", "0", "--beta2", "0", "--exact-n", "4"])
    assert code == 0
    vals = dict(ln.split(None, 1) for ln in body_lines(text))
    assert float(vals["psi_limit"]) == pytest.approx(0.5 * math.log(2))
    assert float(vals["psi_4"]) == pytest.approx(6 / 16 * math.log(2))


def test_psi_model_file(tmp_path):
    model = tmp_path / "model.txt"
    model.write_text("edge 0\ntriangle 0\nstar:2 0\n")
    out = tmp_path / "psi.txt"
    code, text = run(out, ["psi", "--model", str(model)])
    assert code == 0
    vals = dict(ln.split(None, 1) for ln in body_lines(text))
    assert float(vals["psi_limit"]) == pytest.approx(0.5 * math.log(2))


def test_phase_diagram_jump_row(tmp_path):
    out = tmp_path / "pd.csv"
    code, text = run(out, ["phase-diagram", "--beta1", "-0.45", "--beta2", "0:2:200"])
    assert code == 0
    rows = body_lines(text)
    assert rows[0] == "beta2,u_star,psi,multiplicity"
    jump_rows = [r for r in rows[1:] if r.split(",")[3] == "2"]
    assert len(jump_rows) == 1
    grid_rows = [r for r in rows[1:] if r.split(",")[3] != "2"]
    assert len(grid_rows) == 200


def test_phase_diagram_surface(tmp_path):
    out = tmp_path / "surface.csv"
    code, text = run(out, ["phase-diagram", "--beta1", "-1:0:3", "--beta2", "0:1:4"])
    assert code == 0
    rows = body_lines(text)
    assert rows[0] == "beta1,beta2,u_star,psi,multiplicity"
    assert len(rows) == 1 + 12


def test_degeneracy_values(tmp_path):
    out = tmp_path / "deg.txt"
    code, text = run(out, ["degeneracy", "--beta1", "-5"])
    assert code == 0
    vals = dict(ln.split(None, 1) for ln in body_lines(text))
    assert float(vals["c1"]) == pytest.approx(0.0067, abs=1e-4)
    assert float(vals["c2"]) == pytest.approx(0.9)
    assert code == 0


def test_degeneracy_guard_exit_code(tmp_path):
    out = tmp_path / "deg.txt"
    code = main(["degeneracy", "--beta1", "-0.1", "--out", str(out)])
    assert code == 2


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
    assert main(["psi"]) == 1  # neither model nor inline betas
    assert main(["psi", "--model", "/does/not/exist"]) == 1


def test_sample_trace_and_byte_reproducibility(tmp_path):
    args = [
        "sample", "--n", "12", "--steps", "400", "--beta1", "0.2", "--beta2", "0.1",
        "--seed", "4", "--record-every", "100",
    ]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    a, b = out1.read_text(), out2.read_text()
    assert a.replace(str(out1), "X") == b.replace(str(out2), "X")
    rows = body_lines(a)
    assert rows[0] == "step,edges,triangles,statistic"
    assert rows[1].startswith("0,0,0,")
    assert len(rows) == 1 + 1 + 4  # header + step 0 + 4 records


def test_estimate_z_importance(tmp_path):
    out = tmp_path / "est.txt"
    code, text = run(
        out,
        ["estimate-z", "--method", "importance", "--beta1", "0.2", "--beta2", "0.1",
         "--n", "4", "--samples", "20000", "--seed", "5"],
    )
    assert code == 0
    vals = dict(ln.split(None, 1) for ln in body_lines(text))
    from ergmlab.mcmc import enumerate_psi_n
    from ergmlab.variational import ModelSpec

    truth = 16 * enumerate_psi_n(ModelSpec.edge_triangle(0.2, 0.1), 4)
    assert float(vals["estimate_log"]) == pytest.approx(truth, rel=0.02)


def test_estimate_z_mcmle_requires_model0(tmp_path):
    out = tmp_path / "est.txt"
    code = main(
        ["estimate-z", "--method", "mcmle", "--beta1", "0.1", "--n", "4", "--out", str(out)]
    )
    assert code == 1


def test_spectral_check_passes(tmp_path):
    out = tmp_path / "spec.txt"
    code, text = run(out, ["spectral-check"])
    assert code == 0
    assert text.rstrip().endswith("PASS")


def test_euler_lagrange_output(tmp_path):
    out = tmp_path / "el.txt"
    code, text = run(
        out,
        ["euler-lagrange", "--beta1", "0.2", "--beta2", "0.1", "--blocks", "2",
         "--init", "0.5"],
    )
    assert code == 0
    lines = body_lines(text)
    assert lines[0].startswith("residual ")
    kernel = StepGraphon.from_text("\n".join(lines[1:]))
    assert kernel.k == 2


def test_extremal_output(tmp_path):
    out = tmp_path / "ext.txt"
    code, text = run(out, ["extremal", "--motif", "triangle", "--beta1", "0"])
    assert code == 0
    lines = body_lines(text)
    vals = dict(ln.split(None, 1) for ln in lines[:2])
    assert float(vals["psi_limit"]) == pytest.approx(0.25 * math.log(2))
    kernel = StepGraphon.from_text("\n".join(lines[2:]))
    assert np.allclose(kernel.values, [[0, 0.5], [0.5, 0]])


def test_top_contour(tmp_path):
    gpath = tmp_path / "g.txt"
    gpath.write_text(Graph.complete(5).to_text())
    out = tmp_path / "top.csv"
    code, text = run(
        out, ["top-contour", "--graph", str(gpath), "--beta1", "-1:1:3", "--beta2", "0:1:2"]
    )
    assert code == 0
    rows = body_lines(text)
    assert rows[0] == "beta1,beta2,top"
    assert len(rows) == 1 + 6


def test_threads_env_still_deterministic(tmp_path, monkeypatch):
    args = ["phase-diagram", "--beta1", "-1:1:5", "--beta2", "0:1:5"]
    out1, out2 = tmp_path / "one.csv", tmp_path / "four.csv"
    monkeypatch.setenv("ERGM_LAB_THREADS", "1")
    assert main(args + ["--out", str(out1)]) == 0
    monkeypatch.setenv("ERGM_LAB_THREADS", "4")
    assert main(args + ["--out", str(out2)]) == 0
    assert body_lines(out1.read_text()) == body_lines(out2.read_text())
