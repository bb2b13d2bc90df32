"""Figure rendering from CSVs produced by the mala-lab CLI (external interfaces only)."""

import hashlib
import subprocess
import sys

import pytest
from PIL import Image

from mala_fig import SchemaError, render
from mala_fig.cli import main as cli_main

GAMMA_SCALING = """
experiment: gamma-scaling
n_grid: [16, 32, 64]
gamma_grid: ["1/5", "1/3"]
ell_grid: [1.0]
n_steps: 400
master_seed: 21
"""

Q_DECOMPOSITION = """
experiment: q-decomposition
n_grid: [64]
gamma_grid: ["1/3"]
ell_grid: [1.0]
n_steps: 800
master_seed: 22
"""

DIFFUSION = """
experiment: diffusion-limit
n_grid: [64]
gamma_grid: ["1/3"]
ell_grid: [1.3617490388898659]
n_steps: 3000
replicas: 2
master_seed: 23
"""

ESJD = """
experiment: esjd-sweep
n_grid: [32]
gamma_grid: ["1/3"]
ell_grid: [0.8, 1.4, 2.0]
n_steps: 600
replicas: 2
master_seed: 24
"""


def run_lab(*args, **kw):
    return subprocess.run([sys.executable, "-m", "mala_lab.cli", *args],
                          capture_output=True, text=True, **kw)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Golden CSVs, regenerated through the producing CLI."""
    root = tmp_path_factory.mktemp("csv")
    curve = run_lab("curve", "--ell-min", "0.1", "--ell-max", "3.5", "--points", "120")
    assert curve.returncode == 0, curve.stderr
    (root / "curve.csv").write_text(curve.stdout)
    for name, text in (("gamma-scaling", GAMMA_SCALING), ("q-decomposition", Q_DECOMPOSITION),
                       ("diffusion-limit", DIFFUSION), ("esjd-sweep", ESJD)):
        cfg = root / f"{name}.yaml"
        cfg.write_text(text)
        proc = run_lab("run", str(cfg), "--output-dir", str(root))
        assert proc.returncode == 0, proc.stderr
    return root


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def png_meta(path):
    with Image.open(path) as img:
        return dict(img.text)


CASES = [
    ("speed-curve", "curve.csv"),
    ("gamma-fan", "gamma-scaling.csv"),
    ("q-histogram", "q-decomposition.csv"),
    ("acf-overlay", "diffusion-limit.csv"),
    ("esjd-curve", "esjd-sweep.csv"),
]


@pytest.mark.parametrize("kind,csv_name", CASES)
def test_render_is_deterministic(kind, csv_name, data_dir, tmp_path):
    a = render(kind, [data_dir / csv_name], tmp_path / "a.png")
    b = render(kind, [data_dir / csv_name], tmp_path / "b.png")
    assert a.stat().st_size > 0
    assert sha256(a) == sha256(b)
    assert png_meta(a)["mala-fig:kind"] == kind


def test_speed_curve_optimum_annotation(data_dir, tmp_path):
    out = render("speed-curve", [data_dir / "curve.csv"], tmp_path / "speed.png")
    meta = png_meta(out)
    assert abs(float(meta["mala-fig:alpha_star"]) - 0.574) <= 0.001
    assert float(meta["mala-fig:ell_star"]) == pytest.approx(1.3617, abs=1e-3)


def test_q_histogram_overlay_uses_formula_not_fit(data_dir, tmp_path):
    out = render("q-histogram", [data_dir / "q-decomposition.csv"], tmp_path / "q.png")
    meta = png_meta(out)
    # ell = 1: mean -ell^3/4 and variance ell^3/2, taken from the ell column
    assert float(meta["mala-fig:overlay_mean"]) == -0.25
    assert float(meta["mala-fig:overlay_var"]) == 0.5


def test_missing_columns_reported(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment,N,gamma\nx,1,1\n")
    with pytest.raises(SchemaError) as err:
        render("gamma-fan", [bad], tmp_path / "no.png")
    assert "metric" in err.value.missing and "value" in err.value.missing


def test_empty_csv_fails_with_nonzero_exit(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code = cli_main(["q-histogram", "--input", str(empty),
                     "--output", str(tmp_path / "o.png")])
    assert code == 2
    header_only = tmp_path / "header.csv"
    header_only.write_text(",".join([
        "experiment", "N", "gamma", "ell", "target_kind", "kappa", "s", "a",
        "replica", "seed", "metric", "value", "stderr", "wall_ms"]) + "\n")
    assert cli_main(["q-histogram", "--input", str(header_only),
                     "--output", str(tmp_path / "o.png")]) == 2


def test_cli_renders_all_kinds(data_dir, tmp_path):
    for kind, csv_name in CASES:
        out = tmp_path / f"{kind}.png"
        code = cli_main([kind, "--input", str(data_dir / csv_name),
                         "--output", str(out)])
        assert code == 0 and out.exists()


def test_unknown_kind_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit):
        cli_main(["pie-chart", "--input", "x.csv", "--output", "y.png"])
