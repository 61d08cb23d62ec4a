import math
import os
import subprocess

import numpy as np
import pytest

import nlsrecon as nr

TINY = """
name = tiny
nx = 11
dt = 0.01
T = 0.2
p = 2
phantom = test1
noise_delta = 0.1
seed = 42
n_modes = 4
k_max = 3
diag_n_list = 1, 2, 4
"""


def test_basis_checks():
    b = nr.build_basis(0.2, 65, 256)
    assert b.n_quad == 256
    assert nr.gram_deviation(b) < 1e-9
    assert nr.s_identity_deviation(b) < 1e-8
    psi = np.asarray(b.psi_table)
    w = np.asarray(b.weighted_quad_weights)
    gram = psi.T @ (w[:, None] * psi)
    assert np.abs(gram - np.eye(66)).max() < 1e-9


def test_grid_and_laplacian():
    g = nr.SpatialGrid(1.0, 21)
    assert g.n_interior == 361 and g.n_boundary == 76
    x = np.array([g.interior_position(k).x for k in range(g.n_interior)])
    y = np.array([g.interior_position(k).y for k in range(g.n_interior)])
    u = (np.sin(math.pi * (x + 1) / 2) * np.sin(math.pi * (y + 1) / 2)).astype(complex)
    lap = np.asarray(nr.laplacian_apply(g, u))
    # Discrete eigenvalue of the 5-point stencil.
    h = g.spacing
    mu_h = 2 * (4 / h**2) * math.sin(math.pi * h / 4) ** 2
    assert np.allclose(lap, -mu_h * u, atol=1e-10)


def test_forward_noise_projection():
    g = nr.SpatialGrid(1.0, 11)
    tr = nr.run_forward(g, nr.Phantom.test1(), 0.2, 0.01, 2.0)
    vals = np.asarray(tr.values)
    assert vals.shape == (36, 21)
    noisy = nr.add_noise(tr, 0.1, 42)
    diff = np.abs(np.asarray(noisy.values) - vals)
    assert diff.max() <= 0.1 * np.abs(vals).max() + 1e-15
    again = nr.add_noise(tr, 0.1, 42)
    assert np.array_equal(np.asarray(again.values), np.asarray(noisy.values))
    b = nr.build_basis(0.2, 4, 64)
    data = nr.project_trace(b, tr)
    assert np.asarray(data.coeffs).shape == (36, 5)


def test_frozen_constant_mode():
    T = 0.2
    b = nr.build_basis(T, 3, 64)
    c = np.zeros((4, 4), dtype=complex)
    c[2, 0] = 0.4 - 0.3j
    g = np.asarray(nr.frozen_nonlinearity(b, nr.ModalField(c), 1.0, 3.0))
    factor = (math.exp(2 * T) - 1) / (2 * T * T)
    assert abs(g[2, 0] - abs(c[2, 0]) ** 2 * c[2, 0] * factor) < 1e-13


def test_config_errors():
    with pytest.raises(ValueError, match="missing required key 'dt'"):
        nr.parse_config("nx = 11\nT = 0.2\np = 2\n")
    with pytest.raises(ValueError, match="unknown key"):
        nr.parse_config(TINY, "tiny.cfg", ["lamda=1"])


def test_pipeline_roundtrip(tmp_path, monkeypatch):
    monkeypatch.delenv("NLSRECON_OUTPUT_DIR", raising=False)
    cfg = nr.parse_config(TINY + f"output_dir = {tmp_path}\n", "tiny.cfg")
    paths = nr.cmd_forward(cfg)
    assert os.path.exists(paths["clean"]) and os.path.exists(paths["noisy"])
    tr = nr.read_trace_csv(paths["noisy"])
    assert np.asarray(tr.values).shape == (36, 21)
    out = nr.cmd_invert(cfg, paths["noisy"])
    assert len(out["history"]) == 3
    metrics = nr.read_metrics_csv(os.path.join(tmp_path, "tiny_metrics.csv"))
    assert [r.index for r in metrics] == [0, 1, 2]
    R, n, u0 = nr.read_grid_csv(os.path.join(tmp_path, "tiny_u0.csv"))
    assert (R, n) == (1.0, 11)
    assert np.allclose(np.asarray(u0), np.asarray(out["u0"]))
    diag = nr.cmd_diagnose(cfg)
    assert diag["gram_deviation"] < 1e-9
    assert all(r > 0 for r in diag["carleman_ratios"])
    tails = diag["truncation_tails"]
    assert all(b < a for a, b in zip(tails, tails[1:]))


def test_cli_env_override(tmp_path):
    cli = os.environ.get("NLSRECON_CLI")
    if not cli:
        pytest.skip("NLSRECON_CLI not set")
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY + "output_dir = ignored\n")
    env = dict(os.environ, NLSRECON_OUTPUT_DIR=str(tmp_path / "env"))
    subprocess.run([cli, "phantom", "--config", str(cfg)], check=True, env=env, capture_output=True)
    R, n, vals = nr.read_grid_csv(str(tmp_path / "env" / "tiny_phantom.csv"))
    assert n == 11 and np.abs(np.asarray(vals)).max() > 0
    bad = subprocess.run([cli, "forward", "--config", str(cfg), "--set", "nx=x"], env=env, capture_output=True)
    assert bad.returncode == 2
