import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lc_commune.genmodel import (PRESET_VARIANTS, LatentModelSpec, OmegaLaw, check_assumptions,
                                 derive_seed, draw_model, edge_probabilities, preset_spec,
                                 sample_adjacency, sigmoid, stream, write_draw)
from lc_commune.graph_io import degree_stats, read_edge_list, read_labels


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(-50.0) > 0
    ref = float(1 / (1 + mpmath.exp(50)))
    assert sigmoid(-50.0) == pytest.approx(ref, rel=1e-14)


@given(st.floats(-700, 700))
def test_sigmoid_symmetry(x):
    assert abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15
    ref = float(1 / (1 + mpmath.exp(-mpmath.mpf(x))))
    assert sigmoid(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_preset_spec1_fields():
    s = preset_spec("spec1", tau=0.5)
    assert (s.n, s.d, s.k, s.sizes) == (1000, 3, 2, (500, 500))
    assert s.mu.tolist() == [0.5, 1.0, 0.0]
    assert np.array_equal(s.H, np.diag([1.0, 1.0, 0.5]))
    assert s.alpha_bar == -2.49 and s.tau == 0.5
    assert s.omega.law == "normal" and s.omega.params == {"scale": 1.0}


def test_preset_variants():
    assert [t for t, _ in PRESET_VARIANTS["spec1"]] == [0.75, 0.5, 0.25]
    assert [a for _, a in PRESET_VARIANTS["spec3"]] == [-2.14, -2.49, -2.83]
    assert np.array_equal(preset_spec("spec2").H, np.diag([1.0, 1.0, -0.5]))
    assert np.array_equal(preset_spec("spec4").H, np.diag([1.0, 1.0, -0.5]))
    with pytest.raises(ValueError):
        preset_spec("spec5")


def test_spec4_keeps_mu_length():
    mu = preset_spec("spec4").mu
    assert mu @ mu == pytest.approx(1.25, rel=1e-14)
    assert np.allclose(mu / mu[0], [1.0, 2.0, 0.4])


def test_spec3_overlaps_spec1():
    assert preset_spec("spec3", tau=0.5, alpha_bar=-2.49) == preset_spec("spec1", tau=0.5)


def test_spec_json_round_trip(tmp_path):
    s = preset_spec("spec4", tau=0.25)
    s.to_json(tmp_path / "s.json")
    assert LatentModelSpec.from_json(tmp_path / "s.json") == s
    raw = json.loads((tmp_path / "s.json").read_text())
    assert {"n", "d", "k", "mu", "tau", "H", "alpha_bar", "omega", "sizes"} <= set(raw)
    assert raw["H"] == s.H.ravel().tolist()


def test_spec_from_dict_row_major_h():
    s = LatentModelSpec.from_dict({"n": 10, "d": 2, "k": 2, "mu": [1, 0], "tau": 0.5,
                                   "H": [1, 0, 0, 0.5], "alpha_bar": -1.0,
                                   "omega": {"law": "constant", "params": {"value": 0}},
                                   "sizes": [5, 5]})
    assert np.array_equal(s.H, np.diag([1.0, 0.5]))


@pytest.mark.parametrize("bad", [
    dict(tau=0.0), dict(H=np.array([[1.0, 2.0, 0], [0, 1, 0], [0, 0, 1]])),
    dict(sizes=(400, 600)), dict(sizes=(500, 400)), dict(mu=np.ones(2)),
])
def test_spec_validation(bad):
    base = preset_spec("spec1").to_dict()
    base.update({k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in bad.items()})
    with pytest.raises(ValueError):
        LatentModelSpec.from_dict(base)


def test_normalize_h(caplog):
    s = preset_spec("spec1").replace(H=np.diag([2.0, 1.0, 0.5]), normalize_h=True)
    assert np.linalg.norm(s.H, 2) == pytest.approx(1.0)
    assert s.h_scale == 2.0
    # presets stay unscaled unless asked
    assert preset_spec("spec1").h_scale == 1.0


def test_draw_shapes_and_invariants():
    s = preset_spec("spec1", n=60)
    d = draw_model(s, seed=1, keep_probs=True)
    assert d.alphas.shape == (60,) and d.latents.shape == (60, 3)
    assert np.array_equal(d.truth, np.repeat([1, 2], 30))
    P = d.probs
    assert np.allclose(P, P.T)
    off = ~np.eye(60, dtype=bool)
    assert np.all((P[off] > 0) & (P[off] < 1))
    assert np.all(np.diag(d.A.dense()) == 0)


def test_draw_bit_identical():
    s = preset_spec("spec2", n=120, tau=0.75)
    a, b = draw_model(s, 9), draw_model(s, 9)
    assert a.A == b.A
    assert np.array_equal(a.latents, b.latents) and np.array_equal(a.alphas, b.alphas)
    assert draw_model(s, 10).A != a.A


def test_near_empty_graph():
    s = preset_spec("spec1", n=200, tau=1e-6, alpha_bar=-30.0)
    assert degree_stats(draw_model(s, 0).A).avg_degree < 0.01


def test_edge_frequencies_match_probabilities():
    s = preset_spec("spec1", n=40)
    d = draw_model(s, 3, keep_probs=True)
    rng = np.random.default_rng(0)
    pairs = [tuple(sorted(rng.choice(40, 2, replace=False))) for _ in range(20)]
    counts = np.zeros(len(pairs))
    for r in range(2000):
        arr = sample_adjacency(d.probs, seed=r).dense()
        counts += [arr[i, j] for i, j in pairs]
    freq = counts / 2000
    target = np.array([d.probs[i, j] for i, j in pairs])
    assert np.max(np.abs(freq - target)) < 0.04


def test_edge_probabilities_logit():
    alphas = np.array([-1.0, 0.5, 0.0])
    z = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    H = np.diag([1.0, -0.5])
    P = edge_probabilities(alphas, z, H)
    assert P[0, 2] == pytest.approx(1 / (1 + math.exp(-(-1.0 + 0.0 + 1.0))))
    assert P[1, 2] == pytest.approx(1 / (1 + math.exp(-(0.5 - 1.0))))
    assert np.all(np.diag(P) == 0)


def test_average_degree_spec1_small_sample():
    degs = [degree_stats(draw_model(preset_spec("spec1", tau=0.5), r).A).avg_degree
            for r in range(5)]
    assert np.mean(degs) == pytest.approx(35.28, rel=0.10)


def test_average_degree_spec3_dense_variant():
    degs = [degree_stats(draw_model(preset_spec("spec3", alpha_bar=-2.14), r).A).avg_degree
            for r in range(5)]
    assert np.mean(degs) == pytest.approx(58.86, rel=0.10)


def test_write_draw(tmp_path):
    d = draw_model(preset_spec("spec1", n=50), 2)
    paths = write_draw(d, str(tmp_path / "x"))
    assert len(paths) == 3
    assert read_edge_list(paths[0]) == d.A
    assert np.array_equal(read_labels(paths[1]), d.truth)
    header = (tmp_path / "x.latent.csv").read_text().splitlines()[0]
    assert header == "node,label,alpha,z0,z1,z2"


def test_streams_and_seeds():
    a = stream(1, 2, 3).random(4)
    assert np.array_equal(a, stream(1, 2, 3).random(4))
    assert not np.array_equal(a, stream(1, 2, 4).random(4))
    assert derive_seed(5, 1) == derive_seed(5, 1) != derive_seed(5, 2)


def test_omega_laws():
    rng = np.random.default_rng(0)
    u = OmegaLaw("uniform", {"low": -1.0, "high": 2.0})
    x = u.sample(rng, 1000)
    assert x.min() >= -1 and x.max() <= 2 and u.bounds == (-1.0, 2.0)
    assert OmegaLaw("constant", {"value": 0.3}).sample(rng, 3).tolist() == [0.3] * 3
    assert OmegaLaw().mean_exp(1.0) == pytest.approx(math.exp(0.5))
    with pytest.raises(ValueError):
        OmegaLaw("cauchy")


def test_assumptions_spec1():
    rep = check_assumptions(preset_spec("spec1", tau=0.5))
    assert rep.values["tau_sqrt_log_n"] == pytest.approx(0.5 * math.sqrt(math.log(1000)))
    assert rep.values["tau_sqrt_log_n"] == pytest.approx(1.314, abs=5e-4)
    assert rep.values["mu_H_mu"] == pytest.approx(1.25)
    assert rep.values["mu_eigenvalue"] == pytest.approx(1.0)
    for flag in ("tau_scaling", "assortative", "mu_eigenvector", "unit_H_norm", "degree_growth"):
        assert rep.flags[flag], flag
    # normal omega is unbounded: reported, not enforced
    assert not rep.flags["sparse"]
    assert any("unbounded" in note for note in rep.notes)


def test_assumptions_eigenvector_with_small_eigenvalue():
    s = preset_spec("spec1").replace(mu=np.array([0.0, 0.0, 1.0]))
    rep = check_assumptions(s)
    assert rep.flags["mu_eigenvector"] and rep.values["mu_eigenvalue"] == pytest.approx(0.5)
    assert rep.flags["assortative"] and rep.values["mu_H_mu"] == pytest.approx(0.5)


def test_assumptions_disassortative():
    s = preset_spec("spec1").replace(mu=np.array([1.0, 0.0, 0.0]), H=np.diag([-1.0, 1.0, 1.0]))
    rep = check_assumptions(s)
    assert not rep.flags["assortative"] and rep.values["mu_H_mu"] == -1.0


def test_spec4_not_eigenvector():
    assert not check_assumptions(preset_spec("spec4")).flags["mu_eigenvector"]
