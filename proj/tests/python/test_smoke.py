import json
import math
import os

import numpy as np
import pytest

import negdep


def random_psd(n, seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    return b.T @ b / n


def test_version():
    assert negdep.__version__ == "0.1.0"


def test_samplers_are_seeded_and_sorted():
    k = negdep.KernelMatrix(random_psd(5, 1), "likelihood")
    a = negdep.sample_spectral(k, seed=3)
    assert a == negdep.sample_spectral(k, seed=3)
    assert a == sorted(set(a))
    assert len(negdep.sample_kdpp(k, 2, seed=4)) == 2


def test_law_matches_determinant_formula():
    l = random_psd(4, 2)
    law = np.array(negdep.brute_force_distribution(negdep.KernelMatrix(l)))
    z = np.linalg.det(np.eye(4) + l)
    for mask in range(16):
        idx = [i for i in range(4) if mask >> i & 1]
        expected = (np.linalg.det(l[np.ix_(idx, idx)]) if idx else 1.0) / z
        assert law[mask] == pytest.approx(expected, abs=1e-12)


def test_projection_sampler_size():
    q, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((6, 3)))
    k = negdep.projection_from_rows(q.T)
    assert k.kind == "marginal"
    assert len(negdep.sample_projection(k, seed=1)) == 3


def test_gauss_legendre_matches_numpy():
    x, w = negdep.gauss_legendre(6)
    xr, wr = np.polynomial.legendre.leggauss(6)
    assert np.allclose(np.sort(x), xr, atol=1e-13)
    assert np.allclose(w[np.argsort(x)], wr, atol=1e-13)


def test_css_and_leverage():
    x = np.random.default_rng(6).standard_normal((6, 5))
    lev = negdep.leverage_scores(x, 2)
    assert lev.sum() == pytest.approx(2.0, abs=1e-12)
    err, opt = negdep.css_expected_error("volume", x, 2)
    assert opt <= err <= 3 * opt


def test_pruning_and_quantum():
    assert negdep.i2(1, 1, 1) == pytest.approx(1 / 6, abs=1e-15)
    res = negdep.compare_pruning([2, 1, 3], np.array([1.0, -0.5, 0.3]), 3)
    assert res["E_dpp"] <= res["E_bernoulli"]
    v = negdep.haar_unitary(5, seed=2)
    p = np.array(negdep.occupation_distribution(v, 2))
    q = np.array(negdep.projection_dpp_law(v, 2))
    assert 0.5 * np.abs(p - q).sum() < 1e-9


def test_misc_identities():
    assert negdep.stft_hermite_sup(1) == pytest.approx(math.sqrt(1 / math.e))
    s = negdep.spiked_sigma(2.0, np.array([0.6, 0.8]), 2)
    assert np.linalg.det(2 * math.pi * s) == pytest.approx(1.0, abs=1e-12)
    z = negdep.gaf_zeros("planar", 1.0, 2.0, seed=1)
    assert all(abs(w) <= 2.0 for w in z)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        negdep.KernelMatrix(np.eye(2), "bogus")
    with pytest.raises(ValueError):
        negdep.sample_kdpp(negdep.KernelMatrix(np.eye(3)), 5)


def test_kernel_round_trip(tmp_path):
    k = negdep.KernelMatrix(random_psd(3, 7))
    path = str(tmp_path / "k.json")
    negdep.save_kernel(k, path)
    back = negdep.load_kernel(path)
    assert np.array_equal(back.entries, k.entries)


def test_verify_manifest():
    text = negdep.verify("fast", seed=7, only=[3, 8], fixtures=os.environ.get("NEGDEP_FIXTURES", ""))
    j = json.loads(text)
    assert j["schema"] == "negdep-manifest/1"
    assert [c["status"] for c in j["checks"]] == ["pass", "pass"]
