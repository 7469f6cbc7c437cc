import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from switchseq.arrays import synthesize_uca
from switchseq.errors import UnsupportedNoiseError, ValidationError
from switchseq.hrpe import (
    EstimatorSettings,
    SearchGrid,
    correlation,
    correlation_grid_naive,
    correlation_grid_tensor,
    crlb,
    detect_init,
    estimate,
    fim,
    grid_argmax,
    jacobian,
    lm_refine,
    score,
)
from switchseq.presets import scenario_paths
from switchseq.simulate import synth
from switchseq.sounding import Path, PathSet, Sounder, SoundingConfig, basis_vector, random_schedule, signal


def small_sounder(seed=0):
    cfg = SoundingConfig(n_freq=6, freq_step=5e6, n_rx=3, n_tx=4, n_snap=2,
                         rx_dwell=1e-5, tx_dwell=4e-5, period=1.6e-4)
    arr = synthesize_uca(4, 0.4, directivity=1)
    rx = synthesize_uca(3, 0.3, directivity=1)
    return Sounder(cfg, arr, rx, random_schedule(4, 2, np.random.default_rng(seed)))


def small_grid(snd):
    return SearchGrid.default(snd.config, n_rx=5, n_tx=6)


def test_correlation_matched_and_orthogonal(uniform_sounder):
    p = Path(3e-7, 0.2, 1.0, 500.0)
    b = basis_vector(uniform_sounder, p)
    assert correlation(uniform_sounder, p, b, 2.0) == pytest.approx(np.vdot(b, b).real / 2.0)
    # a different delay bin on the frequency grid is exactly orthogonal
    q = Path(3e-7 + 1 / (64 * uniform_sounder.config.freq_step), 0.2, 1.0, 500.0)
    assert correlation(uniform_sounder, q, b) < 1e-18 * np.vdot(b, b).real


def test_tensor_grid_matches_naive(rng):
    snd = small_sounder()
    g = small_grid(snd)
    y = rng.standard_normal(snd.config.n_obs) + 1j * rng.standard_normal(snd.config.n_obs)
    np.testing.assert_allclose(correlation_grid_tensor(snd, y, g, 0.7), correlation_grid_naive(snd, y, g, 0.7),
                               rtol=1e-10, atol=1e-12)


def test_grid_of_zero_observation():
    snd = small_sounder()
    C = correlation_grid_tensor(snd, np.zeros(snd.config.n_obs, complex), small_grid(snd))
    assert np.all(C == 0)


def test_argmax_recovers_grid_point():
    snd = small_sounder(1)
    g = small_grid(snd)
    idx = (3, 2, 4, 5)
    y = signal(snd, fit_one(g.point(idx)))
    got, val = grid_argmax(snd, y, g)
    assert got == idx
    assert val == pytest.approx(correlation_grid_tensor(snd, y, g).max())


def fit_one(p, gamma=1.0):
    return PathSet.from_paths([Path(p.tau, p.phi_t, p.phi_r, p.nu, gamma)])


def test_unsupported_noise():
    snd = small_sounder()
    n = snd.config.n_obs
    with pytest.raises(UnsupportedNoiseError):
        correlation_grid_tensor(snd, np.zeros(n), small_grid(snd), noise_cov=np.diag(np.arange(1, n + 1)))
    correlation_grid_tensor(snd, np.zeros(n), small_grid(snd), noise_cov=2 * np.eye(n))


def test_grid_validation(config):
    with pytest.raises(ValidationError):
        SearchGrid.default(config, n_nu=4)
    with pytest.raises(ValidationError):
        SearchGrid.default(config, doppler_span="xx")
    g = SearchGrid.default(config)
    assert g.shape == (128, 64, 64, 48)
    assert g.nu[0] == pytest.approx(-8 / (2 * 620e-6))


def test_gamma_columns():
    snd = small_sounder()
    ps = PathSet.from_paths([Path(1e-7, 0.3, -0.2, 700.0, 0.5 - 0.2j)])
    D = jacobian(snd, ps)
    b = basis_vector(snd, ps[0])
    np.testing.assert_allclose(D[:, 4], b, atol=1e-14)
    np.testing.assert_allclose(D[:, 5], 1j * b, atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2e-7), st.floats(-3, 3), st.floats(-3, 3), st.floats(-1e4, 1e4))
def test_jacobian_matches_finite_difference(tau, phi_t, phi_r, nu):
    snd = small_sounder()
    ps = PathSet.from_paths([Path(tau, phi_t, phi_r, nu, 1.3 + 0.4j)])
    D = jacobian(snd, ps)
    th = ps.to_vector()
    cfg = snd.config
    hs = [1e-3 / (np.pi * cfg.n_freq * cfg.freq_step), 1e-4, 1e-4, 1e-3 / (2 * np.pi * cfg.n_snap * cfg.period)]
    for i, h in enumerate(hs):
        e = np.zeros_like(th)
        e[i] = h
        fd = (signal(snd, PathSet.from_vector(th + e)) - signal(snd, PathSet.from_vector(th - e))) / (2 * h)
        assert np.linalg.norm(fd - D[:, i]) / np.linalg.norm(D[:, i]) < 1e-5


def test_fim_symmetric_psd_and_score_zero_at_truth():
    snd = small_sounder()
    ps = PathSet.from_paths([Path(1e-7, 0.3, -0.2, 700.0, 1.0), Path(4e-7, -1.2, 2.0, -3000.0, 0.4j)])
    J = fim(snd, ps, 0.5)
    np.testing.assert_array_equal(J, J.T)
    assert np.linalg.eigvalsh(J).min() > 0
    q = score(snd, signal(snd, ps), ps, 0.5)
    assert np.max(np.abs(q)) < 1e-8 * np.max(np.abs(np.diag(J)))


def test_crlb_scales_with_noise():
    snd = small_sounder()
    ps = PathSet.from_paths([Path(1e-7, 0.3, -0.2, 700.0, 1.0)])
    a, b = crlb(snd, ps, 1.0), crlb(snd, ps, 0.01)
    np.testing.assert_allclose(a.std / b.std, 10.0, rtol=1e-6)
    assert not a.pinv


def test_crlb_coincident_paths_warns():
    snd = small_sounder()
    p = Path(1e-7, 0.3, -0.2, 700.0, 1.0)
    with pytest.warns(RuntimeWarning):
        r = crlb(snd, PathSet.from_paths([p, p]), 1.0)
    assert r.pinv


def test_lm_fixed_point():
    snd = small_sounder()
    ps = PathSet.from_paths([Path(1e-7, 0.3, -0.2, 700.0, 1.0 - 0.5j)])
    res = lm_refine(snd, signal(snd, ps), ps)
    assert res.converged and res.iterations <= 2
    np.testing.assert_allclose(res.paths.to_vector(), ps.to_vector(), rtol=1e-9, atol=1e-12)


def test_lm_from_perturbed_start():
    snd = small_sounder()
    ps = PathSet.from_paths([Path(1e-7, 0.3, -0.2, 700.0, 1.0 - 0.5j)])
    y = synth(snd, ps, 1e-4, 3)
    start = PathSet.from_paths([Path(1.05e-7, 0.32, -0.19, 650.0, 0.9 - 0.4j)])
    res = lm_refine(snd, y, start)
    assert res.final_cost <= res.initial_cost
    assert abs(res.paths.tau[0] - 1e-7) < 5 * res.crlb.param("tau")[0]
    assert abs(res.paths.nu[0] - 700) < 5 * res.crlb.param("nu")[0]


def test_detection_on_pure_noise():
    snd = small_sounder()
    g = small_grid(snd)
    empty = 0
    for seed in range(20):
        paths, _, log = detect_init(snd, synth(snd, PathSet.empty(), 1.0, seed), g)
        empty += len(paths) == 0
        assert log and not log[-1]["kept"]
    assert empty >= 19


def test_estimate_single_path():
    snd = small_sounder(2)
    truth = PathSet.from_paths([Path(1.3e-7, 0.7, -1.4, 2100.0, 10.0)])
    res = estimate(snd, synth(snd, truth, 1.0, 4), small_grid(snd))
    assert len(res.paths) == 1
    err = np.abs(res.paths.to_vector()[:4] - truth.to_vector()[:4])
    assert np.all(err < 5 * res.crlb.std[0, :4])


def test_force_paths_keeps_max():
    snd = small_sounder()
    s = EstimatorSettings(force_paths=True, max_paths=2, refine_iter=3)
    paths, _, log = detect_init(snd, synth(snd, PathSet.empty(), 1.0, 0), small_grid(snd), s)
    assert len(paths) == 2 and all(e["kept"] for e in log)


def test_crlb_snr_slope(uniform_sounder):
    ps = scenario_paths("snapshot2")
    s = [crlb(uniform_sounder, ps, s2).param("nu")[0] for s2 in (1.0, 0.1, 0.01)]
    slope = np.polyfit([0, 10, 20], np.log10(s), 1)[0] * 10
    assert slope == pytest.approx(-0.5, abs=1e-6)
