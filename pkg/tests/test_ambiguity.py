import numpy as np
import pytest

from switchseq.ambiguity import (
    AmbiguityGrid,
    TxAmbiguity,
    azimuth_grid,
    cost_f_p,
    nsl,
    write_ambiguity_csv,
    x_split,
    x_T_direct,
    x_T_fast,
    x_tot,
)
from switchseq.arrays import Eadf, synthesize_uca
from switchseq.errors import DegenerateArrayError, ValidationError
from switchseq.sounding import Path, Sounder, SoundingConfig, eta_from_schedule, random_schedule, uniform_schedule


def rand_path(rng):
    return Path(rng.uniform(0, 2e-6), rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi, np.pi),
                rng.uniform(-6000, 6000))


def test_self_ambiguity_is_one(uniform_sounder, rng):
    p = rand_path(rng)
    assert abs(x_tot(uniform_sounder, p, p) - 1) < 1e-12


def test_hermitian_symmetry(uniform_sounder, rng):
    for _ in range(10):
        a, b = rand_path(rng), rand_path(rng)
        assert abs(x_tot(uniform_sounder, a, b) - np.conj(x_tot(uniform_sounder, b, a))) < 1e-12


def test_split_special_cases(uniform_sounder):
    a = Path(3e-7, 0.1, 0.2, 100.0)
    x_tau, _ = x_split(uniform_sounder, a, Path(3e-7, 1.0, -1.0, 900.0))
    assert abs(x_tau - 1) < 1e-12
    b = Path(5e-7, 0.1, 0.2, 100.0)
    x_tau, x_kappa = x_split(uniform_sounder, a, b)
    assert abs(x_kappa - 1) < 1e-12
    assert abs(abs(x_tot(uniform_sounder, a, b)) - abs(x_tau)) < 1e-12


def test_doppler_difference_invariance(ref_array, config, rng):
    eta = eta_from_schedule(config, random_schedule(8, 3, rng))
    for _ in range(20):
        phi, phi2, nu, dnu = rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-9e3, 9e3), rng.uniform(0, 6e3)
        fast = x_T_fast(ref_array, eta, phi, phi2, dnu)
        assert abs(fast - x_T_direct(ref_array, eta, phi, phi2, nu, nu + dnu)) < 1e-12
        assert abs(fast) <= 1 + 1e-12


def test_fast_form_trivial(ref_array, config):
    eta = eta_from_schedule(config, uniform_schedule(8, 3))
    assert abs(x_T_fast(ref_array, eta, 0.7, 0.7, 0.0) - 1) < 1e-12


def test_uniform_alias_peak_ula():
    # a linear array can mimic the per-antenna phase ramp exactly (the grating-lobe case)
    from switchseq.arrays import synthesize_ula
    from switchseq.ambiguity import angle_weights, doppler_sums

    ula = synthesize_ula(8, 0.5, directivity=1)
    cfg = SoundingConfig()
    eta = eta_from_schedule(cfg, uniform_schedule(8, 3))
    W = angle_weights(ula, [0.0], np.radians(np.arange(-90, 90, 0.05)), 3)[0]
    X = np.abs(W @ doppler_sums(eta, [1 / cfg.period])[:, 0])
    assert X.max() > 0.99


def test_grid_defaults(config):
    g = AmbiguityGrid.default(config)
    assert g.shape == (72, 72, 129)
    assert g.phi[-1] == pytest.approx(np.pi) and g.phi[0] > -np.pi
    assert g.dnu[-1] == pytest.approx(8 / (2 * 620e-6))
    with pytest.raises(ValidationError):
        AmbiguityGrid([0.0], [0.0], [])
    with pytest.raises(ValidationError):
        azimuth_grid(0)


def test_cost_is_positive_and_reproducible(ref_array, config, amb_grid, tx_amb, rng):
    eta = eta_from_schedule(config, random_schedule(8, 3, rng))
    a = tx_amb.cost(eta, 6)
    b = cost_f_p(ref_array, eta, amb_grid, 6, config)
    assert a > 0
    assert a == b


def test_cost_matches_direct_quadrature(ref_array, config):
    # small grid: brute-force sum of |x_T_direct|^p with trapezoid weights in dnu
    g = AmbiguityGrid(azimuth_grid(6), azimuth_grid(5), np.linspace(0, config.nu_max, 4))
    eta = eta_from_schedule(config, uniform_schedule(8, 3))
    w = np.array([0.5, 1, 1, 0.5]) * (g.dnu[1] - g.dnu[0]) * (2 * np.pi / 6) * (2 * np.pi / 5)
    ref = sum(abs(x_T_direct(ref_array, eta, a, b, 0.0, d)) ** 4 * w[n]
              for a in g.phi for b in g.phi_prime for n, d in enumerate(g.dnu))
    assert cost_f_p(ref_array, eta, g, 4, config) == pytest.approx(ref, rel=1e-12)


def test_nsl_uniform_near_zero_db(ref_array, config, amb_grid, tx_amb):
    r = nsl(ref_array, eta_from_schedule(config, uniform_schedule(8, 3)), amb_grid, amb=tx_amb)
    assert r.db > -1.0
    # the worst sidelobe of sequential switching sits at a multiple of 1/T0
    k = r.dnu * config.period
    assert abs(k - round(k)) < 0.05 and round(k) >= 1


def test_nsl_optimized_below_uniform(ref_array, config, amb_grid, tx_amb, annealed):
    r_opt = nsl(ref_array, eta_from_schedule(config, annealed.schedule), amb_grid, amb=tx_amb)
    r_uni = nsl(ref_array, eta_from_schedule(config, uniform_schedule(8, 3)), amb_grid, amb=tx_amb)
    assert r_opt.db < r_uni.db - 3


def test_nsl_single_tx_antenna():
    cfg = SoundingConfig(n_tx=1, tx_dwell=620e-6, rx_dwell=620e-6 / 8, period=620e-6)
    tx = Eadf(np.array([[1.0]]))
    g = AmbiguityGrid.default(cfg, n_phi=12)
    r = nsl(tx, eta_from_schedule(cfg, uniform_schedule(1, 3)), g, ref_step=1)
    assert np.isfinite(r.db)
    assert r.dnu > 0


def test_nsl_warns_when_grid_too_coarse(ref_array, config):
    g = AmbiguityGrid.default(config, n_phi=12, nu_up=50.0, n_nu=5)
    with pytest.warns(RuntimeWarning):
        r = nsl(ref_array, eta_from_schedule(config, uniform_schedule(8, 3)), g, ref_step=4)
    assert r.warnings


def test_degenerate_array(config):
    zero = Eadf(np.zeros((8, 3)))
    snd = Sounder(config, zero, zero)
    with pytest.raises(DegenerateArrayError):
        x_tot(snd, Path(0, 0, 0, 0), Path(0, 0, 0, 0))


def test_csv_export(tmp_path, ref_array, config):
    g = AmbiguityGrid.default(config, n_phi=4, n_nu=3)
    X = TxAmbiguity(ref_array, config, g).magnitude(eta_from_schedule(config, uniform_schedule(8, 3)))
    p = tmp_path / "a.csv"
    write_ambiguity_csv(p, g, X, [0])
    lines = p.read_text().splitlines()
    assert lines[0] == "phi_T_deg,phi_prime_T_deg,dnu_Hz,abs_X,abs_X_dB"
    assert len(lines) == 1 + 4 * 3
