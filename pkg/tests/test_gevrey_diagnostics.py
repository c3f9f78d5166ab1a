import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rotpe import fields
from rotpe.gevrey_diagnostics import (
    NormSpec,
    analytic_norm,
    baroclinic_envelope,
    estimate_radius,
    euler_growth_bound,
    initial_size,
    predicted_lifespans,
    predicted_tau_local,
    seminorm,
    sobolev_norm,
)
from rotpe.projections import barotropic, baroclinic
from rotpe.spectral_core import get_grid

seeds = st.integers(0, 2**32 - 1)


def direct_norm(f, r, tau):
    """Weighted sum written out mode by mode."""
    N = f.shape[-1]
    k = np.fft.fftfreq(N, 1.0 / N)
    total = 0.0
    for idx in np.argwhere(np.abs(f) > 0):
        kk = math.sqrt(sum(k[i] ** 2 for i in idx[-3:]))
        w = 1.0 + (kk ** (2 * r) if r else 1.0) * math.exp(2 * tau * kk)
        total += w * abs(f[tuple(idx)]) ** 2
    return math.sqrt(total)


def unit_cosine(N=8):
    """Real mode pair at |k| = 1 with unit L2 norm."""
    f = np.zeros((N, N, N), complex)
    f[1, 0, 0] = f[-1, 0, 0] = 1 / math.sqrt(2)
    return f


def test_sobolev_examples():
    f = unit_cosine()
    assert sobolev_norm(f, 2) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert sobolev_norm(np.zeros((8, 8, 8)), 2) == 0.0
    g = fields.random_scalar(8, 2, np.random.default_rng(0))
    assert sobolev_norm(g, 0) == pytest.approx(math.sqrt(2) * np.linalg.norm(g), rel=1e-14)


def test_analytic_examples():
    f = np.zeros((8, 8, 8), complex)
    f[0, 1, 0] = 1.0
    assert analytic_norm(f, NormSpec(2, 0.1)) == pytest.approx(math.sqrt(1 + math.exp(0.2)), rel=1e-15)
    assert analytic_norm(np.zeros((8, 8, 8)), NormSpec(2, 0.1)) == 0.0
    g = fields.random_scalar(16, 5, np.random.default_rng(1))
    assert analytic_norm(g, NormSpec(3, 0)) == pytest.approx(sobolev_norm(g, 3), rel=1e-15)


@given(seeds, st.floats(0, 4), st.floats(0, 2))
def test_analytic_norm_matches_direct_sum(seed, r, tau):
    f = fields.random_scalar(8, 2, np.random.default_rng(seed))
    assert analytic_norm(f, NormSpec(r, tau)) == pytest.approx(direct_norm(f, r, tau), rel=1e-12)


def test_analytic_norm_survives_large_weights():
    f = np.zeros((64, 64, 64), complex)
    f[21, 21, 21] = 1e-200
    val = analytic_norm(f, NormSpec(3, 30.0))
    expected = 0.5 * (2 * 3 * math.log(math.sqrt(3) * 21) + 2 * 30 * math.sqrt(3) * 21) + math.log(1e-200)
    assert math.log(val) == pytest.approx(expected, rel=1e-12)


@given(seeds, st.floats(0, 3), st.floats(0, 3), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_r_and_tau(seed, r1, r2, t1, t2):
    f = fields.random_velocity(8, 2, np.random.default_rng(seed))
    lo_r, hi_r = sorted((r1, r2))
    lo_t, hi_t = sorted((t1, t2))
    a = analytic_norm(f, NormSpec(lo_r, lo_t))
    assert a <= analytic_norm(f, NormSpec(hi_r, lo_t)) * (1 + 1e-14)
    assert a <= analytic_norm(f, NormSpec(lo_r, hi_t)) * (1 + 1e-14)


@given(seeds, st.floats(0, 4), st.floats(0, 1))
def test_pythagorean_split(seed, r, tau):
    v = fields.random_velocity(16, 4, np.random.default_rng(seed))
    spec = NormSpec(r, tau)
    full = analytic_norm(v, spec) ** 2
    parts = analytic_norm(barotropic(v), spec, ndim=2) ** 2 + analytic_norm(baroclinic(v), spec) ** 2
    assert full == pytest.approx(parts, rel=1e-13)
    # ||e^{tau A} f||^2 = ||A^r e^{tau A} f||^2 + ||f||^2
    assert full == pytest.approx(seminorm(v, r, tau) ** 2 + np.linalg.norm(v) ** 2, rel=1e-13)


def test_normspec_validation():
    for bad in ((-1, 0), (1, -0.1)):
        with pytest.raises(ValueError):
            NormSpec(*bad)
    with pytest.raises(ValueError):
        NormSpec(1, 0, s=2)


def exponential_spectrum(N, tau, scale=1.0):
    g = get_grid(N)
    return scale * np.exp(-tau * g.kmag) * g.mask


def test_radius_exact_on_pure_exponential():
    est = estimate_radius(exponential_spectrum(64, 0.5))
    assert est.tau_hat == pytest.approx(0.5, abs=1e-6)
    assert est.fit_residual < 1e-10


@given(st.floats(0.05, 1.5), st.floats(1e-3, 1e3))
def test_radius_scale_invariant(tau, c):
    f = exponential_spectrum(32, tau)
    assert estimate_radius(c * f).tau_hat == pytest.approx(estimate_radius(f).tau_hat, abs=1e-9)


def test_radius_white_and_compact_spectra():
    g = get_grid(32)
    assert estimate_radius(g.mask.astype(complex)).tau_hat == 0.0
    f = exponential_spectrum(32, 0.7)
    f[g.kmag > 8.49] = 0
    est = estimate_radius(f)
    assert est.shells_used == 5           # shells 4..8
    assert est.tau_hat == pytest.approx(0.7, abs=1e-6)
    with pytest.raises(ValueError):
        estimate_radius(np.where(g.kmag < 5.4, f, 0))


def test_local_schedule():
    assert predicted_tau_local(0.7, 3.0, 2.0, 1.5, 0.0) == 0.7
    assert predicted_tau_local(1.0, 0.0, 2.0, 1.0, 0.25) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        predicted_tau_local(1.0, 0.0, 2.0, 0.0, 0.1)


@given(st.floats(0.01, 5), st.floats(0, 10), st.floats(0.01, 10))
def test_local_lifespan_consistency(tau0, M0, Cr):
    T = predicted_lifespans("local", tau0=tau0, M0=M0, Cr=Cr)
    assert predicted_tau_local(tau0, M0, 3.0, Cr, T) == pytest.approx(T, rel=1e-12)


def test_local_lifespan_value():
    assert predicted_lifespans("local", tau0=1.0, M0=0.0, Cr=1.0) == pytest.approx(1 / 3)


def test_initial_size():
    v = fields.random_velocity(16, 3, np.random.default_rng(2))
    M0 = initial_size(barotropic(v), baroclinic(v), 3.0, 0.2)
    assert M0 == pytest.approx(analytic_norm(v, NormSpec(3.0, 0.2)) ** 2, rel=1e-13)


def small_baroclinic_oracle(tau0, eps, C_M, C_r):
    """Cumulative trapezoid of exp(K(s)) on a fine grid, inverted by interpolation."""
    t = np.linspace(0, 2, 400001)
    ke = np.exp(np.exp(C_r * t) * math.log(C_M))
    cum = integrate.cumulative_trapezoid(np.exp(ke), t, initial=0.0)
    return float(np.interp(tau0 / (2 * eps), cum, t))


@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-6])
def test_small_baroclinic_lifespan_against_trapezoid(eps):
    T = predicted_lifespans("small-baroclinic", tau0=1.0, eps=eps, C_M=2.0, C_r=1.0)
    assert T == pytest.approx(small_baroclinic_oracle(1.0, eps, 2.0, 1.0), rel=1e-6)


def test_small_baroclinic_monotone():
    Ts = [predicted_lifespans("small-baroclinic", tau0=1.0, eps=e) for e in (1e-1, 5e-2, 2.5e-2, 1e-4)]
    assert all(a < b for a, b in zip(Ts, Ts[1:]))


def test_fast_rotation_lifespan_closed_form_and_monotone():
    for Om in (1e3, 1e6, 1e12):
        T = predicted_lifespans("fast-rotation", Omega0=Om, C_tau0=1.0, C_M=2.0, C_r=1.0)
        closed = math.log(math.log(math.log(Om)) / math.log(2.0))
        assert T == pytest.approx(closed, rel=1e-10)
        assert predicted_lifespans("fast-rotation", Omega0=Om**2, C_tau0=1.0) > T


def test_lifespan_errors():
    with pytest.raises(ValueError):
        predicted_lifespans("fast-rotation", Omega0=0.5)
    with pytest.raises(ValueError):
        # condition already met at t = 0
        predicted_lifespans("fast-rotation", Omega0=5.0, C_M=2.0)
    with pytest.raises(ValueError):
        predicted_lifespans("nonsense", tau0=1)


def test_growth_bounds():
    assert euler_growth_bound(1.0, 1.0, 0.0) == pytest.approx(1 + math.e)
    assert baroclinic_envelope(2.0, 2.0, 1.0, 0.0) == pytest.approx(2.0 * math.exp(2.0))
    vals = [baroclinic_envelope(1.0, 2.0, 1.0, t) for t in np.linspace(0, 1.5, 7)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert baroclinic_envelope(1.0, 2.0, 1.0, 10.0) == math.inf
