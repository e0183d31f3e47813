import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from qlt import (
    AgnMoments,
    ChannelSpec,
    MonteCarlo,
    NumericalFailureError,
    QuantizerSpec,
    chain_moments,
    quantize,
    tx_moments,
)

ONE_BIT_GAIN = 2.0 / math.sqrt(math.pi)
ONE_BIT_NOISE = 2.0 - 4.0 / math.pi


def mc_oracle_tx(bits, clip, pbar, n, seed):
    """Independent sampling oracle: quantization reimplemented from scratch."""
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(pbar / 2.0)
    u = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    nlev = 2**bits
    step = 2.0 * clip / (nlev - 1)

    def q(v):
        return -clip + np.clip(np.round((v + clip) / step), 0, nlev - 1) * step

    x = q(u.real) + 1j * q(u.imag)
    gain = float(np.mean((np.conj(x) * u).real)) / pbar
    noise = float(np.mean(np.abs(x - gain * u) ** 2)) / pbar
    return gain, noise


def test_identity_moments():
    m = tx_moments(QuantizerSpec.identity(), 1.0)
    assert m.gain == 1.0 and m.noise == 0.0


def test_one_bit_closed_form():
    m = tx_moments(QuantizerSpec.uniform_midrise(1, 1.0), 1.0)
    assert m.gain == pytest.approx(ONE_BIT_GAIN, abs=1e-12)
    assert m.noise == pytest.approx(ONE_BIT_NOISE, abs=1e-12)
    assert isinstance(m.gain, float)


def test_three_bit_against_sampling_oracle():
    m = tx_moments(QuantizerSpec.uniform_midrise(3, 2.6), 1.0)
    g, t = mc_oracle_tx(3, 2.6, 1.0, 10**7, seed=11)
    # three significant digits against the independent oracle
    assert m.gain == pytest.approx(g, rel=2e-3)
    assert m.noise == pytest.approx(t, rel=2e-3)


def test_deterministic_path_against_adaptive_quadrature():
    # cell sums cross-checked by generic adaptive integration per level cell
    q = QuantizerSpec.uniform_midrise(3, 2.6)
    sigma = math.sqrt(0.5)
    levels = q.levels_per_dim()
    thr = np.concatenate(([-12 * sigma], q.thresholds_per_dim(), [12 * sigma]))
    exu = sum(
        quad(lambda x, l=l: l * x * norm.pdf(x, scale=sigma), a, b, limit=200)[0]
        for l, a, b in zip(levels, thr[:-1], thr[1:])
    )
    eq2 = sum(
        quad(lambda x, l=l: l * l * norm.pdf(x, scale=sigma), a, b, limit=200)[0]
        for l, a, b in zip(levels, thr[:-1], thr[1:])
    )
    m = tx_moments(q, 1.0)
    assert m.gain == pytest.approx(2 * exu, abs=1e-9)
    assert m.noise == pytest.approx(2 * eq2 - (2 * exu) ** 2, abs=1e-9)


@pytest.mark.parametrize("bits,clip", [(1, 1.0), (2, 1.8), (3, 2.6)])
def test_quadrature_vs_montecarlo_within_3_sigma(bits, clip):
    q = QuantizerSpec.uniform_midrise(bits, clip)
    exact = tx_moments(q, 1.0)
    mc = tx_moments(q, 1.0, MonteCarlo(samples=400_000, seed=5))
    assert abs(mc.gain - exact.gain) < 3 * mc.gain_stderr
    assert abs(mc.noise - exact.noise) < 3 * mc.noise_stderr


def test_energy_identity():
    # E|Q(U)|^2 = (gain^2 + noise) * pbar, checked against direct cell sums
    for bits, clip, pbar in [(1, 1.0, 1.0), (3, 2.6, 1.0), (4, 3.0, 2.5)]:
        q = QuantizerSpec.uniform_midrise(bits, clip)
        m = tx_moments(q, pbar)
        sigma = math.sqrt(pbar / 2.0)
        levels = q.levels_per_dim()
        thr = np.concatenate(([-np.inf], q.thresholds_per_dim(), [np.inf]))
        prob = np.diff(norm.cdf(thr / sigma))
        eq2 = 2.0 * float(levels**2 @ prob)
        assert (abs(m.gain) ** 2 + m.noise) * pbar == pytest.approx(eq2, rel=1e-8)


def test_orthogonality_residual():
    # E[(Q - gain U)* U] = E[Q* U] - gain * pbar must vanish; evaluate the
    # cross term with the exact cell sums and, independently, by sampling
    from qlt.moments import _dim_qx_q2

    q = QuantizerSpec.uniform_midrise(2, 1.8)
    for pbar in (1.0, 3.7):
        m = tx_moments(q, pbar)
        exu, _ = _dim_qx_q2(q, math.sqrt(pbar / 2.0))
        assert abs(2.0 * exu - m.gain * pbar) < 1e-8 * pbar

    exact = tx_moments(q, 1.0)
    rng = np.random.default_rng(3)
    n = 10**6
    sigma = math.sqrt(0.5)
    u = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    x = np.asarray(quantize(q, u))
    resid = np.mean(np.conj(x - exact.gain * u) * u)
    assert abs(resid) < 5e-3  # ~3 sigma of the sampling noise


def test_scale_covariance():
    m1 = tx_moments(QuantizerSpec.uniform_midrise(3, 2.6), 1.0)
    m2 = tx_moments(QuantizerSpec.uniform_midrise(3, 5.2), 4.0)
    assert m1.gain == pytest.approx(m2.gain, abs=1e-12)
    assert m1.noise == pytest.approx(m2.noise, abs=1e-12)


def test_chain_identity_awgn_identity():
    m = chain_moments(
        QuantizerSpec.identity(), ChannelSpec.awgn(0.7), QuantizerSpec.identity(), 2.0
    )
    assert m.gain == pytest.approx(1.0)
    assert m.noise == pytest.approx(0.35)


def test_chain_awgn_shortcut_matches_tx_moments():
    # quantized DAC + AWGN + ideal ADC reduces to the tx moments with the
    # channel noise folded in
    for bits in range(1, 7):
        q = QuantizerSpec.uniform_midrise(bits, 0.8 * bits)
        base = tx_moments(q, 1.0)
        for s2 in (0.1, 1.0, 10.0):
            m = chain_moments(q, ChannelSpec.awgn(s2), QuantizerSpec.identity(), 1.0)
            assert abs(m.gain - base.gain) < 1e-6
            assert abs(m.noise - (base.noise + s2)) < 1e-6


def test_chain_one_bit_requantization_is_idempotent():
    q = QuantizerSpec.uniform_midrise(1, 1.0)
    m = chain_moments(q, ChannelSpec.awgn(0.0), q, 1.0)
    assert m.gain == pytest.approx(ONE_BIT_GAIN, abs=1e-12)
    assert m.noise == pytest.approx(ONE_BIT_NOISE, abs=1e-12)


@pytest.mark.parametrize(
    "qtx,qrx,s2",
    [
        (QuantizerSpec.uniform_midrise(2, 1.8), QuantizerSpec.uniform_midrise(3, 2.6), 0.5),
        (QuantizerSpec.identity(), QuantizerSpec.uniform_midrise(2, 1.8), 0.8),
        (QuantizerSpec.uniform_midrise(3, 2.6), QuantizerSpec.identity(), 0.3),
        (QuantizerSpec.custom_levels([-2.0, -0.5, 0.7, 2.2]), QuantizerSpec.uniform_midrise(2, 2.0), 0.4),
    ],
)
def test_chain_exact_vs_montecarlo(qtx, qrx, s2):
    ch = ChannelSpec.awgn(s2)
    exact = chain_moments(qtx, ch, qrx, 1.0)
    mc = chain_moments(qtx, ch, qrx, 1.0, MonteCarlo(samples=400_000, seed=9))
    assert abs(mc.gain - exact.gain) < 4 * mc.gain_stderr
    assert abs(mc.noise - exact.noise) < 4 * mc.noise_stderr


def test_custom_channel_phase_rotation():
    # a fixed phase rotation makes the decomposition gain complex; with the
    # conjugate-output gain convention the residual picks up a cos(2 theta)
    # misalignment term:  noise = tau + 2 g^2 (1 - cos 2 theta)
    theta = 0.6
    ch = ChannelSpec.custom(lambda x, xi: x * np.exp(1j * theta))
    q = QuantizerSpec.uniform_midrise(2, 1.8)
    m = chain_moments(q, ch, QuantizerSpec.identity(), 1.0)
    base = tx_moments(q, 1.0)
    g2 = base.gain**2
    assert m.gain == pytest.approx(base.gain * np.exp(-1j * theta), abs=1e-9)
    assert m.noise == pytest.approx(
        base.noise + 2.0 * g2 * (1.0 - math.cos(2 * theta)), abs=1e-9
    )
    mc = chain_moments(q, ch, QuantizerSpec.identity(), 1.0, MonteCarlo(samples=300_000, seed=2))
    assert abs(mc.gain - m.gain) < 5 * mc.gain_stderr


def test_custom_channel_smooth_map_gh_grid():
    # identity DAC + smooth compressive map: Gauss-Hermite path vs sampling
    ch = ChannelSpec.custom(lambda x, xi: np.tanh(x.real) + 1j * np.tanh(x.imag))
    m = chain_moments(QuantizerSpec.identity(), ch, QuantizerSpec.identity(), 1.0)
    mc = chain_moments(
        QuantizerSpec.identity(), ch, QuantizerSpec.identity(), 1.0,
        MonteCarlo(samples=400_000, seed=4),
    )
    assert abs(m.gain - mc.gain) < 4 * mc.gain_stderr
    assert abs(m.noise - mc.noise) < 4 * mc.noise_stderr


def test_custom_channel_with_noise_needs_sampling():
    ch = ChannelSpec.custom(
        lambda x, xi: x + xi, noise_sampler=lambda rng, n: rng.standard_normal(n) + 0j
    )
    with pytest.raises(ValueError, match="MonteCarlo"):
        chain_moments(QuantizerSpec.identity(), ch, QuantizerSpec.identity(), 1.0)
    m = chain_moments(
        QuantizerSpec.identity(), ch, QuantizerSpec.identity(), 1.0,
        MonteCarlo(samples=200_000, seed=1),
    )
    assert m.noise == pytest.approx(1.0, rel=0.05)  # real-only unit-variance noise


def test_pathological_levels_fail_loudly():
    q = QuantizerSpec.custom_levels([-1e300, 1e300])
    with pytest.raises(NumericalFailureError):
        tx_moments(q, 1.0)


def test_invalid_power_rejected():
    with pytest.raises(ValueError):
        tx_moments(QuantizerSpec.identity(), 0.0)
    with pytest.raises(NumericalFailureError):
        AgnMoments(gain=1.0, noise=-1.0, input_power=1.0)
