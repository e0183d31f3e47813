"""Closed-form spectrum and achievable-rate predictions.

All rates are reported in bits per symbol (log base 2); the out-of-band
feasibility floor, power-allocation inversion, and the Kullback-Leibler
shaping penalty follow the conventions documented on each operation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FeasibilityError, InfiniteRateError
from .moments import AgnMoments

#: Absolute slack used in feasibility boundary comparisons, absorbing
#: float round-off of share -> power -> share round trips.
FEASIBILITY_SLACK = 1e-12

_SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class SubbandPlan:
    """Bandwidth fractions and per-sub-band symbol energies.

    fractions must be positive and sum to one; powers are non-negative with a
    positive weighted mean ``mean_power = sum(fractions * powers)``.
    """

    fractions: tuple[float, ...]
    powers: tuple[float, ...]

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=float)
        pw = np.asarray(self.powers, dtype=float)
        if fr.ndim != 1 or fr.size == 0 or fr.shape != pw.shape:
            raise ValueError("fractions and powers must be equal-length 1-D sequences")
        if np.any(fr <= 0):
            raise ValueError("all bandwidth fractions must be positive")
        if abs(fr.sum() - 1.0) > 1e-12:
            raise ValueError("bandwidth fractions must sum to 1")
        if np.any(pw < 0):
            raise ValueError("powers must be non-negative")
        if float(fr @ pw) <= 0:
            raise ValueError("all-zero power allocation is rejected")
        object.__setattr__(self, "fractions", tuple(float(v) for v in fr))
        object.__setattr__(self, "powers", tuple(float(v) for v in pw))

    @property
    def mean_power(self) -> float:
        return float(np.dot(self.fractions, self.powers))

    @property
    def num_bands(self) -> int:
        return len(self.fractions)


@dataclass(frozen=True)
class SpectrumReport:
    """Predicted transmit spectrum: per-band energy per sample, total energy,
    power shares and the per-band feasibility floors."""

    band_energy: tuple[float, ...]
    total_energy: float
    band_share: tuple[float, ...]
    min_share: tuple[float, ...]


@dataclass(frozen=True)
class RateReport:
    """Achievable-rate lower bound in bits/symbol with its per-band split."""

    bits_per_symbol: float
    band_bits: tuple[float, ...]
    shaping_loss_bits: float
    regime: str  # "awgn" | "noise_free" | "general_chain"


def _floats(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _check_power_match(m: AgnMoments, pbar: float):
    if not math.isclose(m.input_power, pbar, rel_tol=1e-9, abs_tol=0.0):
        raise ContractError(
            f"moments computed at input power {m.input_power}, plan has {pbar}"
        )


def share_floor(fractions, m: AgnMoments) -> np.ndarray:
    """Per-band minimum achievable power share, fractions * noise / (|gain|^2 + noise).

    The quantization noise is white across the band, so no sub-band's output
    share can be pushed below this floor by any power allocation.
    """
    fr = np.asarray(fractions, dtype=float)
    g2 = abs(m.gain) ** 2
    return fr * m.noise / (g2 + m.noise)


def predict_spectrum(plan: SubbandPlan, m_tx: AgnMoments) -> SpectrumReport:
    """Asymptotic per-band transmitted energy for a given plan and DAC."""
    _check_power_match(m_tx, plan.mean_power)
    fr = np.asarray(plan.fractions)
    pw = np.asarray(plan.powers)
    g2 = abs(m_tx.gain) ** 2
    pbar = plan.mean_power
    s = fr * (g2 * pw + m_tx.noise * pbar)
    s_tot = (g2 + m_tx.noise) * pbar
    return SpectrumReport(
        band_energy=_floats(s),
        total_energy=float(s_tot),
        band_share=_floats(s / s_tot),
        min_share=_floats(share_floor(fr, m_tx)),
    )


def _check_simplex(nu) -> np.ndarray:
    arr = np.asarray(nu, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("share vector must be a non-empty 1-D sequence")
    if np.any(arr < -FEASIBILITY_SLACK):
        raise ValueError("shares must be non-negative")
    if abs(arr.sum() - 1.0) > _SIMPLEX_TOL:
        raise ValueError(f"shares must sum to 1 (got {arr.sum()})")
    return arr


def feasible_fractions(fractions, m_tx: AgnMoments, nu) -> bool:
    """True iff the share vector is achievable by some power allocation."""
    arr = _check_simplex(nu)
    floor = share_floor(fractions, m_tx)
    return bool(np.all(arr >= floor - FEASIBILITY_SLACK))


def powers_from_fractions(fractions, m_tx: AgnMoments, pbar: float, nu) -> np.ndarray:
    """Invert a feasible share vector into per-band symbol energies."""
    arr = _check_simplex(nu)
    fr = np.asarray(fractions, dtype=float)
    floor = share_floor(fr, m_tx)
    bad = np.where(arr < floor - FEASIBILITY_SLACK)[0]
    if bad.size:
        b = int(bad[0])
        raise FeasibilityError(band=b, floor=float(floor[b]), value=float(arr[b]))
    g2 = abs(m_tx.gain) ** 2
    if g2 == 0:
        raise ValueError("zero-gain chain cannot be inverted")
    powers = (arr / fr * (g2 + m_tx.noise) - m_tx.noise) * pbar / g2
    powers[(powers < 0) & (powers > -1e-9 * pbar)] = 0.0
    return powers


def kl_divergence(delta, nu) -> float:
    """D(delta || nu) in bits, with 0 log 0 = 0 and a zero share under a
    positive fraction yielding +inf."""
    d = _check_simplex(delta)
    n = _check_simplex(nu)
    if d.shape != n.shape:
        raise ValueError("distributions must have equal length")
    total = 0.0
    for dm, nm in zip(d, n):
        if dm == 0.0:
            continue
        if nm <= 0.0:
            return math.inf
        total += dm * math.log2(dm / nm)
    return float(total)


def linear_rate(plan: SubbandPlan, m_rx: AgnMoments) -> RateReport:
    """Rate lower bound of the linear transceiver given full-chain moments."""
    _check_power_match(m_rx, plan.mean_power)
    if m_rx.noise == 0.0:
        raise InfiniteRateError("noiseless identity chain: rate is unbounded")
    fr = np.asarray(plan.fractions)
    pw = np.asarray(plan.powers)
    g2 = abs(m_rx.gain) ** 2
    terms = fr * np.log2(1.0 + g2 * pw / (m_rx.noise * plan.mean_power))
    return RateReport(
        bits_per_symbol=float(terms.sum()),
        band_bits=_floats(terms),
        shaping_loss_bits=0.0,
        regime="general_chain",
    )


def awgn_linear_rate(plan: SubbandPlan, m_tx: AgnMoments, noise_power: float) -> RateReport:
    """Rate lower bound over an AWGN channel with an unquantized receiver.

    Uses the shortcut that the chain moments equal the transmit moments with
    noise_power / mean_power added to the normalized noise variance.
    """
    if noise_power < 0:
        raise ValueError("noise_power must be >= 0")
    _check_power_match(m_tx, plan.mean_power)
    eff = AgnMoments(
        gain=m_tx.gain,
        noise=m_tx.noise + noise_power / plan.mean_power,
        input_power=plan.mean_power,
    )
    rep = linear_rate(plan, eff)
    return RateReport(
        bits_per_symbol=rep.bits_per_symbol,
        band_bits=rep.band_bits,
        shaping_loss_bits=0.0,
        regime="awgn",
    )


def awgn_rate_at_transmit_snr(plan: SubbandPlan, m_tx: AgnMoments, snr: float) -> RateReport:
    """AWGN rate with the noise power referenced to the realized transmit
    power ``(|gain|^2 + noise) * mean_power``.

    Different resolutions radiate different powers at a fixed loading factor;
    pinning the transmit-side SNR makes their rate curves comparable (and
    reduces to ``noise_power = mean_power / snr`` for an ideal DAC).
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    s_tot = (abs(m_tx.gain) ** 2 + m_tx.noise) * plan.mean_power
    return awgn_linear_rate(plan, m_tx, s_tot / snr)


def noise_free_rate(fractions, m_tx: AgnMoments, nu) -> RateReport:
    """Noise-free rate at a target share vector: the flat-allocation rate
    log2(1 + |gain|^2/noise) minus the shaping penalty D(fractions || nu)."""
    if m_tx.noise == 0.0:
        raise InfiniteRateError("identity DAC with no noise: rate is unbounded")
    arr = _check_simplex(nu)
    fr = np.asarray(fractions, dtype=float)
    floor = share_floor(fr, m_tx)
    bad = np.where(arr < floor - FEASIBILITY_SLACK)[0]
    if bad.size:
        b = int(bad[0])
        raise FeasibilityError(band=b, floor=float(floor[b]), value=float(arr[b]))
    g2 = abs(m_tx.gain) ** 2
    kl = kl_divergence(fr, arr)
    total = math.log2(1.0 + g2 / m_tx.noise) - kl
    # per-band split via the identity with the equivalent power allocation
    ratio = np.maximum(arr * (g2 + m_tx.noise) / (fr * m_tx.noise), 1.0)
    terms = fr * np.log2(ratio)
    return RateReport(
        bits_per_symbol=float(total),
        band_bits=_floats(terms),
        shaping_loss_bits=float(kl),
        regime="noise_free",
    )
