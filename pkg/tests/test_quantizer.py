import numpy as np
import pytest

from qlt import (
    QuantizerSpec,
    UnboundedConstellationError,
    constellation_of,
    quantize,
    quantizer_from_json,
    quantizer_to_json,
)


def test_identity_passthrough():
    q = QuantizerSpec.identity()
    assert quantize(q, 0.3 - 0.7j) == 0.3 - 0.7j


def test_one_bit_is_scaled_sign():
    q = QuantizerSpec.uniform_midrise(1, 1.0)
    assert quantize(q, 0.3 - 0.7j) == 1.0 - 1.0j
    assert quantize(q, -2.0 + 0.0j) == -1.0 + 1.0j  # tie at 0 rounds up


def test_two_bit_saturation():
    # levels per dimension are {-3, -1, 1, 3}; nearest-level with clipping
    q = QuantizerSpec.uniform_midrise(2, 3.0)
    assert quantize(q, 10.0 + 0.1j) == 3.0 + 1.0j
    levels = q.levels_per_dim()
    np.testing.assert_allclose(levels, [-3.0, -1.0, 1.0, 3.0])


def test_midrise_levels_nearest_rule():
    q = QuantizerSpec.uniform_midrise(3, 2.6)
    levels = q.levels_per_dim()
    rng = np.random.default_rng(0)
    x = rng.uniform(-5, 5, 4000)
    got = np.asarray(quantize(q, x + 0j)).real
    brute = levels[np.argmin(np.abs(x[:, None] - levels[None, :]), axis=1)]
    np.testing.assert_allclose(got, brute)


def test_constellation_one_bit():
    c = constellation_of(QuantizerSpec.uniform_midrise(1, 1.0))
    assert c.size == 4
    np.testing.assert_allclose(sorted(c.energies), [2.0] * 4)


def test_constellation_two_bit_energies():
    c = constellation_of(QuantizerSpec.uniform_midrise(2, 3.0))
    assert c.size == 16
    # direct enumeration oracle over {+-1, +-3}^2
    oracle = sorted(a * a + b * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3))
    assert sorted(c.energies) == oracle
    assert c.mean_energy == pytest.approx(10.0)
    assert c.min_energy <= c.mean_energy <= c.max_energy


def test_constellation_degenerate_single_level():
    c = constellation_of(QuantizerSpec.custom_levels([0.0]))
    assert c.size == 1
    assert c.min_energy == c.max_energy == 0.0


def test_identity_has_no_constellation():
    with pytest.raises(UnboundedConstellationError):
        constellation_of(QuantizerSpec.identity())


@pytest.mark.parametrize(
    "q",
    [
        QuantizerSpec.uniform_midrise(1, 1.0),
        QuantizerSpec.uniform_midrise(3, 2.6),
        QuantizerSpec.custom_levels([-2.0, -0.3, 0.1, 1.7]),
    ],
)
def test_idempotence_and_symmetry(q):
    rng = np.random.default_rng(7)
    u = rng.standard_normal(2000) * 2 + 1j * rng.standard_normal(2000) * 2
    once = np.asarray(quantize(q, u))
    np.testing.assert_array_equal(np.asarray(quantize(q, once)), once)
    if q.kind == "uniform_midrise":
        np.testing.assert_array_equal(np.asarray(quantize(q, -u)), -once)
        np.testing.assert_array_equal(np.asarray(quantize(q, u.conj())), once.conj())


def test_boundedness():
    q = QuantizerSpec.uniform_midrise(4, 1.3)
    rng = np.random.default_rng(3)
    u = 100 * (rng.standard_normal(1000) + 1j * rng.standard_normal(1000))
    out = np.asarray(quantize(q, u))
    assert np.abs(out.real).max() <= 1.3 + 1e-15
    assert np.abs(out.imag).max() <= 1.3 + 1e-15


@pytest.mark.parametrize("bits,clip", [(1, 1.0), (2, 3.0), (3, 2.6)])
def test_constellation_is_image_of_quantize(bits, clip):
    q = QuantizerSpec.uniform_midrise(bits, clip)
    grid = np.linspace(-2 * clip, 2 * clip, 257)
    pts = (grid[:, None] + 1j * grid[None, :]).ravel()
    image = set(np.round(np.asarray(quantize(q, pts)), 12).tolist())
    expected = set(np.round(constellation_of(q).points, 12).tolist())
    assert image == expected


def test_duplicate_levels_rejected():
    with pytest.raises(ValueError):
        QuantizerSpec.custom_levels([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        QuantizerSpec.custom_levels([1.0, -1.0])


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        QuantizerSpec.uniform_midrise(0, 1.0)
    with pytest.raises(ValueError):
        QuantizerSpec.uniform_midrise(3, -1.0)
    with pytest.raises(ValueError):
        QuantizerSpec.custom_levels([])


def test_json_round_trip():
    specs = [
        QuantizerSpec.identity(),
        QuantizerSpec.uniform_midrise(3, 2.6),
        QuantizerSpec.custom_levels([-1.0, 0.5]),
    ]
    for q in specs:
        assert quantizer_from_json(quantizer_to_json(q)) == q
    assert quantizer_from_json({"kind": "uniform_midrise", "bits": 3, "clip": 2.6}) == specs[1]
    with pytest.raises(ValueError):
        quantizer_from_json({"kind": "uniform_midrise", "bits": 3, "clip": 2.6, "junk": 1})
    with pytest.raises(ValueError):
        quantizer_from_json({"kind": "nope"})
