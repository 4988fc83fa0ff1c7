import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import am_fm_mixture, central, tone_mixture
from rlmd_diag.hilbert import Signal, SignalSizeError
from rlmd_diag.rlmd import (
    MAXIMUM,
    MINIMUM,
    ExtremaSet,
    MonotoneResidue,
    NegligibleResidue,
    RLMDConfig,
    decompose,
    find_extrema,
    local_mean_magnitude,
    mirror_extend,
    moving_average,
    odd,
    sift_objective,
    sift_pf,
    subset_size,
)


def brute_extrema(x):
    """Plain loop version of the strict-extremum rule, plateaus at their midpoint."""
    out = []
    i = 1
    n = len(x)
    while i < n - 1:
        j = i
        while j + 1 < n and x[j + 1] == x[i]:
            j += 1
        if j == n - 1:
            break
        left, right = x[i - 1], x[j + 1]
        if left < x[i] > right:
            out.append(((i + j) // 2, MAXIMUM))
        elif left > x[i] < right:
            out.append(((i + j) // 2, MINIMUM))
        i = j + 1
    return out


def steps_fixture(steps):
    """ExtremaSet whose step sizes (diff + 1) are ``steps``."""
    idx = np.concatenate(([0], np.cumsum(np.asarray(steps) - 1)))
    kinds = np.where(np.arange(idx.size) % 2 == 0, MAXIMUM, MINIMUM).astype(np.int8)
    return ExtremaSet(idx, kinds, kinds.astype(float))


class TestFindExtrema:
    def test_simple_zigzag(self):
        e = find_extrema(np.array([0, 2, 1, 3, 0, 1.0]))
        assert e.indices.tolist() == [1, 2, 3, 4]
        assert e.kinds.tolist() == [1, -1, 1, -1]
        assert e.values.tolist() == [2, 1, 3, 0]

    def test_plateau_midpoint_rounds_down(self):
        e = find_extrema(np.array([0, 1, 1, 1, 1, 0, 2, 0.0]))
        assert e.indices.tolist() == [2, 5, 6]

    def test_shoulder_is_not_an_extremum(self):
        e = find_extrema(np.array([0, 1, 1, 2, 0, 3, 1.0]))
        assert e.indices.tolist() == [3, 4, 5]

    def test_monotone_raises(self):
        with pytest.raises(MonotoneResidue):
            find_extrema(np.arange(10.0))
        with pytest.raises(MonotoneResidue):
            find_extrema(np.array([0, 1, 0.0]))

    def test_too_short(self):
        with pytest.raises(SignalSizeError):
            find_extrema(np.array([1.0, 2.0]))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-3, 3), min_size=3, max_size=60))
    def test_matches_brute_force(self, values):
        x = np.array(values, dtype=float)
        expected = brute_extrema(x)
        if len(expected) < 2:
            with pytest.raises(MonotoneResidue):
                find_extrema(x)
            return
        e = find_extrema(x)
        assert list(zip(e.indices.tolist(), e.kinds.tolist())) == expected
        assert np.all(e.kinds[1:] != e.kinds[:-1])


class TestMirrorExtend:
    def test_reflects_about_boundary_extrema(self):
        t = np.arange(400) / 400
        x = np.sin(2 * np.pi * 5 * t + 0.3)
        e = find_extrema(x)
        ext = mirror_extend(x, e, n_pairs=2)
        n = x.size
        assert np.array_equal(ext.samples[ext.offset : ext.offset + n], x)
        assert len(ext.extrema) == len(e) + 8
        inner = ext.extrema.indices[4:-4] - ext.offset
        assert np.array_equal(inner, e.indices)
        # left mirror images sit symmetric about the first extremum
        c = e.indices[0] + ext.offset
        mirrored = 2 * c - ext.extrema.indices[:4]
        assert np.array_equal(np.sort(mirrored), e.indices[1:5] + ext.offset)
        assert np.all(ext.extrema.kinds[1:] != ext.extrema.kinds[:-1])

    def test_overshooting_end_becomes_extremum(self):
        # the last sample swings past the final maximum's opposite, so it is promoted
        x = np.array([0.0, 1.0, -0.2, 0.5, -0.1, 0.4, -2.0])
        e = find_extrema(x)
        ext = mirror_extend(x, e, n_pairs=1)
        last = ext.extrema.indices - ext.offset
        assert 6 in last.tolist()
        k = last.tolist().index(6)
        assert ext.extrema.kinds[k] == MINIMUM
        assert ext.extrema.values[k] == -2.0
        assert np.all(ext.extrema.kinds[1:] != ext.extrema.kinds[:-1])

    def test_tone_extension_keeps_spacing(self):
        t = np.arange(1000) / 1000
        x = np.sin(2 * np.pi * 5 * t)
        e = find_extrema(x)
        gaps = np.diff(mirror_extend(x, e, n_pairs=2).extrema.indices)
        assert np.max(np.abs(gaps - np.median(np.diff(e.indices)))) <= 1

    def test_triangle_wave_continues_periodically(self):
        period = np.concatenate((np.arange(10.0), np.arange(10.0, 0, -1)))
        x = np.tile(period, 6)[5:-5]
        ext = mirror_extend(x, find_extrema(x), n_pairs=2)
        y = ext.samples
        assert np.array_equal(y[ext.offset : ext.offset + x.size], x)
        assert np.array_equal(y[20:], y[:-20])

    def test_clamps_to_available_extrema(self):
        x = np.array([0.5, 1, 0, 1, 0.5])
        e = find_extrema(x)
        ext = mirror_extend(x, e, n_pairs=4)
        assert len(ext.extrema) == len(e) + 2 * (len(e) - 1)

    def test_rejects_bad_arguments(self):
        x = np.array([0, 1, 0, 1, 0.0])
        with pytest.raises(ValueError):
            mirror_extend(x, find_extrema(x), n_pairs=0)


class TestSubsetSize:
    def test_hand_oracle_three_bins(self):
        # steps {3, 5, 7, 5} into 3 bins: centres 11/3, 5, 19/3 with p = 1/4, 1/2, 1/4
        spec = subset_size(steps_fixture([3, 5, 7, 5]), bin_count=3)
        assert spec.bin_count == 3
        assert spec.mu_s == pytest.approx(5.0)
        assert spec.delta_s == pytest.approx(math.sqrt(8 / 9))
        assert spec.subset_size == 9

    def test_equal_steps(self):
        spec = subset_size(steps_fixture([5, 5, 5, 5]))
        assert (spec.subset_size, spec.bin_count, spec.delta_s) == (5, 1, 0.0)

    def test_five_hz_at_one_khz(self):
        t = np.arange(2000) / 1000
        spec = subset_size(find_extrema(np.cos(2 * np.pi * 5 * t + 0.1)))
        assert spec.subset_size == 101

    def test_default_bin_count(self):
        spec = subset_size(steps_fixture([3, 4, 5, 6, 7, 8, 9, 10, 11, 12]))
        assert spec.bin_count == 4

    def test_deterministic(self):
        e = steps_fixture([3, 9, 4, 12, 5, 5, 7])
        assert subset_size(e) == subset_size(e)

    @pytest.mark.parametrize(
        "value, expected", [(0.2, 3), (3.0, 3), (4.0, 5), (4.4, 5), (4.5, 5), (5.5, 7), (6.49, 7), (7.829, 9)]
    )
    def test_odd(self, value, expected):
        assert odd(value) == expected


class TestLocalMeanMagnitude:
    def test_piecewise_constant_lines(self):
        x = np.array([0, 2, 0, -2, 0, 4, 0.0])
        e = ExtremaSet(np.array([1, 3, 5]), np.array([1, -1, 1], dtype=np.int8), np.array([2, -2, 4.0]))
        mean, mag = local_mean_magnitude(x, e)
        assert mean.tolist() == [0, 0, 0, 1, 1, 1, 1]
        assert mag.tolist() == [2, 2, 2, 3, 3, 3, 3]

    def test_tone_with_offset(self):
        t = np.arange(2000) / 1000
        x = 1.5 * np.cos(2 * np.pi * 20 * t) + 0.7
        mean, mag = local_mean_magnitude(x, find_extrema(x))
        assert np.allclose(mean, 0.7) and np.allclose(mag, 1.5)

    def test_am_law_sampled_per_segment(self):
        # each segment holds the AM law near its midpoint (a0 averages the two bounding extrema)
        t = np.arange(2000) / 1000
        am = 1 + 0.3 * np.cos(2 * np.pi * 2 * t)
        x = am * np.cos(2 * np.pi * 20 * t)
        e = find_extrema(x)
        _, mag = local_mean_magnitude(x, e)
        mid = (e.indices[:-1] + e.indices[1:]) // 2
        assert np.max(np.abs(mag[e.indices[:-1]] - am[mid]) / am[mid]) < 0.02

    def test_floor_applies(self):
        x = np.array([0, 1, 1, 1, 0.0])
        e = ExtremaSet(np.array([1, 3]), np.array([1, 1], dtype=np.int8), np.array([1.0, 1.0]))
        _, mag = local_mean_magnitude(x, e, floor=1e-6)
        assert np.all(mag == 1e-6)


def brute_moving_average(x, k):
    h = k // 2
    padded = np.concatenate((np.full(h, x[0]), x, np.full(h, x[-1])))
    return np.array([padded[i : i + k].mean() for i in range(x.size)])


class TestMovingAverage:
    def test_single_pass_impulse(self):
        x = np.zeros(11)
        x[5] = 3.0
        out = moving_average(x, 3, max_passes=1)
        assert np.allclose(out, brute_moving_average(x, 3))
        assert np.allclose(out[4:7], 1.0)

    def test_matches_brute_force_on_smooth_input(self):
        x = np.sin(np.linspace(0, 3, 50)) + np.linspace(0, 1, 50) ** 2
        assert np.allclose(moving_average(x, 7), brute_moving_average(x, 7), atol=1e-12)

    def test_repeats_while_flat_pairs_remain(self):
        x = np.repeat([0.0, 1.0, 3.0, 2.0], 10)
        out = moving_average(x, 5)
        ref = x
        for passes in range(1, 11):
            ref = brute_moving_average(ref, 5)
            if not np.any(np.abs(np.diff(ref)) <= 1e-12 * np.max(np.abs(ref))):
                break
        assert passes > 1
        assert np.allclose(out, ref, atol=1e-12)

    def test_rejects_even_width(self):
        with pytest.raises(ValueError):
            moving_average(np.ones(10), 4)

    def test_width_clamped_to_length(self):
        out = moving_average(np.arange(6.0), 31, max_passes=1)
        assert np.allclose(out, brute_moving_average(np.arange(6.0), 5))


class TestSiftObjective:
    def test_unit_envelope_scores_zero(self):
        f = sift_objective(np.ones(100))
        assert (f.value, f.rms_term, f.ek_term) == (0.0, 0.0, 0.0)

    def test_sinusoidal_excess(self):
        t = np.arange(10_000) / 10_000
        f = sift_objective(1 + 0.1 * np.sin(2 * np.pi * 5 * t))
        assert f.rms_term == pytest.approx(0.1 / math.sqrt(2), rel=1e-6)
        assert f.ek_term == pytest.approx(-1.5, rel=1e-6)

    def test_gaussian_excess_near_zero(self):
        a = 1 + 0.01 * np.random.default_rng(0).normal(size=200_000)
        f = sift_objective(a)
        assert abs(f.ek_term) < 0.05
        assert f.rms_term == pytest.approx(0.01, rel=0.02)


class TestSifting:
    def test_pure_tone_is_one_pf(self):
        t = np.arange(4000) / 1000
        x = 2.0 * np.cos(2 * np.pi * 20 * t)
        d = decompose(Signal(x, 1000.0))
        assert len(d) == 1
        assert np.allclose(central(d.pfs[0].pf), central(x), atol=1e-3)
        assert np.allclose(central(d.pfs[0].amplitude), 2.0, atol=1e-3)

    def test_two_component_separation(self):
        _, high, low = tone_mixture()
        d = decompose(Signal(high + low, 1000.0))
        assert len(d) >= 2
        assert np.corrcoef(central(d.pfs[0].pf), central(high))[0, 1] > 0.95
        assert np.corrcoef(central(d.pfs[1].pf), central(low))[0, 1] > 0.95

    def test_spec_mixture_separates(self):
        t = np.arange(2000) / 1000
        am_part = (1 + 0.2 * np.cos(2 * np.pi * 3 * t)) * np.cos(2 * np.pi * 30 * t)
        tone = np.cos(2 * np.pi * 5 * t)
        d = decompose(Signal(am_part + tone, 1000.0))
        assert np.corrcoef(central(d.pfs[0].pf), central(am_part))[0, 1] > 0.95
        assert np.corrcoef(central(d.pfs[1].pf), central(tone))[0, 1] > 0.95

    def test_am_law_recovered_within_five_percent_rms(self):
        t = np.arange(2000) / 1000
        am = 1 + 0.3 * np.cos(2 * np.pi * 2 * t)
        pf = sift_pf(am * np.cos(2 * np.pi * 20 * t))
        err = central(pf.amplitude) - central(am)
        assert np.sqrt(np.mean(err**2)) / np.sqrt(np.mean(central(am) ** 2)) < 0.05

    def test_constant_signal_has_no_pf(self):
        d = decompose(np.full(100, 2.5))
        assert len(d) == 0 and np.array_equal(d.residue, np.full(100, 2.5))

    def test_am_tone_recovers_envelope(self):
        t, high, _ = tone_mixture()
        pf = sift_pf(high)
        truth = 1.0 + 0.5 * np.cos(2 * np.pi * 2 * t)
        assert np.max(np.abs(central(pf.amplitude, 0.8) - central(truth, 0.8))) < 0.02
        assert np.all(np.abs(pf.fm) <= 1.0)

    def test_monotone_input_has_no_pf(self):
        d = decompose(np.linspace(0, 1, 100))
        assert len(d) == 0
        assert np.array_equal(d.residue, np.linspace(0, 1, 100))

    def test_negligible_input(self):
        with pytest.raises(NegligibleResidue):
            sift_pf(np.tile([0.0, 1e-14], 50))

    def test_short_input_rejected(self):
        with pytest.raises(SignalSizeError):
            decompose(np.ones(10))

    def test_caps_are_honoured(self):
        x = np.random.default_rng(3).normal(size=2000)
        d = decompose(x, RLMDConfig(max_pfs=2, max_sift=4))
        assert len(d) == 2
        assert all(pf.sift_count <= 4 for pf in d.pfs)

    def test_max_sift_flag(self):
        t = np.arange(4000) / 1000
        pf = sift_pf(np.cos(2 * np.pi * 20 * t), RLMDConfig(max_sift=3))
        assert pf.sift_count == 3
        assert pf.max_sift_hit

    def test_metadata_lengths_agree(self):
        _, high, low = tone_mixture()
        for pf in decompose(high + low).pfs:
            assert len(pf.objective_trace) == pf.sift_count == len(pf.subset_sizes)

    def test_config_validation(self):
        for bad in ({"max_pfs": 0}, {"max_sift": 0}, {"n_pairs": 0}, {"bin_count": 0}):
            with pytest.raises(ValueError):
                RLMDConfig(**bad)


@settings(max_examples=25, deadline=None)
@given(am_fm_mixture())
def test_decomposition_invariants(x):
    d = decompose(x)
    assert np.max(np.abs(d.reconstruct() - x)) <= 1e-9 * np.max(np.abs(x))
    for pf in d.pfs:
        assert np.all(np.abs(pf.fm) <= 1.0)
        assert np.all(pf.amplitude > 0)
        trace = pf.objective_trace
        if len(trace) >= 3 and not pf.max_sift_hit:
            assert not (trace[-3] < trace[-2] < trace[-1])


@settings(max_examples=10, deadline=None)
@given(am_fm_mixture(), st.sampled_from([0.5, 2.0, 4.0]))
def test_scale_equivariance(x, alpha):
    base, scaled = decompose(x), decompose(alpha * x)
    assert len(base) == len(scaled)
    for a, b in zip(base.pfs, scaled.pfs):
        assert np.allclose(b.pf, alpha * a.pf, rtol=1e-9, atol=1e-9 * alpha * np.max(np.abs(x)))


def test_deterministic():
    x = np.random.default_rng(11).normal(size=1000)
    a, b = decompose(x), decompose(x)
    assert len(a) == len(b)
    assert all(np.array_equal(p.pf, q.pf) for p, q in zip(a.pfs, b.pfs))
