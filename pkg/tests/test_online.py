import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcpd.online import (
    Monitor,
    UntrainableError,
    online_cp_index,
    ratio_denominator,
    train,
    train_block,
    weight_g,
)
from rcpd.series import Segment, TimeSeries, Variant


def test_weight_examples():
    assert weight_g(100, 100, 0) == pytest.approx(20.0)
    assert weight_g(100, 100, 0.25) == pytest.approx(16.818, abs=1e-3)
    for m, l in [(10, 3), (200, 50), (7, 400)]:
        assert weight_g(m, l, 0) == pytest.approx((m + l) / math.sqrt(m))


def test_ratio_denominator_hand_value():
    assert ratio_denominator(np.array([[1.0], [2.0]]))[0, 0] == pytest.approx(0.0625)


def test_training_mean():
    mon = train(TimeSeries([0, 0, 4, 4, 1, 3, 2, 2, 0, 4]), cv=2.0)
    assert mon.training_mean[0] == pytest.approx(2.0)
    assert mon.m == 10 and mon.l == 0


@pytest.mark.parametrize("variant", list(Variant))
def test_constant_training_is_untrainable(variant):
    with pytest.raises(UntrainableError) as err:
        train(TimeSeries([1.0] * 20), variant=variant, cv=2.0)
    assert variant.value in str(err.value)


def test_short_training_is_untrainable():
    with pytest.raises(UntrainableError):
        train(TimeSeries(np.arange(9.0)), cv=2.0)


def test_exactly_one_matrix_populated():
    x = TimeSeries(np.random.default_rng(0).standard_normal(50))
    std = train(x, variant="standard", cv=2.0)
    rt = train(x, variant="ratio", cv=50.0)
    assert std.omega_inv_sqrt is not None and std.ratio_denominator_inverse is None
    assert rt.ratio_denominator_inverse is not None and rt.omega_inv_sqrt is None


def test_stream_at_training_mean_never_stops():
    x = np.random.default_rng(1).standard_normal(100)
    for variant in Variant:
        mon = train(TimeSeries(x), variant=variant, cv=1.0)
        for _ in range(500):
            assert mon.step(float(mon.training_mean[0])) is None


def test_standard_stop_by_hand():
    mon = Monitor("standard", m=100, training_mean=[0.0], matrix=[[1.0]], cv=1.0, gamma=0.0)
    # boundary at l: (100 + l)/10, statistic l * mean = sum of observations
    assert mon.step(5.0) is None          # 5 < 10.1
    stop = mon.step(6.0)                  # 11 >= 10.2
    assert stop is not None and stop.tau == 2
    assert stop.e[0] == pytest.approx(5.5)
    assert stop.sign == 1
    assert stop.threshold == pytest.approx(10.2)


def test_ratio_stop_by_hand():
    mon = Monitor("ratio", m=100, training_mean=[0.0], matrix=[[1.0]], cv=1.0, gamma=0.0)
    # statistic l^2 E^2 / m against g^2 / m: same crossing as |l E| >= g
    assert mon.step(5.0) is None
    stop = mon.step(6.0)
    assert stop is not None and stop.statistic == pytest.approx(121 / 100)
    assert stop.threshold == pytest.approx(10.2**2 / 100)


def test_negative_change_sign():
    mon = Monitor("standard", m=100, training_mean=[0.0], matrix=[[1.0]], cv=1.0, gamma=0.0)
    stop = None
    while stop is None:
        stop = mon.step(-20.0)
    assert stop.sign == -1


def test_non_finite_observation_leaves_state():
    mon = Monitor("standard", m=50, training_mean=[0.0], matrix=[[1.0]], cv=3.0, gamma=0.25)
    mon.step(0.5)
    with pytest.raises(ValueError):
        mon.step(math.nan)
    with pytest.raises(ValueError):
        mon.step([1.0, 2.0])
    assert mon.l == 1 and mon.running_sum[0] == 0.5


def test_multivariate_l1_norm():
    mat = np.diag([1.0, 0.5])
    mon = Monitor("standard", m=4, training_mean=[0.0, 0.0], matrix=mat, cv=100.0, gamma=0.0)
    assert mon.step([1.0, -2.0]) is None
    assert mon.running_sum.tolist() == [1.0, -2.0]
    mon2 = Monitor("standard", m=4, training_mean=[0.0, 0.0], matrix=mat, cv=1e-6, gamma=0.0)
    stop = mon2.step([1.0, -2.0])
    assert stop.statistic == pytest.approx(2.0)


def test_cp_index():
    mon = Monitor("standard", m=200, training_mean=[0.0], matrix=[[1.0]], cv=1e3, gamma=0.0)
    for _ in range(10):
        mon.step(0.0)
    assert online_cp_index(mon, 10) == 210
    mon = Monitor("standard", m=100, training_mean=[0.0], matrix=[[1.0]], cv=1e-9, gamma=0.0,
                  training_start=101)
    for _ in range(7):
        mon.step(1.0)
    assert mon.cp_index(7) == 207
    with pytest.raises(RuntimeError):
        online_cp_index(mon, 8)
    with pytest.raises(RuntimeError):
        online_cp_index(mon, None)


def test_train_uses_segment():
    x = np.r_[np.full(50, 100.0), np.random.default_rng(2).standard_normal(40)]
    mon = train(TimeSeries(x), Segment(51, 90), cv=2.0)
    assert mon.training_start == 51 and mon.training_end == 90
    assert abs(mon.training_mean[0]) < 1


def _verdicts(train_x, stream, variant, cv=2.4, gamma=0.25):
    mon = train_block(train_x[:, None], variant, cv, gamma)
    out = []
    for v in stream:
        s = mon.step(float(v))
        out.append(None if s is None else s.tau)
        if s is not None:
            break
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-100, 100), st.floats(0.1, 10), st.sampled_from(list(Variant)))
def test_shift_and_scale_invariance(seed, shift, scale, variant):
    rng = np.random.default_rng(seed)
    tr = rng.standard_normal(100)
    mo = rng.standard_normal(200) + 1.0
    cv = 2.4 if variant is Variant.STANDARD else 70.0
    base = _verdicts(tr, mo, variant, cv)
    assert _verdicts(tr + shift, mo + shift, variant, cv) == base
    assert _verdicts(tr * scale, mo * scale, variant, cv) == base


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 150))
def test_causality_prefix(seed, cut):
    rng = np.random.default_rng(seed)
    tr = rng.standard_normal(80)
    mo = rng.standard_normal(150) + 0.5
    full = _verdicts(tr, mo, Variant.STANDARD)
    assert _verdicts(tr, mo[:cut], Variant.STANDARD) == full[:cut]
