import math
from dataclasses import replace

import numpy as np
import pytest

from buffon_walk import (
    ConfigError,
    Link,
    Room,
    WalkConfig,
    WalkerState,
    merge_walk_summaries,
    next_angle,
    run_walk,
    run_walk_replicas,
    step,
    tv_distance_to_uniform,
)
from buffon_walk.stats import Histogram
from buffon_walk.walker import make_rng, run_walk_stepwise


def cfg(**kw):
    base = dict(d_s=1.0, room=Room(10, 10), n_steps=1000, seed=3)
    base.update(kw)
    return WalkConfig(**base)


def test_next_angle_full_persistence():
    c = cfg(p_theta=1.0)
    rng = make_rng(0)
    assert all(next_angle(1.0, c, rng) == 1.0 for _ in range(1000))


def test_next_angle_fresh_draws_are_uniform():
    c = cfg(p_theta=0.0)
    rng = make_rng(1)
    draws = np.array([next_angle(1.0, c, rng) for _ in range(10**6)])
    h = Histogram.uniform(0, 2 * math.pi, 36)
    h.add(draws)
    assert h.total == 10**6
    assert tv_distance_to_uniform(h) < 0.01


def test_next_angle_half_persistence():
    c = cfg(p_theta=0.5)
    rng = make_rng(2)
    kept = sum(next_angle(1.0, c, rng) == 1.0 for _ in range(10**6))
    assert abs(kept / 10**6 - 0.5) < 0.002


def test_next_angle_restricted_range():
    c = cfg(angle_range=(1.0, 1.5))
    rng = make_rng(4)
    draws = [next_angle(0.0, c, rng) for _ in range(1000)]
    assert all(1.0 <= t <= 1.5 for t in draws)


def test_step_crosses_once():
    c = cfg(d_s=2.0, p_theta=1.0, link=Link(2.0))
    s, n = step(WalkerState(1, 1, 0.0), c, make_rng(0))
    assert (s.x, s.y, s.theta, s.step_index) == (3, 1, 0.0, 1)
    assert n == 1


def test_step_parallel_to_link():
    c = cfg(d_s=1.0, p_theta=1.0, link=Link(2.0))
    s, n = step(WalkerState(5, 5, math.pi / 2), c, make_rng(0))
    assert (s.x, s.y, s.theta) == pytest.approx((5, 6, math.pi / 2))
    assert n == 0


def test_step_reflection_changes_persistent_heading():
    c = cfg(d_s=2.0, p_theta=1.0)
    s, _ = step(WalkerState(9, 5, 0.0), c, make_rng(0))
    assert s.x == pytest.approx(9.0)
    assert s.theta == pytest.approx(math.pi)


def test_short_steps_cross_at_most_once():
    c = cfg(d_s=0.01)
    rng = make_rng(9)
    for _ in range(20_000):
        start = WalkerState(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 2 * math.pi))
        _, n = step(start, c, rng)
        assert n in (0, 1)


def test_run_walk_parallel_motion_never_crosses():
    c = cfg(n_steps=11, burn_in=10, p_theta=1.0, initial_state=(3.0, 2.0, math.pi / 2))
    s = run_walk(c)
    assert s.n_counted == 1
    assert s.p_hat == 0.0


def test_run_walk_is_deterministic():
    c = cfg(n_steps=50_000, p_theta=0.3)
    assert run_walk(c) == run_walk(c)
    assert run_walk(c) != run_walk(replace(c, seed=4))


def test_kernel_matches_stepwise_reference():
    for c in (
        cfg(n_steps=3000, p_theta=0.0, d_s=2.5, room=Room(3, 2), link=Link(1.0)),
        cfg(n_steps=3000, p_theta=0.8, d_s=0.3, burn_in=100, angle_range=(0.5, 2.0)),
        cfg(n_steps=500, p_theta=0.5, d_s=7.0, room=Room(2, 5), initial_state=(1.0, 1.0, 0.3)),
    ):
        assert run_walk(c) == run_walk_stepwise(c)


def test_summary_fields_and_containment():
    c = cfg(n_steps=20_000, burn_in=500, d_s=3.0, room=Room(4, 2))
    s = run_walk(c)
    assert s.n_counted == 19_500
    assert s.x_histogram.total == s.y_histogram.total == s.angle_histogram.total == 19_500
    assert s.p_analytic == pytest.approx(2 * 3.0 / (math.pi * 4))
    assert s.ci_low <= s.p_hat <= s.ci_high
    st = s.final_states[0]
    assert 0 <= st.x <= 4 and 0 <= st.y <= 2 and 0 <= st.theta < 2 * math.pi


def test_replicas_independent_of_workers_and_merge_order():
    c = cfg(n_steps=20_000)
    one = run_walk_replicas(c, 4, workers=1)
    many = run_walk_replicas(c, 4, workers=3)
    assert one == many
    assert [s.seeds for s in one] == [(3,), (4,), (5,), (6,)]
    a = merge_walk_summaries(one)
    b = merge_walk_summaries(one[::-1])
    assert a == b
    ab = merge_walk_summaries([merge_walk_summaries(one[:1]), merge_walk_summaries(one[1:])])
    assert ab == a
    assert a.n_crossings == sum(s.n_crossings for s in one)


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"d_s": 0.0}, "d_s"),
        ({"p_theta": 1.5}, "p_theta"),
        ({"n_steps": 0}, "n_steps"),
        ({"burn_in": 1000}, "burn_in"),
        ({"seed": -1}, "seed"),
        ({"link": Link(12.0)}, "link"),
        ({"angle_range": (0.0, 7.0)}, "angle_range"),
        ({"initial_state": (11.0, 1.0, 0.0)}, "initial_state"),
    ],
)
def test_config_errors_name_the_field(kw, field):
    with pytest.raises(ConfigError) as err:
        cfg(**kw)
    assert err.value.field == field


def test_default_burn_in_and_link():
    c = cfg(n_steps=5000)
    assert c.burn_in == 50
    assert c.link.x_l == 5.0
