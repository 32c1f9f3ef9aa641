import math

import numpy as np
import pytest

from rhhh.hierarchy import HierarchySpec, PacketKey, Prefix
from rhhh.ingest import gen_zipf
from rhhh.oracle import count_exact
from rhhh.sketch import (FullUpdateSketch, RhhhSketch, calc_pred_1d, calc_pred_2d,
                         conditioned_confidence_term, counter_capacity, pack_keys)
from rhhh.stats import ConfidenceParams

from conftest import WORKED_THETA, worked_example_stream

P = Prefix.parse
PARAMS = ConfidenceParams.from_split(0.025, 0.025, 0.025, 0.0125)


def table_updates(sketch):
    return [t.updates for t in sketch.tables]


def test_v_equals_h_updates_one_table_per_packet(src_byte):
    s = RhhhSketch(src_byte, PARAMS, seed=1)
    keys = gen_zipf(1.0, 1000, 10_000, seed=0).packed()
    s.update_packed(keys)
    assert sum(table_updates(s)) == 10_000
    assert s.n == 10_000


def test_v_ten_h_updates_tenth_of_packets(src_byte):
    s = RhhhSketch(src_byte, PARAMS, v=50, seed=1)
    n = 200_000
    s.update_packed(gen_zipf(1.0, 1000, n, seed=0).packed())
    touched = sum(table_updates(s))
    # binomial(n, 0.1): 5 sigma is ~670 packets
    assert abs(touched - 0.1 * n) <= 5 * math.sqrt(n * 0.1 * 0.9)
    assert s.n == n


def test_draws_are_uniform(src_byte):
    s = RhhhSketch(src_byte, PARAMS, v=7, seed=3)
    counts = np.bincount(s.draw_slots(70_000), minlength=7)
    assert counts.shape == (7,)
    assert np.all(np.abs(counts - 10_000) <= 5 * math.sqrt(10_000 * 6 / 7))


def test_r_draws_per_packet(src_byte):
    s = RhhhSketch(src_byte, PARAMS, seed=1, r=4)
    s.update_packed(gen_zipf(1.0, 100, 1000, seed=0).packed())
    assert sum(table_updates(s)) == 4000
    assert s.n == 1000
    assert s.scale == pytest.approx(5 / 4)


def test_seeded_determinism(two_d):
    keys = gen_zipf(1.0, 1000, 20_000, seed=4, dims=2).packed()
    states = []
    for _ in range(2):
        s = RhhhSketch(two_d, PARAMS, seed=9)
        s.update_packed(keys)
        states.append(s.bank.state.copy())
    assert np.array_equal(*states)
    other = RhhhSketch(two_d, PARAMS, seed=10)
    other.update_packed(keys)
    assert not np.array_equal(states[0], other.bank.state)


def test_single_and_batch_updates_agree(two_d):
    trace = gen_zipf(1.0, 300, 3000, seed=5, dims=2)
    one = RhhhSketch(two_d, PARAMS, seed=2)
    for key in trace:
        one.update(key)
    batch = RhhhSketch(two_d, PARAMS, seed=2)
    batch.update_many(trace.src[:1000], trace.dst[:1000])
    batch.update_packed(trace.packed()[1000:])
    assert np.array_equal(one.bank.state, batch.bank.state)
    assert one.n == batch.n == 3000


def test_dimension_mismatch_rejected(src_byte, two_d):
    with pytest.raises(ValueError):
        RhhhSketch(src_byte, PARAMS).update(PacketKey(1, 2))
    with pytest.raises(ValueError):
        FullUpdateSketch(two_d, PARAMS).update(PacketKey(1))
    with pytest.raises(ValueError):
        RhhhSketch(src_byte, PARAMS, v=4)


def test_update_all(src_byte):
    b = FullUpdateSketch(src_byte, PARAMS)
    b.update_all(PacketKey.parse("181.7.20.6"))
    assert table_updates(b) == [1] * 5
    b.update_packed(gen_zipf(1.0, 100, 999, seed=0).packed())
    assert table_updates(b) == [1000] * 5
    assert b.scale == 1.0 and b.confidence() == 0.0


def test_estimates_scale_by_v(src_byte):
    s = RhhhSketch(src_byte, PARAMS, v=10, seed=0)
    s.update_packed(pack_keys(np.full(1000, 0x01020304, dtype=np.uint32)))
    star = P("0.0.0.0/0")
    table = s.tables[src_byte.index[star.pattern]]
    lo, hi = s.frequency_bounds(star)
    assert hi == table.upper_bound(star.key64) * 10
    assert lo <= hi


def test_capacity():
    assert counter_capacity(0.001, 0.001) == 1001
    assert counter_capacity(0.001) == 1000
    assert counter_capacity(0.025, 0.025) == 41
    with pytest.raises(ValueError):
        counter_capacity(0.0)


def test_total_counters_bounded(two_d):
    s = RhhhSketch(two_d, PARAMS)
    assert s.bank.total_counters() == 25 * math.ceil(1.025 / 0.025)


def test_confidence_term():
    assert conditioned_confidence_term(0, 5, 0.05) == 0.0
    assert conditioned_confidence_term(10**6, 5, 0.05) == pytest.approx(2 * 2.497705 * math.sqrt(5e6), abs=0.1)
    assert conditioned_confidence_term(10**6, 5, 0.05) == pytest.approx(11170.0, abs=1.0)
    assert conditioned_confidence_term(10**6, 5, 0.05, mode="literal") == pytest.approx(
        2 * 1.644854 * math.sqrt(5e6), abs=0.1)
    assert conditioned_confidence_term(10**6, 5, 0.05, mode="none") == 0.0
    assert conditioned_confidence_term(4 * 10**6, 5, 0.05, r=4) == pytest.approx(
        conditioned_confidence_term(10**6, 5, 0.05))
    with pytest.raises(ValueError):
        conditioned_confidence_term(10, 5, 0.05, mode="bogus")


def test_calc_pred_1d():
    lower = {P("101.102.0.0/16"): 102.0, P("1.2.0.0/16"): 7.0}
    assert calc_pred_1d([], lower.get) == 0
    assert calc_pred_1d([P("101.102.0.0/16")], lower.get) == -102.0


def test_calc_pred_1d_uses_closest_descendant(src_byte):
    # a.b.* and a.b.c.* both selected: only a.b.* is in G(a.*)
    pset = {P("9.8.0.0/16"), P("9.8.7.0/24")}
    g = src_byte.best_generalized(P("9.0.0.0/8"), pset)
    lower = {P("9.8.0.0/16"): 50.0, P("9.8.7.0/24"): 30.0}
    assert calc_pred_1d(g, lower.get) == -50.0


def test_calc_pred_2d(two_d):
    a, b = P("1.2.0.0/16|0.0.0.0/0"), P("0.0.0.0/0|5.6.0.0/16")
    glb = P("1.2.0.0/16|5.6.0.0/16")
    lower = {a: 40.0, b: 30.0}
    upper = {glb: 12.0}
    assert calc_pred_2d([], two_d, lower.get, upper.get) == 0
    assert calc_pred_2d([a, b], two_d, lower.get, upper.get) == -40.0 - 30.0 + 12.0
    c = P("1.3.0.0/16|0.0.0.0/0")
    assert calc_pred_2d([a, c], two_d, {a: 40.0, c: 5.0}.get, {}.get) == -45.0


def test_calc_pred_2d_matches_exact_on_four_flows(two_d):
    # four flows; with exact counts the estimate must equal the set difference
    flows = {("1.2.3.4", "5.6.7.8"): 10, ("1.2.9.9", "9.9.9.9"): 7,
             ("8.8.8.8", "5.6.1.1"): 5, ("7.7.7.7", "7.7.7.7"): 3}
    stream = [PacketKey.parse(s, d) for (s, d), c in flows.items() for _ in range(c)]
    counts = count_exact(stream, two_d)
    g = [P("1.2.0.0/16|0.0.0.0/0"), P("0.0.0.0/0|5.6.0.0/16")]
    pred = calc_pred_2d(g, two_d, counts.freq, counts.freq)
    conditioned = counts.n + pred
    assert conditioned == 3  # only the 7.7.7.7 flow is outside both


def test_output_errors(src_byte):
    s = RhhhSketch(src_byte, PARAMS)
    with pytest.raises(ValueError):
        s.output(0.1)
    s.update(PacketKey.parse("1.2.3.4"))
    for bad in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            s.output(bad)


def test_baseline_worked_example(src_byte):
    b = FullUpdateSketch(src_byte, PARAMS, capacity=200)
    for key in worked_example_stream():
        b.update_all(key)
    out = b.output(WORKED_THETA)
    assert [str(c.prefix) for c in out] == ["101.102.0.0/16"]
    assert out[0].lower == out[0].upper == 102
    assert out[0].conditioned == 102


def test_output_candidate_invariants(two_d):
    s = RhhhSketch(two_d, PARAMS, seed=3)
    s.update_packed(gen_zipf(1.0, 2000, 50_000, seed=1, dims=2).packed())
    out = s.output(0.05)
    assert out
    for c in out:
        assert c.lower <= c.upper
        assert c.conditioned >= 0.05 * s.n
    levels = [two_d.prefix_level(c.prefix) for c in out]
    assert levels == sorted(levels)


def test_output_is_deterministic(src_byte):
    keys = gen_zipf(1.2, 5000, 30_000, seed=6).packed()
    outs = []
    for _ in range(2):
        s = RhhhSketch(src_byte, PARAMS, seed=5)
        s.update_packed(keys)
        outs.append(s.output(0.1))
    assert outs[0] == outs[1]


def test_extended_output(src_bit):
    s = RhhhSketch(src_bit, PARAMS, seed=5)
    s.update_packed(gen_zipf(1.0, 5000, 50_000, seed=7).packed())
    plain = s.output(0.1)
    extended = s.output(0.1, extended=True)
    # no node lies below level 0, so its candidates cannot differ
    assert [c for c in plain if src_bit.prefix_level(c.prefix) == 0] == \
        [c for c in extended if src_bit.prefix_level(c.prefix) == 0]
    assert all(c.conditioned >= 0.1 * s.n for c in extended)


def test_psi_property(src_byte):
    s = RhhhSketch(src_byte, PARAMS)
    assert s.psi == pytest.approx(19981.6, abs=0.1)
    assert RhhhSketch(src_byte, PARAMS, r=4).psi == pytest.approx(19981.6 / 4, abs=0.1)
