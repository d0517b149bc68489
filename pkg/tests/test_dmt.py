import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rislab.channel import ChannelDims, PartitionPlan
from rislab.dmt import (
    AsymptoticSummary,
    DmtCurve,
    PartitionVerdict,
    check_partition_condition,
    condition_window,
    cutset_pair_diversity,
    cutset_summary,
    dmt_ar,
    dmt_fr_lower_bound,
    dmt_pr,
)
from rislab.errors import DomainError


class TestDmtPr:
    def test_3_5_3_vertices(self):
        assert dmt_pr(ChannelDims(3, 5, 3)).vertices == ((0, 9), (1, 4), (2, 1), (3, 0))

    def test_2_3_2_full_diversity(self):
        assert dmt_pr(ChannelDims(2, 3, 2)).diversity(0) == 4

    def test_2_2_2_floor_term(self):
        assert dmt_pr(ChannelDims(2, 2, 2)).diversity(0) == 3

    def test_depends_only_on_sorted_triple(self):
        for n, q, l in itertools.permutations((2, 5, 3)):
            assert dmt_pr(ChannelDims(n, q, l)).vertices == dmt_pr(ChannelDims(2, 3, 5)).vertices

    def test_full_nl_diversity_when_enough_elements(self):
        for n in range(1, 5):
            for l in range(1, 5):
                for q in range(n + l - 1, 13):
                    assert dmt_pr(ChannelDims(n, q, l)).diversity(0) == n * l

    def test_vertical_reduction(self):
        for n, l in [(1, 1), (2, 2), (2, 3), (3, 3), (4, 2)]:
            qmin = n + l - 1
            base = dmt_pr(ChannelDims(n, qmin, l)).vertices
            for q in range(qmin, 13):
                assert dmt_pr(ChannelDims(n, q, l)).vertices == base


class TestDmtAr:
    def test_2_60_2_k4(self):
        curve = dmt_ar(ChannelDims(2, 60, 2), PartitionPlan.contiguous(60, 4))
        assert curve.diversity(0) == 16

    def test_1_16_1_k2(self):
        curve = dmt_ar(ChannelDims(1, 16, 1), PartitionPlan.contiguous(16, 2))
        assert curve.diversity(0) == 2

    def test_single_element_parts_limit_multiplexing(self):
        curve = dmt_ar(ChannelDims(3, 10, 3), PartitionPlan.contiguous(10, 10))
        assert curve.max_r == 1
        assert curve.max_r < cutset_summary(ChannelDims(3, 10, 3), 1.0).r_max

    def test_k1_equals_pr_on_grid(self):
        for n in range(1, 5):
            for l in range(1, 5):
                for q in range(1, 13):
                    dims = ChannelDims(n, q, l)
                    ar = dmt_ar(dims, PartitionPlan.contiguous(q, 1))
                    assert ar.vertices == dmt_pr(dims).vertices

    def test_end_vertex_zero(self):
        curve = dmt_ar(ChannelDims(2, 12, 3), PartitionPlan.contiguous(12, 3))
        assert curve.diversity(curve.max_r) == 0


class TestDmtFrLowerBound:
    def test_reaches_both_extremes_3_10_3_k10(self):
        dims = ChannelDims(3, 10, 3)
        curve = dmt_fr_lower_bound(dims, PartitionPlan.contiguous(10, 10))
        summary = cutset_summary(dims, 1.0)
        assert curve.diversity(0) == 30 == summary.d_max
        assert curve.max_r == 3 == summary.r_max

    def test_k1_equals_pr(self):
        dims = ChannelDims(2, 8, 3)
        curve = dmt_fr_lower_bound(dims, PartitionPlan.contiguous(8, 1))
        assert curve.vertices == dmt_pr(dims).vertices

    @given(
        n=st.integers(1, 4),
        l=st.integers(1, 4),
        m=st.integers(1, 4),
        k=st.integers(1, 5),
    )
    @settings(max_examples=60, deadline=None)
    def test_dominates_parts_and_respects_cutset(self, n, l, m, k):
        q = m * k
        if q > 16:
            return
        dims = ChannelDims(n, q, l)
        plan = PartitionPlan.contiguous(q, k)
        fr = dmt_fr_lower_bound(dims, plan)
        ar = dmt_ar(dims, plan)
        pr = dmt_pr(dims)
        for r in range(fr.max_r + 1):
            assert fr.diversity(r) >= pr.diversity(r)
            if r <= ar.max_r:
                assert fr.diversity(r) >= ar.diversity(r)
            ceiling = min(
                cutset_pair_diversity(dims.n, dims.q, r) if r <= min(dims.n, dims.q) else 0,
                cutset_pair_diversity(dims.q, dims.l, r) if r <= min(dims.q, dims.l) else 0,
            )
            assert fr.diversity(r) <= ceiling


class TestCutsetSummary:
    def test_3_10_3(self):
        s = cutset_summary(ChannelDims(3, 10, 3), 1.0)
        assert s.d_max == 30
        assert s.r_max == 3

    def test_empty_window_for_square_antennas(self):
        for q in (4, 10, 12):
            assert condition_window(ChannelDims(3, q, 3)) == ()

    def test_siso_coding_gain(self):
        s = cutset_summary(ChannelDims(1, 60, 1), 1.0)
        assert s.coding_gain == pytest.approx(1.0 / 60.0, rel=1e-12)
        assert cutset_summary(ChannelDims(2, 60, 2), 1.0).coding_gain is None

    def test_coding_gain_vanishes_with_size(self):
        gains = [cutset_summary(ChannelDims(1, q, 1), 1.0).coding_gain for q in (4, 16, 64, 256, 1024)]
        assert all(b < a for a, b in zip(gains, gains[1:]))
        assert gains[-1] < 1e-3


class TestPartitionCondition:
    def test_both_extremes(self):
        assert check_partition_condition(ChannelDims(4, 8, 1), 2) is PartitionVerdict.BOTH

    def test_d_max_only(self):
        assert check_partition_condition(ChannelDims(3, 10, 3), 1) is PartitionVerdict.D_MAX_ONLY

    def test_r_max_only(self):
        assert check_partition_condition(ChannelDims(3, 10, 3), 5) is PartitionVerdict.R_MAX_ONLY

    def test_neither(self):
        assert check_partition_condition(ChannelDims(3, 10, 3), 2) is PartitionVerdict.NEITHER

    def test_non_divisor_rejected(self):
        with pytest.raises(DomainError):
            check_partition_condition(ChannelDims(3, 10, 3), 3)


class TestDmtCurveInvariants:
    def test_rejects_increasing_diversity(self):
        with pytest.raises(DomainError):
            DmtCurve(vertices=((0, 1), (1, 2)), label="bad")

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            DmtCurve(vertices=((0, -1),), label="bad")

    def test_rejects_gapped_r(self):
        with pytest.raises(DomainError):
            DmtCurve(vertices=((0, 2), (2, 0)), label="bad")
