"""Range CAM lookup and table indirection."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cortexsim.fixedpoint import ADDR_MASK
from cortexsim.neuron import DEFAULT_PARAMS, MinicolumnLayout
from cortexsim.tables import (
    EMPTY_POST,
    ConnectionRule,
    ParamTable,
    PostConnection,
    RangeCam,
    TableError,
    cam_lookup,
)

LAYOUT = MinicolumnLayout.from_counts((100, 0, 0, 0, 0, 0, 0, 0))
PARAMS = (DEFAULT_PARAMS,) * 8


def simple_rule(offset=0, fanout=8, dest=100):
    return ConnectionRule(
        offset=offset,
        fanout_size=fanout,
        dest_hc_size=dest,
        weights=(3, -8, 0, 0, 0, 0, 0, 0),
        masks=(0x01, 0, 0, 0, 0, 0, 0, 0),
    )


def one_slot_post(delay=1):
    return PostConnection((delay,) + (None,) * 15)


class TestRangeCam:
    def test_lookup_examples(self):
        cam = RangeCam((0, 100, 500))
        assert cam_lookup(cam, 0) == 0
        assert cam_lookup(cam, 99) == 0
        assert cam_lookup(cam, 100) == 1  # threshold inclusive on the left
        assert cam_lookup(cam, 2**27 - 1) == 2

    def test_capacity(self):
        RangeCam(tuple(range(512)))
        with pytest.raises(TableError):
            RangeCam(tuple(range(513)))

    def test_must_cover_zero(self):
        with pytest.raises(TableError):
            RangeCam((1, 100))

    def test_strictly_increasing(self):
        with pytest.raises(TableError):
            RangeCam((0, 100, 100))
        with pytest.raises(TableError):
            RangeCam((0, 200, 100))

    @given(
        st.lists(st.integers(1, ADDR_MASK), min_size=0, max_size=64, unique=True),
        st.integers(0, ADDR_MASK),
    )
    def test_total_and_consistent(self, extra, addr):
        thresholds = tuple(sorted({0, *extra}))
        cam = RangeCam(thresholds)
        i = cam.lookup(addr)
        assert 0 <= i < len(thresholds)
        assert thresholds[i] <= addr
        if i + 1 < len(thresholds):
            assert addr < thresholds[i + 1]


class TestConnectionRule:
    def test_fanout_bound(self):
        with pytest.raises(TableError):
            simple_rule(fanout=9, dest=8)

    def test_weight_range(self):
        with pytest.raises(TableError):
            ConnectionRule(0, 8, 100, (8,) * 8, (0,) * 8)

    def test_delay_range(self):
        with pytest.raises(TableError):
            PostConnection((17,) + (None,) * 15)
        with pytest.raises(TableError):
            PostConnection((0,) + (None,) * 15)


class TestParamTable:
    def _table(self):
        return ParamTable(
            cam=RangeCam((0, 1000, 2000)),
            range_param_type=(1, 1, 2),
            range_conn=(10, 11, 10),
            param_records={1: (LAYOUT, PARAMS), 2: (LAYOUT, PARAMS)},
            post_records={10: one_slot_post(), 11: one_slot_post(delay=4)},
            pre_records={(10, 0): simple_rule(), (11, 0): simple_rule(offset=1)},
            network_seed=42,
        )

    def test_indirection_reuse(self):
        t = self._table()
        # ranges 0 and 1 share the parameter record but differ in connections
        assert t.minicolumn_params(0) is t.minicolumn_params(1500)
        assert t.pre_connection(0, 0) != t.pre_connection(1500, 0)
        # ranges 0 and 2 share connections but not parameters record identity
        assert t.post_connections(0) is t.post_connections(2500)

    def test_deterministic_lookup(self):
        t = self._table()
        assert t.minicolumn_params(1234) == t.minicolumn_params(1234)
        assert t.range_of(999) == 0 and t.range_of(1000) == 1

    def test_dangling_param_type(self):
        with pytest.raises(TableError):
            ParamTable(
                cam=RangeCam((0,)),
                range_param_type=(7,),
                range_conn=(10,),
                param_records={1: (LAYOUT, PARAMS)},
                post_records={10: EMPTY_POST},
                pre_records={},
            )

    def test_dangling_conn(self):
        with pytest.raises(TableError):
            ParamTable(
                cam=RangeCam((0,)),
                range_param_type=(1,),
                range_conn=(99,),
                param_records={1: (LAYOUT, PARAMS)},
                post_records={10: EMPTY_POST},
                pre_records={},
            )

    def test_enabled_slot_without_rule(self):
        with pytest.raises(TableError):
            ParamTable(
                cam=RangeCam((0,)),
                range_param_type=(1,),
                range_conn=(10,),
                param_records={1: (LAYOUT, PARAMS)},
                post_records={10: one_slot_post()},
                pre_records={},  # slot 0 enabled but missing
            )

    def test_disabled_slot_lookup_fails(self):
        t = self._table()
        with pytest.raises(TableError):
            t.pre_connection(0, 5)

    def test_empty_post_drops_events(self):
        assert EMPTY_POST.enabled_slots() == ()

    def test_full_fanout_case(self):
        post = PostConnection(tuple(range(1, 17)))
        assert len(post.enabled_slots()) == 16
        assert [d for _, d in post.enabled_slots()] == list(range(1, 17))
