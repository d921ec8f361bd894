"""Threshold detector: verdicts, buffer behavior, CSV export."""

import math

import numpy as np
import pytest

from sdtrade.defense import DetectorState, check_and_insert, reset, verdicts_to_csv
from sdtrade.errors import TagMismatch
from sdtrade.features import BitString, IntVector, RealVector


def _iv(*values) -> IntVector:
    return IntVector(np.array(values))


class TestCheckAndInsert:
    def test_empty_buffer_never_flags(self):
        state = DetectorState(tau=100.0)
        verdict = check_and_insert(state, _iv(0, 1))
        assert not verdict.flagged
        assert verdict.min_distance == math.inf
        assert verdict.matched_id is None
        assert len(state.buffer) == 1

    def test_exact_duplicate_flags_at_any_tau(self):
        for tau in (0.0, 2.5):
            state = DetectorState(tau=tau)
            check_and_insert(state, _iv(3, 4))
            verdict = check_and_insert(state, _iv(3, 4))
            assert verdict.flagged
            assert verdict.min_distance == 0.0
            assert verdict.matched_id == 0

    def test_exact_match_semantics_for_int_features(self):
        state = DetectorState(tau=0.0)
        check_and_insert(state, _iv(0, 1))
        verdict = check_and_insert(state, _iv(0, 2))
        assert not verdict.flagged
        assert verdict.min_distance == math.inf

    def test_flagged_queries_still_inserted(self):
        state = DetectorState(tau=10.0)
        check_and_insert(state, RealVector(np.array([0.0])))
        check_and_insert(state, RealVector(np.array([1.0])))
        assert len(state.buffer) == 2

    def test_fifo_eviction(self):
        state = DetectorState(tau=0.5, capacity=2)
        for v in (0.0, 10.0, 20.0):
            check_and_insert(state, RealVector(np.array([v])))
        assert [qid for qid, _ in state.buffer] == [1, 2]
        # the evicted very first feature no longer matches
        verdict = check_and_insert(state, RealVector(np.array([0.0])))
        assert not verdict.flagged

    def test_tag_mismatch(self):
        state = DetectorState(tau=1.0)
        check_and_insert(state, _iv(1))
        with pytest.raises(TagMismatch):
            check_and_insert(state, BitString(packed=b"\x00", n_bits=8))

    def test_matched_id_is_closest(self):
        state = DetectorState(tau=5.0)
        check_and_insert(state, RealVector(np.array([0.0])))
        check_and_insert(state, RealVector(np.array([10.0])))
        verdict = check_and_insert(state, RealVector(np.array([9.0])))
        assert verdict.flagged
        assert verdict.matched_id == 1
        assert verdict.min_distance == pytest.approx(1.0)


class TestMonotonicityInTau:
    def test_flag_sets_nest(self):
        gen = np.random.default_rng(0)
        stream = [RealVector(gen.standard_normal(3)) for _ in range(40)]
        # replay identical streams and collect flagged ids per threshold
        flagged_at = {}
        for tau in (0.5, 1.0, 2.0):
            state = DetectorState(tau=tau)
            flagged_at[tau] = {
                v.query_id for v in (check_and_insert(state, f) for f in stream) if v.flagged
            }
        assert flagged_at[0.5] <= flagged_at[1.0] <= flagged_at[2.0]

    def test_first_query_never_flagged(self):
        gen = np.random.default_rng(1)
        for tau in (0.0, 1e9):
            state = DetectorState(tau=tau)
            verdict = check_and_insert(state, RealVector(gen.standard_normal(2)))
            assert not verdict.flagged


class TestReset:
    def test_reset_empties_buffer_and_is_idempotent(self):
        state = DetectorState(tau=1.0)
        for _ in range(3):
            check_and_insert(state, _iv(1))
        reset(state)
        assert state.buffer == []
        reset(state)
        assert state.buffer == []
        assert state.tau == 1.0

    def test_after_reset_queries_are_unflagged(self):
        state = DetectorState(tau=1e9)
        check_and_insert(state, _iv(1))
        reset(state)
        assert not check_and_insert(state, _iv(1)).flagged


class TestCsvExport:
    def test_columns_and_values(self):
        state = DetectorState(tau=1.0)
        verdicts = [
            check_and_insert(state, RealVector(np.array([0.0]))),
            check_and_insert(state, RealVector(np.array([0.5]))),
        ]
        text = verdicts_to_csv(verdicts)
        lines = text.strip().split("\n")
        assert lines[0] == "query_id,flagged,min_distance,matched_id"
        assert lines[1] == "0,false,inf,"
        assert lines[2] == "1,true,0.5,0"
