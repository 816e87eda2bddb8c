"""Decoder: closed-loop fidelity, state rules, and per-frame statistics."""

import numpy as np
import pytest

from conftest import fast_train
from nbv.bitstream import (
    BlockMode,
    BlockPayload,
    FrameUnit,
    RegionSpec,
    StreamHeader,
    write_header,
    write_stream,
)
from nbv.core import SequenceConfig
from nbv.decoder import CSV_COLUMNS, decode_sequence
from nbv.encoder import _encode_period, rd_lambda, train_param_set
from nbv.entropy import BitWriter, StreamError
from nbv.gnn import SetContext, init_params, quantize_params
from nbv.tools import synth_sequence


def zero_tiles():
    return [np.zeros(64, dtype=np.int32) for _ in range(24)]


def one_block_unit(frame_type="I", mode=BlockMode.INTRA_DC, mvd=None,
                   regions=(), gen=False):
    gen_map = np.array([[gen]], dtype=bool)
    return FrameUnit(frame_type, list(regions), gen_map,
                     [BlockPayload(mode, mvd, zero_tiles())])


def tiny_header(frame_count, gnn_enabled=True):
    return StreamHeader(32, 32, frame_count, 20, gnn_enabled, 16)


def tiny_qparams(seed=0):
    return quantize_params(init_params((3, 1536), seed=seed))


class TestClosedLoop:
    def test_decode_is_deterministic(self, pan_encode):
        stream, _ = pan_encode
        a, _ = decode_sequence(stream)
        b, _ = decode_sequence(stream)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.y, fb.y)
            assert np.array_equal(fa.cb, fb.cb)
            assert np.array_equal(fa.cr, fb.cr)

    def test_frame_count_and_display_size(self, pan_encode):
        stream, _ = pan_encode
        frames, _ = decode_sequence(stream)
        assert len(frames) == 8
        assert all((f.display_width, f.display_height) == (96, 64)
                   for f in frames)

    def test_block_stats_cover_the_grid(self, pan_encode):
        stream, _ = pan_encode
        _, report = decode_sequence(stream)
        for row in report.rows:
            assert row.n_intra + row.n_inter + row.n_gen == 6
        i_rows = [r for r in report.rows if r.type == "I"]
        assert i_rows and all(r.n_inter == 0 for r in i_rows)

    def test_csv_shape(self, pan_encode):
        stream, _ = pan_encode
        _, report = decode_sequence(stream)
        lines = report.to_csv().strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert CSV_COLUMNS == ("frame", "n_intra", "n_inter", "n_gen",
                               "gnn_calls")
        assert len(lines) == 1 + 8
        for row, line in zip(report.rows, lines[1:]):
            fields = line.split(",")
            assert int(fields[0]) == row.frame
            assert int(fields[3]) == int(fields[4]) == row.n_gen

    def test_no_sets_means_no_generator_calls(self, pan_frames):
        cfg = SequenceConfig(width=96, height=64, frame_count=8, qp=20,
                             gnn_interval=4, gnn_enabled=False)
        from nbv.encoder import encode_sequence
        stream, _ = encode_sequence(pan_frames, cfg)
        _, report = decode_sequence(stream)
        assert report.n_param_sets == 0 and report.gnn_calls == 0


class TestStateRules:
    def test_predicted_frame_needs_a_reference(self):
        unit = one_block_unit("P", BlockMode.INTER, mvd=(0, 0))
        data = write_stream(tiny_header(1), [("frame", unit)])
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_generated_block_needs_a_parameter_set(self):
        reg = RegionSpec(0, 0, 0, 0, True)
        unit = one_block_unit("I", BlockMode.GEN, regions=[reg], gen=True)
        data = write_stream(tiny_header(1), [("frame", unit)])
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_parameter_set_must_precede_an_i_frame(self):
        units = [
            ("frame", one_block_unit("I")),
            ("param_set", tiny_qparams()),
            ("frame", one_block_unit("P", BlockMode.INTER, mvd=(0, 0))),
        ]
        data = write_stream(tiny_header(2), units)
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_consecutive_parameter_sets_rejected(self):
        units = [
            ("param_set", tiny_qparams()),
            ("param_set", tiny_qparams(1)),
            ("frame", one_block_unit("I")),
        ]
        data = write_stream(tiny_header(1), units)
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_parameter_set_in_disabled_stream_rejected(self):
        units = [("param_set", tiny_qparams()), ("frame", one_block_unit("I"))]
        data = write_stream(tiny_header(1, gnn_enabled=False), units)
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_stream_must_not_end_on_a_parameter_set(self):
        units = [
            ("frame", one_block_unit("I")),
            ("param_set", tiny_qparams()),
        ]
        data = write_stream(tiny_header(1), units)
        with pytest.raises(StreamError):
            decode_sequence(data)

    def test_truncated_stream_rejected(self, pan_encode):
        stream, _ = pan_encode
        with pytest.raises(StreamError):
            decode_sequence(stream[:-3])

    def test_garbage_rejected(self):
        with pytest.raises(StreamError):
            decode_sequence(b"not a stream at all")


class TestMultiplePeriods:
    def build_two_period_stream(self):
        frames = synth_sequence("pan", 96, 64, 6, velocity=(4, 0), seed=10)
        config = SequenceConfig(width=96, height=64, frame_count=6, qp=24,
                                gnn_interval=3, gnn_enabled=True,
                                gnn_arch=(3, 8, 1536))
        lam = rd_lambda(config.qp)
        regions = [[RegionSpec(2, 0, 2, 1, False)] for _ in range(3)]
        periods = []
        for start in (0, 3):
            chunk = frames[start:start + 3]
            ctx = SetContext(cols=3, rows=2, start_frame=start, span=3)
            qparams, _ = train_param_set(chunk, start, regions, ctx,
                                         config.gnn_arch, fast_train(40))
            periods.append(_encode_period(chunk, start, regions, qparams, ctx,
                                          config, lam, 3, 2))
        w = BitWriter()
        write_header(w, StreamHeader(96, 64, 6, 24, True, 3))
        data = w.to_bytes() + periods[0].data + periods[1].data
        return data, periods

    def test_second_set_restarts_the_time_axis(self):
        data, periods = self.build_two_period_stream()
        decoded, report = decode_sequence(data)
        assert report.n_param_sets == 2
        assert len(decoded) == 6
        want = [res.recon for p in periods for res in p.results]
        for got, exp in zip(decoded, want):
            assert np.array_equal(got.y, exp.y)
            assert np.array_equal(got.cb, exp.cb)
            assert np.array_equal(got.cr, exp.cr)

    def test_generator_calls_counted_per_frame(self):
        data, _ = self.build_two_period_stream()
        _, report = decode_sequence(data)
        assert [r.n_gen for r in report.rows] == [2] * 6
        assert report.gnn_calls == 12
