import io
import json
import math

import numpy as np
import pytest

from batontrack.errors import (
    EmptyInput,
    IndivisibleN,
    InvalidN,
    MalformedRow,
    MixedShapes,
    NoCompleteBar,
    NonMonotonicTimestamps,
    TooFewFrames,
    UnknownUnit,
)
from batontrack.pipeline import (
    AverageTrajectory,
    BarSegment,
    CaptureSequence,
    MovementClass,
    SequenceMeta,
    average_bars,
    average_from_dict,
    average_to_dict,
    bar_length_s,
    beat_slices,
    export_capture_csv,
    extract_bars,
    import_capture_csv,
    load_average,
    resample_bar,
    save_average,
    segment_bars,
    shift_to_downbeat,
)


def make_sequence(times, positions, **meta):
    return CaptureSequence(np.asarray(times, dtype=float),
                           np.asarray(positions, dtype=float),
                           SequenceMeta(**meta))


class TestCsvImport:
    def test_well_formed(self):
        csv = "unit,m\nframe,t,x,y,z\n0,0.0,0.1,0.2,0.3\n1,0.01,0.11,0.21,0.31\n2,0.02,0.12,0.22,0.32\n"
        seq = import_capture_csv(io.StringIO(csv))
        assert len(seq) == 3
        assert np.allclose(seq.times, [0.0, 0.01, 0.02], atol=0)
        assert np.allclose(seq.positions[1], [0.11, 0.21, 0.31], atol=0)

    def test_millimeter_conversion(self):
        csv = "unit,mm\nframe,t,x,y,z\n0,0.0,350.0,0.0,0.0\n"
        seq = import_capture_csv(io.StringIO(csv))
        assert abs(seq.positions[0, 0] - 0.35) < 1e-15

    def test_malformed_row_cites_line(self):
        csv = "unit,m\nframe,t,x,y,z\n0,0.0,0.1,0.2,0.3\n1,bad,0.1,0.2,0.3\n"
        with pytest.raises(MalformedRow) as err:
            import_capture_csv(io.StringIO(csv))
        assert err.value.row == 4

    def test_wrong_field_count(self):
        csv = "unit,m\nframe,t,x,y,z\n0,0.0,0.1,0.2\n"
        with pytest.raises(MalformedRow):
            import_capture_csv(io.StringIO(csv))

    def test_unknown_unit(self):
        with pytest.raises(UnknownUnit):
            import_capture_csv(io.StringIO("unit,cm\nframe,t,x,y,z\n"))

    def test_non_monotonic_timestamps(self):
        csv = "unit,m\nframe,t,x,y,z\n0,0.0,0,0,0\n1,0.0,0,0,0\n"
        with pytest.raises(NonMonotonicTimestamps):
            import_capture_csv(io.StringIO(csv))

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(30)
        seq = make_sequence(np.cumsum(rng.uniform(0.001, 0.02, 40)),
                            rng.standard_normal((40, 3)))
        buf = io.StringIO()
        export_capture_csv(seq, buf)
        again = import_capture_csv(io.StringIO(buf.getvalue()))
        assert np.array_equal(again.times, seq.times)
        assert np.array_equal(again.positions, seq.positions)

    def test_export_mm_round_trip(self):
        seq = make_sequence([0.0, 0.5], [[0.35, 0.0, 0.1], [0.2, 0.1, 0.0]])
        buf = io.StringIO()
        export_capture_csv(seq, buf, unit="mm")
        assert buf.getvalue().startswith("unit,mm\n")
        again = import_capture_csv(io.StringIO(buf.getvalue()))
        assert np.allclose(again.positions, seq.positions, atol=1e-15)


class TestSegmentBars:
    def test_bar_length_at_76_bpm(self):
        assert abs(bar_length_s(76.0, 4) - 3.1579) < 1e-4

    def test_bar_length_at_60_bpm(self):
        assert bar_length_s(60.0, 4) == 4.0

    def test_four_bars_from_12_632_seconds(self):
        times = np.arange(0.0, 12.632, 0.01)
        times = np.append(times, 12.632)
        positions = np.zeros((len(times), 3))
        seq = make_sequence(times, positions, tempo_bpm=76.0, beats_per_bar=4)
        bars = segment_bars(seq)
        assert len(bars) == 4

    def test_partition_covers_frames_once(self):
        rng = np.random.default_rng(31)
        times = np.sort(rng.uniform(0.0, 9.0, 400))
        times[0] = 0.0
        seq = make_sequence(times, rng.standard_normal((400, 3)),
                            tempo_bpm=60.0, beats_per_bar=4)
        bars = segment_bars(seq)
        length = bar_length_s(60.0, 4)
        counted = sum(b.times.shape[0] for b in bars)
        in_span = np.sum(times < len(bars) * length)
        assert counted == in_span
        for b in bars:
            lo, hi = b.bar_index * length, (b.bar_index + 1) * length
            assert np.all((b.times >= lo) & (b.times < hi))

    def test_anchor_offsets_bars(self):
        times = np.arange(0.0, 10.0, 0.05)
        seq = make_sequence(times, np.zeros((len(times), 3)), tempo_bpm=60.0,
                            beats_per_bar=4, start_anchor_t=1.0)
        bars = segment_bars(seq)
        assert len(bars) == 2
        assert bars[0].times[0] >= 1.0

    def test_no_complete_bar(self):
        times = np.arange(0.0, 1.0, 0.05)
        seq = make_sequence(times, np.zeros((len(times), 3)), tempo_bpm=60.0, beats_per_bar=4)
        with pytest.raises(NoCompleteBar):
            segment_bars(seq)


class TestResampleBar:
    def test_uniform_frames_are_fixed_point(self):
        n = 32
        raw_times = np.linspace(0.0, 4.0, n)
        positions = np.column_stack([np.sin(raw_times), np.cos(raw_times), raw_times])
        seq = make_sequence(raw_times, positions, tempo_bpm=60.0, beats_per_bar=4)
        bar = resample_bar(segment_bars(seq)[0], n)
        # last frame is the bar boundary and is excluded from the raw bar
        assert bar.n == n

    def test_fixed_point_on_exact_grid(self):
        raw_times = np.linspace(0.0, 1.0, 16)
        positions = np.column_stack([raw_times, raw_times ** 2, np.ones_like(raw_times)])
        from batontrack.pipeline import RawBar

        raw = RawBar(times=raw_times, positions=positions, bar_index=0,
                     tempo_bpm=240.0, beats_per_bar=4)
        bar = resample_bar(raw, 16)
        assert np.max(np.abs(bar.points - positions)) < 1e-12

    def test_two_frames_linear(self):
        from batontrack.pipeline import RawBar

        raw = RawBar(times=np.array([0.0, 1.0]),
                     positions=np.array([[0.0, 0.0, 0.0], [1.0, 2.0, -1.0]]),
                     bar_index=0, tempo_bpm=240.0, beats_per_bar=5)
        bar = resample_bar(raw, 5)
        expected = np.linspace([0, 0, 0], [1.0, 2.0, -1.0], 5)
        assert np.max(np.abs(bar.points - expected)) < 1e-12

    def test_sinusoid_against_analytic_curve(self):
        f = 2.0
        dense_t = np.arange(0.0, 1.0 + 1e-9, 1.0 / 480.0)
        positions = np.column_stack([
            np.sin(2 * math.pi * f * dense_t),
            np.cos(2 * math.pi * f * dense_t),
            np.zeros_like(dense_t),
        ])
        from batontrack.pipeline import RawBar

        raw = RawBar(times=dense_t, positions=positions, bar_index=0,
                     tempo_bpm=240.0, beats_per_bar=4)
        bar = resample_bar(raw, 256)
        ts = np.linspace(dense_t[0], dense_t[-1], 256)
        analytic = np.column_stack([
            np.sin(2 * math.pi * f * ts),
            np.cos(2 * math.pi * f * ts),
            np.zeros_like(ts),
        ])
        assert np.max(np.abs(bar.points - analytic)) < 1e-4

    def test_endpoints_preserved(self):
        from batontrack.pipeline import RawBar

        rng = np.random.default_rng(32)
        times = np.sort(rng.uniform(0, 1, 30))
        positions = rng.standard_normal((30, 3))
        raw = RawBar(times=times, positions=positions, bar_index=0,
                     tempo_bpm=240.0, beats_per_bar=4)
        bar = resample_bar(raw, 16)
        assert np.allclose(bar.points[0], positions[0], atol=1e-15)
        assert np.allclose(bar.points[-1], positions[-1], atol=1e-15)

    def test_too_few_frames(self):
        from batontrack.pipeline import RawBar

        raw = RawBar(times=np.array([0.0]), positions=np.zeros((1, 3)),
                     bar_index=0, tempo_bpm=240.0, beats_per_bar=4)
        with pytest.raises(TooFewFrames):
            resample_bar(raw, 8)

    def test_invalid_n(self):
        from batontrack.pipeline import RawBar

        raw = RawBar(times=np.array([0.0, 1.0]), positions=np.zeros((2, 3)),
                     bar_index=0, tempo_bpm=240.0, beats_per_bar=4)
        with pytest.raises(InvalidN):
            resample_bar(raw, 6)


class TestShiftToDownbeat:
    def _bar(self, points):
        return BarSegment(points, tempo_bpm=76.0, beats_per_bar=4, source_bar_index=0)

    def test_already_at_minimum_unchanged(self):
        rng = np.random.default_rng(33)
        points = rng.standard_normal((16, 3))
        points[0, 1] = -10.0
        bar = self._bar(points)
        assert np.array_equal(shift_to_downbeat(bar).points, points)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(34)
        points = rng.standard_normal((16, 3))
        bar = self._bar(points)
        canonical = shift_to_downbeat(bar).points
        for k in (3, 7, 12):
            rotated = self._bar(np.roll(points, k, axis=0))
            assert np.array_equal(shift_to_downbeat(rotated).points, canonical)

    def test_explicit_anchor(self):
        rng = np.random.default_rng(35)
        points = rng.standard_normal((12, 3))
        bar = self._bar(points)
        shifted = shift_to_downbeat(bar, anchor=5)
        assert np.array_equal(shifted.points, np.roll(points, -5, axis=0))

    def test_multiset_preserved(self):
        rng = np.random.default_rng(36)
        points = rng.standard_normal((16, 3))
        shifted = shift_to_downbeat(self._bar(points))
        assert np.array_equal(np.sort(points, axis=0), np.sort(shifted.points, axis=0))

    def test_generator_truth_within_two_samples(self):
        from batontrack.synthetic import PerturbationSpec, generate_synthetic

        seq = generate_synthetic(PerturbationSpec(MovementClass.CONTROL, noise_sigma_m=0.0),
                                 bars=1)
        bars = extract_bars(seq, n_points=256)
        raw = segment_bars(seq)[0]
        resampled = resample_bar(raw, 256)
        rng = np.random.default_rng(37)
        for _ in range(5):
            k = int(rng.integers(0, 256))
            rotated = BarSegment(np.roll(resampled.points, k, axis=0), 76.0, 4, 0)
            detected = shift_to_downbeat(rotated)
            # downbeat truth is index 0 of the unrotated bar
            offset = np.argmax(np.all(detected.points == resampled.points[0], axis=1))
            assert min(offset, 256 - offset) <= 2


class TestAverageBars:
    def _bar(self, points, index=0):
        return BarSegment(points, tempo_bpm=76.0, beats_per_bar=4, source_bar_index=index)

    def test_single_bar_identity(self):
        rng = np.random.default_rng(38)
        points = rng.standard_normal((16, 3))
        avg = average_bars([self._bar(points)], MovementClass.KNEE)
        assert np.array_equal(avg.points, points)
        assert avg.sample_bars == 1
        assert avg.label is MovementClass.KNEE

    def test_mirrored_bars_cancel_x(self):
        rng = np.random.default_rng(39)
        points = rng.standard_normal((16, 3))
        mirrored = points.copy()
        mirrored[:, 0] = -mirrored[:, 0]
        avg = average_bars([self._bar(points, 0), self._bar(mirrored, 1)], "waist")
        assert np.max(np.abs(avg.points[:, 0])) < 1e-15

    def test_matches_brute_force_mean(self):
        rng = np.random.default_rng(40)
        stacks = [rng.standard_normal((16, 3)) for _ in range(10)]
        bars = [self._bar(p, i) for i, p in enumerate(stacks)]
        avg = average_bars(bars, "feet")
        brute = sum(stacks) / len(stacks)
        assert np.max(np.abs(avg.points - brute)) < 1e-12

    def test_permutation_invariant(self):
        rng = np.random.default_rng(41)
        bars = [self._bar(rng.standard_normal((16, 3)), i) for i in range(6)]
        a = average_bars(bars, "knee")
        b = average_bars(bars[::-1], "knee")
        assert np.array_equal(a.points, b.points)

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            average_bars([], "knee")

    def test_mixed_shapes_raises(self):
        rng = np.random.default_rng(42)
        a = self._bar(rng.standard_normal((16, 3)))
        b = BarSegment(rng.standard_normal((8, 3)), 76.0, 4, 1)
        with pytest.raises(MixedShapes):
            average_bars([a, b], "knee")


class TestBeatSlices:
    def test_256_by_4(self):
        slices = beat_slices(256, 4)
        assert [(r.start, r.stop) for r in slices] == [(0, 64), (64, 128), (128, 192), (192, 256)]

    def test_8_by_4(self):
        assert [(r.start, r.stop) for r in beat_slices(8, 4)] == [(0, 2), (2, 4), (4, 6), (6, 8)]

    def test_partition_property(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            b = int(rng.integers(1, 9))
            n = b * int(rng.integers(1, 40))
            slices = beat_slices(n, b)
            seen = sorted(i for r in slices for i in r)
            assert seen == list(range(n))

    def test_indivisible_raises(self):
        with pytest.raises(IndivisibleN):
            beat_slices(10, 4)


class TestAveragePersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(44)
        avg = AverageTrajectory(label=MovementClass.WRIST,
                                points=rng.standard_normal((16, 3)),
                                sample_bars=5, tempo_bpm=76.0, beats_per_bar=4)
        path = tmp_path / "wrist.json"
        save_average(avg, path)
        again = load_average(path)
        assert again.label is MovementClass.WRIST
        assert np.array_equal(again.points, avg.points)
        assert again.sample_bars == 5

    def test_schema_keys(self, tmp_path):
        avg = AverageTrajectory(label="control", points=np.zeros((4, 3)),
                                sample_bars=1, tempo_bpm=76.0, beats_per_bar=4)
        path = tmp_path / "control.json"
        save_average(avg, path)
        data = json.loads(path.read_text())
        assert list(data.keys()) == ["label", "n", "tempo_bpm", "beats_per_bar",
                                     "points", "sample_bars"]

    def test_serialization_deterministic(self, tmp_path):
        rng = np.random.default_rng(45)
        avg = AverageTrajectory(label="feet", points=rng.standard_normal((8, 3)),
                                sample_bars=3, tempo_bpm=76.0, beats_per_bar=4)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_average(avg, p1)
        save_average(average_from_dict(average_to_dict(avg)), p2)
        assert p1.read_bytes() == p2.read_bytes()
