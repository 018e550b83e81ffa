import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liquidstate.frames import (
    ADC_MAX,
    FILE_HEADER,
    POSTURE_NAMES,
    POSTURES,
    FrameFormatError,
    Manifest,
    PostureLabel,
    PressureFrame,
    assemble_frame,
    load_frames,
    normalize_to_phase,
    save_frames,
)


def random_frames(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        PressureFrame(rng.integers(0, ADC_MAX + 1, size=(19, 10)), int(rng.integers(1, 20)), POSTURES[int(rng.integers(15))])
        for _ in range(n)
    ]


def test_label_taxonomy():
    assert [p.id for p in POSTURES] == list(range(15))
    assert len(set(POSTURE_NAMES)) == 15
    assert PostureLabel.from_name("RA leaning back").id == 12
    assert PostureLabel.from_id(13).name == "sitting on the leading edge"
    for abbr in ("LC", "RC", "LA", "RA"):
        assert sum(name.startswith(abbr + " ") for name in POSTURE_NAMES) == 2
    with pytest.raises(ValueError):
        PostureLabel.from_name("standing")
    with pytest.raises(ValueError):
        PostureLabel(3, "upright")


def test_frame_validation():
    with pytest.raises(ValueError):
        PressureFrame(np.zeros((10, 19)), 1, POSTURES[0])
    with pytest.raises(ValueError):
        PressureFrame(np.full((19, 10), 1024), 1, POSTURES[0])
    with pytest.raises(ValueError):
        PressureFrame(np.zeros((19, 10)), 0, POSTURES[0])
    frame = PressureFrame(np.zeros((19, 10)), 1, POSTURES[0])
    with pytest.raises(ValueError):
        frame.values[0, 0] = 5


def test_assemble_zero():
    out = assemble_frame(np.zeros((9, 9), int), np.zeros((10, 9), int))
    assert out.shape == (19, 10)
    assert out.size == 190
    assert not out.any()


def test_assemble_seat_origin():
    seat = np.zeros((9, 9), int)
    seat[0, 0] = 500
    out = assemble_frame(seat, np.zeros((10, 9), int))
    assert out[10, 0] == 500
    assert not out[:, 9].any()


def test_assemble_injective_on_all_source_cells():
    # enumerate every one of the 81 + 90 sensor cells; each must land on its own output cell
    targets = set()
    for sheet, shape, row_offset in (("seat", (9, 9), 10), ("back", (10, 9), 0)):
        for r in range(shape[0]):
            for c in range(shape[1]):
                seat = np.zeros((9, 9), int)
                back = np.zeros((10, 9), int)
                (seat if sheet == "seat" else back)[r, c] = 777
                out = assemble_frame(seat, back)
                hits = np.argwhere(out == 777)
                assert len(hits) == 1 and out.sum() == 777
                assert tuple(hits[0]) == (r + row_offset, c)
                targets.add(tuple(hits[0]))
    assert len(targets) == 171
    assert all(col != 9 for _, col in targets)


@pytest.mark.parametrize("seat_shape,back_shape", [((9, 10), (10, 9)), ((9, 9), (9, 9)), ((81,), (10, 9))])
def test_assemble_shape_mismatch(seat_shape, back_shape):
    with pytest.raises(ValueError, match="sheet"):
        assemble_frame(np.zeros(seat_shape, int), np.zeros(back_shape, int))


def test_normalize_endpoints():
    values = np.zeros((19, 10), int)
    values[0, 0] = ADC_MAX
    phases = normalize_to_phase(PressureFrame(values, 1, POSTURES[0])).phases
    assert phases[0, 0] == pytest.approx(math.pi, abs=0)
    assert phases[1, 1] == 0.0


def test_normalize_constant_frame_minmax():
    frame = PressureFrame(np.full((19, 10), 512), 1, POSTURES[0])
    assert not normalize_to_phase(frame, "per_frame_minmax").phases.any()


def test_normalize_minmax_spans_range():
    frame = random_frames(1, seed=3)[0]
    phases = normalize_to_phase(frame, "per_frame_minmax").phases
    assert phases.min() == 0.0 and phases.max() == pytest.approx(math.pi)


@given(st.integers(0, ADC_MAX), st.integers(0, ADC_MAX))
def test_fixed_range_monotone(a, b):
    values = np.zeros((19, 10), int)
    values[0, 0], values[0, 1] = a, b
    ph = normalize_to_phase(values).phases
    assert 0.0 <= ph[0, 0] <= math.pi
    if a <= b:
        assert ph[0, 0] <= ph[0, 1]


def test_save_load_round_trip(tmp_path):
    frames = random_frames(10)
    path = tmp_path / "frames.csv"
    save_frames(frames, path)
    assert path.read_text().splitlines()[0] == FILE_HEADER
    assert load_frames(path) == frames


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 40), st.integers(0, 14), st.integers(0, 2**31)), max_size=6))
def test_save_load_property(tmp_path_factory, cases):
    frames = [
        PressureFrame(np.random.default_rng(seed).integers(0, ADC_MAX + 1, (19, 10)), sid, POSTURES[lab])
        for sid, lab, seed in cases
    ]
    path = tmp_path_factory.mktemp("rt") / "f.csv"
    save_frames(frames, path)
    assert load_frames(path) == frames


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(FILE_HEADER + "\n")
    assert load_frames(path) == []


def _write_rows(path, rows):
    path.write_text(FILE_HEADER + "\n" + "".join(r + "\n" for r in rows))


def test_out_of_range_names_line(tmp_path):
    good = "1,upright," + ",".join(["0"] * 190)
    bad = "2,upright," + ",".join(["1024"] + ["0"] * 189)
    path = tmp_path / "bad.csv"
    _write_rows(path, [good, bad])
    with pytest.raises(FrameFormatError, match="line 3") as err:
        load_frames(path)
    assert err.value.line == 3


@pytest.mark.parametrize(
    "row,match",
    [
        ("1,upright," + ",".join(["0"] * 189), "expected 192 fields"),
        ("1,sprawling," + ",".join(["0"] * 190), "unknown posture"),
        ("1,upright," + ",".join(["x"] * 190), "non-integer"),
        ("0,upright," + ",".join(["0"] * 190), "subject id"),
    ],
)
def test_malformed_rows(tmp_path, row, match):
    path = tmp_path / "bad.csv"
    _write_rows(path, [row])
    with pytest.raises(FrameFormatError, match=match):
        load_frames(path)


def test_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("subject,label\n")
    with pytest.raises(FrameFormatError, match="line 1"):
        load_frames(path)


def test_manifest_round_trip(tmp_path):
    frames = random_frames(12, seed=5)
    m = Manifest.describe(frames, ["frames.csv"], seed=7)
    m.save(tmp_path / "manifest.json")
    back = Manifest.load(tmp_path / "manifest.json")
    assert back.files == ["frames.csv"]
    assert sum(back.class_counts.values()) == 12
    assert back.subjects == sorted({f.subject_id for f in frames})
    assert back.extra == {"seed": 7}
