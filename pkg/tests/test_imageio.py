import numpy as np
import pytest
from PIL import Image

from socelas.errors import FormatError, MalformedHeader, Truncated, UnsupportedDepth
from socelas.imageio import (
    INVALID,
    DisparityMap,
    GrayImage,
    GroundTruth,
    disparity_to_pgm8,
    disparity_to_png16,
    format_for_path,
    load_gray,
    load_gt_png16,
    load_pfm,
    load_pgm,
    save_disparity,
    save_pgm,
)


def test_pgm_header_2x2_passes_bytes_through(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 1, 2, 3]))
    img = load_pgm(path)
    assert (img.width, img.height) == (2, 2)
    assert img.pixels.tolist() == [0, 1, 2, 3]
    assert img.data[1, 0] == 2  # (u=0, v=1) is index v*width + u


def test_pgm_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n3 1\n# depth\n255\n" + bytes([7, 8, 9]))
    assert load_pgm(path).pixels.tolist() == [7, 8, 9]


def test_pgm_16bit_is_unsupported(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x01")
    with pytest.raises(UnsupportedDepth):
        load_pgm(path)


def test_empty_pgm_is_truncated(tmp_path):
    path = tmp_path / "empty.pgm"
    path.write_bytes(b"")
    with pytest.raises(Truncated):
        load_pgm(path)


def test_short_payload_is_truncated(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(Truncated):
        load_pgm(path)


@pytest.mark.parametrize("blob", [b"P2\n1 1\n255\n0", b"P5\nx 1\n255\n\x00", b"P5\n0 1\n255\n"])
def test_bad_headers(tmp_path, blob):
    path = tmp_path / "bad.pgm"
    path.write_bytes(blob)
    with pytest.raises(MalformedHeader):
        load_pgm(path)


def test_pgm_round_trip(tmp_path, rng):
    img = GrayImage(rng.integers(0, 256, (17, 23), dtype=np.uint8))
    save_pgm(img, tmp_path / "r.pgm")
    assert load_pgm(tmp_path / "r.pgm") == img


def test_images_are_immutable(rng):
    img = GrayImage(rng.integers(0, 256, (4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        img.data[0, 0] = 1


def test_from_bytes_checks_length():
    with pytest.raises(FormatError):
        GrayImage.from_bytes(3, 3, bytes(8))


def test_gt_fixed_point(tmp_path):
    raw = np.array([[2560, 0]], dtype=np.uint16)
    Image.fromarray(raw).save(tmp_path / "gt.png")
    gt = load_gt_png16(tmp_path / "gt.png")
    assert gt.disparity[0, 0] == 10.0
    assert gt.valid.tolist() == [[True, False]]


def test_gt_rejects_8bit_png(tmp_path):
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(tmp_path / "g8.png")
    with pytest.raises(FormatError):
        load_gt_png16(tmp_path / "g8.png")


def test_load_gray_png(tmp_path, rng):
    data = rng.integers(0, 256, (5, 6), dtype=np.uint8)
    Image.fromarray(data).save(tmp_path / "g.png")
    assert np.array_equal(load_gray(tmp_path / "g.png").data, data)


def test_load_gray_rejects_color(tmp_path):
    Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8)).save(tmp_path / "rgb.png")
    with pytest.raises(FormatError):
        load_gray(tmp_path / "rgb.png")


def test_disparity_range_enforced():
    with pytest.raises(FormatError):
        DisparityMap(np.array([[64]], dtype=np.uint16), 64)
    DisparityMap(np.array([[63, INVALID]], dtype=np.uint16), 64)


def test_pgm8_scaled_value():
    dmap = DisparityMap(np.array([[10, INVALID]], dtype=np.uint16), 64)
    assert disparity_to_pgm8(dmap).tolist() == [[40, 0]]


def test_png16_value():
    dmap = DisparityMap(np.array([[10, INVALID]], dtype=np.uint16), 64)
    assert disparity_to_png16(dmap).tolist() == [[2560, 0]]


def test_pfm_invalid_is_minus_one(tmp_path):
    dmap = DisparityMap(np.array([[3, INVALID], [5, 6]], dtype=np.uint16), 8)
    save_disparity(dmap, tmp_path / "d.pfm", "pfm")
    values = load_pfm(tmp_path / "d.pfm")
    assert values.tolist() == [[3.0, -1.0], [5.0, 6.0]]


def test_pfm_is_stored_bottom_row_first(tmp_path):
    dmap = DisparityMap(np.array([[1], [2]], dtype=np.uint16), 8)
    save_disparity(dmap, tmp_path / "d.pfm", "pfm")
    blob = (tmp_path / "d.pfm").read_bytes()
    assert blob.startswith(b"Pf\n1 2\n-1.0\n")
    assert np.frombuffer(blob[-8:], dtype="<f4").tolist() == [2.0, 1.0]


def test_png16_round_trip_through_gt_loader(tmp_path, rng):
    data = rng.integers(0, 64, (9, 11)).astype(np.uint16)
    data[rng.random((9, 11)) < 0.2] = INVALID
    dmap = DisparityMap(data, 64)
    save_disparity(dmap, tmp_path / "d.png", "png16-kitti")
    gt = load_gt_png16(tmp_path / "d.png")
    # d = 0 collides with the "no GT" marker on disk, so compare where d > 0
    ok = dmap.valid & (data > 0)
    assert np.array_equal(gt.disparity[ok], data[ok].astype(float))
    assert not gt.valid[~dmap.valid].any()


def test_pgm8_written_file(tmp_path):
    dmap = DisparityMap(np.array([[0, 63]], dtype=np.uint16), 64)
    save_disparity(dmap, tmp_path / "d.pgm", "pgm8-scaled")
    assert load_pgm(tmp_path / "d.pgm").pixels.tolist() == [0, 255]


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        save_disparity(DisparityMap(np.zeros((1, 1), np.uint16), 4), tmp_path / "x", "tiff")


def test_format_for_path():
    assert format_for_path("a.PFM") == "pfm"
    assert format_for_path("a.pgm") == "pgm8-scaled"
    assert format_for_path("a.png") == "png16-kitti"


def test_density():
    dmap = DisparityMap(np.array([[1, INVALID, 2, INVALID]], dtype=np.uint16), 4)
    assert dmap.density() == 0.5
    assert GroundTruth(np.array([[0, 256]], dtype=np.uint16)).valid.tolist() == [[False, True]]
