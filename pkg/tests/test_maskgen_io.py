"""Mask generation, PNG round trips, and the binary weights container."""

import os
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcinpaint.imageio import load_image, load_mask, save_image, save_mask
from pcinpaint.maskgen import MaskGenError, MaskSpec, generate_mask
from pcinpaint.unet import UNetConfig, UNetModel
from pcinpaint.weights_io import (WeightsError, load_model, load_tensors,
                                  save_model, save_tensors)


# ---------------------------------------------------------------------------
# mask generation

@pytest.mark.parametrize("ratio", [0.05, 0.1, 0.2])
def test_hole_ratio_within_tolerance(ratio):
    for seed in (7, 8, 9):
        mask = generate_mask(MaskSpec(ratio, (256, 256), seed=seed))
        hole = 1.0 - mask.mean()
        assert abs(hole - ratio) <= 0.01


def test_mask_is_binary_white_valid():
    mask = generate_mask(MaskSpec(0.1, (128, 128), seed=0))
    assert mask.shape == (1, 128, 128)
    assert set(np.unique(mask)) <= {0.0, 1.0}
    assert mask.mean() > 0.5  # mostly valid at r=0.1


def test_mask_seeded_determinism():
    a = generate_mask(MaskSpec(0.15, (128, 128), seed=3))
    b = generate_mask(MaskSpec(0.15, (128, 128), seed=3))
    c = generate_mask(MaskSpec(0.15, (128, 128), seed=4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_mask_holes_are_elongated_not_disks():
    # strokes should be irregular: the hole must not be a single convex blob
    mask = generate_mask(MaskSpec(0.2, (256, 256), seed=1))
    hole = mask[0] < 0.5
    ys, xs = np.nonzero(hole)
    bbox_area = (ys.max() - ys.min() + 1) * (xs.max() - xs.min() + 1)
    assert hole.sum() < 0.75 * bbox_area


def test_small_canvas_supported():
    mask = generate_mask(MaskSpec(0.15, (64, 64), seed=2))
    assert abs((1.0 - mask.mean()) - 0.15) <= 0.01


def test_invalid_spec_rejected():
    with pytest.raises(MaskGenError):
        MaskSpec(0.0, (64, 64))
    with pytest.raises(MaskGenError):
        MaskSpec(0.95, (64, 64))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_mask_ratio_property(seed):
    spec = MaskSpec(0.1, (96, 96), seed=seed)
    hole = 1.0 - generate_mask(spec).mean()
    assert abs(hole - 0.1) <= 0.01


# ---------------------------------------------------------------------------
# image / mask PNG io

def test_image_round_trip_within_quantization(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.random((1, 3, 32, 32)).astype(np.float32)
    p = str(tmp_path / "img.png")
    save_image(p, img)
    back = load_image(p)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 1.0 / 510 + 1e-6


def test_mask_round_trip_exact(tmp_path):
    mask = generate_mask(MaskSpec(0.1, (64, 64), seed=5))
    p = str(tmp_path / "mask.png")
    save_mask(p, mask)
    assert np.array_equal(load_mask(p)[0], mask)


def test_load_image_values_clamped(tmp_path):
    img = np.array([[[[-1.0, 2.0], [0.5, 0.25]]]] * 3,
                   np.float32).reshape(1, 3, 2, 2)
    p = str(tmp_path / "c.png")
    save_image(p, img)
    back = load_image(p)
    assert back.min() >= 0.0 and back.max() <= 1.0


# ---------------------------------------------------------------------------
# weights container

def rand_tensors():
    rng = np.random.default_rng(6)
    return {"a.weight": rng.standard_normal((2, 3, 3, 3)).astype(np.float32),
            "a.bias": rng.standard_normal(2).astype(np.float32),
            "scalar": np.array([1.5], np.float32)}


def test_tensor_round_trip_bit_exact(tmp_path):
    p = str(tmp_path / "w.pcnw")
    t = rand_tensors()
    save_tensors(p, t)
    back = load_tensors(p)
    assert set(back) == set(t)
    for k in t:
        assert back[k].dtype == np.float32
        assert np.array_equal(back[k], t[k])


def test_bad_magic_rejected(tmp_path):
    p = str(tmp_path / "w.pcnw")
    save_tensors(p, rand_tensors())
    raw = bytearray(open(p, "rb").read())
    raw[:4] = b"XXXX"
    open(p, "wb").write(bytes(raw))
    with pytest.raises(WeightsError) as e:
        load_tensors(p)
    assert e.value.code == "magic"


def test_corrupt_payload_fails_crc(tmp_path):
    p = str(tmp_path / "w.pcnw")
    save_tensors(p, rand_tensors())
    raw = bytearray(open(p, "rb").read())
    raw[40] ^= 0xFF
    open(p, "wb").write(bytes(raw))
    with pytest.raises(WeightsError) as e:
        load_tensors(p)
    assert e.value.code == "crc"


def test_truncated_file_rejected(tmp_path):
    p = str(tmp_path / "w.pcnw")
    save_tensors(p, rand_tensors())
    raw = open(p, "rb").read()
    open(p, "wb").write(raw[: len(raw) // 2])
    with pytest.raises(WeightsError) as e:
        load_tensors(p)
    assert e.value.code in ("truncated", "crc")


def test_model_round_trip_preserves_config(tmp_path):
    cfg = UNetConfig(depth=3, encoder_channels=(4, 8, 8),
                     kernel_sizes=(5, 3, 3), leaky_slope=0.1)
    model = UNetModel(cfg, seed=1)
    p = str(tmp_path / "m.pcnw")
    save_model(p, model)
    back = load_model(p)
    assert back.config == cfg
    for k in model.params:
        assert np.array_equal(back.params[k], model.params[k])


def test_model_with_wrong_names_rejected(tmp_path):
    cfg = UNetConfig(depth=2, encoder_channels=(4, 4), kernel_sizes=(3, 3))
    model = UNetModel(cfg, seed=0)
    p = str(tmp_path / "m.pcnw")
    save_model(p, model)
    tensors = load_tensors(p)
    tensors["rogue"] = np.zeros(1, np.float32)
    save_tensors(p, tensors)
    with pytest.raises(WeightsError) as e:
        load_model(p)
    assert e.value.code == "names"


def test_save_is_atomic_no_partial_file(tmp_path):
    p = str(tmp_path / "sub" / "w.pcnw")
    os.makedirs(os.path.dirname(p))
    with pytest.raises(Exception):
        save_tensors(p, {"bad": np.array(["not", "numeric"])})
    # a failed save must not leave a file behind
    assert not os.path.exists(p)
