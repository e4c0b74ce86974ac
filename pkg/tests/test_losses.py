"""Loss terms: hand values, scalar-loop oracles, Gram structure, ablation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcinpaint import tensor as T
from pcinpaint.losses import (FeatureConfig, FeatureNetwork, IdentityFeatures,
                              LossWeights, gram, hole_valid_losses,
                              perceptual_loss, style_loss, total_loss,
                              tv_loss, _composite)
from pcinpaint.tensor import Tensor, TensorError


def test_tv_hand_case():
    # [[0,1],[2,3]]: |dx| = 1+1, |dy| = 2+2, sum 6, mean form 6/4
    x = np.array([[0, 1], [2, 3]], np.float32).reshape(1, 1, 2, 2)
    assert tv_loss(x).item() == pytest.approx(1.5, abs=1e-7)


def test_tv_constant_image_is_zero():
    x = np.full((1, 3, 5, 5), 0.7, np.float32)
    assert tv_loss(x).item() == pytest.approx(0.0, abs=1e-7)


def test_tv_single_pixel_is_zero():
    assert tv_loss(np.ones((1, 1, 1, 1), np.float32)).item() == 0.0


def test_tv_matches_loop():
    rng = np.random.default_rng(0)
    x = rng.random((1, 2, 4, 5)).astype(np.float32)
    s = 0.0
    for c in range(2):
        for i in range(4):
            for j in range(4):
                s += abs(float(x[0, c, i, j + 1]) - float(x[0, c, i, j]))
        for i in range(3):
            for j in range(5):
                s += abs(float(x[0, c, i + 1, j]) - float(x[0, c, i, j]))
    assert tv_loss(x).item() == pytest.approx(s / x.size, rel=1e-5)


def test_gram_hand_case():
    # F = I2 over h*w=2 positions: F F^T = I2, scaled by 1/(C*h*w) = 1/4
    f = np.array([[1, 0], [0, 1]], np.float32).reshape(1, 2, 2, 1)
    g = gram(f).data[0]
    assert np.allclose(g, 0.25 * np.eye(2), atol=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_gram_symmetric_psd(seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((1, 3, 4, 4)).astype(np.float32)
    g = gram(f).data[0].astype(np.float64)
    assert np.allclose(g, g.T, atol=1e-6)
    assert np.linalg.eigvalsh(g).min() >= -1e-6


def test_hole_valid_hand_case():
    # M = [[1,0],[1,1]], |diff| = [[4,8],[0,0]] -> hole 8/4, valid 4/4
    mask = np.array([[1, 0], [1, 1]], np.float32).reshape(1, 1, 2, 2)
    gt = np.zeros((1, 1, 2, 2), np.float32)
    out = np.array([[4, 8], [0, 0]], np.float32).reshape(1, 1, 2, 2)
    l_hole, l_valid = hole_valid_losses(out, gt, mask)
    assert l_hole.item() == pytest.approx(2.0, abs=1e-7)
    assert l_valid.item() == pytest.approx(1.0, abs=1e-7)


def test_perceptual_identity_tap_matches_loop():
    rng = np.random.default_rng(1)
    gt = rng.random((1, 3, 4, 4)).astype(np.float32)
    out = rng.random((1, 3, 4, 4)).astype(np.float32)
    mask = (rng.random((1, 1, 4, 4)) > 0.5).astype(np.float32)
    comp = _composite(Tensor(out), Tensor(gt), mask)
    got = perceptual_loss(Tensor(out), comp, Tensor(gt),
                          IdentityFeatures()).item()
    want = (np.abs(out.astype(np.float64) - gt).mean()
            + np.abs(comp.data.astype(np.float64) - gt).mean())
    assert got == pytest.approx(want, rel=1e-5)


def test_style_identity_tap_matches_scalar_recompute():
    rng = np.random.default_rng(2)
    gt = rng.random((1, 2, 2, 1)).astype(np.float32)
    out = rng.random((1, 2, 2, 1)).astype(np.float32)
    mask = np.ones((1, 1, 2, 1), np.float32)  # comp == gt branch collapses

    def gram_np(f):
        fr = f.reshape(2, 2).astype(np.float64)
        return fr @ fr.T / (2 * 2 * 1)

    got = style_loss(Tensor(out), _composite(Tensor(out), Tensor(gt), mask),
                     Tensor(gt), IdentityFeatures()).item()
    want = (np.abs(gram_np(out) - gram_np(gt)).mean()
            + np.abs(gram_np(gt) - gram_np(gt)).mean())
    assert got == pytest.approx(want, rel=1e-5)


def test_total_loss_hand_composition():
    rng = np.random.default_rng(3)
    gt = rng.random((1, 3, 4, 4)).astype(np.float32)
    out = rng.random((1, 3, 4, 4)).astype(np.float32)
    mask = (rng.random((1, 1, 4, 4)) > 0.4).astype(np.float32)
    net = IdentityFeatures()
    w = LossWeights()
    total, br = total_loss(Tensor(out), Tensor(gt), mask, net, w)
    comp = _composite(Tensor(out), Tensor(gt), mask)
    l_hole, l_valid = hole_valid_losses(Tensor(out), Tensor(gt), mask)
    want = (w.tv * tv_loss(comp).item()
            + w.valid * l_valid.item() + w.hole * l_hole.item()
            + w.perceptual * perceptual_loss(
                Tensor(out), comp, Tensor(gt), net).item()
            + w.style * style_loss(Tensor(out), comp, Tensor(gt), net).item())
    assert total.item() == pytest.approx(want, rel=1e-6)
    assert br["total"] == pytest.approx(want, rel=1e-6)
    assert set(br) == {"tv", "valid", "hole", "perceptual", "style", "total"}


def test_ablation_switch_matches_zero_weight_bitwise():
    rng = np.random.default_rng(4)
    gt = rng.random((1, 3, 8, 8)).astype(np.float32)
    out = rng.random((1, 3, 8, 8)).astype(np.float32)
    mask = (rng.random((1, 1, 8, 8)) > 0.3).astype(np.float32)
    net = FeatureNetwork(FeatureConfig(block_channels=((4,),)), seed=0)
    off = LossWeights(use_style=False, use_perceptual=False)
    zero = LossWeights(style=0.0, perceptual=0.0)
    t_off, br_off = total_loss(Tensor(out), Tensor(gt), mask, net, off)
    t_zero, _ = total_loss(Tensor(out), Tensor(gt), mask, net, zero)
    assert t_off.item() == t_zero.item()
    assert "style" not in br_off and "perceptual" not in br_off


def test_feature_network_taps_shrink_and_are_frozen():
    net = FeatureNetwork(FeatureConfig(block_channels=((4, 4), (8, 8))),
                         seed=0)
    x = np.random.default_rng(5).random((1, 3, 16, 16)).astype(np.float32)
    taps = net.features(x)
    assert [t.shape for t in taps] == [(1, 4, 8, 8), (1, 8, 4, 4)]
    # frozen: taps carry no tape unless the input does
    assert all(t.tape is None for t in taps)


def test_feature_network_seeded_determinism():
    a = FeatureNetwork(FeatureConfig(block_channels=((4,),)), seed=3)
    b = FeatureNetwork(FeatureConfig(block_channels=((4,),)), seed=3)
    c = FeatureNetwork(FeatureConfig(block_channels=((4,),)), seed=4)
    k = "feat.block1.conv1.weight"
    assert np.array_equal(a.params[k], b.params[k])
    assert not np.array_equal(a.params[k], c.params[k])


def test_negative_weight_rejected():
    with pytest.raises(TensorError):
        LossWeights(hole=-1.0)
