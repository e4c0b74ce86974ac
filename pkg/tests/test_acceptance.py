"""Acceptance suite: one test per release criterion.

Each test prints a single ``PASS [criterion] ...`` / ``FAIL [criterion] ...``
line straight to the terminal (bypassing pytest capture) so a full run ends
with one line per criterion.  The desk-scale training and ablation tests
really train models and together take ~25 min on one laptop core; everything
else finishes in a couple of minutes.
"""

import base64
import io
import os
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from pcinpaint.classical_ns import NSConfig, ns_inpaint
from pcinpaint.data import make_synthetic_dataset
from pcinpaint.desk import desk_config, desk_unet, hole_psnrs, loss_fall
from pcinpaint.evaluate import EvalConfig, evaluate
from pcinpaint.gradsuite import run_gradient_suite
from pcinpaint.losses import LossWeights, gram, hole_valid_losses, tv_loss
from pcinpaint.maskgen import MaskSpec, generate_mask
from pcinpaint.metrics import psnr, ssim
from pcinpaint.pconv import (PartialConvLayer, mask_update, pconv_forward,
                             pconv_oracle)
from pcinpaint.server import create_app
from pcinpaint.tensor import Tensor
from pcinpaint.train import train
from pcinpaint.unet import UNetConfig, UNetModel, _pool_mask, unet_forward
from pcinpaint.weights_io import load_model, load_tensors, save_model


@pytest.fixture
def report(capfd):
    """One PASS/FAIL line per criterion, printed past pytest's capture."""
    def _report(name, ok, detail=""):
        with capfd.disabled():
            print(f"{'PASS' if ok else 'FAIL'} [{name}] {detail}", flush=True)
        assert ok, f"{name}: {detail}"
    return _report


# -- kernel oracle ----------------------------------------------------------

def test_kernel_oracle_200_cases(report):
    t0 = time.time()
    worst = 0.0
    for case in range(200):
        rng = np.random.default_rng(case)
        n = int(rng.integers(1, 3))
        in_c = int(rng.integers(1, 4))
        out_c = int(rng.integers(1, 5))
        k = int(rng.choice([1, 3, 5]))
        h = int(rng.integers(5, 13))
        w = int(rng.integers(5, 13))
        density = float(rng.random())
        mask = (rng.random((n, 1, h, w)) < density).astype(np.float32)
        x = rng.standard_normal((n, in_c, h, w)).astype(np.float32) * mask
        scale = 1.0 / np.sqrt(in_c * k * k)  # fan-in scaling, as at init
        layer = PartialConvLayer(
            (scale * rng.standard_normal((out_c, in_c, k, k))).astype(np.float32),
            rng.standard_normal(out_c).astype(np.float32))
        out, valid = pconv_forward(Tensor(x), mask, layer)
        oout, ovalid = pconv_oracle(x, mask, layer)
        worst = max(worst,
                    float(np.abs(out.data - oout).max()),
                    float(np.abs(valid - ovalid).max()))
    dt = time.time() - t0
    report("kernel-oracle", worst <= 1e-5 and dt < 60.0,
           f"200 cases, max abs diff {worst:.2e}, {dt:.1f}s")


# -- gradient suite ---------------------------------------------------------

def test_gradient_suite(report):
    t0 = time.time()
    results = list(run_gradient_suite())
    dt = time.time() - t0
    bad = [name for name, excess in results if excess > 0]
    worst = max(excess for _, excess in results)
    report("gradient-suite", not bad and dt < 120.0,
           f"{len(results)} checks, worst excess {worst:.2e}, {dt:.1f}s"
           + (f", failing: {bad}" if bad else ""))


# -- mask saturation --------------------------------------------------------

def test_mask_saturation(report):
    # the encoder cascade (two partial convs then a pool per level) must
    # saturate any moderate mask to all-ones by the bottleneck
    kernels = UNetConfig().kernel_sizes  # depth-7 kernel schedule
    sat = 0
    masks_per_ratio = 10
    for ratio in (0.05, 0.1, 0.2):
        for i in range(masks_per_ratio):
            m = generate_mask(MaskSpec(ratio, (256, 256), seed=1000 + i))[None]
            for k in kernels:
                m = _pool_mask(mask_update(mask_update(m, k), k))
            sat += int(m.min() == 1.0)
    # the full forward pass must report the same: all-ones final mask
    # (channel widths do not affect mask propagation, so keep them slim)
    slim = UNetConfig(depth=7, encoder_channels=(2,) * 7,
                      kernel_sizes=UNetConfig().kernel_sizes)
    model = UNetModel(slim, seed=0)
    finals = 0
    for j, ratio in enumerate((0.05, 0.1, 0.2)):
        mask = generate_mask(MaskSpec(ratio, (256, 256), seed=2000 + j))[None]
        img = np.zeros((1, 3, 256, 256), np.float32)
        _, final = unet_forward(model, img, mask)
        finals += int(final.min() == 1.0)
    report("mask-saturation", sat == 30 and finals == 3,
           f"{sat}/30 cascades and {finals}/3 forward passes all-ones")


# -- hand-value suite -------------------------------------------------------

def test_hand_values(report):
    checks = {}

    # partial conv: 3x3 ones kernel over 1..9 with the centre masked out
    x = np.zeros((1, 1, 5, 5), np.float32)
    x[0, 0, 1:4, 1:4] = np.arange(1, 10, dtype=np.float32).reshape(3, 3)
    mask = np.ones((1, 1, 5, 5), np.float32)
    mask[0, 0, 2, 2] = 0.0
    layer = PartialConvLayer(np.ones((1, 1, 3, 3), np.float32),
                             np.zeros(1, np.float32))
    out, valid = pconv_forward(Tensor(x * mask), mask, layer)
    checks["pconv 45.0"] = (abs(out.data[0, 0, 2, 2] - 45.0) < 1e-4
                            and valid[0, 0, 2, 2] == 1.0)

    tv = tv_loss(np.array([[0, 1], [2, 3]], np.float32).reshape(1, 1, 2, 2))
    checks["tv 1.5"] = abs(tv.item() - 1.5) < 1e-7

    f = np.array([[1, 0], [0, 1]], np.float32).reshape(1, 2, 2, 1)
    checks["gram 0.25I"] = np.allclose(gram(f).data[0], 0.25 * np.eye(2),
                                       atol=1e-7)

    m = np.array([[1, 0], [1, 1]], np.float32).reshape(1, 1, 2, 2)
    gt = np.zeros((1, 1, 2, 2), np.float32)
    io_ = np.array([[4, 8], [0, 0]], np.float32).reshape(1, 1, 2, 2)
    l_hole, l_valid = hole_valid_losses(io_, gt, m)
    checks["hole 2.0 / valid 1.0"] = (abs(l_hole.item() - 2.0) < 1e-7
                                      and abs(l_valid.item() - 1.0) < 1e-7)

    # zero-variance SSIM: only the luminance term differs from 1
    c1 = (0.01 * 255.0) ** 2
    expected = c1 / (255.0 ** 2 + c1)
    s = ssim(np.zeros((1, 16, 16)), np.full((1, 16, 16), 255.0))
    checks["ssim 1.0e-4"] = (abs(s - expected) < 1e-9
                             and abs(s - 1.0e-4) < 1e-6)

    p = psnr(0.192)
    checks["psnr(0.192)=55.30"] = abs(p - 55.2985) < 0.01 and abs(p - 55.5) <= 0.3

    bad = [k for k, ok in checks.items() if not ok]
    report("hand-values", not bad,
           f"{len(checks)} hand cases" + (f", failing: {bad}" if bad else ""))


# -- desk-scale training ----------------------------------------------------

def test_desk_scale_training(report, tmp_path):
    data_dir = str(tmp_path / "imgs")
    paths = make_synthetic_dataset(data_dir, 8, size=64, seed=1)
    cfg = desk_config(data_dir, str(tmp_path / "run"), iterations=2000)
    t0 = time.time()
    weights_path, log_path = train(cfg)
    minutes = (time.time() - t0) / 60.0
    fall = loss_fall(log_path)
    mean_psnr = float(np.mean(hole_psnrs(load_model(weights_path), paths)))
    report("desk-training",
           fall >= 0.90 and mean_psnr >= 25.0 and minutes <= 30.0,
           f"loss fall {fall:.1%}, hole PSNR {mean_psnr:.2f} dB, "
           f"{minutes:.1f} min")


# -- ablation ordering ------------------------------------------------------

def test_ablation_ordering(report, tmp_path):
    data_dir = str(tmp_path / "imgs")
    make_synthetic_dataset(data_dir, 16, size=64, seed=1)
    variants = {
        "pconv": LossWeights(),
        "pconv_no_style": LossWeights(use_style=False),
        "pconv_no_perceptual": LossWeights(use_perceptual=False),
    }
    weights = {}
    for name, lw in variants.items():
        # feature scale where the perceptual/style taps carry real weight
        # (the desk-training default all but disables them)
        cfg = desk_config(data_dir, str(tmp_path / name), iterations=300,
                          split="train", loss_weights=lw, feature_scale=0.15)
        weights[name], _ = train(cfg)
    rep = evaluate(EvalConfig(
        data_dir=data_dir, weights=weights, ratios=(0.05,),
        methods=tuple(variants), split="test", hole_only=False))
    rows = rep["rows"]
    have_all = all(m in rows and "0.05" in rows[m] for m in variants)
    full = rows["pconv"]["0.05"]["ssim"]
    no_perc = rows["pconv_no_perceptual"]["0.05"]["ssim"]
    report("ablation-ordering", have_all and full >= no_perc,
           f"three rows present={have_all}, held-out SSIM full {full:.4f} "
           f">= no-perceptual {no_perc:.4f}")


# -- classical baseline -----------------------------------------------------

def test_classical_baseline(report):
    checks = {}
    hole = np.ones((1, 1, 64, 64), np.float32)
    hole[0, 0, 20:36, 24:44] = 0.0

    const = np.full((1, 3, 64, 64), 0.47, np.float32)
    t0 = time.time()
    out = ns_inpaint(const * hole, hole, NSConfig())
    dt_const = time.time() - t0
    checks["constant"] = float(np.abs(out - const).max()) <= 1e-6

    xx = np.tile(np.arange(64, dtype=np.float32) / 64.0, (64, 1))
    ramp = np.broadcast_to(xx, (1, 3, 64, 64)).astype(np.float32)
    h2 = np.ones((1, 1, 64, 64), np.float32)
    h2[0, 0, 28:36, 28:36] = 0.0
    t0 = time.time()
    out2 = ns_inpaint(ramp * h2, h2, NSConfig())
    dt_ramp = time.time() - t0
    checks["ramp<=0.02"] = float(
        (np.abs(out2 - ramp) * (1 - h2)).max()) <= 0.02
    checks["valid bit-exact"] = np.array_equal(
        (out2 * h2).astype(np.float32), (ramp * h2).astype(np.float32))
    checks["<10s"] = max(dt_const, dt_ramp) < 10.0

    bad = [k for k, ok in checks.items() if not ok]
    report("classical-baseline", not bad,
           f"ramp err {(np.abs(out2 - ramp) * (1 - h2)).max():.4f}, "
           f"{max(dt_const, dt_ramp):.1f}s/image"
           + (f", failing: {bad}" if bad else ""))


# -- determinism + persistence ----------------------------------------------

def test_determinism_and_persistence(report, tmp_path):
    data_dir = str(tmp_path / "imgs")
    make_synthetic_dataset(data_dir, 4, size=32, seed=3)
    tiny = UNetConfig(depth=2, encoder_channels=(4, 8), kernel_sizes=(3, 3))

    def run(out, iters, resume_from="", every=0):
        cfg = desk_config(data_dir, str(tmp_path / out), iterations=iters,
                          unet=tiny, batch_size=2, image_size=32,
                          checkpoint_every=every, resume_from=resume_from)
        return train(cfg)

    w1, _ = run("a", 6)
    w2, _ = run("b", 6)
    identical = open(w1, "rb").read() == open(w2, "rb").read()

    model = load_model(w1)
    save_model(str(tmp_path / "copy.pcnw"), model)
    reloaded = load_model(str(tmp_path / "copy.pcnw"))
    roundtrip = all(np.array_equal(model.params[k], reloaded.params[k])
                    for k in model.params)

    _, _ = run("c", 3, every=3)
    ckpt = str(tmp_path / "c" / "checkpoint_000003.pcnw")
    w4, _ = run("c", 6, resume_from=ckpt, every=3)
    resumed = load_tensors(w4)
    direct = load_tensors(w1)
    resume_ok = (set(resumed) == set(direct) and
                 all(np.array_equal(resumed[k], direct[k]) for k in direct))

    report("determinism-persistence",
           identical and roundtrip and resume_ok,
           f"seeded bit-identical={identical}, save/load={roundtrip}, "
           f"checkpoint-resume={resume_ok}")


# -- service contract -------------------------------------------------------

def test_service_contract(report, tmp_path):
    cfg = UNetConfig(depth=3, encoder_channels=(4, 8, 8),
                     kernel_sizes=(3, 3, 3))
    path = str(tmp_path / "m.pcnw")
    save_model(path, UNetModel(cfg, seed=0))
    client = TestClient(create_app(path))
    checks = {}

    r = client.get("/api/health")
    checks["health"] = r.status_code == 200 and r.json()["status"] == "ok"

    def png_bytes(arr):
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="PNG")
        return buf.getvalue()

    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    mask = np.full((32, 32), 255, np.uint8)
    mask[8:16, 8:16] = 0

    def post(method, i=img, m=mask):
        return client.post(f"/api/inpaint?method={method}",
                           files={"image": ("i.png", png_bytes(i)),
                                  "mask": ("m.png", png_bytes(m))})

    r = post("pconv")
    ok = r.status_code == 200
    if ok:
        out = np.asarray(Image.open(io.BytesIO(
            base64.b64decode(r.json()["results"]["pconv"]))).convert("RGB"))
        valid = mask >= 128
        ok = out.shape == (32, 32, 3) and np.array_equal(out[valid], img[valid])
    checks["happy path"] = ok

    bad_img = rng.integers(0, 256, (30, 30, 3), dtype=np.uint8)
    r = post("pconv", bad_img, np.full((30, 30), 255, np.uint8))
    checks["422 divisor"] = (r.status_code == 422
                             and r.json()["required_divisor"] == 8)

    r = post("both")
    checks["both"] = (r.status_code == 200
                      and set(r.json()["results"]) == {"pconv", "ns"}
                      and set(r.json()["timing_ms"]) == {"pconv", "ns"})

    bad = [k for k, ok in checks.items() if not ok]
    report("service-contract", not bad,
           "health, happy path, 422 divisor, method=both"
           + (f", failing: {bad}" if bad else ""))
