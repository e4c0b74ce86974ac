"""Command-line interface: inpaint, train, eval, maskgen, gradcheck, serve."""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np


@click.group()
def main():
    """Partial-convolution image inpainting toolkit."""


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", type=click.Path(exists=True),
              help="UNet weights file (required unless --baseline ns).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--method", type=click.Choice(["pconv", "ns"]), default="pconv")
@click.option("--baseline", type=click.Choice(["ns"]), default=None,
              help="Shorthand for --method ns.")
def inpaint(image_path, mask_path, weights_path, out_path, method, baseline):
    """Inpaint one image with a mask (white = valid, black = hole)."""
    from .imageio import load_image, load_mask, save_image

    if baseline:
        method = baseline
    img = load_image(image_path)
    mask = load_mask(mask_path)
    if mask.shape[2:] != img.shape[2:]:
        raise click.ClickException(
            f"mask dims {mask.shape[2:]} do not match image {img.shape[2:]}")
    if method == "pconv":
        if not weights_path:
            raise click.ClickException("--weights is required for pconv")
        from .unet import composite, unet_forward
        from .weights_io import load_model
        model = load_model(weights_path)
        d = model.config.divisor
        if img.shape[2] % d or img.shape[3] % d:
            raise click.ClickException(
                f"image dims must be divisible by {d}")
        out, _ = unet_forward(model, img * mask, mask)
        result = composite(out, img, mask).data
    else:
        from .classical_ns import ns_inpaint
        result = ns_inpaint(img, mask)
        result = mask * img + (1 - mask) * result
    save_image(out_path, result)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--data-dir", type=click.Path())
@click.option("--out-dir", type=click.Path())
@click.option("--iterations", type=int)
@click.option("--batch-size", type=int)
@click.option("--seed", type=int)
@click.option("--image-size", type=int)
@click.option("--resume-from", type=click.Path(exists=True))
@click.option("--no-style", is_flag=True, help="Ablation: drop the style loss.")
@click.option("--no-perceptual", is_flag=True,
              help="Ablation: drop the perceptual loss.")
def train(config_path, no_style, no_perceptual, **overrides):
    """Train a partial-convolution UNet on a folder of PNGs."""
    from .config import train_config
    from .train import train as run_train

    cfg = train_config(path=config_path, **overrides)
    if no_style:
        cfg.loss_weights.use_style = False
    if no_perceptual:
        cfg.loss_weights.use_perceptual = False
    weights_path, log_path = run_train(cfg)
    click.echo(f"weights: {weights_path}")
    click.echo(f"loss log: {log_path}")


@main.command("eval")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--data-dir", type=click.Path())
@click.option("--weights", help="Weights path, or JSON object method->path.")
@click.option("--methods", help="Comma-separated method list.")
@click.option("--report", "report_path", type=click.Path())
@click.option("--seed", type=int)
@click.option("--limit", type=int)
def eval_cmd(config_path, weights, methods, report_path, **overrides):
    """Evaluate methods over ratio buckets; emits a table-shaped report."""
    from .config import eval_config
    from .evaluate import evaluate

    if weights and weights.strip().startswith("{"):
        weights = json.loads(weights)
    if methods:
        overrides["methods"] = tuple(m.strip() for m in methods.split(","))
    cfg = eval_config(path=config_path, weights=weights,
                      report_path=report_path, **overrides)
    report = evaluate(cfg)
    click.echo(json.dumps(report, indent=2, sort_keys=True))


@main.command()
@click.option("--ratio", type=float, required=True)
@click.option("--size", type=int, default=256, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def maskgen(ratio, size, count, seed, out_dir):
    """Generate irregular hole masks at a target hole ratio."""
    from .imageio import save_mask
    from .maskgen import MaskSpec, generate_mask

    os.makedirs(out_dir, exist_ok=True)
    for i in range(count):
        mask = generate_mask(MaskSpec(ratio, (size, size), seed=seed + i))
        path = os.path.join(out_dir, f"mask_r{ratio:g}_s{seed + i:04d}.png")
        save_mask(path, mask)
        click.echo(f"{path}  hole_ratio={1.0 - mask.mean():.4f}")


@main.command()
def gradcheck():
    """Finite-difference checks for ops, the pconv layer, and all losses."""
    from .gradsuite import run_gradient_suite

    failures = 0
    for name, excess in run_gradient_suite():
        status = "ok" if excess <= 0 else "FAIL"
        click.echo(f"{status:4s} {name}  (excess {excess:+.2e})")
        failures += excess > 0
    if failures:
        raise click.ClickException(f"{failures} gradient checks failed")
    click.echo("all gradient checks passed")


@main.command()
@click.option("--port", type=int, default=8642, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--weights", "weights_path", required=True,
              type=click.Path(exists=True))
@click.option("--static", "static_dir", type=click.Path(),
              help="Directory with the mask-board frontend build.")
def serve(port, host, weights_path, static_dir):
    """Serve the inpainting HTTP API (and optionally the mask board)."""
    import uvicorn

    if static_dir:
        os.environ["PCINPAINT_STATIC"] = static_dir
    from .server import create_app

    uvicorn.run(create_app(weights_path), host=host, port=port,
                log_level="warning")


if __name__ == "__main__":
    main()
