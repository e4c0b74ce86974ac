"""Partial-convolution image inpainting.

A small NCHW tensor engine with reverse-mode autodiff, a masked UNet built
from partial convolutions, the composite training loss, a Navier-Stokes
style PDE baseline, irregular mask generation, and a train/eval/serve
pipeline.
"""

__version__ = "0.1.0"
