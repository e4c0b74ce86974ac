"""Minimal NCHW tensor engine with reverse-mode autodiff.

Values are float32 numpy arrays; reductions accumulate in float64 so that
finite-difference checks and oracle comparisons stay tight.  Ops are pure:
inputs are never mutated and identical inputs give bit-identical outputs.

Gradients are recorded on a ``GradTape``: every op executed with at least one
taped input appends a node, and ``backward`` replays the nodes in exact
reverse execution order, accumulating gradients additively.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class TensorError(ValueError):
    """Raised on shape/dtype contract violations."""


class Tensor:
    """Immutable dense array of float32, conventionally NCHW."""

    __slots__ = ("data", "tape", "name", "fp64")

    def __init__(self, data, tape=None, name=None, _no_copy=False):
        arr = np.asarray(data, dtype=np.float32)
        if not _no_copy:
            arr = arr.copy()
        arr.flags.writeable = False
        self.data = arr
        self.tape = tape
        self.name = name
        self.fp64 = None  # f64 value of reduction outputs, for tight checks

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.fp64 is not None:
            return float(self.fp64)
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name!r})"


class GradTape:
    """Ordered record of executed ops, replayed backward for gradients."""

    def __init__(self):
        self._nodes = []  # (out, parents, backward_fn), execution order
        self.parameters = {}  # name -> Tensor

    def parameter(self, name, data):
        """Register a named trainable tensor on this tape."""
        if name in self.parameters:
            raise TensorError(f"duplicate parameter name {name!r}")
        t = Tensor(data, tape=self, name=name)
        self.parameters[name] = t
        return t

    def record(self, out, parents, backward_fn):
        self._nodes.append((out, parents, backward_fn))

    def release(self):
        """Drop recorded ops, breaking the tensor<->tape reference cycles.

        A tape is single-use; training loops call this after backward so the
        iteration's activations are freed by refcounting instead of waiting
        for a full gc pass.
        """
        self._nodes.clear()
        self.parameters.clear()


def _result_tape(*tensors):
    tape = None
    for t in tensors:
        if t.tape is not None:
            if tape is not None and tape is not t.tape:
                raise TensorError("inputs recorded on different tapes")
            tape = t.tape
    return tape


def _make(data, parents, backward_fn):
    """Wrap a freshly computed array, recording the op if any input is taped."""
    tape = _result_tape(*parents)
    out = Tensor(np.ascontiguousarray(data, dtype=np.float32),
                 tape=tape, _no_copy=True)
    if tape is not None:
        out.data.flags.writeable = False
        tape.record(out, parents, backward_fn)
    return out


def backward(loss, tape):
    """Gradients of a scalar loss w.r.t. every parameter on the tape.

    Returns a dict name -> float32 ndarray.  Gradients accumulate additively
    when a tensor feeds multiple consumers.
    """
    if loss.data.size != 1:
        raise TensorError(f"loss must be scalar, got shape {loss.shape}")
    if loss.tape is not tape:
        raise TensorError("loss was not recorded on this tape")
    grads = {id(loss): np.ones_like(loss.data)}
    for out, parents, backward_fn in reversed(tape._nodes):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for parent, pg in zip(parents, backward_fn(g)):
            if pg is None or parent.tape is None:
                continue
            pg = np.asarray(pg, dtype=np.float32)
            acc = grads.get(id(parent))
            grads[id(parent)] = pg if acc is None else acc + pg
    return {name: grads.get(id(p), np.zeros_like(p.data))
            for name, p in tape.parameters.items()}


# ---------------------------------------------------------------------------
# elementwise suite

def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the original shape."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _check_broadcast(a, b, opname):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise TensorError(
            f"{opname}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b):
    _check_broadcast(a, b, "add")
    out = _make(a.data + b.data, (a, b),
                lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))
    if a.fp64 is not None and b.fp64 is not None:
        out.fp64 = a.fp64 + b.fp64
    return out


def sub(a, b):
    _check_broadcast(a, b, "sub")
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape),
                            -_unbroadcast(g, b.shape)))


def mul(a, b):
    """Hadamard product with numpy broadcasting."""
    _check_broadcast(a, b, "mul")
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))


def scalar_mul(a, s):
    s = float(s)
    out = _make(a.data * np.float32(s), (a,), lambda g: (g * np.float32(s),))
    if a.fp64 is not None:
        out.fp64 = a.fp64 * s
    return out


def relu(a):
    keep = a.data > 0
    return _make(np.where(keep, a.data, 0), (a,), lambda g: (g * keep,))


def leaky_relu(a, slope):
    slope = float(slope)
    keep = a.data >= 0
    return _make(np.where(keep, a.data, a.data * np.float32(slope)), (a,),
                 lambda g: (np.where(keep, g, g * np.float32(slope)),))


def abs_(a):
    sign = np.sign(a.data)
    return _make(np.abs(a.data), (a,), lambda g: (g * sign,))


def _scalar(value):
    return np.full((1, 1, 1, 1), value, dtype=np.float32)


def sum_all(a):
    """Sum of all elements as a (1,1,1,1) tensor; accumulates in f64."""
    val = a.data.sum(dtype=np.float64)
    out = _make(_scalar(val), (a,),
                lambda g: (np.full(a.shape, g.reshape(-1)[0], np.float32),))
    out.fp64 = val
    return out


def mean_all(a):
    n = a.data.size
    val = a.data.sum(dtype=np.float64) / n
    out = _make(_scalar(val), (a,),
                lambda g: (np.full(a.shape, g.reshape(-1)[0] / n, np.float32),))
    out.fp64 = val
    return out


def abs_sum(a):
    return sum_all(abs_(a))


def mean_abs(a):
    return mean_all(abs_(a))


def concat_channels(tensors):
    tensors = list(tensors)
    if not tensors:
        raise TensorError("concat_channels: empty input list")
    ref = tensors[0].shape
    for t in tensors:
        if len(t.shape) != 4 or t.shape[0] != ref[0] or t.shape[2:] != ref[2:]:
            raise TensorError(
                f"concat_channels: shape {t.shape} incompatible with {ref}")
    splits = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def bwd(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=1))

    return _make(np.concatenate([t.data for t in tensors], axis=1),
                 tuple(tensors), bwd)


def crop_spatial(a, ys, ye, xs, xe):
    """Slice a[:, :, ys:ye, xs:xe]; gradient zero-pads back."""
    n, c, h, w = a.shape
    ye = h if ye is None else ye
    xe = w if xe is None else xe

    def bwd(g):
        gx = np.zeros(a.shape, np.float32)
        gx[:, :, ys:ye, xs:xe] = g
        return (gx,)

    return _make(a.data[:, :, ys:ye, xs:xe], (a,), bwd)


def reshape(a, shape):
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def matmul(a, b):
    """2-D or batched 3-D matrix product, accumulated in f64."""
    if a.shape[-1] != b.shape[-2]:
        raise TensorError(f"matmul: inner dims {a.shape} @ {b.shape}")
    ad = a.data.astype(np.float64)
    bd = b.data.astype(np.float64)
    out = ad @ bd

    def bwd(g):
        g64 = g.astype(np.float64)
        ga = g64 @ np.swapaxes(bd, -1, -2)
        gb = np.swapaxes(ad, -1, -2) @ g64
        return (_unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape))

    return _make(out, (a, b), bwd)


def transpose_last2(a):
    return _make(np.swapaxes(a.data, -1, -2), (a,),
                 lambda g: (np.swapaxes(g, -1, -2),))


# ---------------------------------------------------------------------------
# conv / pool / upsample

def _im2col(x, k, padding):
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # n,c,H,W,k,k
    hh, ww = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, hh * ww, c * k * k)
    return np.ascontiguousarray(cols), hh, ww


def conv2d(x, weight, bias=None, padding=0):
    """Stride-1, dilation-1 2-D convolution (cross-correlation) with zero padding.

    ``weight`` has shape (out_c, in_c, k, k) with k odd; ``bias`` is a tensor
    broadcastable to (1, out_c, 1, 1) or None.
    """
    if len(x.shape) != 4 or len(weight.shape) != 4:
        raise TensorError("conv2d expects 4-D input and weight")
    oc, ic, k, k2 = weight.shape
    if k != k2 or k % 2 == 0:
        raise TensorError(f"conv2d: kernel must be square and odd, got {k}x{k2}")
    if x.shape[1] != ic:
        raise TensorError(
            f"conv2d: input has {x.shape[1]} channels, weight expects {ic}")
    n = x.shape[0]
    cols, hh, ww = _im2col(x.data, k, padding)
    wmat = weight.data.reshape(oc, ic * k * k)
    out = cols @ wmat.T                      # n, H*W, oc
    out = out.transpose(0, 2, 1).reshape(n, oc, hh, ww)
    if bias is not None:
        out = out + bias.data.reshape(1, oc, 1, 1)

    def bwd(g):
        gmat = g.reshape(n, oc, hh * ww).transpose(0, 2, 1)  # n, H*W, oc
        gw = gx = None
        if weight.tape is not None:
            gmat2 = np.ascontiguousarray(gmat.reshape(n * hh * ww, oc))
            gw = (gmat2.T @ cols.reshape(n * hh * ww, ic * k * k)) \
                .reshape(weight.shape)
        if x.tape is not None:
            # input gradient = correlation of g with the rotated kernel
            wrot = np.ascontiguousarray(
                weight.data.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
            gcols, h2, w2 = _im2col(np.ascontiguousarray(g), k,
                                    k - 1 - padding)
            gx = gcols @ wrot.reshape(ic, oc * k * k).T
            gx = np.ascontiguousarray(
                gx.transpose(0, 2, 1).reshape(n, ic, h2, w2))
        if bias is None:
            return (gx, gw)
        gb = _unbroadcast(g.sum(axis=(0, 2, 3)).reshape(1, oc, 1, 1), bias.shape)
        return (gx, gw, gb)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _make(out, parents, bwd)


def maxpool2(x):
    """2x2 max pooling, stride 2; spatial dims must be even."""
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise TensorError(f"maxpool2 requires even spatial dims, got {h}x{w}")
    win = x.data.reshape(n, c, h // 2, 2, w // 2, 2)
    flat = win.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def bwd(g):
        gflat = np.zeros_like(flat)
        np.put_along_axis(gflat, idx[..., None], g[..., None], axis=-1)
        gx = gflat.reshape(n, c, h // 2, w // 2, 2, 2) \
                  .transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        return (np.ascontiguousarray(gx),)

    return _make(out, (x,), bwd)


def _bilinear_axis(size):
    """Index/weight tables for 2x bilinear upsampling, align_corners=False."""
    src = (np.arange(2 * size, dtype=np.float64) + 0.5) / 2.0 - 0.5
    i0 = np.floor(src).astype(np.int64)
    frac = (src - i0).astype(np.float32)
    i1 = np.clip(i0 + 1, 0, size - 1)
    i0 = np.clip(i0, 0, size - 1)
    return i0, i1, 1.0 - frac, frac


def upsample2(x, mode="bilinear"):
    """Double both spatial dims; ``mode`` is 'bilinear' or 'nearest'."""
    n, c, h, w = x.shape
    if mode == "nearest":
        out = x.data.repeat(2, axis=2).repeat(2, axis=3)

        def bwd(g):
            gx = g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))
            return (gx.astype(np.float32),)

        return _make(out, (x,), bwd)
    if mode != "bilinear":
        raise TensorError(f"unknown upsample mode {mode!r}")

    r0, r1, rw0, rw1 = _bilinear_axis(h)
    c0, c1, cw0, cw1 = _bilinear_axis(w)
    rows = x.data[:, :, r0, :] * rw0[None, None, :, None] \
        + x.data[:, :, r1, :] * rw1[None, None, :, None]
    out = rows[:, :, :, c0] * cw0 + rows[:, :, :, c1] * cw1

    def bwd(g):
        grows = np.zeros((n, c, 2 * h, w), np.float32)
        np.add.at(grows, (slice(None), slice(None), slice(None), c0), g * cw0)
        np.add.at(grows, (slice(None), slice(None), slice(None), c1), g * cw1)
        gx = np.zeros((n, c, h, w), np.float32)
        np.add.at(gx, (slice(None), slice(None), r0, slice(None)),
                  grows * rw0[None, None, :, None])
        np.add.at(gx, (slice(None), slice(None), r1, slice(None)),
                  grows * rw1[None, None, :, None])
        return (gx,)

    return _make(out, (x,), bwd)
