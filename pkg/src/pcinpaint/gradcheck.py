"""Central finite-difference gradient checking."""

from __future__ import annotations

import numpy as np

from .tensor import GradTape, backward


def finite_difference(f, x0, eps=1e-3):
    """Central-difference gradient of scalar f at x0 (evaluated in f32)."""
    x0 = np.asarray(x0, dtype=np.float32)
    grad = np.zeros(x0.shape, dtype=np.float64)
    flat = x0.reshape(-1)
    for i in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += eps
        xm[i] -= eps
        fp = f(xp.reshape(x0.shape))
        fm = f(xm.reshape(x0.shape))
        grad.reshape(-1)[i] = (fp - fm) / (2.0 * eps)
    return grad.astype(np.float32)


def check_gradients(build_loss, inits, eps=1e-3, rtol=1e-2, atol=1e-3):
    """Compare tape gradients of a scalar loss against finite differences.

    ``build_loss(tape, params)`` receives a fresh tape and a dict of
    parameter Tensors (registered from ``inits``, name -> ndarray) and must
    return a scalar loss Tensor.  Returns a dict name -> max elementwise
    discrepancy beyond atol+rtol*|fd|; all values should be <= 0.
    """
    tape = GradTape()
    params = {name: tape.parameter(name, arr) for name, arr in inits.items()}
    loss = build_loss(tape, params)
    analytic = backward(loss, tape)

    report = {}
    for name, arr in inits.items():
        def f(x, _name=name):
            t = GradTape()
            ps = {n: t.parameter(n, x if n == _name else a)
                  for n, a in inits.items()}
            return build_loss(t, ps).item()

        fd = finite_difference(f, arr, eps=eps)
        excess = np.abs(analytic[name] - fd) - (atol + rtol * np.abs(fd))
        report[name] = float(excess.max())
    return report


def assert_gradients_close(build_loss, inits, **kw):
    report = check_gradients(build_loss, inits, **kw)
    bad = {k: v for k, v in report.items() if v > 0}
    assert not bad, f"gradient check failed: {bad}"
