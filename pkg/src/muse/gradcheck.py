"""Central finite-difference verification of autodiff gradients."""

import numpy as np


def finite_difference_grad(fn, param, h=1e-5):
    """Numerical d fn() / d param by central differences, elementwise.

    fn re-runs the forward pass and returns a float; param.data is
    perturbed in place and restored.
    """
    g = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn()
        flat[i] = orig - h
        fm = fn()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def check_gradients(build_loss, params, h=1e-5, rtol=1e-4):
    """Compare autodiff gradients of build_loss() against finite differences.

    build_loss constructs a fresh graph and returns the scalar loss node.
    Returns a list of (name, max_rel_err) and raises nothing; the caller
    asserts on the tolerances.
    """
    for p in params:
        p.zero_grad()
    loss = build_loss()
    loss.backward()
    results = []
    for p in params:
        analytic = p.grad.copy()
        numeric = finite_difference_grad(lambda: float(build_loss().data), p, h=h)
        # floor at the FD resolution limit: central differences on an
        # O(1) float64 loss cannot resolve components below ~1e-10
        denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
        rel = np.abs(analytic - numeric) / denom
        results.append((p.name or "param", float(rel.max())))
        p.zero_grad()
    return results


def max_rel_err(results):
    return max(err for _, err in results) if results else 0.0
