import numpy as np
import pytest


def numeric_gradient_error(loss_fn, params, *, step=1e-4, samples=None, seed=0) -> float:
    """
    Largest deviation between backward() gradients and central differences,
    relative to the gradient scale of each parameter.

    ``loss_fn`` rebuilds the graph and returns a scalar ``Tensor``. With
    ``samples`` only that many random entries per parameter are probed.
    """
    for p in params:
        p.grad = None
    loss_fn().backward()
    analytic = [np.array(p.grad) if p.grad is not None else np.zeros_like(p.data) for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        indices = np.arange(flat.size)
        if samples is not None and flat.size > samples:
            indices = rng.choice(flat.size, size=samples, replace=False)
        numeric = np.empty(indices.size)
        for j, i in enumerate(indices):
            original = flat[i]
            flat[i] = original + step
            up = loss_fn().item()
            flat[i] = original - step
            down = loss_fn().item()
            flat[i] = original
            numeric[j] = (up - down) / (2 * step)
        expected = grad.reshape(-1)[indices]
        scale = max(np.abs(numeric).max(), np.abs(expected).max(), 1e-3)
        worst = max(worst, float(np.abs(expected - numeric).max() / scale))
    return worst


@pytest.fixture
def gradient_error():
    return numeric_gradient_error
