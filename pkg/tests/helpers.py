"""Shared test utilities: central-difference gradient checks."""

import torch


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(floor, abs(a), abs(b))


def check_param_grads(loss_fn, params, eps: float = 1e-5, rel_tol: float = 1e-3,
                      abs_tol: float = 1e-8) -> float:
    """Compare autograd gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must recompute the scalar loss from the parameters' current
    values. Each parameter coordinate is perturbed in place under no_grad.
    Returns the worst relative error seen.
    """
    params = list(params)
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    worst = 0.0
    with torch.no_grad():
        for p in params:
            grad = torch.zeros_like(p).reshape(-1) if p.grad is None else p.grad.reshape(-1)
            flat = p.reshape(-1)
            for k in range(flat.numel()):
                original = flat[k].item()
                flat[k] = original + eps
                hi = float(loss_fn())
                flat[k] = original - eps
                lo = float(loss_fn())
                flat[k] = original
                fd = (hi - lo) / (2 * eps)
                an = float(grad[k])
                if abs(fd - an) <= abs_tol:
                    continue
                err = relative_error(fd, an)
                worst = max(worst, err)
                assert err < rel_tol, (
                    f"gradient mismatch at {tuple(p.shape)}[{k}]: fd={fd:.6g} autograd={an:.6g} "
                    f"rel={err:.3g}"
                )
    return worst
