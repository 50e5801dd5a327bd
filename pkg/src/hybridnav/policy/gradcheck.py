"""
Gradient Check Module

Compares autograd gradients against central finite differences, tensor
by tensor, in float64.
"""

import logging
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from hybridnav.exceptions import NumericalError


logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-5
RELATIVE_FLOOR = 1e-8
VANISHING_GRADIENT = 1e-7

Parameters = Union[nn.Module, Iterable[Tuple[str, torch.Tensor]]]
GradientHook = Callable[[str, torch.Tensor], torch.Tensor]


def _named(params: Parameters):
    if isinstance(params, nn.Module):
        return [(name, p) for name, p in params.named_parameters() if p.requires_grad]
    return [(name, p) for name, p in params]


def grad_check(
    params: Parameters,
    loss_fn: Callable[[], torch.Tensor],
    epsilon: float = DEFAULT_EPSILON,
    max_entries: Optional[int] = None,
    seed: int = 0,
    gradient_hook: Optional[GradientHook] = None,
    report: Optional[Dict[str, float]] = None
) -> float:
    """
    Largest relative error between analytic and numeric gradients.

    For every parameter tensor the error is
    max|analytic - numeric| / max(1e-8, max|numeric|) over the checked
    entries; the maximum over tensors is returned. A tensor whose analytic
    and numeric gradients both stay below 1e-7, such as a bias the loss
    is invariant to, is measured by the absolute difference instead.

    Args:
        params: Module or (name, tensor) pairs; tensors must be float64 leaves.
        loss_fn: Zero-argument callable recomputing the scalar loss.
        epsilon: Central-difference step.
        max_entries: Entries checked per tensor, sampled with ``seed``;
            every entry when None.
        seed: Sampling seed.
        gradient_hook: Optional ``(name, grad) -> grad`` applied to the
            analytic gradients before comparison.
        report: Optional dictionary receiving the per-tensor errors.

    Returns:
        Maximum relative error over all tensors.

    Raises:
        NumericalError: If a tensor is not float64 or an analytic gradient
            is not finite; ``details['tensor']`` names it.

    Example:
        >>> model = torch.nn.Linear(3, 1).double()
        >>> x = torch.randn(5, 3, dtype=torch.float64)
        >>> grad_check(model, lambda: model(x).sum()) < 1e-9
        True
    """
    named = _named(params)
    for name, tensor in named:
        if tensor.dtype != torch.float64:
            raise NumericalError(
                f"Gradient check needs float64 tensors; {name} is {tensor.dtype}.",
                details={'tensor': name, 'dtype': str(tensor.dtype)}
            )
        tensor.grad = None

    loss = loss_fn()
    if not torch.isfinite(loss):
        raise NumericalError("Loss is not finite.", details={'tensor': 'loss'})
    loss.backward()

    analytic = {}
    for name, tensor in named:
        grad = tensor.grad.detach().clone() if tensor.grad is not None else torch.zeros_like(tensor)
        if not torch.all(torch.isfinite(grad)):
            raise NumericalError(
                f"Non-finite gradient in tensor {name}.", details={'tensor': name}
            )
        if gradient_hook is not None:
            grad = gradient_hook(name, grad)
        analytic[name] = grad

    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for name, tensor in named:
            flat = tensor.view(-1)
            entries = np.arange(flat.numel())
            if max_entries is not None and flat.numel() > max_entries:
                entries = np.sort(rng.choice(flat.numel(), size=max_entries, replace=False))
            numeric = np.empty(len(entries))
            for k, index in enumerate(entries):
                original = flat[index].item()
                flat[index] = original + epsilon
                plus = loss_fn().item()
                flat[index] = original - epsilon
                minus = loss_fn().item()
                flat[index] = original
                numeric[k] = (plus - minus) / (2.0 * epsilon)
            expected = analytic[name].reshape(-1).numpy()[entries]
            error = 0.0
            if len(numeric):
                difference = float(np.max(np.abs(expected - numeric)))
                largest = float(np.max(np.abs(numeric)))
                if largest < VANISHING_GRADIENT and float(np.max(np.abs(expected))) < VANISHING_GRADIENT:
                    error = difference
                else:
                    error = difference / max(RELATIVE_FLOOR, largest)
            if report is not None:
                report[name] = error
            worst = max(worst, error)

    logger.debug("Gradient check over %d tensors: max relative error %.3e", len(named), worst)
    return worst
