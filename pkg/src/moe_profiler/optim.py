"""Adam optimizer over named parameter tensors."""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .tensor import Tensor


@dataclass
class AdamState:
    """Moment buffers and step counter; step counts completed updates."""

    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: dict, grads: dict, state: AdamState) -> AdamState:
    """One bias-corrected Adam update from explicit gradient buffers.

    params maps name -> Tensor (updated in place); grads maps name ->
    ndarray. Parameters without a gradient entry are left unchanged.
    """
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for parameter '{name}'")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        p.data -= (state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)).astype(p.data.dtype)
    return state


class Adam:
    """Bias-corrected Adam; updates parameters in place from their .grad buffers."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = {n: p for n, p in params.items() if isinstance(p, Tensor) and p.requires_grad}
        self.state = AdamState(
            step=0,
            m={n: np.zeros_like(p.data) for n, p in self.params.items()},
            v={n: np.zeros_like(p.data) for n, p in self.params.items()},
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        st = self.state
        st.step += 1
        bc1 = 1.0 - st.beta1 ** st.step
        bc2 = 1.0 - st.beta2 ** st.step
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise NumericError(f"gradient shape {g.shape} does not match parameter '{name}' {p.data.shape}")
            if not np.isfinite(g).all():
                raise NumericError(f"non-finite gradient for parameter '{name}'")
            m = st.m[name] = st.beta1 * st.m[name] + (1.0 - st.beta1) * g
            v = st.v[name] = st.beta2 * st.v[name] + (1.0 - st.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= (st.lr * m_hat / (np.sqrt(v_hat) + st.eps)).astype(p.data.dtype)
