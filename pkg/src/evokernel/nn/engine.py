"""Minimal reverse-mode engine over float64 numpy arrays.

Covers exactly the node types the operator models need: matmul (plain and
transposed), bias add, relu, Hadamard product (with leading-axis
broadcast), subtraction against constants, and sum-of-squares losses.
Constants (training data, precomputed operators) are passed as plain
ndarrays and receive no gradients; only Parameter leaves accumulate.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "Parameter", "matmul", "matmul_t", "add_bias", "relu",
           "hadamard", "sub_const", "add_scalars", "sum_squares", "backward",
           "Adam"]


class Tensor:
    __slots__ = ("value", "grad", "parents", "bwd")

    def __init__(self, value, parents=(), bwd=None):
        self.value = value
        self.grad = None
        self.parents = parents
        self.bwd = bwd

    @property
    def shape(self):
        return self.value.shape


class Parameter(Tensor):
    """Trainable leaf; grad persists across backward calls until zeroed."""

    def __init__(self, value):
        super().__init__(np.asarray(value, dtype=np.float64))


def _val(x):
    return x.value if isinstance(x, Tensor) else x


def _accum(node, g):
    if not isinstance(node, Tensor):
        return
    if node.grad is None:
        node.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g, dtype=np.float64)
    else:
        node.grad += g


def matmul(a, b):
    """a @ b with grads to whichever operands are tensors."""
    av, bv = _val(a), _val(b)
    out = Tensor(av @ bv, parents=(a, b))

    def bwd(g):
        _accum(a, g @ bv.T)
        _accum(b, av.T @ g)
    out.bwd = bwd
    return out


def matmul_t(a, b):
    """a @ b.T."""
    av, bv = _val(a), _val(b)
    out = Tensor(av @ bv.T, parents=(a, b))

    def bwd(g):
        _accum(a, g @ bv)
        _accum(b, g.T @ av)
    out.bwd = bwd
    return out


def add_bias(x, b):
    """x + b broadcast over rows."""
    xv, bv = _val(x), _val(b)
    out = Tensor(xv + bv, parents=(x, b))

    def bwd(g):
        _accum(x, g)
        _accum(b, g.sum(axis=0) if g.ndim > bv.ndim else g)
    out.bwd = bwd
    return out


def relu(x):
    xv = _val(x)
    mask = xv > 0.0
    out = Tensor(np.where(mask, xv, 0.0), parents=(x,))

    def bwd(g):
        _accum(x, g * mask)
    out.bwd = bwd
    return out


def hadamard(a, b):
    """Elementwise product; a row vector (1, n) broadcasts over (m, n)."""
    av, bv = _val(a), _val(b)
    out = Tensor(av * bv, parents=(a, b))

    def bwd(g):
        ga = g * bv
        gb = g * av
        if isinstance(a, Tensor) and av.shape != g.shape:
            ga = ga.sum(axis=0, keepdims=True)
        if isinstance(b, Tensor) and bv.shape != g.shape:
            gb = gb.sum(axis=0, keepdims=True)
        _accum(a, ga)
        _accum(b, gb)
    out.bwd = bwd
    return out


def sub_const(x, c):
    """x - c for constant c (targets, boundary data)."""
    out = Tensor(_val(x) - c, parents=(x,))

    def bwd(g):
        _accum(x, g)
    out.bwd = bwd
    return out


def sum_squares(x, scale=1.0):
    """scale * sum(x_ij^2) as a scalar-rooted loss node."""
    xv = _val(x)
    out = Tensor(np.float64(scale * np.sum(xv * xv)), parents=(x,))

    def bwd(g):
        _accum(x, (2.0 * scale * g) * xv)
    out.bwd = bwd
    return out


def add_scalars(nodes):
    """Sum of scalar loss nodes (per-group losses within one batch)."""
    out = Tensor(np.float64(sum(float(_val(n)) for n in nodes)), parents=tuple(nodes))

    def bwd(g):
        for n in nodes:
            _accum(n, g)
    out.bwd = bwd
    return out


def backward(root):
    """Reverse-mode sweep from a scalar-rooted node (iterative topo order)."""
    if np.ndim(root.value) != 0:
        raise ValueError("backward requires a scalar-rooted graph")
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if isinstance(p, Tensor) and id(p) not in visited:
                stack.append((p, False))
    root.grad = np.float64(1.0)
    for node in reversed(order):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


class Adam:
    """Standard Adam with bias correction; deterministic update order."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        if all(p.grad is None for p in self.params):
            return
        self.t += 1
        b1t = 1.0 - self.b1 ** self.t
        b2t = 1.0 - self.b2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            p.value -= self.lr * (self.m[i] / b1t) / (np.sqrt(self.v[i] / b2t) + self.eps)
