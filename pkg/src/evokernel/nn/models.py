"""Operator model architectures.

SourceModel   u = (f ⊙ K(kappa)) @ G(x)^T : the quadrature-structured product
              network for the source-driven subproblem.  With the latent
              width equal to the sample count the f-branch is the identity,
              which makes the output exactly linear in f.
BoundaryModel phi = Out[K(kappa) ⊙ Lin(g)] : boundary-density predictor whose
              g-branch and output head are single linear layers, so the map
              g -> phi is exactly affine for fixed kappa.
BranchTrunk   u = B([kappa, f]) @ T(x)^T : plain branch-trunk baseline used
              for the accuracy comparison at matched parameter count.

Coupled-system variants reuse the same classes with doubled channel counts;
the coordinate network of the coupled source model receives a +-1 component
flag as a third input feature.
"""

from __future__ import annotations

import numpy as np

from . import engine as eg

__all__ = ["Mlp", "SourceModel", "BoundaryModel", "BranchTrunk",
           "augmented_points"]


class Mlp:
    """Dense layers, weights of shape (out, in) with per-layer activation."""

    def __init__(self, weights, biases, activations):
        self.weights = weights
        self.biases = biases
        self.activations = list(activations)

    @classmethod
    def build(cls, dims, activations, rng):
        """dims = [in, h1, ..., out]; activation per layer: 'relu' | 'identity'.

        relu layers use Kaiming-uniform fan-in init, identity layers uniform
        +-1/sqrt(fan_in).
        """
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        ws, bs = [], []
        for i, act in enumerate(activations):
            fan_in, fan_out = dims[i], dims[i + 1]
            if act == "relu":
                bound = np.sqrt(6.0 / fan_in)
            elif act == "identity":
                bound = 1.0 / np.sqrt(fan_in)
            else:
                raise ValueError(f"unknown activation {act!r}")
            ws.append(eg.Parameter(rng.uniform(-bound, bound, size=(fan_out, fan_in))))
            bs.append(eg.Parameter(rng.uniform(-bound, bound, size=fan_out)))
        return cls(ws, bs, activations)

    @property
    def dims(self):
        return [self.weights[0].value.shape[1]] + [w.value.shape[0] for w in self.weights]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x):
        """Graph-building forward; x may be a Tensor or a constant ndarray."""
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = eg.add_bias(eg.matmul_t(h, w), b)
            if act == "relu":
                h = eg.relu(h)
        return h

    def predict(self, x):
        """Plain-numpy forward used outside training."""
        h = np.asarray(x, dtype=np.float64)
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = h @ w.value.T + b.value
            if act == "relu":
                np.maximum(h, 0.0, out=h)
        return h


def augmented_points(points):
    """Stack (x, y, +1) and (x, y, -1) rows for the coupled source model."""
    n = points.shape[0]
    flags = np.concatenate([np.ones(n), -np.ones(n)])
    return np.column_stack([np.vstack([points, points]), flags])


class SourceModel:
    """Product-structure solution operator for the zero-boundary source problem."""

    def __init__(self, points, nn_k, nn_g, coupled=False):
        self.points = np.asarray(points, dtype=np.float64)
        self.nn_k = nn_k
        self.nn_g = nn_g
        self.coupled = coupled
        self.n_samples = self.points.shape[0] * (2 if coupled else 1)
        if nn_k.dims[-1] != nn_g.dims[-1]:
            raise ValueError("kappa branch and coordinate branch widths differ")
        if nn_g.dims[-1] != self.n_samples:
            raise ValueError("latent width must equal the sample count (identity f-branch)")
        self._coords = augmented_points(self.points) if coupled else self.points
        self._op_cache: dict = {}

    @classmethod
    def build(cls, points, hidden_k, hidden_g, rng, coupled=False):
        n = points.shape[0] * (2 if coupled else 1)
        d = 3 if coupled else 2
        nn_k = Mlp.build([1] + list(hidden_k) + [n],
                         ["relu"] * len(hidden_k) + ["identity"], rng)
        nn_g = Mlp.build([d] + list(hidden_g) + [n],
                         ["relu"] * len(hidden_g) + ["identity"], rng)
        # the output contracts n latent channels; shrink the coordinate head
        # so initial predictions sit at the targets' scale instead of sqrt(n)
        # above it
        nn_g.weights[-1].value *= 1.0 / np.sqrt(n)
        nn_g.biases[-1].value *= 1.0 / np.sqrt(n)
        return cls(points, nn_k, nn_g, coupled=coupled)

    def parameters(self):
        return self.nn_k.parameters() + self.nn_g.parameters()

    def forward(self, kappa_col, f):
        """Graph forward: kappa_col (m, 1) and f (m, N) are constants."""
        kf = self.nn_k.forward(kappa_col)
        a = eg.hadamard(f, kf)
        g = self.nn_g.forward(self._coords)
        return eg.matmul_t(a, g)

    def invalidate(self):
        self._op_cache.clear()

    def operator(self, kappa):
        """(kappa features, coordinate features) frozen for one kappa value."""
        key = float(kappa)
        hit = self._op_cache.get(key)
        if hit is None:
            kf = self.nn_k.predict(np.array([[key]]))[0]
            g = self.nn_g.predict(self._coords)
            hit = (kf, g)
            self._op_cache[key] = hit
        return hit

    def predict(self, kappa, f):
        """f: (N,) or (m, N) -> solution values of matching shape."""
        kf, g = self.operator(kappa)
        return (np.asarray(f, dtype=np.float64) * kf) @ g.T


class BoundaryModel:
    """Boundary-density predictor trained on the integral-equation residual."""

    def __init__(self, nn_k, nn_g, nn_out):
        if not (nn_k.dims[-1] == nn_g.dims[-1]):
            raise ValueError("kappa and data branches must share the internal width")
        if nn_g.activations != ["identity"] or nn_out.activations != ["identity"]:
            raise ValueError("data branch and output head must be single linear layers")
        self.nn_k = nn_k
        self.nn_g = nn_g
        self.nn_out = nn_out
        self._kf_cache: dict = {}

    @classmethod
    def build(cls, n_bd, rng, internal=None, hidden_k=None, coupled=False):
        """Defaults follow the reference setup: internal width 3 n_bd / 4 and a
        kappa branch with two relu hidden layers of the same width."""
        width = n_bd * (2 if coupled else 1)
        n_star = internal if internal is not None else (3 * width) // 4
        hk = list(hidden_k) if hidden_k is not None else [n_star, n_star]
        nn_k = Mlp.build([1] + hk + [n_star], ["relu"] * len(hk) + ["identity"], rng)
        nn_g = Mlp.build([width, n_star], ["identity"], rng)
        nn_out = Mlp.build([n_star, width], ["identity"], rng)
        return cls(nn_k, nn_g, nn_out)

    def parameters(self):
        return self.nn_k.parameters() + self.nn_g.parameters() + self.nn_out.parameters()

    def forward(self, kappa_col, g):
        kf = self.nn_k.forward(kappa_col)
        gf = self.nn_g.forward(g)
        return self.nn_out.forward(eg.hadamard(kf, gf))

    def invalidate(self):
        self._kf_cache.clear()

    def predict(self, kappa, g):
        key = float(kappa)
        kf = self._kf_cache.get(key)
        if kf is None:
            kf = self.nn_k.predict(np.array([[key]]))[0]
            self._kf_cache[key] = kf
        gf = self.nn_g.predict(g)
        return self.nn_out.predict(kf * gf)


class BranchTrunk:
    """Inner-product baseline: branch on [kappa, f], trunk on coordinates."""

    def __init__(self, points, branch, trunk, coupled=False):
        self.points = np.asarray(points, dtype=np.float64)
        self.branch = branch
        self.trunk = trunk
        self.coupled = coupled
        if branch.dims[-1] != trunk.dims[-1]:
            raise ValueError("branch and trunk latent widths differ")
        self._coords = augmented_points(self.points) if coupled else self.points
        self._trunk_cache = None

    @classmethod
    def build(cls, points, width, latent, depth, rng, coupled=False):
        n = points.shape[0] * (2 if coupled else 1)
        d = 3 if coupled else 2
        branch = Mlp.build([1 + n] + [width] * depth + [latent],
                           ["relu"] * depth + ["identity"], rng)
        trunk = Mlp.build([d] + [width] * depth + [latent],
                          ["relu"] * depth + ["identity"], rng)
        # same head rescale as the product model: the inner product contracts
        # `latent` channels
        trunk.weights[-1].value *= 1.0 / np.sqrt(latent)
        trunk.biases[-1].value *= 1.0 / np.sqrt(latent)
        return cls(points, branch, trunk, coupled=coupled)

    def parameters(self):
        return self.branch.parameters() + self.trunk.parameters()

    def n_parameters(self):
        return sum(p.value.size for p in self.parameters())

    def forward(self, branch_in):
        b = self.branch.forward(branch_in)
        t = self.trunk.forward(self._coords)
        return eg.matmul_t(b, t)

    def invalidate(self):
        self._trunk_cache = None

    def predict(self, kappa, f):
        f = np.atleast_2d(np.asarray(f, dtype=np.float64))
        binput = np.column_stack([np.full(f.shape[0], float(kappa)), f])
        if self._trunk_cache is None:
            self._trunk_cache = self.trunk.predict(self._coords)
        out = self.branch.predict(binput) @ self._trunk_cache.T
        return out


def n_parameters(model):
    return sum(p.value.size for p in model.parameters())
