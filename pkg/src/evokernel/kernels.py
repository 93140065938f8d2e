"""Fundamental solutions and boundary kernels.

Scalar operator: Delta u - u/kappa.  Fundamental solution

    G0(x, y) = -K0(|x - y| / sqrt(kappa)) / (2 pi),

whose normal derivative in the source point y is

    dG0/dn_y = K1(r / sqrt(kappa)) / (2 pi sqrt(kappa)) * ((y - x) . n_y) / r.

Coupled 2x2 operator (the real/imaginary split of u + i*lam*Delta u):

    L_lam = [[I, -lam Delta], [lam Delta, I]],

with fundamental matrix (argument z = r / sqrt(lam))

    G = (1 / (2 pi lam)) * [[-kei0(z), -ker0(z)], [ker0(z), -kei0(z)]].

Sign and swap conventions for the second-kind boundary equations are the
ones validated against manufactured interior solutions (see tests); the
boundary kernel matrices below are stored in the *shared residual
orientation*: for both the scalar and the coupled case the discrete
residual reads

    r = phi/2 + Ktilde (omega * phi) - g,

and the interior double-layer field is  u(x) = Ptilde(x) (omega * phi).
For the coupled case Ktilde folds in both the density component swap
(phi1, phi2) -> (phi2, phi1) and the leading minus sign of the
representation, which is what makes the two cases share one code path.

Parametrized kernels include the speed factor |gamma'(t)|.  On smooth
curves the diagonal limit is curvature * speed / (4 pi): the Bessel/Kelvin
kernels differ from the logarithmic kernel by terms whose normal
derivative vanishes at coincidence, so the Laplace-type limit applies; in
the folded orientation it lands on the 2x2 block diagonal as that same
value times the identity.  The limits are re-verified numerically by
near-diagonal extrapolation in the test suite.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass

import numpy as np

from . import specfun

__all__ = [
    "ScalarKernelSpec", "SystemKernelSpec", "BoundaryKernelMatrix",
    "scalar_g0", "scalar_dln", "system_g0", "system_dkdn",
    "scalar_boundary_kernel", "system_boundary_kernel", "boundary_kernel",
    "potential_matrix", "save_kernel_matrix", "load_kernel_matrix",
    "clear_cache",
]


@dataclass(frozen=True)
class ScalarKernelSpec:
    """Parameter kappa > 0 of Delta u - u/kappa (equals lam of (I - lam Delta))."""

    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def kind(self):
        return "scalar"

    @property
    def value(self):
        return self.kappa


@dataclass(frozen=True)
class SystemKernelSpec:
    """Parameter lam > 0 of the coupled operator L_lam."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")

    @property
    def kind(self):
        return "system"

    @property
    def value(self):
        return self.lam


def _pair_geometry(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = y - x
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise ValueError("kernel evaluation requires x != y")
    return d, r


def scalar_g0(spec, x, y):
    """Fundamental solution -K0(r/sqrt(kappa))/(2 pi); broadcasts over (..., 2)."""
    _, r = _pair_geometry(x, y)
    return -specfun.k0(r / np.sqrt(spec.kappa)) / (2.0 * np.pi)


def scalar_dln(spec, x, y, n_y):
    """Normal derivative of G0 in y along unit vector n_y."""
    d, r = _pair_geometry(x, y)
    n_y = np.asarray(n_y, dtype=np.float64)
    sk = np.sqrt(spec.kappa)
    drdn = (d[..., 0] * n_y[..., 0] + d[..., 1] * n_y[..., 1]) / r
    return specfun.k1(r / sk) / (2.0 * np.pi * sk) * drdn


def system_g0(spec, x, y):
    """2x2 fundamental matrix of L_lam at x, y; returns shape (..., 2, 2)."""
    _, r = _pair_geometry(x, y)
    z = r / np.sqrt(spec.lam)
    c = 1.0 / (2.0 * np.pi * spec.lam)
    kei0 = specfun.kei(0, z)
    ker0 = specfun.ker(0, z)
    out = np.empty(np.shape(r) + (2, 2))
    out[..., 0, 0] = -c * kei0
    out[..., 0, 1] = -c * ker0
    out[..., 1, 0] = c * ker0
    out[..., 1, 1] = -c * kei0
    return out


def system_dkdn(spec, x, y, n_y):
    """Normal-derivative (in y) entries of the kernel matrix lam * [[G11, -G12], [G21, -G22]].

    Equals (1 / (2 pi sqrt(lam))) * [[-kei0', ker0'], [ker0', kei0']](z) * dr/dn_y.
    """
    d, r = _pair_geometry(x, y)
    n_y = np.asarray(n_y, dtype=np.float64)
    sl = np.sqrt(spec.lam)
    z = r / sl
    drdn = (d[..., 0] * n_y[..., 0] + d[..., 1] * n_y[..., 1]) / r
    f = drdn / (2.0 * np.pi * sl)
    dker = specfun.dker0(z)
    dkei = specfun.dkei0(z)
    out = np.empty(np.shape(r) + (2, 2))
    out[..., 0, 0] = -dkei * f
    out[..., 0, 1] = dker * f
    out[..., 1, 0] = dker * f
    out[..., 1, 1] = dkei * f
    return out


@dataclass(frozen=True)
class BoundaryKernelMatrix:
    """Dense parametrized boundary kernel in shared residual orientation.

    values has shape (n, n) for the scalar case or (2n, 2n) for the coupled
    case with node-interleaved component layout.
    """

    values: np.ndarray
    grid: object
    spec: object

    @property
    def kind(self):
        return self.spec.kind

    @property
    def n_unknowns(self):
        return self.values.shape[0]


def _offdiag_geometry(grid):
    p = grid.points
    d = p[None, :, :] - p[:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    np.fill_diagonal(r, 1.0)  # placeholder, diagonal overwritten below
    drdn = (d[..., 0] * grid.normals[None, :, 0]
            + d[..., 1] * grid.normals[None, :, 1]) / r
    return r, drdn


def scalar_boundary_kernel(spec, grid):
    """K(s_j, t_l) = dG0/dn_y * |gamma'(t_l)|, diagonal = curv * speed / (4 pi)."""
    sk = np.sqrt(spec.kappa)
    r, drdn = _offdiag_geometry(grid)
    K = specfun.k1(r / sk) / (2.0 * np.pi * sk) * drdn * grid.speeds[None, :]
    np.fill_diagonal(K, grid.curvatures * grid.speeds / (4.0 * np.pi))
    return BoundaryKernelMatrix(values=K, grid=grid, spec=spec)


def system_boundary_kernel(spec, grid):
    """Coupled-case kernel with swap and representation sign folded in.

    With D the raw normal-derivative block (system_dkdn) the folded entries
    acting on the interleaved density (phi1, phi2) are
    Ktilde[:, :, a, 0] = -D[a, 1], Ktilde[:, :, a, 1] = -D[a, 0];
    diagonal blocks are (curv * speed / 4 pi) * Id.
    """
    sl = np.sqrt(spec.lam)
    r, drdn = _offdiag_geometry(grid)
    z = r / sl
    f = drdn / (2.0 * np.pi * sl) * grid.speeds[None, :]
    dker = specfun.dker0(z.ravel()).reshape(z.shape)
    dkei = specfun.dkei0(z.ravel()).reshape(z.shape)
    n = grid.n
    K = np.zeros((2 * n, 2 * n))
    # D = [[-dkei, dker], [dker, dkei]] * f; folded: K[a, b] = -D[a, 1-b]
    K[0::2, 0::2] = -dker * f
    K[0::2, 1::2] = dkei * f
    K[1::2, 0::2] = -dkei * f
    K[1::2, 1::2] = -dker * f
    c = grid.curvatures * grid.speeds / (4.0 * np.pi)
    idx = np.arange(n)
    K[2 * idx, 2 * idx] = c
    K[2 * idx + 1, 2 * idx + 1] = c
    K[2 * idx, 2 * idx + 1] = 0.0
    K[2 * idx + 1, 2 * idx] = 0.0
    return BoundaryKernelMatrix(values=K, grid=grid, spec=spec)


_CACHE: dict = {}


def boundary_kernel(spec, grid):
    """Cached kernel-matrix builder keyed by (spec kind+value, curve, n_bd).

    Matrices are reused across time steps; an optional on-disk cache is
    enabled by the EVOKERNEL_CACHE_DIR environment variable.
    """
    key = (spec.kind, spec.value, grid.cache_key)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    cache_dir = os.environ.get("EVOKERNEL_CACHE_DIR")
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        tag = f"{spec.kind}_{spec.value:.12g}_{grid.curve.kind}_{grid.n}"
        path = os.path.join(cache_dir, tag + ".kmat")
        if os.path.exists(path):
            kmat = load_kernel_matrix(path, grid=grid, spec=spec)
            _CACHE[key] = kmat
            return kmat
    if spec.kind == "scalar":
        kmat = scalar_boundary_kernel(spec, grid)
    else:
        kmat = system_boundary_kernel(spec, grid)
    _CACHE[key] = kmat
    if path:
        save_kernel_matrix(kmat, path)
    return kmat


def clear_cache():
    _CACHE.clear()


def potential_matrix(spec, grid, pts):
    """Interior evaluation matrix Ptilde with u = Ptilde (omega * phi).

    pts: (m, 2) strictly interior points.  Scalar: (m, n); coupled: (2m, 2n)
    interleaved, swap and sign folded exactly as in the boundary kernel.
    """
    pts = np.asarray(pts, dtype=np.float64)
    d = grid.points[None, :, :] - pts[:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise ValueError("potential evaluation point lies on the boundary grid")
    drdn = (d[..., 0] * grid.normals[None, :, 0]
            + d[..., 1] * grid.normals[None, :, 1]) / r
    if spec.kind == "scalar":
        sk = np.sqrt(spec.kappa)
        return specfun.k1(r / sk) / (2.0 * np.pi * sk) * drdn * grid.speeds[None, :]
    sl = np.sqrt(spec.lam)
    z = r / sl
    f = drdn / (2.0 * np.pi * sl) * grid.speeds[None, :]
    dker = specfun.dker0(z.ravel()).reshape(z.shape)
    dkei = specfun.dkei0(z.ravel()).reshape(z.shape)
    m, n = pts.shape[0], grid.n
    P = np.empty((2 * m, 2 * n))
    P[0::2, 0::2] = -dker * f
    P[0::2, 1::2] = dkei * f
    P[1::2, 0::2] = -dkei * f
    P[1::2, 1::2] = -dker * f
    return P


_MAGIC = b"EVOKERNEL-KMAT/1\n"


def save_kernel_matrix(kmat, path):
    """Flat binary export: magic, JSON header line, row-major float64 block."""
    header = {
        "rows": int(kmat.values.shape[0]),
        "cols": int(kmat.values.shape[1]),
        "kind": kmat.spec.kind,
        "param": float(kmat.spec.value),
        "curve": kmat.grid.curve.kind,
        "n_bd": int(kmat.grid.n),
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(kmat.values, dtype="<f8").tobytes())


def load_kernel_matrix(path, grid=None, spec=None):
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a kernel matrix file")
        header = json.loads(fh.readline().decode())
        body = fh.read()
    vals = np.frombuffer(body, dtype="<f8").reshape(header["rows"], header["cols"]).copy()
    if spec is None:
        spec = (ScalarKernelSpec(header["param"]) if header["kind"] == "scalar"
                else SystemKernelSpec(header["param"]))
    return BoundaryKernelMatrix(values=vals, grid=grid, spec=spec)
