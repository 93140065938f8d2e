"""Random training-data generators and the dataset container.

Source datasets pair random fields f with labels u from the finite-difference
solver (homogeneous Dirichlet); boundary datasets are label-free (the
boundary model trains on the integral-equation residual) and hold only
(kappa, g) records.  Every record derives its own seed from (root seed,
index) so generation is deterministic regardless of schedule, and a dataset
rebuilt from its provenance record is bit-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .fdsolver import fd_solve_complex, fd_solve_scalar
from .geometry import QuadratureGrid

__all__ = [
    "Dataset", "gaussian_filtered_field", "random_trig_source", "grf_boundary",
    "build_source_dataset", "build_boundary_dataset",
    "build_offlattice_source_dataset", "trig_family",
    "save_dataset", "load_dataset",
]


def _rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *key])))


def gaussian_filtered_field(seed, n, sigma):
    """Unit-variance white noise smoothed by a periodic Gaussian filter.

    sigma is the filter standard deviation in lattice units; the result is
    rescaled to unit max-abs.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = _rng(seed, 0xF1E1D)
    noise = rng.standard_normal((n, n))
    k = np.fft.fftfreq(n) * n
    kx, ky = np.meshgrid(k, k, indexing="ij")
    transfer = np.exp(-2.0 * (np.pi * sigma / n) ** 2 * (kx**2 + ky**2))
    smooth = np.real(np.fft.ifft2(np.fft.fft2(noise) * transfer))
    peak = np.max(np.abs(smooth))
    return smooth / peak if peak > 0 else smooth


_TRIG = {0: np.sin, 1: np.cos}


def trig_family(a, b, c, form, lo=0.0, hi=1.0):
    """Closed-form generator a * T1(b pi x) * T2(c pi y) with T in {sin, cos}.

    form is a 2-bit code selecting (T1, T2); returns a callable f(X, Y).
    Every member satisfies Delta f = -pi^2 (b^2 + c^2) f, which downstream
    generators use for exact source terms.
    """
    t1, t2 = _TRIG[form >> 1], _TRIG[form & 1]

    def f(X, Y):
        return a * t1(b * np.pi * X) * t2(c * np.pi * Y)

    return f


def random_trig_source(seed, n, amp_range=(-1.0, 1.0), freq_range=(0.5, 3.0)):
    """Random product-of-trigonometrics field on the closed n x n unit lattice."""
    rng = _rng(seed, 0x7A16)
    a = rng.uniform(*amp_range)
    b = rng.uniform(*freq_range)
    c = rng.uniform(*freq_range)
    form = int(rng.integers(0, 4))
    xs = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return trig_family(a, b, c, form)(X, Y)


def grf_boundary(seed, grid: QuadratureGrid, length_scale):
    """Gaussian random field on the boundary parameter.

    Zero mean, periodic squared-exponential covariance
    exp(-2 sin^2((s - t)/2) / l^2), sampled through a jittered Cholesky
    factor of the node covariance.
    """
    if length_scale <= 0:
        raise ValueError("length_scale must be positive")
    L = _grf_factor(grid, length_scale)
    rng = _rng(seed, 0x96F)
    return L @ rng.standard_normal(grid.n)


_GRF_CACHE: dict = {}


def _grf_factor(grid, length_scale):
    key = (grid.cache_key, float(length_scale))
    L = _GRF_CACHE.get(key)
    if L is None:
        t = grid.t
        d = t[:, None] - t[None, :]
        C = np.exp(-2.0 * np.sin(0.5 * d) ** 2 / length_scale**2)
        jitter = 1e-10 * grid.n
        try:
            L = np.linalg.cholesky(C + jitter * np.eye(grid.n))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("boundary covariance not positive definite after jitter") from exc
        _GRF_CACHE[key] = L
    return L


@dataclass
class Dataset:
    """Training records sharing one grid descriptor.

    kind 'source-supervised': arrays f, u of shape (records, width) plus the
    per-record kappa array.  kind 'boundary-selfsup': array g only.
    """

    kind: str
    kappas: np.ndarray
    kappa_index: np.ndarray
    g: np.ndarray | None = None
    f: np.ndarray | None = None
    u: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("source-supervised", "boundary-selfsup"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "boundary-selfsup" and (self.f is not None or self.u is not None):
            raise ValueError("boundary datasets carry no labels")

    @property
    def n_records(self):
        arr = self.g if self.g is not None else self.f
        return arr.shape[0]

    def content_hash(self):
        h = hashlib.sha256()
        h.update(self.kind.encode())
        for arr in (self.kappas, self.kappa_index, self.g, self.f, self.u):
            if arr is not None:
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def build_source_dataset(kappas, per_kappa, n, seed, mix=0.5, sigma_range=(1.0, 4.0),
                         coupled=False):
    """Random sources labelled by the lattice solver, homogeneous boundary.

    mix: fraction of Gaussian-filtered-noise records (the rest are trig
    products).  For the coupled case two independent fields form
    (f1, f2) and labels come from the complex solve; records stack the
    components as [f1 | f2].
    """
    kappas = np.asarray(kappas, dtype=np.float64)
    width = n * n * (2 if coupled else 1)
    total = len(kappas) * per_kappa
    f_arr = np.empty((total, width))
    u_arr = np.empty((total, width))
    k_idx = np.empty(total, dtype=np.int64)
    zeros = np.zeros((n, n))
    rec = 0
    for ik, kap in enumerate(kappas):
        for j in range(per_kappa):
            rng = _rng(seed, ik, j)
            def draw():
                sub = int(rng.integers(0, 2**31))
                if rng.uniform() < mix:
                    sigma = rng.uniform(*sigma_range)
                    return gaussian_filtered_field(sub, n, sigma)
                return random_trig_source(sub, n)
            if coupled:
                f1, f2 = draw(), draw()
                sol = fd_solve_complex(kap, f1 + 1j * f2, zeros.astype(complex))
                f_arr[rec] = np.concatenate([f1.ravel(), f2.ravel()])
                u_arr[rec] = np.concatenate([sol.values.real.ravel(),
                                             sol.values.imag.ravel()])
            else:
                f1 = draw()
                sol = fd_solve_scalar(kap, f1, zeros)
                f_arr[rec] = f1.ravel()
                u_arr[rec] = sol.values.ravel()
            k_idx[rec] = ik
            rec += 1
    prov = {"kind": "source", "seed": seed, "per_kappa": per_kappa, "n": n,
            "mix": mix, "sigma_range": list(sigma_range), "coupled": coupled,
            "kappas": [float(k) for k in kappas]}
    return Dataset(kind="source-supervised", kappas=kappas, kappa_index=k_idx,
                   f=f_arr, u=u_arr, provenance=prov)


def build_boundary_dataset(kappas, n_g, grid, seed, length_scales=(0.4, 0.8, 1.6),
                           coupled=False):
    """Label-free boundary traces: n_g GRF samples shared across all kappas.

    The records are the Cartesian product {kappa_i} x {g_j}; storage keeps
    one g row per (i, j) pair so batching code stays uniform.  Coupled
    records stack two independent traces node-interleaved.
    """
    kappas = np.asarray(kappas, dtype=np.float64)
    width = grid.n * (2 if coupled else 1)
    g_rows = np.empty((n_g, width))
    for j in range(n_g):
        rng = _rng(seed, 0xB0, j)
        ell = float(length_scales[int(rng.integers(0, len(length_scales)))])
        sub = int(rng.integers(0, 2**31))
        if coupled:
            g1 = grf_boundary(sub, grid, ell)
            g2 = grf_boundary(sub + 1, grid, ell)
            g_rows[j, 0::2] = g1
            g_rows[j, 1::2] = g2
        else:
            g_rows[j] = grf_boundary(sub, grid, ell)
    total = len(kappas) * n_g
    g_arr = np.empty((total, width))
    k_idx = np.empty(total, dtype=np.int64)
    rec = 0
    for ik in range(len(kappas)):
        g_arr[rec:rec + n_g] = g_rows
        k_idx[rec:rec + n_g] = ik
        rec += n_g
    prov = {"kind": "boundary", "seed": seed, "n_g": n_g, "n_bd": grid.n,
            "length_scales": [float(x) for x in length_scales],
            "coupled": coupled, "kappas": [float(k) for k in kappas],
            "curve": grid.curve.kind}
    return Dataset(kind="boundary-selfsup", kappas=kappas, kappa_index=k_idx,
                   g=g_arr, provenance=prov)


def build_offlattice_source_dataset(kappas, per_kappa, grid, pts, seed,
                                    amp_range=(-1.0, 1.0), freq_range=(0.5, 3.0)):
    """Source data on scattered interior points (petal-style domains).

    Labels avoid any volume solver: draw a trig-product w with the exact
    identity Delta w = -pi^2 (b^2 + c^2) w, so f = (Delta - 1/kappa) w is
    closed-form; the zero-boundary solution is u = w - v where v solves the
    homogeneous problem with trace w|_boundary through the Nystrom oracle
    (spectrally accurate on smooth curves).
    """
    from .bie import BoundaryData, eval_double_layer, nystrom_solve
    from .kernels import ScalarKernelSpec, boundary_kernel

    kappas = np.asarray(kappas, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    m = pts.shape[0]
    total = len(kappas) * per_kappa
    f_arr = np.empty((total, m))
    u_arr = np.empty((total, m))
    k_idx = np.empty(total, dtype=np.int64)
    bpts = grid.points
    rec = 0
    for ik, kap in enumerate(kappas):
        spec = ScalarKernelSpec(float(kap))
        kmat = boundary_kernel(spec, grid)
        for j in range(per_kappa):
            rng = _rng(seed, 0x9E7A1, ik, j)
            a = rng.uniform(*amp_range)
            b = rng.uniform(*freq_range)
            c = rng.uniform(*freq_range)
            form = int(rng.integers(0, 4))
            w = trig_family(a, b, c, form)
            w_pts = w(pts[:, 0], pts[:, 1])
            coef = -(np.pi**2) * (b**2 + c**2) - 1.0 / kap
            f_arr[rec] = coef * w_pts
            trace = w(bpts[:, 0], bpts[:, 1])
            phi = nystrom_solve(kmat, BoundaryData(trace, grid))
            v = eval_double_layer(spec, grid, phi, pts).values
            u_arr[rec] = w_pts - v
            k_idx[rec] = ik
            rec += 1
    prov = {"kind": "source-offlattice", "seed": seed, "per_kappa": per_kappa,
            "points": m, "curve": grid.curve.kind, "n_bd": grid.n,
            "kappas": [float(k) for k in kappas],
            "generator": "trig-products with Nystrom boundary correction"}
    return Dataset(kind="source-supervised", kappas=kappas, kappa_index=k_idx,
                   f=f_arr, u=u_arr, provenance=prov)


_MAGIC = b"EVOKERNEL-DATA/1\n"


def save_dataset(ds, path):
    """Versioned text header + raw float64/int64 blocks, streaming-readable."""
    arrays = [("kappas", ds.kappas, "<f8"), ("kappa_index", ds.kappa_index, "<i8")]
    for name in ("g", "f", "u"):
        arr = getattr(ds, name)
        if arr is not None:
            arrays.append((name, arr, "<f8"))
    header = {
        "kind": ds.kind,
        "provenance": ds.provenance,
        "arrays": [{"name": n, "shape": list(a.shape), "dtype": d}
                   for n, a, d in arrays],
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for _, a, d in arrays:
            fh.write(np.ascontiguousarray(a, dtype=d).tobytes())


def load_dataset(path):
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise ValueError(f"{path}: not a dataset file")
        header = json.loads(fh.readline().decode())
        blobs = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape))
            data = fh.read(count * 8)
            blobs[spec["name"]] = np.frombuffer(data, dtype=spec["dtype"]).reshape(shape).copy()
    return Dataset(kind=header["kind"], kappas=blobs["kappas"],
                   kappa_index=blobs["kappa_index"], g=blobs.get("g"),
                   f=blobs.get("f"), u=blobs.get("u"),
                   provenance=header["provenance"])
