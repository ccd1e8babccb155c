"""Eigen-decomposed operators on product domains.

Everything downstream works in coefficient space, so an operator here is
just its spectrum: a positive nondecreasing eigenvalue sequence, the
matching L2-orthonormal eigenfunctions, the spatial dimension, and the
Sobolev exponent q_A of the embedding V_{1/2} -> L^{2 q_A}.  The catalog
is restricted to domains with closed-form eigenpairs (intervals, boxes,
a shifted Neumann variant, and spectral fractional powers of these), which
is what makes independent oracle testing possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "Operator",
    "SpectralField",
    "OperatorSpecConfig",
    "make_operator",
    "q_A_of",
    "project",
    "evaluate",
    "frac_norm",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)

_KINDS = (
    "dirichlet_laplacian_interval",
    "dirichlet_laplacian_box",
    "neumann_laplacian_shifted",
    "spectral_fractional_power",
)


@dataclass(frozen=True)
class OperatorSpecConfig:
    """Catalog entry.  `lengths` sizes the box (one entry per axis), `shift`
    is the Neumann zero-mode lift, `power`/`base` define a spectral
    fractional power, and `q` is the embedding exponent on the borderline
    dimension where it is caller-chosen."""

    kind: str
    lengths: tuple = ()
    shift: float = 0.0
    power: float = 0.0
    base: "OperatorSpecConfig | None" = None
    q: float = 4.0

    def validate(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown operator kind {self.kind!r}")
        if self.kind == "spectral_fractional_power":
            if not 0.0 < self.power < 1.0:
                raise ConfigError("power must lie in (0, 1)")
            if self.base is None:
                raise ConfigError("fractional power needs a base operator")
            if self.base.kind == "spectral_fractional_power":
                raise ConfigError("base must be a non-fractional catalog kind")
            self.base.validate()
        else:
            if not self.lengths:
                raise ConfigError(f"{self.kind} needs side lengths")
            if any(not (isinstance(L, (int, float)) and L > 0.0
                        and math.isfinite(L)) for L in self.lengths):
                raise ConfigError("lengths must be positive and finite")
            if self.kind != "dirichlet_laplacian_box" and len(self.lengths) != 1:
                raise ConfigError(f"{self.kind} is one-dimensional")
            if self.kind == "neumann_laplacian_shifted":
                if not (self.shift > 0.0 and math.isfinite(self.shift)):
                    raise ConfigError("shift must be > 0 so the spectrum is")
        if not (1.0 < self.q < math.inf):
            raise ConfigError("q must lie in (1, inf)")


class Operator:
    """Immutable spectral triple (lambda_n, phi_n, q_A) on a box."""

    def __init__(self, name, dim, q_A, domain_box, eigval_fn, eigfun_fn):
        self.name = name
        self.dim = dim
        self.q_A = q_A
        self.domain_box = tuple(tuple(b) for b in domain_box)
        self._eigval = eigval_fn
        self._eigfun = eigfun_fn

    def eigenvalue(self, n: int) -> float:
        if n < 1:
            raise DomainError("mode index is 1-based")
        return self._eigval(int(n))

    def eigenvalues(self, N: int) -> np.ndarray:
        """First N eigenvalues as a vector (solver hot path)."""
        return np.array([self._eigval(n) for n in range(1, N + 1)])

    def eigenfunction(self, n: int, x):
        """phi_n at x; x broadcasts (scalar/array in 1-D, (..., dim) else)."""
        if n < 1:
            raise DomainError("mode index is 1-based")
        return self._eigfun(int(n), x)

    def __repr__(self):
        return f"Operator({self.name}, dim={self.dim}, q_A={self.q_A})"


@dataclass(frozen=True)
class SpectralField:
    """Coefficient vector against the first N eigenfunctions of op."""

    op: Operator
    coeffs: np.ndarray
    N: int
    aliasing_est: float = 0.0
    warnings: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if self.N < 1 or c.shape != (self.N,):
            raise DomainError("need N >= 1 coefficients, matching N")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")


# ------------------------------------------------------------ the catalog

def _interval_ops(L):
    k = math.pi / L
    amp = math.sqrt(2.0 / L)

    def ev(n):
        return (n * k) ** 2

    def ef(n, x):
        return amp * np.sin(n * k * np.asarray(x, dtype=float))

    return ev, ef


def _neumann_shifted_ops(L, eps):
    k = math.pi / L
    a0 = math.sqrt(1.0 / L)
    amp = math.sqrt(2.0 / L)

    def ev(n):
        return ((n - 1) * k) ** 2 + eps

    def ef(n, x):
        x = np.asarray(x, dtype=float)
        if n == 1:
            return np.full_like(x, a0, dtype=float)
        return amp * np.cos((n - 1) * k * x)

    return ev, ef


class _BoxModes:
    """Lazily grown table of (eigenvalue, multi-index) for a product box,
    sorted by eigenvalue with lexicographic index tie-break.  Indices with
    some component beyond the current cube edge M are only admitted once
    the cube provably contains every mode below the cutoff ((M+1) pi /
    max L)^2, so the ordering is exact, not truncation-dependent."""

    def __init__(self, lengths):
        self.lengths = lengths
        self.kvec = np.array([math.pi / L for L in lengths])
        self.table = []
        self._M = 0

    def _rebuild(self, M):
        d = len(self.lengths)
        axes = [np.arange(1, M + 1)] * d
        grids = np.meshgrid(*axes, indexing="ij")
        idx = np.stack([g.reshape(-1) for g in grids], axis=1)
        lam = ((idx * self.kvec) ** 2).sum(axis=1)
        cutoff = ((M + 1) * math.pi / max(self.lengths)) ** 2
        keep = lam <= cutoff
        order = sorted(
            (float(lam[i]), tuple(int(v) for v in idx[i]))
            for i in range(len(lam)) if keep[i])
        self.table = order
        self._M = M

    def need(self, count):
        M = max(self._M, 8)
        while len(self.table) < count:
            self._rebuild(M)
            M *= 2
        return self.table


def _box_ops(lengths):
    modes = _BoxModes(lengths)
    d = len(lengths)
    amp = math.prod(math.sqrt(2.0 / L) for L in lengths)
    kvec = modes.kvec

    def ev(n):
        return modes.need(n)[n - 1][0]

    def ef(n, x):
        idx = modes.need(n)[n - 1][1]
        pt = np.asarray(x, dtype=float)
        if pt.shape == () or pt.shape[-1] != d:
            raise DomainError(f"point must have {d} coordinates")
        out = amp
        for i in range(d):
            out = out * np.sin(idx[i] * kvec[i] * pt[..., i])
        return out

    return ev, ef


def q_A_of(cfg: OperatorSpecConfig):
    """Sobolev exponent of V_{1/2} -> L^{2 q_A} for a catalog entry.
    math.inf encodes the unbounded case."""
    cfg.validate()
    if cfg.kind == "spectral_fractional_power":
        d = len(cfg.base.lengths)
        s = cfg.power
        if d < 2.0 * s:
            return math.inf
        if d == 2.0 * s:
            return cfg.q
        return d / (d - 2.0 * s)
    d = len(cfg.lengths)
    if d == 1:
        return math.inf
    if d == 2:
        return cfg.q
    return d / (d - 2.0)


def make_operator(cfg: OperatorSpecConfig) -> Operator:
    cfg.validate()
    qa = q_A_of(cfg)
    if cfg.kind == "spectral_fractional_power":
        base = make_operator(cfg.base)
        s = cfg.power

        def ev(n, _b=base, _s=s):
            return _b.eigenvalue(n) ** _s

        name = f"{cfg.base.kind}^{s:g}"
        return Operator(name, base.dim, qa, base.domain_box, ev,
                        base._eigfun)
    if cfg.kind == "dirichlet_laplacian_interval":
        L = float(cfg.lengths[0])
        ev, ef = _interval_ops(L)
        box = ((0.0, L),)
    elif cfg.kind == "neumann_laplacian_shifted":
        L = float(cfg.lengths[0])
        ev, ef = _neumann_shifted_ops(L, float(cfg.shift))
        box = ((0.0, L),)
    else:
        Ls = tuple(float(v) for v in cfg.lengths)
        if len(Ls) == 1:
            ev, ef = _interval_ops(Ls[0])
        else:
            ev, ef = _box_ops(Ls)
        box = tuple((0.0, L) for L in Ls)
    return Operator(cfg.kind, len(box), qa, box, ev, ef)


# --------------------------------------------- projection and evaluation

def _panel_nodes(lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).reshape(-1)
    ws = (half[:, None] * _GL_WEIGHTS[None, :]).reshape(-1)
    return xs, ws


def _quad_coeffs(op, g, N, panels):
    if op.dim == 1:
        lo, hi = op.domain_box[0]
        xs, ws = _panel_nodes(lo, hi, panels)
        gv = np.asarray(g(xs), dtype=float)
        if gv.shape != xs.shape:
            raise DomainError("function values must match the grid shape")
        wg = ws * gv
        return np.array([float(np.dot(op.eigenfunction(n, xs), wg))
                         for n in range(1, N + 1)])
    per_axis = [_panel_nodes(lo, hi, panels) for lo, hi in op.domain_box]
    grids = np.meshgrid(*[xa for xa, _ in per_axis], indexing="ij")
    pts = np.stack(grids, axis=-1)
    wgrid = np.meshgrid(*[wa for _, wa in per_axis], indexing="ij")
    w = np.ones_like(grids[0])
    for wa in wgrid:
        w = w * wa
    gv = np.asarray(g(pts), dtype=float)
    if gv.shape != w.shape:
        raise DomainError("function values must match the grid shape")
    wg = w * gv
    return np.array([float(np.sum(op.eigenfunction(n, pts) * wg))
                     for n in range(1, N + 1)])


def project(op: Operator, g, N: int, quad_points: int) -> SpectralField:
    """Coefficients c_n = integral of g * phi_n over the box.

    g is a callable of the grid (vectorized), or an existing SpectralField
    on the same operator, in which case coefficients transfer exactly with
    truncation/zero-padding.  quad_points is the per-axis node floor and
    must be at least 4N so phi_N cannot alias on the composite rule.  All
    coefficients are re-done on a doubled rule; the largest difference is
    reported as aliasing_est with a warning past 1e-8.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if g is None:
        raise DomainError("nothing to project")
    if isinstance(g, SpectralField):
        if g.op is not op and g.op.name != op.name:
            raise DomainError("field lives on a different operator")
        c = np.zeros(N)
        m = min(N, g.N)
        c[:m] = g.coeffs[:m]
        return SpectralField(op, c, N)
    if quad_points < 4 * N:
        raise DomainError(
            f"quad_points={quad_points} is below the anti-aliasing floor "
            f"4N={4 * N}")
    panels = max(1, math.ceil(quad_points / len(_GL_NODES)))
    c = _quad_coeffs(op, g, N, panels)
    refined = _quad_coeffs(op, g, N, 2 * panels)
    aliasing = float(np.max(np.abs(refined - c)))
    warn = ()
    if aliasing > 1e-8:
        warn = (f"quadrature under-resolved: aliasing estimate {aliasing:.3e} "
                f"over {N} coefficients",)
    return SpectralField(op, c, N, aliasing_est=aliasing, warnings=warn)


def evaluate(field: SpectralField, x):
    """Sum of c_n phi_n(x), ascending n (fixed order keeps runs bitwise
    reproducible)."""
    op = field.op
    if op.dim == 1:
        xv = np.asarray(x, dtype=float)
        lo, hi = op.domain_box[0]
        if np.any(xv < lo) or np.any(xv > hi):
            raise DomainError("point outside the operator domain")
    else:
        xv = np.asarray(x, dtype=float)
        if xv.shape[-1] != op.dim:
            raise DomainError(f"point must have {op.dim} coordinates")
        for i, (lo, hi) in enumerate(op.domain_box):
            if np.any(xv[..., i] < lo) or np.any(xv[..., i] > hi):
                raise DomainError("point outside the operator domain")
    acc = 0.0
    for n in range(1, field.N + 1):
        acc = acc + field.coeffs[n - 1] * op.eigenfunction(n, xv)
    return acc if np.ndim(acc) else float(acc)


def frac_norm(field: SpectralField, theta: float) -> float:
    """Fractional-power norm (sum lambda_n^(2 theta) c_n^2)^(1/2); theta
    in [-1, 1], negative values giving the duality-pairing norm."""
    if not -1.0 <= theta <= 1.0:
        raise DomainError("theta must lie in [-1, 1]")
    if theta == 0.0:
        return float(np.linalg.norm(field.coeffs))
    lam = field.op.eigenvalues(field.N)
    return float(math.sqrt(np.sum(lam ** (2.0 * theta)
                                  * field.coeffs ** 2)))
