"""Picard continuation for the semilinear problem D_t^alpha u + Au = f(u).

The solver marches adaptive time windows over a fixed uniform grid.  On
each window the mild-solution map is iterated to a fixed point: the
memory integral over already-accepted nodes is a constant of the window,
while the window's own Volterra term is re-assembled from f(u) of the
current iterate.  Windows halve on contraction failure and grow back on
success; a persistent collapse or a norm past the blow-up threshold is
reported as detection of a maximal existence time, never as a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .criticality import Unbounded, classify
from .errors import ConfigError, DomainError, MLWaveError, OverflowSignal
from .linear_solver import SolutionTrace, _KernelTable, _lag_weights
from .mittag_leffler import ml_bound_probe
from .spectral_operator import SpectralField, evaluate, project

__all__ = [
    "NONLINEARITY_KINDS",
    "NonlinearitySpec",
    "PicardConfig",
    "RunOutcome",
    "SemilinearProblem",
    "WindowFailure",
    "WindowRecord",
    "apply_nonlinearity",
    "picard_window",
    "run",
    "strong_solution_check",
]

NONLINEARITY_KINDS = ("zero", "linear_shift", "power", "sine", "custom")


class WindowFailure(MLWaveError):
    """A Picard window did not contract; the caller shrinks the window."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class NonlinearitySpec:
    """Pointwise nonlinearity f(u) with f(0) = 0.

    Catalog: zero; linear_shift f(u) = kappa*u; power f(u) = c*|u|^(r-1)*u
    with r > 1 (its derivative bound constant is C = |c|*r by
    construction); sine f(u) = c*sin(u); custom, a tabulated odd-style
    profile interpolated linearly (clamped outside the table).

    The growth class is derived from the kind: power declares a growth
    exponent r (checked against the criticality bound on admission), the
    globally Lipschitz kinds declare monotone envelopes instead.  A custom
    table may declare a growth exponent via params["r"].
    """

    kind: str = "zero"
    params: dict = dc_field(default_factory=dict)

    def validate(self):
        p = self.params
        if self.kind == "zero":
            return
        if self.kind == "linear_shift":
            if not math.isfinite(float(p.get("kappa", math.nan))):
                raise ConfigError("linear_shift needs a finite kappa")
            return
        if self.kind == "power":
            c = float(p.get("c", math.nan))
            r = float(p.get("r", math.nan))
            if not math.isfinite(c):
                raise ConfigError("power nonlinearity needs a finite c")
            if not (math.isfinite(r) and r > 1.0):
                raise ConfigError(
                    f"power nonlinearity needs r > 1, got {p.get('r')}")
            return
        if self.kind == "sine":
            if not math.isfinite(float(p.get("c", math.nan))):
                raise ConfigError("sine nonlinearity needs a finite c")
            return
        if self.kind == "custom":
            s = np.asarray(p.get("s", ()), dtype=float)
            v = np.asarray(p.get("values", ()), dtype=float)
            if s.ndim != 1 or s.shape != v.shape or len(s) < 2:
                raise ConfigError(
                    "custom nonlinearity needs matching 1-D s/values tables")
            if not (np.all(np.isfinite(s)) and np.all(np.isfinite(v))):
                raise ConfigError("custom table must be finite")
            if np.any(np.diff(s) <= 0.0):
                raise ConfigError("custom table abscissae must increase")
            at0 = np.interp(0.0, s, v)
            if not (s[0] <= 0.0 <= s[-1]) or at0 != 0.0:
                raise ConfigError(
                    "custom nonlinearity must bracket 0 with f(0) = 0")
            if "r" in p and not float(p["r"]) > 1.0:
                raise ConfigError("declared growth exponent must be > 1")
            return
        raise ConfigError(
            f"unknown nonlinearity kind {self.kind!r}; "
            f"catalog: {NONLINEARITY_KINDS}")

    @property
    def hypothesis(self) -> str:
        """Growth class: "Hf1" (power bound, exponent r) or "Hf2"
        (monotone Lipschitz envelopes)."""
        if self.kind in ("zero", "power"):
            return "Hf1"
        if self.kind == "custom" and "r" in self.params:
            return "Hf1"
        return "Hf2"

    @property
    def hf1(self):
        """(r, C) of the declared power growth bound, or None."""
        if self.kind == "power":
            c = abs(float(self.params["c"]))
            r = float(self.params["r"])
            return r, c * r
        if self.kind == "custom" and "r" in self.params:
            r = float(self.params["r"])
            return r, float(self.params.get("C", self.lipschitz_envelope(1.0)))
        if self.kind == "zero":
            return None     # no growth to restrict
        return None

    def apply(self, vals):
        """Pointwise f on an array of field values."""
        vals = np.asarray(vals, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(vals)
        p = self.params
        if self.kind == "linear_shift":
            return float(p["kappa"]) * vals
        if self.kind == "power":
            c, r = float(p["c"]), float(p["r"])
            return c * np.abs(vals) ** (r - 1.0) * vals
        if self.kind == "sine":
            return float(p["c"]) * np.sin(vals)
        return np.interp(vals, np.asarray(p["s"], dtype=float),
                         np.asarray(p["values"], dtype=float))

    def lipschitz_envelope(self, rho) -> float:
        """Monotone bound Q1(rho) on the local Lipschitz constant over the
        ball of radius rho (sup-over-ball construction)."""
        rho = abs(float(rho))
        p = self.params
        if self.kind == "zero":
            return 0.0
        if self.kind == "linear_shift":
            return abs(float(p["kappa"]))
        if self.kind == "power":
            c, r = abs(float(p["c"])), float(p["r"])
            return c * r * rho ** (r - 1.0)
        if self.kind == "sine":
            return abs(float(p["c"]))
        s = np.asarray(p["s"], dtype=float)
        v = np.asarray(p["values"], dtype=float)
        slopes = np.abs(np.diff(v) / np.diff(s))
        inside = (np.abs(s[:-1]) <= rho) | (np.abs(s[1:]) <= rho)
        return float(np.max(slopes[inside])) if inside.any() else 0.0

    def magnitude_envelope(self, rho) -> float:
        """Monotone bound Q2(rho) on sup |f| over the ball of radius rho."""
        rho = abs(float(rho))
        p = self.params
        if self.kind == "zero":
            return 0.0
        if self.kind == "linear_shift":
            return abs(float(p["kappa"])) * rho
        if self.kind == "power":
            return abs(float(p["c"])) * rho ** float(p["r"])
        if self.kind == "sine":
            return abs(float(p["c"])) * min(rho, 1.0)
        grid = np.linspace(-rho, rho, 257)
        return float(np.max(np.abs(self.apply(grid))))


@dataclass(frozen=True)
class SemilinearProblem:
    op: object
    alpha: float
    u0: SpectralField
    u1: SpectralField
    nonlinearity: NonlinearitySpec

    def validate(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.u0.N != self.u1.N:
            raise DomainError("u0 and u1 must share the truncation order")
        for f in (self.u0, self.u1):
            if f.op is not self.op and f.op.name != self.op.name:
                raise DomainError("initial data live on a different operator")
        self.nonlinearity.validate()

    @property
    def N(self):
        return self.u0.N


@dataclass(frozen=True)
class PicardConfig:
    R_star: float | None = None        # None: re-centered per window
    tol: float = 1e-10
    max_iter: int = 50
    window_init: float = 1.0
    window_min: float = 1e-6
    blowup_threshold: float = 1e8
    nonlinearity_quadrature: int | None = None

    def validate(self):
        if self.R_star is not None and not self.R_star > 0.0:
            raise ConfigError("R_star must be positive")
        if not self.tol > 0.0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not (self.window_init > 0.0 and self.window_min > 0.0):
            raise ConfigError("window sizes must be positive")
        if not self.window_min < self.window_init:
            raise ConfigError("window_min must be below window_init")
        if not self.blowup_threshold > 0.0:
            raise ConfigError("blowup_threshold must be positive")
        if (self.nonlinearity_quadrature is not None
                and self.nonlinearity_quadrature < 4):
            raise ConfigError("nonlinearity_quadrature must be >= 4")


@dataclass(frozen=True)
class WindowRecord:
    start: float
    end: float
    iterations: int
    contraction_estimate: float


@dataclass(frozen=True)
class RunOutcome:
    """status "completed" carries the requested horizon; status
    "maximal_time_detected" carries the last completed time T_est (an
    observation at the configured threshold, not an analytic blow-up
    time).  windows tile [0, min(T_end, T_est)]."""

    status: str
    T_end: float
    T_est: float | None
    windows: tuple
    trace: SolutionTrace
    strong_check: dict | None = None


def apply_nonlinearity(f: NonlinearitySpec, u: SpectralField,
                       quad_points: int) -> SpectralField:
    """Pseudo-spectral composition: collocate u, apply f pointwise,
    project back to the leading N coefficients.  Non-finite pointwise
    values raise OverflowSignal for the blow-up monitor."""
    f.validate()
    if quad_points < 4 * u.N:
        raise DomainError(
            f"quad_points={quad_points} is below the anti-aliasing floor "
            f"4N={4 * u.N}")
    if f.kind == "zero":
        # quadrature of the zero function is exactly zero
        return SpectralField(u.op, np.zeros(u.N), u.N)

    def composed(x):
        vals = evaluate(u, x)
        with np.errstate(over="ignore", invalid="ignore"):
            out = f.apply(vals)
        if not np.all(np.isfinite(out)):
            raise OverflowSignal("nonlinearity produced non-finite values")
        return out

    return project(u.op, composed, u.N, quad_points)


# ------------------------------------------------------- window machinery

class _Workspace:
    """Per-run caches: Mittag-Leffler rows over the global grid, the
    homogeneous part, product-integration weights per eigenvalue, and the
    collocation quadrature resolution."""

    def __init__(self, p: SemilinearProblem, grid, cfg: PicardConfig):
        self.p = p
        self.t = np.asarray(grid, dtype=float)
        self.dt = float(self.t[1] - self.t[0])
        self.N = p.N
        a = p.alpha
        self.lam = p.op.eigenvalues(p.N)
        self.kt = _KernelTable(a, self.t)
        self.gammaw = self.lam ** (2.0 / a)
        self.quad = (cfg.nonlinearity_quadrature
                     if cfg.nonlinearity_quadrature is not None
                     else max(4 * p.N, 40))
        if self.quad < 4 * p.N:
            raise ConfigError(
                f"nonlinearity_quadrature={self.quad} is below the "
                f"anti-aliasing floor 4N={4 * p.N}")
        M1 = len(self.t)
        ta1 = np.zeros(M1)
        ta1[1:] = self.t[1:] ** (a - 1.0)
        self.hom_u = np.zeros((M1, p.N))
        self.hom_dtu = np.zeros((M1, p.N))
        for n in range(p.N):
            if p.u0.coeffs[n] == 0.0 and p.u1.coeffs[n] == 0.0:
                continue
            e1 = self.kt.row(self.lam[n], 1.0)
            e2 = self.kt.row(self.lam[n], 2.0)
            eaa = self.kt.row(self.lam[n], a)
            self.hom_u[:, n] = (p.u0.coeffs[n] * e1
                                + p.u1.coeffs[n] * self.t * e2)
            self.hom_dtu[:, n] = (-p.u0.coeffs[n] * self.lam[n] * ta1 * eaa
                                  + p.u1.coeffs[n] * e1)
        self.hom_u[0] = p.u0.coeffs
        self.hom_dtu[0] = p.u1.coeffs
        self._weights = {}

    def weights(self, n):
        key = float(self.lam[n])
        got = self._weights.get(key)
        if got is None:
            B, A = _lag_weights(self.kt, key, self.dt)
            Bp, Ap = _lag_weights(self.kt, key, self.dt, deriv=True)
            got = (B, A, Bp, Ap)
            self._weights[key] = got
        return got

    def apply_rows(self, U_rows):
        """f(u) coefficients for a stack of coefficient rows."""
        if self.p.nonlinearity.kind == "zero":
            return np.zeros_like(U_rows)
        out = np.empty_like(U_rows)
        for i in range(U_rows.shape[0]):
            fld = SpectralField(self.p.op, U_rows[i], self.N)
            out[i] = apply_nonlinearity(self.p.nonlinearity, fld,
                                        self.quad).coeffs
        return out

    def combined_norms(self, U, DTU):
        """Per-row ||u||_{V_gamma} + ||dtu||_{L2}."""
        a = np.sqrt((U ** 2 * self.gammaw[None, :]).sum(axis=1))
        b = np.sqrt((DTU ** 2).sum(axis=1))
        return a + b

    def window_solve(self, ia, ib, F_hist, cfg, R_eff):
        """Fixed-point iteration on nodes ia..ib given accepted forcing
        history F_hist (rows 0..ia).  Returns (U, DTU, F, iterations,
        contraction) over the window nodes or raises WindowFailure."""
        W = ib - ia
        N = self.N
        base_u = self.hom_u[ia:ib + 1].copy()
        base_dtu = self.hom_dtu[ia:ib + 1].copy()
        if ia > 0:
            for n in range(N):
                if not F_hist[:ia + 1, n].any():
                    continue
                B, A, Bp, Ap = self.weights(n)
                rev0 = F_hist[:ia, n][::-1]
                rev1 = F_hist[1:ia + 1, n][::-1]
                base_u[:, n] += (np.correlate(B[:ia + W], rev0, "valid")
                                 + np.correlate(A[:ia + W], rev1, "valid"))
                base_dtu[:, n] += (np.correlate(Bp[:ia + W], rev0, "valid")
                                   + np.correlate(Ap[:ia + W], rev1, "valid"))
        U = base_u.copy()
        DTU = base_dtu.copy()
        Fw = np.empty((W + 1, N))
        Fw[0] = F_hist[ia]
        prev_d = None
        for it in range(1, cfg.max_iter + 1):
            try:
                Fw[1:] = self.apply_rows(U[1:])
            except OverflowSignal as sig:
                raise WindowFailure(str(sig)) from sig
            newU = base_u.copy()
            newDTU = base_dtu.copy()
            with np.errstate(over="ignore", invalid="ignore"):
                for n in range(N):
                    f = Fw[:, n]
                    if not f.any():
                        continue
                    B, A, Bp, Ap = self.weights(n)
                    newU[1:, n] += (np.convolve(f[:-1], B[:W])
                                    + np.convolve(f[1:], A[:W]))[:W]
                    newDTU[1:, n] += (np.convolve(f[:-1], Bp[:W])
                                      + np.convolve(f[1:], Ap[:W]))[:W]
            if not (np.all(np.isfinite(newU)) and np.all(np.isfinite(newDTU))):
                raise WindowFailure("iterate overflowed")
            d = float(np.max(self.combined_norms(newU - U, newDTU - DTU)))
            if float(np.max(self.combined_norms(newU, newDTU))) > R_eff:
                raise WindowFailure(
                    f"iterate left the trust ball of radius {R_eff:.3g}")
            contraction = 0.0 if prev_d is None else d / prev_d
            U, DTU = newU, newDTU
            if d < cfg.tol:
                Fw[1:] = self.apply_rows(U[1:])
                return U, DTU, Fw, it, contraction
            prev_d = d
        raise WindowFailure(
            f"no contraction to tol={cfg.tol:g} after {cfg.max_iter} "
            "iterations")


def _node_index(t, value, what):
    i = int(round(value / (t[1] - t[0])))
    if not (0 <= i < len(t)) or abs(t[i] - value) > 1e-9 * max(1.0, t[-1]):
        raise DomainError(f"{what}={value} does not lie on the grid")
    return i


def picard_window(p: SemilinearProblem, window, grid, cfg: PicardConfig,
                  history, history_forcing=None):
    """One fixed-point window solve on window=(t_a, t_b).

    history is a trace covering the nodes up to t_a (its u rows are used
    to rebuild the memory forcing unless history_forcing, rows 0..ia, is
    supplied).  Returns a dict with the window nodes' times, u/dtu/f
    coefficient rows, the iteration count and the final contraction
    ratio.  Raises WindowFailure when the window does not contract."""
    p.validate()
    cfg.validate()
    t = np.asarray(grid, dtype=float)
    ws = _Workspace(p, t, cfg)
    ta, tb = float(window[0]), float(window[1])
    ia = _node_index(t, ta, "window start")
    ib = _node_index(t, tb, "window end")
    if ib <= ia:
        raise DomainError("window must contain at least one step")
    if history_forcing is not None:
        F_hist = np.asarray(history_forcing, dtype=float)
        if F_hist.shape != (ia + 1, p.N):
            raise DomainError("history forcing must cover rows 0..t_a")
    else:
        if ia == 0:
            F_hist = ws.apply_rows(p.u0.coeffs[None, :])
        else:
            hu = np.asarray(history.u_coeffs, dtype=float)
            if hu.shape[0] < ia + 1:
                raise DomainError("history does not reach the window start")
            F_hist = ws.apply_rows(hu[:ia + 1])
    if cfg.R_star is not None:
        R_eff = cfg.R_star
    else:
        start_u = (history.u_coeffs[ia] if ia > 0 else p.u0.coeffs)
        start_dtu = (history.dtu_coeffs[ia] if ia > 0 else p.u1.coeffs)
        c0 = float(ws.combined_norms(np.asarray(start_u)[None, :],
                                     np.asarray(start_dtu)[None, :])[0])
        R_eff = 8.0 * (c0 + 1.0)
    U, DTU, Fw, iters, contraction = ws.window_solve(ia, ib, F_hist, cfg,
                                                     R_eff)
    return {
        "times": t[ia:ib + 1],
        "u_coeffs": U,
        "dtu_coeffs": DTU,
        "forcing_coeffs": Fw,
        "iterations": iters,
        "contraction_estimate": contraction,
    }


def _admit(p: SemilinearProblem):
    """Criticality gate: growth declarations checked against the regime
    before any marching."""
    nl = p.nonlinearity
    if nl.kind == "zero":
        return
    regime = classify(p.op, p.alpha)
    allowance = regime.r_star
    if nl.hypothesis == "Hf2":
        if not regime.subcritical:
            raise ConfigError(
                "a globally Lipschitz nonlinearity class is only admitted "
                f"below the critical order (alpha0={regime.alpha0}); this "
                f"problem has alpha={p.alpha} with q_A={regime.q_A}. "
                "Declare a power growth bound instead.")
        return
    r, _ = nl.hf1
    if isinstance(allowance, Unbounded):
        return
    if r > allowance:
        raise ConfigError(
            f"growth exponent r={r} exceeds the admissible bound "
            f"r*={allowance:.6g} for alpha={p.alpha}, q_A={regime.q_A}")


def _norm_series(U, DTU, DAL, lam, alpha):
    wg = lam ** (2.0 / alpha)
    return {
        "u_Vgamma": np.sqrt((U ** 2 * wg[None, :]).sum(axis=1)),
        "dtu_L2": np.sqrt((DTU ** 2).sum(axis=1)),
        "dalpha_Vminusgamma": np.sqrt((DAL ** 2 / wg[None, :]).sum(axis=1)),
    }


def run(p: SemilinearProblem, T_end: float, cfg: PicardConfig,
        dt: float) -> RunOutcome:
    """March Picard windows over a uniform grid with step dt up to T_end.

    Window sizing starts from the smallness-condition heuristic
    (R / (2 C Q2(R)))^(1/(alpha-1)) capped by window_init, halves on
    failure and grows 1.5x on success.  Maximal-time detection: the
    combined norm ||u||_{V_gamma} + ||dtu||_{L2} crosses
    blowup_threshold, or the window collapses below window_min (or a
    single step).  T_est is the last time on the returned trace."""
    p.validate()
    cfg.validate()
    if not (T_end > 0.0 and math.isfinite(T_end)):
        raise ConfigError("T_end must be positive and finite")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ConfigError("dt must be positive and finite")
    M = round(T_end / dt)
    if M < 1 or abs(M * dt - T_end) > 1e-12 * max(1.0, T_end):
        raise ConfigError("T_end must be an integral number of dt steps")
    _admit(p)
    grid = np.linspace(0.0, T_end, M + 1)
    ws = _Workspace(p, grid, cfg)

    U = np.empty((M + 1, p.N))
    DTU = np.empty((M + 1, p.N))
    F = np.empty((M + 1, p.N))
    U[0] = p.u0.coeffs
    DTU[0] = p.u1.coeffs
    try:
        F[0] = ws.apply_rows(U[0:1])[0]
    except OverflowSignal as sig:
        raise ConfigError(
            f"nonlinearity overflows already on the initial data: {sig}"
        ) from sig

    c_est = max(1.0, ml_bound_probe(p.alpha, p.alpha, 1e3, 64))

    def trust_radius(i):
        if cfg.R_star is not None:
            return cfg.R_star
        c0 = float(ws.combined_norms(U[i:i + 1], DTU[i:i + 1])[0])
        return 8.0 * (c0 + 1.0)

    def heuristic_window(R):
        q2 = p.nonlinearity.magnitude_envelope(R)
        if q2 <= 0.0:
            return cfg.window_init
        w = (R / (2.0 * c_est * q2)) ** (1.0 / (p.alpha - 1.0))
        return min(cfg.window_init, w)

    windows = []
    status = "completed"
    T_est = None
    i = 0
    window_time = heuristic_window(trust_radius(0))
    steps_cap = max(1, round(cfg.window_init / dt))
    steps = max(1, min(M, round(window_time / dt)))
    while i < M:
        steps = min(steps, M - i)
        ib = i + steps
        R_eff = trust_radius(i)
        try:
            Uw, DTUw, Fw, iters, contraction = ws.window_solve(
                i, ib, F[:i + 1], cfg, R_eff)
        except WindowFailure:
            if steps == 1 or (steps // 2) * dt < cfg.window_min:
                status = "maximal_time_detected"
                T_est = grid[i]
                break
            steps //= 2
            continue
        U[i + 1:ib + 1] = Uw[1:]
        DTU[i + 1:ib + 1] = DTUw[1:]
        F[i + 1:ib + 1] = Fw[1:]
        norms = ws.combined_norms(Uw[1:], DTUw[1:])
        breach = np.where(norms > cfg.blowup_threshold)[0]
        if breach.size:
            j = i + 1 + int(breach[0])
            windows.append(WindowRecord(grid[i], grid[j], iters, contraction))
            status = "maximal_time_detected"
            T_est = grid[j]
            i = j
            break
        windows.append(WindowRecord(grid[i], grid[ib], iters, contraction))
        i = ib
        steps = min(steps_cap, max(1, round(steps * 1.5)))

    last = i if status == "maximal_time_detected" else M
    tt = grid[:last + 1]
    Uf, DTUf, Ff = U[:last + 1], DTU[:last + 1], F[:last + 1]
    DAL = -Uf * ws.lam[None, :] + Ff
    trace = SolutionTrace(tt, Uf, DTUf, DAL, None,
                          _norm_series(Uf, DTUf, DAL, ws.lam, p.alpha))
    return RunOutcome(status=status, T_end=T_end, T_est=T_est,
                      windows=tuple(windows), trace=trace)


def strong_solution_check(outcome: RunOutcome, p: SemilinearProblem,
                          q: float, r: float) -> dict:
    """Desk-scale strong-solution verdict.

    Subcritical globally Lipschitz problems are strong with no norm
    computation.  Otherwise the discrete L^{q(r-1)}-in-time norm of the
    spatial sup of u is reported; a finite value supports the verdict."""
    trace = outcome.trace
    if trace is None or len(trace.times) < 2:
        return {"verdict": "not-computed",
                "reason": "no trace to examine"}
    if p.nonlinearity.hypothesis == "Hf2":
        regime = classify(p.op, p.alpha)
        if regime.subcritical:
            return {"verdict": "strong",
                    "reason": "globally Lipschitz class below the critical "
                              "order: weak energy solutions are strong",
                    "norm": None,
                    "exponent": None,
                    "time_horizon": float(trace.times[-1])}
    s = float(q) * (float(r) - 1.0)
    if not s > 0.0:
        raise DomainError(f"q(r-1) must be positive, got {s}")
    xs = _sup_grid(p.op)
    sup_vals = np.empty(len(trace.times))
    for i in range(len(trace.times)):
        fld = SpectralField(p.op, trace.u_coeffs[i], p.N)
        sup_vals[i] = float(np.max(np.abs(evaluate(fld, xs))))
    norm = float(np.trapezoid(sup_vals ** s, trace.times)) ** (1.0 / s)
    verdict = "strong" if math.isfinite(norm) else "inconclusive"
    return {"verdict": verdict,
            "reason": "finite L^{q(r-1)} bound of the spatial sup"
                      if verdict == "strong" else "norm overflowed",
            "norm": norm,
            "exponent": s,
            "time_horizon": float(trace.times[-1])}


def _sup_grid(op):
    """Dense spatial sample for discrete sup norms."""
    if op.dim == 1:
        lo, hi = op.domain_box[0]
        return np.linspace(lo, hi, 513)
    axes = [np.linspace(lo, hi, 65) for lo, hi in op.domain_box]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack(grids, axis=-1)
