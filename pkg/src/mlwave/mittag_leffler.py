"""Two-parameter Mittag-Leffler evaluation on the real axis.

E_{a,b}(x) = sum_n x^n / Gamma(a n + b) is the kernel of every propagator
in this package.  The evaluator targets near machine precision (default
rel_tol 1e-12) for a in (0, 2], real b, and real x, with the solvers only
ever asking for x <= 0.

Regime map on the negative axis (y = -x, kappa = y^(1/a)):

  kappa <= series_cutoff   power series, log-space terms, Kahan summation
  large y or kappa         asymptotic series + exponential terms, accepted
                           only when a smallest-term error bound certifies
                           the requested tolerance
  a exactly 1 or 2         closed forms (exp / cos families) where they
                           exist, else a double-double Pochhammer series
  otherwise                real branch-cut integral (weighted rational
                           density against e^-r) via adaptive quadrature

The cancellation amplitude of the alternating series is e^kappa, hence the
series cutoff lives in kappa space; an |x|-space cutoff fails for a < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.special import gammaln, gammasgn, rgamma

from .errors import AccuracyError, DomainError, NumericOverflowError

__all__ = [
    "MLQuery",
    "MLPrecision",
    "DEFAULT_PRECISION",
    "ml_e",
    "ml_bound_probe",
    "ml_identity_residuals",
    "kernel_moment",
    "deriv_kernel_moment",
]


@dataclass(frozen=True)
class MLQuery:
    """One evaluation point (alpha, beta, x) of E_{alpha,beta}."""

    alpha: float
    beta: float
    x: float

    def validate(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)
                and math.isfinite(self.x)):
            raise DomainError("MLQuery fields must be finite")
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")


@dataclass(frozen=True)
class MLPrecision:
    """Evaluation policy.

    series_cutoff bounds kappa = |x|^(1/alpha) for the pure power series;
    asym_cutoff is the |x| threshold past which the asymptotic expansion is
    attempted first.  Both are tunable defaults, accuracy is certified
    internally rather than assumed from the thresholds.
    """

    rel_tol: float = 1e-12
    series_cutoff: float = 5.0
    asym_cutoff: float = 50.0
    max_terms: int = 20000

    def validate(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise DomainError("rel_tol must lie in (0, 1)")
        if not self.series_cutoff < self.asym_cutoff:
            raise DomainError("series_cutoff must be below asym_cutoff")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")


DEFAULT_PRECISION = MLPrecision()


# ----------------------------------------------------------- power series

def _taylor(alpha, beta, x, rel_tol, max_terms):
    """Kahan-compensated power series; every term through exp/log so large
    Gamma arguments neither overflow nor underflow.  Poles of Gamma are
    detected through gammasgn and skipped."""
    if x == 0.0:
        return float(rgamma(beta))
    ax = abs(x)
    lax = math.log(ax)
    kappa = ax ** (1.0 / alpha)
    if x > 0.0 and kappa > 708.0:
        raise NumericOverflowError(
            f"E_{{{alpha},{beta}}}({x}) exceeds the double range")
    nmax = min(int((kappa + 10.0 * math.sqrt(kappa) + 30.0) / alpha) + 24,
               max_terms)
    s = 0.0
    c = 0.0
    small_run = 0
    converged = False
    last = math.inf
    for n in range(nmax):
        g = alpha * n + beta
        sg = float(gammasgn(g))
        # gammasgn is nan at exact non-positive integers (Gamma poles)
        if sg != 1.0 and sg != -1.0:
            continue
        term = sg * math.exp(n * lax - float(gammaln(g)))
        if x < 0.0 and (n % 2 == 1):
            term = -term
        yk = term - c
        t = s + yk
        c = (t - s) - yk
        s = t
        last = abs(term)
        if last <= rel_tol * 1e-3 * max(abs(s), 1e-300) and g > kappa + 10.0:
            small_run += 1
            if small_run >= 4:
                converged = True
                break
        else:
            small_run = 0
    if not converged and last > rel_tol * max(abs(s), 1e-300):
        raise AccuracyError(
            f"power series for E_{{{alpha},{beta}}}({x}) did not converge "
            f"within {nmax} terms")
    return s


# ------------------------------------------------- asymptotic + residues

def _exp_terms(alpha, beta, y):
    """Exponential (residue) contributions to E_{a,b}(-y), y > 0.

    a in (1,2]: conjugate pair on the principal sheet.  a == 1: the pair
    degenerates onto the negative axis, Stokes half-weight.  a < 1: none.
    """
    if alpha < 1.0:
        return 0.0
    r = y ** (1.0 / alpha)
    if alpha == 1.0:
        return r ** (1.0 - beta) * math.exp(-y) * math.cos(math.pi * (1.0 - beta))
    th = math.pi / alpha
    amp = (2.0 / alpha) * r ** (1.0 - beta) * math.exp(r * math.cos(th))
    return amp * math.cos(r * math.sin(th) + (1.0 - beta) * th)


def _asym(alpha, beta, y, rel_tol, kmax, pole_tol=0.25):
    """Algebraic asymptotic series plus exponential terms, with a certified
    error bound.  Returns (value, ok).

    Terms whose Gamma argument lands within pole_tol of a non-positive
    integer are added to the sum but excluded from the convergence
    bookkeeping: they are spuriously tiny (reciprocal Gamma has a zero
    there) and would otherwise fake an early smallest-term break.  For
    integer alpha the pole distance is constant in k and exact, so callers
    there pass a dust-level pole_tol instead of the drift guard.
    """
    s = 0.0
    c = 0.0
    prev = math.inf
    err = math.inf
    ly = math.log(y)
    for k in range(1, kmax):
        z = beta - alpha * k
        sg = float(gammasgn(z))
        if sg != 1.0 and sg != -1.0:
            continue        # exact pole, the term vanishes
        # log space: y^-k underflows and 1/Gamma overflows long before
        # their product leaves the double range
        term = sg * math.exp(-k * ly - float(gammaln(z)))
        if k % 2 == 0:
            term = -term
        near_pole = z <= 0.5 and abs(z - round(z)) <= pole_tol
        m = abs(term)
        if not near_pole:
            if m >= prev:
                err = m     # first omitted regular term bounds the remainder
                break
            if m <= 1e-19 * max(abs(s), 1e-300):
                err = m
                yk = term - c
                t = s + yk
                c = (t - s) - yk
                s = t
                break
            prev = m
        yk = term - c
        t = s + yk
        c = (t - s) - yk
        s = t
    total = s + _exp_terms(alpha, beta, y)
    scale = max(abs(total), 1e-300)
    return total, (err <= 0.25 * rel_tol * scale)


# -------------------------------------------------- branch-cut quadrature

def _cut_core(alpha, beta, y):
    """Branch-cut integral for E_{a,b}(-y), non-integer a in (0,2) and
    b in (a-1.5, a+0.5].  Log substitution r = e^v keeps the domain compact;
    the denominator is bounded below by y^2 sin^2(pi a) > 0."""
    a = alpha
    sb = math.sin(math.pi * beta)
    sba = math.sin(math.pi * (beta - a))
    ca = math.cos(math.pi * a)
    w = a - beta + 1.0             # in [0.5, 2.5)

    def g(v):
        r = math.exp(v)
        ra = r ** a
        den = ra * ra + 2.0 * y * ra * ca + y * y
        return math.exp(-r + v * w) * (ra * sb + y * sba) / den

    vmin = -46.0 / w               # e^(v w) below 1e-20 of anything
    vmax = 5.3                     # r = 200, e^-200 dwarfed
    vstar = math.log(y) / a        # resonance location
    pts = sorted({p for p in (vstar - 1.0, vstar - 0.3, vstar,
                              vstar + 0.3, vstar + 1.0, 0.0)
                  if vmin < p < vmax})
    iv, est = quad(g, vmin, vmax, points=pts, limit=300,
                   epsabs=1e-300, epsrel=5e-14)
    if est > 1e-8 * max(abs(iv), 1e-250):
        raise AccuracyError(
            f"branch-cut quadrature stalled for E_{{{alpha},{beta}}}({-y})")
    return iv / math.pi + _exp_terms(a, beta, y)


def _cut(alpha, beta, y):
    # reduce beta into (alpha - 1.5, alpha + 0.5] so the integrand is tame
    b = beta
    down = 0
    while b > alpha + 0.5:
        b -= alpha
        down += 1
    up = 0
    while b <= alpha - 1.5:
        b += alpha
        up += 1
    val = _cut_core(alpha, b, y)
    x = -y
    for _ in range(down):          # E_{a,b+a} = (E_{a,b} - 1/Gamma(b)) / x
        val = (val - float(rgamma(b))) / x
        b += alpha
    for _ in range(up):            # E_{a,b-a} = 1/Gamma(b-a) + x E_{a,b}
        b -= alpha
        val = float(rgamma(b)) + x * val
    return val


# -------------------------------------------- double-double integer alpha

def _two_sum(x, y):
    s = x + y
    bb = s - x
    e = (x - (s - bb)) + (y - bb)
    return s, e


def _split(x):
    c = 134217729.0 * x            # 2^27 + 1
    hi = c - (c - x)
    return hi, x - hi


def _two_prod(x, y):
    p = x * y
    xh, xl = _split(x)
    yh, yl = _split(y)
    e = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, e


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e += al + bl
    return _two_sum(s, e)


def _dd_mul_d(ah, al, b):
    p, e = _two_prod(ah, b)
    e += al * b
    return _two_sum(p, e)


def _dd_div_d(ah, al, b):
    q1 = ah / b
    p, e = _two_prod(q1, b)
    r = ((ah - p) - e + al) / b
    return _two_sum(q1, r)


def _dd_series(step, beta, x, nmax=2600):
    """E_{step,beta}(x) = (1/Gamma(beta)) sum_n x^n / poch(beta, step n) for
    step in {1, 2}, term recurrence carried in double-double arithmetic.
    Needs beta > 0 (the recurrence divides by beta + j).

    The divisor beta + j must be exact: once j outgrows beta's low mantissa
    bits a plain running `d += 1` sheds them, and that coherent ulp drift
    costs ~13 digits after e^kappa cancellation.  So the divisor is formed
    as a two_sum pair each time and the low part folded in to first order
    (second order is < 1e-32, below the double-double floor)."""
    th, tl = 1.0, 0.0
    sh, sl = 1.0, 0.0
    j = 0.0
    kappa = abs(x) ** (1.0 / step)
    for _ in range(nmax):
        th, tl = _dd_mul_d(th, tl, x)
        for _ in range(step):
            dh, dl = _two_sum(j, beta)
            th, tl = _dd_div_d(th, tl, dh)
            if dl != 0.0:
                ch, cl = _dd_mul_d(th, tl, dl / dh)
                th, tl = _dd_add(th, tl, -ch, -cl)
            j += 1.0
        sh, sl = _dd_add(sh, sl, th, tl)
        if abs(th) < 1e-35 * max(abs(sh), 1e-300) and j + beta > kappa + 10.0:
            break
    return (sh + sl) * float(rgamma(beta))


def _integer_alpha_neg(m, beta, x, rel_tol, max_terms):
    """E_{m,beta}(x) for m in {1, 2} and x < 0 outside the Taylor band."""
    y = -x
    # closed forms first; integer beta <= 1 reduces exactly because the
    # leading terms sit on Gamma poles: E_{1,k}(x) = x^(1-k) e^x and
    # E_{2,k}(x) = x^ceil((1-k)/2) E_{2,1 or 2}(x)
    if m == 1 and beta == round(beta) and beta <= 4.0:
        k = int(round(beta))
        if k <= 1:
            return x ** (1 - k) * math.exp(x)
        if k == 2:
            return -math.expm1(x) / y
        if k == 3:
            return (math.exp(x) - 1.0 - x) / (x * x)
        return (math.exp(x) - 1.0 - x - 0.5 * x * x) / (x ** 3)
    if m == 2 and beta == round(beta) and beta <= 3.0:
        k = int(round(beta))
        rt = math.sqrt(y)
        if k == 3:
            return (1.0 - math.cos(rt)) / y
        shift = (2 - k) // 2 if k % 2 == 0 else (1 - k) // 2
        base = math.cos(rt) if k % 2 == 1 else math.sin(rt) / rt
        return x ** shift * base
    limit = 36.0 if m == 1 else 1300.0
    if y > limit:
        v, ok = _asym(m, beta, y, rel_tol, max_terms, pole_tol=1e-8)
        if not ok:
            raise AccuracyError(
                f"asymptotic series for E_{{{m},{beta}}}({x}) not certified")
        return v
    # lift beta above the Pochhammer pole zone, undo afterwards
    lifts = 0
    b = beta
    while b <= 0.25:
        b += m
        lifts += 1
    val = _dd_series(m, b, x)
    for _ in range(lifts):
        b -= m
        val = float(rgamma(b)) + x * val
    return val


# ------------------------------------------------------------- dispatcher

def _ml_raw(alpha, beta, x, prec):
    rel_tol = prec.rel_tol
    if x == 0.0:
        return float(rgamma(beta))
    if x > 0.0:
        return _taylor(alpha, beta, x, rel_tol, prec.max_terms)
    y = -x
    kappa = y ** (1.0 / alpha)
    if kappa <= prec.series_cutoff:
        return _taylor(alpha, beta, x, rel_tol, prec.max_terms)
    if alpha == 1.0 or alpha == 2.0:
        return _integer_alpha_neg(int(alpha), beta, x, rel_tol, prec.max_terms)
    if y >= prec.asym_cutoff or kappa >= 30.0:
        v, ok = _asym(alpha, beta, y, rel_tol, min(prec.max_terms, 400))
        if ok:
            return v
    return _cut(alpha, beta, y)


def ml_e(q: MLQuery, p: MLPrecision = DEFAULT_PRECISION) -> float:
    """Evaluate E_{alpha,beta}(x).

    Deterministic (fixed summation orders everywhere); relative accuracy
    p.rel_tol against extended-precision references on x in [-1e6, 10].
    Raises DomainError on invalid parameters and NumericOverflowError when
    the value exceeds the double range (large positive x).
    """
    q.validate()
    p.validate()
    val = _ml_raw(q.alpha, q.beta, q.x, p)
    if not math.isfinite(val):
        raise NumericOverflowError(
            f"E_{{{q.alpha},{q.beta}}}({q.x}) is not finite in double precision")
    return val


def _ml(alpha, beta, x, prec=DEFAULT_PRECISION):
    """Internal fast path used by the solvers (inputs already validated)."""
    return _ml_raw(alpha, beta, x, prec)


# ------------------------------------------------------- derived contracts

def ml_bound_probe(alpha: float, beta: float, x_max: float, n_grid: int) -> float:
    """Empirical sup of (1 + x) |E_{a,b}(-x)| over a logarithmic grid on
    [0, x_max]; a lower estimate of the uniform decay constant."""
    if not 0.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (0, 2)")
    if x_max <= 0.0:
        raise DomainError("x_max must be positive")
    if n_grid < 2:
        raise DomainError("n_grid must be >= 2")
    sup = abs(float(rgamma(beta)))           # x = 0 endpoint
    lo = math.log10(x_max) - 8.0
    hi = math.log10(x_max)
    for i in range(n_grid - 1):
        xg = 10.0 ** (lo + (hi - lo) * i / (n_grid - 2)) if n_grid > 2 else x_max
        v = (1.0 + xg) * abs(_ml_raw(alpha, beta, -xg, DEFAULT_PRECISION))
        if v > sup:
            sup = v
    return sup


def ml_identity_residuals(alpha: float, lam: float, t: float, h: float):
    """Absolute residuals of the three derivative identities linking the
    homogeneous propagators, left sides by central difference of step h:

      d/dt E_{a,1}(-lam t^a)            = -lam t^(a-1) E_{a,a}(-lam t^a)
      d/dt [t E_{a,2}(-lam t^a)]        = E_{a,1}(-lam t^a)
      d/dt [t^(a-1) E_{a,a}(-lam t^a)]  = t^(a-2) E_{a,a-1}(-lam t^a)
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (1, 2)")
    if lam <= 0.0 or t <= 0.0 or h <= 0.0:
        raise DomainError("lam, t, h must be positive")
    if h > t / 4.0:
        raise DomainError("central-difference step too large relative to t")

    a = alpha
    p = DEFAULT_PRECISION

    def e(beta, s):
        return _ml_raw(a, beta, -lam * s ** a, p)

    tm, tp = t - h, t + h
    cd1 = (e(1.0, tp) - e(1.0, tm)) / (2.0 * h)
    r1 = abs(cd1 - (-lam * t ** (a - 1.0) * e(a, t)))
    cd2 = (tp * e(2.0, tp) - tm * e(2.0, tm)) / (2.0 * h)
    r2 = abs(cd2 - e(1.0, t))
    cd3 = (tp ** (a - 1.0) * e(a, tp) - tm ** (a - 1.0) * e(a, tm)) / (2.0 * h)
    r3 = abs(cd3 - t ** (a - 2.0) * e(a - 1.0, t))
    return r1, r2, r3


def kernel_moment(alpha: float, lam: float, h: float, k: int,
                  p: MLPrecision = DEFAULT_PRECISION) -> float:
    """Moments M_k = int_0^h s^k s^(a-1) E_{a,a}(-lam s^a) ds of the forcing
    kernel, k in {0, 1}.

    M_0 = h^a E_{a,a+1}(-lam h^a).  M_1 sums the series
    sum_n (-lam)^n h^(a n + a + 1) / ((a n + a + 1) Gamma(a n + a)); the
    reciprocal-Gamma difference identity collapses it to
    h^(a+1) [E_{a,a+1} - E_{a,a+2}](-lam h^a), term by term, which is what
    is evaluated (the raw double series cancels catastrophically for large
    lam h^a while the collapsed form inherits certified accuracy).
    """
    if not 1.0 < alpha <= 2.0:
        raise DomainError("alpha must lie in (1, 2]")
    if lam < 0.0:
        raise DomainError("lam must be nonnegative")
    if h <= 0.0:
        raise DomainError("h must be positive")
    if k not in (0, 1):
        raise DomainError("k must be 0 or 1")
    z = -lam * h ** alpha
    if k == 0:
        return h ** alpha * _ml_raw(alpha, alpha + 1.0, z, p)
    return h ** (alpha + 1.0) * (_ml_raw(alpha, alpha + 1.0, z, p)
                                 - _ml_raw(alpha, alpha + 2.0, z, p))


def deriv_kernel_moment(alpha: float, lam: float, h: float, k: int,
                        p: MLPrecision = DEFAULT_PRECISION) -> float:
    """Moments of the differentiated kernel s^(a-2) E_{a,a-1}(-lam s^a),
    k in {0, 1}; the kernel is integrable for a > 1.

    M'_0 = h^(a-1) E_{a,a}(-lam h^a) and
    M'_1 = h^a [E_{a,a} - E_{a,a+1}](-lam h^a), both exact identities of the
    defining series (same collapsing mechanism as kernel_moment).
    """
    if not 1.0 < alpha <= 2.0:
        raise DomainError("alpha must lie in (1, 2]")
    if lam < 0.0:
        raise DomainError("lam must be nonnegative")
    if h <= 0.0:
        raise DomainError("h must be positive")
    if k not in (0, 1):
        raise DomainError("k must be 0 or 1")
    z = -lam * h ** alpha
    if k == 0:
        return h ** (alpha - 1.0) * _ml_raw(alpha, alpha, z, p)
    return h ** alpha * (_ml_raw(alpha, alpha, z, p)
                         - _ml_raw(alpha, alpha + 1.0, z, p))
