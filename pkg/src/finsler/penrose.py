"""Plane-wave limits: Omega-rescaling, Rosen profiles, Brinkmann form.

The rescaling map phi(x) = (x0, w^2 x1, w x2, ..., w x_{n-1}) pulls the
metric back onto a shrinking tube around the ray x1 = ... = 0; dividing
by w^2 gives a family g_w whose w -> 0 limit keeps only the transverse
block h(x0) evaluated on the ray.  The limit metric is a plane wave; in
Brinkmann form its profile matrix A(u) is recovered from the vielbein
M(u) = h^{-1/2}(u) O(u), where the rotation O absorbs the symmetry
condition, and A = -sym(M^T (h M')').  Equivalently E = M^{-1} solves
E'' = A E, which is what the roundtrip check integrates.
"""

import io
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import ChartError, SignatureError, SolverError
from .lagrangian import Lagrangian, QuadraticLagrangian
from .ppwave import lightlike_form_check
from .report import Report, fmt_float
from .tensors import fundamental_tensor

__all__ = [
    "RosenProfile", "BrinkmannProfile", "PenroseLimitResult",
    "rescaled_lagrangian", "homothety_residual", "penrose_limit",
    "rosen_to_brinkmann", "brinkmann_roundtrip", "plane_wave_lagrangian",
]


# -- rescaling ---------------------------------------------------------------

def _jacobian_diag(n, omega):
    j = [1.0, omega * omega] + [omega] * (n - 2)
    return np.array(j)


def rescaled_lagrangian(L, omega, rescale=True):
    """The pulled-back model L_w(x, v) = w^{-2} L(phi(x), Dphi v).

    ``rescale=False`` drops the w^{-2} factor (the plain pullback); both
    carry the same Levi-Civita/Chern connection, which is the homothety
    statement the tests quantify.
    """
    omega = float(omega)
    if not 0.0 < omega <= 1.0:
        raise SolverError("omega must lie in (0, 1], got %g" % omega)
    n = L.dim
    jd = _jacobian_diag(n, omega)
    factor = 1.0 / (omega * omega) if rescale else 1.0

    def func(x, v):
        xm = [x[0]] + [jd[k] * x[k] for k in range(1, n)]
        vm = [jd[k] * v[k] for k in range(n)]
        return factor * L(xm, vm)

    def cone_ref(x):
        xm = [float(x[0])] + [jd[k] * float(x[k]) for k in range(1, n)]
        return L.cone_ref_at(xm) / jd

    name = "%s@omega=%g" % (getattr(L, "name", "model"), omega)
    return Lagrangian(func, n, cone_ref, name=name,
                      params={"omega": omega},
                      quadratic=getattr(L, "quadratic", False))


def homothety_residual(L, N, omega, samples, tol=1e-9):
    """Compare the pullback of g_N with w^2 g_w componentwise.

    The left side contracts g at the mapped point with the rescaling
    Jacobian; the right side asks the rescaled Lagrangian for its own
    fundamental tensor.  The relation is algebraic, so the target
    tolerance is essentially machine precision.
    """
    if isinstance(N, (list, tuple, np.ndarray)):
        nvec0 = np.asarray(N, dtype=float)
    else:
        raise ChartError("homothety check expects the constant chart field "
                         "N = e0")
    n = L.dim
    jd = _jacobian_diag(n, float(omega))
    Lw = rescaled_lagrangian(L, omega)
    rep = Report(title="homothety",
                 meta={"model": getattr(L, "name", "?"),
                       "omega": float(omega),
                       "jacobian": [float(a) for a in jd]})
    rep.add("dx0*dx1 bookkeeping", abs(jd[0] * jd[1] - omega ** 2), 0.0)
    for idx, p in enumerate(samples):
        p = np.asarray(p, dtype=float)
        pm = p * jd
        pm[0] = p[0]
        g = fundamental_tensor(L, pm, nvec0, check=False).matrix
        lhs = np.outer(jd, jd) * g
        gw = fundamental_tensor(Lw, p, nvec0 / jd, check=False).matrix
        rhs = omega ** 2 * gw
        scale = max(1.0, float(np.max(np.abs(lhs))))
        res = float(np.max(np.abs(lhs - rhs))) / scale
        rep.add("sample %d: homothety" % idx, res, tol)
    return rep


# -- profiles ------------------------------------------------------------------

@dataclass
class RosenProfile:
    """Transverse block u -> h(u), positive definite where valid."""

    h: object
    dim: int = 2
    label: str = ""

    def matrix(self, u):
        return np.asarray(self.h(float(u)), dtype=float)

    def posdef_at(self, u):
        w = np.linalg.eigvalsh(self.matrix(u))
        return bool(np.all(w > 0.0))


@dataclass
class BrinkmannProfile:
    """Vielbein M(u) and wave profile A(u) with H(u, x) = x^T A(u) x."""

    rosen: RosenProfile
    A: object
    M: object
    u0: float
    u_interval: tuple
    truncated: bool = False
    reason: str = ""

    def m_conditions(self, us, tol=1e-8):
        """Both displayed vielbein conditions over a parameter grid."""
        worst_orth = 0.0
        worst_sym = 0.0
        for u in us:
            h = self.rosen.matrix(u)
            m = self.M(u)
            md = _fd(self.M, u)
            worst_orth = max(worst_orth, float(np.max(np.abs(
                m.T @ h @ m - np.eye(self.rosen.dim)))))
            s = m.T @ h @ md
            worst_sym = max(worst_sym, float(np.max(np.abs(s - s.T))))
        rep = Report(title="m-conditions",
                     meta={"u0": self.u0,
                           "u_interval": [float(a) for a in self.u_interval]})
        rep.add("M^T h M = identity", worst_orth, tol)
        rep.add("symmetry condition", worst_sym, tol)
        return rep


@dataclass
class PenroseLimitResult:
    """Rosen and Brinkmann descriptions of the limit plus the Omega table."""

    rosen: RosenProfile
    brinkmann: BrinkmannProfile
    homothety_residuals: list = field(default_factory=list)
    offblock: list = field(default_factory=list)

    def write_csv(self, target, us=None):
        if us is None:
            lo, hi = self.brinkmann.u_interval
            us = np.linspace(lo, hi, 101)
        m = self.rosen.dim
        cols = (["u"]
                + ["h%d%d" % (i, j) for i in range(m) for j in range(m)]
                + ["M%d%d" % (i, j) for i in range(m) for j in range(m)]
                + ["A%d%d" % (i, j) for i in range(m) for j in range(m)])
        own = isinstance(target, (str, bytes))
        fp = open(target, "w") if own else target
        try:
            fp.write(",".join(cols) + "\n")
            for u in us:
                row = [fmt_float(u)]
                for mat in (self.rosen.matrix(u), self.brinkmann.M(u),
                            self.brinkmann.A(u)):
                    row.extend(fmt_float(a) for a in np.ravel(mat))
                fp.write(",".join(row) + "\n")
        finally:
            if own:
                fp.close()

    def to_csv(self, us=None):
        buf = io.StringIO()
        self.write_csv(buf, us)
        return buf.getvalue()


# -- numerics helpers -----------------------------------------------------------

def _fd(fn, u, step=None):
    s = step if step is not None else 1e-5 * (1.0 + abs(u))
    d1 = (fn(u + s) - fn(u - s)) / (2.0 * s)
    d2 = (fn(u + 2 * s) - fn(u - 2 * s)) / (4.0 * s)
    return (4.0 * d1 - d2) / 3.0


def _fd2(fn, u, step=None):
    s = step if step is not None else 3e-4 * (1.0 + abs(u))
    f0 = fn(u)
    d1 = (fn(u + s) - 2.0 * f0 + fn(u - s)) / (s * s)
    d2 = (fn(u + 2 * s) - 2.0 * f0 + fn(u - 2 * s)) / (4.0 * s * s)
    return (4.0 * d1 - d2) / 3.0


def _spd_invsqrt(mat, where=""):
    w, q = np.linalg.eigh(mat)
    if np.any(w <= 0.0):
        raise SignatureError("h is not positive definite%s" % where)
    return q @ np.diag(1.0 / np.sqrt(w)) @ q.T


def _integrate_two_sided(rhs, y0, u0, interval, ode_tol, event=None):
    """DOP853 on both sides of u0.

    Returns (eval_fn, reached, hit): ``eval_fn(u)`` is the dense state,
    ``reached`` the endpoints actually attained, and ``hit`` the
    terminal-event locations (None where the event did not fire).
    """
    lo, hi = float(interval[0]), float(interval[1])
    sols = {}
    reached = [lo, hi]
    hit = [None, None]
    for side, target in ((0, lo), (1, hi)):
        if (target - u0) * (1 if side else -1) <= 0.0:
            sols[side] = None
            reached[side] = u0
            continue
        kw = {}
        if event is not None:
            event.terminal = True
            kw["events"] = event
        sol = solve_ivp(rhs, (u0, target), y0, method="DOP853",
                        rtol=ode_tol, atol=ode_tol, dense_output=True, **kw)
        if not sol.success and sol.status != 1:
            raise SolverError("profile integration failed: %s" % sol.message)
        sols[side] = sol.sol
        reached[side] = float(sol.t[-1])
        if sol.status == 1:
            hit[side] = float(sol.t[-1])

    def eval_fn(u):
        u = float(u)
        sol = sols[1] if u >= u0 else sols[0]
        if sol is None:
            raise SolverError("parameter %g outside the integrated range"
                              % u)
        return sol(u)

    return eval_fn, reached, hit


# -- Rosen -> Brinkmann -----------------------------------------------------------

def rosen_to_brinkmann(rosen, u0, u_interval, ode_tol=1e-12):
    """Construct the vielbein M = h^{-1/2} O and the profile A(u).

    O solves the orthogonal-frame equation O' = -skew(h^{1/2} E0') O with
    O(u0) = identity, making M^T h M' symmetric; A then comes from the
    analytic product rule, with finite differences (plus one Richardson
    level) only on h and its inverse square root.  If h loses positivity
    inside the interval, the result is truncated there and flagged.
    """
    if not isinstance(rosen, RosenProfile):
        rosen = RosenProfile(h=rosen)
    m = rosen.dim
    u0 = float(u0)

    def h_at(u):
        return np.asarray(rosen.h(float(u)), dtype=float)

    def e0_at(u):
        return _spd_invsqrt(h_at(u), where=" at u=%g" % u)

    if not rosen.posdef_at(u0):
        raise SignatureError("h is not positive definite at u0")

    def skew_at(u):
        k = e0_at(u) @ h_at(u) @ _fd(e0_at, u)
        return 0.5 * (k - k.T)

    def rhs(u, y):
        return (-skew_at(u) @ y.reshape(m, m)).ravel()

    floor = 1e-8 * max(1.0, float(np.max(np.abs(h_at(u0)))))

    def pos_margin(u):
        return float(np.min(np.linalg.eigvalsh(h_at(u)))) - floor

    def first_wall(target):
        """Scan toward ``target`` for the loss of positivity, if any.

        The O-equation can be trivial (diagonal h), letting the
        integrator stride over a positivity dip, so the wall is located
        up front rather than by an ODE event.  Dips that stay above the
        grid (tangential degeneracies) are hunted with a bounded
        minimizer before deciding.
        """
        if target == u0:
            return None
        us = np.linspace(u0, target, 129)
        margins = [pos_margin(u) for u in us]
        ref = max(margins[0], 1e-3)
        for i in range(1, len(us)):
            if margins[i] <= 0.0:
                if margins[i - 1] > 0.0:
                    a, b = sorted((float(us[i - 1]), float(us[i])))
                    return float(brentq(pos_margin, a, b, xtol=1e-12))
                return float(us[i - 1])
            if (i + 1 < len(us) and margins[i] < 0.25 * ref
                    and margins[i] <= margins[i - 1]
                    and margins[i] <= margins[i + 1]):
                lo, hi = sorted((float(us[i - 1]), float(us[i + 1])))
                res = minimize_scalar(pos_margin, bounds=(lo, hi),
                                      method="bounded",
                                      options={"xatol": 1e-12})
                if res.fun <= 0.0:
                    a, b = sorted((float(us[i - 1]), float(res.x)))
                    return float(brentq(pos_margin, a, b, xtol=1e-12))
        return None

    walls = [first_wall(float(u_interval[0])),
             first_wall(float(u_interval[1]))]
    interval = (walls[0] if walls[0] is not None else float(u_interval[0]),
                walls[1] if walls[1] is not None else float(u_interval[1]))

    def degenerate(u, y):
        return pos_margin(u)

    state, reached, hit = _integrate_two_sided(
        rhs, np.eye(m).ravel(), u0, interval, ode_tol, event=degenerate)

    def osol(u):
        return state(u).reshape(m, m)

    hit = [walls[0] if walls[0] is not None else hit[0],
           walls[1] if walls[1] is not None else hit[1]]
    truncated = any(h is not None for h in hit)
    reason = ""
    if truncated:
        where = ", ".join("u=%.12g" % h for h in hit if h is not None)
        reason = "h lost positivity at %s (focal point)" % where

    def m_at(u):
        return e0_at(u) @ osol(u)

    def a_at(u):
        u = float(u)
        h = h_at(u)
        hd = _fd(h_at, u)
        e0 = e0_at(u)
        ed = _fd(e0_at, u)
        edd = _fd2(e0_at, u)
        o = osol(u)
        k = e0 @ h @ ed
        s = 0.5 * (k - k.T)
        od = -s @ o
        kd = ed @ h @ ed + e0 @ hd @ ed + e0 @ h @ edd
        sd = 0.5 * (kd - kd.T)
        odd = -sd @ o - s @ od
        mm = e0 @ o
        md = ed @ o + e0 @ od
        mdd = edd @ o + 2.0 * (ed @ od) + e0 @ odd
        a = -(mm.T @ (hd @ md + h @ mdd))
        return 0.5 * (a + a.T)

    return BrinkmannProfile(rosen=rosen, A=a_at, M=m_at, u0=u0,
                            u_interval=(reached[0], reached[1]),
                            truncated=truncated, reason=reason)


def brinkmann_roundtrip(A, u_interval, u0=None, n_check=21, tol=1e-6,
                        ode_tol=1e-12):
    """Integrate E'' = A E, rebuild h = E^T E, convert back, compare.

    The recovered profile must match the input wherever the vielbein E
    stays invertible; a degenerating E (focal point) truncates the
    comparison interval instead of failing.
    """
    lo, hi = float(u_interval[0]), float(u_interval[1])
    if u0 is None:
        u0 = 0.5 * (lo + hi)
    m = np.asarray(A(u0), dtype=float).shape[0]

    def rhs(u, y):
        e = y[:m * m].reshape(m, m)
        ed = y[m * m:].reshape(m, m)
        return np.concatenate([ed.ravel(),
                               (np.asarray(A(u), float) @ e).ravel()])

    def degenerate(u, y):
        e = y[:m * m].reshape(m, m)
        return abs(float(np.linalg.det(e))) - 1e-8

    y0 = np.concatenate([np.eye(m).ravel(), np.zeros(m * m)])
    state, reached, hit = _integrate_two_sided(
        rhs, y0, u0, (lo, hi), ode_tol, event=degenerate)

    def h_at(u):
        e = state(u)[:m * m].reshape(m, m)
        return e.T @ e

    profile = rosen_to_brinkmann(RosenProfile(h=h_at, dim=m), u0,
                                 (reached[0], reached[1]), ode_tol=ode_tol)
    glo, ghi = profile.u_interval
    # back well off a truncated edge: the FD recovery of A is
    # ill-conditioned right next to a focal point
    width = ghi - glo
    cut = [hit[0] is not None or glo > reached[0] + 1e-12,
           hit[1] is not None or ghi < reached[1] - 1e-12]
    pads = [(0.05 if cut[k] else 1e-3) * width for k in (0, 1)]
    grid = np.linspace(glo + pads[0], ghi - pads[1], n_check)
    worst = 0.0
    for u in grid:
        worst = max(worst, float(np.max(np.abs(
            profile.A(u) - np.asarray(A(u), dtype=float)))))
    rep = Report(title="brinkmann-roundtrip",
                 meta={"u0": float(u0),
                       "interval": [float(glo), float(ghi)],
                       "truncated": bool(profile.truncated
                                         or any(h is not None for h in hit))})
    rep.add("A recovered", worst, tol)
    return rep


# -- the limit ---------------------------------------------------------------------

def penrose_limit(L, N, u_interval, sample_grid=None, omegas=(0.5, 0.1),
                  tol=1e-9):
    """Plane-wave limit along the ray x1 = ... = x_{n-1} = 0.

    The limit is evaluated analytically: transverse coordinates are set
    to zero and the Omega-weighted entries drop, leaving the transverse
    block h(x0).  The Omega table in the result quantifies the homothety
    relation at the requested values; the Rosen profile is converted to
    Brinkmann form on the same interval.
    """
    lo, hi = float(u_interval[0]), float(u_interval[1])
    if sample_grid is None:
        sample_grid = np.linspace(lo, hi, 41)
    n = L.dim
    nvec = np.asarray(N, dtype=float) if isinstance(
        N, (list, tuple, np.ndarray)) else np.asarray(N([0.0] * n), float)

    def ray_point(u):
        p = np.zeros(n)
        p[0] = float(u)
        return p

    for u in (lo, 0.5 * (lo + hi), hi):
        chart = lightlike_form_check(L, nvec, ray_point(u))
        if not chart.shape_ok:
            raise ChartError("chart template fails on the base ray at "
                             "x0=%g" % u)

    def h_at(u):
        g = fundamental_tensor(L, ray_point(u), nvec, check=False).matrix
        return -g[2:, 2:]

    rosen = RosenProfile(h=h_at, dim=n - 2, label=getattr(L, "name", ""))
    for u in sample_grid:
        if not rosen.posdef_at(u):
            raise SignatureError("limit metric degenerates on the base ray "
                                 "at x0=%g (focal point)" % u)

    resids = []
    offblock = []
    subgrid = np.linspace(lo, hi, 5)
    samples = [np.concatenate([[u], 0.25 * np.ones(n - 1)])
               for u in subgrid]
    for w in omegas:
        rep = homothety_residual(L, nvec, w, samples, tol=tol)
        resids.append({"omega": float(w),
                       "max_residual": rep.max_residual("sample"),
                       "pass": rep.passed})
        Lw = rescaled_lagrangian(L, w)
        worst_row = 0.0
        worst_g11 = 0.0
        for u in subgrid:
            gw = fundamental_tensor(Lw, ray_point(u), nvec,
                                    check=False).matrix
            worst_row = max(worst_row, float(np.max(np.abs(gw[1, 2:]))))
            worst_g11 = max(worst_g11, abs(float(gw[1, 1])))
        offblock.append({"omega": float(w), "g1a": worst_row,
                         "g11": worst_g11})

    u0 = 0.0 if lo <= 0.0 <= hi else 0.5 * (lo + hi)
    brink = rosen_to_brinkmann(rosen, u0, (lo, hi))
    return PenroseLimitResult(rosen=rosen, brinkmann=brink,
                              homothety_residuals=resids, offblock=offblock)


def plane_wave_lagrangian(A, u_interval, deg=24, name="plane-wave-limit"):
    """Quadratic model of a plane wave from its profile matrix A(u).

    In this signature the du^2 slot carries -x^T A x (the vielbein
    satisfies E'' = A E while transverse geodesics obey x'' = -A x).
    A is sampled onto a Chebyshev interpolant so the model stays
    jet-evaluable even when A(u) comes from an ODE solution.
    """
    lo, hi = float(u_interval[0]), float(u_interval[1])
    nodes = chebyshev.chebpts1(33)
    us = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
    vals = np.array([np.asarray(A(u), dtype=float) for u in us])
    m = vals.shape[1]
    scaled = (2.0 * (us - 0.5 * (lo + hi)) / (hi - lo))
    coeffs = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            coeffs[i, j] = chebyshev.chebfit(scaled, vals[:, i, j], deg)

    def entry(x):
        t = 2.0 * (x[1] - 0.5 * (lo + hi)) / (hi - lo)
        s = 0.0
        for i in range(m):
            for j in range(m):
                aij = chebyshev.chebval(t, coeffs[i, j])
                s = s - aij * x[2 + i] * x[2 + j]
        return s

    entries = {(0, 1): 1.0, (1, 1): entry}
    for a in range(m):
        entries[(2 + a, 2 + a)] = -1.0

    def cone_ref(x):
        hval = abs(float(entry([float(t) for t in x])))
        ref = np.zeros(m + 2)
        ref[0] = 1.0 + hval
        ref[1] = 1.0
        return ref

    return QuadraticLagrangian(entries, m + 2, cone_ref, name=name,
                               params={"interval": [lo, hi]})
