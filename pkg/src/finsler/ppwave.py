"""Lightlike-chart certification and the transverse focal invariant.

A chart adapted to a lightlike N = e0 has, at reference N,

    g_N = [[0, 1, 0,   0  ],
           [1, *, *,   *  ],
           [0, *, -h       ],
           [0, *,      -h  ]]

with h positive definite.  This module checks that template entrywise
(`lightlike_form_check`), tests x0-independence of g_N against a direct
nabla-N computation (`parallel_criterion`), scans Delta = sqrt(det h)
along a ray for focal points (`delta_scan`), and carries the closed-form
Brinkmann symbol table used as a cross-module oracle
(`brinkmann_oracle`).
"""

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import jets
from .connection import VectorField, _field_jet, christoffel
from .errors import ConfigError
from .lagrangian import PROFILES
from .report import Report, dump_json, fmt_float
from .tensors import fundamental_tensor

__all__ = [
    "LightlikeChartReport", "DeltaCurve", "lightlike_form_check",
    "parallel_criterion", "delta_scan", "brinkmann_oracle",
]

DEGENERATE_KIND = "degenerate focal point, multiplicity >= 2"


def _as_field(N):
    if isinstance(N, (list, tuple, np.ndarray)):
        return VectorField.constant(N)
    return N


def _leading_minors(h):
    return [float(np.linalg.det(h[:k, :k])) for k in range(1, h.shape[0] + 1)]


# -- chart template --------------------------------------------------------

@dataclass
class LightlikeChartReport:
    """Entrywise verdict of g_N(x) against the lightlike-chart template."""

    x: np.ndarray
    g: np.ndarray
    shape_ok: bool
    h_block: np.ndarray
    h_posdef: bool
    residuals: dict
    minors: list
    tol: float

    @property
    def passed(self):
        return bool(self.shape_ok and self.h_posdef)

    def to_dict(self):
        return {
            "report": "lightlike-chart",
            "pass": self.passed,
            "shape_ok": bool(self.shape_ok),
            "h_posdef": bool(self.h_posdef),
            "x": [float(t) for t in self.x],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "minors": [float(m) for m in self.minors],
            "h_block": [[float(a) for a in row] for row in self.h_block],
            "tol": float(self.tol),
        }

    def to_json(self):
        return dump_json(self.to_dict()) + "\n"


def lightlike_form_check(L, N, x, tol=1e-9):
    """Compare g_N(x) with the adapted-chart template at N = e0.

    Only the first row is constrained (g_00 = 0, g_01 = 1, g_0i = 0);
    the g_1i row may be anything.  h is minus the transverse block and
    its positive definiteness is decided by leading principal minors.
    Report-style: a failing template is a result, not an error.
    """
    N = _as_field(N)
    x = np.asarray(x, dtype=float)
    n = L.dim
    nvec = np.asarray(N(x), dtype=float)
    g = fundamental_tensor(L, x, nvec, check=False).matrix
    scale = max(1.0, float(np.max(np.abs(g))))

    e0 = np.zeros(n)
    e0[0] = 1.0
    residuals = {"N-e0": float(np.max(np.abs(nvec - e0)))}
    residuals["g00"] = abs(float(g[0, 0]))
    residuals["g01"] = abs(float(g[0, 1]) - 1.0)
    for a in range(2, n):
        residuals["g0%d" % a] = abs(float(g[0, a]))
    shape_ok = max(residuals.values()) <= tol * scale

    h = -g[2:, 2:]
    minors = _leading_minors(h)
    h_posdef = all(m > 0.0 for m in minors)
    return LightlikeChartReport(x=x, g=g, shape_ok=bool(shape_ok),
                                h_block=h, h_posdef=bool(h_posdef),
                                residuals=residuals, minors=minors, tol=tol)


# -- parallelism criterion --------------------------------------------------

def parallel_criterion(L, N, region_samples, tol=1e-8):
    """x0-independence of g_N at the samples, cross-checked against nabla N.

    The jet route differentiates the field g_N(x) = g(x, N(x)) along x0;
    the direct route asks the connection for nabla N.  Both must vanish
    for a parallel N, and they fail independently, which is the point of
    reporting them as separate checks.
    """
    N = _as_field(N)
    rep = Report(title="parallel-criterion",
                 meta={"model": getattr(L, "name", "?"), "samples": []})
    for idx, p in enumerate(region_samples):
        p = np.asarray(p, dtype=float)
        nvec = np.asarray(N(p), dtype=float)
        J = N.jacobian(p)
        g, _, D = _field_jet(L, [float(t) for t in p],
                             [float(t) for t in nvec], J)
        gscale = max(1.0, float(np.max(np.abs(g))))
        d0 = float(np.max(np.abs(D[0])))

        table = christoffel(L, N, p)
        nab = table.jacobian + np.einsum("mil,l->im", table.gamma, table.v)
        par = float(np.max(np.abs(nab)))

        rep.add("sample %d: d0 g_N" % idx, d0, tol * gscale)
        rep.add("sample %d: nabla N" % idx, par, tol * gscale)
        rep.meta["samples"].append({
            "x": [float(t) for t in p],
            "d0_gN": d0,
            "nabla_N": par,
        })
    return rep


# -- focal scan --------------------------------------------------------------

@dataclass
class DeltaCurve:
    """Delta = sqrt(det h) along a ray, with located zeros.

    ``delta`` carries NaN where h has lost positivity (det h < 0); those
    parameter stretches are listed in ``flagged``.  ``delta4`` is the
    full-determinant variant sqrt(-det g_N), equal to ``delta`` wherever
    the chart template holds.
    """

    params: np.ndarray
    delta: np.ndarray
    det_h: np.ndarray
    delta4: np.ndarray
    roots: list = field(default_factory=list)
    kinds: list = field(default_factory=list)
    flagged: list = field(default_factory=list)

    def write_csv(self, target):
        own = isinstance(target, (str, bytes))
        fp = open(target, "w") if own else target
        try:
            fp.write("t,delta,det_h\n")
            for i in range(len(self.params)):
                fp.write(",".join([fmt_float(self.params[i]),
                                   fmt_float(self.delta[i]),
                                   fmt_float(self.det_h[i])]) + "\n")
        finally:
            if own:
                fp.close()

    def to_csv(self):
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def to_dict(self):
        return {
            "report": "delta-scan",
            "n_samples": int(len(self.params)),
            "roots": [float(r) for r in self.roots],
            "kinds": list(self.kinds),
            "flagged": [[float(a), float(b)] for a, b in self.flagged],
        }

    def to_json(self):
        return dump_json(self.to_dict()) + "\n"


def _fd_slope(f, t, d):
    return (f(t + d) - f(t - d)) / (2.0 * d)


def _refine_tangent(f, lo, hi, xtol):
    """Locate an interior minimum of f by slope-sign bisection.

    A Chebyshev sweep first shrinks the bracket (even-order zeros leave
    no sign change for a bracketing root finder to see), then the sign
    of a central-difference slope drives plain bisection.
    """
    nodes = np.cos(np.pi * np.arange(33) / 32.0)[::-1]
    ts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
    vals = np.array([f(t) for t in ts])
    k = int(np.argmin(vals))
    if k == 0 or k == len(ts) - 1:
        return None
    a, b = float(ts[k - 1]), float(ts[k + 1])
    d = 1e-6 * (1.0 + abs(b))
    sa = _fd_slope(f, a, d)
    sb = _fd_slope(f, b, d)
    if not (sa < 0.0 < sb):
        return None
    for _ in range(200):
        if b - a <= xtol:
            break
        m = 0.5 * (a + b)
        sm = _fd_slope(f, m, d)
        if sm < 0.0:
            a = m
        elif sm > 0.0:
            b = m
        else:
            return m
    return 0.5 * (a + b)


def delta_scan(L, N, ray, xtol=1e-10, touch_tol=1e-12):
    """Scan Delta = sqrt(det h) along ``ray`` and locate its zeros.

    ``ray`` is a `GeodesicPath` (an integral curve of N); positions
    between samples come from the cubic Hermite interpolant of (x, v).
    Sign changes of det h are bracketed and polished with `brentq`;
    tangential (even-order) zeros, which a sign-change bracket cannot
    see, are hunted below dips of det h and accepted when the refined
    minimum sits under ``touch_tol`` times the det-h scale.
    """
    N = _as_field(N)
    ts = np.asarray(ray.t, dtype=float)
    spline = CubicHermiteSpline(ts, np.asarray(ray.x, float),
                                np.asarray(ray.v, float), axis=0)

    def metric_at(t):
        p = spline(float(t))
        nvec = np.asarray(N(p), dtype=float)
        return fundamental_tensor(L, p, nvec, check=False).matrix

    def det_h(t):
        g = metric_at(t)
        return float(np.linalg.det(-g[2:, 2:]))

    m = len(ts)
    dets = np.empty(m)
    delta = np.empty(m)
    delta4 = np.empty(m)
    pos_ok = np.empty(m, dtype=bool)
    for i, t in enumerate(ts):
        g = metric_at(t)
        h = -g[2:, 2:]
        dh = float(np.linalg.det(h))
        dets[i] = dh
        delta[i] = np.sqrt(dh) if dh >= 0.0 else np.nan
        d4 = -float(np.linalg.det(g))
        delta4[i] = np.sqrt(d4) if d4 >= 0.0 else np.nan
        hscale = max(1.0, float(np.max(np.abs(h))))
        pos_ok[i] = all(mm > -1e-12 * hscale for mm in _leading_minors(h))

    scale = max(1.0, float(np.max(np.abs(dets))))
    roots = []
    kinds = []

    for i in range(m - 1):
        if dets[i] == 0.0:
            roots.append(float(ts[i]))
            left = dets[i - 1] if i > 0 else dets[i + 1]
            kinds.append("simple" if left * dets[i + 1] < 0.0
                         else DEGENERATE_KIND)
        elif dets[i] * dets[i + 1] < 0.0:
            r = brentq(det_h, ts[i], ts[i + 1], xtol=xtol)
            roots.append(float(r))
            kinds.append("simple")

    for i in range(1, m - 1):
        if not (0.0 < dets[i] <= 0.1 * scale):
            continue
        if dets[i] > dets[i - 1] or dets[i] > dets[i + 1]:
            continue
        if dets[i - 1] <= 0.0 or dets[i + 1] <= 0.0:
            continue
        r = _refine_tangent(det_h, float(ts[i - 1]), float(ts[i + 1]), xtol)
        if r is None or det_h(r) > touch_tol * scale:
            continue
        roots.append(float(r))
        kinds.append(DEGENERATE_KIND)

    order = np.argsort(roots)
    roots = [roots[k] for k in order]
    kinds = [kinds[k] for k in order]

    flagged = []
    i = 0
    while i < m:
        if not pos_ok[i]:
            j = i
            while j + 1 < m and not pos_ok[j + 1]:
                j += 1
            flagged.append((float(ts[i]), float(ts[j])))
            i = j + 1
        else:
            i += 1

    return DeltaCurve(params=ts, delta=delta, det_h=dets, delta4=delta4,
                      roots=roots, kinds=kinds, flagged=flagged)


# -- Brinkmann closed forms ---------------------------------------------------

def brinkmann_oracle(profile):
    """Closed-form Christoffel field of the quadratic wave models.

    Returns a callable x -> gamma[k, i, j] with the only nonzero symbols

        gamma^0_11 = H_u/2,   gamma^0_1a = gamma^0_a1 = H_a/2,
        gamma^a_11 = H_a/2        (a = 2, 3),

    H-derivatives taken at (x1, x2, x3).  Note the raised transverse
    symbols: with the transverse metric block -I their sign matches the
    lowered derivative, which is what the Koszul solve produces.
    """
    if isinstance(profile, str):
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise ConfigError("unknown wave profile %r (have %s)"
                              % (profile, sorted(PROFILES))) from None

    def symbols(x):
        u, xx, yy = float(x[1]), float(x[2]), float(x[3])
        _, (uj, xj, yj) = jets.variables([u, xx, yy], 1,
                                         tag="brinkmann-oracle")
        w = profile(uj, xj, yj)
        if isinstance(w, jets.Jet):
            hu = w.deriv((1, 0, 0))
            hx = w.deriv((0, 1, 0))
            hy = w.deriv((0, 0, 1))
        else:
            hu = hx = hy = 0.0
        gamma = np.zeros((4, 4, 4))
        gamma[0, 1, 1] = 0.5 * hu
        gamma[0, 1, 2] = gamma[0, 2, 1] = 0.5 * hx
        gamma[0, 1, 3] = gamma[0, 3, 1] = 0.5 * hy
        gamma[2, 1, 1] = 0.5 * hx
        gamma[3, 1, 1] = 0.5 * hy
        return gamma

    return symbols
