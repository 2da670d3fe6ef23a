"""Fundamental and Cartan tensors plus the 2-homogeneity identities.

Everything here is per-point and pure: evaluate, return arrays, no caching
(anisotropic v-dependence makes global caches error-prone; callers own
memoization).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .report import Report

__all__ = [
    "FundamentalTensor",
    "CartanTensor",
    "Signature",
    "fundamental_tensor",
    "cartan_tensor",
    "signature_of",
    "homogeneity_report",
]


@dataclass(frozen=True)
class FundamentalTensor:
    x: np.ndarray
    v: np.ndarray
    matrix: np.ndarray


@dataclass(frozen=True)
class CartanTensor:
    x: np.ndarray
    v: np.ndarray
    coeffs: np.ndarray


@dataclass(frozen=True)
class Signature:
    plus: int
    minus: int
    zero: int

    @property
    def verdict(self):
        if self.zero > 0:
            return "degenerate"
        if self.plus == 1:
            return "lorentzian"
        return "other"


def _cone_check(L, x, v):
    check = getattr(L, "check_admissible", None)
    if check is not None:
        check(x, v, closed=True)


def fundamental_tensor(L, x, v, check=True):
    """g_ij(x, v) = 1/2 d^2/ds dt L(x, v + s e_i + t e_j) via jets.

    Admissibility (closed cone) is enforced unless ``check`` is False;
    lightlike boundary vectors are allowed.
    """
    v = [float(t) for t in v]
    n = len(v)
    if check:
        _cone_check(L, x, v)
    ctx, vj = jets.variables(v, 2, tag="fundamental")
    w = jets._call(L, [float(t) for t in x], vj)
    if not isinstance(w, jets.Jet):
        w = jets.Jet.constant(ctx, float(w))
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            val = 0.5 * w.deriv(tuple(e))
            g[i, j] = val
            g[j, i] = val
    return FundamentalTensor(x=np.asarray(x, float), v=np.asarray(v, float),
                             matrix=g)


def cartan_tensor(L, x, v, check=True):
    """C_ijk(x, v) = 1/4 third v-derivative of L; fully symmetric."""
    v = [float(t) for t in v]
    n = len(v)
    if check:
        _cone_check(L, x, v)
    ctx, vj = jets.variables(v, 3, tag="cartan")
    w = jets._call(L, [float(t) for t in x], vj)
    if not isinstance(w, jets.Jet):
        w = jets.Jet.constant(ctx, float(w))
    C = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                e[k] += 1
                val = 0.25 * w.deriv(tuple(e))
                C[i, j, k] = C[i, k, j] = C[j, i, k] = val
                C[j, k, i] = C[k, i, j] = C[k, j, i] = val
    return CartanTensor(x=np.asarray(x, float), v=np.asarray(v, float),
                        coeffs=C)


def signature_of(matrix):
    """Eigenvalue signature with an explicit degenerate verdict.

    Eigenvalues below 1e-10 times the spectral scale count as zero rather
    than guessing a sign; boundary evaluations legitimately produce
    degenerate induced forms.
    """
    m = np.asarray(matrix, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    scale = max(1.0, float(np.max(np.abs(w))))
    thr = 1e-10 * scale
    plus = int(np.sum(w > thr))
    minus = int(np.sum(w < -thr))
    zero = len(w) - plus - minus
    return Signature(plus=plus, minus=minus, zero=zero)


def homogeneity_report(L, x, v, tol=1e-9):
    """Residuals for the degree-2 homogeneity identities at one (x, v).

    Checks L(lambda v) = lambda^2 L, g_(lambda v) = g_v, g_v(v,v) = L and
    C_v(v,.,.) = 0.  Reports failures rather than raising.
    """
    x = [float(t) for t in x]
    v = np.asarray(v, dtype=float)
    rep = Report(title="homogeneity", meta={"x": list(x), "v": v.tolist()})

    Lv = L.value(x, v) if hasattr(L, "value") else float(L(x, v))
    for lam in (0.5, 2.0, 3.0):
        Ll = L.value(x, lam * v) if hasattr(L, "value") else float(L(x, lam * v))
        target = lam * lam * Lv
        res = abs(Ll - target) / max(1.0, abs(target))
        rep.add("L(%.1f v) = %.1f^2 L" % (lam, lam), res, tol)

    g = fundamental_tensor(L, x, v).matrix
    gscale = max(1.0, float(np.max(np.abs(g))))
    for lam in (0.5, 2.0):
        gl = fundamental_tensor(L, x, lam * v, check=False).matrix
        res = float(np.max(np.abs(gl - g))) / gscale
        rep.add("g_(%.1f v) = g_v" % lam, res, tol)

    res = abs(float(v @ g @ v) - Lv) / max(1.0, abs(Lv))
    rep.add("g_v(v, v) = L", res, tol)

    C = cartan_tensor(L, x, v, check=False).coeffs
    contr = np.einsum("ijk,i->jk", C, v)
    cscale = 1.0 + float(np.max(np.abs(C))) * float(np.linalg.norm(v))
    rep.add("C_v(v, ., .) = 0",
            float(np.max(np.abs(contr))) / cscale, tol)
    return rep
