"""Shared test oracles.

The Jacobi machinery here is deliberately independent of the focal scan
it cross-checks: it samples the curvature operator in a parallel
transverse frame and integrates the Jacobi system E'' = -Rhat E for the
wavefront family (E(t0) = h^{1/2}, derivative matched to h).  det E
then vanishes exactly at focal parameters.

It is written for diagonal Rosen charts, where the normalized
coordinate frame e_a / sqrt(h_aa) is parallel along the ray (the h'/2h
transport terms cancel against the normalization), so no vector has to
be propagated through the chart wall at a focal point; grid points too
close to a wall are skipped and bridged by the curvature spline.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from finsler.curvature import chern_curvature
from finsler.tensors import fundamental_tensor

E0 = np.array([1.0, 0.0, 0.0, 0.0])


def spd_sqrt(mat):
    w, q = np.linalg.eigh(np.asarray(mat, dtype=float))
    if np.any(w <= 0.0):
        raise ValueError("matrix not positive definite")
    return q @ np.diag(np.sqrt(w)) @ q.T


def jacobi_first_zero(L, nvec, ray, n_grid=81, rtol=1e-10, guard=1e-3):
    """First zero of det E for the transverse Jacobi system along ``ray``."""
    nvec = np.asarray(nvec, dtype=float)
    ts = np.asarray(ray.t, dtype=float)
    t0, t1 = float(ts[0]), float(ts[-1])
    pos = CubicHermiteSpline(ts, np.asarray(ray.x, float),
                             np.asarray(ray.v, float), axis=0)

    def h_at(t):
        g = fundamental_tensor(L, pos(t), nvec, check=False).matrix
        return -g[2:, 2:]

    grid = []
    rhat = []
    for t in np.linspace(t0, t1, n_grid):
        h = h_at(t)
        d = np.diag(h)
        assert np.max(np.abs(h - np.diag(d))) < 1e-12 * max(1.0, d.max())
        if np.min(d) <= guard:
            continue  # chart wall; the spline bridges the gap
        x = pos(t)
        R = chern_curvature(L, x, nvec)
        P = np.zeros((2, 4))
        P[0, 2] = 1.0 / np.sqrt(d[0])
        P[1, 3] = 1.0 / np.sqrt(d[1])
        B = np.column_stack([nvec, np.eye(4)[1], P[0], P[1]])
        rk = np.empty((2, 2))
        for b in range(2):
            co = np.linalg.solve(B, R.apply(P[b], nvec, nvec))
            rk[0, b] = co[2]
            rk[1, b] = co[3]
        grid.append(float(t))
        rhat.append(rk)
    rsp = CubicSpline(np.array(grid), np.array(rhat), axis=0)

    d = 1e-6
    e_init = spd_sqrt(h_at(t0))
    ed_init = (spd_sqrt(h_at(t0 + d)) - spd_sqrt(h_at(t0 - d))) / (2.0 * d)

    def jacobi_rhs(t, y):
        e = y[:4].reshape(2, 2)
        ed = y[4:].reshape(2, 2)
        return np.concatenate([ed.ravel(), (-rsp(t) @ e).ravel()])

    sol = solve_ivp(jacobi_rhs, (t0, t1),
                    np.concatenate([e_init.ravel(), ed_init.ravel()]),
                    method="DOP853", rtol=rtol, atol=rtol,
                    dense_output=True)
    assert sol.success

    def det_e(t):
        return float(np.linalg.det(sol.sol(t)[:4].reshape(2, 2)))

    tt = np.linspace(t0, t1, 400)
    vals = [det_e(t) for t in tt]
    for i in range(len(tt) - 1):
        if vals[i] * vals[i + 1] < 0.0:
            return brentq(det_e, tt[i], tt[i + 1], xtol=1e-12)
    return None
