import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler import fixtures, quotient
from finsler import lagrangian as lg
from finsler.connection import VectorField
from finsler.curvature import chern_curvature
from finsler.errors import ChartError, ConstructionError
from finsler.quotient import _transport_loop

E0 = np.array([1.0, 0.0, 0.0, 0.0])
REPS = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


# -- quotient metric ----------------------------------------------------------

def test_brinkmann_gbar_identity():
    L = lg.build_brinkmann_quadratic("x2-y2")
    frame = quotient.quotient_metric(L, E0, [0.1, 0.2, 0.3, -0.4], REPS)
    assert np.array_equal(frame.gbar, np.eye(2))


def test_rosen_gbar_reads_off_blocks():
    L = fixtures.rosen_cos2()
    frame = quotient.quotient_metric(L, E0, [0.4, 0.0, 0.1, 0.2], REPS)
    assert abs(frame.gbar[0, 0] - np.cos(0.4) ** 2) < 1e-15
    assert frame.gbar[1, 1] == 1.0
    assert frame.gbar[0, 1] == 0.0

    Le = fixtures.rosen_exp()
    fe = quotient.quotient_metric(Le, E0, [0.3, 0.0, 0.0, 0.0], REPS)
    assert abs(fe.gbar[0, 0] - np.exp(0.6)) < 1e-12
    assert abs(fe.gbar[1, 1] - np.exp(-0.6)) < 1e-12


def test_rep_shift_leaves_gbar():
    L = lg.build_brinkmann_quadratic("x2")
    x = [0.1, 0.2, 0.3, -0.4]
    base = quotient.quotient_metric(L, E0, x, REPS)
    shifted = REPS + np.array([[7.0], [-3.0]]) * E0
    frame = quotient.quotient_metric(L, E0, x, shifted)
    assert np.max(np.abs(frame.gbar - base.gbar)) == 0.0


@settings(max_examples=30, deadline=None)
@given(f1=st.floats(-5, 5), f2=st.floats(-5, 5))
def test_rep_shift_invariance_property(f1, f2):
    L = fixtures.rosen_cos2()
    x = [0.4, 0.1, 0.2, -0.3]
    base = quotient.quotient_metric(L, E0, x, REPS)
    shifted = REPS + np.array([[f1], [f2]]) * E0
    frame = quotient.quotient_metric(L, E0, x, shifted)
    assert np.max(np.abs(frame.gbar - base.gbar)) <= 1e-12


def test_rep_not_orthogonal_raises():
    L = lg.build_brinkmann_quadratic("x2")
    bad = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    with pytest.raises(ConstructionError, match="orthogonal"):
        quotient.quotient_metric(L, E0, [0.0, 0.0, 0.0, 0.0], bad)


def test_reps_dependent_mod_N_raise():
    L = lg.build_brinkmann_quadratic("x2")
    bad = np.array([[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 2.0, 0.0]])
    with pytest.raises(ConstructionError, match="dependent"):
        quotient.quotient_metric(L, E0, [0.0, 0.0, 0.0, 0.0], bad)


def test_non_lightlike_N_raises():
    L = lg.build_minkowski()
    with pytest.raises(ConstructionError, match="lightlike"):
        quotient.quotient_metric(L, E0, [0.0, 0.0, 0.0, 0.0], REPS)


# -- holonomy -----------------------------------------------------------------

def test_flat_loop_defect():
    L = fixtures.rosen_flat()
    loop = quotient.rectangle_loop([0.0, 0.0, 0.0, 0.0], 2, 3, 0.1)
    assert quotient.holonomy_defect(L, E0, loop, REPS) <= 1e-9


def test_triangle_polyline_accepted():
    L = fixtures.rosen_flat()
    loop = np.array([[0.0, 0.0, 0.0, 0.0],
                     [0.0, 0.0, 0.1, 0.0],
                     [0.0, 0.0, 0.0, 0.15]])
    assert quotient.holonomy_defect(L, E0, loop, REPS) <= 1e-9


def test_ppwave_quotient_is_flat():
    # flat quotient connection on a pp-wave, loop in the (u, x) plane
    L = lg.build_brinkmann_quadratic("x2-y2")
    loop = quotient.rectangle_loop([0.0, 0.0, 0.3, -0.2], 1, 2, 0.1)
    defect = quotient.holonomy_defect(L, E0, loop, REPS)
    assert defect <= 1e-7 * 0.1 * 0.1


def test_curved_control_defect_tracks_curvature():
    L = fixtures.curved_null_control()
    base = np.array([0.0, 0.0, 0.2, -0.1])
    side = 0.05
    loop = quotient.rectangle_loop(base, 2, 3, side)
    defect = quotient.holonomy_defect(L, E0, loop, REPS)

    frame = quotient.quotient_metric(L, E0, base, REPS)
    R = chern_curvature(L, base, E0)
    C = np.column_stack([
        frame.class_coords(R.apply(np.eye(4)[2], np.eye(4)[3],
                                   frame.reps[b]))
        for b in range(2)
    ])
    predicted = float(np.linalg.norm(C, 2))
    area = side * side
    assert predicted > 0.5
    assert abs(defect / area - predicted) <= 0.1 * predicted
    assert defect >= 0.5 * predicted * area


def test_transport_well_defined_mod_N():
    L = fixtures.curved_null_control()
    loop = quotient.rectangle_loop([0.0, 0.0, 0.2, -0.1], 2, 3, 0.05)
    frame = quotient.quotient_metric(L, E0, loop[0], REPS)
    N = VectorField.constant(E0)
    y1 = _transport_loop(L, N, loop, REPS.T, 64)
    y2 = _transport_loop(L, N, loop, (REPS + 5.0 * E0).T, 64)
    c1 = np.column_stack([frame.class_coords(y1[:, k]) for k in range(2)])
    c2 = np.column_stack([frame.class_coords(y2[:, k]) for k in range(2)])
    assert np.max(np.abs(c1 - c2)) <= 1e-8

    d1 = quotient.holonomy_defect(L, E0, loop, REPS)
    d2 = quotient.holonomy_defect(L, E0, loop, REPS + 5.0 * E0)
    assert abs(d1 - d2) <= 1e-8


def test_transport_requires_parallel_N():
    L = fixtures.broken_parallel(eps=0.5)
    loop = quotient.rectangle_loop([0.0, 0.0, 0.0, 0.0], 0, 2, 0.4)
    with pytest.raises(ChartError, match="not parallel"):
        quotient.holonomy_defect(L, E0, loop, REPS, tol=1e-8)
