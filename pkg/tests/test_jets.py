"""Jet engine tests.

Finite differences are the independent oracle here: every derivative the
engine reports is cross-checked against central difference quotients over a
step sweep, plus a handful of hand-frozen closed forms.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler import jets
from finsler.errors import EvaluationError
from finsler.jets import Jet, eval_jet3, eval_xjet, variables


def basis(i, n=4):
    e = [0.0] * n
    e[i] = 1.0
    return e


def L_quartic(x, v):
    # (v0)^4 / ((v0)^2 - (v1)^2), smooth off the light cone
    return v[0] ** 4 / (v[0] ** 2 - v[1] ** 2)


def L_wavy(x, v):
    # deliberately mixes every elementary function the engine supports
    s = jets.exp(0.3 * v[0]) * (v[0] * v[0] - 0.5 * v[1] * v[2])
    return s + jets.sin(v[3]) * v[1] + jets.sqrt(2.0 + v[2]) * jets.cosh(0.2 * v[3])


def L_xv(x, v):
    # base-point dependent quadratic with non-polynomial coefficients
    return jets.exp(x[0]) * v[0] * v[0] - jets.cos(x[1]) * v[1] * v[1] + x[0] * x[1] * v[0] * v[1]


def fd1(f, v, d, h):
    vp = [a + h * b for a, b in zip(v, d)]
    vm = [a - h * b for a, b in zip(v, d)]
    return (f(vp) - f(vm)) / (2.0 * h)


def fd2(f, v, d, h):
    vp = [a + h * b for a, b in zip(v, d)]
    vm = [a - h * b for a, b in zip(v, d)]
    return (f(vp) - 2.0 * f(v) + f(vm)) / (h * h)


def fd3(f, v, d, h):
    def at(t):
        return f([a + t * b for a, b in zip(v, d)])

    return (at(2 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2 * h)) / (2.0 * h ** 3)


def best_fd(fd, f, v, d):
    # step sweep: pick the pair of adjacent steps that agree best, a cheap
    # guard against both truncation and roundoff plateaus
    steps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
    vals = [fd(f, v, d, h) for h in steps]
    best = vals[0]
    gap = float("inf")
    for a, b in zip(vals, vals[1:]):
        g = abs(a - b)
        if g < gap:
            gap, best = g, b
    return best


class TestAgainstDifferenceQuotients:
    V0 = [2.0, 1.0, 0.3, -0.4]

    def scalar(self, L):
        return lambda v: L([0.0] * 4, v)

    @pytest.mark.parametrize("L", [L_quartic, L_wavy])
    @pytest.mark.parametrize("i", range(4))
    def test_first_derivatives(self, L, i):
        out = eval_jet3(L, [0.0] * 4, self.V0, [basis(i)])
        ref = best_fd(fd1, self.scalar(L), self.V0, basis(i))
        assert out.d1[0] == pytest.approx(ref, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize("L", [L_quartic, L_wavy])
    def test_second_and_third_derivatives(self, L):
        d = [0.7, -0.2, 0.5, 0.1]
        out = eval_jet3(L, [0.0] * 4, self.V0, [d])
        f = self.scalar(L)
        assert out.d2[(0, 0)] == pytest.approx(best_fd(fd2, f, self.V0, d),
                                               rel=1e-5, abs=1e-7)
        assert out.d3[(0, 0, 0)] == pytest.approx(best_fd(fd3, f, self.V0, d),
                                                  rel=1e-4, abs=1e-5)

    def test_mixed_second_derivative(self, ):
        u, w = basis(0), basis(1)
        out = eval_jet3(L_quartic, [0.0] * 4, self.V0, [u, w])

        def g(v):
            return fd1(self.scalar(L_quartic), v, w, 1e-4)

        ref = best_fd(fd1, lambda vv: g(vv), self.V0, u)
        assert out.d2[(0, 1)] == pytest.approx(ref, rel=1e-4)


def test_quartic_first_derivative_frozen_value():
    # dL/dv1 of (v0)^4/((v0)^2-(v1)^2) at v=(2,1,0,0) is 2*(v0)^4*v1/(den)^2
    # = 32/9; the value itself is 16/3
    out = eval_jet3(L_quartic, [0.0] * 4, [2.0, 1.0, 0.0, 0.0], [basis(1)])
    assert out.value == pytest.approx(16.0 / 3.0, rel=1e-14)
    assert out.d1[0] == pytest.approx(32.0 / 9.0, rel=1e-12)


def test_elementary_functions_match_math_module():
    (ctx, (t,)) = variables([0.37], 3)
    checks = [
        (jets.sqrt(1.3 + t), lambda s: math.sqrt(1.3 + s)),
        (jets.exp(t), math.exp),
        (jets.log(2.0 + t), lambda s: math.log(2.0 + s)),
        (jets.sin(t), math.sin),
        (jets.cos(t), math.cos),
        (jets.sinh(t), math.sinh),
        (jets.cosh(t), math.cosh),
    ]
    for jet, f in checks:
        h1, h2 = 1e-5, 1e-4  # second differences need the larger step
        val = f(0.37)
        d1 = (f(0.37 + h1) - f(0.37 - h1)) / (2 * h1)
        d2 = (f(0.37 + h2) - 2 * val + f(0.37 - h2)) / h2 ** 2
        assert jet.value == pytest.approx(val, rel=1e-14)
        assert jet.deriv((1,)) == pytest.approx(d1, rel=1e-8)
        assert jet.deriv((2,)) == pytest.approx(d2, rel=1e-6, abs=1e-7)


def test_division_and_fractional_powers():
    (ctx, (t,)) = variables([0.5], 3)
    w = (1.0 + t) ** -2.5
    f = lambda s: (1.0 + s) ** -2.5
    h = 1e-4
    assert w.value == pytest.approx(f(0.5), rel=1e-14)
    assert w.deriv((1,)) == pytest.approx((f(0.5 + h) - f(0.5 - h)) / (2 * h), rel=1e-7)
    q = 3.0 / (2.0 + t)
    assert q.value == pytest.approx(1.2, rel=1e-14)
    assert q.deriv((1,)) == pytest.approx(-3.0 / 6.25, rel=1e-12)


def test_xjet_mixed_base_fiber_derivatives():
    x0 = [0.3, -0.7]
    v0 = [1.5, 0.4]
    ex = [1.0, 0.0]
    ev1 = [0.0, 1.0]
    ev0 = [1.0, 0.0]
    # d/dx0 of dL/dv0 with L = e^{x0} v0^2 - cos(x1) v1^2 + x0 x1 v0 v1:
    # dL/dv0 = 2 e^{x0} v0 + x0 x1 v1, so d/dx0 = 2 e^{x0} v0 + x1 v1
    out = eval_xjet(L_xv, x0, v0, [ex], [ev0])
    expected = 2.0 * math.exp(0.3) * 1.5 + (-0.7) * 0.4
    assert out.dx[0] == pytest.approx(expected, rel=1e-12)
    # the pure fiber derivative itself
    assert out.value == pytest.approx(2.0 * math.exp(0.3) * 1.5 + 0.3 * (-0.7) * 0.4,
                                      rel=1e-12)
    # second-order fiber block: d/dx1 of d2L/dv1dv1 = 2 sin(x1)
    out2 = eval_xjet(L_xv, x0, v0, [ev1], [ev1, ev1])
    assert out2.value == pytest.approx(-2.0 * math.cos(-0.7), rel=1e-12)
    assert out2.dx[0] == pytest.approx(2.0 * math.sin(-0.7), rel=1e-12)
    # two base directions give the full dxdx triangle
    out3 = eval_xjet(L_xv, x0, v0, [ex, ev1], [ev0])
    # d2/dx0dx1 of (2 e^{x0} v0 + x0 x1 v1) = v1
    assert out3.dxdx[(0, 1)] == pytest.approx(0.4, rel=1e-12)


def test_group_caps_truncate_base_degree():
    groups = [0] * 4 + [1] * 4
    ctx, gens = variables([1.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0], 3,
                          groups=groups, group_orders=[1, 3])
    assert ctx.size == 95
    x, v = gens[:4], gens[4:]
    w = x[0] * x[1]  # base degree 2: must vanish from the expansion
    assert w.value == pytest.approx(1.0)
    assert w.coeff((1, 1, 0, 0, 0, 0, 0, 0)) == 0.0
    assert w.coeff((1, 0, 0, 0, 0, 0, 0, 0)) == pytest.approx(1.0)
    # mixed base*fiber^2 monomials survive (the D-tensor path)
    m = x[0] * v[0] * v[1]
    assert m.deriv((1, 0, 0, 0, 1, 1, 0, 0)) == pytest.approx(1.0)


def test_nested_jets_give_second_derivatives():
    # outer: a; inner: t.  d/da [ d/dt (a+t)^3 |_{t=0} ] = d/da 3a^2 = 6a
    octx, (a,) = variables([0.8], 1, tag="outer")
    ictx = jets._context(1, 1, tag="inner")
    t = Jet.variable(ictx, 0, a)
    w = t ** 3
    inner_d = w.deriv((1,))  # 3 a^2 as an outer jet
    assert isinstance(inner_d, Jet)
    assert inner_d.value == pytest.approx(3 * 0.8 ** 2, rel=1e-14)
    assert inner_d.deriv((1,)) == pytest.approx(6 * 0.8, rel=1e-14)
    # nested composition through a transcendental function
    s = jets.exp(t)
    d = s.deriv((1,))
    assert d.value == pytest.approx(math.exp(0.8), rel=1e-13)
    assert d.deriv((1,)) == pytest.approx(math.exp(0.8), rel=1e-13)


def test_context_mismatch_raises():
    _, (a,) = variables([1.0], 2, tag="ctx-a")
    _, (b,) = variables([1.0], 2, tag="ctx-b")
    with pytest.raises(TypeError):
        a + b
    with pytest.raises(TypeError):
        a * b
    with pytest.raises(TypeError):
        float(a)


def test_numpy_scalars_interoperate():
    _, (t,) = variables([2.0], 2)
    w = np.float64(3.0) * t + np.float64(1.0)
    assert isinstance(w, Jet)
    assert w.value == pytest.approx(7.0)
    assert w.deriv((1,)) == pytest.approx(3.0)


def test_nonfinite_evaluation_is_reported():
    def L_bad(x, v):
        return v[0] / (v[0] - v[0])  # 0/0

    with pytest.raises(EvaluationError):
        eval_jet3(L_bad, [0.0], [1.0], [[1.0]])

    def L_sqrt_neg(x, v):
        return jets.sqrt(v[0] - 2.0)

    with pytest.raises(EvaluationError):
        eval_jet3(L_sqrt_neg, [0.0], [1.0], [[1.0]])


def test_direction_count_limits():
    with pytest.raises(ValueError):
        eval_jet3(L_quartic, [0.0] * 4, [2.0, 0.0, 0.0, 0.0],
                  [basis(0), basis(1), basis(2), basis(3)])
    with pytest.raises(ValueError):
        eval_xjet(L_xv, [0.0, 0.0], [1.0, 0.0],
                  [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [])


finite = st.floats(min_value=-2.0, max_value=2.0,
                   allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(a=finite, b=finite, s=st.floats(min_value=-3.0, max_value=3.0,
                                       allow_nan=False, allow_infinity=False))
def test_first_derivative_linear_in_direction(a, b, s):
    v0 = [2.0, 0.5, 0.1, -0.3]
    u = [a, b, 0.25, -1.0]
    w = [0.5, -a, b, 0.75]
    mix = [s * p + q for p, q in zip(u, w)]
    f = lambda d: eval_jet3(L_quartic, [0.0] * 4, v0, [d]).d1[0]
    assert f(mix) == pytest.approx(s * f(u) + f(w), rel=1e-10, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(a=finite, b=finite)
def test_mixed_partials_symmetric(a, b):
    v0 = [2.0, 0.4, -0.2, 0.6]
    u = [1.0, a, 0.3, b]
    w = [b, 0.2, a, -0.5]
    z = [0.1, -b, 1.0, a]
    fwd = eval_jet3(L_wavy, [0.0] * 4, v0, [u, w, z])
    rev = eval_jet3(L_wavy, [0.0] * 4, v0, [z, u, w])
    # same geometric derivative, permuted direction labels
    assert fwd.d2[(0, 1)] == pytest.approx(rev.get_d2(1, 2), rel=1e-12, abs=1e-12)
    assert fwd.d3[(0, 1, 2)] == pytest.approx(rev.get_d3(1, 2, 0), rel=1e-12, abs=1e-12)
