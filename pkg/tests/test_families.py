import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from merodyn import (ParameterSingularity, UnknownFamily, all_families, get_family,
                     make_exponential, make_fixed_multiplier_slice, make_pi_slice,
                     make_precomposed_slice, make_tangent, make_tanh_sq_families, parse_complex)
from merodyn.families import INF, SQRT_PI_I, is_infinite

FAMILIES = all_families()
coord = st.floats(-2.5, 2.5, allow_nan=False)
lam_coord = st.floats(-3.0, 3.0, allow_nan=False)


# -- closed-form examples ------------------------------------------------------

def test_exponential_examples():
    e = make_exponential()
    assert e.eval(0, 0) == 1
    assert e.free_av(2 + 3j) == 2 + 3j
    assert e.deriv_z(0.7 - 1j, 0) == 1
    assert not e.has_poles and e.poles_near(1, 0, 10) == []
    assert e.parameter_singularities == () and e.persistent_cycles == ()


def test_tangent_examples():
    t = make_tangent()
    assert t.deriv_z(0.3 + 0.4j, 0) == 0.3 + 0.4j
    assert t.free_av(0.5) == 0.5j
    assert t.singular_values(0.5) == [0.5j, -0.5j]
    assert sorted(p.real for p in t.poles_near(0.7, 0, 2)) == pytest.approx([-math.pi / 2, math.pi / 2])
    assert t.parameter_singularities == (0j,)
    assert {s.name for s in t.symmetries} == {"neg", "conj"}


def test_fixed_multiplier_slice_examples():
    f = make_fixed_multiplier_slice(2 / 3)
    assert f.eval(1.3 - 0.2j, 0) == 0
    assert f.deriv_z(1, 0) == pytest.approx(2 / 3, abs=1e-14)
    mu = f.metadata["mu"]
    assert mu(1e12) == pytest.approx(1 / 3, rel=1e-10)
    assert set(f.parameter_singularities) == {0j, 1 / 3}
    assert f.persistent_cycles[0].multiplier == 2 / 3


def test_fixed_multiplier_rejects_non_attracting():
    for rho0 in (1.0, 1.5j, 0.0):
        with pytest.raises(ValueError):
            make_fixed_multiplier_slice(rho0)


def test_fixed_multiplier_derivative_at_origin_is_rho0_for_every_lambda():
    f = make_fixed_multiplier_slice(0.4 + 0.3j)
    for lam in (1.0, 2 - 1j, -0.5 + 3j):
        assert f.deriv_z(lam, 0) == pytest.approx(0.4 + 0.3j, abs=1e-13)


def test_pi_slice_examples():
    f = make_pi_slice()
    assert f.eval(0.7 + 0.2j, 0) == 0
    assert f.free_av(1 + 1j) == 1 + 1j
    assert f.eval(0.7 + 0.2j, 40) == pytest.approx(0.7 + 0.2j, abs=1e-12)
    assert set(f.parameter_singularities) == {0j, math.pi * 1j}
    # the second asymptotic value pi i is mapped onto the fixed origin
    assert f.eval(0.7 + 0.2j, -40) == pytest.approx(math.pi * 1j, abs=1e-12)
    assert abs(f.eval(0.7 + 0.2j, math.pi * 1j)) < 1e-12


def test_tanh_families_examples():
    a, b = make_tanh_sq_families()
    for f in (a, b):
        assert f.eval(2 - 1j, 0) == 0
        assert f.free_av(3) == 3
        assert f.deriv_z(2 - 1j, 0) == 0
        assert f.parameter_singularities == (0j,)
    assert a.eval(1.5, 30) == pytest.approx(1.5)
    assert b.eval(1.5, 30) == pytest.approx(1.5)


def test_precomposed_examples():
    g = make_precomposed_slice()
    assert g.eval(1j, 0) == 0
    assert g.free_av(1j) == 1j
    assert g.metadata["sqrt_branch"] == "principal"
    assert SQRT_PI_I == cmath.sqrt(math.pi * 1j)
    assert set(g.parameter_singularities) == {0j, -SQRT_PI_I}


@given(coord, coord)
def test_precomposed_is_even(x, y):
    g = make_precomposed_slice()
    z = complex(x, y)
    a, b = g.eval(0.8 + 0.3j, z), g.eval(0.8 + 0.3j, -z)
    assume(not is_infinite(a))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


# -- properties over every family -------------------------------------------------

@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
@settings(max_examples=100, deadline=None)
@given(coord, coord, lam_coord, lam_coord)
def test_derivative_matches_finite_difference(fam, x, y, a, b):
    lam, z = complex(a, b), complex(x, y)
    assume(not fam.is_singular(lam) and abs(lam) > 0.05)
    if fam.has_poles:
        p, _ = fam.nearest_pole(lam, z)
        assume(abs(p - z) > 0.2)
    w = fam.eval(lam, z)
    assume(not is_infinite(w) and abs(w) < 1e6)
    h = 1e-5 * max(1.0, abs(z))
    fd = (fam.eval(lam, z + h) - fam.eval(lam, z - h)) / (2 * h)
    d = fam.deriv_z(lam, z)
    assert abs(fd - d) <= 1e-6 * max(1.0, abs(d))


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
@given(lam_coord, lam_coord, st.floats(-5, 5, allow_nan=False))
def test_free_av_is_affine(fam, a, b, s):
    l1, l2 = complex(a, b), complex(b, -a) + 0.5
    l3 = l1 + s * (l2 - l1)
    v1, v2, v3 = fam.free_av(l1), fam.free_av(l2), fam.free_av(l3)
    assert abs(v3 - (v1 + s * (v2 - v1))) <= 1e-12 * max(1.0, abs(v1), abs(v2), abs(v3))


@pytest.mark.parametrize("fam", [f for f in FAMILIES if f.has_poles], ids=lambda f: f.name)
def test_poles_map_to_infinity(fam):
    lam = 1.1 + 0.4j
    poles = fam.poles_near(lam, 0.3 - 0.2j, 4.0)
    assert poles
    for p in poles:
        w = fam.eval(lam, p)
        assert is_infinite(w) or abs(w) > 1e13
        # approaching the pole the image runs off to infinity
        sizes = [abs(fam.eval(lam, p + d)) for d in (1e-2, 1e-4, 1e-6)]
        assert sizes[0] < sizes[1] < sizes[2]


def _winding(fam, lam, center, radius, n=4096):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = center + radius * np.exp(1j * th)
    ld = np.array([fam.deriv_z(lam, w) / fam.eval(lam, w) for w in z])
    return np.sum(ld * 1j * radius * np.exp(1j * th)) * (2 * np.pi / n) / (2j * np.pi)


@pytest.mark.parametrize("fam", [f for f in FAMILIES if f.has_poles], ids=lambda f: f.name)
def test_pole_enumeration_matches_argument_principle(fam):
    lam = 1.1 + 0.4j
    for k, p in fam.poles_near_indexed(lam, 0.3, 3.0)[:3]:
        # a small disk around each pole contains it and nothing else
        others = [abs(q - p) for q in fam.poles_near(lam, p, 1.0) if q != p]
        r = 0.25 * min(others + [1.0])
        listed = fam.poles_near(lam, p, r)
        n = _winding(fam, lam, p, r)
        assert abs(n.imag) < 1e-6
        order = 2 if fam.name == "tanh2" else 1  # tanh(z)^2 has double poles
        assert len(listed) == 1
        assert round(-n.real) == order


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_persistent_cycles_are_attracting_and_invariant(fam):
    lam = 1.7 - 0.6j
    for spec in fam.persistent_cycles:
        assert abs(spec.multiplier) < 1
        pts = spec.points(lam)
        for i, z in enumerate(pts):
            assert abs(fam.eval(lam, z) - pts[(i + 1) % len(pts)]) < 1e-10
        rho = np.prod([fam.deriv_z(lam, z) for z in pts])
        assert abs(rho - spec.multiplier) < 1e-10


@given(coord, coord, lam_coord, lam_coord)
def test_tangent_symmetries_exact(x, y, a, b):
    t = make_tangent()
    lam, z = complex(a, b), complex(x, y)
    w = t.eval(lam, z)
    assume(not is_infinite(w))
    assert abs(t.eval(-lam, -z) - w) <= 1e-12 * max(1.0, abs(w))
    assert abs(t.eval(lam.conjugate(), z.conjugate()).conjugate() - w) <= 1e-12 * max(1.0, abs(w))


def test_eval_returns_point_at_infinity_on_a_pole():
    t = make_tangent()
    assert t.eval(0.5, math.pi / 2) == INF


def test_parameter_singularity_is_rejected():
    t = make_tangent()
    assert t.is_singular(0) and not t.is_singular(1e-6)
    with pytest.raises(ParameterSingularity):
        t.check_regular(0j)


def test_family_ids():
    for fid in ("exp", "tan", "pi-slice", "tanh2", "tanhz2", "precomp", "f2rho:0.5,0.1"):
        assert get_family(fid).name.split(":")[0] == fid.split(":")[0]
    assert get_family("f2rho:0.5,0.1").params[0] == 0.5 + 0.1j
    for bad in ("nosuch", "f2rho:x", "f2rho:1,2,3"):
        with pytest.raises(UnknownFamily):
            get_family(bad)


def test_parse_complex():
    assert parse_complex("1.5,-2") == 1.5 - 2j
    assert parse_complex("-3") == -3
    with pytest.raises(ValueError):
        parse_complex("1,2,3")
