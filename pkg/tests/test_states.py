import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resdecay.model import BoxMode, DeltaShell, DoubleBarrier
from resdecay.oracle import quad_normalization, quad_overlap
from resdecay.poles import find_poles
from resdecay.states import build_expansion, normalize_state, reconstruct_initial, sum_rule

# mpmath quadrature of sqrt(2) sin(q pi x) * A sin(kappa x), A from the resonance normalization
C_REF = {
    (1, 1): 0.99983956313862983 - 0.00016375303140959051j,
    (1, 2): 0.013412784217623396 + 0.00083700214591122548j,
    (1, 6): 0.003285081226084311 + 0.00059440430950852566j,
    (6, 1): -0.0033711981974555266 - 0.00010263214279266668j,
    (6, 2): 0.0073303115605809768 + 0.00044425998888041208j,
    (6, 6): 0.99522948427159584 - 0.0026831227591856574j,
}


@pytest.mark.parametrize("qn", sorted(C_REF))
def test_coefficients_match_reference(ds_expansion, qn):
    q, n = qn
    label = "alpha" if q == 1 else "beta"
    c = ds_expansion.coeffs[label][n - 1]
    assert abs(c - C_REF[qn]) <= 1e-12


def test_coefficients_match_quadrature(ds_expansion):
    for i in (0, 1, 9, 99):
        u = ds_expansion.state(i)
        c = quad_overlap(BoxMode(1), u, (0.0, 1.0))
        assert abs(c - ds_expansion.coeffs["alpha"][i]) < 1e-12


@pytest.mark.parametrize("spec", [DeltaShell(), DeltaShell(lam=10.0, a=2.0), DoubleBarrier(), DoubleBarrier(V=20.0, w=2.0)])
def test_states_are_normalized(spec):
    for pole in find_poles(spec, 6).poles:
        u = normalize_state(spec, pole)
        assert abs(u.normalization_integral() - 1.0) < 1e-12
        assert abs(quad_normalization(u) - 1.0) < 1e-10


@pytest.mark.parametrize("spec", [DeltaShell(), DoubleBarrier()])
def test_states_obey_boundary_conditions(spec):
    for pole in find_poles(spec, 4).poles:
        u = normalize_state(spec, pole)
        k = pole.kappa
        L = spec.boundary
        uL = u.boundary_value
        h = 1e-7
        # outgoing and continuous at L
        assert abs(u(L + 0.5) - uL * np.exp(0.5j * k)) < 1e-12 * abs(uL)
        assert abs(u(L - 1e-12) - uL) < 1e-9 * abs(uL)
        outside = (u(L + h) - u(L)) / h
        inside = (u(L) - u(L - h)) / h
        assert abs(outside - 1j * k * uL) < 1e-4 * abs(k * uL)
        # the delta shell kinks u by lam u(a); the barrier edge is smooth
        jump = spec.lam * uL if isinstance(spec, DeltaShell) else 0.0
        assert abs(outside - inside - jump) < 1e-4 * abs(k * uL) + 1e-5 * abs(jump)
        if isinstance(spec, DeltaShell):
            assert abs(u(0.0)) < 1e-14
        else:
            # outgoing to the left as well
            assert abs(u(-0.5) - u(0.0) * np.exp(0.5j * k)) < 1e-12 * abs(u(0.0))


@pytest.mark.parametrize("q", [1, 6])
def test_sum_rule_converges(ds_expansion, q):
    label = "alpha" if q == 1 else "beta"
    errs = [abs(sum_rule(ds_expansion, n, label) - 1.0) for n in (50, 200, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_reconstruction_improves_with_N(ds_expansion):
    x = np.linspace(0.05, 0.95, 301)
    box = BoxMode(1)(x)
    errs = [np.sqrt(np.trapezoid((reconstruct_initial(ds_expansion, x, n) - box) ** 2, x)) for n in (20, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]


def test_double_barrier_box_overlap_and_sum(db_expansion):
    c = db_expansion.coeffs["alpha"]
    # the box ground state sits almost entirely on the first sharp resonance
    assert abs(c[0]) > 0.95
    u = db_expansion.state(0)
    q = quad_overlap(BoxMode(1, 1.0, 2.0), u, (1.0, 2.0))
    assert abs(q - c[0]) < 1e-12


def test_box_outside_confinement_rejected(ds_poles):
    with pytest.raises(ValueError):
        build_expansion(ds_poles.truncated(3), BoxMode(1, 0.0, 2.0))


def test_truncated_expansion(ds_expansion):
    e = ds_expansion.truncated(10)
    assert e.N == 10 and e.labels == ("alpha", "beta")
    assert np.array_equal(e.coeffs["alpha"], ds_expansion.coeffs["alpha"][:10])
    assert e.tau == ds_expansion.tau
    with pytest.raises(ValueError):
        ds_expansion.truncated(0)
    with pytest.raises(ValueError):
        sum_rule(e, 11)


def test_write_coefficients(tmp_path, ds_expansion):
    path = ds_expansion.truncated(5).write_coefficients("alpha", tmp_path / "c.csv")
    rows = path.read_text().splitlines()
    assert rows[0] == "n,re_C,im_C,re_CCbar" and len(rows) == 6
    n, re, im, cc = rows[1].split(",")
    assert complex(float(re), float(im)) == ds_expansion.coeffs["alpha"][0]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8))
def test_coefficients_of_real_box_states_are_symmetric(q):
    # C and Cbar coincide for real initial states, so the mirror-pole terms are conjugates
    spec = DeltaShell()
    e = build_expansion(find_poles(spec, 12), BoxMode(q))
    assert np.array_equal(e.coeffs["alpha"], e.coeffs_bar["alpha"])
    # the dominant coefficient belongs to the resonance nearest the box mode
    assert np.argmax(np.abs(e.coeffs["alpha"])) == q - 1
