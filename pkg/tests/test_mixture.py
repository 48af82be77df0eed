import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parisilab.errors import DomainError, ValidationError
from parisilab.mixture import MAX_P, MixtureSpec

betas = st.lists(st.tuples(st.integers(2, 8), st.floats(0.05, 2.0)), min_size=1, max_size=4,
                 unique_by=lambda t: t[0])


def test_xi_examples():
    assert MixtureSpec.sk(1.0).xi(0.5) == pytest.approx(0.25, abs=1e-15)
    assert MixtureSpec.from_pairs([(2, 1), (3, 1)]).xi(1.0) == pytest.approx(2.0, abs=1e-15)
    assert MixtureSpec.sk(0.7).xi(0.0) == 0.0


def test_derivative_examples():
    m = MixtureSpec.sk(1.0)
    assert m.xi_prime(1.0) == pytest.approx(2.0)
    assert m.zeta(1.0) == pytest.approx(2.0)
    assert MixtureSpec.from_pairs([(2, 1), (3, 1)]).zeta(0.5) == pytest.approx(5.0)
    assert MixtureSpec.from_pairs([(3, 1)]).zeta(0.0) == 0.0


def test_xi_moment_examples():
    assert MixtureSpec.sk(1.0).xi_moment(0, 1) == pytest.approx(1.0)
    assert MixtureSpec.sk(1.0).xi_moment(0.5, 0.5) == 0.0
    assert MixtureSpec.from_pairs([(2, 1), (3, 1)]).xi_moment(0, 1) == pytest.approx(3.0)


def test_domain_errors():
    m = MixtureSpec.sk(1.0)
    with pytest.raises(DomainError):
        m.xi(1.5)
    with pytest.raises(DomainError):
        m.xi_prime(-0.1)
    with pytest.raises(DomainError):
        m.xi_moment(0.6, 0.4)


@pytest.mark.parametrize("pairs", [[(2, 0.0)], [(1, 1.0)], [(2, 1.0), (2, 0.5)], [(2, -1.0)],
                                   [(MAX_P + 1, 1.0)]])
def test_invalid_specs(pairs):
    with pytest.raises(ValidationError):
        MixtureSpec.from_pairs(pairs)


def test_xi_even_odd_on_negative_overlap():
    m = MixtureSpec.from_pairs([(2, 1.0), (3, 0.5)])
    assert m.xi(-0.5) == pytest.approx(0.25 - 0.25 * 0.125)


def test_hashable_and_immutable():
    a = MixtureSpec.from_pairs([(3, 1.0), (2, 0.5)], h=0.1)
    b = MixtureSpec.from_pairs([(2, 0.5), (3, 1.0)], h=0.1)
    assert a == b and hash(a) == hash(b)
    with pytest.raises(Exception):
        a.h = 2.0


@given(betas, st.floats(0.0, 1.0))
def test_antiderivative_identity(pairs, s):
    m = MixtureSpec.from_pairs(pairs)
    assert m.xi_moment(0, 1) == pytest.approx(float(m.xi_prime(1.0) - m.xi(1.0)), rel=1e-12)
    assert m.xi_moment(0, s) == pytest.approx(s * float(m.xi_prime(s)) - float(m.xi(s)), abs=1e-12)


@given(betas)
def test_nonnegative_nondecreasing(pairs):
    m = MixtureSpec.from_pairs(pairs)
    s = np.linspace(0, 1, 201)
    for f in (m.xi, m.xi_prime, m.zeta):
        v = f(s)
        assert np.all(v >= 0)
        assert np.all(np.diff(v) >= -1e-14)


@given(betas, st.floats(0.05, 0.95))
def test_finite_difference_derivatives(pairs, s):
    m = MixtureSpec.from_pairs(pairs)
    eps = 1e-4
    fd1 = (m.xi(s + eps) - m.xi(s - eps)) / (2 * eps)
    fd2 = (m.xi_prime(s + eps) - m.xi_prime(s - eps)) / (2 * eps)
    scale = sum(b * b for _, b in m.betas) * m.max_p ** 3
    assert abs(fd1 - m.xi_prime(s)) <= scale * eps ** 2
    assert abs(fd2 - m.zeta(s)) <= scale * m.max_p * eps ** 2


def test_zero_without_two_spin():
    m = MixtureSpec.from_pairs([(3, 1.0), (4, 0.5)])
    assert m.xi(0.0) == 0.0 and m.xi_prime(0.0) == 0.0
    assert math.isclose(m.xi(1.0), 1.25)
