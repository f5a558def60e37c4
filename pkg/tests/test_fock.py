from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fisherlab.fock as fock
from fisherlab.fock import (
    Block,
    BlockDiagonalState,
    DensityOperator,
    build_state,
    fock_state,
    hb_amplitude,
    hb_state,
    inner_product,
    mix,
    number_derivative,
    sqrt_factorial_ratio,
    to_density,
    twin_fock,
)


def test_fock_state_basics():
    s = fock_state((2, 1))
    assert s.num_modes == 2 and s.cutoff == 3
    assert s[(2, 1)] == 1 and s[(0, 0)] == 0
    assert s.norm_squared() == pytest.approx(1.0)


@pytest.mark.parametrize("amps", [{(1, 0): 0.5}, {(1, 0): 1.0, (0, 1): 1.0}])
def test_unnormalized_rejected(amps):
    with pytest.raises(ValueError):
        build_state(2, 1, amps)


def test_label_validation():
    with pytest.raises(ValueError):
        build_state(2, 1, {(2, 0): 1.0})
    with pytest.raises(ValueError):
        build_state(2, 2, {(1,): 1.0})
    with pytest.raises(ValueError):
        build_state(2, 2, {(-1, 1): 1.0})
    with pytest.raises(ValueError):
        twin_fock(-1)


@pytest.mark.parametrize("N", range(1, 9))
def test_hb_state_normalized_and_symmetric(N):
    s = hb_state(N)
    assert s.norm_squared() == pytest.approx(1.0, abs=1e-12)
    for n in range(2 * N + 1):
        assert s[(n, 2 * N - n)] == pytest.approx(s[(2 * N - n, n)], abs=1e-15)
    # only even photon numbers populate each mode
    assert all(lab[0] % 2 == 0 for lab in s.labels())


def test_hb_amplitude_n1():
    # |1,1> cancels by two-photon interference: HB(1) = (|0,2> + |2,0>)/sqrt 2
    assert hb_amplitude(1, 0, 0.0) == pytest.approx(1 / math.sqrt(2))
    assert hb_amplitude(1, 1, 0.0) == pytest.approx(1 / math.sqrt(2))
    assert hb_amplitude(1, 1, 0.3) == pytest.approx(np.exp(0.6j) / math.sqrt(2))


def test_sqrt_factorial_ratio_large():
    # exact integer ratio before the square root
    assert sqrt_factorial_ratio([40], [38]) == pytest.approx(math.sqrt(40 * 39))
    assert sqrt_factorial_ratio([10, 10], [20]) == pytest.approx(math.sqrt(1 / math.comb(20, 10)))


def test_number_derivative_and_inner_product():
    s = hb_state(2, 0.4)
    d = number_derivative(s, 0)
    # <psi| i n |psi> = i <n>
    mean = sum(lab[0] * abs(a) ** 2 for lab, a in s.amplitudes.items())
    assert inner_product(s, d) == pytest.approx(1j * mean)
    with pytest.raises(IndexError):
        number_derivative(s, 2)
    with pytest.raises(ValueError):
        inner_product(s, fock_state((1, 0, 0)))


def test_prune_threshold(monkeypatch):
    amps = {(1, 0): 1.0, (0, 1): 1e-17}
    assert len(build_state(2, 1, amps)) == 1
    monkeypatch.setattr(fock, "PRUNE_TOL", 0.0)
    assert len(fock.build_state(2, 1, amps)) == 2


def test_density_validation():
    basis = ((0, 1), (1, 0))
    with pytest.raises(ValueError):
        DensityOperator(basis, np.array([[1.0, 0.1], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityOperator(basis, np.diag([0.6, 0.6]))  # trace
    with pytest.raises(ValueError):
        DensityOperator(basis, np.diag([1.5, -0.5]))  # negative eigenvalue
    d = DensityOperator(basis, np.diag([0.1, -0.1]), derivative=True)
    assert d.dim == 2
    with pytest.raises(ValueError):
        DensityOperator(basis, np.diag([0.1, 0.1]), derivative=True)  # not traceless


def test_density_is_read_only():
    rho = to_density(hb_state(1))
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 0.0


def test_mix_and_embed():
    a = to_density(fock_state((1, 0)))
    b = to_density(fock_state((0, 1)))
    rho = mix([(0.25, a), (0.75, b)])
    assert rho.element((1, 0), (1, 0)) == pytest.approx(0.25)
    assert rho.element((0, 1), (0, 1)) == pytest.approx(0.75)
    big = rho.embed(((0, 1), (1, 0), (2, 0)))
    assert big.shape == (3, 3) and big[2, 2] == 0
    with pytest.raises(ValueError):
        mix([(0.5, a), (0.4, b)])


def test_block_diagonal_validation():
    b0 = Block(0.5, fock_state((2, 0)), 0)
    b1 = Block(0.5, fock_state((1, 0)), 1)
    s = BlockDiagonalState((b0, b1))
    assert s.weights() == {0: 0.5, 1: 0.5}
    assert np.trace(s.to_density().matrix).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BlockDiagonalState((b0, Block(0.5, fock_state((1, 0)), 0)))  # repeated m
    with pytest.raises(ValueError):
        BlockDiagonalState((b0, Block(0.3, fock_state((1, 0)), 1)))  # weights


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(0, 2 * math.pi))
def test_hb_state_norm_any_phase(N, phi):
    assert hb_state(N, phi).norm_squared() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("N", range(1, 7))
def test_hb_derivative_moments(N):
    s = hb_state(N, 0.3)
    d = number_derivative(s, 0)
    assert inner_product(s, d) == pytest.approx(1j * N, abs=1e-12)
    assert inner_product(d, d).real == pytest.approx(N * (3 * N + 1) / 2, rel=1e-12)
    for lab, amp in d.amplitudes.items():
        assert amp == pytest.approx(1j * lab[0] * s[lab])


def test_vacuum_derivative_is_zero():
    d = number_derivative(twin_fock(0), 0)
    assert len(d) == 0 or all(a == 0 for a in d.amplitudes.values())


def test_hb2_amplitudes():
    s = hb_state(2)
    assert s[(0, 4)] == pytest.approx(math.sqrt(24) / 8)
    assert s[(4, 0)] == pytest.approx(math.sqrt(24) / 8)
    assert s[(2, 2)] == pytest.approx(0.5)
