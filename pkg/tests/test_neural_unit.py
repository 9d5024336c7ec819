import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evounits.errors import DomainError
from evounits.neural_unit import (
    NeuronMode,
    NeuronParams,
    OutputKind,
    activate_recurrent,
    activate_simple,
    output_nonlinearity,
)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
state_vals = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def recurrent_params(values):
    return NeuronParams(NeuronMode.RECURRENT, np.asarray(values, dtype=float))


def simple_params(a, b):
    return NeuronParams(NeuronMode.SIMPLE, np.array([[a, b]]))


class TestActivateRecurrent:
    def test_all_zero_params(self):
        out, h = activate_recurrent(recurrent_params(np.zeros((2, 3))), 0.7, 0.3)
        assert out == 0.0 and h == 0.0

    def test_bias_only_rows_ignore_inputs(self):
        p = recurrent_params([[0, 0, 0.8], [0, 0, 0.8]])
        for x, h in [(0.0, 0.0), (1.0, -1.0), (5.0, 0.3)]:
            out, h_new = activate_recurrent(p, x, h)
            assert out == pytest.approx(math.tanh(0.8), abs=1e-15)
            assert h_new == pytest.approx(math.tanh(0.8), abs=1e-15)

    def test_identity_rows(self):
        p = recurrent_params([[1, 0, 0], [0, 1, 0]])
        out, h_new = activate_recurrent(p, 0.5, -0.25)
        assert out == pytest.approx(math.tanh(0.5), abs=1e-15)
        assert h_new == pytest.approx(math.tanh(-0.25), abs=1e-15)

    @given(
        vals=st.lists(finite, min_size=6, max_size=6),
        x=finite,
        h=state_vals,
    )
    @settings(max_examples=200)
    def test_outputs_bounded(self, vals, x, h):
        p = recurrent_params(np.array(vals).reshape(2, 3))
        out, h_new = activate_recurrent(p, x, h)
        assert -1.0 <= out <= 1.0
        assert -1.0 <= h_new <= 1.0

    @given(vals=st.lists(finite, min_size=6, max_size=6), x=finite, h=state_vals)
    @settings(max_examples=50)
    def test_deterministic(self, vals, x, h):
        p = recurrent_params(np.array(vals).reshape(2, 3))
        assert activate_recurrent(p, x, h) == activate_recurrent(p, x, h)

    def test_state_locality(self):
        # Two different units: each result depends only on its own inputs.
        p1 = recurrent_params([[1, 2, 3], [4, 5, 6]])
        p2 = recurrent_params([[-1, 0.5, 0], [2, -2, 1]])
        r1 = activate_recurrent(p1, 0.4, 0.1)
        r2 = activate_recurrent(p2, -0.9, 0.8)
        assert activate_recurrent(p1, 0.4, 0.1) == r1
        assert activate_recurrent(p2, -0.9, 0.8) == r2

    @given(a=finite, b=finite, x=finite)
    @settings(max_examples=100)
    def test_reduces_to_simple_when_state_decoupled(self, a, b, x):
        p = recurrent_params([[a, 0, b], [0, 0, 0]])
        out, _ = activate_recurrent(p, x, 0.6)
        assert out == activate_simple(simple_params(a, b), x)

    def test_rejects_nonfinite(self):
        p = recurrent_params(np.zeros((2, 3)))
        with pytest.raises(DomainError):
            activate_recurrent(p, float("nan"), 0.0)
        with pytest.raises(DomainError):
            activate_recurrent(p, 0.0, float("inf"))
        with pytest.raises(DomainError):
            NeuronParams(NeuronMode.RECURRENT, np.full((2, 3), np.nan))

    def test_rejects_wrong_mode(self):
        with pytest.raises(DomainError):
            activate_recurrent(simple_params(1, 0), 0.0, 0.0)


class TestActivateSimple:
    def test_zero_params(self):
        assert activate_simple(simple_params(0, 0), 5.0) == 0.0

    def test_odd_at_origin(self):
        assert activate_simple(simple_params(1, 0), 0.0) == 0.0

    def test_scale_and_bias(self):
        assert activate_simple(simple_params(2, -1), 1.0) == pytest.approx(
            math.tanh(1.0), abs=1e-15
        )

    @given(a=st.floats(min_value=0.0, max_value=5.0), b=finite,
           x1=finite, x2=finite)
    @settings(max_examples=100)
    def test_monotone_for_positive_scale(self, a, b, x1, x2):
        lo, hi = sorted((x1, x2))
        p = simple_params(a, b)
        assert activate_simple(p, lo) <= activate_simple(p, hi)

    def test_wrong_shape_rejected(self):
        with pytest.raises(DomainError):
            NeuronParams(NeuronMode.SIMPLE, np.zeros((2, 3)))


class TestOutputNonlinearity:
    def test_trivial_values(self):
        assert output_nonlinearity(0.0, OutputKind.TANH) == 0.0
        assert output_nonlinearity(0.0, OutputKind.SIGMOID) == 0.5

    def test_sigmoid_reference(self):
        assert output_nonlinearity(1.0, OutputKind.SIGMOID) == pytest.approx(
            1.0 / (1.0 + math.exp(-1.0)), abs=1e-15
        )

    @given(raw=finite)
    @settings(max_examples=100)
    def test_ranges(self, raw):
        assert -1.0 <= output_nonlinearity(raw, OutputKind.TANH) <= 1.0
        assert 0.0 <= output_nonlinearity(raw, OutputKind.SIGMOID) <= 1.0

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            output_nonlinearity(float("nan"), OutputKind.TANH)
