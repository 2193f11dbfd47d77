import math

import numpy as np
import pytest

from frnplc.nn import (GruParams, LstmParams, affine_norm, causal_grouped_conv2d,
                       gelu, gru_step, linear, lstm_step)


class TestLinear:
    def test_identity(self):
        x = np.array([1.0, -2.0, 3.0])
        assert linear(x, np.eye(3), np.zeros(3)) == pytest.approx(x)

    def test_hand_example(self):
        x = np.array([1.0, 2.0])
        w = np.array([[1.0, 1.0], [0.0, 1.0]])
        b = np.array([0.5, 0.0])
        assert linear(x, w, b) == pytest.approx([3.5, 2.0])

    def test_zero_input_gives_bias(self):
        w = np.arange(6.0).reshape(2, 3)
        b = np.array([0.25, -0.5])
        assert linear(np.zeros((4, 3)), w, b) == pytest.approx(np.tile(b, (4, 1)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            linear(np.zeros(4), np.zeros((2, 3)))


class TestGelu:
    def test_zero(self):
        assert gelu(np.array(0.0)) == 0.0

    def test_asymptote(self):
        assert gelu(np.array(10.0)) == pytest.approx(10.0, abs=1e-6)

    def test_unit(self):
        assert gelu(np.array(1.0)) == pytest.approx(0.841345, abs=1e-6)

    def test_float32_preserved(self):
        assert gelu(np.float32([0.5])).dtype == np.float32


class TestAffineNorm:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal((3, 5))
        assert affine_norm(x, np.ones(5), np.zeros(5)) == pytest.approx(x)

    def test_scalar_example(self):
        assert affine_norm(np.ones(1), np.array([2.0]), np.array([-1.0])) == pytest.approx([1.0])

    def test_composition_is_affine(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(6)
        s1, b1 = rng.standard_normal(6), rng.standard_normal(6)
        s2, b2 = rng.standard_normal(6), rng.standard_normal(6)
        twice = affine_norm(affine_norm(x, s1, b1), s2, b2)
        composed = affine_norm(x, s1 * s2, b1 * s2 + b2)
        assert twice == pytest.approx(composed, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            affine_norm(np.zeros(4), np.ones(3), np.zeros(3))


def _scalar_sigmoid(v: float) -> float:
    return 1.0 / (1.0 + math.exp(-v))


class TestLstmStep:
    def test_zero_weights_zero_state(self):
        p = LstmParams(np.zeros((8, 3)), np.zeros((8, 2)), np.zeros(8), np.zeros(8))
        out, (h, c) = lstm_step(np.ones(3), (np.zeros(2), np.zeros(2)), p)
        assert not out.any() and not h.any() and not c.any()

    def test_output_bounded(self):
        rng = np.random.default_rng(5)
        p = LstmParams(rng.standard_normal((16, 3)), rng.standard_normal((16, 4)),
                       rng.standard_normal(16), rng.standard_normal(16))
        h = np.zeros(4)
        c = np.zeros(4)
        for _ in range(50):
            out, (h, c) = lstm_step(rng.standard_normal(3), (h, c), p)
            assert np.all(np.abs(out) < 1.0)

    def test_scalar_hand_computation(self):
        # Single-unit cell with hand-set gates, checked against the scalar
        # gate equations computed with math.* functions.
        w_ih = np.array([[0.1], [0.2], [0.3], [0.4]])
        w_hh = np.array([[-0.1], [0.5], [0.25], [-0.3]])
        b_ih = np.array([0.01, 0.02, 0.03, 0.04])
        b_hh = np.array([0.0, -0.01, 0.02, 0.05])
        p = LstmParams(w_ih, w_hh, b_ih, b_hh)
        x, h0, c0 = 0.5, 0.1, -0.2
        i = _scalar_sigmoid(0.1 * x + 0.01 + -0.1 * h0 + 0.0)
        f = _scalar_sigmoid(0.2 * x + 0.02 + 0.5 * h0 - 0.01)
        g = math.tanh(0.3 * x + 0.03 + 0.25 * h0 + 0.02)
        o = _scalar_sigmoid(0.4 * x + 0.04 + -0.3 * h0 + 0.05)
        c1 = f * c0 + i * g
        h1 = o * math.tanh(c1)
        out, (h, c) = lstm_step(np.array([x]), (np.array([h0]), np.array([c0])), p)
        assert out[0] == pytest.approx(h1, rel=1e-12)
        assert c[0] == pytest.approx(c1, rel=1e-12)

    def test_sequence_matches_reference(self):
        # Iterated steps against an independently-coded whole-sequence loop.
        rng = np.random.default_rng(6)
        n_in, n_h, steps = 5, 7, 20
        p = LstmParams(rng.standard_normal((4 * n_h, n_in)),
                       rng.standard_normal((4 * n_h, n_h)),
                       rng.standard_normal(4 * n_h), rng.standard_normal(4 * n_h))
        xs = rng.standard_normal((steps, n_in))
        h = np.zeros(n_h)
        c = np.zeros(n_h)
        outs = []
        for x in xs:
            out, (h, c) = lstm_step(x, (h, c), p)
            outs.append(out)

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        h_ref = np.zeros(n_h)
        c_ref = np.zeros(n_h)
        for t, x in enumerate(xs):
            z = p.w_ih @ x + p.b_ih + p.w_hh @ h_ref + p.b_hh
            iz, fz, gz, oz = z[:n_h], z[n_h:2*n_h], z[2*n_h:3*n_h], z[3*n_h:]
            c_ref = sig(fz) * c_ref + sig(iz) * np.tanh(gz)
            h_ref = sig(oz) * np.tanh(c_ref)
            assert outs[t] == pytest.approx(h_ref, abs=1e-6)

    def test_shape_mismatch(self):
        p = LstmParams(np.zeros((8, 3)), np.zeros((8, 2)), np.zeros(8), np.zeros(8))
        with pytest.raises(ValueError):
            lstm_step(np.zeros(2), (np.zeros(2), np.zeros(2)), p)


class TestGruStep:
    def test_zero_weights(self):
        p = GruParams(np.zeros((6, 3)), np.zeros((6, 2)), np.zeros(6), np.zeros(6))
        out, h = gru_step(np.ones(3), np.zeros(2), p)
        assert not out.any()

    def test_bounded(self):
        rng = np.random.default_rng(7)
        p = GruParams(rng.standard_normal((12, 3)), rng.standard_normal((12, 4)),
                      rng.standard_normal(12), rng.standard_normal(12))
        h = np.zeros(4)
        for _ in range(50):
            h, _ = gru_step(rng.standard_normal(3), h, p)
            assert np.all(np.abs(h) <= 1.0)

    def test_scalar_hand_computation(self):
        w_ih = np.array([[0.2], [-0.1], [0.4]])
        w_hh = np.array([[0.3], [0.6], [-0.2]])
        b_ih = np.array([0.05, 0.0, -0.02])
        b_hh = np.array([-0.03, 0.01, 0.07])
        p = GruParams(w_ih, w_hh, b_ih, b_hh)
        x, h0 = -0.4, 0.25
        r = _scalar_sigmoid(0.2 * x + 0.05 + 0.3 * h0 - 0.03)
        z = _scalar_sigmoid(-0.1 * x + 0.0 + 0.6 * h0 + 0.01)
        n = math.tanh(0.4 * x - 0.02 + r * (-0.2 * h0 + 0.07))
        h1 = (1 - z) * n + z * h0
        out, h = gru_step(np.array([x]), np.array([h0]), p)
        assert out[0] == pytest.approx(h1, rel=1e-12)

    def test_sequence_matches_reference(self):
        rng = np.random.default_rng(8)
        n_in, n_h, steps = 4, 6, 20
        p = GruParams(rng.standard_normal((3 * n_h, n_in)),
                      rng.standard_normal((3 * n_h, n_h)),
                      rng.standard_normal(3 * n_h), rng.standard_normal(3 * n_h))
        xs = rng.standard_normal((steps, n_in))
        h = np.zeros(n_h)
        stepped = []
        for x in xs:
            h, _ = gru_step(x, h, p)
            stepped.append(h)

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        h_ref = np.zeros(n_h)
        for t, x in enumerate(xs):
            gi = p.w_ih @ x + p.b_ih
            gh = p.w_hh @ h_ref + p.b_hh
            r = sig(gi[:n_h] + gh[:n_h])
            z = sig(gi[n_h:2*n_h] + gh[n_h:2*n_h])
            n = np.tanh(gi[2*n_h:] + r * gh[2*n_h:])
            h_ref = (1 - z) * n + z * h_ref
            assert stepped[t] == pytest.approx(h_ref, abs=1e-6)


class TestCausalGroupedConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 8, 5))
        w = np.zeros((2, 2, 1, 1))
        w[0, 0, 0, 0] = 1.0
        w[1, 1, 0, 0] = 1.0
        assert causal_grouped_conv2d(x, w) == pytest.approx(x)

    def test_causality_impulse(self):
        x = np.zeros((1, 6, 10))
        x[0, 3, 4] = 1.0
        w = np.ones((1, 1, 3, 3))
        y = causal_grouped_conv2d(x, w)
        assert not y[:, :, :4].any()
        assert y[:, :, 4:].any()

    def test_averaging_kernel_constant(self):
        x = np.full((1, 8, 6), 2.5)
        w = np.full((1, 1, 3, 3), 1.0 / 9.0)
        y = causal_grouped_conv2d(x, w)
        # Interior: away from zero-padded freq edges and past-padded start.
        assert y[0, 1:-1, 2:] == pytest.approx(2.5, rel=1e-12)

    def test_causality_future_change(self):
        rng = np.random.default_rng(10)
        x1 = rng.standard_normal((3, 5, 12))
        x2 = x1.copy()
        x2[:, :, 8:] += rng.standard_normal((3, 5, 4))
        w = rng.standard_normal((6, 1, 3, 3))
        b = rng.standard_normal(6)
        y1 = causal_grouped_conv2d(x1, w, b, groups=3)
        y2 = causal_grouped_conv2d(x2, w, b, groups=3)
        assert np.array_equal(y1[:, :, :8], y2[:, :, :8])
        assert not np.array_equal(y1[:, :, 8:], y2[:, :, 8:])

    def test_group_divisibility(self):
        with pytest.raises(ValueError):
            causal_grouped_conv2d(np.zeros((3, 4, 4)), np.zeros((4, 1, 3, 3)), groups=2)

    def test_grouping_matches_blockwise(self):
        # Grouped conv equals running each group as its own dense conv.
        rng = np.random.default_rng(11)
        x = rng.standard_normal((4, 6, 7))
        w = rng.standard_normal((6, 2, 3, 3))
        y = causal_grouped_conv2d(x, w, groups=2)
        for g in range(2):
            yg = causal_grouped_conv2d(x[2*g:2*g+2], w[3*g:3*g+3], groups=1)
            assert y[3*g:3*g+3] == pytest.approx(yg, rel=1e-12)
