"""Layer semantics and spot gradient checks (the full sweep runs in acceptance)."""

import numpy as np
import pytest

import gradcheck
from scriptmix.nn.crnn import ResidualBlock
from scriptmix.nn.layers import ColumnMaxPool, Conv2d, MaxPool2d, ReLU, mask_widths
from scriptmix.nn.lstm import BiLstm, _sigmoid
from scriptmix.nn.optim import AdamW, MultiStepLr
from scriptmix.nn.tensor import Tensor


class TestConvTrivial:
    def test_identity_kernel(self):
        conv = Conv2d(1, 1, (1, 1), dtype=np.float64)
        conv.weight.data[...] = 1.0
        conv.bias.data[...] = 0.0
        x = np.random.default_rng(0).normal(size=(2, 1, 4, 5))
        assert np.allclose(conv.forward(x), x)

    def test_channel_mismatch(self):
        conv = Conv2d(2, 1, (1, 1))
        with pytest.raises(ValueError):
            conv.forward(np.zeros((1, 3, 4, 4), dtype=np.float32))


class TestReluTrivial:
    def test_all_negative(self):
        relu = ReLU()
        x = -np.abs(np.random.default_rng(1).normal(size=(3, 4)))
        assert (relu.forward(x) == 0).all()
        assert (relu.backward(np.ones_like(x)) == 0).all()


class TestColumnMaxPool:
    def test_h1_is_transpose(self):
        x = np.random.default_rng(2).normal(size=(2, 3, 1, 5))
        out = ColumnMaxPool().forward(x)
        assert out.shape == (2, 5, 3)
        assert np.array_equal(out, x[:, :, 0, :].transpose(0, 2, 1))

    def test_constant_column_routes_to_first_row(self):
        pool = ColumnMaxPool()
        x = np.ones((1, 1, 4, 2))
        pool.forward(x)
        dy = np.ones((1, 2, 1))
        dx = pool.backward(dy)
        assert (dx[0, 0, 0] == 1).all()
        assert (dx[0, 0, 1:] == 0).all()


class TestMaxPoolTieBreak:
    def test_first_in_window_order_wins(self):
        pool = MaxPool2d((2, 2))
        x = np.ones((1, 1, 2, 2))
        pool.forward(x)
        dx = pool.backward(np.ones((1, 1, 1, 1)))
        assert dx[0, 0, 0, 0] == 1
        assert dx.sum() == 1


class TestResidualBlock:
    def test_zero_convs_pass_shortcut_through_relu(self):
        rng = np.random.default_rng(3)
        blk = ResidualBlock(3, 3, rng, np.float64)
        blk.conv1.weight.data[...] = 0
        blk.conv1.bias.data[...] = 0
        blk.conv2.weight.data[...] = 0
        blk.conv2.bias.data[...] = 0
        x = rng.normal(size=(2, 3, 4, 6))
        widths = np.array([6, 6])
        out = blk.forward(x, widths, train=True)
        assert np.allclose(out, np.maximum(x, 0.0))

    def test_stacked_blocks_preserve_spatial_dims(self):
        rng = np.random.default_rng(4)
        b1 = ResidualBlock(2, 4, rng, np.float32)
        b2 = ResidualBlock(4, 4, rng, np.float32)
        x = rng.normal(size=(1, 2, 6, 9)).astype(np.float32)
        widths = np.array([9])
        y = b2.forward(b1.forward(x, widths, True), widths, True)
        assert y.shape == (1, 4, 6, 9)


class TestBiLstm:
    def test_zero_weights_zero_output(self):
        net = BiLstm(3, 2, 3, dtype=np.float64)
        for _, p in net.parameters():
            p.data[...] = 0.0
        x = np.random.default_rng(5).normal(size=(2, 4, 3))
        assert (net.forward(x) == 0).all()

    def test_single_timestep_matches_hand_cell(self):
        rng = np.random.default_rng(6)
        net = BiLstm(2, 2, 1, rng=rng, dtype=np.float64)
        x = rng.normal(size=(1, 1, 2))
        out = net.forward(x)
        # hand-computed single cell step per direction, h0 = c0 = 0
        for direction, off in ((net.layers[0][0], 0), (net.layers[0][1], 2)):
            gates = x[0, 0] @ direction.wx.data + direction.bias.data
            i = 1 / (1 + np.exp(-gates[:2]))
            f = 1 / (1 + np.exp(-gates[2:4]))
            g = np.tanh(gates[4:6])
            o = 1 / (1 + np.exp(-gates[6:]))
            c = i * g
            h = o * np.tanh(c)
            assert np.allclose(out[0, 0, off : off + 2], h, atol=1e-12)

    def test_length_masking(self):
        rng = np.random.default_rng(7)
        net = BiLstm(2, 3, 2, rng=rng, dtype=np.float64)
        x = rng.normal(size=(2, 5, 2))
        out = net.forward(x, np.array([5, 3]))
        assert (out[1, 3:] == 0).all()
        assert not (out[1, :3] == 0).all()


class TestSigmoid:
    def test_extreme_values(self):
        x = np.array([-1000.0, 0.0, 1000.0])
        s = _sigmoid(x)
        assert s[0] == 0.0 and s[1] == 0.5 and s[2] == 1.0


class TestMaskWidths:
    def test_masks_beyond_width(self):
        x = np.ones((2, 3, 4, 5), dtype=np.float32)
        m = mask_widths(x, np.array([5, 2]))
        assert (m[0] == 1).all()
        assert (m[1, :, :, :2] == 1).all()
        assert (m[1, :, :, 2:] == 0).all()


class TestAdamW:
    def test_matches_hand_stepped_adam_with_zero_decay(self):
        p = Tensor(np.array([1.5]))
        opt = AdamW([("p", p)], lr=0.1, weight_decay=0.0)
        grads = [0.3, -0.7, 0.2]
        # hand-stepped oracle
        val, m, v = 1.5, 0.0, 0.0
        for t, g in enumerate(grads, 1):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            mhat = m / (1 - 0.9**t)
            vhat = v / (1 - 0.999**t)
            val -= 0.1 * mhat / (np.sqrt(vhat) + 1e-8)
        for g in grads:
            p.zero_grad()
            p.grad[...] = g
            opt.step()
        assert p.data[0] == pytest.approx(val, abs=1e-12)

    def test_zero_gradient_gives_pure_decay(self):
        p = Tensor(np.array([2.0]))
        opt = AdamW([("p", p)], lr=0.1, weight_decay=0.05)
        p.zero_grad()
        opt.step()
        assert p.data[0] == pytest.approx(2.0 * (1 - 0.1 * 0.05))


class TestMultiStepLr:
    def test_paper_milestones(self):
        sched = MultiStepLr(5e-4, total_steps=1000)
        assert sched.lr_at(100) == pytest.approx(5e-4)
        assert sched.lr_at(600) == pytest.approx(5e-5)   # 60% of budget
        assert sched.lr_at(800) == pytest.approx(5e-6)   # 80% of budget
        assert sched.lr_at(1000) == pytest.approx(5e-6)


class TestSpotGradients:
    """One randomized instance per layer; the acceptance suite runs 20+."""

    def test_conv(self):
        assert gradcheck.check_conv(np.random.default_rng(10)) < 1e-4

    def test_batchnorm_train_and_eval(self):
        assert gradcheck.check_batchnorm(np.random.default_rng(11), train=True) < 1e-4
        assert gradcheck.check_batchnorm(np.random.default_rng(12), train=False) < 1e-4

    def test_maxpool(self):
        assert gradcheck.check_maxpool(np.random.default_rng(13)) < 1e-4

    def test_column_max_pool(self):
        assert gradcheck.check_column_max_pool(np.random.default_rng(14)) < 1e-4

    def test_linear(self):
        assert gradcheck.check_linear(np.random.default_rng(15)) < 1e-4

    def test_residual_block(self):
        assert gradcheck.check_residual_block(np.random.default_rng(16)) < 1e-4

    def test_bilstm(self):
        assert gradcheck.check_bilstm(np.random.default_rng(17)) < 1e-4
