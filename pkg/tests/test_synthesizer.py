import pytest
import torch

from chronosynth.synthesizer import DirectOutputHead, MappingNetwork, PixelSynthesizer


class TestMappingNetwork:
    def test_deterministic(self):
        torch.manual_seed(0)
        net = MappingNetwork(16, 3)
        z = torch.randn(1, 16)
        torch.testing.assert_close(net(z), net(z))

    def test_layer_count(self):
        net = MappingNetwork(8, 3)
        assert len(net.layers) == 3

    def test_distinct_noise_gives_distinct_styles(self):
        torch.manual_seed(1)
        net = MappingNetwork(16, 3)
        z = torch.randn(2, 16)
        w = net(z)
        assert not torch.allclose(w[0], w[1])

    def test_dimension_mismatch_rejected(self):
        net = MappingNetwork(16, 3)
        with pytest.raises(ValueError, match="dimension"):
            net(torch.randn(1, 8))


class TestPixelSynthesizer:
    def _build(self, c_fea=8, out=3, style=8, n=6):
        torch.manual_seed(0)
        return PixelSynthesizer(c_fea, out, style, n_layers=n)

    def test_head_count_is_half_layer_count(self):
        synth = PixelSynthesizer(8, 3, 8, n_layers=14)
        assert len(synth.heads) == 7
        assert len(synth.layers) == 14

    def test_odd_layer_count_rejected(self):
        with pytest.raises(ValueError):
            PixelSynthesizer(8, 3, 8, n_layers=13)

    def test_output_shape(self):
        synth = self._build()
        out = synth(torch.randn(10, 16), torch.randn(10, 8), torch.randn(1, 8))
        assert out.shape == (10, 3)

    def test_accumulates_every_head(self):
        # the output is the sum of all head outputs: shifting any single
        # head's bias by delta shifts every pixel by exactly delta
        synth = self._build(n=6)
        enc, feat, w = torch.randn(4, 16), torch.randn(4, 8), torch.randn(1, 8)
        base = synth(enc, feat, w)
        for head in synth.heads:
            with torch.no_grad():
                head.bias.add_(0.25)
            shifted = synth(enc, feat, w)
            with torch.no_grad():
                head.bias.sub_(0.25)
            torch.testing.assert_close(shifted, base + 0.25, rtol=1e-5, atol=1e-6)

    def test_zeroing_one_head_changes_output(self):
        synth = self._build(n=4)
        enc, feat, w = torch.randn(5, 16), torch.randn(5, 8), torch.randn(1, 8)
        base = synth(enc, feat, w)
        with torch.no_grad():
            synth.heads[0].weight.zero_()
            synth.heads[0].bias.zero_()
        assert not torch.allclose(synth(enc, feat, w), base)


class TestDirectOutputHead:
    def test_ignores_encoding_and_style(self):
        torch.manual_seed(0)
        head = DirectOutputHead(8, 3)
        feat = torch.randn(5, 8)
        a = head(torch.randn(5, 16), feat, torch.randn(1, 8))
        b = head(torch.randn(5, 16), feat, torch.randn(1, 8))
        torch.testing.assert_close(a, b)
        assert a.shape == (5, 3)
