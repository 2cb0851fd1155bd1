import numpy as np
import pytest
import torch

from rmtrainer.model import RadioMapNet, masked_mse


def test_output_shape_and_range():
    for res in (32, 64):
        torch.manual_seed(0)
        m = RadioMapNet(in_channels=5, resolution=res).eval()
        with torch.no_grad():
            out = m(torch.randn(2, 5, res, res))
        assert out.shape == (2, 32, 32)
        assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_rejects_resolutions_the_net_cannot_reduce():
    with pytest.raises(ValueError, match="power-of-two"):
        RadioMapNet(in_channels=3, resolution=96)
    with pytest.raises(ValueError, match="multiple of 32"):
        RadioMapNet(in_channels=3, resolution=48)


def test_param_count_positive_and_stable():
    torch.manual_seed(0)
    m = RadioMapNet(in_channels=4, resolution=32)
    assert m.param_count == sum(p.numel() for p in m.parameters())
    assert m.param_count > 10_000


def test_masked_mse_matches_manual_and_ignores_masked_pixels():
    torch.manual_seed(1)
    pred = torch.rand(3, 32, 32)
    target = torch.rand(3, 32, 32)
    mask = torch.rand(3, 32, 32) > 0.5
    loss = masked_mse(pred, target, mask)
    want = ((pred - target) ** 2)[mask].mean()
    assert torch.allclose(loss, want)

    # changing masked-out targets must not change the loss
    corrupted = torch.where(mask, target, torch.full_like(target, 123.0))
    assert torch.allclose(masked_mse(pred, corrupted, mask), loss)


def test_masked_pixels_get_exactly_zero_gradient():
    torch.manual_seed(2)
    pred = torch.rand(2, 32, 32, requires_grad=True)
    target = torch.rand(2, 32, 32)
    mask = torch.rand(2, 32, 32) > 0.5
    masked_mse(pred, target, mask).backward()
    assert pred.grad is not None
    assert torch.all(pred.grad[~mask] == 0.0)
    assert torch.any(pred.grad[mask] != 0.0)


def test_all_masked_batch_raises():
    with pytest.raises(ValueError, match="valid pixels"):
        masked_mse(torch.rand(1, 32, 32), torch.rand(1, 32, 32),
                   torch.zeros(1, 32, 32, dtype=torch.bool))
