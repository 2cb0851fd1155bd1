import numpy as np
import pytest

from rmtrainer.tensorio import (
    TensorFormatError,
    read_tensor,
    scale_to_unit,
    unscale_from_unit,
    write_tensor,
)


def test_roundtrip_rank2_and_rank3(tmp_path):
    for shape in [(32, 32), (7, 16, 16), (0, 4)]:
        arr = np.arange(np.prod(shape), dtype=np.float32).reshape(shape)
        p = tmp_path / "t.rmtf"
        write_tensor(p, arr)
        back = read_tensor(p)
        assert back.shape == shape
        assert np.array_equal(back, arr)


def test_rejects_bad_magic_and_truncation(tmp_path):
    p = tmp_path / "t.rmtf"
    write_tensor(p, np.ones((4, 4), dtype=np.float32))
    raw = p.read_bytes()

    (tmp_path / "bad.rmtf").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(TensorFormatError, match="magic"):
        read_tensor(tmp_path / "bad.rmtf")

    (tmp_path / "short.rmtf").write_bytes(raw[:-8])
    with pytest.raises(TensorFormatError, match="payload"):
        read_tensor(tmp_path / "short.rmtf")

    (tmp_path / "hdr.rmtf").write_bytes(raw[:6])
    with pytest.raises(TensorFormatError, match="truncated"):
        read_tensor(tmp_path / "hdr.rmtf")


def test_scaling_roundtrip_and_clamp():
    db = np.array([-71.0, -41.5, -12.0])
    u = scale_to_unit(db)
    assert np.allclose(u, [0.0, 0.5, 1.0])
    assert np.allclose(unscale_from_unit(u), db)
    # out-of-range inputs clamp before scaling
    assert scale_to_unit(-100.0) == 0.0
    assert scale_to_unit(5.0) == 1.0
