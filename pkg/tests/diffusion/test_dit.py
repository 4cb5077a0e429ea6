import numpy as np
import pytest

from diffuma.autodiff import (
    Tensor,
    add,
    check_gradients,
    mul,
    sum_,
)
from diffuma.diffusion import Attention, DitBlock, FinalLayer, modulate
from diffuma.errors import ConfigError, DimensionError


def _tokens(shape: tuple[int, int, int], seed: int = 0) -> Tensor:
    return Tensor(np.random.default_rng(seed).normal(size=shape))


@pytest.mark.usefixtures("float64")
def test_modulate() -> None:
    x = Tensor(np.ones((2, 3, 4)))
    offset = Tensor(np.full((2, 4), 0.5))
    gain = Tensor(np.array([[1.0] * 4, [-1.0] * 4]))
    out = modulate(x, offset, gain).data
    np.testing.assert_array_equal(out[0], 2.5)
    np.testing.assert_array_equal(out[1], 0.5)


@pytest.mark.usefixtures("float64")
def test_fresh_block_is_identity() -> None:
    block = DitBlock(8, 6, 2, 2.0, np.random.default_rng(0))
    x = _tokens((3, 5, 8))
    c = _tokens((3, 6), seed=1)
    np.testing.assert_array_equal(block(x, c).data, x.data)


@pytest.mark.usefixtures("float64")
def test_open_gates_add_both_sublayers() -> None:
    dim = 8
    block = DitBlock(dim, 6, 2, 2.0, np.random.default_rng(0))
    assert block.adaln.bias is not None
    block.adaln.bias.data[2 * dim : 3 * dim] = 1
    block.adaln.bias.data[5 * dim :] = 1
    x = _tokens((2, 4, dim))
    c = Tensor(np.zeros((2, 6)))

    expected = add(x, block.attn(block.norm1(x)))
    expected = add(expected, block.mlp(block.norm2(expected)))
    np.testing.assert_allclose(
        block(x, c).data,
        expected.data,
        rtol=1e-6,
        atol=1e-12,
    )


@pytest.mark.usefixtures("float64")
def test_attention_is_permutation_equivariant() -> None:
    attention = Attention(8, 2, np.random.default_rng(0))
    x = _tokens((1, 5, 8))
    order = [4, 2, 0, 1, 3]
    permuted = attention(Tensor(x.data[:, order])).data
    np.testing.assert_allclose(
        permuted,
        attention(x).data[:, order],
        rtol=1e-10,
    )


def test_heads_must_divide_dim() -> None:
    with pytest.raises(ConfigError, match="must divide"):
        Attention(6, 4, np.random.default_rng(0))


def test_block_rejects_token_size() -> None:
    block = DitBlock(8, 6, 2, 2.0, np.random.default_rng(0))
    with pytest.raises(DimensionError, match="DiT block"):
        block(_tokens((1, 4, 6)), _tokens((1, 6)))


def test_final_layer_starts_at_zero() -> None:
    layer = FinalLayer(8, 6, 16, np.random.default_rng(0))
    out = layer(_tokens((2, 4, 8)), _tokens((2, 6)))
    assert out.shape == (2, 4, 16)
    np.testing.assert_array_equal(out.data, 0)


@pytest.mark.usefixtures("float64")
def test_block_gradients() -> None:
    rng = np.random.default_rng(3)
    block = DitBlock(4, 4, 2, 1.0, rng)
    block.adaln.weight.data[:] = rng.normal(scale=0.5, size=(4, 24))
    x = _tokens((2, 3, 4), seed=3)
    c = _tokens((2, 4), seed=4)
    weights = Tensor(rng.normal(size=(2, 3, 4)))
    error = check_gradients(
        lambda: sum_(mul(block(x, c), weights)),
        [x, c, *block.parameters()],
    )
    assert error < 1e-3  # noqa: PLR2004
