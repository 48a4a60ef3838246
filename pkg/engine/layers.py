"""
Layer primitives with analytic gradients.

Every function works on numpy arrays of any float dtype and returns arrays of
the same dtype. Backward functions take the upstream gradient and whatever the
forward pass needs to recompute local derivatives.
"""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def dense_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ kernel + bias


def dense_backward(dout: np.ndarray, x: np.ndarray, kernel: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dkernel, dbias)"""
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    return dout @ kernel.T, x2.T @ d2, d2.sum(axis=0)


def rowwise_dense(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """
    x @ kernel + bias evaluated with a fixed, row-independent accumulation
    order, so every output row is bit-identical whatever the other rows are.
    """
    acc = x[:, 0:1] * kernel[0]
    for j in range(1, kernel.shape[0]):
        acc = acc + x[:, j:j + 1] * kernel[j]
    return acc + bias


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def point_maxpool_forward(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise max over points: (n, k) -> (k,), plus the winning row per column"""
    winners = np.argmax(h, axis=0)
    return h[winners, np.arange(h.shape[1])], winners


def point_maxpool_backward(dpooled: np.ndarray, winners: np.ndarray, n: int) -> np.ndarray:
    # Ties resolved by argmax: the lowest point index takes the gradient
    dh = np.zeros((n, dpooled.shape[0]), dtype=dpooled.dtype)
    dh[winners, np.arange(dpooled.shape[0])] = dpooled
    return dh


def _windows(x: np.ndarray, k: int) -> np.ndarray:
    p = k // 2
    padded = np.pad(x, ((0, 0), (p, p), (p, p), (p, p)))
    return sliding_window_view(padded, (k, k, k), axis=(1, 2, 3))


def conv3d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """
    3D convolution, stride 1, zero 'same' padding.

    Args:
        x: (C, D, H, W) input volume
        kernel: (F, C, k, k, k) filters, k odd
        bias: (F,) biases

    Returns:
        (F, D, H, W) output volume
    """
    windows = _windows(x, kernel.shape[-1])
    out = np.tensordot(kernel, windows, axes=([1, 2, 3, 4], [0, 4, 5, 6]))
    return out + bias[:, None, None, None]


def conv3d_backward(dout: np.ndarray, x: np.ndarray, kernel: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dkernel, dbias)"""
    k = kernel.shape[-1]
    p = k // 2
    windows = _windows(x, k)
    dkernel = np.tensordot(dout, windows, axes=([1, 2, 3], [1, 2, 3]))
    dbias = dout.sum(axis=(1, 2, 3))

    _, d, h, w = x.shape
    dpadded = np.zeros((x.shape[0], d + 2 * p, h + 2 * p, w + 2 * p), dtype=dout.dtype)
    for a in range(k):
        for b in range(k):
            for c in range(k):
                dpadded[:, a:a + d, b:b + h, c:c + w] += np.tensordot(kernel[:, :, a, b, c], dout, axes=([0], [0]))
    dx = dpadded[:, p:p + d, p:p + h, p:p + w]
    return dx, dkernel, dbias


def _blocks(x: np.ndarray, window: int) -> np.ndarray:
    c, d = x.shape[0], x.shape[1] // window
    cropped = x[:, :d * window, :d * window, :d * window]
    blocks = cropped.reshape(c, d, window, d, window, d, window)
    return blocks.transpose(0, 1, 3, 5, 2, 4, 6).reshape(c, d, d, d, window ** 3)


def maxpool3d_forward(x: np.ndarray, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Non-overlapping cubic max-pool (stride = window). Cells beyond the last
    whole window are dropped.

    Returns:
        (pooled, argmax) where argmax indexes the flattened window
    """
    blocks = _blocks(x, window)
    winners = blocks.argmax(axis=-1)
    return np.take_along_axis(blocks, winners[..., None], axis=-1)[..., 0], winners


def maxpool3d_backward(dout: np.ndarray, winners: np.ndarray, input_shape: Tuple[int, ...], window: int) -> np.ndarray:
    c, d = dout.shape[0], dout.shape[1]
    dblocks = np.zeros(dout.shape + (window ** 3,), dtype=dout.dtype)
    np.put_along_axis(dblocks, winners[..., None], dout[..., None], axis=-1)
    dcropped = dblocks.reshape(c, d, d, d, window, window, window).transpose(0, 1, 4, 2, 5, 3, 6)
    dx = np.zeros(input_shape, dtype=dout.dtype)
    size = d * window
    dx[:, :size, :size, :size] = dcropped.reshape(c, size, size, size)
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def cross_entropy(logits: np.ndarray, label: int) -> Tuple[float, np.ndarray]:
    """Loss and d loss / d logits for a single example"""
    probs = softmax(logits)
    loss = -np.log(max(probs[label], np.finfo(probs.dtype).tiny))
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return float(loss), dlogits
