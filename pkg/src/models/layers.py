"""
Layer primitives for the fixed conv/dense network family.

Activations are batched and channels-last: conv inputs are (batch, height, width, channels),
dense inputs are (batch, features). Convolutions use valid padding.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_output_size(size, kernel, stride):
    return (size - kernel) // stride + 1


def _windows(x, kernel, stride):
    # (B, H', W', C, kh, kw) with H' = conv_output_size(H, kernel, stride)
    win = sliding_window_view(x, (kernel, kernel), axis=(1, 2))
    return win[:, ::stride, ::stride]


def conv2d_forward(x, weight, bias, stride):
    """
    @param x Input of shape (B, H, W, Cin).
    @param weight Filters of shape (k, k, Cin, Cout).
    @return Pre-activation of shape (B, H', W', Cout).
    """
    kernel = weight.shape[0]
    win = _windows(x, kernel, stride)
    return np.einsum("bhwcij,ijco->bhwo", win, weight, optimize=True) + bias


def conv2d_backward(x, weight, stride, d_out):
    """
    @param d_out Gradient w.r.t. the pre-activation, shape (B, H', W', Cout).
    @return (d_x, d_weight, d_bias)
    """
    kernel = weight.shape[0]
    win = _windows(x, kernel, stride)
    d_weight = np.einsum("bhwcij,bhwo->ijco", win, d_out, optimize=True)
    d_bias = d_out.sum(axis=(0, 1, 2))

    d_x = np.zeros_like(x)
    out_h, out_w = d_out.shape[1], d_out.shape[2]
    for i in range(kernel):
        for j in range(kernel):
            d_x[:, i : i + stride * out_h : stride, j : j + stride * out_w : stride, :] += (
                d_out @ weight[i, j].T
            )
    return d_x, d_weight, d_bias


def dense_forward(x, weight, bias):
    return x @ weight + bias


def dense_backward(x, weight, d_out):
    return d_out @ weight.T, x.T @ d_out, d_out.sum(axis=0)


def relu(z):
    return np.maximum(z, 0)


def relu_backward(z, d_out):
    return d_out * (z > 0)
