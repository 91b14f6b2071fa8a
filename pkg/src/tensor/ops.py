"""张量运算模块

实现网络所需的全部可微运算：conv2d、pixel_shuffle / pixel_unshuffle、prelu，
以及组合 loss 所需的逐元素运算与归约。每个运算在存在活动梯度带且任一输入
requires_grad 时记录梯度规则；任何运算产生非有限值时立即抛出 NumericError。
"""
import logging
from typing import Optional, Sequence

import numpy as np

from src.errors import DimensionError
from src.tensor.tensor import GradFn, Tensor, active_tape, check_finite

logger = logging.getLogger(__name__)


def _finish(op: str, out: np.ndarray, inputs: Sequence[Tensor], grad_fn: GradFn) -> Tensor:
    """检查结果并在需要时记录到活动梯度带"""
    check_finite(out, op)
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    result = Tensor._wrap(out, requires_grad=needs_grad)
    if needs_grad:
        tape.record(op, inputs, result, grad_fn)
    return result


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: 形状不一致 {a.shape} vs {b.shape}")


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """卷积输出尺寸 ⌊(size + 2·padding − kernel) / stride⌋ + 1"""
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(input: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """二维互相关（不翻转卷积核）

    按卷积核偏移 (i, j) 分解为 kh·kw 次通道维矩阵乘并按固定顺序累加，
    因此结果与输入的空间尺寸、分块方式无关。

    Args:
        input: 形状 (n, ci, h, w)
        weight: 形状 (co, ci, kh, kw)
        bias: 形状 (1, co, 1, 1)，可为 None
        stride: 步长，正整数
        padding: 四周零填充宽度，非负整数

    Returns:
        形状 (n, co, h', w') 的张量，h' = ⌊(h + 2p − kh) / stride⌋ + 1

    Raises:
        DimensionError: 通道数不匹配、卷积核大于填充后的输入或参数非法
    """
    n, ci, h, w = input.shape
    co, wci, kh, kw = weight.shape
    if wci != ci:
        raise DimensionError(f"conv2d: 输入通道 {ci} 与卷积核通道 {wci} 不一致")
    if stride < 1 or padding < 0:
        raise DimensionError(f"conv2d: 非法的 stride={stride} 或 padding={padding}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise DimensionError(f"conv2d: 卷积核 {kh}×{kw} 大于填充后的输入 {h}×{w} (padding={padding})")
    if bias is not None and bias.size != co:
        raise DimensionError(f"conv2d: bias 长度 {bias.size} 与输出通道 {co} 不一致")

    ho = conv_output_size(h, kh, stride, padding)
    wo = conv_output_size(w, kw, stride, padding)
    x = input.data
    wt = weight.data
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))

    def window(i: int, j: int) -> np.ndarray:
        return x[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride]

    out = np.zeros((n, co, ho, wo), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols = window(i, j).reshape(n, ci, ho * wo)
            out += np.matmul(wt[:, :, i, j], cols).reshape(n, co, ho, wo)
    if bias is not None:
        out += bias.data.reshape(1, co, 1, 1)

    def grad_fn(g: np.ndarray):
        g_flat = g.reshape(n, co, ho * wo)
        grad_x = np.zeros_like(x) if input.requires_grad else None
        grad_w = np.zeros_like(wt) if weight.requires_grad else None
        for i in range(kh):
            for j in range(kw):
                if grad_w is not None:
                    cols = window(i, j).reshape(n, ci, ho * wo)
                    grad_w[:, :, i, j] = np.tensordot(g_flat, cols, axes=([0, 2], [0, 2]))
                if grad_x is not None:
                    contrib = np.matmul(wt[:, :, i, j].T, g_flat).reshape(n, ci, ho, wo)
                    grad_x[:, :, i:i + stride * (ho - 1) + 1:stride,
                           j:j + stride * (wo - 1) + 1:stride] += contrib
        if grad_x is not None and padding:
            grad_x = grad_x[:, :, padding:padding + h, padding:padding + w]
        grad_b = None
        if bias is not None and bias.requires_grad:
            grad_b = g.sum(axis=(0, 2, 3)).reshape(bias.shape)
        return grad_x, grad_w, grad_b

    inputs = [input, weight] + ([bias] if bias is not None else [])
    return _finish("conv2d", out, inputs, grad_fn)


def _shuffle_array(x: np.ndarray, s: int) -> np.ndarray:
    n, c, h, w = x.shape
    co = c // (s * s)
    # 输入通道 k = (s·dy + dx)·co + c
    return x.reshape(n, s, s, co, h, w).transpose(0, 3, 4, 1, 5, 2).reshape(n, co, h * s, w * s)


def _unshuffle_array(x: np.ndarray, s: int) -> np.ndarray:
    n, c, hs, ws = x.shape
    h, w = hs // s, ws // s
    return x.reshape(n, c, h, s, w, s).transpose(0, 3, 5, 1, 2, 4).reshape(n, s * s * c, h, w)


def pixel_shuffle(input: Tensor, s: int) -> Tensor:
    """亚像素重排 (n, C, h, w) → (n, C/s², s·h, s·w)

    out(x, y, c) = in(⌊x/s⌋, ⌊y/s⌋, (C/s)·mod(y, s) + (C/s²)·mod(x, s) + c)，
    其中 x 为列坐标、y 为行坐标。纯重排，梯度为逆重排。

    Raises:
        DimensionError: C 不能被 s² 整除
    """
    if s < 1:
        raise DimensionError(f"pixel_shuffle: 非法的因子 s={s}")
    channels = input.shape[1]
    if channels % (s * s):
        raise DimensionError(f"pixel_shuffle: 通道数 {channels} 不能被 {s}² 整除")
    out = _shuffle_array(input.data, s)
    return _finish("pixel_shuffle", out, [input], lambda g: (_unshuffle_array(g, s),))


def pixel_unshuffle(input: Tensor, s: int) -> Tensor:
    """pixel_shuffle 的精确逆运算 (n, C, s·h, s·w) → (n, C·s², h, w)

    Raises:
        DimensionError: 空间尺寸不能被 s 整除
    """
    if s < 1:
        raise DimensionError(f"pixel_unshuffle: 非法的因子 s={s}")
    _, _, h, w = input.shape
    if h % s or w % s:
        raise DimensionError(f"pixel_unshuffle: 空间尺寸 {h}×{w} 不能被 {s} 整除")
    out = _unshuffle_array(input.data, s)
    return _finish("pixel_unshuffle", out, [input], lambda g: (_shuffle_array(g, s),))


def prelu(input: Tensor, alpha: Tensor) -> Tensor:
    """参数化 ReLU：x ≥ 0 时为 x，否则为 alpha_c·x

    Args:
        input: 形状 (n, c, h, w)
        alpha: 每通道一个系数，形状 (1, c, 1, 1)

    Raises:
        DimensionError: alpha 长度与通道数不一致
    """
    channels = input.shape[1]
    if alpha.size != channels:
        raise DimensionError(f"prelu: alpha 长度 {alpha.size} 与通道数 {channels} 不一致")
    x = input.data
    a = alpha.data.reshape(1, channels, 1, 1)
    positive = x >= 0
    out = np.where(positive, x, a * x)

    def grad_fn(g: np.ndarray):
        grad_x = np.where(positive, g, a * g) if input.requires_grad else None
        grad_a = None
        if alpha.requires_grad:
            grad_a = np.where(positive, 0, g * x).sum(axis=(0, 2, 3)).reshape(alpha.shape)
        return grad_x, grad_a

    return _finish("prelu", out, [input, alpha], grad_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    """逐元素加法（形状必须一致）"""
    _require_same_shape("add", a, b)
    return _finish("add", a.data + b.data, [a, b], lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    """逐元素减法（形状必须一致）"""
    _require_same_shape("sub", a, b)
    return _finish("sub", a.data - b.data, [a, b], lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """逐元素乘法（形状必须一致）"""
    _require_same_shape("mul", a, b)
    x, y = a.data, b.data
    return _finish("mul", x * y, [a, b], lambda g: (g * y, g * x))


def scale(a: Tensor, k: float) -> Tensor:
    """乘以实数常量"""
    factor = a.dtype.type(k)
    return _finish("scale", a.data * factor, [a], lambda g: (g * factor,))


def sum_all(a: Tensor) -> Tensor:
    """全部元素求和，得到 1×1×1×1 标量"""
    shape = a.shape
    out = np.asarray(a.data.sum(dtype=a.dtype), dtype=a.dtype).reshape(1, 1, 1, 1)
    return _finish("sum_all", out, [a], lambda g: (np.broadcast_to(g.reshape(()), shape).copy(),))


def mean_all(a: Tensor) -> Tensor:
    """全部元素求平均，得到 1×1×1×1 标量"""
    return scale(sum_all(a), 1.0 / a.size)
