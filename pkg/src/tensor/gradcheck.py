"""梯度校验模块

以中心差分为预言，核对反向传播得到的解析梯度。
"""
import logging
from typing import Callable

import numpy as np

from src.tensor.tensor import GradTape, Tensor

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Tensor], Tensor]


def finite_difference_check(f: ScalarFn, x: Tensor, eps: float = 1e-5) -> float:
    """比较解析梯度与中心差分

    在 64 位精度下执行：x 被复制为 float64 的叶子张量，f 必须是确定性函数。

    Args:
        f: 张量 → 1×1×1×1 标量张量的函数
        x: 求梯度的位置
        eps: 差分步长，必须大于 0

    Returns:
        max |analytic − numeric| / max(1, |analytic|)
    """
    if eps <= 0:
        raise ValueError(f"差分步长必须大于 0，实际: {eps}")
    base = x.data.astype(np.float64)

    leaf = Tensor(base, requires_grad=True, dtype=np.float64)
    with GradTape() as tape:
        tape.watch([leaf])
        loss = f(leaf)
    analytic = tape.backward(loss, [leaf])[leaf.id].data

    numeric = np.zeros_like(base)
    probe = base.copy()
    for index in np.ndindex(*base.shape):
        original = probe[index]
        probe[index] = original + eps
        plus = f(Tensor(probe, dtype=np.float64)).item()
        probe[index] = original - eps
        minus = f(Tensor(probe, dtype=np.float64)).item()
        probe[index] = original
        numeric[index] = (plus - minus) / (2.0 * eps)

    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    max_error = float(error.max()) if error.size else 0.0
    logger.debug(f"梯度校验完成，元素数: {base.size}，最大相对误差: {max_error:.3e}")
    return max_error
