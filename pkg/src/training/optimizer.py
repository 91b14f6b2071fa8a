"""ADAM 优化器与学习率调度

函数式实现：adam_step 返回新的参数表与优化器状态，不修改输入。
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from src.errors import ContractError
from src.model import ModelParams
from src.tensor import Tensor
from src.training.config import TrainConfig

logger = logging.getLogger(__name__)

GradLike = Union[Tensor, np.ndarray]


@dataclass
class OptimState:
    """ADAM 状态

    Attributes:
        m: 参数名 → 一阶矩
        v: 参数名 → 二阶矩
        t: 已执行的更新次数
    """
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimState":
        return cls(
            m={name: np.zeros(p.shape, dtype=p.dtype) for name, p in params.items()},
            v={name: np.zeros(p.shape, dtype=p.dtype) for name, p in params.items()},
            t=0,
        )


def lr_at(step: int, config: TrainConfig) -> float:
    """lr0 · 0.5^⌊step / halve_every⌋"""
    return config.lr0 * 0.5 ** (step // config.halve_every)


def _as_array(grad: GradLike) -> np.ndarray:
    return grad.data if isinstance(grad, Tensor) else np.asarray(grad)


def adam_step(params: ModelParams, grads: Mapping[str, GradLike], state: OptimState,
              lr: float, config: TrainConfig = TrainConfig()) -> Tuple[ModelParams, OptimState]:
    """一次带偏差修正的 ADAM 更新

    Args:
        params: 当前参数
        grads: 参数名 → 梯度，键集合必须与 params 一致
        state: 当前优化器状态
        lr: 本步学习率
        config: 提供 beta1、beta2、eps

    Returns:
        (新参数表, 新状态)，t 加 1

    Raises:
        ContractError: 缺少梯度、多余梯度、状态缺项或形状不一致
    """
    missing = [name for name in params if name not in grads]
    if missing:
        raise ContractError(f"缺少参数的梯度: {', '.join(missing)}")
    extra = [name for name in grads if name not in params]
    if extra:
        raise ContractError(f"梯度中含未知参数: {', '.join(extra)}")
    if set(state.m) != set(params) or set(state.v) != set(params):
        raise ContractError("优化器状态与参数表的键集合不一致")

    t = state.t + 1
    new_params = ModelParams()
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, param in params.items():
        p = param.data
        g = _as_array(grads[name])
        if g.shape != p.shape:
            raise ContractError(f"参数 {name} 的梯度形状 {g.shape} 与参数形状 {p.shape} 不一致")
        dt = p.dtype.type
        b1, b2 = dt(config.beta1), dt(config.beta2)
        m = b1 * state.m[name] + (dt(1) - b1) * g
        v = b2 * state.v[name] + (dt(1) - b2) * (g * g)
        m_hat = m / dt(1.0 - config.beta1 ** t)
        v_hat = v / dt(1.0 - config.beta2 ** t)
        updated = p - dt(lr) * m_hat / (np.sqrt(v_hat) + dt(config.eps))
        new_params[name] = Tensor._wrap(updated.astype(p.dtype, copy=False), param.requires_grad)
        new_m[name] = m.astype(p.dtype, copy=False)
        new_v[name] = v.astype(p.dtype, copy=False)
    return new_params, OptimState(new_m, new_v, t)
