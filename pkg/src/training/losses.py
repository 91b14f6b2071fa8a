"""损失函数"""
from src.errors import DimensionError
from src.tensor import Tensor, mul, scale, sub, sum_all


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """全部元素上的均方误差，返回 1×1×1×1 标量

    Raises:
        DimensionError: 形状不一致
    """
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss: 预测形状 {pred.shape} 与目标形状 {target.shape} 不一致")
    diff = sub(pred, target)
    return scale(sum_all(mul(diff, diff)), 1.0 / pred.size)
