"""张量与梯度带模块

提供四阶稠密张量 (n, c, h, w) 与反向模式自动微分所需的梯度带。
张量数据在构造后只读；所有运算产生新的张量。
"""
import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.errors import ContractError, DimensionError, NumericError

logger = logging.getLogger(__name__)

# 类型别名定义
Shape4 = Tuple[int, int, int, int]
GradFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_SUPPORTED_DTYPES = (np.float32, np.float64)
_id_counter = itertools.count(1)
_local = threading.local()


def check_finite(array: np.ndarray, op_name: str) -> None:
    """检查数组中是否全为有限值

    Args:
        array: 待检查数组
        op_name: 产生该数组的运算名，用于错误消息

    Raises:
        NumericError: 出现 NaN 或 Inf 时
    """
    if not np.isfinite(array).all():
        raise NumericError(f"运算 {op_name} 产生了非有限值 (NaN/Inf)")


class Tensor:
    """四阶稠密张量

    Attributes:
        data: 形状为 (n, c, h, w) 的只读 numpy 数组（行主序，w 变化最快）
        requires_grad: 是否参与梯度计算
        id: 进程内唯一的整数标识，梯度映射以此为键
    """

    __slots__ = ("data", "requires_grad", "id", "_tape")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        array = np.array(data, dtype=dtype, copy=True)
        if dtype is None and array.dtype not in _SUPPORTED_DTYPES:
            array = array.astype(np.float32)
        self._init(array, requires_grad)
        check_finite(self.data, "Tensor")

    def _init(self, array: np.ndarray, requires_grad: bool) -> None:
        if array.ndim != 4:
            raise DimensionError(f"张量必须是四阶 (n, c, h, w)，实际维数: {array.ndim}")
        if array.dtype not in _SUPPORTED_DTYPES:
            raise DimensionError(f"不支持的元素类型: {array.dtype}")
        array.flags.writeable = False
        self.data: np.ndarray = array
        self.requires_grad: bool = bool(requires_grad)
        self.id: int = next(_id_counter)
        self._tape: Optional["GradTape"] = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """包装运算内部新建的数组（不复制）"""
        tensor = cls.__new__(cls)
        tensor._init(np.ascontiguousarray(array), requires_grad)
        return tensor

    @classmethod
    def zeros(cls, shape: Shape4, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return cls._wrap(np.zeros(shape, dtype=dtype), requires_grad)

    @classmethod
    def ones(cls, shape: Shape4, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return cls._wrap(np.ones(shape, dtype=dtype), requires_grad)

    @property
    def shape(self) -> Shape4:
        return self.data.shape  # type: ignore[return-value]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """返回数据的可写副本"""
        return self.data.copy()

    def item(self) -> float:
        """返回标量张量的值"""
        if self.size != 1:
            raise ContractError(f"只有标量张量可以取值，当前形状: {self.shape}")
        return float(self.data.reshape(-1)[0])

    def astype(self, dtype) -> "Tensor":
        """转换元素类型（结果不参与梯度带）"""
        return Tensor._wrap(self.data.astype(dtype), self.requires_grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


@dataclass
class TapeEntry:
    """梯度带中的一条运算记录"""
    op: str
    input_ids: Tuple[int, ...]
    output_id: int
    grad_fn: GradFn


@dataclass
class GradTape:
    """梯度带

    按执行顺序记录运算，天然满足拓扑序；backward 以逆序恰好访问每条记录一次。
    一个梯度带只服务于一次训练步，不可在并发的训练步之间共享。

    Example:
        >>> with GradTape() as tape:
        ...     loss = sum_all(mul(x, x))
        >>> grads = tape.backward(loss)
    """
    entries: List[TapeEntry] = field(default_factory=list)
    watched: Dict[int, Tensor] = field(default_factory=dict)
    produced: Set[int] = field(default_factory=set)

    def __enter__(self) -> "GradTape":
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def watch(self, tensors: Iterable[Tensor]) -> None:
        """显式登记需要求梯度的张量（未被使用时梯度为零）"""
        for tensor in tensors:
            if tensor.requires_grad:
                self.watched[tensor.id] = tensor

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, grad_fn: GradFn) -> None:
        """记录一次运算

        Args:
            op: 运算名
            inputs: 输入张量
            output: 输出张量
            grad_fn: 给定上游梯度返回各输入梯度的函数（不可微输入返回 None）
        """
        # 只自动登记叶子张量，中间结果由某条记录产生
        for tensor in inputs:
            if tensor.requires_grad and tensor.id not in self.produced and tensor.id not in self.watched:
                self.watched[tensor.id] = tensor
        self.produced.add(output.id)
        output._tape = self
        self.entries.append(TapeEntry(op, tuple(t.id for t in inputs), output.id, grad_fn))

    def backward(self, loss: Tensor, sources: Optional[Iterable[Tensor]] = None) -> Dict[int, Tensor]:
        """反向传播

        Args:
            loss: 形状为 1×1×1×1 的标量张量
            sources: 需要返回梯度的张量；默认为登记过的叶子张量

        Returns:
            张量 id → 梯度张量的映射；未被 loss 触及的张量梯度为零

        Raises:
            ContractError: loss 不是标量或未连接到梯度带
        """
        if loss.shape != (1, 1, 1, 1):
            raise ContractError(f"loss 必须是 1×1×1×1 标量，实际形状: {loss.shape}")
        if not loss.requires_grad:
            raise ContractError("loss 未连接到梯度带，无法反向传播")

        targets = list(sources) if sources is not None else list(self.watched.values())
        target_ids = {tensor.id for tensor in targets}

        grads: Dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
        for entry in reversed(self.entries):
            upstream = grads.get(entry.output_id)
            if upstream is None:
                continue
            # 中间结果的梯度用完即释放，只保留目标张量的梯度
            if entry.output_id not in target_ids:
                del grads[entry.output_id]
            input_grads = entry.grad_fn(upstream)
            for input_id, grad in zip(entry.input_ids, input_grads):
                if grad is None:
                    continue
                check_finite(grad, f"{entry.op}.backward")
                if input_id in grads:
                    grads[input_id] = grads[input_id] + grad
                else:
                    grads[input_id] = grad

        result: Dict[int, Tensor] = {}
        for tensor in targets:
            grad = grads.get(tensor.id)
            if grad is None:
                grad = np.zeros_like(tensor.data)
            result[tensor.id] = Tensor._wrap(grad.astype(tensor.dtype, copy=False))
        logger.debug(f"反向传播完成，运算数: {len(self.entries)}，梯度数: {len(result)}")
        return result


def _tape_stack() -> List[GradTape]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> Optional[GradTape]:
    """返回当前线程中活动的梯度带（没有则为 None）"""
    stack = _tape_stack()
    return stack[-1] if stack else None


def backward(loss: Tensor, sources: Optional[Iterable[Tensor]] = None) -> Dict[int, Tensor]:
    """对 loss 所在的梯度带执行反向传播

    Raises:
        ContractError: loss 不是标量或未连接到任何梯度带
    """
    if loss.shape != (1, 1, 1, 1):
        raise ContractError(f"loss 必须是 1×1×1×1 标量，实际形状: {loss.shape}")
    tape = loss._tape
    if tape is None:
        raise ContractError("loss 未连接到梯度带，无法反向传播")
    return tape.backward(loss, sources)
