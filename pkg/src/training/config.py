"""训练配置模块"""
import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping

import numpy as np

from src.errors import ConfigError

logger = logging.getLogger(__name__)

_DTYPES = {'float32': np.float32, 'float64': np.float64}


@dataclass(frozen=True)
class TrainConfig:
    """训练超参数

    Attributes:
        lr0: 初始学习率
        beta1: ADAM 一阶矩衰减
        beta2: ADAM 二阶矩衰减
        eps: ADAM 数值稳定项
        batch: 小批量大小
        halve_every: 学习率减半间隔（步）
        max_steps: 总训练步数
        seed: 随机种子（参数初始化与补丁流）
        dtype: 参数与激活的元素类型，'float32' 或 'float64'
        patch_size: Bayer 补丁边长
        val_every: 验证间隔（步），0 表示不验证
        val_patches: 验证补丁数
        checkpoint_every: 检查点间隔（步），0 表示只在结束时保存
        log_every: 日志间隔（步）
    """
    lr0: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch: int = 16
    halve_every: int = 10000
    max_steps: int = 20000
    seed: int = 0
    dtype: str = 'float32'
    patch_size: int = 64
    val_every: int = 500
    val_patches: int = 16
    checkpoint_every: int = 1000
    log_every: int = 100

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """校验取值范围

        Raises:
            ConfigError: 任一字段不合法
        """
        if not self.lr0 > 0:
            raise ConfigError(f"lr0 必须大于 0，实际: {self.lr0}")
        for name in ('beta1', 'beta2'):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"{name} 必须在 [0, 1) 内，实际: {value}")
        if not self.eps > 0:
            raise ConfigError(f"eps 必须大于 0，实际: {self.eps}")
        for name in ('batch', 'halve_every', 'patch_size', 'log_every'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} 必须是正整数，实际: {getattr(self, name)}")
        for name in ('max_steps', 'seed', 'val_every', 'val_patches', 'checkpoint_every'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} 不能为负，实际: {getattr(self, name)}")
        if self.dtype not in _DTYPES:
            raise ConfigError(f"dtype 必须是 {' 或 '.join(_DTYPES)}，实际: {self.dtype}")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "TrainConfig":
        """从键值映射构建（字符串值按字段类型转换）"""
        types = {f.name: f.type for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, value in values.items():
            if key not in types:
                raise ConfigError(f"未知的训练配置键: {key}")
            try:
                kwargs[key] = types[key](value)
            except (TypeError, ValueError):
                raise ConfigError(f"训练配置键 {key} 的值无法转换为 {types[key].__name__}: {value!r}")
        return cls(**kwargs)

    def to_mapping(self) -> Dict[str, Any]:
        return asdict(self)

    def replace(self, **changes: Any) -> "TrainConfig":
        values = self.to_mapping()
        values.update(changes)
        return TrainConfig(**values)
