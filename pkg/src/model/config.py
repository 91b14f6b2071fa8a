"""模型配置模块"""
import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping

from src.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    """网络结构超参数

    Attributes:
        c_filters: 滤波器数 C
        n_blocks: 残差块数 n_b
        cfa_period: CFA 周期 s（Bayer 为 2，X-trans 为 6）
        upscale: 放大倍数 r
        res_kernel: 残差块及重建层的卷积核尺寸（奇数）
    """
    c_filters: int = 32
    n_blocks: int = 4
    cfa_period: int = 2
    upscale: int = 2
    res_kernel: int = 3

    # 预设
    PRESETS = {
        'desk': {'c_filters': 32, 'n_blocks': 4},
        'paper': {'c_filters': 256, 'n_blocks': 24},
    }

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """校验整除性等约束

        Raises:
            ConfigError: 任一约束不满足
        """
        for name in ('c_filters', 'cfa_period', 'upscale', 'res_kernel'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} 必须是正整数，实际: {value!r}")
        if not isinstance(self.n_blocks, int) or self.n_blocks < 0:
            raise ConfigError(f"n_blocks 必须是非负整数，实际: {self.n_blocks!r}")
        if self.res_kernel % 2 == 0:
            raise ConfigError(f"res_kernel 必须是奇数，实际: {self.res_kernel}")
        if self.cfa_period % 2:
            raise ConfigError(f"cfa_period 必须是偶数（步长卷积需要 s/2 的对称填充），实际: {self.cfa_period}")
        s2 = self.cfa_period ** 2
        r2 = self.upscale ** 2
        if self.c_filters % s2:
            raise ConfigError(f"c_filters={self.c_filters} 不能被 cfa_period²={s2} 整除")
        if self.c_filters % r2:
            raise ConfigError(f"c_filters={self.c_filters} 不能被 upscale²={r2} 整除")

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "ModelConfig":
        """按名称构建预设配置

        Args:
            name: 'desk' 或 'paper'
            **overrides: 覆盖预设中的字段
        """
        if name not in cls.PRESETS:
            raise ConfigError(f"未知的预设: {name}，可选: {', '.join(cls.PRESETS)}")
        values = dict(cls.PRESETS[name])
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ModelConfig":
        """从键值映射构建（字符串值按字段类型转换）"""
        known = {f.name for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"未知的模型配置键: {key}")
            try:
                kwargs[key] = int(value)
            except (TypeError, ValueError):
                raise ConfigError(f"模型配置键 {key} 的值无法转换为整数: {value!r}")
        return cls(**kwargs)

    def to_mapping(self) -> Dict[str, int]:
        return asdict(self)
