"""色彩滤波阵列 (CFA) 定义"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from src.errors import ConfigError

R, G, B = 0, 1, 2

Pattern = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class CfaSpec:
    """周期性色彩滤波阵列

    Attributes:
        name: 名称
        pattern: period×period 的通道索引网格（0=R, 1=G, 2=B），pattern[y][x]
    """
    name: str
    pattern: Pattern

    def __post_init__(self) -> None:
        period = len(self.pattern)
        if period == 0 or any(len(row) != period for row in self.pattern):
            raise ConfigError(f"CFA {self.name} 的网格必须是非空方阵")
        values = {v for row in self.pattern for v in row}
        if not values <= {R, G, B}:
            raise ConfigError(f"CFA {self.name} 含非法通道索引: {sorted(values - {R, G, B})}")
        if values != {R, G, B}:
            raise ConfigError(f"CFA {self.name} 必须包含全部三个通道")

    @property
    def period(self) -> int:
        return len(self.pattern)

    @property
    def grid(self) -> np.ndarray:
        return np.array(self.pattern, dtype=np.intp)

    def channel_map(self, height: int, width: int) -> np.ndarray:
        """每个像素所采样的通道索引，形状 (height, width)"""
        s = self.period
        reps = (-(-height // s), -(-width // s))
        return np.tile(self.grid, reps)[:height, :width]

    def masks(self, height: int, width: int) -> np.ndarray:
        """三个通道的 0/1 采样掩码，形状 (3, height, width)"""
        index = self.channel_map(height, width)
        return np.stack([(index == c) for c in (R, G, B)]).astype(np.float64)

    @property
    def is_bayer(self) -> bool:
        return self.period == 2

    @classmethod
    def by_name(cls, name: str) -> "CfaSpec":
        key = name.upper().replace('-', '')
        if key not in PRESETS:
            raise ConfigError(f"未知的 CFA: {name}，可选: {', '.join(PRESETS)}")
        return PRESETS[key]


RGGB = CfaSpec('RGGB', ((R, G), (G, B)))
BGGR = CfaSpec('BGGR', ((B, G), (G, R)))
GRBG = CfaSpec('GRBG', ((G, R), (B, G)))
GBRG = CfaSpec('GBRG', ((G, B), (R, G)))
XTRANS = CfaSpec('XTRANS', (
    (G, G, R, G, G, B),
    (G, G, B, G, G, R),
    (B, R, G, R, B, G),
    (G, G, B, G, G, R),
    (G, G, R, G, G, B),
    (R, B, G, B, R, G),
))

PRESETS: Dict[str, CfaSpec] = {cfa.name: cfa for cfa in (RGGB, BGGR, GRBG, GBRG, XTRANS)}
