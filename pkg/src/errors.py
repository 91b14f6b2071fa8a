"""异常定义模块

所有异常均继承 DjsrError，同时继承最贴近的内建异常，
调用方既可以按项目异常捕获，也可以按内建类型捕获。
"""
from typing import Optional


class DjsrError(Exception):
    """项目异常基类"""


class DimensionError(DjsrError, ValueError):
    """形状或整除性不满足要求"""


class NumericError(DjsrError, ArithmeticError):
    """运算结果出现 NaN/Inf

    Attributes:
        step: 训练中止时的步数，非训练场景为 None
    """

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class ConfigError(DjsrError, ValueError):
    """配置不合法"""


class ContractError(DjsrError, RuntimeError):
    """调用约定被破坏"""


class CheckpointError(DjsrError, IOError):
    """检查点读写失败"""


class CheckpointCorruptError(CheckpointError):
    """检查点文件损坏或被截断"""


class CheckpointVersionError(CheckpointError):
    """检查点魔数或版本不匹配"""


class CheckpointShapeError(CheckpointError):
    """检查点中的张量形状与配置不一致"""


class ManifestError(DjsrError, IOError):
    """数据集清单缺失、格式错误或哈希不匹配"""


class UnsupportedCfaError(DjsrError, ValueError):
    """基线算法不支持该 CFA"""
