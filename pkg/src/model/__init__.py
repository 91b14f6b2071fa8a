"""模型模块 - 三阶段联合去马赛克与超分辨率网络"""

from .config import ModelConfig
from .inference import infer_tiled
from .network import (ModelParams, build, forward, param_count,
                      parameter_shapes, receptive_halo)

__all__ = [
    'ModelConfig',
    'ModelParams',
    'build',
    'forward',
    'infer_tiled',
    'param_count',
    'parameter_shapes',
    'receptive_halo',
]
