"""张量模块 - 四阶张量与反向模式自动微分"""

from .gradcheck import finite_difference_check
from .ops import (add, conv2d, conv_output_size, mean_all, mul, pixel_shuffle,
                  pixel_unshuffle, prelu, scale, sub, sum_all)
from .tensor import GradTape, Tensor, active_tape, backward

__all__ = [
    'GradTape',
    'Tensor',
    'active_tape',
    'add',
    'backward',
    'conv2d',
    'conv_output_size',
    'finite_difference_check',
    'mean_all',
    'mul',
    'pixel_shuffle',
    'pixel_unshuffle',
    'prelu',
    'scale',
    'sub',
    'sum_all',
]
