"""基线模块 - 顺序去马赛克 + 双三次上采样"""

from .sequential import (SequentialPipeline, bicubic_upsample,
                         bilinear_demosaic, malvar_demosaic, run_sequential)

__all__ = [
    'SequentialPipeline',
    'bicubic_upsample',
    'bilinear_demosaic',
    'malvar_demosaic',
    'run_sequential',
]
