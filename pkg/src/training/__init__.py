"""训练模块 - 损失、ADAM、学习率调度、训练循环与检查点"""

from .checkpoint import (Checkpoint, deserialize, load_checkpoint,
                         save_checkpoint, serialize)
from .config import TrainConfig
from .losses import mse_loss
from .optimizer import OptimState, adam_step, lr_at
from .trainer import (Trainer, corpus_from_images, corpus_from_manifest,
                      train)

__all__ = [
    'Checkpoint',
    'OptimState',
    'TrainConfig',
    'Trainer',
    'adam_step',
    'corpus_from_images',
    'corpus_from_manifest',
    'deserialize',
    'load_checkpoint',
    'lr_at',
    'mse_loss',
    'save_checkpoint',
    'serialize',
    'train',
]
