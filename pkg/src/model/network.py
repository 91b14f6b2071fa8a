"""联合去马赛克 + 超分辨率网络

三个阶段：
    1. 色彩提取：步长为 s、卷积核 2s×2s 的卷积 → pixel_shuffle(s) → 卷积 + PReLU
    2. 特征提取与非线性映射：n_b 个残差块（卷积–PReLU–卷积 + 恒等跳连，无批归一化）
    3. 重建：pixel_shuffle(r) → 卷积 + PReLU → 卷积到 3 通道（输出不裁剪）
"""
import logging
import math
from collections import OrderedDict
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ConfigError, DimensionError
from src.model.config import ModelConfig
from src.tensor import Tensor, add, conv2d, pixel_shuffle, prelu

logger = logging.getLogger(__name__)

Shape4 = Tuple[int, int, int, int]
Trace = List[Tuple[str, Shape4]]

PRELU_INIT = 0.25


def parameter_shapes(config: ModelConfig) -> "OrderedDict[str, Shape4]":
    """参数名 → 形状的有序映射（顺序即初始化时的随机数抽取顺序）"""
    c = config.c_filters
    s = config.cfa_period
    r = config.upscale
    k = config.res_kernel

    shapes: "OrderedDict[str, Shape4]" = OrderedDict()
    shapes['stage1.conv.weight'] = (c, 1, 2 * s, 2 * s)
    shapes['stage1.conv.bias'] = (1, c, 1, 1)
    shapes['stage1.post.weight'] = (c, c // (s * s), k, k)
    shapes['stage1.post.bias'] = (1, c, 1, 1)
    shapes['stage1.post.alpha'] = (1, c, 1, 1)
    for i in range(config.n_blocks):
        shapes[f'blocks.{i}.conv1.weight'] = (c, c, k, k)
        shapes[f'blocks.{i}.conv1.bias'] = (1, c, 1, 1)
        shapes[f'blocks.{i}.alpha'] = (1, c, 1, 1)
        shapes[f'blocks.{i}.conv2.weight'] = (c, c, k, k)
        shapes[f'blocks.{i}.conv2.bias'] = (1, c, 1, 1)
    shapes['stage3.post.weight'] = (c, c // (r * r), k, k)
    shapes['stage3.post.bias'] = (1, c, 1, 1)
    shapes['stage3.post.alpha'] = (1, c, 1, 1)
    shapes['stage3.out.weight'] = (3, c, k, k)
    shapes['stage3.out.bias'] = (1, 3, 1, 1)
    return shapes


class ModelParams(Dict[str, Tensor]):
    """命名参数表：参数名 → 张量

    bias 与 PReLU 系数以 (1, C, 1, 1) 的四阶张量存放。
    """

    def shapes(self) -> Dict[str, Shape4]:
        return {name: tensor.shape for name, tensor in self.items()}

    def total_size(self) -> int:
        return sum(tensor.size for tensor in self.values())

    def with_grad(self, requires_grad: bool = True) -> "ModelParams":
        """返回共享数据、requires_grad 标记不同的新参数表"""
        return ModelParams((name, Tensor._wrap(t.data, requires_grad)) for name, t in self.items())

    def astype(self, dtype) -> "ModelParams":
        return ModelParams((name, t.astype(dtype)) for name, t in self.items())

    def check_against(self, config: ModelConfig) -> None:
        """校验参数名与形状与配置一致

        Raises:
            ConfigError: 缺少参数、多余参数或形状不一致
        """
        expected = parameter_shapes(config)
        if list(self.keys()) != list(expected.keys()):
            missing = sorted(set(expected) - set(self))
            extra = sorted(set(self) - set(expected))
            raise ConfigError(f"参数表与配置不一致，缺少: {missing}，多余: {extra}")
        for name, shape in expected.items():
            if self[name].shape != shape:
                raise ConfigError(f"参数 {name} 形状 {self[name].shape} 与配置要求 {shape} 不一致")


def build(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """初始化网络参数

    权重取 He 正态分布（std = √(2 / fan_in)），bias 为零，PReLU 系数为 0.25；
    给定 (config, seed) 结果逐位确定。

    Args:
        config: 模型配置
        seed: 随机种子
        dtype: 参数元素类型

    Returns:
        初始化后的参数表
    """
    config.validate()
    rng = np.random.default_rng(seed)
    params = ModelParams()
    for name, shape in parameter_shapes(config).items():
        if name.endswith('.weight'):
            fan_in = shape[1] * shape[2] * shape[3]
            std = math.sqrt(2.0 / fan_in)
            values = rng.standard_normal(shape) * std
        elif name.endswith('.alpha'):
            values = np.full(shape, PRELU_INIT)
        else:
            values = np.zeros(shape)
        params[name] = Tensor._wrap(values.astype(dtype))
    logger.info(f"网络参数初始化完成，C={config.c_filters}，n_b={config.n_blocks}，参数量: {params.total_size()}")
    return params


def param_count(config: ModelConfig) -> int:
    """参数量的闭式表达"""
    c = config.c_filters
    s = config.cfa_period
    r = config.upscale
    k2 = config.res_kernel ** 2

    stage1 = c * (2 * s) ** 2 + c
    stage1_post = c * (c // (s * s)) * k2 + 2 * c
    block = 2 * (c * c * k2 + c) + c
    stage3_post = c * (c // (r * r)) * k2 + 2 * c
    stage3_out = 3 * c * k2 + 3
    return stage1 + stage1_post + config.n_blocks * block + stage3_post + stage3_out


def receptive_halo(config: ModelConfig) -> int:
    """输出像素依赖的输入范围半径（低分辨率像素，向上取整为 s 的倍数）"""
    s = config.cfa_period
    radius = config.res_kernel // 2
    halo = (3 * s) // 2 - 1
    halo += (1 + 2 * config.n_blocks) * radius
    halo += -(-2 * radius // config.upscale)
    return -(-halo // s) * s


def _trace(trace: Optional[Trace], name: str, tensor: Tensor) -> Tensor:
    if trace is not None:
        trace.append((name, tensor.shape))
    return tensor


def forward(params: ModelParams, config: ModelConfig, bayer: Tensor,
            trace: Optional[Trace] = None) -> Tensor:
    """前向计算 I^SR = F(I^Bayer)

    Args:
        params: 参数表
        config: 模型配置
        bayer: 形状 (n, 1, h, w)，h、w 可被 cfa_period 整除
        trace: 可选列表，按顺序追加 (层名, 输出形状)

    Returns:
        形状 (n, 3, r·h, r·w) 的线性输出（不裁剪）

    Raises:
        DimensionError: 输入不是单通道或尺寸不能被 cfa_period 整除
    """
    n, channels, h, w = bayer.shape
    s = config.cfa_period
    r = config.upscale
    pad = config.res_kernel // 2
    if channels != 1:
        raise DimensionError(f"Bayer 输入必须是单通道，实际通道数: {channels}")
    if h % s or w % s:
        raise DimensionError(f"Bayer 输入尺寸 {h}×{w} 不能被 CFA 周期 {s} 整除")

    # 阶段 1：色彩提取
    x = conv2d(bayer, params['stage1.conv.weight'], params['stage1.conv.bias'],
               stride=s, padding=s // 2)
    _trace(trace, 'stage1.conv', x)
    x = _trace(trace, 'stage1.shuffle', pixel_shuffle(x, s))
    x = conv2d(x, params['stage1.post.weight'], params['stage1.post.bias'], padding=pad)
    x = _trace(trace, 'stage1.post', prelu(x, params['stage1.post.alpha']))

    # 阶段 2：残差块
    for i in range(config.n_blocks):
        y = conv2d(x, params[f'blocks.{i}.conv1.weight'], params[f'blocks.{i}.conv1.bias'], padding=pad)
        y = prelu(y, params[f'blocks.{i}.alpha'])
        y = conv2d(y, params[f'blocks.{i}.conv2.weight'], params[f'blocks.{i}.conv2.bias'], padding=pad)
        x = _trace(trace, f'blocks.{i}', add(x, y))

    # 阶段 3：重建
    x = _trace(trace, 'stage3.shuffle', pixel_shuffle(x, r))
    x = conv2d(x, params['stage3.post.weight'], params['stage3.post.bias'], padding=pad)
    x = _trace(trace, 'stage3.post', prelu(x, params['stage3.post.alpha']))
    x = conv2d(x, params['stage3.out.weight'], params['stage3.out.bias'], padding=pad)
    return _trace(trace, 'stage3.out', x)
