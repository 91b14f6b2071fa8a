"""检查点序列化

二进制布局（小端）：
    "DJSR" | u32 版本 | u64 头部长度 | UTF-8 头部（key=value 行）
    | 张量记录 × N（N 记录在头部 records 键）：u16 名称长度、名称、u8 维数、u64 × 维数、f32 原始数据

张量名称前缀：param/ 为网络参数，adam.m/ 与 adam.v/ 为 ADAM 矩估计。
"""
import io
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, Tuple, Union

import numpy as np

from src.errors import (CheckpointCorruptError, CheckpointShapeError,
                        CheckpointVersionError, ConfigError)
from src.model import ModelConfig, ModelParams, parameter_shapes
from src.tensor import Tensor
from src.training.config import TrainConfig
from src.training.optimizer import OptimState
from src.utils.file_manager import atomic_write_bytes

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"DJSR"
VERSION = 1

PARAM_PREFIX = "param/"
M_PREFIX = "adam.m/"
V_PREFIX = "adam.v/"


@dataclass
class Checkpoint:
    """训练快照"""
    model_config: ModelConfig
    train_config: TrainConfig
    step: int
    params: ModelParams
    state: OptimState


def _header_text(ckpt: Checkpoint, records: int) -> str:
    lines = ["format=djsr"]
    lines += [f"model.{key}={value}" for key, value in ckpt.model_config.to_mapping().items()]
    lines += [f"train.{key}={value!r}" if isinstance(value, float) else f"train.{key}={value}"
              for key, value in ckpt.train_config.to_mapping().items()]
    lines.append(f"step={ckpt.step}")
    lines.append(f"adam.t={ckpt.state.t}")
    lines.append("dtype=float32")
    lines.append(f"records={records}")
    return "\n".join(lines) + "\n"


def _records(ckpt: Checkpoint) -> Iterator[Tuple[str, np.ndarray]]:
    for name, tensor in ckpt.params.items():
        yield PARAM_PREFIX + name, tensor.data
    for name in ckpt.params:
        yield M_PREFIX + name, ckpt.state.m[name]
    for name in ckpt.params:
        yield V_PREFIX + name, ckpt.state.v[name]


def serialize(ckpt: Checkpoint) -> bytes:
    """编码为字节串"""
    header = _header_text(ckpt, 3 * len(ckpt.params)).encode('utf-8')
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack('<IQ', VERSION, len(header)))
    out.write(header)
    converted = 0
    for name, array in _records(ckpt):
        if array.dtype != np.float32:
            converted += 1
        encoded = name.encode('utf-8')
        out.write(struct.pack('<H', len(encoded)))
        out.write(encoded)
        out.write(struct.pack('<B', array.ndim))
        out.write(struct.pack(f'<{array.ndim}Q', *array.shape))
        out.write(np.ascontiguousarray(array, dtype='<f4').tobytes())
    if converted:
        logger.warning(f"检查点以 float32 存储，{converted} 个张量已从更高精度转换")
    return out.getvalue()


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> Path:
    """原子写出检查点"""
    path = Path(path)
    atomic_write_bytes(path, serialize(ckpt))
    logger.info(f"检查点已保存: {path}，step={ckpt.step}")
    return path


class _Reader:
    """带越界检查的顺序读取器"""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CheckpointCorruptError(f"检查点文件被截断: {self.source}（偏移 {self.pos}，需要 {size} 字节）")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos


def _parse_header(text: str, source: str) -> Dict[str, str]:
    header: Dict[str, str] = {}
    for line in text.splitlines():
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise CheckpointCorruptError(f"检查点头部格式错误: {source}，行: {line!r}")
        header[key] = value
    return header


def deserialize(data: bytes, source: str = "<bytes>") -> Checkpoint:
    """从字节串解码并校验

    Raises:
        CheckpointVersionError: 魔数或版本不匹配
        CheckpointCorruptError: 数据被截断或头部无法解析
        CheckpointShapeError: 张量集合或形状与模型配置不一致
    """
    if len(data) >= len(MAGIC) and data[:len(MAGIC)] != MAGIC:
        raise CheckpointVersionError(f"不是 DJSR 检查点（魔数 {data[:4]!r}）: {source}")
    reader = _Reader(data, source)
    reader.take(len(MAGIC))
    version, header_len = reader.unpack('<IQ')
    if version != VERSION:
        raise CheckpointVersionError(f"不支持的检查点版本 {version}（期望 {VERSION}）: {source}")
    try:
        header = _parse_header(reader.take(header_len).decode('utf-8'), source)
    except UnicodeDecodeError:
        raise CheckpointCorruptError(f"检查点头部不是合法的 UTF-8: {source}")

    try:
        model_config = ModelConfig.from_mapping(
            {k[len('model.'):]: v for k, v in header.items() if k.startswith('model.')})
        train_config = TrainConfig.from_mapping(
            {k[len('train.'):]: v for k, v in header.items() if k.startswith('train.')})
        step = int(header['step'])
        t = int(header['adam.t'])
        records = int(header['records'])
    except (ConfigError, KeyError, ValueError) as e:
        raise CheckpointCorruptError(f"检查点头部无法解析: {source}，{e}")

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(records):
        (name_len,) = reader.unpack('<H')
        name = reader.take(name_len).decode('utf-8', errors='replace')
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}Q')
        # 维数字段损坏时乘积可能极大，先与剩余字节数比较
        count = math.prod(shape)
        if 4 * count > reader.remaining:
            raise CheckpointCorruptError(
                f"检查点张量 {name} 声明 {count} 个元素，超出剩余的 {reader.remaining} 字节: {source}")
        tensors[name] = np.frombuffer(reader.take(4 * count), dtype='<f4').reshape(shape)
    if reader.remaining:
        raise CheckpointCorruptError(f"检查点在 {records} 条张量记录之后还有 {reader.remaining} 字节: {source}")

    dtype = train_config.np_dtype
    expected = parameter_shapes(model_config)
    params = ModelParams()
    m: Dict[str, np.ndarray] = {}
    v: Dict[str, np.ndarray] = {}
    for name, shape in expected.items():
        for prefix in (PARAM_PREFIX, M_PREFIX, V_PREFIX):
            key = prefix + name
            if key not in tensors:
                raise CheckpointShapeError(f"检查点缺少张量 {key}: {source}")
            if tensors[key].shape != shape:
                raise CheckpointShapeError(
                    f"检查点张量 {key} 形状 {tensors[key].shape} 与配置要求 {shape} 不一致: {source}")
        params[name] = Tensor._wrap(tensors[PARAM_PREFIX + name].astype(dtype))
        m[name] = tensors[M_PREFIX + name].astype(dtype)
        v[name] = tensors[V_PREFIX + name].astype(dtype)
    extra = len(tensors) - 3 * len(expected)
    if extra:
        raise CheckpointShapeError(f"检查点含 {extra} 个多余张量: {source}")
    return Checkpoint(model_config, train_config, step, params, OptimState(m, v, t))


def load_checkpoint(path: PathLike) -> Checkpoint:
    """读取并校验检查点"""
    path = Path(path)
    ckpt = deserialize(path.read_bytes(), str(path))
    logger.info(f"检查点已加载: {path}，step={ckpt.step}，参数量: {ckpt.params.total_size()}")
    return ckpt
