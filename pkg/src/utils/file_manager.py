"""文件管理模块

负责配置文件解析、原子写入、内容哈希以及失败时的部分产物清理。
"""
import hashlib
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from src.errors import ConfigError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# 默认设置（模型与训练字段的默认值由各自的配置类提供）
DEFAULT_SETTINGS: Dict[str, Any] = {
    "preset": "desk",
    "cfa": "RGGB",
    "tile": 0,
    "log_level": "INFO",
}


def parse_config_text(text: str, source: str = "<text>") -> Dict[str, str]:
    """解析 `key = value` 格式的配置文本

    `#` 开头的行是注释，空行忽略，行尾 `#` 之后的内容同样视为注释。

    Raises:
        ConfigError: 行中缺少 `=` 或键名为空、重复
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}:{number} 缺少 '=': {raw!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"{source}:{number} 键名为空")
        if key in values:
            raise ConfigError(f"{source}:{number} 重复的键: {key}")
        values[key] = value
    return values


def load_config(path: Optional[PathLike], known_keys: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    """加载配置文件并与默认设置合并

    Args:
        path: 配置文件路径，None 时只返回默认设置
        known_keys: 允许的键集合（默认设置的键总是允许），None 表示不校验

    Returns:
        合并后的设置（文件中的值保持字符串，由调用方按字段类型转换）

    Raises:
        ConfigError: 文件不存在、格式错误或含未知键
    """
    settings: Dict[str, Any] = dict(DEFAULT_SETTINGS)
    if path is None:
        return settings
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"配置文件不存在: {path}")
    values = parse_config_text(path.read_text(encoding='utf-8'), str(path))
    if known_keys is not None:
        allowed = set(known_keys) | set(DEFAULT_SETTINGS)
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise ConfigError(f"配置文件 {path} 含未知键: {', '.join(unknown)}")
    # 合并默认设置
    settings.update(values)
    logger.debug(f"已加载配置文件: {path}，键数: {len(values)}")
    return settings


def sha256_files(*paths: PathLike) -> str:
    """按顺序拼接各文件字节后的 SHA-256 十六进制摘要"""
    digest = hashlib.sha256()
    for path in paths:
        with open(path, 'rb') as f:
            for chunk in iter(lambda: f.read(1 << 20), b''):
                digest.update(chunk)
    return digest.hexdigest()


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """先写临时文件再替换，读者不会看到写了一半的文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode('utf-8'))


def thread_count() -> int:
    """并行线程数：环境变量 DJSR_THREADS，缺省为 CPU 核数

    Raises:
        ConfigError: DJSR_THREADS 不是正整数
    """
    value = os.environ.get("DJSR_THREADS")
    if value is None or value.strip() == "":
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise ConfigError(f"DJSR_THREADS 必须是正整数，实际: {value!r}")
    if count < 1:
        raise ConfigError(f"DJSR_THREADS 必须是正整数，实际: {count}")
    return count


class FileManager:
    """输出文件管理器

    记录一次命令产生的输出；命令失败时调用 cleanup() 删除全部部分产物。
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self._created: List[Path] = []

    def register(self, path: PathLike) -> Path:
        """登记一个即将创建的输出（文件或目录）；已存在的路径不登记，失败时不会被删除"""
        path = Path(path)
        if not path.exists():
            self._created.append(path)
        return path

    @property
    def created(self) -> List[Path]:
        return list(self._created)

    def cleanup(self) -> None:
        """删除已登记的输出"""
        for path in reversed(self._created):
            try:
                if path.is_dir():
                    shutil.rmtree(path)
                elif path.exists():
                    path.unlink()
                else:
                    continue
                self.logger.warning(f"已删除部分产物: {path}")
            except OSError as e:
                self.logger.error(f"删除部分产物失败: {path}，{e}")
        self._created.clear()

    def commit(self) -> None:
        """命令成功，放弃清理记录"""
        self._created.clear()

    def __enter__(self) -> "FileManager":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            self.cleanup()
        else:
            self.commit()
        return False

    @staticmethod
    def generate_filename(source: PathLike, suffix: str = "_sr", extension: str = ".png") -> str:
        """由输入文件名生成输出文件名

        Args:
            source: 输入文件路径
            suffix: 追加在文件名主干后的后缀
            extension: 扩展名
        """
        return f"{Path(source).stem}{suffix}{extension}"

    @staticmethod
    def unique_path(path: PathLike) -> Path:
        """如果文件已存在，在主干后追加 _1、_2 … 直到不冲突"""
        path = Path(path)
        candidate = path
        counter = 1
        while candidate.exists():
            candidate = path.parent / f"{path.stem}_{counter}{path.suffix}"
            counter += 1
        return candidate
