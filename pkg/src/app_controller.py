"""应用程序控制器 - PyQt6版本"""
import logging
import sys
import threading
import time
import traceback
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from PyQt6.QtCore import QObject, pyqtSlot
from PyQt6.QtWidgets import QApplication, QMessageBox

from src.errors import (CheckpointError, DimensionError, DjsrError,
                        NumericError)
from src.gui.main_window import MainWindow
from src.imaging import Image, load_image, save_png
from src.model import infer_tiled
from src.training import load_checkpoint
from src.utils.file_manager import FileManager

ProgressCallback = Callable[[float, str], None]


def run_inference(checkpoint: str, bayer_path: str, output: str = "", tile: int = 0,
                  progress: Optional[ProgressCallback] = None) -> Path:
    """加载检查点并对单张 Bayer 图像推理，写出 8 位 PNG

    Args:
        checkpoint: 检查点路径
        bayer_path: 单通道 Bayer 图像路径
        output: 输出 PNG 路径；为空时在输入旁生成不冲突的文件名
        tile: 分块边长，0 表示整图推理
        progress: 进度回调 (百分比, 消息)

    Returns:
        实际写出的输出路径

    Raises:
        DimensionError: 输入不是单通道图像
    """
    report = progress or (lambda value, message: None)

    report(10, "加载检查点")
    ckpt = load_checkpoint(checkpoint)
    config = ckpt.model_config

    report(30, "读取 Bayer 输入")
    bayer = load_image(bayer_path)
    if bayer.channels != 1:
        raise DimensionError(f"推理输入必须是单通道 Bayer 图像，实际通道数: {bayer.channels}")

    report(40, f"开始推理: {bayer.height}×{bayer.width}，r={config.upscale}")
    started = time.perf_counter()
    result = infer_tiled(ckpt.params, config, bayer.plane(), tile or None)
    report(90, f"推理耗时 {time.perf_counter() - started:.2f} 秒")

    if output:
        target = Path(output)
    else:
        source = Path(bayer_path)
        target = FileManager.unique_path(source.parent / FileManager.generate_filename(source))
    files = FileManager()
    with files:
        files.register(target)
        save_png(Image.from_array(result), target, bits=8)
    return target


class AppController(QObject):
    """应用程序控制器类 - PyQt6版本"""

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        """初始化控制器

        Args:
            settings: 已合并的运行设置（tile 作为分块边长的初始值）
        """
        super().__init__()
        self.logger = logging.getLogger(__name__)
        self.settings = dict(settings or {})
        self._worker: Optional[threading.Thread] = None

        # 创建QApplication实例
        self.app = QApplication.instance() or QApplication(sys.argv)

        # GUI组件
        self.main_window = MainWindow()
        self.main_window.tile_spin.setValue(int(self.settings.get('tile') or 0))

        self._setup_connections()

    def _setup_connections(self):
        """设置信号槽连接"""
        self.main_window.inference_started.connect(self.handle_inference_started)

    @pyqtSlot(str, str, str, int)
    def handle_inference_started(self, checkpoint: str, bayer_path: str, output: str, tile: int):
        """处理推理开始信号，在新线程中执行推理"""
        self._worker = threading.Thread(target=self._inference_thread,
                                        args=(checkpoint, bayer_path, output, tile))
        self._worker.daemon = True
        self._worker.start()

    def _inference_thread(self, checkpoint: str, bayer_path: str, output: str, tile: int):
        """推理线程"""
        try:
            target = run_inference(checkpoint, bayer_path, output, tile, self._update_progress_gui)
            self._update_progress_gui(100, "输出已保存")
            self.logger.info(f"推理完成: {bayer_path} → {target}")
            self._update_inference_complete_gui(True, str(target))
        except Exception as e:
            friendly_msg = self._format_friendly_error(e)
            self.logger.error(friendly_msg)
            self._update_inference_complete_gui(False, friendly_msg)
            if not isinstance(e, DjsrError):
                traceback.print_exc()

    @staticmethod
    def _format_friendly_error(error: Exception) -> str:
        """将底层异常转化为更友好的提示文案"""
        if isinstance(error, CheckpointError):
            return f"检查点无法使用: {error}"
        if isinstance(error, DimensionError):
            return f"输入尺寸不符合模型要求: {error}"
        if isinstance(error, NumericError):
            return f"数值异常: {error}"
        if isinstance(error, OSError):
            return f"文件读写失败: {error}"
        return f"推理失败: {error}"

    def _update_progress_gui(self, value: float, message: str = ""):
        """线程安全的进度更新"""
        self.main_window.progress_updated.emit(value, message)

    def _update_status_gui(self, message: str, level: str = "info"):
        """线程安全的状态更新"""
        self.main_window.status_logged.emit(message, level)

    def _update_inference_complete_gui(self, success: bool, message: str = ""):
        """线程安全的推理完成更新"""
        self.main_window.inference_complete.emit(success, message)

    def wait(self, timeout: Optional[float] = None) -> bool:
        """等待推理线程结束，返回线程是否已结束"""
        if self._worker is None:
            return True
        self._worker.join(timeout)
        return not self._worker.is_alive()

    def run(self) -> int:
        """运行应用程序"""
        try:
            self.main_window.show()
            self._update_status_gui("应用程序启动完成")
            return self.app.exec()
        except Exception as e:
            QMessageBox.critical(None, "严重错误", f"应用程序运行失败: {str(e)}")
            traceback.print_exc()
            return 1

    def shutdown(self):
        """关闭应用程序"""
        try:
            if self._worker is not None and self._worker.is_alive():
                self.logger.warning("推理仍在进行，等待其结束")
                self.wait()
            self.main_window.close()
            self.app.quit()
        except Exception as e:
            self.logger.error(f"关闭应用程序时出错: {e}")
