"""主窗口GUI模块 - PyQt6版本"""
import datetime
import os
from typing import Optional

from PyQt6.QtCore import Qt, pyqtSignal, pyqtSlot
from PyQt6.QtGui import QFont, QPixmap
from PyQt6.QtWidgets import (QFileDialog, QFormLayout, QGroupBox, QHBoxLayout,
                             QLabel, QLineEdit, QMainWindow, QMessageBox,
                             QProgressBar, QPushButton, QSpinBox, QTextEdit,
                             QVBoxLayout, QWidget)

from src import __version__


class MainWindow(QMainWindow):
    """主窗口类 - PyQt6版本"""

    # 定义信号
    inference_started = pyqtSignal(str, str, str, int)  # checkpoint, input, output, tile
    progress_updated = pyqtSignal(float, str)  # value, message
    inference_complete = pyqtSignal(bool, str)  # success, output path or message
    status_logged = pyqtSignal(str, str)  # message, level

    def __init__(self):
        """初始化主窗口"""
        super().__init__()

        # 状态变量
        self.is_running = False

        self.setup_window()
        self.init_ui()
        self.setup_connections()

        self.log_status("应用程序已启动，请选择检查点与 Bayer 输入")

    def setup_window(self):
        """设置窗口属性"""
        self.setWindowTitle("Bayer 联合去马赛克与超分辨率")
        self.setGeometry(100, 100, 900, 700)

    def init_ui(self):
        """初始化界面组件"""
        central_widget = QWidget()
        self.setCentralWidget(central_widget)

        main_layout = QVBoxLayout(central_widget)
        main_layout.setSpacing(10)
        main_layout.setContentsMargins(20, 20, 20, 20)

        # 标题
        title_label = QLabel("Bayer 联合去马赛克与超分辨率")
        title_label.setFont(QFont("Arial", 16, QFont.Weight.Bold))
        title_label.setAlignment(Qt.AlignmentFlag.AlignCenter)
        main_layout.addWidget(title_label)

        # 输入区域
        input_group = QGroupBox("输入信息")
        input_layout = QFormLayout(input_group)

        self.checkpoint_entry = QLineEdit()
        self.checkpoint_btn = QPushButton("浏览")
        input_layout.addRow("检查点:", self._with_button(self.checkpoint_entry, self.checkpoint_btn))

        self.input_entry = QLineEdit()
        self.input_btn = QPushButton("浏览")
        input_layout.addRow("Bayer 输入:", self._with_button(self.input_entry, self.input_btn))

        self.output_entry = QLineEdit()
        self.output_btn = QPushButton("浏览")
        input_layout.addRow("输出 PNG:", self._with_button(self.output_entry, self.output_btn))

        self.tile_spin = QSpinBox()
        self.tile_spin.setRange(0, 4096)
        self.tile_spin.setSingleStep(16)
        self.tile_spin.setSpecialValueText("整图")
        input_layout.addRow("分块边长:", self.tile_spin)

        self.validation_label = QLabel("")
        self.validation_label.setStyleSheet("color: red;")
        input_layout.addRow("", self.validation_label)

        main_layout.addWidget(input_group)

        # 控制按钮
        control_layout = QHBoxLayout()
        self.run_btn = QPushButton("开始推理")
        self.run_btn.setProperty("class", "primary-button")
        self.run_btn.setEnabled(False)
        control_layout.addWidget(self.run_btn)
        control_layout.addStretch()
        main_layout.addLayout(control_layout)

        self.progress_bar = QProgressBar()
        main_layout.addWidget(self.progress_bar)

        # 预览
        preview_group = QGroupBox("输出预览")
        preview_layout = QVBoxLayout(preview_group)
        self.preview_label = QLabel("尚无输出")
        self.preview_label.setAlignment(Qt.AlignmentFlag.AlignCenter)
        self.preview_label.setMinimumHeight(240)
        preview_layout.addWidget(self.preview_label)
        main_layout.addWidget(preview_group)

        # 状态显示区域
        status_group = QGroupBox("状态信息")
        status_layout = QVBoxLayout(status_group)
        self.status_text = QTextEdit()
        self.status_text.setReadOnly(True)
        self.status_text.setMaximumHeight(200)
        status_layout.addWidget(self.status_text)
        main_layout.addWidget(status_group)

        # 底部按钮
        bottom_layout = QHBoxLayout()
        self.clear_log_btn = QPushButton("清空日志")
        self.about_btn = QPushButton("关于")
        bottom_layout.addWidget(self.clear_log_btn)
        bottom_layout.addStretch()
        bottom_layout.addWidget(self.about_btn)
        main_layout.addLayout(bottom_layout)

        self.setStyleSheet("""
            QGroupBox {
                border: 1px solid #d9d9d9;
                border-radius: 4px;
                margin-top: 10px;
                padding-top: 10px;
            }
            QPushButton {
                min-width: 80px;
                padding: 5px 15px;
                border: 1px solid #d9d9d9;
                border-radius: 4px;
            }
            QPushButton[class="primary-button"] {
                background-color: #2F54EB;
                color: white;
            }
            QPushButton:disabled {
                background-color: #f5f5f5;
                color: #999999;
            }
            QProgressBar::chunk {
                background-color: #2F54EB;
            }
        """)

    @staticmethod
    def _with_button(entry: QLineEdit, button: QPushButton) -> QHBoxLayout:
        layout = QHBoxLayout()
        layout.addWidget(entry)
        layout.addWidget(button)
        return layout

    def setup_connections(self):
        """设置信号槽连接"""
        self.run_btn.clicked.connect(self.start_inference)
        self.checkpoint_btn.clicked.connect(self.browse_checkpoint)
        self.input_btn.clicked.connect(self.browse_input)
        self.output_btn.clicked.connect(self.browse_output)
        self.clear_log_btn.clicked.connect(self.clear_status_log)
        self.about_btn.clicked.connect(self.show_about)

        # 输入验证
        self.checkpoint_entry.textChanged.connect(self.validate_inputs)
        self.input_entry.textChanged.connect(self.validate_inputs)
        self.output_entry.textChanged.connect(self.validate_inputs)

        # 内部信号连接
        self.progress_updated.connect(self.on_update_progress)
        self.inference_complete.connect(self.on_inference_complete)
        self.status_logged.connect(self.log_status)

    def validate_inputs(self) -> bool:
        """验证输入，返回是否可以开始推理"""
        checkpoint = self.checkpoint_entry.text().strip()
        bayer = self.input_entry.text().strip()
        output = self.output_entry.text().strip()
        self.validation_label.setText("")

        if checkpoint and not os.path.isfile(checkpoint):
            self.validation_label.setText("检查点文件不存在")
        elif bayer and not os.path.isfile(bayer):
            self.validation_label.setText("Bayer 输入文件不存在")
        elif output and not output.lower().endswith('.png'):
            self.validation_label.setText("输出文件必须是 .png")

        # 输出为空时由控制器在输入旁生成文件名
        ready = bool(checkpoint and bayer) and not self.validation_label.text()
        self.run_btn.setEnabled(ready and not self.is_running)
        return ready

    def start_inference(self):
        """开始推理"""
        if self.is_running or not self.validate_inputs():
            return
        self.is_running = True
        self.run_btn.setEnabled(False)
        self.run_btn.setText("推理中...")
        self.progress_bar.setValue(0)
        self.inference_started.emit(self.get_checkpoint_path(), self.get_input_path(),
                                    self.get_output_path(), self.tile_spin.value())

    @pyqtSlot(bool, str)
    def on_inference_complete(self, success: bool, message: str = ""):
        """推理完成槽函数"""
        self.is_running = False
        self.run_btn.setText("开始推理")
        self.validate_inputs()

        if success:
            self.progress_bar.setValue(100)
            self.log_status(f"推理完成: {message}", "success")
            self.show_preview(message)
        else:
            self.progress_bar.setValue(0)
            self.log_status(f"推理失败: {message}", "error")

    @pyqtSlot(float, str)
    def on_update_progress(self, value: float, message: str = ""):
        """更新进度槽函数"""
        self.progress_bar.setValue(int(value))
        if message:
            self.log_status(message)

    @pyqtSlot(str, str)
    def log_status(self, message: str, level: str = "info"):
        """记录状态日志

        Args:
            message: 日志消息
            level: 日志级别 (info, success, warning, error)
        """
        timestamp = datetime.datetime.now().strftime("%H:%M:%S")
        color_map = {
            'info': 'black',
            'success': 'green',
            'warning': 'orange',
            'error': 'red'
        }
        color = color_map.get(level, 'black')
        self.status_text.append(f'<span style="color:{color}">[{timestamp}] {message}</span>')

        # 滚动到底部
        scrollbar = self.status_text.verticalScrollBar()
        scrollbar.setValue(scrollbar.maximum())

    def clear_status_log(self):
        """清空状态日志"""
        self.status_text.clear()
        self.log_status("日志已清空")

    def show_preview(self, path: str):
        """在预览区显示输出图像（按比例缩放）"""
        pixmap = QPixmap(path)
        if pixmap.isNull():
            self.preview_label.setText("无法加载输出预览")
            return
        self.preview_label.setPixmap(pixmap.scaled(
            self.preview_label.width(), self.preview_label.height(),
            Qt.AspectRatioMode.KeepAspectRatio, Qt.TransformationMode.SmoothTransformation))

    def show_about(self):
        """显示关于信息"""
        QMessageBox.about(self, "关于", f"""Bayer2SR v{__version__}

由单通道 Bayer 马赛克直接重建两倍分辨率彩色图像的桌面工具。

• 检查点由 `python main.py train` 生成
• 输入为 16/8 位 PGM 或单通道 PNG
• 大图可设置分块边长以降低内存占用""")

    def _browse_file(self, entry: QLineEdit, title: str, pattern: str, save: bool = False):
        current = entry.text().strip()
        initial_dir = os.path.dirname(current) if current else os.path.expanduser("~")
        dialog = QFileDialog.getSaveFileName if save else QFileDialog.getOpenFileName
        path, _ = dialog(self, title, initial_dir, pattern)
        if path:
            entry.setText(path)
            self.log_status(f"{title}: {path}")

    def browse_checkpoint(self):
        self._browse_file(self.checkpoint_entry, "选择检查点", "检查点 (*.djsr);;所有文件 (*)")

    def browse_input(self):
        self._browse_file(self.input_entry, "选择 Bayer 输入", "图像 (*.pgm *.png);;所有文件 (*)")

    def browse_output(self):
        self._browse_file(self.output_entry, "选择输出路径", "PNG (*.png)", save=True)

    def get_checkpoint_path(self) -> str:
        return self.checkpoint_entry.text().strip()

    def get_input_path(self) -> str:
        return self.input_entry.text().strip()

    def get_output_path(self) -> str:
        return self.output_entry.text().strip()

    def set_paths(self, checkpoint: Optional[str] = None, bayer: Optional[str] = None,
                  output: Optional[str] = None):
        """设置路径输入框"""
        if checkpoint is not None:
            self.checkpoint_entry.setText(checkpoint)
        if bayer is not None:
            self.input_entry.setText(bayer)
        if output is not None:
            self.output_entry.setText(output)
