"""GUI模块 - PyQt6版本"""

from .main_window import MainWindow

__all__ = [
    'MainWindow',
]
