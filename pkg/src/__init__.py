"""Bayer马赛克联合去马赛克与超分辨率工具"""
__version__ = "0.1.0"
__author__ = "Bayer2SR Tool"
