"""
Módulo de configuração do laboratório de sketches
"""
from .settings import settings
from .logger import setup_logger, with_context

__all__ = ['settings', 'setup_logger', 'with_context']
