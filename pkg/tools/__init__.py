"""
Ferramentas de infraestrutura: armazenamento de sketches nomeados
"""
from .redis_tools import save_sketch, load_sketch, delete_sketch, get_redis_client, reset_store

__all__ = [
    'save_sketch',
    'load_sketch',
    'delete_sketch',
    'get_redis_client',
    'reset_store',
]
