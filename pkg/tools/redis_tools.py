"""
Armazenamento de sketches nomeados no Redis
Guarda os bytes SQS1; sem Redis, usa um dicionário local em memória
"""
import redis
from typing import Dict, Optional

from config.settings import settings
from config.logger import setup_logger
from sketches.codec import deserialize, serialize
from sketches.sketch_core import Sketch

logger = setup_logger(__name__)

# Conexão global com Redis
_redis_client: Optional[redis.Redis] = None
_redis_unavailable = False
# Armazenamento local em memória (fallback quando Redis não está disponível)
_local_store: Dict[str, bytes] = {}


def get_redis_client() -> Optional[redis.Redis]:
    """
    Retorna a conexão com o Redis (singleton). Depois de uma falha de conexão, passa a usar o fallback.
    """
    global _redis_client, _redis_unavailable

    if _redis_client is None and not _redis_unavailable:
        try:
            if settings.redis_url:
                _redis_client = redis.from_url(
                    settings.redis_url,
                    socket_connect_timeout=5,
                    socket_timeout=5
                )
                logger.info(f"Conectado ao Redis via URL: {settings.redis_url.split('@')[-1]}")
            else:
                _redis_client = redis.Redis(
                    host=settings.redis_host,
                    port=settings.redis_port,
                    db=settings.redis_db,
                    password=settings.redis_password if settings.redis_password else None,
                    socket_connect_timeout=5,
                    socket_timeout=5
                )

            # Testar conexão
            _redis_client.ping()
            if not settings.redis_url:
                logger.info(f"Conectado ao Redis: {settings.redis_host}:{settings.redis_port}")

        except redis.exceptions.RedisError as e:
            logger.warning(f"Redis indisponível, usando armazenamento em memória: {e}")
            _redis_client = None
            _redis_unavailable = True

    return _redis_client


def reset_store() -> None:
    """Esquece a conexão e limpa o fallback (usado nos testes)."""
    global _redis_client, _redis_unavailable
    _redis_client = None
    _redis_unavailable = False
    _local_store.clear()


def sketch_key(name: str) -> str:
    """Chave do sketch no Redis."""
    return f"sketch:{name}"


def save_sketch(name: str, sketch: Sketch, ttl_seconds: Optional[int] = None) -> bool:
    """
    Grava o sketch (formato SQS1) com TTL (padrão settings.sketch_ttl_seconds).
    """
    payload = serialize(sketch)
    ttl = ttl_seconds or settings.sketch_ttl_seconds
    client = get_redis_client()

    if client is None:
        _local_store[name] = payload
        logger.debug(f"[fallback] Sketch {name} gravado em memória")
        return True

    try:
        client.set(sketch_key(name), payload, ex=ttl)
        return True
    except redis.exceptions.RedisError as e:
        logger.error(f"Erro ao gravar sketch {name} no Redis: {e}")
        _local_store[name] = payload
        return False


def load_sketch(name: str) -> Optional[Sketch]:
    """Retorna o sketch ou None se o nome não existir."""
    client = get_redis_client()
    payload = None

    if client is None:
        payload = _local_store.get(name)
    else:
        try:
            payload = client.get(sketch_key(name))
        except redis.exceptions.RedisError as e:
            logger.error(f"Erro ao ler sketch {name} do Redis: {e}")
            payload = _local_store.get(name)

    if payload is None:
        return None
    return deserialize(payload)


def delete_sketch(name: str) -> bool:
    """Remove o sketch; retorna True se ele existia."""
    client = get_redis_client()
    existed = _local_store.pop(name, None) is not None

    if client is None:
        return existed
    try:
        return bool(client.delete(sketch_key(name))) or existed
    except redis.exceptions.RedisError as e:
        logger.error(f"Erro ao remover sketch {name}: {e}")
        return existed
