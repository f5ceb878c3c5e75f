"""
Contêiner binário SQS1 para matrizes, sketches e sketches de blocos

Layout (inteiros little-endian):
    magic "SQS1" | u32 versão | u8 seção | bloco de parâmetros | payload | u32 CRC32

Seções:
    1 matriz   params(n,k,w,d u64; eps f64; norma u8; seed u64) | u8 binária | linhas u64[n*d] | sinais i8[n*d]
    2 sketch   params | u8 binário | u64 tamanho | valores f64[tamanho]
    3 blocos   (n,b,k,m,l u64; eps f64; seed u64; alpha f64) | rho f64[m*b] | coeficientes u64[m*4] | tabelas f64[m*l]
"""
import hashlib
import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from config.logger import setup_logger
from .errors import ChecksumError, DecodeError, InvalidArgumentError, TruncatedStreamError, VersionMismatchError
from .sketch_core import Norm, Sketch, SketchMatrix, SketchParams

logger = setup_logger(__name__)

MAGIC = b"SQS1"
VERSION = 1

TAG_MATRIX = 1
TAG_SKETCH = 2
TAG_BLOCK_SKETCH = 3

_HEADER = struct.Struct("<4sIB")
_PARAMS = struct.Struct("<QQQQdBQ")
_BLOCK_PARAMS = struct.Struct("<QQQQQdQd")
_U8 = struct.Struct("<B")
_U64 = struct.Struct("<Q")
_CRC = struct.Struct("<I")

_NORM_CODES = {Norm.L2: 2, Norm.L1: 1}
_CODE_NORMS = {v: k for k, v in _NORM_CODES.items()}


def _pack_params(params: SketchParams) -> bytes:
    return _PARAMS.pack(
        params.n, params.k, params.w, params.d, params.eps, _NORM_CODES[Norm(params.norm)], params.seed
    )


def _unpack_params(data: bytes, offset: int) -> SketchParams:
    n, k, w, d, eps, norm_code, seed = _PARAMS.unpack_from(data, offset)
    if norm_code not in _CODE_NORMS:
        raise DecodeError(f"Código de norma desconhecido: {norm_code}")
    # Sem revalidar: o CRC já garante que os bytes são os que foram gravados
    return SketchParams.model_construct(n=n, k=k, eps=eps, d=d, norm=_CODE_NORMS[norm_code], seed=seed, w=w)


def _seal(body: bytes) -> bytes:
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def serialize(obj) -> bytes:
    """Codifica SketchMatrix, Sketch ou BlockSketch no contêiner SQS1."""
    from .block_sparse import BlockSketch

    if isinstance(obj, SketchMatrix):
        body = [
            _HEADER.pack(MAGIC, VERSION, TAG_MATRIX),
            _pack_params(obj.params),
            _U8.pack(int(obj.binary)),
            np.ascontiguousarray(obj.rows, dtype="<u8").tobytes(),
            np.ascontiguousarray(obj.signs, dtype="i1").tobytes(),
        ]
    elif isinstance(obj, Sketch):
        body = [
            _HEADER.pack(MAGIC, VERSION, TAG_SKETCH),
            _pack_params(obj.params),
            _U8.pack(int(obj.binary)),
            _U64.pack(len(obj.values)),
            np.ascontiguousarray(obj.values, dtype="<f8").tobytes(),
        ]
    elif isinstance(obj, BlockSketch):
        p = obj.params
        body = [
            _HEADER.pack(MAGIC, VERSION, TAG_BLOCK_SKETCH),
            _BLOCK_PARAMS.pack(p.n, p.b, p.k, p.m, p.l, p.eps, p.seed, p.alpha),
            np.ascontiguousarray(obj.rho, dtype="<f8").tobytes(),
            np.ascontiguousarray(obj.coefficients, dtype="<u8").tobytes(),
            np.ascontiguousarray(obj.tables, dtype="<f8").tobytes(),
        ]
    else:
        raise InvalidArgumentError(f"Tipo não serializável: {type(obj).__name__}")
    return _seal(b"".join(body))


def _require(data: bytes, end: int) -> None:
    """Payload até `end` mais o CRC precisam caber no fluxo."""
    if len(data) < end + _CRC.size:
        raise TruncatedStreamError(f"Fluxo truncado: esperado ao menos {end + _CRC.size} bytes, recebido {len(data)}")


def _payload_end(data: bytes, tag: int) -> int:
    offset = _HEADER.size
    if tag == TAG_BLOCK_SKETCH:
        _require(data, offset + _BLOCK_PARAMS.size)
        _, b, _, m, l = _BLOCK_PARAMS.unpack_from(data, offset)[:5]
        end = offset + _BLOCK_PARAMS.size + 8 * (m * b + m * 4 + m * l)
    else:
        _require(data, offset + _PARAMS.size + _U8.size)
        n, _, _, d = _PARAMS.unpack_from(data, offset)[:4]
        offset += _PARAMS.size + _U8.size
        if tag == TAG_MATRIX:
            end = offset + n * d * 9
        else:
            _require(data, offset + _U64.size)
            (length,) = _U64.unpack_from(data, offset)
            end = offset + _U64.size + length * 8
    _require(data, end)
    return end


def deserialize(data: bytes):
    """
    Decodifica um fluxo SQS1.

    Raises:
        DecodeError: magic ou seção inválidos
        VersionMismatchError: versão diferente de VERSION
        TruncatedStreamError: fluxo mais curto que o declarado no cabeçalho
        ChecksumError: CRC32 não confere
    """
    data = bytes(data)
    if len(data) < _HEADER.size + _CRC.size:
        raise TruncatedStreamError(f"Fluxo truncado: {len(data)} bytes")
    magic, version, tag = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DecodeError(f"Magic inválido: {magic!r}")
    if version != VERSION:
        raise VersionMismatchError(f"Versão {version} não suportada (esperado {VERSION})")
    if tag not in (TAG_MATRIX, TAG_SKETCH, TAG_BLOCK_SKETCH):
        raise DecodeError(f"Seção desconhecida: {tag}")

    end = _payload_end(data, tag)
    if len(data) != end + _CRC.size:
        raise DecodeError(f"Tamanho inesperado: {len(data)} bytes, esperado {end + _CRC.size}")
    (stored_crc,) = _CRC.unpack_from(data, end)
    if zlib.crc32(data[:end]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("CRC32 não confere")

    offset = _HEADER.size
    if tag == TAG_BLOCK_SKETCH:
        return _decode_block_sketch(data, offset)

    params = _unpack_params(data, offset)
    offset += _PARAMS.size
    (binary,) = _U8.unpack_from(data, offset)
    offset += _U8.size

    if tag == TAG_MATRIX:
        count = params.n * params.d
        rows = np.frombuffer(data, dtype="<u8", count=count, offset=offset).astype(np.int64).reshape(params.n, params.d)
        offset += count * 8
        signs = np.frombuffer(data, dtype="i1", count=count, offset=offset).astype(np.int8).reshape(params.n, params.d)
        rows.setflags(write=False)
        signs.setflags(write=False)
        return SketchMatrix(params=params, rows=rows, signs=signs, binary=bool(binary))

    (length,) = _U64.unpack_from(data, offset)
    offset += _U64.size
    values = np.frombuffer(data, dtype="<f8", count=length, offset=offset).astype(np.float64)
    return Sketch(params=params, values=values, binary=bool(binary))


def _decode_block_sketch(data: bytes, offset: int):
    from .block_sparse import BlockParams, BlockSketch, hash_tables

    n, b, k, m, l, eps, seed, alpha = _BLOCK_PARAMS.unpack_from(data, offset)
    offset += _BLOCK_PARAMS.size
    params = BlockParams.model_construct(n=n, b=b, k=k, eps=eps, m=m, l=l, seed=seed, alpha=alpha)
    rho = np.frombuffer(data, dtype="<f8", count=m * b, offset=offset).astype(np.float64).reshape(m, b)
    offset += m * b * 8
    coefficients = np.frombuffer(data, dtype="<u8", count=m * 4, offset=offset).astype(np.uint64).reshape(m, 4)
    offset += m * 4 * 8
    tables = np.frombuffer(data, dtype="<f8", count=m * l, offset=offset).astype(np.float64).reshape(m, l)
    buckets, signs = hash_tables(coefficients, params.t, l)
    return BlockSketch(params=params, rho=rho, coefficients=coefficients, buckets=buckets, signs=signs, tables=tables)


def save(obj, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize(obj))
    logger.info(f"Gravado {type(obj).__name__} em {path}")
    return path


def load(path: Union[str, Path]):
    try:
        return deserialize(Path(path).read_bytes())
    except DecodeError as e:
        logger.error(f"Falha ao decodificar {path}: {e}")
        raise


def content_hash(obj) -> str:
    """sha256 dos bytes serializados (checagem de determinismo entre execuções)."""
    return hashlib.sha256(serialize(obj)).hexdigest()
