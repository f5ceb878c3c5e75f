"""
Matriz de medição esparsa do set query: construção, aplicação, atualização

Cada coluna da matriz A tem exatamente d entradas ±1 em linhas distintas,
sorteadas uniformemente entre as w linhas. O sketch é b = Ax (+ ruído).
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings
from config.logger import setup_logger
from .errors import DimensionMismatchError, InvalidArgumentError, ParamsMismatchError

logger = setup_logger(__name__)

# Colunas por fluxo do gerador. Faz parte do formato: mudar este valor muda
# o conteúdo da matriz para uma mesma semente.
COLUMNS_PER_STREAM = 4096

MIN_COLUMN_SPARSITY = 7


class Norm(str, Enum):
    L2 = "L2"
    L1 = "L1"


def required_rows(k: int, eps: float, d: int, norm: Norm = Norm.L2) -> int:
    """Número de linhas w exigido pela análise de erro e pela condição de terminação."""
    norm = Norm(norm)
    if norm is Norm.L2:
        error_rows = math.ceil(d * d * k / (eps * eps))
    else:
        error_rows = math.ceil(d * k / eps)
    return max(error_rows, 2 * d * (d - 1) * k)


class SketchParams(BaseModel):
    """Parâmetros de uma matriz de set query (n, k, eps, d, norma, semente, w)."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    eps: float = Field(gt=0.0, le=1.0)
    d: int = Field(ge=MIN_COLUMN_SPARSITY)
    norm: Norm = Norm.L2
    seed: int = Field(ge=0, lt=2 ** 64)
    w: int

    @model_validator(mode="after")
    def _check_shape(self) -> "SketchParams":
        if self.k > self.n:
            raise ValueError(f"k={self.k} maior que n={self.n}")
        minimum = required_rows(self.k, self.eps, self.d, self.norm)
        if self.w < minimum:
            raise ValueError(f"w={self.w} abaixo do mínimo {minimum} para k={self.k}, eps={self.eps}, d={self.d}")
        return self


def derive_params(
    n: int,
    k: int,
    eps: float,
    norm: Union[Norm, str] = Norm.L2,
    d: Optional[int] = None,
    seed: Optional[int] = None,
) -> SketchParams:
    """
    Deriva os parâmetros completos, calculando w.

    w = max(ceil(d²k/eps²), 2d(d-1)k) em l2 e max(ceil(dk/eps), 2d(d-1)k) em l1.

    Raises:
        InvalidArgumentError: se n >= k >= 1, 0 < eps <= 1 ou d >= 7 forem violados
    """
    d = settings.default_d if d is None else d
    seed = settings.default_seed if seed is None else seed
    try:
        norm = Norm(norm)
    except ValueError:
        raise InvalidArgumentError(f"Norma desconhecida: {norm}")

    if k < 1 or n < k:
        raise InvalidArgumentError(f"Esperado n >= k >= 1, recebido n={n}, k={k}")
    if not 0.0 < eps <= 1.0:
        raise InvalidArgumentError(f"eps deve estar em (0, 1], recebido {eps}")
    if d < MIN_COLUMN_SPARSITY:
        raise InvalidArgumentError(f"d deve ser >= {MIN_COLUMN_SPARSITY}, recebido {d}")
    if not 0 <= seed < 2 ** 64:
        raise InvalidArgumentError(f"Semente fora de 64 bits: {seed}")

    w = required_rows(k, eps, d, norm)
    return SketchParams(n=n, k=k, eps=eps, d=d, norm=norm, seed=seed, w=w)


@dataclass(frozen=True, eq=False)
class Signal:
    """Sinal esparso de dimensão n: índices distintos e ordenados com seus valores."""
    n: int
    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "Signal":
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x)
        return cls(n=len(x), indices=idx.astype(np.int64), values=x[idx].copy())

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Tuple[int, float]]) -> "Signal":
        pairs = list(pairs)
        idx = np.array([int(i) for i, _ in pairs], dtype=np.int64)
        vals = np.array([float(v) for _, v in pairs], dtype=np.float64)
        if len(idx) and (idx.min() < 0 or idx.max() >= n):
            raise InvalidArgumentError(f"Índices fora de [0, {n})")
        if len(np.unique(idx)) != len(idx):
            raise InvalidArgumentError("Índices repetidos no sinal esparso")
        order = np.argsort(idx, kind="stable")
        return cls(n=n, indices=idx[order], values=vals[order])

    @classmethod
    def zeros(cls, n: int) -> "Signal":
        return cls(n=n, indices=np.zeros(0, dtype=np.int64), values=np.zeros(0))

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.indices] = self.values
        return x

    def pairs(self) -> List[Tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def support(self) -> List[int]:
        return self.indices[self.values != 0].tolist()

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Signal):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.to_dense(), other.to_dense())


SignalLike = Union[Signal, np.ndarray, Sequence[float]]


def _as_sparse(signal: SignalLike, n: int) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(signal, Signal):
        if signal.n != n:
            raise DimensionMismatchError(f"Sinal de dimensão {signal.n}, matriz com n={n}")
        return signal.indices, signal.values
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) != n:
        raise DimensionMismatchError(f"Sinal de dimensão {x.shape}, matriz com n={n}")
    idx = np.flatnonzero(x)
    return idx, x[idx]


@dataclass(frozen=True, eq=False)
class SketchMatrix:
    """
    Matriz A guardada por colunas: rows[j] e signs[j] são as d entradas da coluna j.

    Com binary=True a matriz tem 2w linhas (partição em parte positiva e negativa).
    """
    params: SketchParams
    rows: np.ndarray
    signs: np.ndarray
    binary: bool = False

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def num_rows(self) -> int:
        return self.params.w * (2 if self.binary else 1)

    def column(self, j: int) -> List[Tuple[int, int]]:
        """Lista (linha, sinal) da coluna j."""
        return list(zip(self.rows[j].tolist(), self.signs[j].tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SketchMatrix):
            return NotImplemented
        return (
            self.params == other.params
            and self.binary == other.binary
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.signs, other.signs)
        )


@dataclass(eq=False)
class Sketch:
    """Vetor de medição b (comprimento w, ou 2w na forma binária)."""
    params: SketchParams
    values: np.ndarray
    binary: bool = False

    def copy(self) -> "Sketch":
        return Sketch(params=self.params, values=self.values.copy(), binary=self.binary)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sketch):
            return NotImplemented
        return (
            self.params == other.params
            and self.binary == other.binary
            and np.array_equal(self.values, other.values)
        )


def _floyd_sample(rng: np.random.Generator, count: int, w: int, d: int) -> np.ndarray:
    """Amostra d linhas distintas de [w] para cada uma de `count` colunas (algoritmo de Floyd)."""
    chosen = np.empty((count, d), dtype=np.int64)
    for t, j in enumerate(range(w - d, w)):
        draw = rng.integers(0, j + 1, size=count)
        if t:
            taken = (chosen[:, :t] == draw[:, None]).any(axis=1)
            draw = np.where(taken, j, draw)
        chosen[:, t] = draw
    return chosen


def build_matrix(params: SketchParams) -> SketchMatrix:
    """
    Sorteia a matriz A a partir da semente dos parâmetros.

    A semente mestre é dividida (SeedSequence.spawn) em um fluxo Philox por bloco
    de COLUMNS_PER_STREAM colunas; o resultado é idêntico bit a bit para a mesma semente.
    """
    n, d, w = params.n, params.d, params.w
    if d > w:
        raise InvalidArgumentError(f"d={d} maior que w={w}")

    rows = np.empty((n, d), dtype=np.int64)
    signs = np.empty((n, d), dtype=np.int8)
    n_chunks = -(-n // COLUMNS_PER_STREAM)
    streams = np.random.SeedSequence(params.seed).spawn(n_chunks)

    for c, stream in enumerate(streams):
        lo, hi = c * COLUMNS_PER_STREAM, min(n, (c + 1) * COLUMNS_PER_STREAM)
        rng = np.random.Generator(np.random.Philox(stream))
        rows[lo:hi] = _floyd_sample(rng, hi - lo, w, d)
        signs[lo:hi] = rng.integers(0, 2, size=(hi - lo, d), dtype=np.int8) * 2 - 1

    rows.setflags(write=False)
    signs.setflags(write=False)
    logger.debug(f"Matriz construída: n={n}, w={w}, d={d}, seed={params.seed}")
    return SketchMatrix(params=params, rows=rows, signs=signs)


def apply(matrix: SketchMatrix, signal: SignalLike) -> Sketch:
    """Calcula b = Ax. Aceita Signal esparso ou vetor denso de dimensão n."""
    idx, vals = _as_sparse(signal, matrix.n)
    contrib = matrix.signs[idx] * vals[:, None]
    values = np.bincount(
        matrix.rows[idx].ravel(),
        weights=contrib.ravel(),
        minlength=matrix.num_rows,
    ).astype(np.float64)
    return Sketch(params=matrix.params, values=values, binary=matrix.binary)


def _check_compatible(sketch: Sketch, matrix: SketchMatrix) -> None:
    if sketch.params != matrix.params or sketch.binary != matrix.binary:
        raise ParamsMismatchError("Sketch e matriz foram gerados com parâmetros diferentes")
    if len(sketch.values) != matrix.num_rows:
        raise ParamsMismatchError(f"Sketch com {len(sketch.values)} células, matriz com {matrix.num_rows} linhas")


def update(sketch: Sketch, matrix: SketchMatrix, index: int, delta: float) -> Sketch:
    """
    Atualização pontual x[index] += delta, no próprio sketch (escritor único).

    Toca exatamente d células. Retorna o mesmo objeto para encadear chamadas.
    """
    _check_compatible(sketch, matrix)
    if not 0 <= index < matrix.n:
        raise InvalidArgumentError(f"Índice {index} fora de [0, {matrix.n})")
    sketch.values[matrix.rows[index]] += delta * matrix.signs[index]
    return sketch


def add_noise(sketch: Sketch, nu: Sequence[float]) -> Sketch:
    """Retorna b + nu."""
    nu = np.asarray(nu, dtype=np.float64)
    if nu.shape != sketch.values.shape:
        raise DimensionMismatchError(f"Ruído de tamanho {nu.shape}, sketch com {sketch.values.shape}")
    return Sketch(params=sketch.params, values=sketch.values + nu, binary=sketch.binary)


def merge(sketches: Sequence[Sketch]) -> Sketch:
    """Soma sketches da mesma matriz (por linearidade, o sketch da soma dos sinais)."""
    if not sketches:
        raise InvalidArgumentError("Nenhum sketch para somar")
    first = sketches[0]
    total = first.values.copy()
    for other in sketches[1:]:
        if other.params != first.params or other.binary != first.binary:
            raise ParamsMismatchError("Sketches de matrizes diferentes não podem ser somados")
        total += other.values
    return Sketch(params=first.params, values=total, binary=first.binary)


def split_binary_rows(matrix: SketchMatrix) -> SketchMatrix:
    """
    Divide cada linha q em duas: 2q guarda as entradas +1 e 2q+1 as entradas -1 (com sinal +1).
    """
    if matrix.binary:
        raise InvalidArgumentError("A matriz já está na forma binária")
    rows = 2 * matrix.rows + (matrix.signs < 0)
    signs = np.ones_like(matrix.signs)
    rows.setflags(write=False)
    signs.setflags(write=False)
    return SketchMatrix(params=matrix.params, rows=rows, signs=signs, binary=True)


def combine_binary_rows(sketch: Sketch) -> Sketch:
    """Reconstrói o sketch original: values[2q] - values[2q+1]."""
    if not sketch.binary:
        raise InvalidArgumentError("O sketch não está na forma binária")
    values = sketch.values[0::2] - sketch.values[1::2]
    return Sketch(params=sketch.params, values=values, binary=False)


def dense(matrix: SketchMatrix) -> np.ndarray:
    """Matriz densa (num_rows x n). Só para oráculos em tamanhos pequenos."""
    a = np.zeros((matrix.num_rows, matrix.n))
    cols = np.repeat(np.arange(matrix.n), matrix.rows.shape[1])
    a[matrix.rows.ravel(), cols] = matrix.signs.ravel()
    return a
