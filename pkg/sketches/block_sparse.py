"""
Block heavy hitters e recuperação (k, b)-block-esparsa

x é dividido em t = n/b blocos T_q de b coordenadas. Cada bloco é projetado por
uma matriz gaussiana ρ (m x b) e cada projeção y_{q,i} é somada, com sinal g_i(q),
na célula h_i(q) da tabela H⁽ⁱ⁾. A norma de cada bloco é estimada pela mediana de
|H⁽ʲ⁾_{h_j(q)}| e os s = k/b blocos mais pesados formam o suporte do set query.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings
from config.logger import setup_logger
from .errors import DimensionMismatchError, InvalidArgumentError
from .hashing import functions_from, sample_coefficients
from .set_query import RngLike, SupportSet, recover_robust
from .sketch_core import Signal, SignalLike, Sketch, SketchMatrix

logger = setup_logger(__name__)


class BlockParams(BaseModel):
    """Parâmetros do block heavy hitters. Se b não divide n, x é completado com zeros."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    b: int = Field(ge=1)
    k: int = Field(ge=1)
    eps: float = Field(gt=0.0, le=1.0)
    m: int = Field(ge=1)
    l: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2 ** 64)
    alpha: float = 1.4826

    @model_validator(mode="after")
    def _check_blocks(self) -> "BlockParams":
        if self.k % self.b:
            raise ValueError(f"b={self.b} não divide k={self.k}")
        if self.s > self.t:
            raise ValueError(f"s={self.s} blocos pedidos, só há t={self.t}")
        return self

    @property
    def s(self) -> int:
        return self.k // self.b

    @property
    def t(self) -> int:
        return -(-self.n // self.b)

    @property
    def n_padded(self) -> int:
        return self.t * self.b

    @classmethod
    def derive(cls, n: int, b: int, k: int, eps: float, seed: Optional[int] = None) -> "BlockParams":
        """m = ceil(c3 log2 n / eps²), l = max(ceil(c4 s / eps³), 2s)."""
        if b < 1 or k < b or k % b:
            raise InvalidArgumentError(f"k={k} precisa ser múltiplo positivo de b={b}")
        if n < k:
            raise InvalidArgumentError(f"Esperado n >= k, recebido n={n}, k={k}")
        if not 0.0 < eps <= 1.0:
            raise InvalidArgumentError(f"eps deve estar em (0, 1], recebido {eps}")
        seed = settings.default_seed if seed is None else seed
        s = k // b
        m = max(1, math.ceil(settings.block_m_factor * math.log2(max(n, 2)) / (eps * eps)))
        l = max(math.ceil(settings.block_l_factor * s / eps ** 3), 2 * s)
        return cls(n=n, b=b, k=k, eps=eps, m=m, l=l, seed=seed, alpha=settings.block_alpha)


@dataclass(eq=False)
class BlockSketch:
    params: BlockParams
    rho: np.ndarray           # m x b
    coefficients: np.ndarray  # m x 4 (a_h, b_h, a_g, b_g)
    buckets: np.ndarray       # m x t, h_i(q)
    signs: np.ndarray         # m x t, g_i(q)
    tables: np.ndarray        # m x l, H⁽ⁱ⁾

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockSketch):
            return NotImplemented
        return (
            self.params == other.params
            and np.array_equal(self.rho, other.rho)
            and np.array_equal(self.coefficients, other.coefficients)
            and np.array_equal(self.tables, other.tables)
        )


def hash_tables(coefficients: np.ndarray, t: int, l: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tabela h_i(q) e g_i(q) para q em [t], uma linha por projeção."""
    pairs = functions_from(coefficients, l)
    buckets = np.stack([h.table(t) for h, _ in pairs]) if pairs else np.zeros((0, t), dtype=np.int64)
    signs = np.stack([g.table(t) for _, g in pairs]) if pairs else np.zeros((0, t), dtype=np.int8)
    return buckets, signs


def _box_muller(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    count = shape[0] * shape[1]
    half = -(-count // 2)
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])
    return z[:count].reshape(shape)


def bhh_build(params: BlockParams) -> BlockSketch:
    """Sorteia ρ e os hashes pairwise independentes; tabelas zeradas."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(params.seed)))
    rho = _box_muller(rng, (params.m, params.b))
    coefficients = sample_coefficients(rng, params.m)
    buckets, signs = hash_tables(coefficients, params.t, params.l)
    logger.debug(f"Block sketch construído: t={params.t}, m={params.m}, l={params.l}")
    return BlockSketch(
        params=params, rho=rho, coefficients=coefficients,
        buckets=buckets, signs=signs, tables=np.zeros((params.m, params.l)),
    )


def _blocks(signal: SignalLike, params: BlockParams) -> np.ndarray:
    x = signal.to_dense() if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if x.shape != (params.n,):
        raise DimensionMismatchError(f"Sinal de dimensão {x.shape}, esperado n={params.n}")
    padded = np.zeros(params.n_padded)
    padded[: params.n] = x
    return padded.reshape(params.t, params.b)


def bhh_apply(structure: BlockSketch, signal: SignalLike) -> BlockSketch:
    """Nova estrutura com H⁽ⁱ⁾_j = Σ_{q: h_i(q)=j} g_i(q)·y_{q,i}, y = ρ x_(T_q)."""
    p = structure.params
    y = _blocks(signal, p) @ structure.rho.T  # t x m
    tables = np.empty((p.m, p.l))
    for i in range(p.m):
        tables[i] = np.bincount(structure.buckets[i], weights=structure.signs[i] * y[:, i], minlength=p.l)
    return BlockSketch(
        params=p, rho=structure.rho, coefficients=structure.coefficients,
        buckets=structure.buckets, signs=structure.signs, tables=tables,
    )


def _median_magnitudes(structure: BlockSketch) -> np.ndarray:
    hits = np.take_along_axis(structure.tables, structure.buckets, axis=1)  # m x t
    return np.median(np.abs(hits), axis=0)


def bhh_estimate_block(structure: BlockSketch, i: int) -> float:
    """α · mediana_j |H⁽ʲ⁾_{h_j(i)}|, estimativa de ‖x_(T_i)‖₂."""
    p = structure.params
    if not 0 <= i < p.t:
        raise InvalidArgumentError(f"Bloco {i} fora de [0, {p.t})")
    hits = structure.tables[np.arange(p.m), structure.buckets[:, i]]
    return float(p.alpha * np.median(np.abs(hits)))


def bhh_estimate_all(structure: BlockSketch) -> np.ndarray:
    return structure.params.alpha * _median_magnitudes(structure)


def bhh_locate(structure: BlockSketch, s: Optional[int] = None) -> SupportSet:
    """
    União dos s blocos de maior estimativa (empate vai para o menor bloco).

    A seleção ignora α; coordenadas de preenchimento (>= n) são descartadas.
    """
    p = structure.params
    s = p.s if s is None else s
    z = _median_magnitudes(structure)
    chosen = np.sort(np.argsort(-z, kind="stable")[: min(s, p.t)])
    coords = (chosen[:, None] * p.b + np.arange(p.b)[None, :]).ravel()
    coords = coords[coords < p.n]
    return SupportSet(tuple(coords.tolist()))


def err_block(signal: SignalLike, k: int, b: int) -> float:
    """Err_2^{k,b}(x): norma l2 de x fora dos seus k/b blocos de maior norma."""
    x = signal.to_dense() if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if b < 1 or len(x) % b:
        raise InvalidArgumentError(f"b={b} não divide n={len(x)}")
    if k < 0 or k % b:
        raise InvalidArgumentError(f"b={b} não divide k={k}")
    sq_norms = np.sort(np.sum(x.reshape(-1, b) ** 2, axis=1))
    s = k // b
    rest = sq_norms[: max(len(sq_norms) - s, 0)]
    return float(np.sqrt(rest.sum()))


def block_set_query_eps(eps: float) -> float:
    return eps / 3.0


def recover_block_sparse(
    bhh_structure: BlockSketch,
    sq_matrices: Sequence[SketchMatrix],
    sq_sketches: Sequence[Sketch],
    params: Optional[BlockParams] = None,
    rng: RngLike = None,
) -> Signal:
    """
    Localiza os blocos pesados e estima x neles com o set query.

    Raises:
        RecoveryAbortedError: se todas as repetições do set query abortarem
    """
    params = params or bhh_structure.params
    if not sq_matrices:
        raise InvalidArgumentError("Nenhuma matriz de set query")
    target = block_set_query_eps(params.eps)
    if sq_matrices[0].params.eps > target * (1 + 1e-9):
        logger.warning(f"eps do set query ({sq_matrices[0].params.eps:.4g}) acima do exigido ({target:.4g})")

    support = bhh_locate(bhh_structure, params.s)
    result = recover_robust(sq_matrices, sq_sketches, support, rng)
    logger.info(f"Recuperação por blocos: {params.s} blocos, {len(support)} coordenadas")
    return result
