"""
Geradores de sinais e de ruído para os experimentos

Todos recebem uma semente (ou um Generator) e são determinísticos.
"""
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from sketches.errors import InvalidArgumentError
from sketches.set_query import SupportSet
from sketches.sketch_core import Signal, SketchMatrix
from .models import NoiseKind, NoiseModel

SeedLike = Union[int, np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def trial_seeds(master: int, count: int) -> List[int]:
    """Sementes de 64 bits independentes por tentativa, derivadas da semente mestre."""
    children = np.random.SeedSequence(master).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def _ranked_signal(n: int, magnitudes: np.ndarray, rng: np.random.Generator) -> Signal:
    """Coloca magnitudes[i] na posição r_i de uma permutação aleatória, com sinais aleatórios."""
    permutation = rng.permutation(n)[: len(magnitudes)]
    signs = rng.integers(0, 2, size=len(magnitudes)) * 2 - 1
    x = np.zeros(n)
    x[permutation] = magnitudes * signs
    return Signal.from_dense(x)


def gen_zipfian(n: int, k: Optional[int] = None, alpha: float = 1.0, scale: float = 1.0, seed: SeedLike = None) -> Signal:
    """
    |x_{r_i}| = scale · i^-alpha para i = 1..k (k=None: todas as n coordenadas).
    """
    if alpha <= 0 or not math.isfinite(alpha):
        raise InvalidArgumentError(f"alpha deve ser positivo, recebido {alpha}")
    count = n if k is None else min(k, n)
    ranks = np.arange(1, count + 1, dtype=np.float64)
    return _ranked_signal(n, scale * ranks ** -alpha, make_rng(seed))


def gen_geometric(n: int, k: Optional[int] = None, ratio: float = 0.9, scale: float = 1.0, seed: SeedLike = None) -> Signal:
    """|x_{r_i}| = scale · ratio^(i-1): decaimento geométrico, também sub-Zipfiano."""
    if not 0.0 < ratio < 1.0:
        raise InvalidArgumentError(f"ratio deve estar em (0, 1), recebido {ratio}")
    count = n if k is None else min(k, n)
    magnitudes = scale * ratio ** np.arange(count, dtype=np.float64)
    # abaixo do menor subnormal o valor vira zero e sai do suporte
    return _ranked_signal(n, magnitudes, make_rng(seed))


def gen_block_sparse(
    n: int,
    b: int,
    k: int,
    block_norms: Union[float, Sequence[float]] = 1.0,
    noise_sigma: float = 0.0,
    seed: SeedLike = None,
) -> Signal:
    """
    Planta s = k/b blocos em posições aleatórias, cada um com a norma l2 pedida e
    direção aleatória; fora deles, ruído N(0, noise_sigma²) coordenada a coordenada.
    """
    if b < 1 or n % b or k % b:
        raise InvalidArgumentError(f"b={b} precisa dividir n={n} e k={k}")
    s, t = k // b, n // b
    if s > t:
        raise InvalidArgumentError(f"s={s} blocos pedidos, só há t={t}")
    norms = np.broadcast_to(np.asarray(block_norms, dtype=np.float64), (s,))

    rng = make_rng(seed)
    blocks = np.sort(rng.choice(t, size=s, replace=False))
    x = np.zeros((t, b))
    for q, norm in zip(blocks, norms):
        direction = rng.standard_normal(b)
        x[q] = norm * direction / np.linalg.norm(direction)
    if noise_sigma > 0:
        tail = rng.normal(0.0, noise_sigma, size=(t, b))
        tail[blocks] = 0.0
        x += tail
    return Signal.from_dense(x.ravel())


def random_support(n: int, k: int, rng: np.random.Generator) -> SupportSet:
    return SupportSet.of(rng.choice(n, size=k, replace=False).tolist(), n=n)


def head_signal(n: int, support: SupportSet, scale: float, rng: np.random.Generator, tail_sigma: float = 0.0) -> np.ndarray:
    """Cabeça N(0, scale²) em S e cauda N(0, tail_sigma²) fora de S."""
    x = np.zeros(n)
    if tail_sigma > 0:
        x = rng.normal(0.0, tail_sigma, size=n)
    cols = support.as_array()
    x[cols] = rng.normal(0.0, scale, size=len(cols))
    return x


def gen_noise(model: NoiseModel, w: int, matrix: SketchMatrix, support: SupportSet, rng: np.random.Generator) -> np.ndarray:
    """
    Ruído de medição ν de tamanho w.

    adversarial_tail concentra norma sigma·sqrt(w) nas células atingidas por S,
    com o sinal da primeira aresta incidente (na ordem canônica).
    """
    kind = NoiseKind(model.kind)
    if kind is NoiseKind.NONE or model.sigma == 0:
        return np.zeros(w)
    if kind is NoiseKind.GAUSSIAN:
        return rng.normal(0.0, model.sigma, size=w)

    cols = support.as_array()
    rows = matrix.rows[cols].ravel()
    signs = matrix.signs[cols].ravel()
    cells, first = np.unique(rows, return_index=True)
    nu = np.zeros(w)
    if len(cells):
        nu[cells] = signs[first] * model.sigma * math.sqrt(w / len(cells))
    return nu
