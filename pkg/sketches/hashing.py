"""
Família de hash pairwise independente sobre o primo de Mersenne 2^61 - 1

h(x) = ((a*x + b) mod p) mod buckets, com a em [1, p) e b em [0, p).
O sinal ±1 vem da paridade de um segundo polinômio independente.
"""
from dataclasses import dataclass
from typing import Final, List, Tuple

import numpy as np

MERSENNE_61: Final[int] = (1 << 61) - 1


@dataclass(frozen=True)
class PairwiseHash:
    a: int
    b: int
    buckets: int

    def raw(self, x: int) -> int:
        return (self.a * int(x) + self.b) % MERSENNE_61

    def __call__(self, x: int) -> int:
        return self.raw(x) % self.buckets

    def table(self, size: int) -> np.ndarray:
        """h(0), ..., h(size-1) como vetor int64."""
        a, b, p, m = self.a, self.b, MERSENNE_61, self.buckets
        return np.fromiter(((a * x + b) % p % m for x in range(size)), dtype=np.int64, count=size)


@dataclass(frozen=True)
class PairwiseSign:
    a: int
    b: int

    def __call__(self, x: int) -> int:
        return 1 - 2 * (((self.a * int(x) + self.b) % MERSENNE_61) & 1)

    def table(self, size: int) -> np.ndarray:
        a, b, p = self.a, self.b, MERSENNE_61
        return np.fromiter((1 - 2 * (((a * x + b) % p) & 1) for x in range(size)), dtype=np.int8, count=size)


def sample_coefficients(rng: np.random.Generator, count: int) -> np.ndarray:
    """
    Sorteia `count` linhas (a_h, b_h, a_g, b_g): hash de balde e hash de sinal.

    Returns:
        Matriz uint64 (count x 4)
    """
    coefficients = np.empty((count, 4), dtype=np.uint64)
    for i in range(count):
        coefficients[i] = (
            int(rng.integers(1, MERSENNE_61)),
            int(rng.integers(0, MERSENNE_61)),
            int(rng.integers(1, MERSENNE_61)),
            int(rng.integers(0, MERSENNE_61)),
        )
    return coefficients


def functions_from(coefficients: np.ndarray, buckets: int) -> List[Tuple[PairwiseHash, PairwiseSign]]:
    return [
        (PairwiseHash(int(a_h), int(b_h), buckets), PairwiseSign(int(a_g), int(b_g)))
        for a_h, b_h, a_g, b_g in coefficients.tolist()
    ]
