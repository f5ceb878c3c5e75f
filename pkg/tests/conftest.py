import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from sketches.set_query import SupportSet
from sketches.sketch_core import Norm, SketchMatrix, SketchParams, build_matrix

SEED = 20240611


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def make_rng():
    def _make(seed=SEED):
        return np.random.default_rng(seed)
    return _make


def loose_params(n, k, w, d=7, seed=SEED, eps=1.0):
    """Parâmetros sem validação (w abaixo do mínimo), para forçar colisões e abortos."""
    return SketchParams.model_construct(n=n, k=k, eps=eps, d=d, norm=Norm.L2, seed=seed, w=w)


def loose_matrix(n, k, w, d=7, seed=SEED):
    return build_matrix(loose_params(n, k, w, d=d, seed=seed))


def hand_matrix(columns, w, d=7):
    """
    Matriz montada à mão: `columns` é uma lista de listas de d linhas (sinais +1).
    """
    rows = np.array(columns, dtype=np.int64)
    signs = np.ones_like(rows, dtype=np.int8)
    rows.setflags(write=False)
    signs.setflags(write=False)
    params = loose_params(len(columns), len(columns), w, d=d)
    return SketchMatrix(params=params, rows=rows, signs=signs)


def integer_signal(n, k, rng, high=21):
    """Sinal com valores inteiros não nulos em k posições (aritmética de ponto flutuante exata)."""
    support = SupportSet.of(rng.choice(n, size=k, replace=False).tolist(), n=n)
    x = np.zeros(n)
    values = rng.integers(1, high, size=k) * rng.choice([-1, 1], size=k)
    x[support.as_array()] = values
    return x, support


@pytest.fixture
def memory_store(monkeypatch):
    """Força o armazenamento em memória (sem Redis) e limpa entre testes."""
    from tools import redis_tools

    redis_tools.reset_store()
    monkeypatch.setattr(redis_tools, "_redis_unavailable", True)
    yield redis_tools
    redis_tools.reset_store()
