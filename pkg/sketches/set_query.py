"""
Decodificador por peeling do set query

Dado b = Ax + ν e o suporte S, estima x em S removendo, uma a uma, as arestas
(colunas de S) que têm ao menos d-1 (ou, na falta, d-2) células isoladas.
A estimativa de cada aresta é a mediana de A_qj * b_q sobre as células isoladas.
"""
import json
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from config.logger import setup_logger
from .errors import InvalidArgumentError, ParamsMismatchError, RecoveryAbortedError
from .sketch_core import Norm, Signal, SignalLike, Sketch, SketchMatrix, apply

logger = setup_logger(__name__)

RngLike = Union[np.random.Generator, int, None]


def _as_rng(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class SupportSet:
    """Conjunto S de coordenadas distintas, em ordem crescente (forma canônica)."""
    indices: tuple

    @classmethod
    def of(cls, indices: Iterable[int], n: Optional[int] = None) -> "SupportSet":
        values = [int(i) for i in indices]
        if len(set(values)) != len(values):
            raise InvalidArgumentError("Suporte com índices repetidos")
        if n is not None and any(i < 0 or i >= n for i in values):
            raise InvalidArgumentError(f"Suporte com índices fora de [0, {n})")
        return cls(indices=tuple(sorted(values)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i: object) -> bool:
        return i in set(self.indices)


@dataclass(frozen=True)
class PeelRecord:
    order: int
    index: int
    isolated: int
    at_d_minus_2: bool
    estimate: float
    isolated_rows: tuple = ()

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "index": self.index,
            "isolated": self.isolated,
            "at_d_minus_2": self.at_d_minus_2,
            "estimate": self.estimate,
        }


@dataclass(frozen=True)
class RecoveryResult:
    """
    Estimativa x' (suporte contido em S) e o log do peeling.

    point_errors (Y_j) e component_sizes (D_j) só existem quando o sinal verdadeiro
    foi fornecido; ambos seguem a ordem canônica de S.
    """
    estimate: Signal
    peel_log: List[PeelRecord]
    support: SupportSet
    point_errors: Optional[np.ndarray] = None
    component_sizes: Optional[np.ndarray] = None

    def to_jsonl(self) -> str:
        """Uma linha JSON por aresta removida, na ordem do peeling."""
        return "\n".join(json.dumps(r.to_dict()) for r in self.peel_log)


@dataclass(frozen=True)
class RecoveryError:
    """Peeling abortado: estimativa parcial e o suporte residual T."""
    partial: Signal
    residual_support: List[int]
    peel_log: List[PeelRecord]
    kind: str = "Aborted"

    def raise_for_abort(self):
        raise RecoveryAbortedError(
            f"Peeling abortado com {len(self.residual_support)} arestas restantes",
            residual_support=self.residual_support,
        )


def median_estimate(values: Sequence[float]) -> float:
    """Mediana; em tamanho par, média dos dois elementos centrais."""
    return float(np.median(values))


class _RankSet:
    """
    Subconjunto de {0..size-1} com inserção, remoção e seleção por posto (árvore de Fenwick).

    A escolha "aresta aleatória do conjunto elegível" usa o posto na ordem
    canônica, o que a torna independente da ordem de inserção.
    """

    def __init__(self, size: int, members: Iterable[int] = ()):
        self._size = size
        self._present = bytearray(size)
        tree = [0] * (size + 1)
        count = 0
        for i in members:
            if not self._present[i]:
                self._present[i] = 1
                tree[i + 1] += 1
                count += 1
        for i in range(1, size + 1):
            parent = i + (i & -i)
            if parent <= size:
                tree[parent] += tree[i]
        self._tree = tree
        self._count = count
        self._top = 1 << size.bit_length()

    def __len__(self) -> int:
        return self._count

    def __contains__(self, i: int) -> bool:
        return bool(self._present[i])

    def _bump(self, i: int, delta: int) -> None:
        i += 1
        tree, size = self._tree, self._size
        while i <= size:
            tree[i] += delta
            i += i & -i

    def add(self, i: int) -> None:
        if not self._present[i]:
            self._present[i] = 1
            self._count += 1
            self._bump(i, 1)

    def discard(self, i: int) -> None:
        if self._present[i]:
            self._present[i] = 0
            self._count -= 1
            self._bump(i, -1)

    def select(self, rank: int) -> int:
        """Elemento de posto `rank` (0 = menor)."""
        pos, step, tree, size = 0, self._top, self._tree, self._size
        while step:
            nxt = pos + step
            if nxt <= size and tree[nxt] <= rank:
                pos = nxt
                rank -= tree[nxt]
            step >>= 1
        return pos


class PeelState:
    """
    Estado incremental do peeling sobre as linhas atingidas por S.

    As linhas são renumeradas em vértices compactos. Para cada vértice guardamos
    |P(q)| e o XOR das arestas sobreviventes que passam por ele: quando |P(q)|
    cai para 1, o XOR é exatamente a aresta que sobrou. J1/J2 contêm as arestas
    com |L_j| >= d-1 e >= d-2.
    """

    def __init__(self, matrix: SketchMatrix, sketch: Sketch, support: SupportSet):
        d = matrix.rows.shape[1]
        k = len(support)
        cols = support.as_array()
        rows = matrix.rows[cols]

        vertex_rows, inverse, counts = np.unique(rows.ravel(), return_inverse=True, return_counts=True)
        inverse = inverse.reshape(k, d)
        xor = np.zeros(len(vertex_rows), dtype=np.int64)
        np.bitwise_xor.at(xor, inverse.ravel(), np.repeat(np.arange(k, dtype=np.int64), d))
        isolated = (counts[inverse] == 1).sum(axis=1)

        self.d = d
        self.support = support
        self.vertex_rows = vertex_rows
        self.edge_vertices = inverse.tolist()
        self.edge_signs = matrix.signs[cols].tolist()
        self.preimage_count = counts.tolist()
        self.preimage_xor = xor.tolist()
        self.residual = sketch.values[vertex_rows].tolist()
        self.isolated = isolated.tolist()
        self.alive = _RankSet(k, range(k))
        self.j1 = _RankSet(k, np.flatnonzero(isolated >= d - 1).tolist())
        self.j2 = _RankSet(k, np.flatnonzero(isolated >= d - 2).tolist())

    def choose(self, rng: np.random.Generator) -> Optional[int]:
        """Aresta uniforme em J1; se vazio, uniforme em J2; None se ambos vazios."""
        pool = self.j1 if len(self.j1) else self.j2
        if not len(pool):
            return None
        return pool.select(int(rng.integers(len(pool))))

    def peel(self, j: int) -> tuple:
        """Estima a aresta j, subtrai sua contribuição e atualiza P(q), L e J. Custo O(d)."""
        count, xor, residual = self.preimage_count, self.preimage_xor, self.residual
        vertices, signs = self.edge_vertices[j], self.edge_signs[j]

        isolated_values = [signs[t] * residual[v] for t, v in enumerate(vertices) if count[v] == 1]
        isolated_rows = tuple(int(self.vertex_rows[v]) for v in vertices if count[v] == 1)
        estimate = median_estimate(isolated_values)

        threshold1, threshold2 = self.d - 1, self.d - 2
        for t, v in enumerate(vertices):
            residual[v] -= estimate * signs[t]
            count[v] -= 1
            xor[v] ^= j
            if count[v] == 1:
                other = xor[v]
                self.isolated[other] += 1
                if self.isolated[other] >= threshold2:
                    self.j2.add(other)
                if self.isolated[other] >= threshold1:
                    self.j1.add(other)

        self.j1.discard(j)
        self.j2.discard(j)
        self.alive.discard(j)
        return estimate, isolated_rows

    def remaining(self) -> List[int]:
        return [self.support.indices[j] for j in range(len(self.support)) if j in self.alive]


def _check_inputs(matrix: SketchMatrix, sketch: Sketch, support: SupportSet) -> None:
    if sketch.params != matrix.params or sketch.binary != matrix.binary:
        raise ParamsMismatchError("Sketch e matriz foram gerados com parâmetros diferentes")
    if matrix.binary:
        raise InvalidArgumentError("O peeling usa a matriz com sinais, não a forma binária")
    if support.indices and (support.indices[0] < 0 or support.indices[-1] >= matrix.n):
        raise InvalidArgumentError(f"Suporte com índices fora de [0, {matrix.n})")
    if len(support) > matrix.params.k:
        logger.warning(f"Suporte com {len(support)} índices, acima do k={matrix.params.k} dos parâmetros")


def recover(
    matrix: SketchMatrix,
    sketch: Sketch,
    support: Union[SupportSet, Iterable[int]],
    rng: RngLike = None,
    truth: Optional[SignalLike] = None,
) -> Union[RecoveryResult, RecoveryError]:
    """
    Recupera x' com supp(x') ⊆ S a partir de b = Ax + ν. Tempo O(dk) mais a seleção por posto.

    Args:
        matrix: Matriz A
        sketch: Sketch b gerado por `matrix`
        support: Suporte S
        rng: Gerador (ou semente) usado para escolher a próxima aresta
        truth: Sinal verdadeiro, opcional; habilita os diagnósticos Y_j e D_j

    Returns:
        RecoveryResult, ou RecoveryError se nenhuma aresta for elegível
    """
    if not isinstance(support, SupportSet):
        support = SupportSet.of(support)
    _check_inputs(matrix, sketch, support)
    rng = _as_rng(rng)

    state = PeelState(matrix, sketch, support)
    d = state.d
    estimates = {}
    log: List[PeelRecord] = []

    for order in range(len(support)):
        j = state.choose(rng)
        if j is None:
            remaining = state.remaining()
            logger.warning(f"Peeling abortado após {order} de {len(support)} arestas")
            return _error(matrix, support, estimates, log, remaining)
        estimate, isolated_rows = state.peel(j)
        index = support.indices[j]
        estimates[index] = estimate
        log.append(PeelRecord(
            order=order,
            index=index,
            isolated=len(isolated_rows),
            at_d_minus_2=len(isolated_rows) < d - 1,
            estimate=estimate,
            isolated_rows=isolated_rows,
        ))

    result = RecoveryResult(
        estimate=_signal(matrix.n, estimates),
        peel_log=log,
        support=support,
    )
    if truth is not None:
        result = _with_diagnostics(result, matrix, sketch, truth)
    return result


def _signal(n: int, estimates: dict) -> Signal:
    indices = sorted(estimates)
    return Signal(
        n=n,
        indices=np.asarray(indices, dtype=np.int64),
        values=np.asarray([estimates[i] for i in indices], dtype=np.float64),
    )


def _error(matrix: SketchMatrix, support: SupportSet, estimates: dict, log, remaining) -> RecoveryError:
    return RecoveryError(partial=_signal(matrix.n, estimates), residual_support=remaining, peel_log=log)


def _with_diagnostics(result: RecoveryResult, matrix: SketchMatrix, sketch: Sketch, truth: SignalLike) -> RecoveryResult:
    """Y_j = mediana sobre L_j (no momento da remoção) de A_qj * (b - A x_S)_q; D_j = tamanho do componente."""
    from .hypergraph_analysis import components

    x = truth.to_dense() if isinstance(truth, Signal) else np.asarray(truth, dtype=np.float64)
    head = np.zeros(matrix.n)
    cols = result.support.as_array()
    head[cols] = x[cols]
    corruption = sketch.values - apply(matrix, head).values

    by_index = {r.index: r for r in result.peel_log}
    point_errors = np.zeros(len(result.support))
    for pos, index in enumerate(result.support.indices):
        record = by_index[index]
        column = dict(matrix.column(index))
        point_errors[pos] = median_estimate([column[q] * corruption[q] for q in record.isolated_rows])

    report = components(matrix, result.support)
    return RecoveryResult(
        estimate=result.estimate,
        peel_log=result.peel_log,
        support=result.support,
        point_errors=point_errors,
        component_sizes=report.edge_sizes.copy(),
    )


def recover_reference(
    matrix: SketchMatrix,
    sketch: Sketch,
    support: Union[SupportSet, Iterable[int]],
    rng: RngLike = None,
) -> Union[RecoveryResult, RecoveryError]:
    """
    Peeler de referência: recalcula P(q) e L_j do zero a cada rodada (tempo quadrático).

    Consome o gerador da mesma forma que `recover` e escolhe pelo mesmo posto na
    ordem canônica, então os resultados coincidem bit a bit.
    """
    if not isinstance(support, SupportSet):
        support = SupportSet.of(support)
    _check_inputs(matrix, sketch, support)
    rng = _as_rng(rng)

    d = matrix.rows.shape[1]
    cols = support.indices
    b = sketch.values.tolist()
    rows = [matrix.rows[j].tolist() for j in cols]
    signs = [matrix.signs[j].tolist() for j in cols]
    alive = list(range(len(cols)))
    estimates = {}
    log: List[PeelRecord] = []

    for order in range(len(cols)):
        preimages = {}
        for j in alive:
            for q in rows[j]:
                preimages[q] = preimages.get(q, 0) + 1
        isolated = {j: [t for t, q in enumerate(rows[j]) if preimages[q] == 1] for j in alive}

        pool = [j for j in alive if len(isolated[j]) >= d - 1]
        if not pool:
            pool = [j for j in alive if len(isolated[j]) >= d - 2]
        if not pool:
            remaining = [cols[j] for j in alive]
            return _error(matrix, support, estimates, log, remaining)

        j = pool[int(rng.integers(len(pool)))]
        slots = isolated[j]
        estimate = median_estimate([signs[j][t] * b[rows[j][t]] for t in slots])
        for t, q in enumerate(rows[j]):
            b[q] -= estimate * signs[j][t]
        alive.remove(j)

        estimates[cols[j]] = estimate
        log.append(PeelRecord(
            order=order,
            index=cols[j],
            isolated=len(slots),
            at_d_minus_2=len(slots) < d - 1,
            estimate=estimate,
            isolated_rows=tuple(rows[j][t] for t in slots),
        ))

    return RecoveryResult(estimate=_signal(matrix.n, estimates), peel_log=log, support=support)


def repetitions_for(c: float) -> int:
    """Número de repetições paralelas (12c) para probabilidade de falha k^-c."""
    if c <= 0:
        raise InvalidArgumentError(f"c deve ser positivo, recebido {c}")
    return max(1, math.ceil(12 * c))


def recover_robust(
    matrices: Sequence[SketchMatrix],
    sketches: Sequence[Sketch],
    support: Union[SupportSet, Iterable[int]],
    rng: RngLike = None,
) -> Signal:
    """
    Repetição paralela: roda `recover` em cada par (matriz, sketch) e devolve a mediana ponto a ponto.

    Repetições abortadas contribuem com estimativa 0 em todas as coordenadas.
    O mesmo gerador é consumido em sequência, então m=1 equivale a `recover`.

    Raises:
        RecoveryAbortedError: se todas as repetições abortarem
    """
    if len(matrices) != len(sketches) or not matrices:
        raise InvalidArgumentError(f"Esperado o mesmo número (>0) de matrizes e sketches: {len(matrices)} e {len(sketches)}")
    if not isinstance(support, SupportSet):
        support = SupportSet.of(support)
    rng = _as_rng(rng)

    n = matrices[0].n
    cols = support.as_array()
    estimates = np.zeros((len(matrices), len(support)))
    aborted = 0
    residual: List[int] = []
    for i, (matrix, sketch) in enumerate(zip(matrices, sketches)):
        if matrix.n != n:
            raise InvalidArgumentError("Todas as matrizes devem ter a mesma dimensão n")
        outcome = recover(matrix, sketch, support, rng)
        if isinstance(outcome, RecoveryError):
            aborted += 1
            residual = outcome.residual_support
            continue
        estimates[i] = outcome.estimate.to_dense()[cols]

    if aborted == len(matrices):
        raise RecoveryAbortedError(f"Todas as {aborted} repetições abortaram", residual_support=residual)
    if aborted:
        logger.warning(f"{aborted} de {len(matrices)} repetições abortaram; usando estimativa 0 nelas")

    combined = np.median(estimates, axis=0)
    return Signal(n=n, indices=cols.copy(), values=combined)


def error_ratio(
    estimate: SignalLike,
    x: SignalLike,
    support: Union[SupportSet, Iterable[int]],
    nu: Optional[Sequence[float]] = None,
    norm: Union[Norm, str] = Norm.L2,
) -> float:
    """
    ‖x' - x_S‖ / (‖x - x_S‖ + ‖ν‖) na norma escolhida.

    Com denominador zero: 0 se x' = x_S, +inf caso contrário.
    """
    order = 2 if Norm(norm) is Norm.L2 else 1
    xd = x.to_dense() if isinstance(x, Signal) else np.asarray(x, dtype=np.float64)
    if isinstance(estimate, Signal):
        est = np.zeros(len(xd))
        est[estimate.indices] = estimate.values
    else:
        est = np.asarray(estimate, dtype=np.float64)

    if not isinstance(support, SupportSet):
        support = SupportSet.of(support)
    head = np.zeros(len(xd))
    cols = support.as_array()
    head[cols] = xd[cols]

    numerator = float(np.linalg.norm(est - head, ord=order))
    noise = 0.0 if nu is None else float(np.linalg.norm(np.asarray(nu, dtype=np.float64), ord=order))
    denominator = float(np.linalg.norm(xd - head, ord=order)) + noise
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else math.inf
    return numerator / denominator
