"""
Diagnóstico estrutural do hipergrafo d-uniforme induzido por A restrita a S

Vértices são as linhas de A atingidas por S; cada coordenada de S é uma
hiperaresta com d vértices. Um componente com s arestas e r vértices é
hiperárvore se r = s(d-1)+1, unicíclico se r = s(d-1) e complexo caso contrário.
"""
import json
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from config.logger import setup_logger
from .errors import InsufficientSamplesError
from .set_query import SupportSet
from .sketch_core import SketchMatrix

logger = setup_logger(__name__)


class ComponentClass(str, Enum):
    HYPERTREE = "Hypertree"
    UNICYCLIC = "Unicyclic"
    COMPLEX = "Complex"


class Peelability(str, Enum):
    ALL_GOOD = "AllGood"
    HAS_COMPLEX = "HasComplex"


def classify(num_vertices: int, num_edges: int, d: int) -> ComponentClass:
    if num_vertices == num_edges * (d - 1) + 1:
        return ComponentClass.HYPERTREE
    if num_vertices == num_edges * (d - 1):
        return ComponentClass.UNICYCLIC
    return ComponentClass.COMPLEX


@dataclass(frozen=True)
class Component:
    edges: tuple      # coordenadas de S
    vertices: tuple   # linhas de A
    kind: ComponentClass

    @property
    def size(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class ComponentReport:
    """
    Componentes conexos de S, o componente de cada aresta e D_i (tamanho do componente da aresta i).

    `component_ids` e `edge_sizes` seguem a ordem canônica de S.
    """
    d: int
    support: SupportSet
    components: List[Component]
    component_ids: np.ndarray
    edge_sizes: np.ndarray

    @property
    def class_counts(self) -> Dict[str, int]:
        counts = Counter(c.kind.value for c in self.components)
        return {kind.value: counts.get(kind.value, 0) for kind in ComponentClass}

    @property
    def max_size(self) -> int:
        return int(self.edge_sizes.max()) if len(self.edge_sizes) else 0

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "edges": len(self.support),
            "components": [
                {"kind": c.kind.value, "edges": list(c.edges), "vertices": list(c.vertices)}
                for c in self.components
            ],
            "class_counts": self.class_counts,
            "max_size": self.max_size,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _find(parent: List[int], v: int) -> int:
    # path halving
    while parent[v] != v:
        parent[v] = parent[parent[v]]
        v = parent[v]
    return v


def _build_report(d: int, support: SupportSet, edge_rows: List[List[int]], labels: List[int]) -> ComponentReport:
    """Agrupa arestas por rótulo de componente (na ordem da primeira aparição) e classifica."""
    groups: Dict[int, List[int]] = {}
    for pos, label in enumerate(labels):
        groups.setdefault(label, []).append(pos)

    components = []
    component_ids = np.zeros(len(support), dtype=np.int64)
    edge_sizes = np.zeros(len(support), dtype=np.int64)
    for cid, members in enumerate(groups.values()):
        vertices = sorted({q for pos in members for q in edge_rows[pos]})
        components.append(Component(
            edges=tuple(support.indices[pos] for pos in members),
            vertices=tuple(vertices),
            kind=classify(len(vertices), len(members), d),
        ))
        component_ids[members] = cid
        edge_sizes[members] = len(members)
    return ComponentReport(d=d, support=support, components=components,
                           component_ids=component_ids, edge_sizes=edge_sizes)


def _edge_rows(matrix: SketchMatrix, support: Union[SupportSet, Iterable[int]]):
    if not isinstance(support, SupportSet):
        support = SupportSet.of(support, n=matrix.n)
    return support, matrix.rows[support.as_array()].tolist()


def components(matrix: SketchMatrix, support: Union[SupportSet, Iterable[int]]) -> ComponentReport:
    """Componentes conexos via union-find sobre as linhas compartilhadas."""
    support, edge_rows = _edge_rows(matrix, support)
    d = matrix.rows.shape[1]

    vertex_id: Dict[int, int] = {}
    parent: List[int] = []
    for rows in edge_rows:
        ids = []
        for q in rows:
            v = vertex_id.get(q)
            if v is None:
                v = vertex_id[q] = len(parent)
                parent.append(v)
            ids.append(v)
        root = _find(parent, ids[0])
        for v in ids[1:]:
            other = _find(parent, v)
            if other != root:
                parent[other] = root

    labels = [_find(parent, vertex_id[rows[0]]) if rows else -pos - 1 for pos, rows in enumerate(edge_rows)]
    report = _build_report(d, support, edge_rows, labels)
    logger.debug(f"Componentes: {report.class_counts}, maior D_i={report.max_size}")
    return report


def reference_components(matrix: SketchMatrix, support: Union[SupportSet, Iterable[int]]) -> ComponentReport:
    """Mesma análise por BFS sobre o grafo aresta-vértice (oráculo independente do union-find)."""
    support, edge_rows = _edge_rows(matrix, support)
    d = matrix.rows.shape[1]

    by_vertex: Dict[int, List[int]] = {}
    for pos, rows in enumerate(edge_rows):
        for q in rows:
            by_vertex.setdefault(q, []).append(pos)

    labels = [-1] * len(edge_rows)
    for start in range(len(edge_rows)):
        if labels[start] != -1:
            continue
        labels[start] = start
        queue = deque([start])
        while queue:
            pos = queue.popleft()
            for q in edge_rows[pos]:
                for other in by_vertex[q]:
                    if labels[other] == -1:
                        labels[other] = start
                        queue.append(other)
    return _build_report(d, support, edge_rows, labels)


def same_component(report: ComponentReport, i: int, j: int) -> bool:
    """C_{i,j}: as coordenadas i e j de S estão no mesmo componente?"""
    position = {index: pos for pos, index in enumerate(report.support.indices)}
    return bool(report.component_ids[position[i]] == report.component_ids[position[j]])


def peelability(report: ComponentReport) -> Peelability:
    """AllGood se todo componente é hiperárvore ou unicíclico (o peeling não aborta)."""
    if any(c.kind is ComponentClass.COMPLEX for c in report.components):
        return Peelability.HAS_COMPLEX
    return Peelability.ALL_GOOD


@dataclass(frozen=True)
class ComponentSizeMoments:
    samples: int
    edges: int
    mean: float
    mean_sq: float
    mean_fourth: float
    cov_sq: float


def component_size_stats(samples: Sequence[ComponentReport]) -> ComponentSizeMoments:
    """
    Momentos empíricos de D_i (ponderados por aresta) e a covariância média de D_i², D_j² para i != j.

    A covariância usa Var(Σ_i Z_i) - Σ_i Var(Z_i) = Σ_{i!=j} Cov(Z_i, Z_j), com Z = D²,
    sem materializar a matriz k x k. Exige o mesmo k em todas as amostras.
    """
    if len(samples) < 2:
        raise InsufficientSamplesError(f"São necessárias ao menos 2 amostras, recebidas {len(samples)}")

    sizes = np.concatenate([r.edge_sizes for r in samples]).astype(np.float64)
    mean, mean_sq, mean_fourth = (float(np.mean(sizes ** p)) for p in (1, 2, 4))

    ks = {len(r.edge_sizes) for r in samples}
    if len(ks) != 1:
        logger.warning(f"Amostras com k diferentes ({sorted(ks)}); covariância indefinida")
        cov_sq = float("nan")
    else:
        k = ks.pop()
        z = np.stack([r.edge_sizes for r in samples]).astype(np.float64) ** 2
        if k < 2:
            cov_sq = 0.0
        else:
            total_var = float(np.var(z.sum(axis=1), ddof=1))
            sum_var = float(np.var(z, axis=0, ddof=1).sum())
            cov_sq = (total_var - sum_var) / (k * (k - 1))

    return ComponentSizeMoments(
        samples=len(samples),
        edges=len(sizes),
        mean=mean,
        mean_sq=mean_sq,
        mean_fourth=mean_fourth,
        cov_sq=cov_sq,
    )
