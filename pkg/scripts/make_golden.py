"""
Gera os arquivos de referência usados pelos testes golden.
Uso:
  python scripts/make_golden.py [diretório]   (padrão: tests/golden)

Grava a taxa de sucesso de uma configuração fixa de set_query_l2 e os bytes SQS1
(com sha256) de uma matriz montada à mão. Rodar de novo só quando o formato ou o
algoritmo mudarem de propósito.
"""
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from config.logger import setup_logger
from harness.models import ExperimentConfig, ExperimentKind
from harness.runner import run_experiment
from sketches.codec import content_hash, serialize
from sketches.sketch_core import SketchMatrix, SketchParams

logger = setup_logger("make_golden")

# w bem acima do mínimo: a razão de erro fica longe de eps e a taxa de referência é estável
GOLDEN_CONFIG = dict(
    kind=ExperimentKind.SET_QUERY_L2,
    n=2_000,
    k=10,
    eps=0.5,
    w=49_000,
    tail_sigma=0.01,
    trials=100,
    seed=2024,
)
GOLDEN_MATRIX = {
    "params": {"n": 2, "k": 1, "eps": 1.0, "d": 7, "norm": "L2", "seed": 0, "w": 84},
    "rows": [[0, 1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12, 13]],
    "signs": [[1, -1, 1, -1, 1, -1, 1], [-1] * 7],
}


def golden_matrix() -> SketchMatrix:
    rows = np.array(GOLDEN_MATRIX["rows"], dtype=np.int64)
    signs = np.array(GOLDEN_MATRIX["signs"], dtype=np.int8)
    rows.setflags(write=False)
    signs.setflags(write=False)
    return SketchMatrix(params=SketchParams(**GOLDEN_MATRIX["params"]), rows=rows, signs=signs)


def make_golden(out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(ExperimentConfig(**GOLDEN_CONFIG), write=False)
    matrix = golden_matrix()

    golden = {
        "config": {k: (v.value if hasattr(v, "value") else v) for k, v in GOLDEN_CONFIG.items()},
        "success_rate": report.summary.success_rate,
        "abort_rate": report.summary.abort_rate,
        "matrix": GOLDEN_MATRIX,
        "matrix_hex": serialize(matrix).hex(),
        "matrix_sha256": content_hash(matrix),
    }
    path = out_dir / "set_query_l2.json"
    path.write_text(json.dumps(golden, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Golden gravado em {path}: sucesso={golden['success_rate']:.3f}")
    return path


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/golden")
    print(make_golden(target))
