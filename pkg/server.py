"""
Servidor FastAPI para sketches nomeados: criação, atualização pontual e set query
Também roda experimentos pequenos de forma síncrona
"""
import threading
from datetime import datetime
from functools import lru_cache
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from config.settings import settings
from config.logger import setup_logger
from harness.models import ExperimentConfig
from harness.runner import run_experiment
from sketches.errors import SketchError
from sketches.set_query import RecoveryError, recover
from sketches.sketch_core import Norm, Sketch, SketchMatrix, SketchParams, build_matrix, derive_params, update
from tools.redis_tools import delete_sketch, load_sketch, save_sketch

logger = setup_logger(__name__)

app = FastAPI(title="Laboratório de Set Query", version="1.0.0")

# Escritor único por processo
_write_lock = threading.Lock()


# --- Models ---
class CreateSketchRequest(BaseModel):
    name: str = Field(min_length=1, max_length=128)
    n: int
    k: int
    eps: float
    d: Optional[int] = None
    norm: Norm = Norm.L2
    seed: Optional[int] = None


class PointUpdate(BaseModel):
    index: int
    delta: float


class UpdateRequest(BaseModel):
    index: Optional[int] = None
    delta: Optional[float] = None
    updates: List[PointUpdate] = Field(default_factory=list)

    def all_updates(self) -> List[PointUpdate]:
        items = list(self.updates)
        if self.index is not None and self.delta is not None:
            items.insert(0, PointUpdate(index=self.index, delta=self.delta))
        return items


class RecoverRequest(BaseModel):
    support: List[int]
    seed: Optional[int] = None


# --- Helpers ---

@lru_cache(maxsize=8)
def _matrix_for(params: SketchParams) -> SketchMatrix:
    """A matriz é reconstruída da semente; o sketch guardado leva só os parâmetros."""
    return build_matrix(params)


def _require_sketch(name: str) -> Sketch:
    sketch = load_sketch(name)
    if sketch is None:
        raise HTTPException(status_code=404, detail=f"Sketch '{name}' não encontrado")
    return sketch


def _error(status_code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"status": "error", "message": message})


@app.exception_handler(HTTPException)
async def http_error_handler(request: Request, exc: HTTPException):
    return _error(exc.status_code, str(exc.detail))


@app.exception_handler(SketchError)
async def sketch_error_handler(request: Request, exc: SketchError):
    logger.error(f"{request.url.path}: {type(exc).__name__}: {exc}")
    return _error(400, str(exc))


@app.exception_handler(Exception)
async def unexpected_error_handler(request: Request, exc: Exception):
    logger.error(f"Erro inesperado em {request.url.path}: {exc}")
    return _error(500, "Erro interno")


# --- Endpoints ---
@app.get("/health")
async def health():
    return {"status": "healthy", "ts": datetime.now().isoformat()}


@app.post("/sketches", status_code=201)
def create_sketch(req: CreateSketchRequest):
    params = derive_params(req.n, req.k, req.eps, norm=req.norm, d=req.d, seed=req.seed)
    matrix = _matrix_for(params)
    with _write_lock:
        save_sketch(req.name, Sketch(params=params, values=np.zeros(matrix.num_rows)))
    logger.info(f"Sketch '{req.name}' criado: n={params.n}, k={params.k}, w={params.w}")
    return {"status": "created", "name": req.name, "params": params.model_dump(mode="json")}


@app.post("/sketches/{name}/updates")
def apply_updates(name: str, req: UpdateRequest):
    items = req.all_updates()
    if not items:
        raise HTTPException(status_code=400, detail="Nenhuma atualização informada")
    with _write_lock:
        sketch = _require_sketch(name)
        matrix = _matrix_for(sketch.params)
        for item in items:
            update(sketch, matrix, item.index, item.delta)
        save_sketch(name, sketch)
    return {"status": "ok", "name": name, "applied": len(items)}


@app.post("/sketches/{name}/recover")
def recover_sketch(name: str, req: RecoverRequest):
    sketch = _require_sketch(name)
    matrix = _matrix_for(sketch.params)
    outcome = recover(matrix, sketch, req.support, rng=req.seed)

    if isinstance(outcome, RecoveryError):
        logger.warning(f"Set query abortado em '{name}': {len(outcome.residual_support)} arestas restantes")
        return {
            "status": "aborted",
            "aborted": True,
            "estimate": outcome.partial.pairs(),
            "residual_support": list(outcome.residual_support),
            "peeled": len(outcome.peel_log),
        }
    return {
        "status": "ok",
        "aborted": False,
        "estimate": outcome.estimate.pairs(),
        "peeled": len(outcome.peel_log),
        "peeled_at_d_minus_2": sum(r.at_d_minus_2 for r in outcome.peel_log),
    }


@app.delete("/sketches/{name}")
def remove_sketch(name: str):
    with _write_lock:
        if not delete_sketch(name):
            raise HTTPException(status_code=404, detail=f"Sketch '{name}' não encontrado")
    return {"status": "deleted", "name": name}


@app.post("/experiments")
def run_experiment_endpoint(config: ExperimentConfig):
    report = run_experiment(config, write=False)
    # quantis podem ser NaN/Infinity; o corpo sai direto do serializador do pydantic
    body = f'{{"status": "ok", "summary": {report.summary.model_dump_json()}}}'
    return Response(content=body, media_type="application/json")


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("server:app", host=settings.server_host, port=settings.server_port, log_level=settings.log_level.lower())
