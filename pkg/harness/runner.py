"""
Execução de experimentos com sementes por tentativa

Cada tentativa recebe uma semente derivada da semente mestre, então o resultado
não depende da ordem de execução nem do número de processos.
"""
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from config.settings import settings
from config.logger import setup_logger, with_context
from sketches.block_sparse import (
    BlockParams,
    bhh_apply,
    bhh_build,
    bhh_locate,
    block_set_query_eps,
    err_block,
    recover_block_sparse,
)
from sketches.errors import RecoveryAbortedError
from sketches.hypergraph_analysis import Peelability, components, peelability
from sketches.locators import (
    CountSketchParams,
    cs_apply,
    cs_build,
    err_k,
    locate_candidates,
    recover_zipfian,
    top_k_threshold,
    zipfian_set_query_eps,
)
from sketches.set_query import RecoveryError, SupportSet, error_ratio, recover, recover_robust
from sketches.sketch_core import (
    Norm,
    Signal,
    SketchMatrix,
    SketchParams,
    add_noise,
    apply,
    build_matrix,
    derive_params,
)
from .generators import (
    gen_block_sparse,
    gen_geometric,
    gen_noise,
    gen_zipfian,
    head_signal,
    make_rng,
    random_support,
    trial_seeds,
)
from .models import ExperimentConfig, ExperimentKind, Report, TrialRecord
from .reports import summarize, write_jsonl, write_summary_csv

logger = setup_logger(__name__)


def _next_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 63))


def _matrices(config: ExperimentConfig, k: int, eps: float, rng: np.random.Generator, norm: Norm = Norm.L2) -> List[SketchMatrix]:
    matrices = []
    for _ in range(config.repetitions):
        seed = _next_seed(rng)
        if config.w is not None and k == config.k:
            params = SketchParams(n=config.n, k=k, eps=eps, d=config.d, norm=norm, seed=seed, w=config.w)
        else:
            params = derive_params(config.n, k, eps, norm=norm, d=config.d, seed=seed)
        matrices.append(build_matrix(params))
    return matrices


def _peeling_matrix(n: int, k: int, d: int, rng: np.random.Generator) -> SketchMatrix:
    """w = 2d(d-1)k, o limiar de terminação (eps=1 deixa esse termo dominar para d >= 7)."""
    return build_matrix(derive_params(n, k, 1.0, d=d, seed=_next_seed(rng)))


def _relative_error(estimate: Signal, x: np.ndarray, support: SupportSet) -> float:
    head = np.zeros(len(x))
    cols = support.as_array()
    head[cols] = x[cols]
    scale = float(np.linalg.norm(head))
    gap = float(np.linalg.norm(estimate.to_dense() - head))
    if scale == 0.0:
        return 0.0 if gap == 0.0 else math.inf
    return gap / scale


def _diagnostics(matrix: SketchMatrix, support: SupportSet) -> dict:
    report = components(matrix, support)
    return {"class_counts": report.class_counts, "max_component": report.max_size}


def _bounded_ratio(distance: float, err: float) -> float:
    if err == 0.0:
        return 0.0 if distance <= 1e-9 else math.inf
    return distance / err


def _set_query_instance(config: ExperimentConfig, rng: np.random.Generator):
    """
    S, x, as m matrizes e ν de uma tentativa, mais o gerador do peeling.

    ν e o peeling têm fluxos próprios, sorteados antes das matrizes: a mesma
    semente dá o mesmo S, x, primeira matriz e ν para qualquer número de repetições.
    """
    support = random_support(config.n, config.k, rng)
    x = head_signal(config.n, support, config.head_scale, rng, config.tail_sigma)
    noise_rng = make_rng(_next_seed(rng))
    recovery_rng = make_rng(_next_seed(rng))
    matrices = _matrices(config, config.k, config.eps, rng, config.norm)
    nu = gen_noise(config.noise, matrices[0].num_rows, matrices[0], support, noise_rng)
    return support, x, matrices, nu, recovery_rng


def _set_query_trial(config: ExperimentConfig, rng: np.random.Generator) -> dict:
    norm = config.norm
    support, x, matrices, nu, recovery_rng = _set_query_instance(config, rng)
    w = matrices[0].num_rows
    sketches = [add_noise(apply(A, x), nu) for A in matrices]

    aborted = False
    try:
        estimate = recover_robust(matrices, sketches, support, recovery_rng)
    except RecoveryAbortedError:
        aborted = True
        estimate = Signal.zeros(config.n)
    ratio = error_ratio(estimate, x, support, nu, norm)
    return dict(
        parameter=config.eps, k=config.k, w=w,
        error_ratio=ratio, success=(not aborted) and ratio <= config.eps, aborted=aborted,
        **_diagnostics(matrices[0], support),
    )


def _zipfian_trial(config: ExperimentConfig, rng: np.random.Generator) -> dict:
    if config.family == "geometric":
        x = gen_geometric(config.n, None, config.ratio, config.scale, _next_seed(rng)).to_dense()
    else:
        x = gen_zipfian(config.n, None, config.alpha, config.scale, _next_seed(rng)).to_dense()

    cs_params = CountSketchParams.derive(config.n, config.k, config.eps, seed=_next_seed(rng))
    table = cs_apply(cs_build(cs_params), x)
    candidates = locate_candidates(table, config.k)
    sq_eps = config.sq_eps or zipfian_set_query_eps(config.n, config.eps)
    matrices = _matrices(config, len(candidates), sq_eps, rng)
    sketches = [apply(A, x) for A in matrices]

    top = set(top_k_threshold(x, config.k).indices.tolist())
    coverage = len(top & set(candidates.indices)) / max(len(top), 1)

    aborted = False
    try:
        estimate = recover_zipfian(table, matrices, sketches, config.k, config.eps, rng).to_dense()
    except RecoveryAbortedError:
        aborted = True
        estimate = np.zeros(config.n)
    err = err_k(x, config.k)
    distance = float(np.linalg.norm(estimate - x))
    return dict(
        parameter=config.eps, k=config.k, w=matrices[0].num_rows,
        error_ratio=_bounded_ratio(distance, err),
        success=(not aborted) and distance <= (1 + config.eps) * err + 1e-9,
        aborted=aborted,
        extra={"candidate_coverage": coverage, "candidates": len(candidates)},
        **_diagnostics(matrices[0], candidates),
    )


def _block_sparse_trial(config: ExperimentConfig, rng: np.random.Generator) -> dict:
    params = BlockParams.derive(config.n, config.b, config.k, config.eps, seed=_next_seed(rng))
    x = gen_block_sparse(
        config.n, config.b, config.k, config.block_norm, config.tail_sigma, _next_seed(rng)
    ).to_dense()
    structure = bhh_apply(bhh_build(params), x)
    support = bhh_locate(structure, params.s)
    sq_eps = config.sq_eps or block_set_query_eps(config.eps)
    matrices = _matrices(config, config.k, sq_eps, rng)
    sketches = [apply(A, x) for A in matrices]

    err = err_block(x, config.k, config.b)
    located = x.copy()
    located[support.as_array()] = 0.0
    located_ok = float(np.linalg.norm(located)) <= (1 + config.eps) * err + 1e-9

    aborted = False
    try:
        estimate = recover_block_sparse(structure, matrices, sketches, params, rng).to_dense()
    except RecoveryAbortedError:
        aborted = True
        estimate = np.zeros(config.n)
    distance = float(np.linalg.norm(estimate - x))
    return dict(
        parameter=config.eps, k=config.k, w=matrices[0].num_rows,
        error_ratio=_bounded_ratio(distance, err),
        success=(not aborted) and distance <= (1 + config.eps) * err + 1e-9,
        aborted=aborted,
        extra={"located_ok": located_ok, "blocks": params.s},
        **_diagnostics(matrices[0], support),
    )


def _peelability_trial(config: ExperimentConfig, rng: np.random.Generator) -> dict:
    support = random_support(config.n, config.k, rng)
    x = head_signal(config.n, support, config.head_scale, rng)
    matrix = _peeling_matrix(config.n, config.k, config.d, rng)
    outcome = recover(matrix, apply(matrix, x), support, rng)
    aborted = isinstance(outcome, RecoveryError)
    report = components(matrix, support)
    all_good = peelability(report) is Peelability.ALL_GOOD
    estimate = outcome.partial if aborted else outcome.estimate
    return dict(
        parameter=float(config.k), k=config.k, w=matrix.num_rows,
        error_ratio=_relative_error(estimate, x, support),
        success=not (all_good and aborted), aborted=aborted,
        class_counts=report.class_counts, max_component=report.max_size,
        extra={"all_good": all_good},
    )


def _runtime_trial(config: ExperimentConfig, rng: np.random.Generator, trial: int) -> dict:
    k = config.k_values[trial % len(config.k_values)]
    support = random_support(config.n, k, rng)
    x = head_signal(config.n, support, config.head_scale, rng)
    matrix = _peeling_matrix(config.n, k, config.d, rng)
    sketch = apply(matrix, x)

    started = time.perf_counter()
    outcome = recover(matrix, sketch, support, rng)
    elapsed = time.perf_counter() - started

    aborted = isinstance(outcome, RecoveryError)
    estimate = outcome.partial if aborted else outcome.estimate
    ratio = _relative_error(estimate, x, support)
    return dict(
        parameter=float(k), k=k, w=matrix.num_rows,
        error_ratio=ratio, success=not aborted and ratio <= 1e-9, aborted=aborted,
        wall_time_s=elapsed,
    )


_TRIALS: Dict[ExperimentKind, Callable] = {
    ExperimentKind.SET_QUERY_L2: _set_query_trial,
    ExperimentKind.SET_QUERY_L1: _set_query_trial,
    ExperimentKind.ZIPFIAN: _zipfian_trial,
    ExperimentKind.BLOCK_SPARSE: _block_sparse_trial,
    ExperimentKind.PEELABILITY: _peelability_trial,
}


def run_trial(config: ExperimentConfig, trial: int, seed: int) -> TrialRecord:
    """Executa uma tentativa isolada (todo o estado aleatório sai de `seed`)."""
    rng = make_rng(seed)
    started = time.perf_counter()
    if config.kind is ExperimentKind.RUNTIME_SCALING:
        fields = _runtime_trial(config, rng, trial)
    else:
        fields = _TRIALS[config.kind](config, rng)
    with_context(logger, run=config.run_name, trial=trial, seed=seed).debug(
        f"Tentativa {trial}: sucesso={fields['success']}, abortada={fields['aborted']}"
    )
    fields.setdefault("wall_time_s", time.perf_counter() - started)
    if not config.timed:
        fields["wall_time_s"] = None
    return TrialRecord(trial=trial, seed=seed, kind=config.kind, n=config.n, **fields)


def _run_indexed(args) -> TrialRecord:
    config, trial, seed = args
    return run_trial(config, trial, seed)


def run_experiment(config: ExperimentConfig, write: bool = True) -> Report:
    """
    Roda todas as tentativas, grava JSON lines e o resumo em CSV.

    Returns:
        Report com registros em ordem de tentativa e o resumo (summary.passed
        indica se o limiar de sucesso configurado foi atingido)
    """
    seeds = trial_seeds(config.seed, config.trials)
    workers = config.max_workers or settings.max_workers
    jobs = [(config, trial, seed) for trial, seed in enumerate(seeds)]
    log = with_context(logger, run=config.run_name, kind=config.kind.value, seed=config.seed)
    log.info(f"Experimento {config.run_name}: {config.trials} tentativas, {workers} processo(s)")

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_indexed, jobs))
    else:
        records = [_run_indexed(job) for job in jobs]

    summary = summarize(config, records)
    report = Report(config=config, records=records, summary=summary)

    if write:
        out_dir = Path(config.output_dir or settings.output_dir)
        jsonl = write_jsonl(records, out_dir / f"{config.run_name}.jsonl", include_timing=config.timed)
        csv = write_summary_csv(summary, out_dir / f"{config.run_name}_summary.csv")
        report = report.model_copy(update={"jsonl_path": str(jsonl), "summary_path": str(csv)})

    log.info(
        f"Experimento {config.run_name} concluído: sucesso={summary.success_rate:.3f}, "
        f"abortos={summary.abort_rate:.3f}, aprovado={summary.passed}"
    )
    return report
