"""
Agregação e exportação dos resultados (JSON lines, CSV, tabelas para gráficos)
"""
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config.settings import settings
from config.logger import setup_logger
from sketches.errors import InvalidArgumentError
from .models import ExperimentConfig, Report, Summary, TrialRecord

logger = setup_logger(__name__)

PLOT_COLUMNS = ["parameter", "quantile", "error_ratio"]


def quantile(values: Sequence[float], q: float) -> float:
    """Quantil com interpolação linear entre estatísticas de ordem (1..100, q=0.5 -> 50.5)."""
    if not 0.0 <= q <= 1.0:
        raise InvalidArgumentError(f"q deve estar em [0, 1], recebido {q}")
    if len(values) == 0:
        return math.nan
    return float(np.quantile(np.asarray(values, dtype=np.float64), q, method="linear"))


def summarize(config: ExperimentConfig, records: Sequence[TrialRecord], levels: Optional[Sequence[float]] = None) -> Summary:
    levels = settings.quantile_levels if levels is None else levels
    trials = len(records)
    if trials == 0:
        return Summary(kind=config.kind, trials=0, success_rate=0.0, abort_rate=0.0, passed=True)

    ratios = [r.error_ratio for r in records]
    finite = [v for v in ratios if math.isfinite(v)]
    success_rate = sum(r.success for r in records) / trials
    times = [r.wall_time_s for r in records if r.wall_time_s is not None]

    passed = config.min_success_rate is None or success_rate >= config.min_success_rate
    return Summary(
        kind=config.kind,
        trials=trials,
        success_rate=success_rate,
        abort_rate=sum(r.aborted for r in records) / trials,
        infinite_ratios=trials - len(finite),
        quantiles={f"q{level:g}": quantile(finite, level) for level in levels},
        mean_wall_time_s=float(np.mean(times)) if times else None,
        passed=passed,
    )


def write_jsonl(records: Iterable[TrialRecord], path: Union[str, Path], include_timing: bool = False) -> Path:
    """Uma linha JSON por tentativa; sem o tempo de execução a saída é idêntica entre execuções."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    exclude = None if include_timing else {"wall_time_s"}
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json(exclude=exclude) + "\n")
    return path


def load_records(path: Union[str, Path]) -> List[TrialRecord]:
    """
    Raises:
        InvalidArgumentError: linha que não é um TrialRecord válido
    """
    records = []
    with Path(path).open(encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(TrialRecord.model_validate_json(line))
            except ValidationError as e:
                logger.error(f"Registro inválido em {path}:{number}: {e.error_count()} erro(s)")
                raise InvalidArgumentError(f"Linha {number} de {path} não é um registro válido") from e
    return records


def summary_frame(summary: Summary) -> pd.DataFrame:
    row = {
        "kind": summary.kind.value,
        "trials": summary.trials,
        "success_rate": summary.success_rate,
        "abort_rate": summary.abort_rate,
        "infinite_ratios": summary.infinite_ratios,
        **summary.quantiles,
        "mean_wall_time_s": summary.mean_wall_time_s,
        "passed": summary.passed,
    }
    return pd.DataFrame([row])


def write_summary_csv(summary: Summary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary_frame(summary).to_csv(path, index=False)
    return path


def report_plot_data(
    report: Union[Report, Sequence[TrialRecord]],
    path: Optional[Union[str, Path]] = None,
    levels: Optional[Sequence[float]] = None,
) -> pd.DataFrame:
    """
    Tabela (parâmetro, quantil, error_ratio) para gráficos externos.

    Relatório vazio gera só o cabeçalho.
    """
    levels = settings.quantile_levels if levels is None else levels
    records = report.records if isinstance(report, Report) else list(report)
    if any(not isinstance(r, TrialRecord) for r in records):
        raise InvalidArgumentError("Relatório malformado: esperado uma lista de TrialRecord")

    rows = []
    if records:
        frame = pd.DataFrame({
            "parameter": [r.parameter for r in records],
            "error_ratio": [r.error_ratio for r in records],
        })
        frame = frame[np.isfinite(frame["error_ratio"])]
        for parameter, group in frame.groupby("parameter", sort=True):
            values = group["error_ratio"].to_numpy()
            for level in levels:
                rows.append({"parameter": parameter, "quantile": level, "error_ratio": quantile(values, level)})
    table = pd.DataFrame(rows, columns=PLOT_COLUMNS)

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False)
        logger.info(f"Dados de gráfico gravados em {path} ({len(table)} linhas)")
    return table
