"""
Modelos de dados dos experimentos (configuração, registros por tentativa, resumo)
"""
from enum import Enum
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sketches.sketch_core import MIN_COLUMN_SPARSITY, Norm


class ExperimentKind(str, Enum):
    SET_QUERY_L2 = "set_query_l2"
    SET_QUERY_L1 = "set_query_l1"
    ZIPFIAN = "zipfian"
    BLOCK_SPARSE = "block_sparse"
    PEELABILITY = "peelability"
    RUNTIME_SCALING = "runtime_scaling"


class NoiseKind(str, Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"
    ADVERSARIAL_TAIL = "adversarial_tail"


class NoiseModel(BaseModel):
    """Ruído de medição ν somado ao sketch (um único ν por tentativa)."""
    model_config = ConfigDict(frozen=True)

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = Field(default=0.0, ge=0.0)


class ExperimentConfig(BaseModel):
    """Configuração completa de um experimento: mesma configuração e semente, mesmo relatório."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind = ExperimentKind.SET_QUERY_L2
    name: Optional[str] = None

    # Sinal e matriz
    n: int = Field(default=10_000, ge=1)
    k: int = Field(default=100, ge=1)
    eps: float = Field(default=0.5, gt=0.0, le=1.0)
    d: int = Field(default=MIN_COLUMN_SPARSITY, ge=MIN_COLUMN_SPARSITY)
    w: Optional[int] = Field(default=None, ge=1)
    repetitions: int = Field(default=1, ge=1)
    head_scale: float = Field(default=1.0, gt=0.0)
    tail_sigma: float = Field(default=0.0, ge=0.0)
    noise: NoiseModel = NoiseModel()

    # Zipfiano
    family: str = Field(default="zipfian", pattern="^(zipfian|geometric)$")
    alpha: float = Field(default=1.0, gt=0.0)
    ratio: float = Field(default=0.9, gt=0.0, lt=1.0)
    scale: float = Field(default=1.0, gt=0.0)
    sq_eps: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    # Blocos
    b: int = Field(default=64, ge=1)
    block_norm: float = Field(default=10.0, gt=0.0)

    # Tempo de execução
    k_values: List[int] = Field(default_factory=lambda: [1_000, 2_000, 4_000])

    trials: int = Field(default=10, ge=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    include_timing: bool = False
    max_workers: Optional[int] = Field(default=None, ge=1)
    min_success_rate: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    output_dir: Optional[str] = None

    @field_validator("k_values", mode="before")
    @classmethod
    def _split_k_values(cls, value):
        if isinstance(value, str):
            return [int(v) for v in value.split(",") if v.strip()]
        return value

    @model_validator(mode="after")
    def _check_kind(self) -> "ExperimentConfig":
        if self.kind is ExperimentKind.RUNTIME_SCALING:
            if not self.k_values or max(self.k_values) > self.n or min(self.k_values) < 1:
                raise ValueError(f"k_values deve estar em [1, n={self.n}]")
        elif self.k > self.n:
            raise ValueError(f"k={self.k} maior que n={self.n}")
        if self.kind is ExperimentKind.BLOCK_SPARSE and (self.n % self.b or self.k % self.b):
            raise ValueError(f"b={self.b} precisa dividir n={self.n} e k={self.k}")
        return self

    @property
    def norm(self) -> Norm:
        return Norm.L1 if self.kind is ExperimentKind.SET_QUERY_L1 else Norm.L2

    @property
    def run_name(self) -> str:
        return self.name or self.kind.value

    @property
    def timed(self) -> bool:
        return self.include_timing or self.kind is ExperimentKind.RUNTIME_SCALING


class TrialRecord(BaseModel):
    """Uma linha do arquivo JSON lines: resultado de uma tentativa."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    trial: int
    seed: int
    kind: ExperimentKind
    parameter: float
    n: int
    k: int
    w: int
    error_ratio: float
    success: bool
    aborted: bool
    wall_time_s: Optional[float] = None
    class_counts: Dict[str, int] = Field(default_factory=dict)
    max_component: int = 0
    extra: Dict[str, Union[float, int, bool]] = Field(default_factory=dict)


class Summary(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    kind: ExperimentKind
    trials: int
    success_rate: float
    abort_rate: float
    infinite_ratios: int = 0
    quantiles: Dict[str, float] = Field(default_factory=dict)
    mean_wall_time_s: Optional[float] = None
    passed: bool = True


class Report(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    config: ExperimentConfig
    records: List[TrialRecord] = Field(default_factory=list)
    summary: Summary
    jsonl_path: Optional[str] = None
    summary_path: Optional[str] = None
