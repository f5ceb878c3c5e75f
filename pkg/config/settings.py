"""
Configurações do laboratório de sketches
Carrega variáveis de ambiente usando Pydantic Settings
"""
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List, Optional


class Settings(BaseSettings):
    """Configurações da aplicação carregadas do .env"""
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_file: str = "logs/setquery.log"
    console_log_level: str = "INFO"

    # Matriz do set query
    default_d: int = 7          # esparsidade por coluna (mínimo aceito pela análise em l2)
    default_seed: int = 0

    # Count-Sketch (localizador Zipfiano)
    cs_rows_per_log: float = 4.0    # linhas = ceil(c1 * log2 n)
    cs_width_factor: float = 6.0    # largura = ceil(c2 * k / eps^2)
    candidate_multiplier: int = 9   # tamanho do conjunto candidato = 9k

    # Block heavy hitters
    block_m_factor: float = 4.0     # m = ceil(c3 * log2 n / eps^2)
    block_l_factor: float = 2.0     # l = ceil(c4 * s / eps^3), com piso 2s
    block_alpha: float = 1.4826     # 1 / Phi^-1(0.75)

    # Experimentos
    max_workers: int = 1
    output_dir: str = "results"
    report_quantiles: str = "0.05,0.25,0.5,0.75,0.95"

    # Servidor
    server_host: str = "0.0.0.0"
    server_port: int = 8000

    # Redis (armazenamento de sketches nomeados)
    redis_url: Optional[str] = None  # URL completa: redis://:pass@host:port/db
    redis_host: str = "localhost"
    redis_port: int = 6379
    redis_password: Optional[str] = None
    redis_db: int = 0
    sketch_ttl_seconds: int = 86400

    @property
    def quantile_levels(self) -> List[float]:
        """Níveis de quantil usados nos relatórios (separados por vírgula no .env)."""
        return [float(q) for q in self.report_quantiles.split(",") if q.strip()]


# Instância global de configurações
settings = Settings()
