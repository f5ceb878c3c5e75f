"""
Hierarquia de exceções da biblioteca de sketches
"""


class SketchError(Exception):
    """Erro base de toda a biblioteca."""


class InvalidArgumentError(SketchError, ValueError):
    """Pré-condição violada (k=0, d<7, eps fora de (0,1], índice fora do intervalo...)."""


class DimensionMismatchError(InvalidArgumentError):
    """Sinal ou ruído com dimensão incompatível com a matriz."""


class ParamsMismatchError(SketchError):
    """Sketch e matriz gerados com parâmetros diferentes."""


class DecodeError(SketchError):
    """Fluxo binário SQS1 inválido."""


class VersionMismatchError(DecodeError):
    pass


class TruncatedStreamError(DecodeError):
    pass


class ChecksumError(DecodeError):
    pass


class RecoveryAbortedError(SketchError):
    """O peeling não encontrou aresta elegível (nem |L_j| >= d-1, nem >= d-2)."""

    def __init__(self, message: str, residual_support=None):
        super().__init__(message)
        self.residual_support = list(residual_support or [])


class InsufficientSamplesError(InvalidArgumentError):
    pass
