"""
Biblioteca de sketches lineares: set query por peeling, localizadores e block heavy hitters
"""
from .errors import (
    SketchError,
    InvalidArgumentError,
    DimensionMismatchError,
    ParamsMismatchError,
    DecodeError,
    VersionMismatchError,
    TruncatedStreamError,
    ChecksumError,
    RecoveryAbortedError,
    InsufficientSamplesError,
)
from .sketch_core import (
    Norm,
    SketchParams,
    Signal,
    SketchMatrix,
    Sketch,
    derive_params,
    build_matrix,
    apply,
    update,
    add_noise,
    merge,
    split_binary_rows,
    combine_binary_rows,
)
from .set_query import (
    SupportSet,
    RecoveryResult,
    RecoveryError,
    recover,
    recover_reference,
    recover_robust,
    repetitions_for,
    error_ratio,
)
from .hypergraph_analysis import components, peelability, component_size_stats
from .locators import CountSketchParams, cs_build, cs_apply, locate_candidates, top_k_threshold, recover_zipfian
from .block_sparse import BlockParams, bhh_build, bhh_apply, bhh_locate, err_block, recover_block_sparse
from .codec import serialize, deserialize

__all__ = [
    'SketchError', 'InvalidArgumentError', 'DimensionMismatchError', 'ParamsMismatchError',
    'DecodeError', 'VersionMismatchError', 'TruncatedStreamError', 'ChecksumError',
    'RecoveryAbortedError', 'InsufficientSamplesError',
    'Norm', 'SketchParams', 'Signal', 'SketchMatrix', 'Sketch',
    'derive_params', 'build_matrix', 'apply', 'update', 'add_noise', 'merge',
    'split_binary_rows', 'combine_binary_rows',
    'SupportSet', 'RecoveryResult', 'RecoveryError',
    'recover', 'recover_reference', 'recover_robust', 'repetitions_for', 'error_ratio',
    'components', 'peelability', 'component_size_stats',
    'CountSketchParams', 'cs_build', 'cs_apply', 'locate_candidates', 'top_k_threshold', 'recover_zipfian',
    'BlockParams', 'bhh_build', 'bhh_apply', 'bhh_locate', 'err_block', 'recover_block_sparse',
    'serialize', 'deserialize',
]
