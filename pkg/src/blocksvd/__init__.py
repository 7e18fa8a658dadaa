"""Singular values and left singular vectors of short-and-fat sparse matrices.

The matrix is split column-wise into blocks, every block is factored on its
own, and the scaled left factors are stacked into a small proxy matrix whose
SVD gives the singular values and left vectors of the whole. Lonely rows
(rows with no entry inside a block) can be repaired beforehand.
"""

from .errors import (
    BlockSvdError,
    BlockTaskError,
    ConvergenceError,
    CorruptRecordError,
    InvalidPartitionError,
    MatrixMarketError,
    NumericError,
    ParameterError,
    ShapeError,
    SizeLimitError,
)
from .metrics import EvalRow, align_signs, e_sigma, e_u, evaluate, evaluate_sweep
from .pipeline import (
    BlockResultRecord,
    BlockTask,
    PipelineResult,
    assemble_proxy,
    read_block_record,
    run_pipeline,
    write_block_record,
)
from .repair import (
    EditableMatrix,
    RepairMethod,
    RepairReport,
    find_lonely_rows,
    neighbor_checker,
    neighbor_random_checker,
    random_checker,
    rank_equal_probability,
    repair,
)
from .sparse import (
    BlockPartition,
    SparseMatrix,
    block_view,
    dense_of,
    load_matrix_market,
    partition_columns,
    save_matrix_market,
    synth_bipartite,
)
from .svd import (
    ProxyMatrix,
    SvdResult,
    block_svd,
    build_proxy,
    dense_svd,
    numerical_rank,
    proxy_svd,
    recover_right_vectors,
)

__version__ = "0.1.0"
