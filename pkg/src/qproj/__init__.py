"""qproj: quantum-inspired embedding compression and fidelity-based ranking.

Real vectors are encoded as separable qubit product states, compressed by a
trainable schedule of two-qubit gate measurements, compared by product
fidelity, and trained end to end against a classical projection baseline
with exact hand-derived gradients. A dense statevector oracle certifies the
separable fast paths.
"""

from .baseline import (
    ClassicalHeadParams,
    classical_forward,
    cosine_similarity,
    init_classical,
    load_classical_json,
    param_count_classical,
    save_classical_json,
)
from .circuit import (
    GateParams,
    PairCompressorParams,
    cnot_compress_probs,
    controlled_matrix,
    pair_compress,
    pair_state,
    zyz_matrix,
)
from .data import (
    EmbeddingStore,
    SynthConfig,
    SynthDataset,
    gen_synth,
    load_qrels,
    load_samples,
    load_store,
    save_qrels,
    save_samples,
    save_store,
)
from .encoding import (
    EncoderConfig,
    QubitState,
    SeparableState,
    encode,
    encode_component,
    fidelity,
    log_fidelity,
    qubit_overlap,
)
from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    QprojError,
    TrainingDivergence,
)
from .evaluation import EvalResult, dcg_at_k, evaluate, ndcg_at_k
from .autodiff import (
    ClassicalRankingLoss,
    GradCheckResult,
    GradientReport,
    QuantumRankingLoss,
    backward,
    grad_check,
)
from .head import (
    HeadConfig,
    HeadParams,
    head_forward,
    init_params,
    layer_count,
    load_head_json,
    param_count,
    save_head_json,
    schedule,
)
from .oracle import (
    OracleReport,
    dense_apply,
    dense_fidelity,
    dense_marginal,
    densify,
    head_forward_dense,
    oracle_check,
)
from .training import (
    AdamState,
    ClassicalModel,
    QuantumModel,
    TrainConfig,
    TrainingSample,
    TrainResult,
    adam_step,
    load_model,
    ranking_loss,
    score,
    train,
    validation_accuracy,
)

__version__ = "0.1.0"
