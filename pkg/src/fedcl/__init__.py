"""Federated averaging with learning-without-forgetting for sequential
multi-event classification over fixed-dimension sentence embeddings."""

from .continual import (
    LwfConfig,
    SoftLabels,
    TeacherSnapshot,
    TrainConfig,
    distillation_loss,
    record_soft_labels,
    snapshot_teacher,
    train_on_task,
)
from .data import (
    Dataset,
    EventSplits,
    HUMAID_LABEL_NAMES,
    batch_iter,
    load_embedding_csv,
    split_dataset,
    synth_gaussian,
    write_embedding_csv,
)
from .errors import (
    ConfigError,
    DataError,
    FedclError,
    FormatError,
    ProtocolError,
    ShapeError,
)
from .federated import (
    ClientShard,
    ClientUpdate,
    FedConfig,
    ModelConfig,
    aggregate,
    local_update,
    partition_dataset,
    run_event,
    run_event_sequence,
)
from .metrics import (
    EvalRecord,
    EvalResult,
    cumulative_mean,
    evaluate,
    forgetting,
    read_metrics_csv,
    write_metrics,
)
from .nn import (
    AdamState,
    ForwardTrace,
    Hyper,
    Layer,
    ModelParams,
    adam_step,
    forward,
    init_adam_state,
    init_model,
    loss_and_grads,
    softmax_xent,
)
from .rng import derive_seed

__version__ = "0.1.0"
