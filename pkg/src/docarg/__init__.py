"""Document-level event argument extraction with attention-derived context
clues and latent role guidance.

Two model variants share the same two enhancement modules: a span classifier
scoring every candidate span against the event's roles, and a prompt model
filling template slots with start/end span selectors.
"""

from .config import RunConfig, load_config, prompt_defaults, span_defaults, toy
from .context_clues import AttentionProfile, ClueVector, clue_vector, pool_attention
from .data import (
    EventInstance,
    EventPredictions,
    Prediction,
    RoleLabelSet,
    load_dataset,
    save_dataset,
)
from .encoding import EncodingResult, decode, encode, encode_long
from .exceptions import (
    BackendError,
    ConfigError,
    DataError,
    DivergenceError,
    DocargError,
    SequenceError,
)
from .metrics import classify_error, count_errors, head_f1, role_cooccurrence, span_f1
from .prompt_model import (
    PromptArgumentModel,
    bipartite_loss,
    fuse_slot,
    make_selectors,
    select_span,
)
from .role_guidance import (
    RoleFusionVector,
    TripleScoreModel,
    extract_role_attention,
    reduce_roles,
    role_fusion,
    tucker_score,
    tucker_score_all,
)
from .sequences import MarkedSequence, build_prompt_input, build_span_input
from .span_model import (
    FocalLossConfig,
    SpanArgumentModel,
    decode_predictions,
    enumerate_spans,
    focal_loss,
    fuse_span,
)
from .synth import generate_synthetic
from .templates import PromptTemplate, make_template_registry
from .tokenizer import VocabTokenizer
from .training import (
    evaluate_model,
    load_checkpoint,
    parameter_manifest,
    predict_instances,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
