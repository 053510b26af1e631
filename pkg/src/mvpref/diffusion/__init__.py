from .scheduler import NoiseScheduler
from .model import (
    DiffusionConfig,
    LearnedDecoder,
    MultiViewDenoiser,
    MultiViewDiffusion,
    load_diffusion_checkpoint,
    save_diffusion_checkpoint,
)
from .pretrain import (
    DiffusionCorpus,
    PretrainConfig,
    eval_pretrain_loss,
    make_synthetic_corpus,
    pretrain,
    pretrain_loss,
)

__all__ = [
    "DiffusionConfig",
    "DiffusionCorpus",
    "LearnedDecoder",
    "MultiViewDenoiser",
    "MultiViewDiffusion",
    "NoiseScheduler",
    "PretrainConfig",
    "eval_pretrain_loss",
    "load_diffusion_checkpoint",
    "make_synthetic_corpus",
    "pretrain",
    "pretrain_loss",
    "save_diffusion_checkpoint",
]
