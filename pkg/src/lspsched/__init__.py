"""Longest-stable-prefix decoding scheduler for masked-diffusion generation."""

from .denoisers import CountingDenoiser, NGramDenoiser, OracleDenoiser, ngram_fit
from .kv_cost import CacheModel, attention_cost, cache_append
from .metrics import RunSummary, decay_curve, flip_rate, speedup, summarize
from .scheduler import (SchedulerConfig, StepRecord, Trace, fixed_prefix_step, full_step,
                        lsp_step, run, scattered_margin_step)
from .seq_core import (CommitMask, ContractViolation, Proposal, SequenceState, Tokenizer,
                       commit_prefix, load_corpus)
from .snapping import DelimiterSet, SnapConfig, snap
from .stability import MarginArray, SizingBounds, margins, run_length, select_block_length

__version__ = "0.1.0"
