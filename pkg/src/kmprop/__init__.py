"""Arithmetic on random variables via weighted kernel-mean expansions.

Distributions enter as samples, live as weighted expansions
``sum_i w_i k(x_i, .)`` in an RKHS, can be pushed through pointwise
functions on product grids, compressed onto fewer points, compared by
squared MMD, and used to infer cause-effect direction in additive-noise
pairs.
"""

from .kernels import (
    KernelSpec,
    RffMap,
    eval_kernel,
    gram,
    median_heuristic,
    quad_form,
    rff_build,
    rff_feature_matrix,
    rff_features,
)
from .embedding import (
    WeightedExpansion,
    canonicalize,
    combine,
    embed_sample,
    error_bound,
    expect_function,
    inner,
    mmd_sq,
)
from .propagate import (
    BUILTIN_FUNCTIONS,
    PointFunction,
    apply_binary,
    apply_nary,
    apply_paired,
    quantize_to_sample,
)
from .reduce import ReductionResult, reduce_random, residual_check
from .anm import (
    AnmConfig,
    AnmReport,
    PairedSample,
    PolyFit,
    accuracy_curve,
    anm_delta,
    infer_pair,
    polyfit,
    residuals,
)
from .dsl import EvalPolicy, evaluate, evaluate_text, parse, parse_text, pretty_print, tokenize
from .experiments import RunRecord, SynthConfig, ingest_pair_file, run_pairs, run_synth
from . import errors

__version__ = "0.1.0"

__all__ = [
    "KernelSpec", "RffMap", "eval_kernel", "gram", "median_heuristic",
    "quad_form", "rff_build", "rff_feature_matrix", "rff_features",
    "WeightedExpansion", "canonicalize", "combine", "embed_sample",
    "error_bound", "expect_function", "inner", "mmd_sq",
    "BUILTIN_FUNCTIONS", "PointFunction", "apply_binary", "apply_nary",
    "apply_paired", "quantize_to_sample",
    "ReductionResult", "reduce_random", "residual_check",
    "AnmConfig", "AnmReport", "PairedSample", "PolyFit", "accuracy_curve",
    "anm_delta", "infer_pair", "polyfit", "residuals",
    "EvalPolicy", "evaluate", "evaluate_text", "parse", "parse_text",
    "pretty_print", "tokenize",
    "RunRecord", "SynthConfig", "ingest_pair_file", "run_pairs", "run_synth",
    "errors",
]
