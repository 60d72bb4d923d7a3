"""Deterministic plasma-fractal image augmentation engine."""

from .dist import Bernoulli, Categorical, Constant, DistSpec, Uniform
from .dsl import (InvalidArgError, PipelineError, PipelineSyntaxError,
                  UnknownOpError, compile_pipeline, format_pipeline, parse,
                  parse_pipeline)
from .errors import ConfigurationError, InvalidInputError, PlasmaugError
from .field import (PointSet, SampleBundle, SamplingField, compose_fields,
                    conv3x3, identity_field, remap_bilinear, transform_points,
                    validity_mask)
from .graph import (AppliedParams, AugNode, apply, apply_traced, cascade,
                    choice, deserialize, identity, leaf, sample_params,
                    serialize)
from .oracle import recursive_ds_oracle
from .ops import OpDescriptor, ParamSpec, catalog
from .plasma import (InjectedNoise, PlasmaParams, ds, ds_recursive, one_ds,
                     plasma_for_size)
from .rng import RandSource

__version__ = "0.1.0"

__all__ = [
    "AppliedParams", "AugNode", "Bernoulli", "Categorical", "ConfigurationError",
    "Constant", "DistSpec", "InjectedNoise", "InvalidArgError",
    "InvalidInputError", "OpDescriptor", "ParamSpec", "PipelineError",
    "PipelineSyntaxError", "PlasmaParams", "PlasmaugError", "PointSet",
    "RandSource", "SampleBundle", "SamplingField", "Uniform", "UnknownOpError",
    "apply", "apply_traced", "cascade", "catalog", "choice", "compile_pipeline",
    "compose_fields", "conv3x3", "deserialize", "ds", "ds_recursive",
    "format_pipeline", "identity", "identity_field", "leaf", "one_ds", "parse",
    "parse_pipeline", "plasma_for_size", "recursive_ds_oracle",
    "remap_bilinear", "sample_params", "serialize", "transform_points",
    "validity_mask",
]
