"""Augmentation flow networks: seeded nodes, sampling, application, JSON.

A node is a leaf operation, a cascade, a weighted choice, or the identity;
its only stateful datum is a 64-bit seed.  Everything a node does on a raster
of a given size is a pure function of (node, width, height): parameter values
and branch decisions come from counter-based streams keyed by the node seed
and the raster size, so equal-sized samples see identical augmentation
parameters while different sizes decorrelate.

Applying a cascade fuses maximal runs of consecutive ventral children into a
single composed sampling field and one resample; dorsal children materialize
the image between runs.  The output bundle always carries a validity mask
derived from the net ventral field of the whole application.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import ops
from .dist import Categorical, DistSpec, dist_from_json, dist_to_json
from .errors import ConfigurationError
from .field import (SampleBundle, SamplingField, compose_fields,
                    remap_bilinear, transform_points, validity_mask)
from .rng import RandSource, hash_u64

LEAF = "leaf"
CASCADE = "cascade"
CHOICE = "choice"
IDENTITY = "identity"

# Stream tags separating the independent random lanes of one node.
_LANE_PARAMS = 0x70726D73
_LANE_BRANCH = 0x62726E63
_LANE_PIXELS = 0x70786C73

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class AugNode:
    """Immutable flow-network node. Build via :func:`leaf`, :func:`cascade`,
    :func:`choice`, or :func:`identity`."""

    kind: str
    seed: int
    name: str | None = None
    params: tuple[tuple[str, DistSpec], ...] = ()
    children: tuple["AugNode", ...] = ()
    weights: tuple[float, ...] | None = None


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _SEED_MASK:
        raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _check_param_dist(op_name: str, spec: ops.ParamSpec, dist: DistSpec) -> None:
    lo, hi = dist.bounds()
    eps = 1e-12
    if lo < spec.lo - eps or hi > spec.hi + eps:
        raise ConfigurationError(
            f"{op_name}.{spec.name}: distribution support [{lo}, {hi}] exceeds "
            f"bounds [{spec.lo}, {spec.hi}]")


def leaf(name: str, seed: int, **param_dists: DistSpec) -> AugNode:
    """Leaf node for a cataloged op; omitted parameters use schema defaults."""
    desc = ops.descriptor(name)
    known = {p.name: p for p in desc.params}
    for pname in param_dists:
        if pname not in known:
            raise ConfigurationError(f"{name} has no parameter {pname!r}")
    filled = []
    for spec in desc.params:
        dist = param_dists.get(spec.name, spec.default)
        _check_param_dist(name, spec, dist)
        filled.append((spec.name, dist))
    return AugNode(LEAF, _check_seed(seed), name=name, params=tuple(filled))


def cascade(children, seed: int) -> AugNode:
    children = tuple(children)
    if not children:
        raise ConfigurationError("cascade needs at least one child")
    return AugNode(CASCADE, _check_seed(seed), children=children)


def choice(children, seed: int, weights=None) -> AugNode:
    children = tuple(children)
    if not children:
        raise ConfigurationError("choice needs at least one child")
    if weights is None:
        weights = tuple(1.0 / len(children) for _ in children)
    else:
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(children):
            raise ConfigurationError(
                f"choice has {len(children)} children but {len(weights)} weights")
    Categorical(weights)  # validates non-negative, positive sum
    return AugNode(CHOICE, _check_seed(seed), children=children, weights=weights)


def identity(seed: int = 0) -> AugNode:
    return AugNode(IDENTITY, _check_seed(seed))


@dataclass(frozen=True)
class AppliedParams:
    """Concrete sampled parameters and the branch path of one application."""

    kind: str
    name: str | None = None
    values: tuple[tuple[str, float], ...] = ()
    branch: int | None = None
    children: tuple["AppliedParams", ...] = ()

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.name is not None:
            obj["name"] = self.name
        if self.values:
            obj["values"] = {k: v for k, v in self.values}
        if self.branch is not None:
            obj["branch"] = self.branch
        if self.children:
            obj["children"] = [c.to_json() for c in self.children]
        return obj


def sample_params(node: AugNode, width: int, height: int) -> AppliedParams:
    """Sample every distribution and branch decision for a raster size.

    Deterministic in (node, width, height); repeated calls reproduce the
    same AppliedParams exactly.
    """
    if node.kind == IDENTITY:
        return AppliedParams(IDENTITY)
    if node.kind == LEAF:
        rs = RandSource(node.seed, hash_u64(_LANE_PARAMS, width, height))
        values = tuple((pname, float(dist.sample(rs))) for pname, dist in node.params)
        return AppliedParams(LEAF, name=node.name, values=values)
    if node.kind == CASCADE:
        kids = tuple(sample_params(c, width, height) for c in node.children)
        return AppliedParams(CASCADE, children=kids)
    if node.kind == CHOICE:
        rs = RandSource(node.seed, hash_u64(_LANE_BRANCH, width, height))
        branch = int(Categorical(node.weights).sample(rs))
        taken = sample_params(node.children[branch], width, height)
        return AppliedParams(CHOICE, branch=branch, children=(taken,))
    raise ConfigurationError(f"unknown node kind {node.kind!r}")


def _linearize(node: AugNode, applied: AppliedParams):
    """Leaf applications along the sampled path, in execution order."""
    if node.kind == IDENTITY:
        return []
    if node.kind == LEAF:
        return [(node, applied)]
    if node.kind == CASCADE:
        out = []
        for child, capp in zip(node.children, applied.children):
            out.extend(_linearize(child, capp))
        return out
    if node.kind == CHOICE:
        return _linearize(node.children[applied.branch], applied.children[0])
    raise ConfigurationError(f"unknown node kind {node.kind!r}")


def apply_traced(node: AugNode, bundle: SampleBundle) -> tuple[SampleBundle, AppliedParams]:
    """Apply a node to a bundle, returning the augmented bundle and the
    sampled parameter record."""
    height, width = bundle.image.shape[1:]
    applied = sample_params(node, width, height)
    image = bundle.image
    mask = bundle.mask
    points = bundle.points

    pending: SamplingField | None = None  # current fused ventral run
    net: SamplingField | None = None      # all ventral motion of this apply

    def flush():
        nonlocal image, mask, points, pending
        if pending is None:
            return
        image = remap_bilinear(image, pending, pad=0.0)
        if mask is not None:
            mask = remap_bilinear(mask, pending, pad=0.0)
        if points is not None:
            points = transform_points(points, pending)
        pending = None

    for leaf_node, leaf_applied in _linearize(node, applied):
        desc = ops.descriptor(leaf_node.name)
        rng = RandSource(leaf_node.seed, hash_u64(_LANE_PIXELS, width, height))
        values = {k: v for k, v in leaf_applied.values}
        if desc.kind == ops.VENTRAL:
            f = ops.build_field(leaf_node.name, width, height, values, rng)
            pending = f if pending is None else compose_fields(f, pending)
            net = f if net is None else compose_fields(f, net)
        else:
            flush()
            image = ops.apply_dorsal(leaf_node.name, image, values, rng)
    flush()

    if net is None:
        validity = np.ones((height, width))
        if bundle.validity is not None:
            validity = (bundle.validity >= 0.999).astype(np.float64)
    else:
        validity = validity_mask(net)
        if bundle.validity is not None:
            prior = remap_bilinear(bundle.validity, net, pad=0.0)
            validity = ((prior >= 0.999) & (validity >= 0.999)).astype(np.float64)

    out = SampleBundle(image=image, mask=mask, points=points, validity=validity)
    return out, applied


def apply(node: AugNode, bundle: SampleBundle) -> SampleBundle:
    """Apply a node to a bundle (see :func:`apply_traced`)."""
    return apply_traced(node, bundle)[0]


# --- serialization ---------------------------------------------------------

def _node_to_obj(node: AugNode) -> dict:
    obj: dict = {"kind": node.kind}
    if node.kind == LEAF:
        obj["name"] = node.name
        obj["params"] = {pname: dist_to_json(d) for pname, d in node.params}
    obj["seed"] = node.seed
    if node.kind == CHOICE:
        obj["weights"] = list(node.weights)
    if node.kind in (CASCADE, CHOICE):
        obj["children"] = [_node_to_obj(c) for c in node.children]
    return obj


def serialize(node: AugNode) -> str:
    """Canonical JSON form: fixed key order, params in schema order."""
    return json.dumps(_node_to_obj(node))


def _fail(path: str, message: str):
    raise ConfigurationError(f"{path or '/'}: {message}")


def _node_from_obj(obj, path: str) -> AugNode:
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind not in (LEAF, CASCADE, CHOICE, IDENTITY):
        _fail(path + "/kind", f"unknown node kind {kind!r}")
    if "seed" not in obj:
        _fail(path + "/seed", "seed is mandatory; absent seeds are never auto-generated")
    seed = obj["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        _fail(path + "/seed", f"seed must be an integer, got {seed!r}")

    if kind == IDENTITY:
        return identity(seed)
    if kind == LEAF:
        name = obj.get("name")
        if not isinstance(name, str):
            _fail(path + "/name", "leaf needs a string op name")
        if not ops.is_registered(name):
            _fail(path + "/name", f"unknown op {name!r}")
        raw = obj.get("params", {})
        if not isinstance(raw, dict):
            _fail(path + "/params", "params must be an object")
        dists = {k: dist_from_json(v, f"{path}/params/{k}") for k, v in raw.items()}
        try:
            return leaf(name, seed, **dists)
        except ConfigurationError as exc:
            _fail(path + "/params", str(exc))

    children_raw = obj.get("children")
    if not isinstance(children_raw, list) or not children_raw:
        _fail(path + "/children", "composite node needs a non-empty child list")
    children = [_node_from_obj(c, f"{path}/children/{i}")
                for i, c in enumerate(children_raw)]
    try:
        if kind == CASCADE:
            return cascade(children, seed)
        weights = obj.get("weights")
        return choice(children, seed, weights=weights)
    except ConfigurationError as exc:
        _fail(path, str(exc))


def deserialize(text: str) -> AugNode:
    """Parse and validate the canonical JSON form.

    Errors carry a JSON-pointer-style location of the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}") from None
    return _node_from_obj(doc, "")
