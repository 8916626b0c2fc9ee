"""Versioned text serialization of trained models.

Line-oriented ``key = value`` format.  Every float is written with 17
significant digits, which round-trips float64 exactly, so serialize -> parse
-> serialize is byte-stable and scoring after a round trip is bit-identical.
Embedded-variant coordinates and masked Gram matrices are not stored: they
are recomputed deterministically from the basis and whitening transform.
"""

from __future__ import annotations

import numpy as np

from .embedding import KernelWhitener, embed_matrix
from .errors import DataError
from .kernels import RBF, FeatureMask, KernelSpec
from .master import ConstraintSet
from .model import VARIANT_EMBEDDED, VARIANT_LINEAR, SparseSvddModel
from .svdd import SolverConfig

FORMAT_TAG = "sparse-svdd-model/1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vector(v) -> str:
    return " ".join(_fmt(x) for x in v)


def serialize_model(model: SparseSvddModel) -> str:
    """Render a model as deterministic key-value text."""
    lines = [f"format = {FORMAT_TAG}", f"variant = {model.variant}"]
    lines.append(f"kernel.kind = {model.kernel.kind}")
    if model.kernel.kind == RBF:
        lines.append(f"kernel.bandwidth = {_fmt(model.kernel.bandwidth)}")
    lines.append(f"budget = {model.budget}")
    lines.append(f"c = {_fmt(model.config.C)}")
    lines.append(f"kkt_tol = {_fmt(model.config.kkt_tol)}")
    lines.append(f"max_passes = {model.config.max_passes}")
    lines.append(f"outer_tol = {_fmt(model.outer_tol)}")
    lines.append(f"max_outer = {model.max_outer}")
    lines.append(f"mu_tol = {_fmt(model.mu_tol)}")

    if model.variant == VARIANT_EMBEDDED:
        basis = model.whitener.basis
    else:
        basis = model.training_coords
    lines.append(f"basis.shape = {basis.shape[0]} {basis.shape[1]}")
    for i, row in enumerate(basis):
        lines.append(f"basis.row.{i} = {_fmt_vector(row)}")

    if model.variant == VARIANT_EMBEDDED:
        w = model.whitener
        lines.append(f"eigen_floor = {_fmt(w.eigen_floor)}")
        lines.append(f"whitener.shape = {w.transform.shape[0]} {w.transform.shape[1]}")
        for i, row in enumerate(w.transform):
            lines.append(f"whitener.row.{i} = {_fmt_vector(row)}")

    lines.append(f"masks.count = {model.constraints.p}")
    for l, mask in enumerate(model.constraints.masks):
        lines.append(f"mask.{l} = " + " ".join(str(i) for i in mask.indices()))
    lines.append(f"mu = {_fmt_vector(model.mu)}")
    lines.append(f"alpha = {_fmt_vector(model.alpha)}")
    lines.append(f"radius_sq = {_fmt(model.radius_sq)}")
    return "\n".join(lines) + "\n"


def _parse_lines(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if " = " not in line:
            raise DataError(f"model file line {lineno}: expected 'key = value'")
        key, value = line.split(" = ", 1)
        if key in entries:
            raise DataError(f"model file line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _take(entries: dict[str, str], key: str) -> str:
    if key not in entries:
        raise DataError(f"model file is missing key {key!r}")
    return entries.pop(key)


def _take_float(entries: dict[str, str], key: str) -> float:
    value = _take(entries, key)
    try:
        return float(value)
    except ValueError as exc:
        raise DataError(f"model file key {key!r}: bad float {value!r}") from exc


def _take_int(entries: dict[str, str], key: str) -> int:
    value = _take(entries, key)
    try:
        return int(value)
    except ValueError as exc:
        raise DataError(f"model file key {key!r}: bad integer {value!r}") from exc


def _take_matrix(entries: dict[str, str], prefix: str) -> np.ndarray:
    parts = _take(entries, f"{prefix}.shape").split()
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError as exc:
        raise DataError(f"model file: bad {prefix}.shape") from exc
    out = np.empty((rows, cols))
    for i in range(rows):
        parts = _take(entries, f"{prefix}.row.{i}").split()
        if len(parts) != cols:
            raise DataError(f"model file: {prefix}.row.{i} has {len(parts)} values, expected {cols}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise DataError(f"model file: bad float in {prefix}.row.{i}") from exc
    return out


def parse_model(text: str) -> SparseSvddModel:
    """Rebuild a model from its text form (strict: unknown keys are errors)."""
    entries = _parse_lines(text)
    if _take(entries, "format") != FORMAT_TAG:
        raise DataError(f"unsupported model format (expected {FORMAT_TAG})")
    variant = _take(entries, "variant")
    if variant not in (VARIANT_LINEAR, VARIANT_EMBEDDED):
        raise DataError(f"unknown model variant {variant!r}")

    kind = _take(entries, "kernel.kind")
    bandwidth = _take_float(entries, "kernel.bandwidth") if kind == RBF else None
    spec = KernelSpec(kind, bandwidth)

    budget = _take_int(entries, "budget")
    config = SolverConfig(
        C=_take_float(entries, "c"),
        kkt_tol=_take_float(entries, "kkt_tol"),
        max_passes=_take_int(entries, "max_passes"),
    )
    outer_tol = _take_float(entries, "outer_tol")
    max_outer = _take_int(entries, "max_outer")
    mu_tol = _take_float(entries, "mu_tol")

    basis = _take_matrix(entries, "basis")

    whitener = None
    if variant == VARIANT_EMBEDDED:
        eigen_floor = _take_float(entries, "eigen_floor")
        transform = _take_matrix(entries, "whitener")
        if transform.shape[1] != basis.shape[0]:
            raise DataError("whitener width does not match basis size")
        whitener = KernelWhitener(
            basis=basis,
            spec=spec,
            transform=transform,
            retained_rank=transform.shape[0],
            eigen_floor=eigen_floor,
        )
        coords = embed_matrix(whitener, basis)
    else:
        coords = basis

    p = _take_int(entries, "masks.count")
    if p < 1:
        raise DataError("model must contain at least one mask")
    constraints = ConstraintSet(coords, KernelSpec("linear"))
    for l in range(p):
        parts = _take(entries, f"mask.{l}").split()
        try:
            indices = [int(x) for x in parts]
        except ValueError as exc:
            raise DataError(f"model file: bad index in mask.{l}") from exc
        constraints.add(FeatureMask.from_indices(indices, coords.shape[1]))

    mu = np.array([float(x) for x in _take(entries, "mu").split()])
    alpha = np.array([float(x) for x in _take(entries, "alpha").split()])
    radius_sq = _take_float(entries, "radius_sq")
    if mu.size != p:
        raise DataError(f"mu has {mu.size} entries, expected {p}")
    if alpha.size != coords.shape[0]:
        raise DataError(f"alpha has {alpha.size} entries, expected {coords.shape[0]}")
    if entries:
        raise DataError(f"model file has unknown keys: {sorted(entries)}")

    return SparseSvddModel(
        variant=variant,
        kernel=spec,
        whitener=whitener,
        training_coords=coords,
        constraints=constraints,
        mu=mu,
        alpha=alpha,
        radius_sq=radius_sq,
        budget=budget,
        config=config,
        outer_tol=outer_tol,
        max_outer=max_outer,
        mu_tol=mu_tol,
    )


def write_model_file(model: SparseSvddModel, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(serialize_model(model))


def read_model_file(path) -> SparseSvddModel:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    return parse_model(text)
