"""Line-oriented text checkpoints.

Layout::

    RBFGAN-CKPT v1
    key = value            # config block, one entry per line
    ...
    param <name> <rows> <cols>
    <row-major values, one matrix row per line, 17 significant digits>
    ...
    end

Normalization statistics are stored as the parameters ``norm.lo`` and
``norm.hi``.
"""
import numpy as np

from .arch import parse_architecture
from .datasets import NormStats
from .errors import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointVersionError,
    RbfGanError,
)
from .gan import GanConfig, GanModel, build_gan_networks, build_network
from .tensor import SeededRng

MAGIC = "RBFGAN-CKPT"
VERSION = "v1"


def _f(x):
    return format(float(x), ".17g")


def checkpoint_save(model, path):
    lines = [f"{MAGIC} {VERSION}"]
    meta = dict(model.config.to_mapping())
    meta["networks"] = ",".join(model.networks)
    meta["schema"] = model.schema
    meta["design_columns"] = ",".join(model.design_columns)
    meta["response_columns"] = ",".join(model.response_columns)
    meta["norm_columns"] = ",".join(model.stats.columns)
    lines += [f"{k} = {v}" for k, v in meta.items()]
    blocks = [("norm.lo", model.stats.lo.reshape(1, -1)), ("norm.hi", model.stats.hi.reshape(1, -1))]
    for net_name, net in model.networks.items():
        blocks += [(f"{net_name}.{p}", arr) for p, arr in net.named_params()]
    for name, arr in blocks:
        arr = np.asarray(arr, dtype=np.float64)
        lines.append(f"param {name} {arr.shape[0]} {arr.shape[1]}")
        lines += [" ".join(_f(x) for x in row) for row in arr]
    lines.append("end")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse(text):
    lines = text.split("\n")
    if not lines or not lines[0].startswith(MAGIC + " "):
        raise CheckpointFormatError("missing checkpoint header")
    version = lines[0][len(MAGIC) + 1:].strip()
    if version != VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint version {version!r} (expected {VERSION})")
    if not text.endswith("\n"):
        raise CheckpointFormatError("file is truncated (no final newline)")
    meta, params = {}, {}
    i = 1
    while i < len(lines) and lines[i] and not lines[i].startswith("param "):
        if " = " not in lines[i]:
            raise CheckpointFormatError(f"line {i + 1}: expected 'key = value'")
        k, v = lines[i].split(" = ", 1)
        meta[k.strip()] = v.strip()
        i += 1
    while i < len(lines) and lines[i] and lines[i] != "end":
        head = lines[i].split()
        if len(head) != 4 or head[0] != "param":
            raise CheckpointFormatError(f"line {i + 1}: expected 'param <name> <rows> <cols>'")
        try:
            rows, cols = int(head[2]), int(head[3])
        except ValueError:
            raise CheckpointFormatError(f"line {i + 1}: bad shape") from None
        if rows < 1 or cols < 1 or i + rows >= len(lines):
            raise CheckpointFormatError(f"parameter {head[1]} is truncated")
        try:
            arr = np.array([[float(c) for c in lines[i + 1 + r].split()] for r in range(rows)])
        except ValueError:
            raise CheckpointFormatError(f"parameter {head[1]}: non-numeric value") from None
        if arr.shape != (rows, cols):
            raise CheckpointFormatError(f"parameter {head[1]}: expected {rows}x{cols} values")
        if not np.isfinite(arr).all():
            raise CheckpointFormatError(f"parameter {head[1]}: non-finite value")
        params[head[1]] = arr
        i += rows + 1
    if i >= len(lines) or lines[i] != "end":
        raise CheckpointFormatError("file is truncated (missing end marker)")
    if i != len(lines) - 2 or lines[-1] != "":
        raise CheckpointFormatError(f"line {i + 2}: unexpected content after end marker")
    return meta, params


def checkpoint_load(path):
    """Rebuild a :class:`GanModel`; raises before returning anything on any error."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    meta, params = _parse(text)
    try:
        config = GanConfig.from_mapping(meta)
        design = meta["design_columns"].split(",")
        response = meta["response_columns"].split(",")
        norm_cols = meta["norm_columns"].split(",")
        names = meta["networks"].split(",")
        schema = meta.get("schema", "custom")
    except (KeyError, RbfGanError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointFormatError(f"bad config block: {exc}") from None
    for key in ("norm.lo", "norm.hi"):
        if key not in params or params[key].shape != (1, len(norm_cols)):
            raise CheckpointShapeError(f"{key} must be 1x{len(norm_cols)}")
    try:
        stats = NormStats(norm_cols, params.pop("norm.lo"), params.pop("norm.hi"))
    except RbfGanError as exc:
        raise CheckpointFormatError(str(exc)) from None

    rng = SeededRng(0)
    try:
        if names == ["regressor"]:
            nets = {"regressor": build_network(parse_architecture(config.regressor_arch), "regressor", rng)}
        else:
            nets = build_gan_networks(config, len(design), len(response), rng)
    except RbfGanError as exc:
        raise CheckpointFormatError(f"architecture in checkpoint is invalid: {exc}") from None
    if list(nets) != names:
        raise CheckpointFormatError(f"networks {names} do not match the config")

    expected = {f"{n}.{p}": arr for n, net in nets.items() for p, arr in net.named_params()}
    if set(expected) != set(params):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise CheckpointShapeError(f"parameter set mismatch; missing {missing}, unexpected {extra}")
    for name, arr in expected.items():
        if params[name].shape != arr.shape:
            raise CheckpointShapeError(f"{name}: file has {params[name].shape}, architecture needs {arr.shape}")
    for name, arr in expected.items():
        np.copyto(arr, params[name])
    return GanModel(config, nets, stats, design, response, schema)
