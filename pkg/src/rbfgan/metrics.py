"""Error and stability metrics."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError, SchemaError, UndefinedMetricError

DEFAULT_INTERVALS = ((0, 125), (125, 750), (750, 2000))
MSPE_ZERO_NORM = 1e-12


def _pair(predicted, actual):
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.ndim == 1:
        p = p.reshape(-1, 1)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if p.shape != a.shape:
        raise DimensionError(f"predicted shape {p.shape} != actual shape {a.shape}")
    if p.shape[0] < 1:
        raise DimensionError("need at least one row")
    return p, a


def mse(predicted, actual):
    """Mean over rows of the squared Euclidean norm of the row difference."""
    p, a = _pair(predicted, actual)
    d = p - a
    return float(np.mean(np.sum(d * d, axis=1)))


def mspe(predicted, actual, return_excluded=False):
    """Mean squared percentage error, ||f_i - y_i||^2 / ||y_i||^2 * 100.

    Rows whose reference norm is below 1e-12 are left out of the mean;
    with ``return_excluded`` the count of such rows is returned too.
    """
    p, a = _pair(predicted, actual)
    ref = np.sum(a * a, axis=1)
    keep = np.sqrt(ref) >= MSPE_ZERO_NORM
    if not keep.any():
        raise UndefinedMetricError("every reference row has zero norm; MSPE undefined")
    d = p[keep] - a[keep]
    val = float(np.mean(np.sum(d * d, axis=1) / ref[keep]) * 100.0)
    excluded = int((~keep).sum())
    return (val, excluded) if return_excluded else val


def interval_std(values, intervals=DEFAULT_INTERVALS):
    """Population standard deviation of ``values`` over each [lo, hi) index range.

    ``values`` is a sequence of per-epoch validation errors or an object with
    a ``val_mse`` attribute (a :class:`~rbfgan.gan.TrainingTrace`).
    """
    seq = np.asarray(getattr(values, "val_mse", values), dtype=np.float64)
    out = []
    for lo, hi in intervals:
        lo, hi = int(lo), int(hi)
        if lo < 0 or hi > seq.size or hi <= lo:
            raise ParameterError(f"interval [{lo}, {hi}) is empty or outside a trace of length {seq.size}")
        part = seq[lo:hi]
        # exact zero for a constant run; np.std leaves rounding residue there
        out.append(0.0 if part.min() == part.max() else float(np.std(part)))
    return out


def eta(candidate_std, baseline_std):
    """Stability improvement |candidate - baseline| / |baseline| in percent."""
    if baseline_std == 0:
        raise UndefinedMetricError("baseline standard deviation is zero")
    return abs(candidate_std - baseline_std) / abs(baseline_std) * 100.0


def mode_coverage(generated, reference, column="u", threshold=2.0):
    """Fractions of rows with ``column > threshold`` in each dataset."""
    g = generated.column(column) if hasattr(generated, "column") else None
    r = reference.column(column) if hasattr(reference, "column") else None
    if g is None or r is None:
        raise SchemaError("mode_coverage needs datasets with named columns")
    return float(np.mean(g > threshold)), float(np.mean(r > threshold))


@dataclass
class MetricReport:
    name: str = ""
    mse: float = float("nan")
    mspe: float = float("nan")
    mspe_excluded: int = 0
    interval_std: list = field(default_factory=list)
    intervals: list = field(default_factory=lambda: [list(i) for i in DEFAULT_INTERVALS])
    eta: float = float("nan")
    baseline: str = ""
    coverage_generated: float = float("nan")
    coverage_reference: float = float("nan")

    def __post_init__(self):
        for k in ("mse", "mspe"):
            v = getattr(self, k)
            if v == v and v < 0:
                raise ParameterError(f"{k} must be non-negative")
        for k in ("coverage_generated", "coverage_reference"):
            v = getattr(self, k)
            if v == v and not 0.0 <= v <= 1.0:
                raise ParameterError(f"{k} must lie in [0, 1]")

    def items(self):
        out = [
            ("name", self.name),
            ("mse", _f(self.mse)),
            ("mspe", _f(self.mspe)),
            ("mspe_excluded", str(self.mspe_excluded)),
        ]
        for (lo, hi), s in zip(self.intervals, self.interval_std):
            out.append((f"std_{lo}_{hi}", _f(s)))
        out += [
            ("eta", _f(self.eta)),
            ("baseline", self.baseline),
            ("coverage_generated", _f(self.coverage_generated)),
            ("coverage_reference", _f(self.coverage_reference)),
        ]
        return out

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def csv_header(self):
        return ",".join(k for k, _ in self.items())

    def csv_row(self):
        return ",".join(v for _, v in self.items())

    @classmethod
    def from_mapping(cls, kv):
        intervals, stds = [], []
        for k, v in kv.items():
            if k.startswith("std_"):
                lo, hi = k[4:].split("_")
                intervals.append([int(lo), int(hi)])
                stds.append(float(v))
        return cls(
            name=kv.get("name", ""),
            mse=float(kv.get("mse", "nan")),
            mspe=float(kv.get("mspe", "nan")),
            mspe_excluded=int(kv.get("mspe_excluded", 0)),
            interval_std=stds,
            intervals=intervals,
            eta=float(kv.get("eta", "nan")),
            baseline=kv.get("baseline", ""),
            coverage_generated=float(kv.get("coverage_generated", "nan")),
            coverage_reference=float(kv.get("coverage_reference", "nan")),
        )


def _f(x):
    return format(float(x), ".17g")
