"""Flow-field datasets: Burgers' generation, CSV ingestion, split, normalization."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erfc

from . import _backend
from .errors import (
    ColumnError,
    CsvParseError,
    DimensionError,
    ParameterError,
    ResolutionError,
    ResourceError,
    SchemaError,
)
from .tensor import SeededRng

SCHEMAS = {
    "burgers": (("t", "x", "v"), ("u",)),
    "cylinder": (("x", "y", "Ma"), ("P", "Cp", "Fx", "Fy")),
    "m6": (("Ma", "AoA", "Re"), ("CL", "CD", "CF", "CMx", "CMy", "CMz", "CFx", "CFy", "CFz")),
}

UNITS = {
    "burgers": {"t": "s", "x": "m", "v": "m^2/s", "u": "m/s"},
    "cylinder": {"x": "m", "y": "m", "Ma": "1", "P": "Pa", "Cp": "1", "Fx": "N", "Fy": "N"},
    "m6": {"Ma": "1", "AoA": "deg", "Re": "1"},
}

SPLIT_TAGS = ("train", "val", "test")
SPLIT_COLUMN = "split"
V_MIN = 0.05
DEFAULT_ROW_CAP = 2_000_000


# ---------------------------------------------------------------- Burgers' equation

# hump family: Galilean-shifted Cole-Hopf transform of phi = 1 + A erfc(xi / sqrt(4 v s))
HUMP_SPEED = 1.0
HUMP_ORIGIN = 0.0
HUMP_MASS = 2.0
HUMP_T0 = 0.2
SINE_OFFSET = 2.0
FAMILIES = ("hump", "sine", "rational")


def burgers_solution(x, t, v, family="hump"):
    """Exact solution of u_t + u u_x = v u_xx at (x, t) for viscosity v.

    ``hump``      background flow of speed 1 carrying a decaying viscous
                  hump that starts near x = 0; the default.
    ``sine``      2 v pi e^{-v pi^2 t} sin(pi x) / (2 + e^{-v pi^2 t} cos(pi x))
    ``rational``  x / (1 + t), independent of v.
    """
    x, t, v = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (x, t, v)))
    if (v < V_MIN).any():
        raise ParameterError(f"viscosity must be >= {V_MIN}")
    if (t < 0).any():
        raise ParameterError("time must be non-negative")
    if family == "hump":
        s = t + HUMP_T0
        eta = (x - HUMP_SPEED * t - HUMP_ORIGIN) / np.sqrt(4.0 * v * s)
        u = HUMP_SPEED + 2.0 * HUMP_MASS * np.sqrt(v / (np.pi * s)) * np.exp(-eta * eta) / (
            1.0 + HUMP_MASS * erfc(eta)
        )
    elif family == "sine":
        e = np.exp(-v * np.pi ** 2 * t)
        u = 2.0 * v * np.pi * e * np.sin(np.pi * x) / (SINE_OFFSET + e * np.cos(np.pi * x))
    elif family == "rational":
        u = x / (1.0 + t)
    else:
        raise ParameterError(f"unknown solution family {family!r}; expected one of {FAMILIES}")
    return u if u.ndim else float(u)


def spatial_residual(u, dx, v):
    """Central-difference right-hand side -(u^2/2)_x + v u_xx at interior nodes."""
    out = np.zeros_like(u)
    out[1:-1] = -(u[2:] ** 2 - u[:-2] ** 2) / (4.0 * dx) + v * (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    return out


@_backend.njit
def _thomas(lo, di, up, rhs):
    n = di.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    c[0] = up[0] / di[0]
    d[0] = rhs[0] / di[0]
    for i in range(1, n):
        m = di[i] - lo[i] * c[i - 1]
        c[i] = up[i] / m
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / m
    out = np.empty(n)
    out[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = d[i] - c[i] * out[i + 1]
    return out


@_backend.njit
def _cn_march_nb(u0, v, dx, dt, nsteps, left, right, record, tol, max_iter):
    n = u0.shape[0]
    m = n - 2
    u = u0.copy()
    out = np.empty((record.shape[0], n))
    k_rec = 0
    if record.shape[0] > 0 and record[0] == 0:
        out[0] = u
        k_rec = 1
    a = v / (dx * dx)
    b = 1.0 / (4.0 * dx)
    rn = np.empty(m)
    g = np.empty(m)
    lo = np.empty(m)
    di = np.empty(m)
    up = np.empty(m)
    for step in range(1, nsteps + 1):
        for i in range(1, n - 1):
            rn[i - 1] = -b * (u[i + 1] ** 2 - u[i - 1] ** 2) + a * (u[i + 1] - 2.0 * u[i] + u[i - 1])
        w = u.copy()
        w[0] = left[step]
        w[n - 1] = right[step]
        converged = False
        for _ in range(max_iter):
            for i in range(1, n - 1):
                r = -b * (w[i + 1] ** 2 - w[i - 1] ** 2) + a * (w[i + 1] - 2.0 * w[i] + w[i - 1])
                g[i - 1] = -(w[i] - u[i] - 0.5 * dt * (r + rn[i - 1]))
                lo[i - 1] = -0.5 * dt * (2.0 * b * w[i - 1] + a)
                di[i - 1] = 1.0 + dt * a
                up[i - 1] = -0.5 * dt * (-2.0 * b * w[i + 1] + a)
            delta = _thomas(lo, di, up, g)
            big = 0.0
            for i in range(m):
                w[i + 1] += delta[i]
                if abs(delta[i]) > big:
                    big = abs(delta[i])
            if not math.isfinite(big):
                return out, False
            if big < tol:
                converged = True
                break
        if not converged:
            return out, False
        u = w
        if k_rec < record.shape[0] and record[k_rec] == step:
            out[k_rec] = u
            k_rec += 1
    return out, True


def _cn_march_np(u0, v, dx, dt, nsteps, left, right, record, tol, max_iter):
    n = u0.shape[0]
    u = u0.copy()
    out = np.empty((record.shape[0], n))
    k_rec = 0
    if record.shape[0] > 0 and record[0] == 0:
        out[0] = u
        k_rec = 1
    a = v / (dx * dx)
    b = 1.0 / (4.0 * dx)
    ab = np.empty((3, n - 2))
    for step in range(1, nsteps + 1):
        rn = spatial_residual(u, dx, v)[1:-1]
        w = u.copy()
        w[0], w[-1] = left[step], right[step]
        converged = False
        for _ in range(max_iter):
            g = -(w[1:-1] - u[1:-1] - 0.5 * dt * (spatial_residual(w, dx, v)[1:-1] + rn))
            ab[0, 1:] = -0.5 * dt * (-2.0 * b * w[2:-1] + a)
            ab[1] = 1.0 + dt * a
            ab[2, :-1] = -0.5 * dt * (2.0 * b * w[1:-2] + a)
            delta = solve_banded((1, 1), ab, g)
            w[1:-1] += delta
            big = np.abs(delta).max()
            if not np.isfinite(big):
                return out, False
            if big < tol:
                converged = True
                break
        if not converged:
            return out, False
        u = w
        if k_rec < record.shape[0] and record[k_rec] == step:
            out[k_rec] = u
            k_rec += 1
    return out, True


def burgers_oracle_solve(x_grid, t_range, v, initial, dt=0.005, boundary=None, output_times=None,
                         tol=1e-12, max_iter=30):
    """Crank-Nicolson finite-difference solution of the viscous Burgers' equation.

    ``x_grid`` is ``(start, end, dx)``; ``initial`` is either an array of
    nodal values at ``t_range[0]`` or a callable ``f(x, t)`` that is also
    used for Dirichlet boundary values. ``boundary`` may override the
    boundary with a callable ``t -> (u_left, u_right)``; without either,
    boundary values stay at the initial ones. The nonlinear step is solved
    by Newton iteration on the tridiagonal Jacobian.

    Returns ``(x, times, u)`` with ``u[k]`` the field at ``times[k]``.
    """
    x0, x1, dx = (float(a) for a in x_grid)
    t0, t1 = (float(a) for a in t_range)
    if dx <= 0 or dt <= 0 or x1 <= x0 or t1 < t0:
        raise ParameterError("need dx > 0, dt > 0, x_end > x_start and t_end >= t_start")
    if v < V_MIN:
        raise ParameterError(f"viscosity must be >= {V_MIN}")
    nx = int(math.floor((x1 - x0) / dx + 1e-9)) + 1
    if nx < 3 or abs(x0 + (nx - 1) * dx - x1) > 1e-9 * max(1.0, abs(x1)):
        raise ResolutionError(f"dx={dx} does not divide [{x0}, {x1}] into at least two cells")
    x = x0 + dx * np.arange(nx)
    nsteps = int(round((t1 - t0) / dt))
    if abs(t0 + nsteps * dt - t1) > 1e-9:
        raise ResolutionError(f"dt={dt} does not divide [{t0}, {t1}]")
    times_all = t0 + dt * np.arange(nsteps + 1)

    if callable(initial):
        u0 = np.asarray(initial(x, t0), dtype=np.float64)
        if boundary is None:
            bl = np.asarray(initial(np.full(nsteps + 1, x0), times_all), dtype=np.float64)
            br = np.asarray(initial(np.full(nsteps + 1, x1), times_all), dtype=np.float64)
    else:
        u0 = np.asarray(initial, dtype=np.float64).copy()
        if u0.shape != (nx,):
            raise DimensionError(f"initial condition has {u0.size} samples for {nx} nodes")
        if boundary is None:
            bl = np.full(nsteps + 1, u0[0])
            br = np.full(nsteps + 1, u0[-1])
    if boundary is not None:
        pairs = np.array([boundary(t) for t in times_all], dtype=np.float64)
        bl, br = pairs[:, 0].copy(), pairs[:, 1].copy()
    if not np.isfinite(u0).all():
        raise ParameterError("initial condition must be finite")

    peclet = np.abs(u0).max() * dx / v
    if peclet > 2.0:
        raise ResolutionError(f"cell Peclet number {peclet:.3g} > 2; refine dx (currently {dx})")

    if output_times is None:
        record = np.arange(nsteps + 1)
    else:
        record = np.rint((np.asarray(output_times, dtype=np.float64) - t0) / dt).astype(np.int64)
        if (np.abs(t0 + record * dt - np.asarray(output_times)) > 1e-9).any() or (record < 0).any() \
                or (record > nsteps).any() or (np.diff(record) <= 0).any():
            raise ParameterError("output_times must be increasing multiples of dt inside the time range")

    march = _cn_march_nb if _backend.use_numba() else _cn_march_np
    out, ok = march(u0, float(v), dx, dt, nsteps, bl, br, record, tol, max_iter)
    if not ok:
        raise ResolutionError(f"Newton iteration failed to converge (v={v}, dx={dx}, dt={dt})")
    return x, times_all[record], out


# ---------------------------------------------------------------- grids and datasets

@dataclass(frozen=True)
class GridSpec:
    """Ordered per-dimension (name, start, end, step) ranges; the last dimension varies fastest."""

    dims: tuple

    def __post_init__(self):
        dims = tuple((str(n), float(a), float(b), float(s)) for n, a, b, s in self.dims)
        for name, start, end, step in dims:
            if not step > 0:
                raise ParameterError(f"grid step for {name!r} must be positive")
            if start > end:
                raise ParameterError(f"grid start > end for {name!r}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def parse(cls, text):
        """Parse ``name=start:end:step;name=value;...``."""
        dims = []
        for part in filter(None, (p.strip() for p in text.split(";"))):
            if "=" not in part:
                raise ParameterError(f"grid entry {part!r} lacks '='")
            name, rng = (s.strip() for s in part.split("=", 1))
            nums = rng.split(":")
            try:
                vals = [float(s) for s in nums]
            except ValueError:
                raise ParameterError(f"grid entry {part!r} is not numeric") from None
            if len(vals) == 1:
                vals = [vals[0], vals[0], 1.0]
            if len(vals) != 3:
                raise ParameterError(f"grid entry {part!r} must be start:end:step or a single value")
            dims.append((name, *vals))
        if not dims:
            raise ParameterError("empty grid")
        return cls(tuple(dims))

    def format(self):
        parts = []
        for name, start, end, step in self.dims:
            if start == end:
                parts.append(f"{name}={start:g}")
            else:
                parts.append(f"{name}={start:g}:{end:g}:{step:g}")
        return ";".join(parts)

    @property
    def names(self):
        return [d[0] for d in self.dims]

    def counts(self):
        return [int(math.floor((end - start) / step + 1e-9)) + 1 for _, start, end, step in self.dims]

    @property
    def size(self):
        return int(np.prod(self.counts()))

    def axis(self, name):
        for (n, start, _, step), count in zip(self.dims, self.counts()):
            if n == name:
                return np.round(start + step * np.arange(count), 12)
        raise SchemaError(f"grid has no dimension {name!r}")

    def points(self):
        axes = [self.axis(n) for n in self.names]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


FULL_BURGERS_GRID = GridSpec((("t", 0.2, 4.8, 0.2), ("x", 0.2, 4.8, 0.2), ("v", 0.2, 4.8, 0.2)))
DESK_BURGERS_GRID = GridSpec((("t", 0.2, 4.8, 0.2), ("x", 0.2, 4.8, 0.2), ("v", 2.0, 2.0, 0.2)))


@dataclass
class Dataset:
    schema: str
    design_columns: list
    response_columns: list
    data: np.ndarray
    split: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.design_columns = list(self.design_columns)
        self.response_columns = list(self.response_columns)
        self.data = np.array(self.data, dtype=np.float64, ndmin=2)
        if self.schema in SCHEMAS:
            want_d, want_r = SCHEMAS[self.schema]
            if tuple(self.design_columns) != want_d or tuple(self.response_columns) != want_r:
                raise SchemaError(
                    f"schema {self.schema!r} requires columns {list(want_d) + list(want_r)}, "
                    f"got {self.columns}"
                )
        elif self.schema != "custom":
            raise SchemaError(f"unknown schema {self.schema!r}")
        if self.data.shape[1] != len(self.columns):
            raise DimensionError(f"data has {self.data.shape[1]} columns, schema has {len(self.columns)}")
        if not np.isfinite(self.data).all():
            bad = np.argwhere(~np.isfinite(self.data))[0]
            raise SchemaError(f"non-finite value at row {bad[0]}, column {self.columns[bad[1]]!r}")
        if self.split is not None:
            self.split = np.asarray(self.split, dtype=object)
            if self.split.shape != (self.n_rows,) or not set(self.split) <= set(SPLIT_TAGS):
                raise SchemaError("split tags must be one of train/val/test for every row")

    @property
    def columns(self):
        return self.design_columns + self.response_columns

    @property
    def n_rows(self):
        return self.data.shape[0]

    @property
    def n_design(self):
        return len(self.design_columns)

    @property
    def design(self):
        return self.data[:, : self.n_design]

    @property
    def responses(self):
        return self.data[:, self.n_design:]

    @property
    def units(self):
        table = UNITS.get(self.schema, {})
        return {c: table.get(c, "1") for c in self.columns}

    def column(self, name):
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise SchemaError(f"dataset has no column {name!r}; columns are {self.columns}") from None

    def subset(self, tag):
        if self.split is None:
            raise SchemaError("dataset has no split tags")
        mask = self.split == tag
        return Dataset(self.schema, self.design_columns, self.response_columns, self.data[mask],
                       None, dict(self.metadata))

    def with_data(self, data):
        return Dataset(self.schema, self.design_columns, self.response_columns, data, None, dict(self.metadata))


def burgers_generate(grid=FULL_BURGERS_GRID, family="hump", max_rows=DEFAULT_ROW_CAP):
    """One (t, x, v, u) row per grid point; t varies slowest, v fastest."""
    if sorted(grid.names) != ["t", "v", "x"]:
        raise SchemaError(f"Burgers' grid needs dimensions t, x, v; got {grid.names}")
    if grid.size > max_rows:
        raise ResourceError(f"grid has {grid.size} points, above the cap of {max_rows}")
    order = [grid.names.index(c) for c in ("t", "x", "v")]
    pts = grid.points()[:, order] if grid.names != ["t", "x", "v"] else grid.points()
    u = burgers_solution(pts[:, 1], pts[:, 0], pts[:, 2], family)
    ds = Dataset("burgers", ["t", "x", "v"], ["u"], np.column_stack([pts, u]))
    ds.metadata.update({"schema": "burgers", "grid": grid.format(), "family": family})
    return ds


# ---------------------------------------------------------------- CSV

def fmt(x):
    return format(float(x), ".17g")


def csv_save(dataset, path, write_metadata=True):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = dataset.columns + ([SPLIT_COLUMN] if dataset.split is not None else [])
        w.writerow(header)
        for i, row in enumerate(dataset.data):
            cells = [fmt(x) for x in row]
            if dataset.split is not None:
                cells.append(dataset.split[i])
            w.writerow(cells)
    if write_metadata and dataset.metadata:
        write_keyvalue(str(path) + ".meta", dataset.metadata)


def csv_load(path, schema, design_dim=None):
    """Load a CSV whose header matches ``schema`` exactly (an optional trailing
    ``split`` column is accepted). For ``schema="custom"`` the header defines
    the columns and ``design_dim`` says how many leading ones are design."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvParseError("file is empty", row=1)
    header = [h.strip() for h in rows[0]]
    has_split = bool(header) and header[-1] == SPLIT_COLUMN
    cols = header[:-1] if has_split else header
    if schema == "custom":
        if design_dim is None or not 0 < design_dim < len(cols):
            raise SchemaError("custom schema needs 0 < design_dim < number of columns")
        design, response = cols[:design_dim], cols[design_dim:]
    elif schema in SCHEMAS:
        design, response = SCHEMAS[schema]
        expected = list(design) + list(response)
        if cols != expected:
            for k, (got, want) in enumerate(zip(cols, expected)):
                if got != want:
                    raise CsvParseError(f"expected column {want!r}, found {got!r}", row=1, column=got)
            if len(cols) < len(expected):
                raise CsvParseError(f"missing columns {expected[len(cols):]}", row=1)
            raise CsvParseError(f"unexpected extra columns {cols[len(expected):]}", row=1)
    else:
        raise SchemaError(f"unknown schema {schema!r}")

    data = np.empty((len(rows) - 1, len(cols)))
    tags = [] if has_split else None
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != len(header):
            raise CsvParseError(f"expected {len(header)} cells, found {len(row)}", row=line)
        for c, name in enumerate(cols):
            try:
                val = float(row[c])
            except ValueError:
                raise CsvParseError(f"non-numeric value {row[c]!r}", row=line, column=name) from None
            if not math.isfinite(val):
                raise CsvParseError(f"non-finite value {row[c]!r}", row=line, column=name)
            data[r, c] = val
        if has_split:
            tag = row[-1].strip()
            if tag not in SPLIT_TAGS:
                raise CsvParseError(f"unknown split tag {tag!r}", row=line, column=SPLIT_COLUMN)
            tags.append(tag)
    ds = Dataset(schema, list(design), list(response), data,
                 np.array(tags, dtype=object) if has_split else None)
    try:
        ds.metadata = read_keyvalue(str(path) + ".meta")
    except FileNotFoundError:
        pass
    return ds


def write_keyvalue(path, mapping):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in mapping.items():
            fh.write(f"{k} = {v}\n")


def read_keyvalue(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------- split / normalize

def split(dataset, ratios=(8, 1, 1), seed=0):
    """Seeded shuffle, then contiguous train/val/test blocks; val and test
    sizes are floored and the remainder goes to train."""
    if dataset.split is not None:
        raise ParameterError("dataset is already split")
    if len(ratios) != 3 or any(not r > 0 for r in ratios):
        raise ParameterError(f"ratios must be three positive numbers, got {ratios}")
    n = dataset.n_rows
    if n < 3:
        raise ParameterError(f"need at least 3 rows to split, got {n}")
    total = float(sum(ratios))
    n_val = int(math.floor(n * ratios[1] / total))
    n_test = int(math.floor(n * ratios[2] / total))
    n_train = n - n_val - n_test
    perm = SeededRng(seed).permutation(n)
    tags = np.empty(n, dtype=object)
    tags[perm[:n_train]] = "train"
    tags[perm[n_train:n_train + n_val]] = "val"
    tags[perm[n_train + n_val:]] = "test"
    out = Dataset(dataset.schema, dataset.design_columns, dataset.response_columns, dataset.data,
                  tags, dict(dataset.metadata))
    out.metadata["split_seed"] = str(seed)
    out.metadata["split_ratios"] = ":".join(f"{r:g}" for r in ratios)
    return out


@dataclass
class NormStats:
    """Per-column min/max for min-max scaling to [0, 1]."""

    columns: list
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.columns = list(self.columns)
        self.lo = np.asarray(self.lo, dtype=np.float64).ravel()
        self.hi = np.asarray(self.hi, dtype=np.float64).ravel()
        if not len(self.columns) == self.lo.size == self.hi.size:
            raise DimensionError("NormStats column count mismatch")
        for name, a, b in zip(self.columns, self.lo, self.hi):
            if not b > a:
                raise ColumnError(f"column {name!r} is constant (min == max == {a:g}); cannot normalize",
                                  column=name)

    @classmethod
    def from_dataset(cls, dataset, ranges=None):
        """Statistics from the train split (or all rows when untagged).

        ``ranges`` maps column names to fixed (lo, hi) bounds that override
        the data, e.g. the grid bounds of a design parameter held constant.
        """
        src = dataset.subset("train") if dataset.split is not None else dataset
        lo = src.data.min(axis=0)
        hi = src.data.max(axis=0)
        for name, (a, b) in (ranges or {}).items():
            if name not in dataset.columns:
                raise ColumnError(f"normalization range for unknown column {name!r}", column=name)
            k = dataset.columns.index(name)
            lo[k], hi[k] = a, b
        return cls(dataset.columns, lo, hi)

    def select(self, columns):
        idx = [self.columns.index(c) for c in columns]
        return NormStats(columns, self.lo[idx], self.hi[idx])

    def normalize(self, m):
        m = np.asarray(m, dtype=np.float64)
        if m.shape[-1] != self.lo.size:
            raise DimensionError(f"matrix has {m.shape[-1]} columns, stats have {self.lo.size}")
        return (m - self.lo) / (self.hi - self.lo)

    def denormalize(self, m):
        m = np.asarray(m, dtype=np.float64)
        if m.shape[-1] != self.lo.size:
            raise DimensionError(f"matrix has {m.shape[-1]} columns, stats have {self.lo.size}")
        return m * (self.hi - self.lo) + self.lo


def normalize(dataset, stats):
    if stats.columns != dataset.columns:
        raise SchemaError(f"stats columns {stats.columns} do not match dataset {dataset.columns}")
    return stats.normalize(dataset.data)


def denormalize(matrix, stats):
    return stats.denormalize(matrix)
