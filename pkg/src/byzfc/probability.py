"""Finite-alphabet probability backbone.

Dense joint pmfs over products of small alphabets, conditional pmfs
(channels), empirical types, total variation distance and i.i.d. sampling.
Two arithmetic modes are supported and never mixed implicitly:

* exact  -- entries are ``fractions.Fraction`` held in object ndarrays;
  sums and equalities are literal,
* float  -- float64 entries with a construction-time normalization
  tolerance (default 1e-9).

Sampling uses numpy's counter-based Philox generator so that runs are
reproducible bit-for-bit from an integer seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

FLOAT_NORMALIZATION_TOL = 1e-9

Label = str | int


class ProbabilityError(ValueError):
    """Invalid distribution, channel or block."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise ProbabilityError(f"cannot interpret {x!r} as an exact rational")


class Alphabet:
    """Ordered finite alphabet with a stable label <-> index bijection."""

    __slots__ = ("symbols", "_index")

    def __init__(self, symbols: Sequence[Label]):
        symbols = tuple(symbols)
        if not symbols:
            raise ProbabilityError("alphabet must have at least one symbol")
        self._index = {s: i for i, s in enumerate(symbols)}
        if len(self._index) != len(symbols):
            raise ProbabilityError("alphabet labels must be distinct")
        self.symbols = symbols

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, label: Label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ProbabilityError(f"label {label!r} not in alphabet") from None

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return f"Alphabet({list(self.symbols)!r})"

    @staticmethod
    def binary() -> "Alphabet":
        return Alphabet((0, 1))

    @staticmethod
    def of_size(n: int, prefix: str = "") -> "Alphabet":
        if prefix:
            return Alphabet(tuple(f"{prefix}{i}" for i in range(n)))
        return Alphabet(tuple(range(n)))


def product_alphabet(axes: Sequence[Alphabet]) -> Alphabet:
    """Alphabet whose symbols are tuples of the component symbols."""
    shape = [a.size for a in axes]
    labels = []
    for flat in range(int(np.prod(shape, dtype=np.int64))):
        idx = np.unravel_index(flat, shape)
        labels.append(tuple(axes[j].symbols[idx[j]] for j in range(len(axes))))
    return Alphabet(labels)


class JointPmf:
    """Dense joint pmf over the product of ``axes``.

    ``mass`` is an ndarray of shape ``tuple(a.size for a in axes)``;
    object dtype means exact mode (Fraction entries), float64 means float
    mode.  Entries must be nonnegative and sum to one (exactly, or within
    ``tol`` in float mode).
    """

    __slots__ = ("axes", "mass", "tol")

    def __init__(self, axes: Sequence[Alphabet], mass, tol: float = FLOAT_NORMALIZATION_TOL):
        self.axes = tuple(axes)
        shape = tuple(a.size for a in self.axes)
        arr = np.asarray(mass)
        if arr.shape != shape:
            arr = arr.reshape(shape)
        self.tol = tol
        if arr.dtype == object:
            arr = np.array([[_as_fraction(v)] for v in arr.reshape(-1)], dtype=object)[:, 0].reshape(shape)
            total = arr.sum()
            if any(v < 0 for v in arr.reshape(-1)):
                raise ProbabilityError("negative mass entry")
            if total != 1:
                raise ProbabilityError(f"exact pmf sums to {total}, not 1")
        else:
            arr = arr.astype(np.float64)
            if np.any(arr < 0):
                raise ProbabilityError("negative mass entry")
            total = float(arr.sum())
            if abs(total - 1.0) > tol:
                raise ProbabilityError(f"float pmf sums to {total:.12g}, outside tolerance {tol}")
        self.mass = arr

    # -- mode handling -------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.mass.dtype == object

    @property
    def k(self) -> int:
        """Number of coordinates."""
        return len(self.axes)

    def to_float(self) -> "JointPmf":
        """Explicit conversion to float mode (identity if already float)."""
        if not self.exact:
            return self
        flat = np.array([float(v) for v in self.mass.reshape(-1)], dtype=np.float64)
        return JointPmf(self.axes, flat.reshape(self.mass.shape), tol=self.tol)

    def require_exact(self, what: str = "operation") -> None:
        if not self.exact:
            raise ProbabilityError(f"{what} requires an exact-mode pmf; convert explicitly")

    # -- basic accessors -----------------------------------------------

    def prob(self, labels: Sequence[Label]):
        idx = tuple(a.index(s) for a, s in zip(self.axes, labels))
        return self.mass[idx]

    def prob_idx(self, idx: Sequence[int]):
        return self.mass[tuple(idx)]

    def support_idx(self) -> list[tuple[int, ...]]:
        """Index tuples with positive mass, row-major order."""
        out = []
        it = np.nditer(np.arange(self.mass.size).reshape(self.mass.shape), flags=["multi_index"])
        flat = self.mass.reshape(-1)
        for nit in it:
            if flat[int(nit)] > 0:
                out.append(it.multi_index)
        return out

    # -- operations ----------------------------------------------------

    def marginalize(self, keep: Iterable[int]) -> "JointPmf":
        keep = tuple(keep)
        if not keep:
            raise ProbabilityError("keep set must be nonempty")
        if len(set(keep)) != len(keep):
            raise ProbabilityError("duplicate coordinates in keep set")
        for c in keep:
            if not 0 <= c < self.k:
                raise ProbabilityError(f"coordinate {c} out of range for {self.k} axes")
        keep_sorted = tuple(sorted(keep))
        drop = tuple(c for c in range(self.k) if c not in keep_sorted)
        arr = self.mass.sum(axis=drop) if drop else self.mass.copy()
        if keep != keep_sorted:
            # position of each requested coordinate inside the sorted result
            perm = tuple(keep_sorted.index(c) for c in keep)
            arr = np.transpose(arr, axes=perm)
            axes = tuple(self.axes[c] for c in keep)
        else:
            axes = tuple(self.axes[c] for c in keep_sorted)
        return JointPmf(axes, arr, tol=max(self.tol, 1e-9))

    def tv_distance(self, other: "JointPmf"):
        if self.axes != other.axes:
            raise ProbabilityError("tv_distance requires identical axes")
        diff = self.mass.reshape(-1)
        odiff = other.mass.reshape(-1)
        if self.exact and other.exact:
            return sum(abs(a - b) for a, b in zip(diff, odiff)) / 2
        a = self.to_float().mass.reshape(-1)
        b = other.to_float().mass.reshape(-1)
        return float(np.abs(a - b).sum() / 2.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JointPmf):
            return NotImplemented
        if self.axes != other.axes or self.exact != other.exact:
            return False
        return bool(np.all(self.mass == other.mass))

    def __hash__(self):
        raise TypeError("JointPmf is not hashable")

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        flat = self.mass.reshape(-1)
        if self.exact:
            mass = [f"{v.numerator}/{v.denominator}" for v in flat]
            mode = "exact"
        else:
            mass = [float(v) for v in flat]
            mode = "float"
        return {
            "axes": [list(a.symbols) for a in self.axes],
            "mass": mass,
            "mode": mode,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "JointPmf":
        axes = tuple(Alphabet(sym) for sym in d["axes"])
        shape = tuple(a.size for a in axes)
        if d.get("mode", "float") == "exact":
            flat = np.empty(int(np.prod(shape)), dtype=object)
            for i, v in enumerate(d["mass"]):
                flat[i] = _as_fraction(v)
            return JointPmf(axes, flat.reshape(shape))
        return JointPmf(axes, np.asarray(d["mass"], dtype=np.float64).reshape(shape))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(s: str) -> "JointPmf":
        return JointPmf.from_json_dict(json.loads(s))


def pmf_from_dict(axes: Sequence[Alphabet], entries: dict, exact: bool = True) -> JointPmf:
    """Build a pmf from {label-tuple: mass}; unspecified entries are 0."""
    shape = tuple(a.size for a in axes)
    if exact:
        flat = np.empty(int(np.prod(shape)), dtype=object)
        flat[:] = Fraction(0)
        arr = flat.reshape(shape)
        for labels, v in entries.items():
            arr[tuple(a.index(s) for a, s in zip(axes, labels))] = _as_fraction(v)
    else:
        arr = np.zeros(shape, dtype=np.float64)
        for labels, v in entries.items():
            arr[tuple(a.index(s) for a, s in zip(axes, labels))] = float(v)
    return JointPmf(axes, arr)


def uniform_pmf(axes: Sequence[Alphabet], exact: bool = True) -> JointPmf:
    n = int(np.prod([a.size for a in axes]))
    if exact:
        flat = np.empty(n, dtype=object)
        flat[:] = Fraction(1, n)
    else:
        flat = np.full(n, 1.0 / n)
    return JointPmf(axes, flat.reshape(tuple(a.size for a in axes)))


class Channel:
    """Conditional pmf W(output | input) over products of alphabets.

    ``rows`` has shape input-sizes + output-sizes; every input row sums
    to one.
    """

    __slots__ = ("input_axes", "output_axes", "rows", "tol")

    def __init__(self, input_axes: Sequence[Alphabet], output_axes: Sequence[Alphabet],
                 rows, tol: float = FLOAT_NORMALIZATION_TOL):
        self.input_axes = tuple(input_axes)
        self.output_axes = tuple(output_axes)
        in_shape = tuple(a.size for a in self.input_axes)
        out_shape = tuple(a.size for a in self.output_axes)
        arr = np.asarray(rows)
        if arr.shape != in_shape + out_shape:
            arr = arr.reshape(in_shape + out_shape)
        self.tol = tol
        n_in = int(np.prod(in_shape)) if in_shape else 1
        n_out = int(np.prod(out_shape)) if out_shape else 1
        flat = arr.reshape(n_in, n_out)
        if arr.dtype == object:
            fixed = np.empty((n_in, n_out), dtype=object)
            for i in range(n_in):
                for j in range(n_out):
                    v = _as_fraction(flat[i, j])
                    if v < 0:
                        raise ProbabilityError("negative channel entry")
                    fixed[i, j] = v
                if fixed[i].sum() != 1:
                    raise ProbabilityError(f"exact channel row {i} does not sum to 1")
            arr = fixed.reshape(in_shape + out_shape)
        else:
            arr = arr.astype(np.float64)
            if np.any(arr < 0):
                raise ProbabilityError("negative channel entry")
            sums = arr.reshape(n_in, n_out).sum(axis=1)
            if np.any(np.abs(sums - 1.0) > tol):
                raise ProbabilityError("float channel row outside normalization tolerance")
        self.rows = arr

    @property
    def exact(self) -> bool:
        return self.rows.dtype == object

    @property
    def n_inputs(self) -> int:
        return len(self.input_axes)

    def to_float(self) -> "Channel":
        if not self.exact:
            return self
        flat = np.array([float(v) for v in self.rows.reshape(-1)], dtype=np.float64)
        return Channel(self.input_axes, self.output_axes, flat.reshape(self.rows.shape))

    def row(self, in_idx: Sequence[int]):
        return self.rows[tuple(in_idx)]

    @staticmethod
    def identity(axes: Sequence[Alphabet], exact: bool = True) -> "Channel":
        axes = tuple(axes)
        n = int(np.prod([a.size for a in axes])) if axes else 1
        if exact:
            eye = np.empty((n, n), dtype=object)
            eye[:] = Fraction(0)
            for i in range(n):
                eye[i, i] = Fraction(1)
        else:
            eye = np.eye(n)
        shape = tuple(a.size for a in axes)
        return Channel(axes, axes, eye.reshape(shape + shape))

    def to_json_dict(self) -> dict:
        flat = self.rows.reshape(-1)
        if self.exact:
            rows = [f"{v.numerator}/{v.denominator}" for v in flat]
            mode = "exact"
        else:
            rows = [float(v) for v in flat]
            mode = "float"
        return {
            "input_axes": [list(a.symbols) for a in self.input_axes],
            "output_axes": [list(a.symbols) for a in self.output_axes],
            "rows": rows,
            "mode": mode,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Channel":
        in_axes = tuple(Alphabet(s) for s in d["input_axes"])
        out_axes = tuple(Alphabet(s) for s in d["output_axes"])
        shape = tuple(a.size for a in in_axes) + tuple(a.size for a in out_axes)
        if d.get("mode", "float") == "exact":
            flat = np.empty(int(np.prod(shape)), dtype=object)
            for i, v in enumerate(d["rows"]):
                flat[i] = _as_fraction(v)
            return Channel(in_axes, out_axes, flat.reshape(shape))
        return Channel(in_axes, out_axes, np.asarray(d["rows"], dtype=np.float64).reshape(shape))


def apply_channel(p: JointPmf, coords: Sequence[int], w: Channel) -> JointPmf:
    """Push ``p`` through ``w`` acting on the given coordinates.

    out(ux_coords, rest) = sum_x p(x_coords, rest) * w(ux_coords | x_coords).
    The selected coordinates are replaced by the channel's output axes.
    """
    coords = tuple(coords)
    if len(set(coords)) != len(coords):
        raise ProbabilityError("duplicate coordinates")
    if tuple(sorted(coords)) != coords:
        raise ProbabilityError("coords must be ascending")
    if tuple(p.axes[c] for c in coords) != w.input_axes:
        raise ProbabilityError("channel input axes do not match the selected coordinates")
    if len(w.output_axes) != len(coords):
        raise ProbabilityError("channel must output one axis per selected coordinate")
    if p.exact != w.exact:
        raise ProbabilityError("pmf and channel arithmetic modes differ; convert explicitly")

    rest = tuple(c for c in range(p.k) if c not in coords)
    perm = coords + rest
    moved = np.transpose(p.mass, axes=perm)
    n_in = int(np.prod([p.axes[c].size for c in coords])) if coords else 1
    n_rest = int(np.prod([p.axes[c].size for c in rest])) if rest else 1
    n_out = int(np.prod([a.size for a in w.output_axes])) if w.output_axes else 1
    mat = moved.reshape(n_in, n_rest)
    wmat = w.rows.reshape(n_in, n_out)
    out = wmat.T @ mat  # (n_out, n_rest); works for object dtype too
    out_shape = tuple(a.size for a in w.output_axes) + tuple(p.axes[c].size for c in rest)
    out = out.reshape(out_shape)
    inv = tuple(np.argsort(perm))
    out = np.transpose(out, axes=inv)
    new_axes = list(p.axes)
    for pos, c in enumerate(coords):
        new_axes[c] = w.output_axes[pos]
    return JointPmf(new_axes, out, tol=max(p.tol, 1e-9))


def tv_distance(p: JointPmf, q: JointPmf):
    return p.tv_distance(q)


@dataclass(frozen=True)
class SampleBlock:
    """n observations for k users plus decoder side information.

    ``user_seqs`` is an int array of shape (k, n) of symbol indices;
    ``side_seq`` has shape (n,).  ``axes`` lists the k user alphabets
    followed by the side-information alphabet.
    """

    axes: tuple[Alphabet, ...]
    user_seqs: np.ndarray
    side_seq: np.ndarray

    def __post_init__(self):
        k = len(self.axes) - 1
        if k < 1:
            raise ProbabilityError("block needs at least one user axis plus side info")
        if self.user_seqs.shape[0] != k:
            raise ProbabilityError("user_seqs has the wrong number of users")
        n = self.user_seqs.shape[1]
        if self.side_seq.shape != (n,):
            raise ProbabilityError("side_seq length mismatch")
        for i in range(k):
            col = self.user_seqs[i]
            if col.size and (col.min() < 0 or col.max() >= self.axes[i].size):
                raise ProbabilityError(f"user {i} sequence has out-of-range symbols")
        if n and (self.side_seq.min() < 0 or self.side_seq.max() >= self.axes[-1].size):
            raise ProbabilityError("side sequence has out-of-range symbols")

    @property
    def k(self) -> int:
        return len(self.axes) - 1

    @property
    def n(self) -> int:
        return int(self.user_seqs.shape[1])

    def column(self, t: int) -> tuple[int, ...]:
        return tuple(int(self.user_seqs[i, t]) for i in range(self.k)) + (int(self.side_seq[t]),)

    def replace_users(self, new_seqs: dict[int, np.ndarray]) -> "SampleBlock":
        seqs = self.user_seqs.copy()
        for i, s in new_seqs.items():
            seqs[i] = s
        return SampleBlock(self.axes, seqs, self.side_seq.copy())

    def to_json_dict(self) -> dict:
        return {
            "axes": [list(a.symbols) for a in self.axes],
            "users": [[self.axes[i].symbols[v] for v in self.user_seqs[i]] for i in range(self.k)],
            "side": [self.axes[-1].symbols[v] for v in self.side_seq],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SampleBlock":
        axes = tuple(Alphabet(s) for s in d["axes"])
        k = len(axes) - 1
        users = np.array(
            [[axes[i].index(s) for s in d["users"][i]] for i in range(k)], dtype=np.int64
        ).reshape(k, -1)
        side = np.array([axes[-1].index(s) for s in d["side"]], dtype=np.int64)
        return SampleBlock(axes, users, side)


def empirical_type(block: SampleBlock) -> JointPmf:
    """Joint type of a block, exact mode (entries are multiples of 1/n)."""
    n = block.n
    if n == 0:
        raise ProbabilityError("empty block has no type")
    shape = tuple(a.size for a in block.axes)
    flat_idx = np.ravel_multi_index(
        tuple(block.user_seqs[i] for i in range(block.k)) + (block.side_seq,), shape
    )
    counts = np.bincount(flat_idx, minlength=int(np.prod(shape)))
    mass = np.empty(counts.size, dtype=object)
    for i, c in enumerate(counts):
        mass[i] = Fraction(int(c), n)
    return JointPmf(block.axes, mass.reshape(shape))


def philox(seed: int) -> np.random.Generator:
    """The artifact's RNG: counter-based Philox keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))


def derive_seed(master: int, *parts) -> int:
    """Stable sub-seed from a master seed and context tags (sha256-based)."""
    import hashlib

    h = hashlib.sha256(":".join([str(master)] + [str(p) for p in parts]).encode())
    return int.from_bytes(h.digest()[:8], "big")


def sample_iid(p: JointPmf, n: int, seed: int) -> SampleBlock:
    """Draw n i.i.d. tuples from a float-mode pmf over k+1 axes."""
    if p.exact:
        raise ProbabilityError("sample_iid requires a float-mode pmf; call to_float() explicitly")
    if n < 1:
        raise ProbabilityError("block length must be >= 1")
    if p.k < 2:
        raise ProbabilityError("pmf must cover at least one user axis plus side info")
    flat = p.mass.reshape(-1)
    cum = np.cumsum(flat)
    cum[-1] = 1.0
    rng = philox(seed)
    u = rng.random(n)
    flat_idx = np.searchsorted(cum, u, side="right")
    idx = np.unravel_index(flat_idx, p.mass.shape)
    k = p.k - 1
    users = np.stack([idx[i].astype(np.int64) for i in range(k)])
    side = idx[k].astype(np.int64)
    return SampleBlock(p.axes, users, side)


def apply_pointwise(fn, block: SampleBlock) -> np.ndarray:
    """Element-wise extension of a table-backed function to a block.

    ``fn`` must expose ``domain_axes`` (k+1 alphabets) and an integer
    ``table`` ndarray over those axes; returns codomain indices, shape (n,).
    """
    if tuple(fn.domain_axes) != block.axes:
        raise ProbabilityError("function domain does not match block axes")
    coords = tuple(block.user_seqs[i] for i in range(block.k)) + (block.side_seq,)
    return fn.table[coords]


def hamming_distortion(a: Sequence, b: Sequence) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ProbabilityError("sequences must have equal length")
    if a.size == 0:
        raise ProbabilityError("empty sequences")
    return float(np.mean(a != b))
