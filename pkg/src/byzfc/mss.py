"""Minimal sufficient statistics and side-information upgrading.

The single-corruption machinery: partition a sender's alphabet by
identical conditional rows toward the receiver, iteratively upgrade the
receiver's side information with both senders' partitions until the
process saturates, and run the pairwise / k-user decoding protocols whose
output is the maximum (resp. common) upgraded variable.  Doubles as the
independent oracle for the LP viability checker at threshold 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .probability import Alphabet, JointPmf, ProbabilityError, product_alphabet
from .structures import TargetFunction

ROW_TOL = 1e-9


@dataclass(frozen=True)
class Partition:
    """Partition of an alphabet; class labels are contiguous from 0."""

    alphabet: Alphabet
    class_of: np.ndarray
    class_count: int

    def __post_init__(self):
        cls = self.class_of
        if cls.shape != (self.alphabet.size,):
            raise ProbabilityError("class_of must label every symbol")
        seen = np.unique(cls)
        if not np.array_equal(seen, np.arange(self.class_count)):
            raise ProbabilityError("class labels must be contiguous and all used")

    def refines(self, other: "Partition") -> bool:
        """Equal labels here imply equal labels in ``other``."""
        mapping: dict[int, int] = {}
        for s in range(self.alphabet.size):
            mine, theirs = int(self.class_of[s]), int(other.class_of[s])
            if mine in mapping and mapping[mine] != theirs:
                return False
            mapping[mine] = theirs
        return True

    def __eq__(self, other) -> bool:
        return (isinstance(other, Partition)
                and self.alphabet == other.alphabet
                and np.array_equal(self.class_of, other.class_of))

    def __hash__(self):
        raise TypeError("Partition is not hashable")


def _canonicalize(raw: Sequence) -> tuple[np.ndarray, int]:
    """Relabel arbitrary keys to contiguous ints by first appearance."""
    seen: dict = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, key in enumerate(raw):
        if key not in seen:
            seen[key] = len(seen)
        out[i] = seen[key]
    return out, len(seen)


def _partition_rows(joint: np.ndarray, exact: bool) -> tuple[np.ndarray, int]:
    """Group row indices of a (n_rows, n_cols) joint-mass matrix by their
    conditional rows; zero-mass rows become singleton classes."""
    n = joint.shape[0]
    keys: list = []
    if exact:
        for i in range(n):
            tot = joint[i].sum()
            if tot == 0:
                keys.append(("zero", i))
            else:
                keys.append(tuple(v / tot for v in joint[i]))
        return _canonicalize(keys)
    totals = joint.sum(axis=1)
    cond = np.zeros_like(joint, dtype=np.float64)
    alive = totals > 0
    cond[alive] = joint[alive] / totals[alive, None]
    # union-find with per-entry tolerance; alphabets are tiny
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        if not alive[i]:
            continue
        for j in range(i + 1, n):
            if not alive[j]:
                continue
            if np.max(np.abs(cond[i] - cond[j])) <= ROW_TOL:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    keys = [("zero", i) if not alive[i] else ("c", find(i)) for i in range(n)]
    return _canonicalize(keys)


def mss_partition(p: JointPmf) -> Partition:
    """Partition of the first axis by identical conditional rows P(V|U=u)."""
    if p.k != 2:
        raise ProbabilityError("mss_partition expects a two-axis pmf")
    labels, count = _partition_rows(p.mass, p.exact)
    return Partition(p.axes[0], labels, count)


@dataclass(frozen=True)
class UpgradeRound:
    """State after computing round r's partitions of both senders."""

    r: int
    labels: np.ndarray          # (|U|,|V|,|W|) -> current side-info class
    label_count: int
    psi_u: Partition
    psi_v: Partition
    joint_u: np.ndarray         # (|U|, label_count) joint mass of (U, W^(r))
    joint_v: np.ndarray


@dataclass(frozen=True)
class MaxUpgrade:
    rounds: tuple[UpgradeRound, ...]
    ystar_labels: np.ndarray     # (|U|,|V|,|W|) -> class of (W, psi*_U, psi*_V)
    ystar_count: int

    @property
    def psi_u(self) -> Partition:
        return self.rounds[-1].psi_u

    @property
    def psi_v(self) -> Partition:
        return self.rounds[-1].psi_v

    @property
    def saturation_round(self) -> int:
        return self.rounds[-1].r


def _joint_with_labels(mass: np.ndarray, labels: np.ndarray, count: int,
                       axis: int, exact: bool) -> np.ndarray:
    """Joint mass of (axis variable, label(u,v,w)) as a dense matrix."""
    n = mass.shape[axis]
    if exact:
        out = np.empty((n, count), dtype=object)
        out[:] = Fraction(0)
    else:
        out = np.zeros((n, count))
    it = np.nditer(labels, flags=["multi_index"])
    for lab in it:
        idx = it.multi_index
        out[idx[axis], int(lab)] += mass[idx]
    return out


def upgrade_to_saturation(p: JointPmf) -> MaxUpgrade:
    """Iterate side-information upgrading until both partitions stabilize.

    Saturates after at most |U|*|V| rounds; every round's partitions refine
    the previous round's.
    """
    if p.k != 3:
        raise ProbabilityError("upgrade_to_saturation expects a three-axis pmf")
    nu, nv, nw = (a.size for a in p.axes)
    exact = p.exact
    labels = np.empty((nu, nv, nw), dtype=np.int64)
    labels[:, :, :] = np.arange(nw)[None, None, :]
    count = nw
    rounds: list[UpgradeRound] = []
    bound = nu * nv
    for r in range(bound + 1):
        ju = _joint_with_labels(p.mass, labels, count, 0, exact)
        jv = _joint_with_labels(p.mass, labels, count, 1, exact)
        cu, ncu = _partition_rows(ju, exact)
        cv, ncv = _partition_rows(jv, exact)
        psi_u = Partition(p.axes[0], cu, ncu)
        psi_v = Partition(p.axes[1], cv, ncv)
        rounds.append(UpgradeRound(r, labels, count, psi_u, psi_v, ju, jv))
        if r > 0 and psi_u == rounds[r - 1].psi_u and psi_v == rounds[r - 1].psi_v:
            break
        keys = []
        for u, v, w in product(range(nu), range(nv), range(nw)):
            keys.append((int(labels[u, v, w]), int(cu[u]), int(cv[v])))
        flat, count = _canonicalize(keys)
        new_labels = flat.reshape(nu, nv, nw)
        if np.array_equal(new_labels, labels) and r > 0:
            break
        labels = new_labels
    else:
        raise ProbabilityError("upgrading failed to saturate within the |U||V| bound")

    psi_u, psi_v = rounds[-1].psi_u, rounds[-1].psi_v
    keys = []
    for u, v, w in product(range(nu), range(nv), range(nw)):
        keys.append((w, int(psi_u.class_of[u]), int(psi_v.class_of[v])))
    flat, ycount = _canonicalize(keys)
    return MaxUpgrade(rounds=tuple(rounds), ystar_labels=flat.reshape(nu, nv, nw),
                      ystar_count=ycount)


def markov_residual(p: JointPmf, up: MaxUpgrade) -> float:
    """Conditional mutual information I(U; (psi_V(V), W) | psi_U(U)), nats."""
    pf = p.to_float()
    nu, nv, nw = (a.size for a in pf.axes)
    cu = up.psi_u.class_of
    cv = up.psi_v.class_of
    na = up.psi_u.class_count
    joint = np.zeros((na, nu, up.psi_v.class_count * nw))
    for u, v, w in product(range(nu), range(nv), range(nw)):
        joint[cu[u], u, cv[v] * nw + w] += pf.mass[u, v, w]
    total = 0.0
    for a in range(na):
        pa = joint[a].sum()
        if pa <= 0:
            continue
        block = joint[a]
        pu = block.sum(axis=1)
        pb = block.sum(axis=0)
        for i in range(nu):
            for j in range(block.shape[1]):
                if block[i, j] > 0:
                    total += block[i, j] * math.log(block[i, j] * pa / (pu[i] * pb[j]))
    return max(total, 0.0)


def markov_holds_exact(p: JointPmf, up: MaxUpgrade) -> bool:
    """Exact factorization check of U  <->  psi_U(U)  <->  (psi_V(V), W)."""
    p.require_exact("exact Markov check")
    nu, nv, nw = (a.size for a in p.axes)
    cu, cv = up.psi_u.class_of, up.psi_v.class_of
    na, nb = up.psi_u.class_count, up.psi_v.class_count * nw
    joint = np.empty((na, nu, nb), dtype=object)
    joint[:] = Fraction(0)
    for u, v, w in product(range(nu), range(nv), range(nw)):
        joint[cu[u], u, cv[v] * nw + w] += p.mass[u, v, w]
    for a in range(na):
        block = joint[a]
        pa = block.sum()
        if pa == 0:
            continue
        pu = block.sum(axis=1)
        pb = block.sum(axis=0)
        for i in range(nu):
            for j in range(nb):
                if block[i, j] * pa != pu[i] * pb[j]:
                    return False
    return True


# -- protocols ---------------------------------------------------------------


def decode_21(p: JointPmf, u_seq: np.ndarray, v_seq: np.ndarray, w_seq: np.ndarray,
              gammas: Sequence[float]) -> tuple[str, object]:
    """Pairwise robust decoding with per-round typicality checks.

    Returns ("blame", 0) / ("blame", 1) naming the first or second sender,
    or ("labels", array) with the per-letter classes of the maximum
    upgraded variable.  ``gammas`` holds one TV radius per round,
    |U||V| + 1 of them.
    """
    if p.k != 3:
        raise ProbabilityError("decode_21 expects a three-axis pmf")
    nu, nv, nw = (a.size for a in p.axes)
    bound = nu * nv
    if len(gammas) != bound + 1:
        raise ProbabilityError(f"need {bound + 1} per-round tolerances, got {len(gammas)}")
    n = len(u_seq)
    if not (len(v_seq) == len(w_seq) == n):
        raise ProbabilityError("sequence lengths differ")
    up = upgrade_to_saturation(p)
    pf = p.to_float()

    for r in range(bound + 1):
        rnd = up.rounds[min(r, len(up.rounds) - 1)]
        lab_seq = rnd.labels[u_seq, v_seq, w_seq]
        ju = rnd.joint_u if not p.exact else np.vectorize(float)(rnd.joint_u)
        jv = rnd.joint_v if not p.exact else np.vectorize(float)(rnd.joint_v)
        tu = np.bincount(u_seq * rnd.label_count + lab_seq,
                         minlength=nu * rnd.label_count).reshape(nu, rnd.label_count) / n
        if 0.5 * np.abs(tu - ju).sum() > gammas[r]:
            return ("blame", 0)
        tv_ = np.bincount(v_seq * rnd.label_count + lab_seq,
                          minlength=nv * rnd.label_count).reshape(nv, rnd.label_count) / n
        if 0.5 * np.abs(tv_ - jv).sum() > gammas[r]:
            return ("blame", 1)
    return ("labels", up.ystar_labels[u_seq, v_seq, w_seq])


@dataclass(frozen=True)
class PairUpgrade:
    """Saturated upgrade for users (i, j) with composite side (Y, X_rest)."""

    i: int
    j: int
    pmf3: JointPmf
    upgrade: MaxUpgrade
    ystar_full: np.ndarray   # labels over the full (x_[k], y) space
    ystar_full_count: int


def _pair_pmf(p: JointPmf, i: int, j: int) -> tuple[JointPmf, tuple[int, ...]]:
    """P_{X_i, X_j, (Y, X_rest)} with the composite coordinate order recorded."""
    k = p.k - 1
    rest = tuple(c for c in range(k) if c not in (i, j))
    order = (i, j, k) + rest
    arr = np.transpose(p.mass, axes=order)
    comp_axes = (p.axes[k],) + tuple(p.axes[c] for c in rest)
    comp = product_alphabet(comp_axes)
    new = arr.reshape(p.axes[i].size, p.axes[j].size, comp.size)
    return JointPmf((p.axes[i], p.axes[j], comp), new, tol=1e-8), rest


def pair_upgrade(p: JointPmf, i: int, j: int) -> PairUpgrade:
    pm3, rest = _pair_pmf(p, i, j)
    up = upgrade_to_saturation(pm3)
    k = p.k - 1
    sizes = tuple(a.size for a in p.axes)
    keys = []
    for full in product(*(range(s) for s in sizes)):
        y = full[k]
        keys.append((y, int(up.psi_u.class_of[full[i]]), int(up.psi_v.class_of[full[j]])))
    flat, cnt = _canonicalize(keys)
    return PairUpgrade(i=i, j=j, pmf3=pm3, upgrade=up,
                       ystar_full=flat.reshape(sizes), ystar_full_count=cnt)


@dataclass(frozen=True)
class CommonUpgrade:
    """The common upgraded variable: finest labeling that every pairwise
    maximum upgrade determines (multi-variable Gacs-Korner common part,
    computed as connected components over the source support)."""

    pairs: tuple[PairUpgrade, ...]
    gstar: np.ndarray            # labels over the full (x_[k], y) space
    gstar_count: int


def common_upgrade(p: JointPmf) -> CommonUpgrade:
    k = p.k - 1
    if k < 2:
        raise ProbabilityError("common upgrade needs at least two users")
    pairs = tuple(pair_upgrade(p, i, j) for i, j in combinations(range(k), 2))
    sizes = tuple(a.size for a in p.axes)
    flat_size = int(np.prod(sizes))
    parent = list(range(flat_size))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    supp = [np.ravel_multi_index(idx, sizes) for idx in p.support_idx()]
    for pu in pairs:
        groups: dict[int, int] = {}
        lab_flat = pu.ystar_full.reshape(-1)
        for s in supp:
            lb = int(lab_flat[s])
            if lb in groups:
                ra, rb = find(groups[lb]), find(int(s))
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                groups[lb] = int(s)
    keys = []
    supp_set = set(int(s) for s in supp)
    for s in range(flat_size):
        keys.append(("s", find(s)) if s in supp_set else ("off", s))
    flat, cnt = _canonicalize(keys)
    return CommonUpgrade(pairs=pairs, gstar=flat.reshape(sizes), gstar_count=cnt)


def gstar_sequence(cu: CommonUpgrade, user_seqs: np.ndarray, side_seq: np.ndarray) -> np.ndarray:
    coords = tuple(user_seqs[i] for i in range(user_seqs.shape[0])) + (side_seq,)
    return cu.gstar[coords]


def _h_map(cu: CommonUpgrade, pu: PairUpgrade, p: JointPmf) -> np.ndarray:
    """decode_21 output class -> G* class, via any supporting triple."""
    nu, nv, nwc = (a.size for a in pu.pmf3.axes)
    k = p.k - 1
    rest = tuple(c for c in range(k) if c not in (pu.i, pu.j))
    rest_sizes = tuple(p.axes[c].size for c in rest)
    y_size = p.axes[k].size
    out = np.zeros(pu.upgrade.ystar_count, dtype=np.int64)
    seen = np.zeros(pu.upgrade.ystar_count, dtype=bool)
    for u, v, wc in product(range(nu), range(nv), range(nwc)):
        if pu.pmf3.mass[u, v, wc] <= 0:
            continue
        comp = np.unravel_index(wc, (y_size,) + rest_sizes)
        full = [0] * (k + 1)
        full[pu.i], full[pu.j], full[k] = u, v, int(comp[0])
        for pos, c in enumerate(rest):
            full[c] = int(comp[pos + 1])
        lab = int(pu.upgrade.ystar_labels[u, v, wc])
        out[lab] = int(cu.gstar[tuple(full)])
        seen[lab] = True
    return out


@dataclass(frozen=True)
class DecodeK1Config:
    gamma_base: float = 0.1

    def gammas(self, nu: int, nv: int) -> list[float]:
        return [self.gamma_base] * (nu * nv + 1)


def decode_k1(p: JointPmf, user_seqs: np.ndarray, side_seq: np.ndarray,
              config: DecodeK1Config = DecodeK1Config()) -> tuple[str, object]:
    """Exoneration-loop decoder for any k with at most one corrupt user.

    Runs the pairwise decoder on the two lowest-indexed unexonerated
    users, with every other user's report folded into the side
    information.  A successful pairwise decode yields the common upgraded
    variable; a blame with only two candidates left is final.
    """
    k = p.k - 1
    if k < 2:
        raise ProbabilityError("decode_k1 needs at least two users")
    cu = common_upgrade(p)
    trusted: set[int] = set()
    while True:
        candidates = [u for u in range(k) if u not in trusted]
        i, j = candidates[0], candidates[1]
        pu = next(q for q in cu.pairs if (q.i, q.j) == (i, j))
        rest = tuple(c for c in range(k) if c not in (i, j))
        rest_sizes = tuple(p.axes[c].size for c in rest)
        y_size = p.axes[k].size
        comp_seq = side_seq.copy()
        if rest:
            comp_seq = np.ravel_multi_index(
                (side_seq,) + tuple(user_seqs[c] for c in rest), (y_size,) + rest_sizes)
        nu, nv = pu.pmf3.axes[0].size, pu.pmf3.axes[1].size
        kind, payload = decode_21(pu.pmf3.to_float(), user_seqs[i], user_seqs[j],
                                  comp_seq, config.gammas(nu, nv))
        if kind == "labels":
            h = _h_map(cu, pu, p)
            return ("estimate", h[payload])
        blamed = i if payload == 0 else j
        other = j if payload == 0 else i
        if len(trusted) == k - 2:
            return ("blame", blamed)
        trusted.add(other)


def is_function_of_ystar(p: JointPmf, f: TargetFunction) -> bool:
    """Two-user characterization: f is determined by the maximum upgrade.

    True iff f is constant on every class of the Y* labeling restricted to
    the support of P.
    """
    if p.k != 3:
        raise ProbabilityError("is_function_of_ystar expects exactly two users")
    if tuple(f.domain_axes) != p.axes:
        raise ProbabilityError("function domain does not match the pmf")
    up = upgrade_to_saturation(p)
    value: dict[int, int] = {}
    for idx in p.support_idx():
        lab = int(up.ystar_labels[idx])
        fv = int(f.table[idx])
        if value.setdefault(lab, fv) != fv:
            return False
    return True
