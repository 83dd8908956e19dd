"""Deciding robust recoverability and constructing repaired decoding tables.

A function is viable for an adversary structure when, for every
non-intersecting collection of adversary sets, no two scenarios can
explain one reported-view distribution while implying different function
values with positive probability.  The feasibility region for a
collection is parametrized by one row-stochastic channel per member with
pairwise equal induced views; constraints (a) and (b) of the underlying
definition force every scenario marginal into exactly this form, and any
family of such marginals extends to a full joint by conditional-product
coupling.  Verdicts are decided with the exact rational simplex;
violations are returned as fully materialized joints that an independent
verifier re-checks against the definition directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .probability import Alphabet, Channel, JointPmf
from .simplex import Infeasible, LPError, Tableau, positive_coordinates
from .structures import (AdversaryStructure, Collection, TargetFunction,
                         nonintersecting_collections)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class ViabilityInputError(ValueError):
    """Bad inputs (float-mode pmf, mismatched axes, ...)."""


class GBuildConflict(RuntimeError):
    """build_g found two feasible explanations with different f-values.

    Signals a non-viable input; carries the conflicting pair for
    diagnosis.
    """

    def __init__(self, view, detail_a, detail_b):
        super().__init__(f"conflicting explanations at view {view}: {detail_a} vs {detail_b}")
        self.view = view
        self.details = (detail_a, detail_b)


@dataclass(frozen=True)
class ViolationWitness:
    """Certified failure of the viability equality on one collection.

    ``joint`` is the full joint pmf over the reported view, side
    information and every scenario's true values; ``point`` indexes a
    tuple of positive mass where scenarios ``pair`` imply different
    function values.
    """

    collection: Collection
    joint: JointPmf
    point: tuple[int, ...]
    pair: tuple[int, int]
    f_values: tuple
    k: int

    def view_point(self) -> tuple[int, ...]:
        return self.point[: self.k + 1]

    def member_coords(self, member: int) -> tuple[int, ...]:
        return tuple(sorted(self.collection[member]))

    def member_block(self, member: int) -> tuple[int, ...]:
        """Axis positions of scenario ``member``'s true values in the joint."""
        off = self.k + 1
        for m in range(member):
            off += len(self.collection[m])
        return tuple(range(off, off + len(self.collection[member])))

    def scenario_truth(self, member: int) -> tuple[int, ...]:
        block = self.member_block(member)
        return tuple(self.point[a] for a in block)


@dataclass(frozen=True)
class ViabilityReport:
    viable: bool
    witness: ViolationWitness | None = None

    def __post_init__(self):
        if not self.viable and self.witness is None:
            raise ValueError("non-viable report requires a witness")
        if self.viable and self.witness is not None:
            raise ValueError("viable report carries no witness")


@dataclass(frozen=True)
class GTable:
    """Repaired decoding function for one collection.

    Agrees with f on the source support; ``defined_mask`` marks entries
    pinned by the construction (reachable views) versus copied from f.
    """

    collection: Collection
    domain_axes: tuple[Alphabet, ...]
    codomain: Alphabet
    table: np.ndarray
    defined_mask: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "collection": [sorted(s) for s in self.collection],
            "axes": [list(a.symbols) for a in self.domain_axes],
            "codomain": list(self.codomain.symbols),
            "table": [self.codomain.symbols[v] for v in self.table.reshape(-1)],
            "defined": [bool(v) for v in self.defined_mask.reshape(-1)],
        }


class _Region:
    """Channel-parametrized feasibility region for one collection.

    Variables are the entries W_m(out | row) for every member m, rows
    restricted to the support of P over the member's coordinates.
    Equalities: each row sums to 1; induced views match between adjacent
    members.  A zero-fixing presolve removes variables that structurally
    dead view points force to zero.
    """

    def __init__(self, p: JointPmf, collection: Collection):
        self.p = p
        self.collection = collection
        self.k = p.k - 1
        axes_sizes = tuple(a.size for a in p.axes)
        self.view_shape = axes_sizes

        self.member_coords: list[tuple[int, ...]] = []
        self.member_rows: list[list[tuple[int, ...]]] = []
        self.member_out: list[list[tuple[int, ...]]] = []
        self.var_of: dict[tuple[int, tuple, tuple], int] = {}
        nvar = 0
        for m, aset in enumerate(collection):
            coords = tuple(sorted(aset))
            self.member_coords.append(coords)
            marg = p.marginalize(coords)
            rows = [idx for idx in product(*(range(axes_sizes[c]) for c in coords))
                    if marg.mass[idx] > 0]
            outs = list(product(*(range(axes_sizes[c]) for c in coords)))
            self.member_rows.append(rows)
            self.member_out.append(outs)
            for tx in rows:
                for ux in outs:
                    self.var_of[(m, tx, ux)] = nvar
                    nvar += 1
        self.nvar = nvar

        rows_eq: list[dict[int, Fraction]] = []
        rhs_eq: list[Fraction] = []
        for m in range(len(collection)):
            for tx in self.member_rows[m]:
                rows_eq.append({self.var_of[(m, tx, ux)]: _ONE for ux in self.member_out[m]})
                rhs_eq.append(_ONE)
        # view-match between adjacent members
        for m in range(len(collection) - 1):
            for v in product(*(range(s) for s in axes_sizes)):
                row: dict[int, Fraction] = {}
                for mm, sign in ((m, _ONE), (m + 1, -_ONE)):
                    coords = self.member_coords[mm]
                    ux = tuple(v[c] for c in coords)
                    for tx in self.member_rows[mm]:
                        coef = self._p_at(v, coords, tx)
                        if coef > 0:
                            var = self.var_of[(mm, tx, ux)]
                            row[var] = row.get(var, _ZERO) + sign * coef
                if row:
                    rows_eq.append(row)
                    rhs_eq.append(_ZERO)
        self._presolve(rows_eq, rhs_eq)
        self._tableau: Tableau | None = None
        self._reach: set[int] | None = None
        self._sols: dict[int, list[Fraction]] | None = None

    def _p_at(self, v: tuple[int, ...], coords: tuple[int, ...], tx: tuple[int, ...]):
        """P at the view point with the member coordinates replaced by tx."""
        full = list(v)
        for pos, c in enumerate(coords):
            full[c] = tx[pos]
        return self.p.mass[tuple(full)]

    def _presolve(self, rows: list[dict[int, Fraction]], rhs: list[Fraction]) -> None:
        fixed: set[int] = set()
        changed = True
        while changed:
            changed = False
            for row, b in zip(rows, rhs):
                if b != 0:
                    continue
                alive = {v: c for v, c in row.items() if v not in fixed and c != 0}
                if not alive:
                    continue
                signs = {c > 0 for c in alive.values()}
                if len(signs) == 1:
                    fixed.update(alive)
                    changed = True
        self.fixed = fixed
        alive_vars = [v for v in range(self.nvar) if v not in fixed]
        self.alive_index = {v: i for i, v in enumerate(alive_vars)}
        self.alive_vars = alive_vars
        A: list[list[Fraction]] = []
        b_out: list[Fraction] = []
        seen: set[tuple] = set()
        for row, b in zip(rows, rhs):
            dense = [_ZERO] * len(alive_vars)
            nonzero = False
            for v, c in row.items():
                if v in fixed:
                    continue
                dense[self.alive_index[v]] = c
                nonzero = True
            if not nonzero:
                if b != 0:
                    raise Infeasible("presolve emptied an inconsistent row")
                continue
            key = (b, tuple(dense))
            if key in seen:
                continue
            seen.add(key)
            A.append(dense)
            b_out.append(b)
        self.A = A
        self.b = b_out

    # -- feasibility and support -----------------------------------------

    def identity_solution(self) -> list[Fraction]:
        sol = [_ZERO] * self.nvar
        for m in range(len(self.collection)):
            for tx in self.member_rows[m]:
                sol[self.var_of[(m, tx, tx)]] = _ONE
        return sol

    def _solve_support(self) -> None:
        if self._reach is not None:
            return
        identity = self.identity_solution()
        for v in self.fixed:
            if identity[v] != 0:
                raise LPError("presolve fixed a coordinate of a feasible point")
        tableau = Tableau(self.A, self.b)
        id_alive = [identity[v] for v in self.alive_vars]
        pos_alive, wit_alive = positive_coordinates(
            tableau, range(len(self.alive_vars)), seeds=[id_alive])
        self._tableau = tableau
        self._reach = {self.alive_vars[i] for i in pos_alive}
        self._sols = {}
        for i, sol in wit_alive.items():
            self._sols[self.alive_vars[i]] = sol

    def reachable(self, m: int, tx: tuple[int, ...], ux: tuple[int, ...]) -> bool:
        self._solve_support()
        var = self.var_of.get((m, tx, ux))
        return var is not None and var in self._reach

    def solution_for(self, m: int, tx: tuple[int, ...], ux: tuple[int, ...]) -> list[Fraction]:
        """A feasible full-length solution with W_m(ux|tx) > 0."""
        self._solve_support()
        var = self.var_of[(m, tx, ux)]
        sol_alive = self._sols[var]
        full = [_ZERO] * self.nvar
        for v, i in self.alive_index.items():
            full[v] = sol_alive[i]
        return full

    def conflict_vertex(self, var_a: int, var_b: int) -> list[Fraction]:
        """Basic feasible point with both coordinates strictly positive.

        Solves max t subject to the region constraints and x_a >= t,
        x_b >= t; the optimum is positive whenever both coordinates are
        individually reachable (feasible points average), and the vertex
        of the lifted system is the reproducible witness the reports carry.
        """
        ia = self.alive_index.get(var_a)
        ib = self.alive_index.get(var_b)
        if ia is None or ib is None:
            raise LPError("conflict coordinate was presolved away")
        nv = len(self.alive_vars)
        A = [row + [_ZERO, _ZERO, _ZERO] for row in self.A]
        row_a = [_ZERO] * (nv + 3)
        row_a[ia], row_a[nv], row_a[nv + 1] = _ONE, -_ONE, -_ONE
        row_b = [_ZERO] * (nv + 3)
        row_b[ib], row_b[nv], row_b[nv + 2] = _ONE, -_ONE, -_ONE
        A.extend([row_a, row_b])
        b = list(self.b) + [_ZERO, _ZERO]
        t = Tableau(A, b)
        c = [_ZERO] * (nv + 3)
        c[nv] = _ONE
        opt = t.maximize(c)
        if opt <= 0:
            raise LPError("conflict coordinates are not simultaneously reachable")
        sol_alive = t.solution()
        full = [_ZERO] * self.nvar
        for v, i in self.alive_index.items():
            full[v] = sol_alive[i]
        return full

    def explanations(self, v: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
        """Scenario truths (member, tx) that can carry positive mass at view v."""
        self._solve_support()
        out = []
        for m in range(len(self.collection)):
            coords = self.member_coords[m]
            ux = tuple(v[c] for c in coords)
            for tx in self.member_rows[m]:
                if self._p_at(v, coords, tx) > 0 and self.reachable(m, tx, ux):
                    out.append((m, tx))
        return out

    def channels_from(self, sol: Sequence[Fraction]) -> list[Channel]:
        """Member channels of a feasible solution; off-support rows identity."""
        chans = []
        for m, aset in enumerate(self.collection):
            coords = self.member_coords[m]
            axes = tuple(self.p.axes[c] for c in coords)
            sizes = tuple(a.size for a in axes)
            n = int(np.prod(sizes))
            mat = np.empty((n, n), dtype=object)
            mat[:] = _ZERO
            rows = set(self.member_rows[m])
            for i, tx in enumerate(product(*(range(s) for s in sizes))):
                if tx in rows:
                    for j, ux in enumerate(product(*(range(s) for s in sizes))):
                        mat[i, j] = sol[self.var_of[(m, tx, ux)]]
                else:
                    mat[i, i] = _ONE
            chans.append(Channel(axes, axes, mat.reshape(sizes + sizes)))
        return chans


def _f_at(f: TargetFunction, v: tuple[int, ...], coords: tuple[int, ...],
          tx: tuple[int, ...]) -> int:
    full = list(v)
    for pos, c in enumerate(coords):
        full[c] = tx[pos]
    return int(f.table[tuple(full)])


def _materialize_witness(region: _Region, f: TargetFunction, v: tuple[int, ...],
                         a: tuple[int, tuple[int, ...]], b: tuple[int, tuple[int, ...]],
                         ) -> ViolationWitness:
    p = region.p
    k = region.k
    collection = region.collection
    var_a = region.var_of[(a[0], a[1], tuple(v[c] for c in region.member_coords[a[0]]))]
    var_b = region.var_of[(b[0], b[1], tuple(v[c] for c in region.member_coords[b[0]]))]
    avg = region.conflict_vertex(var_a, var_b)
    chans = region.channels_from(avg)

    from .viewsets import induce_view  # local import to avoid a cycle
    view = induce_view(p, collection[0], chans[0])

    member_axes: list[Alphabet] = []
    for m in range(len(collection)):
        member_axes.extend(p.axes[c] for c in region.member_coords[m])
    joint_axes = tuple(p.axes) + tuple(member_axes)
    shape = tuple(ax.size for ax in joint_axes)
    mass = np.empty(shape, dtype=object)
    mass[:] = _ZERO

    r = len(collection)
    axes_sizes = tuple(ax.size for ax in p.axes)
    for vp in product(*(range(s) for s in axes_sizes)):
        pv = view.mass[vp]
        if pv == 0:
            continue
        posts = []
        for m in range(r):
            coords = region.member_coords[m]
            ux = tuple(vp[c] for c in coords)
            post = []
            for tx in product(*(range(axes_sizes[c]) for c in coords)):
                if tx in set(region.member_rows[m]):
                    w = avg[region.var_of[(m, tx, ux)]]
                else:
                    w = _ONE if tx == ux else _ZERO
                num = region._p_at(vp, coords, tx) * w
                if num > 0:
                    post.append((tx, num / pv))
            posts.append(post)
        for combo in product(*posts):
            weight = pv
            idx: list[int] = list(vp)
            for tx, pr in combo:
                weight *= pr
                idx.extend(tx)
            mass[tuple(idx)] = mass[tuple(idx)] + weight
    joint = JointPmf(joint_axes, mass)

    point: list[int] = list(v)
    for m in range(r):
        if m == a[0]:
            point.extend(a[1])
        elif m == b[0]:
            point.extend(b[1])
        else:
            coords = region.member_coords[m]
            ux = tuple(v[c] for c in coords)
            chosen = None
            for tx in region.member_rows[m]:
                w = avg[region.var_of[(m, tx, ux)]]
                if region._p_at(v, coords, tx) * w > 0:
                    chosen = tx
                    break
            if chosen is None:
                raise LPError("view point lost its explanation during averaging")
            point.extend(chosen)

    fa = f.codomain.symbols[_f_at(f, v, region.member_coords[a[0]], a[1])]
    fb = f.codomain.symbols[_f_at(f, v, region.member_coords[b[0]], b[1])]
    return ViolationWitness(collection=collection, joint=joint, point=tuple(point),
                            pair=(a[0], b[0]), f_values=(fa, fb), k=k)


def _scan_collection(region: _Region, f: TargetFunction,
                     ) -> tuple[int, tuple, int, tuple, tuple] | None:
    """First f-conflict between two scenarios of the collection, or None."""
    axes_sizes = tuple(a.size for a in region.p.axes)
    for v in product(*(range(s) for s in axes_sizes)):
        expl = region.explanations(v)
        if len(expl) < 2:
            continue
        by_member: dict[int, list[tuple[tuple[int, ...], int]]] = {}
        for m, tx in expl:
            by_member.setdefault(m, []).append((tx, _f_at(f, v, region.member_coords[m], tx)))
        members = sorted(by_member)
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                ma, mb = members[ai], members[bi]
                for tx_a, fa in by_member[ma]:
                    for tx_b, fb in by_member[mb]:
                        if fa != fb:
                            return (ma, tx_a, mb, tx_b, v)
    return None


def _validate(p: JointPmf, f: TargetFunction, k: int) -> None:
    if p.k != k + 1:
        raise ViabilityInputError(f"pmf covers {p.k} axes, structure expects {k + 1}")
    p.require_exact("viability checking")
    if tuple(f.domain_axes) != p.axes:
        raise ViabilityInputError("function domain does not match the pmf axes")


def check_viability(p: JointPmf, f: TargetFunction, structure: AdversaryStructure,
                    fast_mode: bool = False) -> ViabilityReport:
    """Decide whether f is robustly recoverable under the structure.

    Exhaustive over non-intersecting collections in canonical order; the
    first violation is returned as a materialized witness.  A pair of
    scenarios already conflict-free on a checked sub-collection is skipped
    (restricting a matched family to a sub-collection stays feasible, so
    conflicts only shrink when members are added).

    ``fast_mode`` checks only the single maximal collection of all
    non-empty sets.  That is an UNSOUND heuristic: the definition
    quantifies over every collection and a violation may need a smaller
    one.  It exists for exploration only.
    """
    _validate(p, f, structure.k)
    collections = nonintersecting_collections(structure)
    if fast_mode:
        maximal = tuple(sorted(structure.nonempty_sets, key=lambda s: (len(s), sorted(s))))
        if maximal in collections or (len(maximal) >= 2
                                      and not frozenset.intersection(*maximal)):
            collections = [maximal]
    covered: dict[frozenset[frozenset[int]], list[frozenset]] = {}
    for col in collections:
        col_set = frozenset(col)
        uncovered = []
        for i in range(len(col)):
            for j in range(i + 1, len(col)):
                key = frozenset((col[i], col[j]))
                if not any(c <= col_set for c in covered.get(key, [])):
                    uncovered.append((i, j))
        if not uncovered:
            continue
        region = _Region(p, col)
        hit = _scan_collection(region, f)
        if hit is not None:
            ma, tx_a, mb, tx_b, v = hit
            witness = _materialize_witness(region, f, v, (ma, tx_a), (mb, tx_b))
            return ViabilityReport(viable=False, witness=witness)
        for i in range(len(col)):
            for j in range(i + 1, len(col)):
                covered.setdefault(frozenset((col[i], col[j])), []).append(col_set)
    return ViabilityReport(viable=True)


def check_s_viability(p: JointPmf, f: TargetFunction, s: int,
                      fast_mode: bool = False) -> ViabilityReport:
    """Threshold special case: structure = all subsets of size <= s."""
    k = p.k - 1
    return check_viability(p, f, AdversaryStructure.threshold(k, s), fast_mode=fast_mode)


def build_g(p: JointPmf, f: TargetFunction, collection: Collection) -> GTable:
    """Repaired decoding table for one non-intersecting collection.

    Pins every view point reachable by some matched channel family to the
    (unique, when f is viable) function value of a positive-posterior
    scenario truth; unreachable points copy f.  Two reachable truths with
    different values raise GBuildConflict.
    """
    _validate(p, f, p.k - 1)
    collection = tuple(frozenset(s) for s in collection)
    if len(collection) < 2 or len(set(collection)) != len(collection) \
            or any(not s for s in collection) \
            or frozenset.intersection(*collection):
        raise ViabilityInputError(
            "collection must be >= 2 distinct non-empty sets with empty intersection")
    region = _Region(p, tuple(collection))
    axes_sizes = tuple(a.size for a in p.axes)
    table = f.table.copy()
    mask = np.zeros(table.shape, dtype=bool)
    for v in product(*(range(s) for s in axes_sizes)):
        expl = region.explanations(v)
        if not expl:
            continue
        values = {}
        for m, tx in expl:
            values.setdefault(_f_at(f, v, region.member_coords[m], tx), (m, tx))
        if len(values) > 1:
            (va, da), (vb, db) = list(values.items())[:2]
            raise GBuildConflict(v, (da, f.codomain.symbols[va]), (db, f.codomain.symbols[vb]))
        table[v] = next(iter(values))
        mask[v] = True
    return GTable(collection=tuple(collection), domain_axes=tuple(p.axes),
                  codomain=f.codomain, table=table, defined_mask=mask)


# -- independent witness verification (Definition route) -------------------

def verify_witness(witness: ViolationWitness, p: JointPmf, f: TargetFunction) -> None:
    """Re-verify a witness directly against the viability definition.

    Checks, in exact arithmetic: (a) each scenario's
    (truth, honest-reports, side-info) marginal equals P; (b) the Markov
    constraint in cross-multiplied form
    Q(ux_A, tx_A, ux_rest, y) * P_A(tx_A) = Q(ux_A, tx_A) * P(<tx_A, ux_rest>, y);
    and that the conflicting point has positive mass with differing
    f-values.  Raises AssertionError on any failure.  This path shares no
    code with the channel-parametrized solver.
    """
    joint = witness.joint
    k = witness.k
    kk = k + 1
    assert joint.exact, "witness joints must be exact"
    assert joint.mass[witness.point] > 0, "conflicting point has zero mass"

    va = _f_at(f, witness.view_point(), witness.member_coords(witness.pair[0]),
               witness.scenario_truth(witness.pair[0]))
    vb = _f_at(f, witness.view_point(), witness.member_coords(witness.pair[1]),
               witness.scenario_truth(witness.pair[1]))
    assert va != vb, "witness point does not conflict"

    for m in range(len(witness.collection)):
        coords = witness.member_coords(m)
        block = witness.member_block(m)
        rest = tuple(c for c in range(kk) if c not in coords)
        # (a): marginal over <tx_A, ux_rest, y> equals P
        marg = joint.marginalize(rest + block)
        for full_idx in product(*(range(a.size) for a in p.axes)):
            tx = tuple(full_idx[c] for c in coords)
            others = tuple(full_idx[c] for c in rest)
            assert marg.mass[others + tx] == p.mass[full_idx], \
                f"scenario {m} constraint (a) fails at {full_idx}"
        # (b): cross-multiplied Markov constraint
        q4 = joint.marginalize(tuple(range(kk)) + block)
        q2 = joint.marginalize(coords + block)
        p_a = p.marginalize(coords)
        for full_idx in product(*(range(a.size) for a in p.axes)):
            ux_a = tuple(full_idx[c] for c in coords)
            for tx in product(*(range(p.axes[c].size) for c in coords)):
                lhs = q4.mass[full_idx + tx] * p_a.mass[tx]
                src = list(full_idx)
                for pos, c in enumerate(coords):
                    src[c] = tx[pos]
                rhs = q2.mass[ux_a + tx] * p.mass[tuple(src)]
                assert lhs == rhs, f"scenario {m} constraint (b) fails at {full_idx}, {tx}"
