"""Attack strategies: how a corrupted user set rewrites its reports.

An attack maps the true block to a reported block, altering only the
coordinates the adversary controls; honest coordinates and the decoder's
side information pass through bit-identical.  Strategies include the
identity, arbitrary per-letter channels, channels extracted from
viability violation witnesses (the converse construction), the worked
example's erasure-pattern resampler, and a two-regime splice for stressing
decoders that must not assume memoryless attacks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Union

import numpy as np

from .probability import Alphabet, Channel, SampleBlock, derive_seed, philox
from .viability import ViolationWitness


class AttackError(ValueError):
    """Strategy incompatible with the adversary set or alphabets."""


@dataclass(frozen=True)
class Honest:
    pass


@dataclass(frozen=True)
class MemorylessChannel:
    channel: Channel


@dataclass(frozen=True)
class WitnessDMC:
    """Replay a violation witness's scenario channel as a memoryless attack."""

    witness: ViolationWitness
    scenario: int


@dataclass(frozen=True)
class ResampleW:
    """Erasure-pattern resampler for a two-coordinate adversary.

    When exactly one of the pair is an erasure, the unerased value u is
    kept and the pair is redrawn as (erase-first, u) or (u, erase-second)
    with probability 1/2 each; other inputs pass unchanged.
    """


@dataclass(frozen=True)
class BlockSplit:
    """Apply ``first`` to the initial floor(fraction*n) letters, ``second``
    to the rest.  The canonical non-memoryless stress attack."""

    first: "AttackStrategy"
    second: "AttackStrategy"
    fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise AttackError("split fraction must be in [0, 1]")


AttackStrategy = Union[Honest, MemorylessChannel, WitnessDMC, ResampleW, BlockSplit]


def witness_to_dmc(witness: ViolationWitness, scenario: int) -> Channel:
    """Scenario channel Q(reported | true) extracted from a witness joint.

    Rows at zero-probability inputs default to identity.
    """
    if not 0 <= scenario < len(witness.collection):
        raise AttackError("scenario index outside the witness collection")
    coords = witness.member_coords(scenario)
    block = witness.member_block(scenario)
    marg = witness.joint.marginalize(tuple(block) + coords)  # (tx..., ux...)
    axes = tuple(witness.joint.axes[c] for c in coords)
    sizes = tuple(a.size for a in axes)
    n = int(np.prod(sizes))
    flat = marg.mass.reshape(n, n)
    rows = np.empty((n, n), dtype=object)
    rows[:] = Fraction(0)
    for i in range(n):
        tot = flat[i].sum()
        if tot == 0:
            rows[i, i] = Fraction(1)
        else:
            for j in range(n):
                rows[i, j] = flat[i, j] / tot
    return Channel(axes, axes, rows.reshape(sizes + sizes))


def _erasure_symbol(axis: Alphabet) -> int:
    non_bits = [i for i, s in enumerate(axis.symbols) if s not in (0, 1, "0", "1")]
    if len(non_bits) != 1:
        raise AttackError("resampler needs one erasure symbol per coordinate")
    return non_bits[0]


def resample_w_channel(axes: tuple[Alphabet, Alphabet], exact: bool = True) -> Channel:
    """The erasure-pattern resampling channel on a coordinate pair."""
    if len(axes) != 2:
        raise AttackError("resampler acts on exactly two coordinates")
    e1, e2 = _erasure_symbol(axes[0]), _erasure_symbol(axes[1])
    n1, n2 = axes[0].size, axes[1].size
    bit1 = {axes[0].index(b) for b in (0, 1) if b in axes[0].symbols} | \
           {axes[0].index(b) for b in ("0", "1") if b in axes[0].symbols}
    bit2 = {axes[1].index(b) for b in (0, 1) if b in axes[1].symbols} | \
           {axes[1].index(b) for b in ("0", "1") if b in axes[1].symbols}
    half = Fraction(1, 2) if exact else 0.5
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    rows = np.empty((n1, n2, n1, n2), dtype=object if exact else np.float64)
    rows[:] = zero
    bitsym = {axes[0].symbols[b]: b for b in bit1}
    for a, b in product(range(n1), range(n2)):
        if a == e1 and b != e2 and b in bit2:
            u = axes[1].symbols[b]
            rows[a, b, e1, b] = half
            rows[a, b, bitsym[u], e2] = half
        elif b == e2 and a != e1 and a in bit1:
            u = axes[0].symbols[a]
            rows[a, b, e1, axes[1].index(u)] = half
            rows[a, b, a, e2] = half
        else:
            rows[a, b, a, b] = one
    return Channel(axes, axes, rows)


def _apply_memoryless(chan: Channel, coords: tuple[int, ...], block: SampleBlock,
                      seed: int) -> SampleBlock:
    sizes_in = tuple(a.size for a in chan.input_axes)
    n_in = int(np.prod(sizes_in))
    n_out = int(np.prod([a.size for a in chan.output_axes]))
    cf = chan.to_float()
    cums = np.cumsum(cf.rows.reshape(n_in, n_out), axis=1)
    cums[:, -1] = 1.0
    in_seq = np.ravel_multi_index(tuple(block.user_seqs[c] for c in coords), sizes_in)
    rng = philox(seed)
    u = rng.random(block.n)
    out_flat = (cums[in_seq] <= u[:, None]).sum(axis=1)
    out_idx = np.unravel_index(out_flat, tuple(a.size for a in chan.output_axes))
    return block.replace_users({c: out_idx[pos].astype(np.int64)
                                for pos, c in enumerate(coords)})


def attack(strategy: AttackStrategy, adversary_set, true_block: SampleBlock,
           seed: int) -> SampleBlock:
    """Reported block under the strategy; deterministic given the seed.

    Coordinates outside the adversary set (and the side information) are
    returned bit-identical.
    """
    coords = tuple(sorted(adversary_set))
    for c in coords:
        if not 0 <= c < true_block.k:
            raise AttackError(f"adversary coordinate {c} out of range")
    if isinstance(strategy, Honest) or not coords:
        return true_block
    if isinstance(strategy, MemorylessChannel):
        chan = strategy.channel
        if tuple(chan.input_axes) != tuple(true_block.axes[c] for c in coords):
            raise AttackError("channel input axes do not match the adversary set")
        return _apply_memoryless(chan, coords, true_block, seed)
    if isinstance(strategy, WitnessDMC):
        member_set = strategy.witness.collection[strategy.scenario]
        if frozenset(adversary_set) != member_set:
            raise AttackError("adversary set differs from the witness scenario")
        chan = witness_to_dmc(strategy.witness, strategy.scenario)
        return _apply_memoryless(chan, coords, true_block, seed)
    if isinstance(strategy, ResampleW):
        if len(coords) != 2:
            raise AttackError("resampler needs a two-coordinate adversary set")
        axes = (true_block.axes[coords[0]], true_block.axes[coords[1]])
        chan = resample_w_channel(axes, exact=False)
        return _apply_memoryless(chan, coords, true_block, seed)
    if isinstance(strategy, BlockSplit):
        n1 = int(np.floor(strategy.fraction * true_block.n))
        first = SampleBlock(true_block.axes, true_block.user_seqs[:, :n1],
                            true_block.side_seq[:n1]) if n1 else None
        second = SampleBlock(true_block.axes, true_block.user_seqs[:, n1:],
                             true_block.side_seq[n1:]) if n1 < true_block.n else None
        parts = []
        if first is not None:
            parts.append(attack(strategy.first, adversary_set, first,
                                derive_seed(seed, "split", 0)))
        if second is not None:
            parts.append(attack(strategy.second, adversary_set, second,
                                derive_seed(seed, "split", 1)))
        users = np.concatenate([p.user_seqs for p in parts], axis=1)
        side = np.concatenate([p.side_seq for p in parts])
        return SampleBlock(true_block.axes, users, side)
    raise AttackError(f"unknown strategy {strategy!r}")


def strategy_from_json(d: dict, witness_lookup=None) -> AttackStrategy:
    """Parse a strategy spec; channels inline, witnesses via a resolver."""
    kind = d.get("kind")
    if kind == "honest":
        return Honest()
    if kind == "memoryless":
        return MemorylessChannel(Channel.from_json_dict(d["channel"]))
    if kind == "resample_w":
        return ResampleW()
    if kind == "witness_dmc":
        if witness_lookup is None:
            raise AttackError("witness_dmc needs a witness resolver")
        return WitnessDMC(witness_lookup(d), int(d["scenario"]))
    if kind == "block_split":
        return BlockSplit(strategy_from_json(d["first"], witness_lookup),
                          strategy_from_json(d["second"], witness_lookup),
                          float(d.get("fraction", 0.5)))
    raise AttackError(f"unknown strategy kind {kind!r}")
