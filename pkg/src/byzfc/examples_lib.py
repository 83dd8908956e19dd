"""Built-in example distributions and seeded random-instance generators.

The flagship entry is the three-user erasure example: U, V, W i.i.d.
uniform bits, user 1 holds U, the decoder's side information is U erased
with probability 1/2 (erasure flag V), and when erased exactly one of
users 2 and 3 (selected by W) sees an erasure instead of U.  Recovering
(U, V) survives any two colluding users; recovering W does not, since
users 2 and 3 together can resample it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .probability import Alphabet, JointPmf, philox, pmf_from_dict
from .structures import AdversaryStructure, TargetFunction

E2, E3, EY = "e2", "e3", "e"


def three_user_erasure_pmf() -> JointPmf:
    x1 = Alphabet((0, 1))
    x2 = Alphabet((0, 1, E2))
    x3 = Alphabet((0, 1, E3))
    y = Alphabet((0, 1, EY))
    entries = {}
    for u in (0, 1):
        entries[(u, u, u, u)] = Fraction(1, 4)      # V=0 (either W)
        entries[(u, E2, u, EY)] = Fraction(1, 8)    # V=1, W=0
        entries[(u, u, E3, EY)] = Fraction(1, 8)    # V=1, W=1
    return pmf_from_dict((x1, x2, x3, y), entries)


def three_user_erasure_f_uv() -> TargetFunction:
    p = three_user_erasure_pmf()
    cod = Alphabet(("00", "01", "10", "11"))
    return TargetFunction.from_callable(
        p.axes, cod, lambda x1, x2, x3, y: f"{x1}{1 if y == EY else 0}")


def three_user_erasure_f_uvw() -> TargetFunction:
    """(U, V, W); W is not determined by the observations when V=0, so
    that branch is filled with 0 (viability only depends on the support)."""
    p = three_user_erasure_pmf()
    cod = Alphabet(tuple(f"{u}{v}{w}" for u, v, w in product((0, 1), repeat=3)))

    def fn(x1, x2, x3, y):
        v = 1 if y == EY else 0
        w = 0 if (v == 0 or x2 == E2) else (1 if x3 == E3 else 0)
        return f"{x1}{v}{w}"

    return TargetFunction.from_callable(p.axes, cod, fn)


def three_user_erasure_self_check() -> None:
    """Re-derive the pmf from the (V, W) case analysis and compare."""
    p = three_user_erasure_pmf()
    axes = p.axes
    got = {}
    for u, v, w in product((0, 1), repeat=3):
        if v == 0:
            x2, x3, y = u, u, u
        elif w == 0:
            x2, x3, y = E2, u, EY
        else:
            x2, x3, y = u, E3, EY
        key = (u, x2, x3, y)
        got[key] = got.get(key, Fraction(0)) + Fraction(1, 8)
    for idx in product(*(range(a.size) for a in axes)):
        labels = tuple(axes[i].symbols[idx[i]] for i in range(4))
        expect = got.get(labels, Fraction(0))
        if p.mass[idx] != expect:
            raise AssertionError(f"self-check failed at {labels}: {p.mass[idx]} != {expect}")


def single_user_erasure_pmf() -> JointPmf:
    x = Alphabet((0, 1))
    y = Alphabet((0, 1, EY))
    entries = {}
    for b in (0, 1):
        entries[(b, b)] = Fraction(1, 4)
        entries[(b, EY)] = Fraction(1, 4)
    return pmf_from_dict((x, y), entries)


def single_user_erasure_f() -> TargetFunction:
    p = single_user_erasure_pmf()
    # the sender's minimal sufficient statistic toward Y is X itself here
    return TargetFunction.from_callable(p.axes, Alphabet((0, 1)), lambda x, y: x)


def two_user_copy_pmf() -> JointPmf:
    b = Alphabet((0, 1))
    return pmf_from_dict((b, b, b), {(0, 0, 0): Fraction(1, 2), (1, 1, 1): Fraction(1, 2)})


def two_user_copy_f() -> TargetFunction:
    p = two_user_copy_pmf()
    return TargetFunction.from_callable(p.axes, Alphabet((0, 1)), lambda x1, x2, y: y)


def random_pmf(sizes: tuple[int, ...], seed: int, zero_frac: float = 0.3,
               max_weight: int = 8) -> JointPmf:
    """Seeded exact random pmf: integer cell weights (some zeroed) over
    their total.  Documented generator for reproducible experiments."""
    rng = philox(seed)
    n = int(np.prod(sizes))
    weights = rng.integers(1, max_weight + 1, size=n)
    mask = rng.random(n) < zero_frac
    weights[mask] = 0
    if weights.sum() == 0:
        weights[int(rng.integers(0, n))] = 1
    total = int(weights.sum())
    flat = np.empty(n, dtype=object)
    for i, w in enumerate(weights):
        flat[i] = Fraction(int(w), total)
    axes = tuple(Alphabet.of_size(s) for s in sizes)
    return JointPmf(axes, flat.reshape(sizes))


def random_function(p: JointPmf, z_size: int, seed: int) -> TargetFunction:
    rng = philox(seed)
    shape = tuple(a.size for a in p.axes)
    table = rng.integers(0, z_size, size=shape)
    return TargetFunction(p.axes, Alphabet.of_size(z_size), table.astype(np.int64))


@dataclass(frozen=True)
class ExampleEntry:
    name: str
    pmf: JointPmf
    functions: dict[str, TargetFunction]
    default_function: str
    structure: AdversaryStructure
    note: str


def builtin_examples() -> dict[str, ExampleEntry]:
    """Catalog of named (pmf, f) pairs used across tests and the CLI."""
    p3 = three_user_erasure_pmf()
    p1 = single_user_erasure_pmf()
    p2 = two_user_copy_pmf()
    return {
        "example-3-2-erasure": ExampleEntry(
            name="example-3-2-erasure",
            pmf=p3,
            functions={"uv": three_user_erasure_f_uv(),
                       "uvw": three_user_erasure_f_uvw()},
            default_function="uv",
            structure=AdversaryStructure.threshold(3, 2),
            note="three users, any two corruptible; (U,V) is recoverable, W is not",
        ),
        "single-user-erasure": ExampleEntry(
            name="single-user-erasure",
            pmf=p1,
            functions={"mss": single_user_erasure_f()},
            default_function="mss",
            structure=AdversaryStructure.threshold(1, 1),
            note="one sender, side info an erased copy; the MSS equals the source",
        ),
        "two-user-copy": ExampleEntry(
            name="two-user-copy",
            pmf=p2,
            functions={"copy": two_user_copy_f()},
            default_function="copy",
            structure=AdversaryStructure.threshold(2, 1),
            note="all observations equal one common bit",
        ),
    }


def resolve_example(ref: str) -> tuple[JointPmf, TargetFunction, AdversaryStructure]:
    """"name" or "name:function" into catalog objects."""
    name, _, fn = ref.partition(":")
    cat = builtin_examples()
    if name not in cat:
        raise KeyError(f"unknown builtin example {name!r}")
    entry = cat[name]
    fn = fn or entry.default_function
    if fn not in entry.functions:
        raise KeyError(f"example {name!r} has no function {fn!r}")
    return entry.pmf, entry.functions[fn], entry.structure
