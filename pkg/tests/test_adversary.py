"""Attack strategies: immutability of honest coordinates, law preservation,
witness channel extraction and converse indistinguishability."""

from fractions import Fraction

import numpy as np
import pytest

from byzfc.adversary import (AttackError, BlockSplit, Honest, MemorylessChannel,
                             ResampleW, WitnessDMC, attack, resample_w_channel,
                             witness_to_dmc)
from byzfc.examples_lib import random_function, random_pmf
from byzfc.probability import (Channel, JointPmf, apply_channel, derive_seed,
                               empirical_type, philox, sample_iid, tv_distance)
from byzfc.viability import ViolationWitness, check_s_viability
from byzfc.viewsets import induce_view


@pytest.fixture(scope="module")
def uvw_witness(erasure_pmf, erasure_f_uvw):
    report = check_s_viability(erasure_pmf, erasure_f_uvw, 2)
    assert not report.viable
    return report.witness


def honest_block(erasure_pmf, n=2000, seed=0):
    return sample_iid(erasure_pmf.to_float(), n, seed=seed)


class TestBasicStrategies:
    def test_honest_identity(self, erasure_pmf):
        blk = honest_block(erasure_pmf)
        out = attack(Honest(), frozenset({1, 2}), blk, seed=1)
        assert out is blk

    def test_memoryless_identity_channel(self, erasure_pmf):
        blk = honest_block(erasure_pmf)
        w = Channel.identity((erasure_pmf.axes[1], erasure_pmf.axes[2]), exact=False)
        out = attack(MemorylessChannel(w), frozenset({1, 2}), blk, seed=2)
        assert np.array_equal(out.user_seqs, blk.user_seqs)
        assert np.array_equal(out.side_seq, blk.side_seq)

    def test_deterministic_given_seed(self, erasure_pmf):
        blk = honest_block(erasure_pmf)
        a = attack(ResampleW(), frozenset({1, 2}), blk, seed=3)
        b = attack(ResampleW(), frozenset({1, 2}), blk, seed=3)
        c = attack(ResampleW(), frozenset({1, 2}), blk, seed=4)
        assert np.array_equal(a.user_seqs, b.user_seqs)
        assert not np.array_equal(a.user_seqs, c.user_seqs)

    def test_honest_coordinates_never_mutated(self, erasure_pmf):
        blk = honest_block(erasure_pmf, n=500)
        strategies = [ResampleW(), MemorylessChannel(
            Channel.identity((erasure_pmf.axes[1], erasure_pmf.axes[2]), exact=False))]
        for s in strategies:
            for seed in range(25):
                out = attack(s, frozenset({1, 2}), blk, seed=seed)
                assert np.array_equal(out.user_seqs[0], blk.user_seqs[0])
                assert np.array_equal(out.side_seq, blk.side_seq)

    def test_channel_axis_mismatch(self, erasure_pmf):
        blk = honest_block(erasure_pmf, n=10)
        w = Channel.identity((erasure_pmf.axes[0],), exact=False)
        with pytest.raises(AttackError):
            attack(MemorylessChannel(w), frozenset({1}), blk, seed=0)


class TestResampleW:
    def test_single_letter_law_preserved_exactly(self, erasure_pmf):
        w = resample_w_channel((erasure_pmf.axes[1], erasure_pmf.axes[2]))
        assert apply_channel(erasure_pmf, (1, 2), w) == erasure_pmf

    def test_empirical_type_stays_near_base(self, erasure_pmf):
        pf = erasure_pmf.to_float()
        fails = 0
        for seed in range(50):
            blk = sample_iid(pf, 10_000, seed=derive_seed(11, seed))
            rep = attack(ResampleW(), frozenset({1, 2}), blk, seed=derive_seed(12, seed))
            if tv_distance(empirical_type(rep).to_float(), pf) > 0.05:
                fails += 1
        assert fails == 0

    def test_needs_two_coordinates(self, erasure_pmf):
        blk = honest_block(erasure_pmf, n=10)
        with pytest.raises(AttackError):
            attack(ResampleW(), frozenset({1}), blk, seed=0)


class TestMemorylessTypeConvergence:
    def test_joint_type_converges_to_pushforward(self, erasure_pmf):
        rng = philox(21)
        axes = (erasure_pmf.axes[1], erasure_pmf.axes[2])
        n9 = 9
        rows = rng.random((n9, n9)) + 0.05
        rows = rows / rows.sum(axis=1, keepdims=True)
        w = Channel(axes, axes, rows.reshape(3, 3, 3, 3))
        target = apply_channel(erasure_pmf.to_float(), (1, 2), w)
        fails = 0
        for seed in range(50):
            blk = sample_iid(erasure_pmf.to_float(), 10_000, seed=derive_seed(31, seed))
            rep = attack(MemorylessChannel(w), frozenset({1, 2}), blk,
                         seed=derive_seed(32, seed))
            if tv_distance(empirical_type(rep).to_float(), target) > 0.05:
                fails += 1
        assert fails == 0


class TestWitnessDMC:
    def test_extracted_channel_resamples_w(self, uvw_witness):
        m = list(uvw_witness.collection).index(frozenset({1, 2}))
        ch = witness_to_dmc(uvw_witness, m)
        a2, a3 = ch.input_axes
        e2, e3 = a2.index("e2"), a3.index("e3")
        flips = Fraction(0)
        for u in (0, 1):
            row_w0 = ch.rows[e2, a3.index(u)]          # true pattern W=0
            flips += row_w0[a2.index(u), e3]           # reported as W=1
            row_w1 = ch.rows[a2.index(u), e3]          # true pattern W=1
            flips += row_w1[e2, a3.index(u)]           # reported as W=0
        assert flips > 0

    def test_views_match_witness_view(self, uvw_witness, erasure_pmf):
        # re-verification oracle: the extracted channel's induced view must
        # equal the witness joint's view marginal, for every scenario
        k = uvw_witness.k
        view_marg = uvw_witness.joint.marginalize(tuple(range(k + 1)))
        for m in range(len(uvw_witness.collection)):
            ch = witness_to_dmc(uvw_witness, m)
            view = induce_view(erasure_pmf, uvw_witness.collection[m], ch)
            assert view == view_marg

    def test_identity_joint_gives_identity_channel(self, erasure_pmf):
        # fabricate a witness-like joint with tX = uX almost surely
        k = 3
        axes = tuple(erasure_pmf.axes) + (erasure_pmf.axes[0],)
        mass = np.empty(tuple(a.size for a in axes), dtype=object)
        mass[:] = Fraction(0)
        for idx in erasure_pmf.support_idx():
            mass[idx + (idx[0],)] = erasure_pmf.mass[idx]
        joint = JointPmf(axes, mass)
        w = ViolationWitness(collection=(frozenset({0}),), joint=joint,
                             point=(0, 0, 0, 0, 0), pair=(0, 0),
                             f_values=("x", "y"), k=k)
        ch = witness_to_dmc(w, 0)
        assert np.array_equal(ch.rows, Channel.identity((erasure_pmf.axes[0],)).rows)

    def test_scenario_set_must_match(self, uvw_witness, erasure_pmf):
        blk = honest_block(erasure_pmf, n=16)
        with pytest.raises(AttackError):
            attack(WitnessDMC(uvw_witness, 0), frozenset({1, 2}), blk, seed=0)

    def test_indistinguishability_across_random_witnesses(self):
        # Figure-2 property on random non-viable threshold-1 instances
        checked = 0
        for t in range(60):
            sizes = (2 + (t % 2), 2 + ((t // 2) % 2), 2 + ((t // 4) % 2))
            p = random_pmf(sizes, seed=derive_seed(3000, t), zero_frac=0.45, max_weight=1)
            f = random_function(p, 2, seed=derive_seed(4000, t))
            rep = check_s_viability(p, f, 1)
            if rep.viable:
                continue
            w = rep.witness
            views = [induce_view(p, w.collection[m], witness_to_dmc(w, m))
                     for m in range(len(w.collection))]
            for v in views[1:]:
                assert v == views[0]
            checked += 1
        assert checked >= 3


class TestConverseAttackOnViableFunction:
    def test_matching_g_keeps_distortion_small(self, erasure_pmf, erasure_f_uv,
                                               uvw_witness, erasure_config):
        # the pattern-resampling converse channel breaks (U,V,W) but must
        # leave a viable target recoverable at honest-case rates
        from byzfc.decoder import decode
        from byzfc.probability import apply_pointwise, hamming_distortion
        m = list(uvw_witness.collection).index(frozenset({1, 2}))
        pf = erasure_pmf.to_float()
        ok = 0
        for seed in range(30):
            blk = sample_iid(pf, 4000, seed=derive_seed(950, seed))
            rep = attack(WitnessDMC(uvw_witness, m), frozenset({1, 2}), blk,
                         seed=derive_seed(951, seed))
            v = decode(erasure_config, rep)
            truth = apply_pointwise(erasure_f_uv, blk)
            if v.kind == "estimate" and hamming_distortion(v.estimate, truth) <= 0.05:
                ok += 1
            elif v.kind == "blame" and v.user in (1, 2):
                ok += 1
        assert ok >= 29


class TestBlockSplit:
    def test_honest_halves_identical(self, erasure_pmf):
        blk = honest_block(erasure_pmf, n=101)
        out = attack(BlockSplit(Honest(), Honest(), 0.5), frozenset({1, 2}), blk, seed=0)
        assert np.array_equal(out.user_seqs, blk.user_seqs)

    def test_split_point_respected(self, erasure_pmf, uvw_witness):
        m = list(uvw_witness.collection).index(frozenset({1, 2}))
        blk = honest_block(erasure_pmf, n=1000, seed=13)
        strat = BlockSplit(Honest(), WitnessDMC(uvw_witness, m), 0.5)
        out = attack(strat, frozenset({1, 2}), blk, seed=5)
        assert np.array_equal(out.user_seqs[:, :500], blk.user_seqs[:, :500])
        assert np.array_equal(out.user_seqs[0], blk.user_seqs[0])
        assert np.array_equal(out.side_seq, blk.side_seq)

    def test_fraction_bounds(self):
        with pytest.raises(AttackError):
            BlockSplit(Honest(), Honest(), 1.5)
