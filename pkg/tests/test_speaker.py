"""Speaker model: sentinel, attention, word distribution, scoring, decoding."""

import numpy as np
import pytest
from conftest import make_micro

from reflab.grad import Tape, backward, tensor
from reflab.grad import engine as ops
from reflab.speaker import (
    BOS,
    EOS,
    UNK,
    Speaker,
    SpeakerConfig,
    Vocabulary,
    attend,
    attend_with_bias_array,
    sentinel,
    word_dist,
)


class TestVocabulary:
    def test_reserved_and_roundtrip(self):
        v = Vocabulary(["b", "a"])
        assert len(v) == 6
        assert v.id_of("<unk>") == UNK
        assert v.token_of(v.id_of("a")) == "a"

    def test_unknown_maps_to_unk(self):
        v = Vocabulary(["a"])
        assert v.id_of("zzz") == UNK

    def test_encode_appends_eos_once(self):
        v = Vocabulary(["a"])
        ids = v.encode(["a", "a"])
        assert ids[-1] == EOS and ids.count(EOS) == 1
        assert v.encode(["a", "<eos>"]) == v.encode(["a"])


class TestSentinel:
    def test_zero_memory_gives_zero(self, micro):
        p = micro.speaker.params
        d = 8
        s = sentinel(p, tensor(np.ones(2 * d)), tensor(np.ones(d)), tensor(np.zeros(d)))
        assert not s.data.any()

    def test_saturated_gate_gives_tanh_memory(self, micro):
        p = micro.speaker.params
        d = 8
        big = micro.speaker.params.sent_wx.data
        p.sent_wx.data = np.full_like(big, 50.0)
        p.sent_wh.data = np.zeros_like(p.sent_wh.data)
        m = np.linspace(-1, 1, d)
        s = sentinel(p, tensor(np.ones(2 * d)), tensor(np.zeros(d)), tensor(m))
        np.testing.assert_allclose(s.data, np.tanh(m), atol=1e-12)

    def test_matches_straight_line_reimplementation(self, micro):
        rng = np.random.default_rng(5)
        p = micro.speaker.params
        d = 8
        x, h, m = rng.normal(size=2 * d), rng.normal(size=d), rng.normal(size=d)
        got = sentinel(p, tensor(x), tensor(h), tensor(m)).data
        pre = p.sent_wx.data @ x + p.sent_wh.data @ h
        want = (1.0 / (1.0 + np.exp(-pre))) * np.tanh(m)
        np.testing.assert_allclose(got, want, rtol=1e-12)


class TestAttend:
    def test_uniform_when_logits_equal_and_bias_one(self, micro):
        sp = micro.speaker
        sp.params.att_wh.data = np.zeros_like(sp.params.att_wh.data)  # z == 0
        ctx = sp.context(micro.any_parts())
        d = sp.cfg.d
        rng = np.random.default_rng(0)
        s_t, h_t = tensor(rng.normal(size=d)), tensor(rng.normal(size=d))
        alpha, _ = attend_with_bias_array(sp.params, ctx, s_t, h_t, np.ones(sp.cfg.k))
        n = sp.cfg.k + sp.cfg.l + 1
        np.testing.assert_allclose(alpha.data, np.full(n, 1.0 / n), atol=1e-12)

    def test_distribution_on_random_inputs(self, micro):
        sp = micro.speaker
        rng = np.random.default_rng(1)
        ctx = sp.context(micro.any_parts())
        for _ in range(50):
            s_t = tensor(rng.normal(size=8))
            h_t = tensor(rng.normal(size=8))
            alpha, c_t = attend(sp.params, ctx, s_t, h_t)
            assert (alpha.data >= 0).all()
            assert abs(alpha.data.sum() - 1.0) <= 1e-12
            assert c_t.data.shape == (8,)

    def test_one_hot_bias_selects_column(self, micro):
        # -inf bias on all but one slot turns attention into column selection
        sp = micro.speaker
        ctx = sp.context(micro.any_parts())
        rng = np.random.default_rng(2)
        raw = ops.concat(
            [ctx.vg_raw, ctx.vl_raw, ops.reshape(tensor(rng.normal(size=8)), (8, 1))], axis=1
        )
        n = raw.data.shape[1]
        for j in (0, 3, n - 1):
            bias = np.full(n, -np.inf)
            bias[j] = 0.0
            alpha = ops.softmax_biased(tensor(rng.normal(size=n)), bias)
            c_t = ops.matmul(raw, alpha)
            np.testing.assert_allclose(c_t.data, raw.data[:, j], atol=1e-12)

    def test_scaling_bias_increases_global_mass(self, micro):
        # multiplying G by a constant > 1 shifts only global logits up
        sp = micro.speaker
        ctx = sp.context(micro.any_parts())
        rng = np.random.default_rng(3)
        k = sp.cfg.k
        for _ in range(20):
            s_t, h_t = tensor(rng.normal(size=8)), tensor(rng.normal(size=8))
            g = rng.uniform(0.05, 1.0, size=k)
            a1, _ = attend_with_bias_array(sp.params, ctx, s_t, h_t, g)
            a2, _ = attend_with_bias_array(sp.params, ctx, s_t, h_t, 2.0 * g)
            assert a2.data[:k].sum() > a1.data[:k].sum()

    def test_vanishing_bias_kills_far_global_mass(self, micro):
        sp = micro.speaker
        sp.params.sigma_b.data = np.asarray(0.01)
        parts = micro.any_parts()
        ctx = sp.context(parts)
        rng = np.random.default_rng(4)
        far = parts.d2_global > 0.05
        assert far.any()
        for _ in range(10):
            alpha, _ = attend(sp.params, ctx, tensor(rng.normal(size=8)), tensor(rng.normal(size=8)))
            assert alpha.data[: sp.cfg.k][far].sum() < 1e-6


class TestWordDist:
    def test_zero_output_map_gives_uniform(self, micro):
        sp = micro.speaker
        sp.params.out_wp.data = np.zeros_like(sp.params.out_wp.data)
        sp.params.out_bp.data = np.zeros_like(sp.params.out_bp.data)
        p = word_dist(sp.params, tensor(np.ones(8)), tensor(np.ones(8)))
        np.testing.assert_allclose(p.data, np.full(12, 1 / 12), atol=1e-15)

    def test_sums_to_one(self, micro):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = word_dist(micro.speaker.params, tensor(rng.normal(size=8)), tensor(rng.normal(size=8)))
            assert abs(p.data.sum() - 1.0) <= 1e-12

    def test_argmax_invariant_to_bias_shift(self, micro):
        sp = micro.speaker
        rng = np.random.default_rng(6)
        c, h = tensor(rng.normal(size=8)), tensor(rng.normal(size=8))
        before = int(np.argmax(word_dist(sp.params, c, h).data))
        sp.params.out_bp.data = sp.params.out_bp.data + 3.7
        after = int(np.argmax(word_dist(sp.params, c, h).data))
        assert before == after


class TestSentenceLogprob:
    def test_uniform_model_value(self):
        world = make_micro(seed=2)
        sp = world.speaker
        for name in ("out_wp", "out_bp"):
            t = getattr(sp.params, name)
            t.data = np.zeros_like(t.data)
        lp = sp.sentence_logprob(world.any_parts(), ["red", "blue"])  # + EOS = 3 steps
        np.testing.assert_allclose(lp, -3 * np.log(12), rtol=1e-12)

    def test_oov_maps_to_unk_not_error(self, micro):
        a = micro.speaker.sentence_logprob(micro.any_parts(), ["zzzz"])
        b = micro.speaker.sentence_logprob(micro.any_parts(), ["wwww"])
        assert a == b  # both scored as the same <unk> sequence

    def test_appending_token_decreases_prefix_logprob(self, micro):
        sp = micro.speaker
        ctx = sp.context(micro.any_parts())
        ids = [sp.vocab.id_of("red")]
        short = sp.logprob_graph(ctx, ids).item()
        long = sp.logprob_graph(ctx, ids + [sp.vocab.id_of("blue")]).item()
        assert long < short

    def test_matches_manual_step_chain(self, micro):
        # cross-check against the chain rule over per-step distributions
        sp = micro.speaker
        parts = micro.any_parts()
        ids = sp.vocab.encode(["red", "near", "tree"])
        total = 0.0
        ctx = sp.context(parts)
        h = tensor(np.zeros(8))
        c = tensor(np.zeros(8))
        prev = BOS
        for tok in ids:
            lp, _, h, c = sp._step(ctx, prev, h, c)
            total += float(lp.data[tok])
            prev = tok
        np.testing.assert_allclose(
            sp.logprob_graph(parts, ids).item(), total, rtol=1e-12
        )


class TestDecode:
    def test_beam_one_equals_greedy(self, micro):
        for seed in range(5):
            w = make_micro(seed=seed)
            parts = w.any_parts()
            assert w.speaker.decode(parts, "beam", beam_size=1).ids == w.speaker.decode(parts, "greedy").ids

    def test_beam_three_at_least_greedy_logprob(self):
        for seed in range(200):
            w = make_micro(seed=seed)
            parts = w.any_parts()
            g = w.speaker.decode(parts, "greedy", max_len=3)
            b = w.speaker.decode(parts, "beam", beam_size=3, max_len=3)
            assert b.logprob >= g.logprob - 1e-12, f"seed {seed}"

    def test_sample_seed_reproduces(self, micro):
        parts = micro.any_parts()
        a = micro.speaker.decode(parts, "sample", rng=11)
        b = micro.speaker.decode(parts, "sample", rng=11)
        assert a.ids == b.ids and a.logprob == b.logprob

    def test_decode_logprob_consistent_with_scoring(self, micro):
        sp = micro.speaker
        parts = micro.any_parts()
        out = sp.decode(parts, "greedy")
        ids = out.ids if out.ended_with_eos else out.ids + [EOS]
        np.testing.assert_allclose(sp.logprob_graph(parts, ids).item(), out.logprob, rtol=1e-12)

    def test_trace_masses_sum_to_one(self, micro):
        out = micro.speaker.decode(micro.any_parts(), "greedy")
        assert out.trace
        for step in out.trace:
            total = step.global_mass + step.local_mass + step.sentinel_mass
            assert abs(total - 1.0) <= 1e-12

    def test_max_len_validation(self, micro):
        with pytest.raises(ValueError):
            micro.speaker.decode(micro.any_parts(), "greedy", max_len=0)


def test_speaker_gradient_check_subset(micro):
    """Quick finite-difference check on a representative parameter subset
    (the full sweep across all losses runs in the acceptance suite)."""
    from helpers import assert_grads_close, finite_diff

    sp = micro.speaker
    parts = micro.any_parts()
    ids = sp.vocab.encode(["red", "near", "tree"])
    names = ["out_wp", "att_wh", "fuse_wm", "sigma", "sigma_b", "w_ih", "emb"]
    subset = {n: sp.params.tensors()[n] for n in names}

    def run():
        with Tape() as tape:
            loss = ops.neg(sp.logprob_graph(parts, ids))
        return loss, tape

    loss, tape = run()
    grads = backward(loss, tape, wrt=list(subset.values()))
    analytic = {n: grads[t] for n, t in subset.items()}
    numeric = finite_diff(lambda: run()[0].item(), subset)
    assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-7)


def test_forced_deterministic_model_scores_zero_logprob(micro):
    # a huge output bias on one token makes every step near-deterministic,
    # so the probability of that token sequence approaches 1
    sp = micro.speaker
    tok = micro.vocab.id_of("red")
    sp.params.out_bp.data = np.zeros_like(sp.params.out_bp.data)
    sp.params.out_bp.data[tok] = 60.0
    lp = sp.logprob_graph(micro.any_parts(), [tok, tok, tok]).item()
    assert abs(lp) < 1e-9


def test_uniform_vocab4_model_value():
    from reflab.features import target_parts
    from reflab.data import GenConfig, gen_synthetic

    ds = gen_synthetic(
        GenConfig(num_scenes=1, rows=2, cols=2, d=8, local_rows=2, local_cols=2,
                  max_objects=3, targets_per_scene=1, sentences_per_target=1, seed=0)
    )
    vocab = Vocabulary([])
    assert len(vocab) == 4
    cfg = SpeakerConfig(d=8, vocab_size=4, k=4, l=4, diff_slots=2, max_len=4)
    sp = Speaker(cfg, vocab, seed=0)
    for name in ("out_wp", "out_bp"):
        t = getattr(sp.params, name)
        t.data = np.zeros_like(t.data)
    scene = next(iter(ds.scenes.values()))
    objs = ds.objects_in_scene(scene.scene_id)
    parts = target_parts(scene, objs, objs[0], 2)
    lp = sp.sentence_logprob(parts, ["aaa", "bbb"])  # [UNK, UNK, EOS]
    np.testing.assert_allclose(lp, -3 * np.log(4), rtol=1e-12)
