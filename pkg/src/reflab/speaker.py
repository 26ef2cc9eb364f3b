"""Context-aware speaker: embedding + LSTM with a visual sentinel,
tri-source attention over global cells / target-local cells / sentinel with
a log-Gaussian spatial bias on the global slots, and the word distribution.

Scoring is teacher-forced; decoding supports greedy, beam, and seeded
sampling. Attention traces record the per-step global/local/sentinel mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import features as F
from .features import TargetParts
from .grad import Tensor
from .grad import engine as ops

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED_TOKENS = ["<pad>", "<bos>", "<eos>", "<unk>"]


class Vocabulary:
    """Token/id bijection over content tokens plus the four reserved ids."""

    def __init__(self, tokens: Iterable[str]):
        content = sorted(set(tokens) - set(RESERVED_TOKENS))
        self._tokens = RESERVED_TOKENS + content
        self._ids = {t: i for i, t in enumerate(self._tokens)}

    @classmethod
    def from_sentences(cls, token_lists: Iterable[Sequence[str]]) -> "Vocabulary":
        seen: set[str] = set()
        for toks in token_lists:
            seen.update(toks)
        return cls(seen)

    def __len__(self) -> int:
        return len(self._tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens: Sequence[str], add_eos: bool = True) -> list[int]:
        ids = [self.id_of(t) for t in tokens]
        if add_eos and (not ids or ids[-1] != EOS):
            ids.append(EOS)
        return ids

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self._tokens[i] for i in ids if i != EOS]

    def content_tokens(self) -> list[str]:
        return self._tokens[len(RESERVED_TOKENS) :]


@dataclass
class SpeakerConfig:
    d: int  # model width; must equal the dataset feature width
    vocab_size: int
    k: int  # global cells
    l: int  # local cells
    diff_slots: int = 5
    max_len: int = 20
    sigma_init: float = 0.25

    @property
    def fuse_cols(self) -> int:
        return 3 * self.d + 5 + 5 * self.diff_slots


def _uniform(rng, rows, cols=None):
    fan_in = cols if cols is not None else rows
    s = 1.0 / np.sqrt(fan_in)
    size = (rows, cols) if cols is not None else (rows,)
    return rng.uniform(-s, s, size=size)


class SpeakerParams:
    """All trainable speaker weights, including the Gaussian widths."""

    def __init__(self, cfg: SpeakerConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        d, V = cfg.d, cfg.vocab_size
        t = ops.tensor
        self.emb = t(rng.normal(scale=0.1, size=(V, d)), "emb")
        self.w_ih = t(_uniform(rng, 4 * d, 2 * d), "w_ih")
        self.w_hh = t(_uniform(rng, 4 * d, d), "w_hh")
        b = np.zeros(4 * d)
        b[d : 2 * d] = 1.0  # forget-gate bias
        self.b_lstm = t(b, "b_lstm")
        self.sent_wx = t(_uniform(rng, d, 2 * d), "sent_wx")
        self.sent_wh = t(_uniform(rng, d, d), "sent_wh")
        self.att_wg = t(_uniform(rng, d, d), "att_wg")
        self.att_wl = t(_uniform(rng, d, d), "att_wl")
        self.att_ws = t(_uniform(rng, d, d), "att_ws")
        self.att_wh = t(_uniform(rng, d), "att_wh")
        self.att_wgh = t(_uniform(rng, d, d), "att_wgh")
        self.out_wp = t(_uniform(rng, V, d), "out_wp")
        self.out_bp = t(np.zeros(V), "out_bp")
        self.fuse_wm = t(_uniform(rng, d, cfg.fuse_cols), "fuse_wm")
        self.sigma = t(cfg.sigma_init, "sigma")
        self.sigma_b = t(cfg.sigma_init, "sigma_b")

    def tensors(self) -> dict[str, Tensor]:
        return {
            name: getattr(self, name)
            for name in (
                "emb",
                "w_ih",
                "w_hh",
                "b_lstm",
                "sent_wx",
                "sent_wh",
                "att_wg",
                "att_wl",
                "att_ws",
                "att_wh",
                "att_wgh",
                "out_wp",
                "out_bp",
                "fuse_wm",
                "sigma",
                "sigma_b",
            )
        }


@dataclass
class AttentionStep:
    """Per-step attention summary: total mass on each source."""

    global_mass: float
    local_mass: float
    sentinel_mass: float
    alpha: np.ndarray | None = None

    def as_dict(self, with_alpha: bool = False) -> dict:
        out = {
            "global": self.global_mass,
            "local": self.local_mass,
            "sentinel": self.sentinel_mass,
        }
        if with_alpha and self.alpha is not None:
            out["alpha"] = self.alpha.tolist()
        return out


@dataclass
class InstanceContext:
    """Per-target tensors reusable across decode steps and sentences."""

    v_i: Tensor  # fused target vector (d,)
    vg_raw: Tensor  # (d, k)
    vl_raw: Tensor  # (d, l)
    vg_proj: Tensor  # (d, k)
    vl_proj: Tensor  # (d, l)
    log_bias: Tensor  # (k,) log of the target-centered Gaussian cell weights


@dataclass
class Decoded:
    ids: list[int]
    tokens: list[str]
    logprob: float
    trace: list[AttentionStep] = field(default_factory=list)
    ended_with_eos: bool = True


def sentinel(params: SpeakerParams, x: Tensor, h_prev: Tensor, c_new: Tensor) -> Tensor:
    """Visual sentinel: gate on (input, previous hidden) applied to tanh(cell)."""
    gate = ops.sigmoid(
        ops.add(ops.matmul(params.sent_wx, x), ops.matmul(params.sent_wh, h_prev))
    )
    return ops.mul(gate, ops.tanh(c_new))


def attend(
    params: SpeakerParams, ctx: InstanceContext, s_t: Tensor, h_t: Tensor
) -> tuple[Tensor, Tensor]:
    """Tri-source attention; returns (alpha, context vector).

    The mixed columns are the raw [V_global; V_local; s_t]; the spatial
    bias shifts only the k global logits.
    """
    d = h_t.data.shape[0]
    k = ctx.vg_raw.data.shape[1]
    n = k + ctx.vl_raw.data.shape[1] + 1
    s_proj = ops.reshape(ops.matmul(params.att_ws, s_t), (d, 1))
    v_t = ops.concat([ctx.vg_proj, ctx.vl_proj, s_proj], axis=1)
    gh = ops.reshape(ops.matmul(params.att_wgh, h_t), (d, 1))
    z = ops.matmul(params.att_wh, ops.tanh(ops.add(v_t, gh)))  # (n,)
    z_global = ops.add(ops.slice_axis(z, 0, 0, k), ctx.log_bias)
    logits = ops.concat([z_global, ops.slice_axis(z, 0, k, n)], axis=0)
    alpha = ops.softmax(logits)
    raw = ops.concat([ctx.vg_raw, ctx.vl_raw, ops.reshape(s_t, (d, 1))], axis=1)
    return alpha, ops.matmul(raw, alpha)


def attend_with_bias_array(
    params: SpeakerParams, ctx: InstanceContext, s_t: Tensor, h_t: Tensor, g_i: np.ndarray
) -> tuple[Tensor, Tensor]:
    """`attend` variant taking raw cell weights G_i as a constant array;
    zero cells are allowed and receive exactly zero attention."""
    d = h_t.data.shape[0]
    k = ctx.vg_raw.data.shape[1]
    n = k + ctx.vl_raw.data.shape[1] + 1
    s_proj = ops.reshape(ops.matmul(params.att_ws, s_t), (d, 1))
    v_t = ops.concat([ctx.vg_proj, ctx.vl_proj, s_proj], axis=1)
    gh = ops.reshape(ops.matmul(params.att_wgh, h_t), (d, 1))
    z = ops.matmul(params.att_wh, ops.tanh(ops.add(v_t, gh)))
    with np.errstate(divide="ignore"):
        bias = np.concatenate([np.log(g_i), np.zeros(n - k)])
    alpha = ops.softmax_biased(z, bias)
    raw = ops.concat([ctx.vg_raw, ctx.vl_raw, ops.reshape(s_t, (d, 1))], axis=1)
    return alpha, ops.matmul(raw, alpha)


def word_logits(params: SpeakerParams, c_t: Tensor, h_t: Tensor) -> Tensor:
    return ops.add(ops.matmul(params.out_wp, ops.add(c_t, h_t)), params.out_bp)


def word_dist(params: SpeakerParams, c_t: Tensor, h_t: Tensor) -> Tensor:
    return ops.softmax(word_logits(params, c_t, h_t))


class Speaker:
    def __init__(self, cfg: SpeakerConfig, vocab: Vocabulary, seed: int = 0):
        if len(vocab) != cfg.vocab_size:
            raise ValueError(f"vocab size {len(vocab)} != config {cfg.vocab_size}")
        self.cfg = cfg
        self.vocab = vocab
        self.params = SpeakerParams(cfg, seed)

    # -- graph pieces ------------------------------------------------------

    def context(self, parts: TargetParts) -> InstanceContext:
        p = self.params
        vg = ops.tensor(parts.v_global)
        vl = ops.tensor(parts.v_local)
        v_i = F.assemble(
            parts.o_i,
            F.gaussian_global_graph(vg, ops.tensor(parts.d2_global), p.sigma),
            parts.l_i,
            parts.delta_o,
            parts.delta_l,
            p.fuse_wm,
        )
        log_bias = F.log_spatial_bias_graph(ops.tensor(parts.d2_global), p.sigma_b)
        return InstanceContext(
            v_i=v_i,
            vg_raw=vg,
            vl_raw=vl,
            vg_proj=ops.matmul(p.att_wg, vg),
            vl_proj=ops.matmul(p.att_wl, vl),
            log_bias=log_bias,
        )

    def _start_state(self) -> tuple[Tensor, Tensor]:
        d = self.cfg.d
        return ops.tensor(np.zeros(d)), ops.tensor(np.zeros(d))

    def _step(
        self, ctx: InstanceContext, prev_id: int, h: Tensor, c: Tensor
    ) -> tuple[Tensor, Tensor, Tensor, Tensor]:
        """One decoder step; returns (log word distribution, alpha, h, c)."""
        p = self.params
        w_emb = ops.embedding(p.emb, prev_id)
        x = ops.concat([ctx.v_i, w_emb], axis=0)
        pre = ops.add(
            ops.add(ops.matmul(p.w_ih, x), ops.matmul(p.w_hh, h)), p.b_lstm
        )
        hc = ops.lstm_gates(pre, c)
        h_new, c_new = ops.row(hc, 0), ops.row(hc, 1)
        s_t = sentinel(p, x, h, c_new)
        alpha, c_att = attend(p, ctx, s_t, h_new)
        lp = ops.log_softmax(word_logits(p, c_att, h_new))
        return lp, alpha, h_new, c_new

    def logprob_graph(self, parts_or_ctx, ids: Sequence[int]) -> Tensor:
        """Teacher-forced log P(ids | target) of exactly the given event:
        EOS-terminated ids score a completed sentence, EOS-free ids a bare
        truncated prefix."""
        ctx = (
            parts_or_ctx
            if isinstance(parts_or_ctx, InstanceContext)
            else self.context(parts_or_ctx)
        )
        h, c = self._start_state()
        prev = BOS
        terms = []
        for tok in ids:
            lp, _, h, c = self._step(ctx, prev, h, c)
            terms.append(ops.pick(lp, tok))
            prev = tok
        if not terms:
            raise ValueError("cannot score an empty id sequence")
        return ops.add_n(terms)

    # -- public scoring ----------------------------------------------------

    def sentence_logprob(self, parts: TargetParts, tokens: Sequence[str]) -> float:
        """log P(tokens | target), EOS appended when absent, OOV -> UNK."""
        ids = self.vocab.encode(tokens, add_eos=True)
        return self.logprob_graph(parts, ids).item()

    def sentence_logprob_graph(self, parts_or_ctx, tokens: Sequence[str]) -> Tensor:
        return self.logprob_graph(parts_or_ctx, self.vocab.encode(tokens, add_eos=True))

    # -- decoding ----------------------------------------------------------

    def decode(
        self,
        parts: TargetParts,
        mode: str = "greedy",
        beam_size: int = 3,
        rng: int | np.random.Generator | None = None,
        max_len: int | None = None,
        keep_alpha: bool = False,
    ) -> Decoded:
        max_len = self.cfg.max_len if max_len is None else max_len
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        if mode == "greedy":
            return self._decode_sequential(parts, max_len, None, keep_alpha)
        if mode == "sample":
            gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
            return self._decode_sequential(parts, max_len, gen, keep_alpha)
        if mode == "beam":
            return self._decode_beam(parts, max_len, beam_size)
        raise ValueError(f"unknown decode mode {mode!r}")

    def _decode_sequential(self, parts, max_len, gen, keep_alpha) -> Decoded:
        ctx = self.context(parts)
        h, c = self._start_state()
        prev = BOS
        ids: list[int] = []
        trace: list[AttentionStep] = []
        logprob = 0.0
        ended = False
        for _ in range(max_len):
            lp, alpha, h, c = self._step(ctx, prev, h, c)
            trace.append(_attention_step(alpha.data, self.cfg.k, keep_alpha))
            if gen is None:
                tok = int(np.argmax(lp.data))
            else:
                tok = int(gen.choice(len(lp.data), p=np.exp(lp.data)))
            logprob += float(lp.data[tok])
            ids.append(tok)
            prev = tok
            if tok == EOS:
                ended = True
                break
        if not ended:  # close the truncated event so scores are comparable
            lp, alpha, h, c = self._step(ctx, prev, h, c)
            logprob += float(lp.data[EOS])
        return Decoded(
            ids=ids,
            tokens=self.vocab.decode(ids),
            logprob=logprob,
            trace=trace,
            ended_with_eos=ended,
        )

    def _decode_beam(self, parts, max_len, beam_size) -> Decoded:
        if beam_size < 1:
            raise ValueError("beam size must be >= 1")
        ctx = self.context(parts)
        h0, c0 = self._start_state()
        beams = [(0.0, [], h0, c0)]  # (logprob, ids, h, c)
        done: list[tuple[float, list[int]]] = []
        for _ in range(max_len):
            candidates = []
            for lp_sum, ids, h, c in beams:
                prev = ids[-1] if ids else BOS
                lp, _, h_new, c_new = self._step(ctx, prev, h, c)
                for tok in range(len(lp.data)):
                    candidates.append(
                        (lp_sum + float(lp.data[tok]), ids + [tok], h_new, c_new)
                    )
            candidates.sort(key=lambda b: (-b[0], b[1]))
            beams = []
            for lp_sum, ids, h, c in candidates:
                if ids[-1] == EOS:
                    done.append((lp_sum, ids))
                else:
                    beams.append((lp_sum, ids, h, c))
                if len(beams) == beam_size:
                    break
            if not beams:
                break
        for lp_sum, ids, h, c in beams:  # close truncated survivors
            prev = ids[-1]
            lp, _, _, _ = self._step(ctx, prev, h, c)
            done.append((lp_sum + float(lp.data[EOS]), ids))
        done.sort(key=lambda b: (-b[0], b[1]))
        best_lp, best_ids = done[0]
        return Decoded(
            ids=best_ids,
            tokens=self.vocab.decode(best_ids),
            logprob=best_lp,
            ended_with_eos=best_ids[-1] == EOS,
        )


def _attention_step(alpha: np.ndarray, k: int, keep_alpha: bool) -> AttentionStep:
    total = float(alpha.sum())
    if abs(total - 1.0) > 1e-12 or alpha.min() < 0:
        raise AssertionError(f"attention weights invalid: sum={total!r}")
    return AttentionStep(
        global_mass=float(alpha[:k].sum()),
        local_mass=float(alpha[k:-1].sum()),
        sentinel_mass=float(alpha[-1]),
        alpha=alpha.copy() if keep_alpha else None,
    )


def trace_as_json(decoded: Decoded, with_alpha: bool = False) -> list[dict]:
    """Attention trace rows (one per generated word) for JSON export."""
    return [step.as_dict(with_alpha) for step in decoded.trace]
