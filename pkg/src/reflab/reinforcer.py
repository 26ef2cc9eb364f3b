"""Reinforcer: scores how well a sentence matches a target object.

Sentence encoder (embedding + LSTM + attention over step hidden states)
and an MLP over the concatenated sentence/target features producing one
logit. The sigmoid probability doubles as the policy-gradient reward; the
raw logit feeds the ranking hinge. Pretraining is paired/unpaired logistic
regression; rank fine-tuning is a margin loss on logits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import features as F
from .features import TargetParts
from .grad import Tensor
from .grad import engine as ops
from .speaker import Vocabulary


@dataclass
class ReinforcerConfig:
    d: int
    vocab_size: int
    diff_slots: int = 5
    sigma_init: float = 0.25

    @property
    def fuse_cols(self) -> int:
        return 3 * self.d + 5 + 5 * self.diff_slots

    @property
    def mlp_hidden(self) -> int:
        return 2 * self.d


@dataclass
class MatchScore:
    logit: float
    probability: float


def _uniform(rng, rows, cols=None):
    fan_in = cols if cols is not None else rows
    s = 1.0 / np.sqrt(fan_in)
    size = (rows, cols) if cols is not None else (rows,)
    return rng.uniform(-s, s, size=size)


class ReinforcerParams:
    def __init__(self, cfg: ReinforcerConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        d, V, hid = cfg.d, cfg.vocab_size, cfg.mlp_hidden
        t = ops.tensor
        self.emb = t(rng.normal(scale=0.1, size=(V, d)), "r_emb")
        self.w_ih = t(_uniform(rng, 4 * d, d), "r_w_ih")
        self.w_hh = t(_uniform(rng, 4 * d, d), "r_w_hh")
        b = np.zeros(4 * d)
        b[d : 2 * d] = 1.0
        self.b_lstm = t(b, "r_b_lstm")
        self.att_proj = t(_uniform(rng, d, d), "r_att_proj")
        self.att_vec = t(_uniform(rng, d), "r_att_vec")
        self.fuse_wm = t(_uniform(rng, d, cfg.fuse_cols), "r_fuse_wm")
        self.sigma = t(cfg.sigma_init, "r_sigma")
        self.mlp_w1 = t(_uniform(rng, hid, 2 * d), "r_mlp_w1")
        self.mlp_b1 = t(np.zeros(hid), "r_mlp_b1")
        self.mlp_w2 = t(_uniform(rng, hid), "r_mlp_w2")
        self.mlp_b2 = t(0.0, "r_mlp_b2")

    def tensors(self) -> dict[str, Tensor]:
        return {
            name: getattr(self, name)
            for name in (
                "emb",
                "w_ih",
                "w_hh",
                "b_lstm",
                "att_proj",
                "att_vec",
                "fuse_wm",
                "sigma",
                "mlp_w1",
                "mlp_b1",
                "mlp_w2",
                "mlp_b2",
            )
        }


class Reinforcer:
    def __init__(self, cfg: ReinforcerConfig, vocab: Vocabulary, seed: int = 0):
        if len(vocab) != cfg.vocab_size:
            raise ValueError(f"vocab size {len(vocab)} != config {cfg.vocab_size}")
        self.cfg = cfg
        self.vocab = vocab
        self.params = ReinforcerParams(cfg, seed)

    # -- sentence side -------------------------------------------------------

    def encode_sentence_graph(self, ids: Sequence[int]) -> tuple[Tensor, Tensor]:
        """(sentence vector, attention weights over steps)."""
        if not len(ids):
            raise ValueError("cannot encode an empty sentence")
        p = self.params
        d = self.cfg.d
        h = ops.tensor(np.zeros(d))
        c = ops.tensor(np.zeros(d))
        hiddens = []
        scores = []
        for tok in ids:
            x = ops.embedding(p.emb, int(tok))
            pre = ops.add(ops.add(ops.matmul(p.w_ih, x), ops.matmul(p.w_hh, h)), p.b_lstm)
            hc = ops.lstm_gates(pre, c)
            h, c = ops.row(hc, 0), ops.row(hc, 1)
            hiddens.append(h)
            scores.append(ops.matmul(p.att_vec, ops.tanh(ops.matmul(p.att_proj, h))))
        weight_logits = (
            ops.concat([ops.reshape(s, (1,)) for s in scores], axis=0)
            if len(scores) > 1
            else ops.reshape(scores[0], (1,))
        )
        weights = ops.softmax(weight_logits)
        stacked = ops.stack_cols(hiddens)  # (d, T)
        return ops.matmul(stacked, weights), weights

    def encode_sentence(self, tokens: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        vec, w = self.encode_sentence_graph(self.vocab.encode(tokens, add_eos=True))
        return vec.data, w.data

    # -- target side ---------------------------------------------------------

    def target_vec(self, parts: TargetParts) -> Tensor:
        return F.assemble_graph(parts, self.params.fuse_wm, self.params.sigma)

    # -- scoring -------------------------------------------------------------

    def logit_graph(self, target: Tensor | TargetParts, ids: Sequence[int]) -> Tensor:
        p = self.params
        v_t = target if isinstance(target, Tensor) else self.target_vec(target)
        sent, _ = self.encode_sentence_graph(ids)
        cat = ops.concat([sent, v_t], axis=0)
        hidden = ops.tanh(ops.add(ops.matmul(p.mlp_w1, cat), p.mlp_b1))
        return ops.add(ops.matmul(p.mlp_w2, hidden), p.mlp_b2)

    def score(self, parts: TargetParts, tokens: Sequence[str]) -> MatchScore:
        logit = self.logit_graph(parts, self.vocab.encode(tokens, add_eos=True)).item()
        return MatchScore(logit=logit, probability=_sigmoid(logit))

    def reward(self, parts: TargetParts, ids: Sequence[int]) -> float:
        """Bounded reward in (0, 1) for policy-gradient training."""
        return _sigmoid(self.logit_graph(parts, ids).item())

    # -- losses --------------------------------------------------------------

    def pretrain_loss_graph(self, batch: Sequence[tuple[TargetParts, Sequence[int], bool]]) -> Tensor:
        """Binary cross-entropy over (target, sentence, paired?) examples."""
        labels = {bool(lbl) for _, _, lbl in batch}
        if len(labels) < 2:
            raise ValueError("pretraining batch must contain paired and unpaired examples")
        terms = []
        for parts, ids, paired in batch:
            logit = self.logit_graph(parts, ids)
            # softplus(x) - y*x == -log sigma(x) / -log(1 - sigma(x))
            term = ops.softplus(logit)
            if paired:
                term = ops.sub(term, logit)
            terms.append(term)
        return ops.div(ops.add_n(terms), float(len(terms)))

    def rank_loss_graph(
        self,
        target: Tensor | TargetParts,
        ids_better: Sequence[int],
        ids_worse: Sequence[int],
        margin: float,
        weight: float,
    ) -> Tensor:
        """weight * max(0, margin + logit(worse) - logit(better))."""
        v_t = target if isinstance(target, Tensor) else self.target_vec(target)
        lo_p = self.logit_graph(v_t, ids_better)
        lo_q = self.logit_graph(v_t, ids_worse)
        return ops.mul(ops.relu(ops.add(ops.sub(lo_q, lo_p), margin)), weight)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)
