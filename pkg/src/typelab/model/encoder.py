"""Two recurrent encoders plus a dense projection into the metric space."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import torch
from torch import nn

from .samples import IDENT_LEN, CTX_LEN, UNK_ID

__all__ = ["EncoderParams", "TypeEncoder", "triplet_loss"]


@dataclass
class EncoderParams:
    embed_dim: int = 100
    ident_hidden: int = 128
    ctx_hidden: int = 128
    dense_dim: int = 256
    hint_dim: int = 0
    margin: float = 2.0
    ident_len: int = IDENT_LEN
    ctx_len: int = CTX_LEN

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class TypeEncoder(nn.Module):
    """Identifier LSTM + context LSTM, concatenated with visible hints.

    The token table is frozen (static embedding); out-of-vocabulary tokens
    share one learned unknown vector so the input stays total while the
    information loss stays explicit.
    """

    def __init__(self, params: EncoderParams, embedding: np.ndarray, seed: int = 0):
        super().__init__()
        if embedding.ndim != 2 or embedding.shape[1] != params.embed_dim:
            raise ValueError("embedding matrix shape does not match embed_dim")
        self.params = params
        torch.manual_seed(seed)

        table = np.zeros((embedding.shape[0] + 2, params.embed_dim), dtype=np.float64)
        table[2:] = embedding
        self.register_buffer("table", torch.from_numpy(table).float())
        self.unk = nn.Parameter(torch.randn(params.embed_dim) * 0.01)

        self.ident_lstm = nn.LSTM(params.embed_dim, params.ident_hidden, batch_first=True)
        self.ctx_lstm = nn.LSTM(params.embed_dim, params.ctx_hidden, batch_first=True)
        self.dense = nn.Linear(
            params.ident_hidden + params.ctx_hidden + params.hint_dim,
            params.dense_dim,
        )

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        vecs = self.table[ids]
        unk_mask = (ids == UNK_ID).unsqueeze(-1).to(vecs.dtype)
        return vecs + unk_mask * self.unk

    @staticmethod
    def _last_state(out: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        idx = lengths.clamp(min=1) - 1
        return out[torch.arange(out.shape[0]), idx]

    def forward(
        self,
        ident_ids: torch.Tensor,
        ident_len: torch.Tensor,
        ctx_ids: torch.Tensor,
        ctx_len: torch.Tensor,
        hints: torch.Tensor,
    ) -> torch.Tensor:
        out_i, _ = self.ident_lstm(self._embed(ident_ids))
        out_c, _ = self.ctx_lstm(self._embed(ctx_ids))
        h_i = self._last_state(out_i, ident_len)
        h_c = self._last_state(out_c, ctx_len)
        features = torch.cat([h_i, h_c, hints.to(h_i.dtype)], dim=1)
        return self.dense(features)

    def encode_batch(self, batch) -> torch.Tensor:
        return self(batch.ident_ids, batch.ident_len, batch.ctx_ids, batch.ctx_len, batch.hints)

    @torch.no_grad()
    def encode_eval(self, batch, chunk: int = 4096) -> np.ndarray:
        """Deterministic eval-mode encoding to float64 numpy."""
        self.eval()
        outs = []
        for start in range(0, len(batch), chunk):
            idx = np.arange(start, min(start + chunk, len(batch)))
            outs.append(self.encode_batch(batch.take(idx)).double().numpy())
        self.train()
        if not outs:
            return np.zeros((0, self.params.dense_dim))
        return np.concatenate(outs, axis=0)


def triplet_loss(
    t_a: torch.Tensor, t_p: torch.Tensor, t_n: torch.Tensor, margin: float
) -> torch.Tensor:
    """max(0, m + ||a - p|| - ||a - n||) with Euclidean distances.

    Accepts single vectors or batches (last dim is the feature dim);
    returns per-row losses for batches, a scalar for single vectors.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    if not (t_a.shape == t_p.shape == t_n.shape):
        raise ValueError("triplet inputs must share one shape")
    d_pos = torch.linalg.vector_norm(t_a - t_p, dim=-1)
    d_neg = torch.linalg.vector_norm(t_a - t_n, dim=-1)
    return torch.clamp(margin + d_pos - d_neg, min=0.0)
