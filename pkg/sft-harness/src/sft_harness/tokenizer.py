"""Whitespace tokenizer with a corpus-derived vocabulary.

Deliberately minimal: splitting on whitespace guarantees the answer labels
'Y' and 'N' are single tokens, which first-token training and serving both
require.
"""

from __future__ import annotations

import json
from pathlib import Path

PAD, UNK, BOS = "<pad>", "<unk>", "<bos>"
SPECIALS = (PAD, UNK, BOS)


class LabelTokenError(ValueError):
    """An answer label does not map to exactly one known token."""


class Tokenizer:
    def __init__(self, vocab: list[str]):
        assert list(vocab[: len(SPECIALS)]) == list(SPECIALS), "vocab must start with specials"
        self.vocab = list(vocab)
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}
        self.pad_id = self._ids[PAD]
        self.unk_id = self._ids[UNK]
        self.bos_id = self._ids[BOS]

    @classmethod
    def from_texts(cls, texts: list[str], extra: tuple[str, ...] = ("Y", "N")) -> "Tokenizer":
        seen: dict[str, None] = {}
        for token in extra:
            seen[token] = None
        for text in texts:
            for token in text.split():
                seen[token] = None
        return cls(list(SPECIALS) + list(seen))

    def __len__(self) -> int:
        return len(self.vocab)

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(tok, self.unk_id) for tok in text.split()]

    def decode_token(self, token_id: int) -> str:
        return self.vocab[token_id]

    def encode_label(self, label: str) -> int:
        """Single-token id for an answer label; anything else is a hard error."""
        ids = self.encode(label)
        if len(ids) != 1 or ids[0] == self.unk_id:
            raise LabelTokenError(
                f"label {label!r} is not a single known token "
                f"(tokenized to {len(ids)} ids); first-token training requires it"
            )
        return ids[0]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.vocab, ensure_ascii=False))

    @classmethod
    def load(cls, path: str | Path) -> "Tokenizer":
        return cls(json.loads(Path(path).read_text()))
