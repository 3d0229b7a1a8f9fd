"""Text preprocessing: tokenization and fixed-length sequence normalization.

Sentences are lowercased, split on whitespace, and stripped of punctuation
at token boundaries (interior punctuation such as apostrophes survives).
Sequences are then forced to a fixed length: long ones are truncated, short
ones are repeated cyclically from the start until the target is reached.
"""

import string

from .errors import EmptySentence

DEFAULT_TARGET_LENGTH = 28

_BOUNDARY_PUNCT = string.punctuation


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lowercase tokens.

    Punctuation is stripped only at token edges, so "GOP's" -> "gop's" but
    "futures!" -> "futures".  Tokens that are pure punctuation disappear.
    Empty input yields an empty list.
    """
    tokens = []
    for raw in text.lower().split():
        tok = raw.strip(_BOUNDARY_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens


def normalize_length(tokens: list[str], target_length: int = DEFAULT_TARGET_LENGTH) -> list[str]:
    """Return exactly ``target_length`` tokens.

    Longer inputs keep their first ``target_length`` tokens; shorter inputs
    repeat the whole sequence cyclically (abc -> abcabc...) so word order
    statistics are preserved for sequence models.

    Raises:
        EmptySentence: if ``tokens`` is empty.
        ValueError: if ``target_length`` < 1.
    """
    if target_length < 1:
        raise ValueError(f"target_length must be >= 1, got {target_length}")
    if not tokens:
        raise EmptySentence("cannot normalize an empty token list")
    if len(tokens) >= target_length:
        return list(tokens[:target_length])
    reps = -(-target_length // len(tokens))  # ceil division
    return (list(tokens) * reps)[:target_length]
