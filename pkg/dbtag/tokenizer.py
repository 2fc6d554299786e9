"""
Word-level tokenization of natural-language questions with character offsets.

Whitespace separates chunks; leading and trailing characters of a chunk
that are neither letters nor digits become single-character tokens, while
interior punctuation ("singer's", "top-10") stays inside the word.
"""

import re
from typing import List

from models import NlqDoc, Token

_CHUNK = re.compile(r"\S+")


def _split_chunk(chunk: str, offset: int) -> List[Token]:
    head = 0
    tail = len(chunk)
    while head < tail and not chunk[head].isalnum():
        head += 1
    while tail > head and not chunk[tail - 1].isalnum():
        tail -= 1

    tokens = [Token(text=chunk[i], char_start=offset + i, char_end=offset + i + 1) for i in range(head)]
    if head < tail:
        tokens.append(Token(text=chunk[head:tail], char_start=offset + head, char_end=offset + tail))
    tokens.extend(
        Token(text=chunk[i], char_start=offset + i, char_end=offset + i + 1)
        for i in range(max(head, tail), len(chunk))
    )
    return tokens


def tokenize(text: str) -> NlqDoc:
    tokens = []
    for match in _CHUNK.finditer(text):
        tokens.extend(_split_chunk(match.group(), match.start()))
    return NlqDoc(raw=text, tokens=tuple(tokens))


def reconstruct(doc: NlqDoc) -> str:
    """Rebuild the raw text from tokens and the original inter-token gaps."""
    pieces = []
    position = 0
    for token in doc.tokens:
        pieces.append(doc.raw[position:token.char_start])
        pieces.append(token.text)
        position = token.char_end
    pieces.append(doc.raw[position:])
    return "".join(pieces)
