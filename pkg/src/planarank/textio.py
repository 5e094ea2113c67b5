"""Text forms for words and permutations (the CLI's I/O conventions).

Generators are written a..z in order (generator 0 is "a").  Word input
accepts a compact exponent form mirroring hand-written products: a letter or
parenthesised group may be followed by a positive integer exponent, so
"a2b" is aab and "(ab)2ba2" is ababbaa.  Output is always plain letters.
"""

from __future__ import annotations

from planarank.words import Word

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
MAX_GENERATORS = len(_ALPHABET)


def word_to_text(w: Word | tuple[int, ...]) -> str:
    letters = w.letters if isinstance(w, Word) else w
    if any(x >= MAX_GENERATORS for x in letters):
        raise ValueError("words over more than 26 generators have no text form")
    return "".join(_ALPHABET[x] for x in letters)


def parse_word(text: str) -> Word:
    """Parse a word in compact form ("abcb2", "(ab)2b") into letter indices."""
    s = text.strip()

    def parse_seq(pos: int, closer: str | None) -> tuple[list[int], int]:
        out: list[int] = []
        while pos < len(s):
            c = s[pos]
            if c == closer:
                return out, pos + 1
            if c == "(":
                grp, pos = parse_seq(pos + 1, ")")
                base = grp
            elif c in _ALPHABET:
                base = [_ALPHABET.index(c)]
                pos += 1
            else:
                raise ValueError(f"unexpected character {c!r} in word {text!r}")
            if pos < len(s) and s[pos].isdigit():
                start = pos
                while pos < len(s) and s[pos].isdigit():
                    pos += 1
                exp = int(s[start:pos])
                if exp < 1:
                    raise ValueError(f"exponent must be positive in {text!r}")
                out.extend(base * exp)
            else:
                out.extend(base)
        if closer is not None:
            raise ValueError(f"unclosed group in word {text!r}")
        return out, pos

    letters, _ = parse_seq(0, None)
    if not letters:
        raise ValueError(f"empty word: {text!r}")
    return Word(tuple(letters))


def parse_words(texts) -> list[Word]:
    return [parse_word(t) for t in texts]
