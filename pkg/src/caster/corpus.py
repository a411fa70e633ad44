"""SMILES tokenization and pair-corpus ingestion.

A SMILES string is treated purely as a token sequence: bracket atoms
``[...]``, the two-letter halogens ``Cl``/``Br`` and ``%nn`` ring labels
stay whole, every other character is its own token.  No valence or
aromaticity checks are performed; strings are assumed pre-canonicalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

LABELLED = "labelled"
UNLAB = "unlabelled"

# Two-letter atoms of the organic subset that must never be split.
TWO_LETTER_ATOMS = ("Cl", "Br")

# Characters allowed outside bracket expressions: atoms (upper/lower
# letters), ring digits, bonds, branches, dot, %nn labels, wildcard.
_PLAIN_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "abcdefghijklmnopqrstuvwxyz"
    "0123456789"
    "()-=#$:/\\.%*"
)
# Characters allowed inside a bracket expression, e.g. [13CH3+], [C@@H].
_BRACKET_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "abcdefghijklmnopqrstuvwxyz"
    "0123456789"
    "+-@*:"
)


class SmilesParseError(ValueError):
    """Raised when a string violates the SMILES token grammar."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CorpusFormatError(ValueError):
    """Raised when a corpus file violates its TSV schema."""


def atom_tokenize(smiles: str) -> list[str]:
    """Split a SMILES string into atom/bond tokens.

    Bracket expressions, ``Cl``/``Br`` and ``%nn`` ring labels are kept
    whole; every other character becomes a single token.  The token list
    concatenates back to the input exactly.

    Raises:
        SmilesParseError: empty input, unbalanced brackets/parentheses,
            malformed ``%`` label, or a character outside the SMILES
            alphabet.  The error names the byte offset.
    """
    if not smiles:
        raise SmilesParseError("empty SMILES string", 0)

    tokens: list[str] = []
    depth = 0
    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            j = smiles.find("]", i + 1)
            if j < 0:
                raise SmilesParseError("unbalanced '[': missing ']'", i)
            if j == i + 1:
                raise SmilesParseError("empty bracket expression", i)
            body = smiles[i + 1 : j]
            for off, c in enumerate(body, start=i + 1):
                if c == "[":
                    raise SmilesParseError("nested '[' inside bracket", off)
                if c not in _BRACKET_CHARS:
                    raise SmilesParseError(
                        f"character {c!r} not allowed inside brackets", off
                    )
            tokens.append(smiles[i : j + 1])
            i = j + 1
        elif ch == "]":
            raise SmilesParseError("']' without matching '['", i)
        elif ch == "%":
            if i + 2 >= n or not (smiles[i + 1].isdigit() and smiles[i + 2].isdigit()):
                raise SmilesParseError("'%' must be followed by two digits", i)
            tokens.append(smiles[i : i + 3])
            i += 3
        elif smiles[i : i + 2] in TWO_LETTER_ATOMS:
            tokens.append(smiles[i : i + 2])
            i += 2
        else:
            if ch not in _PLAIN_CHARS:
                raise SmilesParseError(f"character {ch!r} outside SMILES alphabet", i)
            if ch == "(":
                depth += 1
            elif ch == ")":
                if depth == 0:
                    raise SmilesParseError("')' without matching '('", i)
                depth -= 1
            tokens.append(ch)
            i += 1
    if depth != 0:
        raise SmilesParseError("unbalanced '(': missing ')'", n - 1)
    return tokens


@dataclass(frozen=True)
class PairExample:
    """A compound pair with an optional binary interaction label."""

    left: str
    right: str
    label: int | None = None

    def key(self) -> tuple[str, str]:
        """Order-independent identity of the pair."""
        return (self.left, self.right) if self.left <= self.right else (self.right, self.left)


@dataclass
class PairCorpus:
    """A list of pair examples, all labelled or all unlabelled."""

    examples: list[PairExample]
    kind: str  # LABELLED or UNLAB

    def __post_init__(self):
        if self.kind not in (LABELLED, UNLAB):
            raise ValueError(f"unknown corpus kind {self.kind!r}")
        seen = set()
        for ex in self.examples:
            if self.kind == LABELLED and ex.label not in (0, 1):
                raise ValueError(f"labelled corpus requires label in {{0,1}}, got {ex.label!r}")
            if self.kind == UNLAB and ex.label is not None:
                raise ValueError("unlabelled corpus must not carry labels")
            k = ex.key()
            if k in seen:
                raise ValueError(f"duplicate unordered pair {k}")
            seen.add(k)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def drugs(self) -> list[str]:
        """Sorted unique compound strings across both pair slots."""
        return sorted({s for ex in self.examples for s in (ex.left, ex.right)})

    def labels(self) -> list[int]:
        if self.kind != LABELLED:
            raise ValueError("unlabelled corpus has no labels")
        return [ex.label for ex in self.examples]


def load_pair_corpus(path, kind: str) -> PairCorpus:
    """Load a pair corpus from a TSV file with a header row.

    Labelled schema is ``smiles_1<TAB>smiles_2<TAB>label`` with label in
    {0,1}; unlabelled is ``smiles_1<TAB>smiles_2``.  Extra columns in an
    unlabelled file are ignored with a warning.  Rows whose SMILES do not
    tokenize are skipped and counted.  Duplicate unordered pairs are
    rejected.
    """
    if kind not in (LABELLED, UNLAB):
        raise ValueError(f"unknown corpus kind {kind!r}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorpusFormatError(f"{path}: empty file, header row required")

    header = lines[0].split("\t")
    if len(header) < 2 or header[0] != "smiles_1" or header[1] != "smiles_2":
        raise CorpusFormatError(
            f"{path}: line 1: header must start with smiles_1<TAB>smiles_2, got {lines[0]!r}"
        )
    if kind == LABELLED:
        if len(header) < 3 or header[2] != "label":
            raise CorpusFormatError(f"{path}: line 1: labelled corpus needs a label column")
        ncols = 3
    else:
        if len(header) > 2:
            log.warning(
                "%s: unlabelled corpus has extra columns %s; they are ignored",
                path, header[2:],
            )
        ncols = 2

    examples: list[PairExample] = []
    seen: dict[tuple[str, str], int] = {}
    skipped = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) < ncols:
            raise CorpusFormatError(f"{path}: line {lineno}: expected {ncols} columns, got {len(fields)}")
        left, right = fields[0], fields[1]
        label = None
        if kind == LABELLED:
            if fields[2] not in ("0", "1"):
                raise CorpusFormatError(f"{path}: line {lineno}: label must be 0 or 1, got {fields[2]!r}")
            label = int(fields[2])
        try:
            atom_tokenize(left)
            atom_tokenize(right)
        except SmilesParseError as err:
            log.debug("%s: line %d skipped: %s", path, lineno, err)
            skipped += 1
            continue
        ex = PairExample(left, right, label)
        key = ex.key()
        if key in seen:
            raise CorpusFormatError(
                f"{path}: line {lineno}: duplicate unordered pair {key} (first at line {seen[key]})"
            )
        seen[key] = lineno
        examples.append(ex)

    if skipped:
        log.warning("%s: skipped %d rows with unparseable SMILES", path, skipped)
    log.info("%s: loaded %d %s pairs", path, len(examples), kind)
    return PairCorpus(examples, kind)


def write_pair_corpus(path, corpus: PairCorpus) -> None:
    """Write a pair corpus back to its TSV schema."""
    with open(path, "w", encoding="utf-8") as fh:
        if corpus.kind == LABELLED:
            fh.write("smiles_1\tsmiles_2\tlabel\n")
            for ex in corpus:
                fh.write(f"{ex.left}\t{ex.right}\t{ex.label}\n")
        else:
            fh.write("smiles_1\tsmiles_2\n")
            for ex in corpus:
                fh.write(f"{ex.left}\t{ex.right}\n")


def load_smiles_corpus(path) -> list[str]:
    """Load a single-compound corpus: one SMILES per line, no header.

    Unparseable lines are skipped with a logged count.
    """
    out: list[str] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            try:
                atom_tokenize(s)
            except SmilesParseError:
                skipped += 1
                continue
            out.append(s)
    if skipped:
        log.warning("%s: skipped %d unparseable SMILES", path, skipped)
    log.info("%s: loaded %d compounds", path, len(out))
    return out


def sample_negative_pairs(
    positives: PairCorpus,
    count: int,
    seed: int,
    drugs: list[str] | None = None,
) -> PairCorpus:
    """Sample non-interacting pairs from the complement of the positive set.

    Draws `count` unordered pairs uniformly without replacement from
    (drugs x drugs) minus the positive pairs minus self-pairs, labelled 0.
    `drugs` defaults to the compounds occurring in `positives`.
    Deterministic given `seed`.
    """
    if positives.kind != LABELLED or any(ex.label != 1 for ex in positives):
        raise ValueError("positives must be a labelled corpus with all labels = 1")
    universe = sorted(set(drugs)) if drugs is not None else positives.drugs()
    pos_keys = {ex.key() for ex in positives}
    complement = [
        (a, b)
        for i, a in enumerate(universe)
        for b in universe[i + 1 :]
        if (a, b) not in pos_keys
    ]
    if count > len(complement):
        raise ValueError(
            f"requested {count} negative pairs but the complement set has only {len(complement)}"
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(complement), size=count, replace=False)
    examples = [PairExample(*complement[i], label=0) for i in sorted(idx)]
    return PairCorpus(examples, LABELLED)
