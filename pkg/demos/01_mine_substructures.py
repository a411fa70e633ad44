"""Mine frequent substructures from a SMILES corpus.

Walks through the first stage of the pipeline: atom-level tokenization,
iterative pair merging, and the frequent-substructure vocabulary.  The
corpus is synthetic, with a nitrate-like group O=[N+]([O-]) planted in
about half the compounds; watch it reassemble from six atom tokens into
a single mined substructure.

Run:  python demos/01_mine_substructures.py
"""

from caster.corpus import atom_tokenize
from caster.spm import Vocabulary, mine_vocabulary, segment
from caster.synthetic import DEFAULT_MOTIF, compound_pool

pool = compound_pool(n=300, seed=0)
print(f"corpus: {len(pool)} synthetic compounds, e.g.")
for s in pool[:4]:
    print(f"  {s}")

print(f"\natom tokenization keeps bracket atoms and Cl/Br whole:")
example = next(s for s in pool if DEFAULT_MOTIF in s)
print(f"  {example}")
print(f"  -> {atom_tokenize(example)}")

vocab = mine_vocabulary([atom_tokenize(s) for s in pool], eta=50)
print(f"\nmined with frequency threshold 50: k={vocab.k} substructures, "
      f"{len(vocab.merges)} merges")
print("merge order (left + right -> merged, count at merge time):")
for rule in vocab.merges:
    print(f"  {rule.rank:2d}: {rule.left!r} + {rule.right!r} -> {rule.merged!r}  ({rule.frequency_at_merge})")

print("\ntop substructures by final corpus frequency:")
for token, freq in vocab.substructures[:10]:
    print(f"  {freq:5d}  {token}")

assert vocab.index_of(DEFAULT_MOTIF) is not None
print(f"\nthe planted nitrate-like group {DEFAULT_MOTIF!r} survives as one substructure")

print("\nsegmenting an unseen string with the learned merges:")
unseen = "CC" + DEFAULT_MOTIF + "SCl"
print(f"  {unseen} -> {segment(atom_tokenize(unseen), vocab)}")

vocab.save("/tmp/demo_vocab.txt")
reloaded = Vocabulary.load("/tmp/demo_vocab.txt")
assert segment(atom_tokenize(unseen), reloaded) == segment(atom_tokenize(unseen), vocab)
print("\nvocabulary saved to /tmp/demo_vocab.txt and reloaded; segmentation identical")
print(f"content hash: {vocab.content_hash()[:16]}... (checkpoints are pinned to this)")
