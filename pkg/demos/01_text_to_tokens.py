"""From raw review text to stems, POS tags and silver BIO tags."""

from opinionrec.aspects import decode_bio, encode_bio, match_terms
from opinionrec.corpus import normalize
from opinionrec.synthetic import aspect_terms
from opinionrec.tagger import load_lexicon, tag_sequence

review = "<p>The battery life isn't great, but the sound is crisp &amp; 5 stars for the price!</p>"

tokens = normalize(review)
surfaces = [t.surface for t in tokens]
stems = [t.stem for t in tokens]
tags = tag_sequence(surfaces, load_lexicon())

# aspect terms are matched on stems, longest term first
terms = [tuple(t.stem for t in normalize(a)) for a in aspect_terms()]
bio = encode_bio(len(stems), match_terms(stems, terms))

print(f"{'surface':<10} {'stem':<10} {'pos':<5} bio")
for row in zip(surfaces, stems, tags, bio):
    print(f"{row[0]:<10} {row[1]:<10} {row[2]:<5} {row[3]}")
print("spans:", decode_bio(bio, stems))
