"""Rule-based change captions from mask features.

The grammar is a reconstruction from published example sentences: severity
adjective + loss noun + verb, followed by the location / patch / size-variation
phrases in a seeded order. Thresholds for the severity and variation bins are
our own (documented in the bin tables below); the phrase inventory is closed.
"""

import random
from dataclasses import dataclass

from .raster import change_fraction, connected_patches, patch_statistics, \
    spatial_distribution

# severity ladder: (upper bound on change fraction, adjective); f = 0 is "no"
SEVERITY_BINS = (
    (0.01, "minimal"),
    (0.03, "slight"),
    (0.06, "minor"),
    (0.12, "modest"),
    (0.20, "moderate"),
    (0.35, "considerable"),
    (float("inf"), "extensive"),
)
SEVERITY_LADDER = ("no",) + tuple(adj for _, adj in SEVERITY_BINS)

# coefficient-of-variation ladder for patch sizes
VARIATION_BINS = (
    (0.3, "similar in size"),
    (0.7, "showing some variation in size"),
    (1.2, "displaying large variations in size"),
    (float("inf"), "highly varied in size"),
)

LOSS_NOUNS = ("forest loss", "forest degradation", "deforestation", "tree cover loss")
VERBS = ("is visible", "is detected", "is noted", "is observed")
SOFTENABLE = {"slight", "minor", "modest", "moderate", "considerable"}
LOCATION_ADVERBS = ("mainly", "largely")
LOCATION_VERBS = ("located in", "concentrated in")
LOCATION_NOUNS = ("area", "section", "region")
SCATTER_NOUNS = ("regions", "sections", "areas")

NO_CHANGE_SENTENCE = "no forest loss is detected"
NO_CHANGE_VARIANTS = (
    NO_CHANGE_SENTENCE,
    "no deforestation is observed",
    "no forest degradation is noted",
    "no tree cover loss is visible",
)


def severity_for(fraction):
    if fraction == 0:
        return "no"
    for bound, adj in SEVERITY_BINS:
        if fraction < bound:
            return adj
    return SEVERITY_BINS[-1][1]


def variation_for(cv):
    for bound, phrase in VARIATION_BINS:
        if cv < bound:
            return phrase
    return VARIATION_BINS[-1][1]


@dataclass(frozen=True)
class CaptionFeatures:
    severity_bin: str
    change_fraction: float
    patch_count: int
    size_variation_bin: str
    location: object  # SpatialDistribution


@dataclass(frozen=True)
class CaptionSet:
    human: object  # optional sentence
    generated: tuple

    def all_captions(self):
        if self.human is None:
            return list(self.generated)
        return [self.human] + list(self.generated)


def extract_features(mask):
    """Deterministic caption features from a binary mask."""
    frac = change_fraction(mask)
    patches = connected_patches(mask, 8)
    stats = patch_statistics(patches)
    loc = spatial_distribution(patches, mask.width, mask.height)
    return CaptionFeatures(
        severity_bin=severity_for(frac),
        change_fraction=frac,
        patch_count=stats.count,
        size_variation_bin=variation_for(stats.coefficient_of_variation),
        location=loc,
    )


def _count_adjective(count):
    if count == 1:
        return "a single"
    if count <= 3:
        return "a few"
    if count <= 8:
        return "several"
    return "many"


def _size_adjective(features):
    # mean patch area as a fraction of the frame, derivable from the features
    mean_frac = features.change_fraction / features.patch_count
    if mean_frac < 0.005:
        return "small"
    if mean_frac < 0.02:
        return "medium"
    return "large"


def _patch_phrase(features):
    noun = "patch" if features.patch_count == 1 else "patches"
    return "occurring in %s %s %s" % (
        _count_adjective(features.patch_count), _size_adjective(features), noun)


def _location_phrase(features, rng):
    loc = features.location
    if loc.scattered or not loc.concentrated:
        return "scattered across multiple %s" % rng.choice(SCATTER_NOUNS)
    cells = " and ".join(loc.concentrated)
    noun = rng.choice(LOCATION_NOUNS)
    if len(loc.concentrated) > 1:
        noun += "s"
    return "%s %s the %s %s" % (
        rng.choice(LOCATION_ADVERBS), rng.choice(LOCATION_VERBS), cells, noun)


def render_caption(features, seed):
    """One sentence for the features; the seed drives all lexical choices."""
    if features.patch_count == 0:
        return NO_CHANGE_SENTENCE
    rng = random.Random(seed)
    adj = features.severity_bin
    if adj in SOFTENABLE and rng.random() < 0.25:
        adj = "some " + adj
    head = "%s %s %s" % (adj, rng.choice(LOSS_NOUNS), rng.choice(VERBS))
    tail = [
        _location_phrase(features, rng),
        _patch_phrase(features),
        "which are %s" % features.size_variation_bin,
    ]
    rng.shuffle(tail)
    return " ".join([head] + tail)


def generate_caption_set(mask, human=None, seed=0):
    """Four distinct generated captions (plus the human one when given)."""
    features = extract_features(mask)
    if features.patch_count == 0:
        return CaptionSet(human, NO_CHANGE_VARIANTS)
    rng = random.Random(seed)
    out = []
    for attempt in range(32):
        sentence = render_caption(features, rng.randrange(2 ** 32))
        if sentence not in out:
            out.append(sentence)
        if len(out) == 4:
            return CaptionSet(human, tuple(out))
    raise RuntimeError("could not draw 4 distinct captions in 32 attempts")


def lexicon():
    """Every token the grammar can emit, in tokenized form (so hyphenated
    cell names appear the way a tokenizer sees them, e.g. "topleft")."""
    from .metrics import tokenize
    from .raster import CELL_NAMES
    words = set()
    phrases = list(LOSS_NOUNS) + list(VERBS) + list(LOCATION_VERBS)
    phrases += [p for _, p in VARIATION_BINS]
    phrases += list(NO_CHANGE_VARIANTS)
    phrases += ["occurring in a single few several many patch patches",
                "small medium large", "which are", "some",
                "scattered across multiple the and"]
    phrases += list(LOCATION_ADVERBS)
    phrases += list(SEVERITY_LADDER)
    phrases += list(CELL_NAMES)
    phrases += [noun + " " + noun + "s" for noun in LOCATION_NOUNS]
    for p in phrases:
        words.update(tokenize(p))
    return frozenset(words)
