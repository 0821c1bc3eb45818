"""Templated subject-verb-object grammar used as an offline toy corpus.

Sentences follow ``DET (ADJ) NOUN (ADV) VERB DET (ADJ) NOUN (PREP DET NOUN)`` with number
agreement between subject and verb in the present tense. The lexicon holds roughly five
hundred word forms once plurals and verb inflections are counted.
"""
import logging

from salsa.autograd import Rng
from salsa.exceptions import ConfigError

logger = logging.getLogger(__name__)

NOUNS = """
actor agent animal artist baker banker bird boat book boy brother builder camel captain cat child
citizen clerk coach cook cousin crowd dancer daughter doctor dog donkey driver duck eagle editor
engineer farmer father fox friend gardener giant girl goat guard guest hunter judge king knight lawyer
leader lion manager merchant miner monk mother neighbor nurse officer owner painter parrot pilot
player poet porter priest prince queen rabbit rider robot sailor scholar scientist servant singer
sister soldier student surgeon tailor teacher tiger tourist trader traveler uncle village visitor
waiter warrior weaver widow wizard wolf worker writer
""".split()

IRREGULAR_PLURALS = {"child": "children", "wolf": "wolves"}

ADJECTIVES = """
angry bold brave bright busy calm careful cheerful clever clumsy cold curious dark eager early fair
famous fierce friendly gentle giant glad golden grumpy happy honest huge humble hungry jolly kind
lazy little lonely loud lucky mighty modern noisy old patient polite poor proud quick quiet rapid
rich rough rude sad shy silent silly simple sleepy slow small smart soft strange strict strong
sweet tall tiny tired tough ugly wealthy weary wild wise witty young zealous
""".split()

# (base, third person singular, past)
VERBS = [
    ("admire", "admires", "admired"), ("attack", "attacks", "attacked"), ("avoid", "avoids", "avoided"),
    ("blame", "blames", "blamed"), ("call", "calls", "called"), ("carry", "carries", "carried"),
    ("catch", "catches", "caught"), ("chase", "chases", "chased"), ("choose", "chooses", "chose"),
    ("dislike", "dislikes", "disliked"), ("draw", "draws", "drew"), ("feed", "feeds", "fed"),
    ("find", "finds", "found"), ("follow", "follows", "followed"), ("forget", "forgets", "forgot"),
    ("greet", "greets", "greeted"), ("help", "helps", "helped"), ("hide", "hides", "hid"),
    ("hire", "hires", "hired"), ("hug", "hugs", "hugged"), ("ignore", "ignores", "ignored"),
    ("invite", "invites", "invited"), ("join", "joins", "joined"), ("know", "knows", "knew"),
    ("lead", "leads", "led"), ("like", "likes", "liked"), ("love", "loves", "loved"),
    ("meet", "meets", "met"), ("miss", "misses", "missed"), ("notice", "notices", "noticed"),
    ("pay", "pays", "paid"), ("praise", "praises", "praised"), ("protect", "protects", "protected"),
    ("pull", "pulls", "pulled"), ("push", "pushes", "pushed"), ("remember", "remembers", "remembered"),
    ("rescue", "rescues", "rescued"), ("see", "sees", "saw"), ("serve", "serves", "served"),
    ("teach", "teaches", "taught"), ("thank", "thanks", "thanked"), ("trust", "trusts", "trusted"),
    ("visit", "visits", "visited"), ("warn", "warns", "warned"), ("watch", "watches", "watched"),
]

ADVERBS = """
always boldly bravely calmly carefully eagerly finally gently gladly happily honestly kindly loudly
never often patiently politely proudly quickly quietly rarely rudely sadly secretly silently slowly
soon suddenly usually warmly
""".split()

PREPOSITIONS = "across after behind beside near under with without from before beyond inside".split()

DETERMINERS_SINGULAR = ["the", "a", "every", "one", "that", "this"]
DETERMINERS_PLURAL = ["the", "some", "many", "two", "those", "these"]


def lexicon() -> set[str]:
    words = set(NOUNS) | set(IRREGULAR_PLURALS.values()) | set(ADJECTIVES) | set(ADVERBS) | set(PREPOSITIONS)
    words |= {_plural(n) for n in NOUNS}
    words |= {form for forms in VERBS for form in forms}
    words |= set(DETERMINERS_SINGULAR) | set(DETERMINERS_PLURAL)
    return words


def _plural(noun: str) -> str:
    if noun in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[noun]
    if noun.endswith(("s", "x", "ch", "sh")):
        return noun + "es"
    if noun.endswith("y") and noun[-2] not in "aeiou":
        return noun[:-1] + "ies"
    return noun + "s"


def _pick(words, rng: Rng):
    return words[int(rng.integers(0, len(words)))]


def _noun_phrase(rng: Rng, p_adjective: float) -> tuple[list[str], bool]:
    plural = bool(rng.random() < 0.3)
    phrase = [_pick(DETERMINERS_PLURAL if plural else DETERMINERS_SINGULAR, rng)]
    if rng.random() < p_adjective:
        phrase.append(_pick(ADJECTIVES, rng))
    noun = _pick(NOUNS, rng)
    phrase.append(_plural(noun) if plural else noun)
    return phrase, plural


def synthesize_sentence(rng: Rng) -> str:
    subject, plural = _noun_phrase(rng, p_adjective=0.5)
    words = list(subject)
    if rng.random() < 0.25:
        words.append(_pick(ADVERBS, rng))
    base, singular, past = _pick(VERBS, rng)
    if rng.random() < 0.5:
        words.append(past)
    else:
        words.append(base if plural else singular)
    words += _noun_phrase(rng, p_adjective=0.4)[0]
    if rng.random() < 0.3:
        words.append(_pick(PREPOSITIONS, rng))
        words += _noun_phrase(rng, p_adjective=0.0)[0]
    return " ".join(words)


def synthesize_corpus(n: int, seed: int) -> list[str]:
    """``n`` grammar sentences, identical for identical ``(n, seed)``.

    :raises ConfigError:
        If ``n`` is negative.
    """
    if n < 0:
        raise ConfigError(f"number of sentences must be non-negative, got {n}")
    rng = Rng(seed)
    sentences = [synthesize_sentence(rng) for _ in range(n)]
    logger.info(f"Synthesized {n} sentences with seed {seed}")
    return sentences


__all__ = ["lexicon", "synthesize_corpus", "synthesize_sentence"]
