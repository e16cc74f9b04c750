"""Pronouns and determiners ignored by the generic-mention rule.

The list is fixed and versioned with the package so that graph builds are
reproducible. Entries are lowercase; tokens are normalized before lookup.
"""

PERSONAL_PRONOUNS = frozenset(
    """
    i me my mine myself we us our ours ourselves you your yours yourself
    yourselves he him his himself she her hers herself it its itself they
    them their theirs themselves one oneself
    """.split()
)

DEMONSTRATIVE_PRONOUNS = frozenset("this that these those".split())

RELATIVE_INTERROGATIVE_PRONOUNS = frozenset(
    "who whom whose which what that whoever whomever whichever whatever".split()
)

INDEFINITE_PRONOUNS = frozenset(
    """
    anybody anyone anything everybody everyone everything nobody none
    nothing somebody someone something
    """.split()
)

ARTICLES = frozenset("a an the".split())

DETERMINERS = frozenset(
    """
    all another any both each either enough every few fewer less little
    many more most much neither no other own several some such various
    certain same former latter
    """.split()
)

STOPLIST = (
    PERSONAL_PRONOUNS
    | DEMONSTRATIVE_PRONOUNS
    | RELATIVE_INTERROGATIVE_PRONOUNS
    | INDEFINITE_PRONOUNS
    | ARTICLES
    | DETERMINERS
)
