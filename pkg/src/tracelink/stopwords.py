"""Fixed English stop-word list applied before stemming.

A SMART-style list of high-frequency function words. Matching happens on the
lowercase, alphabetic-only tokens produced by the splitter.
"""

STOP_WORDS = frozenset("""
a about above after again against all am an and any are as at
be because been before being below between both but by
can cannot could did do does doing down during
each few for from further had has have having he her here hers herself
him himself his how i if in into is it its itself just
me more most my myself no nor not now of off on once only or other
our ours ourselves out over own same she should so some such
than that the their theirs them themselves then there these they this
those through to too under until up very was we were what when where
which while who whom why will with would you your yours yourself
yourselves
also among become becomes becoming done else ever every
however indeed let like made make makes many may might much must never
often one onto per rather said say says see seem seemed seeming seems
shall since still take taken than though thus upon us use used uses
using via well went whether without yet
""".split())
