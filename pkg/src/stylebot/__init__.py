"""stylebot: a persona style-shifting dialog engine.

Routes each utterance to an in-style or general response generator, shifts
general responses toward the style domain through a POS-tagged word graph,
ranks candidates under a bigram language model, and gates the winner on
confidence and perplexity before answering.
"""

__version__ = "0.1.0"
