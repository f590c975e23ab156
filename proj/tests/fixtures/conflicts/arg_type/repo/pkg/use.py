from .util import double, halve


def shout(word):
    return double(word)


GREETING = double("hi")
HALF = halve(10)
