import sys

from .evaluator import Evaluator
from .parser import ParseError, parse
from .printer import show

PROMPT = "> "
history = []


def evaluate(source, env=None):
    tree = parse(source)
    return tree.accept(Evaluator(env))


def describe(source):
    try:
        return show(parse(source))
    except ParseError as exc:
        return "error: " + str(exc)


def main(argv):
    for arg in argv:
        history.append(arg)
        print(describe(arg), "=", evaluate(arg))
    return len(history)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
