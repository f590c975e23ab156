def apply(callback, value):
    return callback(value, 1)


def add(a, b):
    return a + b


TOTAL = apply(add, 2)
