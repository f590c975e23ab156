def double(x):
    return x * 2


def halve(n):
    return n // 2
