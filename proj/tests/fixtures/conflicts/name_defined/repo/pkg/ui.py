class Widget:
    def __init__(self, name):
        self.name = name


def make(kind):
    return Widget(kind)
