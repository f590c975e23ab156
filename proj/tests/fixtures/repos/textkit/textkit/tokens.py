NUMBER = "NUMBER"
NAME = "NAME"
OP = "OP"
END = "END"

OPERATORS = "+-*/(),"


class Token:
    def __init__(self, kind, text, pos=0):
        self.kind = kind
        self.text = text
        self.pos = pos

    def is_op(self, text):
        return self.kind == OP and self.text == text

    def __repr__(self):
        return self.kind + ":" + self.text


def tokenize(source):
    tokens = []
    i = 0
    while i < len(source):
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            start = i
            while i < len(source) and source[i].isdigit():
                i += 1
            tokens.append(Token(NUMBER, source[start:i], start))
            continue
        if ch.isalpha():
            start = i
            while i < len(source) and source[i].isalnum():
                i += 1
            tokens.append(Token(NAME, source[start:i], start))
            continue
        if ch in OPERATORS:
            tokens.append(Token(OP, ch, i))
        i += 1
    tokens.append(Token(END, "", i))
    return tokens
