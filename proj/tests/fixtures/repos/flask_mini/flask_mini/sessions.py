class SessionMixin:
    modified = False

    def mark(self):
        self.modified = True

    def describe(self, verbose=False):
        return "session"


class SecureCookieSession(SessionMixin):
    def __init__(self, secret):
        self.secret = secret
        self.data = {}

    def describe(self, verbose=False):
        if verbose:
            return "secure cookie session"
        return "cookie"


class NullSession(SecureCookieSession):
    def describe(self, verbose=False):
        return "null"


def open_session(secret):
    if not secret:
        return NullSession("")
    return SecureCookieSession(secret)
