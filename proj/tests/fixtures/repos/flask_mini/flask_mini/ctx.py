"""Request and application contexts."""
from contextvars import ContextVar
import typing as t

from .wrappers import Request


class AppContext:
    def __init__(self, app):
        self.app = app
        self.g = {}

    def push(self):
        _cv_app.set(self)

    def lookup(self, name, default=None):
        return self.g.get(name, default)


class RequestContext:
    def __init__(self, app, path, method="GET"):
        self.app = app
        self.request = Request(path, method)
        self._after_request_functions: t.List[t.Callable] = []
        self.pushed = False

    def push(self):
        self.pushed = True
        _cv_request.set(self)

    def pop(self):
        self.pushed = False

    def run_after(self, response):
        for func in self._after_request_functions:
            response = func(response)
        return response


_cv_app: ContextVar[AppContext] = ContextVar("flask.app_ctx")
_cv_request: ContextVar[RequestContext] = ContextVar("flask.request_ctx")


def after_this_request(f):
    ctx = _cv_request.get(None)
    if ctx is None:
        raise RuntimeError("after_this_request() used outside of a request.")
    ctx._after_request_functions.append(f)
    return f


def has_request_context():
    return _cv_request.get(None) is not None


def current_path():
    ctx = _cv_request.get(None)
    if ctx is None:
        return ""
    return ctx.request.path
