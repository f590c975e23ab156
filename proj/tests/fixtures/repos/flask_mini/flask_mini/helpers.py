import os

from .wrappers import Response

DEBUG_ENV = "FLASK_DEBUG"


def get_debug_flag():
    val = os.environ.get(DEBUG_ENV)
    if not val:
        return False
    return val.lower() not in ("0", "false", "no")


def make_response(body, status=200):
    return Response(body, status)


def join_url(base, path):
    return base.rstrip("/") + "/" + path.lstrip("/")
