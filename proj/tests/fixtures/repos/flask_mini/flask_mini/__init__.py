from .app import Flask
from .ctx import after_this_request, has_request_context
from .wrappers import Request, Response
