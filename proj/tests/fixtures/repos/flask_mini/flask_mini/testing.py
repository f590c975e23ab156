from .app import Flask


class FlaskClient:
    def __init__(self, app):
        self.app = app
        self.history = []

    def get(self, endpoint, path="/"):
        response = self.app.dispatch(endpoint, path)
        self.history.append(path)
        return response

    def last_path(self):
        if not self.history:
            return None
        return self.history[-1]


def make_client(name):
    return FlaskClient(Flask(name))
