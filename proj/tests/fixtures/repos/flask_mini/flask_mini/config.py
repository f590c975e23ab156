class Config(dict):
    def __init__(self, root_path, defaults=None):
        super().__init__(defaults or {})
        self.root_path = root_path

    def from_mapping(self, mapping):
        for key, value in mapping.items():
            if key.isupper():
                self[key] = value
        return True

    def get_namespace(self, namespace, lowercase=True):
        rv = {}
        for key, value in self.items():
            if not key.startswith(namespace):
                continue
            key = key[len(namespace):]
            if lowercase:
                key = key.lower()
            rv[key] = value
        return rv


DEFAULT_CONFIG = {"DEBUG": False, "TESTING": False}
