import os

from .data_store import DataStore


class LocalFS(DataStore):
    """
    Local file system store. The example configurations and cover files under
    conf/examples are read through it.
    """

    def read_file(self, path: str) -> str:
        with open(path, "r") as f:
            return f.read()

    def write_file(self, path: str, data: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w") as f:
            f.write(data)

    def is_file(self, path: str) -> bool:
        return os.path.isfile(path)
