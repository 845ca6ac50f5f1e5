from abc import ABC, abstractmethod


class DataStore(ABC):
    """
    Storage behind run configurations, cover files and synthetic curvature
    files on the way in, and JSON reports or selftest tables on the way out
    """

    @abstractmethod
    def read_file(self, path: str) -> str:
        """
        :param path: location of a JSON document in the store
        :return: the document text
        """

    @abstractmethod
    def write_file(self, path: str, data: str) -> None:
        """
        Writes a report, creating missing parent locations.
        """

    @abstractmethod
    def is_file(self, path: str) -> bool:
        pass
