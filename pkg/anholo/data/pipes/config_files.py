from typing import Literal

from pydantic import BaseModel, validator

try:
    import ujson as json
except ImportError:
    import json

from anholo.schemas.conf.run import RunConfig
from anholo.models.components.cech_model import bundle_from_document
from anholo.models.components.chern_model import decode_curvature
from anholo.data.store.stores import CONFIG_DATA_STORE as data_store
from anholo.utils.errors import ConfigurationError

"""
The pydantic models below provide pipelines that load run configurations,
cover files and synthetic curvature files into the application.
"""


class LocalJSONPipeline(BaseModel):

    file_path: str
    data_type: Literal["run-config", "cover", "curvature"]

    @validator("file_path")
    def must_be_valid_path(cls, v):
        if not data_store.is_file(v):
            raise ValueError(f"Invalid path to local data file {v}")
        return v

    @validator("file_path")
    def must_be_valid_table(cls, v):
        if not v.endswith(".json"):
            raise ValueError("Invalid file type, must be json")
        return v

    def document(self) -> dict:
        try:
            return json.loads(data_store.read_file(self.file_path))
        except ValueError as e:
            raise ConfigurationError(f"Unreadable JSON in {self.file_path}: {e}")

    def load(self):
        doc = self.document()
        if self.data_type == "run-config":
            return RunConfig.parse_obj(doc)
        try:
            if self.data_type == "cover":
                return bundle_from_document(doc)
            if isinstance(doc, dict) and "curvature" in doc:
                doc = doc["curvature"]
            return decode_curvature(doc)
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigurationError(
                f"Invalid {self.data_type} file {self.file_path}: {e}"
            )
