"""
Run Metadata Serializer Module

Reads and writes RunMetadata as YAML (the default ``run_metadata.yaml``)
or JSON.
"""

import json
from pathlib import Path
from typing import Optional

import yaml

from hybridnav.exceptions import ExportError
from hybridnav.metadata.models import RunMetadata


METADATA_FILENAME = 'run_metadata.yaml'


class MetadataSerializer:
    """
    Serializer for run metadata.

    Example:
        >>> serializer = MetadataSerializer()
        >>> serializer.to_yaml(metadata, "runs/eval/run_metadata.yaml")
        >>> loaded = serializer.from_yaml("runs/eval/run_metadata.yaml")
    """

    def __init__(self, format: str = 'yaml'):
        self.format = format.lower()
        if self.format not in ('json', 'yaml'):
            raise ValueError(f"Unsupported format: {format}. Supported formats: 'json', 'yaml'")

    def _write(self, text: str, filepath) -> None:
        try:
            Path(filepath).parent.mkdir(parents=True, exist_ok=True)
            Path(filepath).write_text(text, encoding='utf-8')
        except OSError as e:
            raise ExportError(f"Failed to write metadata to {filepath}: {e}",
                              details={'path': str(filepath)})

    def to_json(self, metadata: RunMetadata, filepath=None) -> Optional[str]:
        text = json.dumps(metadata.to_dict(), indent=2, ensure_ascii=False)
        if filepath is None:
            return text
        self._write(text, filepath)
        return None

    def to_yaml(self, metadata: RunMetadata, filepath=None) -> Optional[str]:
        text = yaml.safe_dump(metadata.to_dict(), sort_keys=False, allow_unicode=True)
        if filepath is None:
            return text
        self._write(text, filepath)
        return None

    def _read(self, source) -> str:
        path = Path(source)
        try:
            if path.is_file():
                return path.read_text(encoding='utf-8')
        except (OSError, ValueError):
            pass
        return str(source)

    def from_json(self, source) -> RunMetadata:
        """
        Load metadata from a JSON file or string.

        Raises:
            ValueError: If the JSON is invalid or fields are missing.
        """
        try:
            data = json.loads(self._read(source))
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON: {e}")
        return RunMetadata.from_dict(data)

    def from_yaml(self, source) -> RunMetadata:
        """
        Load metadata from a YAML file or string.

        Raises:
            ValueError: If the YAML is invalid or fields are missing.
        """
        try:
            data = yaml.safe_load(self._read(source))
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML: {e}")
        if not isinstance(data, dict):
            raise ValueError("Metadata must be a mapping")
        return RunMetadata.from_dict(data)

    def serialize(self, metadata: RunMetadata, filepath=None) -> Optional[str]:
        """Serialize in the configured format."""
        if self.format == 'json':
            return self.to_json(metadata, filepath)
        return self.to_yaml(metadata, filepath)

    def deserialize(self, source) -> RunMetadata:
        if self.format == 'json':
            return self.from_json(source)
        return self.from_yaml(source)


def write_run_metadata(metadata: RunMetadata, output_dir) -> Path:
    """Write ``run_metadata.yaml`` into a run directory."""
    path = Path(output_dir) / METADATA_FILENAME
    MetadataSerializer('yaml').to_yaml(metadata, path)
    return path
