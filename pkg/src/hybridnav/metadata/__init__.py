"""
Run Metadata Module

Provenance records of runs and their YAML/JSON serialization.
"""

from hybridnav.metadata.models import RunKind, ExecutionMetadata, SeedMetadata, RunMetadata
from hybridnav.metadata.serializer import (
    METADATA_FILENAME,
    MetadataSerializer,
    write_run_metadata,
)

__all__ = [
    'RunKind',
    'ExecutionMetadata',
    'SeedMetadata',
    'RunMetadata',
    'METADATA_FILENAME',
    'MetadataSerializer',
    'write_run_metadata',
]
