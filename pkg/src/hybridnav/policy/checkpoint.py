"""
Checkpoint Module

Flat binary parameter checkpoints. A file is a one-line UTF-8 JSON header
followed by the raw little-endian float64 values of every tensor in the
order the header lists them::

    {"version": "sali-ckpt-v1", "modules": {...}, "tensors": [{"name": ..., "shape": [...]}, ...]}\\n
    <float64 LE> ...

``modules`` maps a module name to the constructor spec needed to rebuild
it; tensor names are prefixed with their module name.
"""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Tuple

import numpy as np
import torch
from torch import nn

from hybridnav.exceptions import ConfigurationError, ExportError


logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 'sali-ckpt-v1'
LITTLE_ENDIAN_F64 = np.dtype('<f8')


def save_checkpoint(
    path,
    modules: Mapping[str, nn.Module],
    specs: Mapping[str, Dict[str, Any]],
    extra: Dict[str, Any] = None
) -> Path:
    """
    Write modules to a checkpoint file.

    Args:
        path: Target file.
        modules: name -> module.
        specs: name -> constructor spec stored in the header.
        extra: Optional JSON-compatible metadata stored in the header.

    Raises:
        ExportError: If the file cannot be written.
    """
    tensors = []
    chunks = []
    for module_name in sorted(modules):
        for name, tensor in modules[module_name].state_dict().items():
            values = tensor.detach().cpu().numpy().astype(LITTLE_ENDIAN_F64)
            tensors.append({'name': f"{module_name}.{name}", 'shape': list(values.shape)})
            chunks.append(values.tobytes(order='C'))
    header = {
        'version': CHECKPOINT_VERSION,
        'modules': {name: specs[name] for name in sorted(modules)},
        'tensors': tensors,
        'extra': extra or {},
    }
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'wb') as handle:
            handle.write(json.dumps(header, sort_keys=True).encode('utf-8') + b'\n')
            for chunk in chunks:
                handle.write(chunk)
    except OSError as e:
        raise ExportError(f"Cannot write checkpoint {target}: {e}", details={'path': str(target)})
    logger.info("Saved checkpoint %s (%d tensors)", target, len(tensors))
    return target


def read_checkpoint(path) -> Tuple[Dict[str, Any], Dict[str, Dict[str, torch.Tensor]]]:
    """
    Read a checkpoint into (header, module name -> state dict).

    Raises:
        ConfigurationError: If the file is missing, truncated or of another
            version.
    """
    source = Path(path)
    if not source.is_file():
        raise ConfigurationError(f"Policy checkpoint not found: {path}", details={'path': str(path)})
    raw = source.read_bytes()
    newline = raw.find(b'\n')
    try:
        header = json.loads(raw[:newline].decode('utf-8'))
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Unreadable checkpoint header in {path}: {e}", details={'path': str(path)})
    if header.get('version') != CHECKPOINT_VERSION:
        raise ConfigurationError(
            f"Unsupported checkpoint version {header.get('version')!r}.",
            details={'path': str(path), 'expected': CHECKPOINT_VERSION}
        )

    offset = newline + 1
    states: Dict[str, Dict[str, torch.Tensor]] = {}
    for entry in header['tensors']:
        shape = tuple(entry['shape'])
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * LITTLE_ENDIAN_F64.itemsize
        if end > len(raw):
            raise ConfigurationError(
                f"Checkpoint {path} is truncated at tensor {entry['name']}.",
                details={'path': str(path), 'tensor': entry['name']}
            )
        values = np.frombuffer(raw[offset:end], dtype=LITTLE_ENDIAN_F64).reshape(shape)
        module_name, name = entry['name'].split('.', 1)
        states.setdefault(module_name, {})[name] = torch.from_numpy(values.astype(np.float64))
        offset = end
    if offset != len(raw):
        raise ConfigurationError(
            f"Checkpoint {path} has {len(raw) - offset} trailing bytes.",
            details={'path': str(path)}
        )
    return header, states


def load_modules(path, builders: Mapping[str, Callable[[Dict[str, Any]], nn.Module]]) -> Dict[str, nn.Module]:
    """
    Rebuild and load every module of a checkpoint that has a builder.

    Args:
        path: Checkpoint file.
        builders: module name -> ``spec -> module`` constructor.

    Raises:
        ConfigurationError: On unreadable files or mismatched tensors.
    """
    header, states = read_checkpoint(path)
    modules = {}
    for module_name, spec in header['modules'].items():
        if module_name not in builders:
            continue
        module = builders[module_name](spec)
        try:
            module.load_state_dict(states.get(module_name, {}))
        except RuntimeError as e:
            raise ConfigurationError(
                f"Checkpoint tensors do not fit module '{module_name}': {e}",
                details={'path': str(path), 'module': module_name}
            )
        modules[module_name] = module
    return modules
