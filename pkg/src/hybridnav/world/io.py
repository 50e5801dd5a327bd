"""
World File I/O

UTF-8 JSON world files. The writer puts one node and one edge per line so
that validation errors raised by the loader point at a readable line.

Format::

    {
      "format": "hybridnav-world-v1",
      "room_count": 8, "object_vocab_size": 16, "room_vocab_size": 8,
      "seed": 3,
      "object_priors": {"0": [1, 4, 9], ...},
      "nodes": [
        {"id": 0, "position": [x, y, z], "appearance": [...],
         "geometry": [...], "semantic": [...], "room_type": 2, "room_index": 0},
        ...
      ],
      "edges": [
        [0, 1, 1.234],
        ...
      ]
    }

Only ``nodes`` and ``edges`` are required. Missing vocabulary sizes and
room counts are inferred from the nodes; missing object priors are taken
as the most likely objects of each room type.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from hybridnav.exceptions import ExportError, ValidationError
from hybridnav.world.models import WorldGraph, WorldNode, check_world_invariants


logger = logging.getLogger(__name__)

WORLD_FORMAT = 'hybridnav-world-v1'
DEFAULT_PRIOR_SIZE = 3

_SEPARATOR = re.compile(r'[\s,]*')


def _element_lines(text: str, key: str, count: int) -> List[Optional[int]]:
    """1-based source line of every element of the top-level array ``key``."""
    start = text.find(f'"{key}"')
    if start < 0:
        return [None] * count
    decoder = json.JSONDecoder()
    pos = text.index('[', start) + 1
    lines: List[Optional[int]] = []
    while len(lines) < count:
        pos = _SEPARATOR.match(text, pos).end()
        lines.append(text.count('\n', 0, pos) + 1)
        _, pos = decoder.raw_decode(text, pos)
    return lines


def _inferred_priors(nodes: List[WorldNode], size: int) -> Dict[int, tuple]:
    by_type: Dict[int, List[np.ndarray]] = {}
    for node in nodes:
        by_type.setdefault(node.room_type, []).append(node.semantic)
    priors = {}
    for room_type, semantics in sorted(by_type.items()):
        mean = np.mean(semantics, axis=0)
        top = np.argsort(-mean, kind='stable')[:size]
        priors[room_type] = tuple(sorted(int(c) for c in top))
    return priors


def world_to_dict(world: WorldGraph) -> Dict[str, Any]:
    """Plain-dictionary form of a world."""
    return {
        'format': WORLD_FORMAT,
        'room_count': world.room_count,
        'object_vocab_size': world.object_vocab_size,
        'room_vocab_size': world.room_vocab_size,
        'seed': world.seed,
        'object_priors': {str(k): list(v) for k, v in sorted(world.object_priors.items())},
        'nodes': [
            {
                'id': node.id,
                'position': node.position.tolist(),
                'appearance': node.appearance.tolist(),
                'geometry': node.geometry.tolist(),
                'semantic': node.semantic.tolist(),
                'room_type': node.room_type,
                'room_index': node.room_index,
            }
            for node in world.nodes
        ],
        'edges': [[a, b, length] for a, b, length in world.edges],
    }


def save_world(world: WorldGraph, path) -> Path:
    """
    Write a world as JSON, one node and one edge per line.

    Raises:
        ExportError: If the file cannot be written.
    """
    data = world_to_dict(world)
    header = {k: v for k, v in data.items() if k not in ('nodes', 'edges')}
    head = json.dumps(header)[:-1]
    body = [head + ',', '"nodes": [']
    body.append(',\n'.join('  ' + json.dumps(node) for node in data['nodes']))
    body.append('],')
    body.append('"edges": [')
    body.append(',\n'.join('  ' + json.dumps(edge) for edge in data['edges']))
    body.append(']}')

    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text('\n'.join(body) + '\n', encoding='utf-8')
    except OSError as e:
        raise ExportError(f"Cannot write world file {target}: {e}", details={'path': str(target)})
    return target


def world_from_text(text: str) -> WorldGraph:
    """
    Parse and validate a JSON world document.

    Raises:
        ValidationError: On malformed JSON, missing fields or any violated
            world invariant; ``details['line']`` is the offending line.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Malformed world JSON: {e.msg}", details={'line': e.lineno})
    if not isinstance(data, dict) or 'nodes' not in data or 'edges' not in data:
        raise ValidationError("World file needs top-level 'nodes' and 'edges'.", details={'line': 1})

    node_lines = _element_lines(text, 'nodes', len(data['nodes']))
    edge_lines = _element_lines(text, 'edges', len(data['edges']))

    nodes = []
    for raw, line in zip(data['nodes'], node_lines):
        try:
            nodes.append(WorldNode(
                id=int(raw['id']),
                position=raw['position'],
                appearance=raw['appearance'],
                geometry=raw['geometry'],
                semantic=raw['semantic'],
                room_type=int(raw['room_type']),
                room_index=int(raw.get('room_index', raw['room_type'])),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Invalid node entry: {e!r}", details={'line': line})

    edges = []
    for raw, line in zip(data['edges'], edge_lines):
        if not isinstance(raw, list) or len(raw) != 3:
            raise ValidationError("Edge entries must be [id, id, length].", details={'line': line})
        try:
            edges.append((int(raw[0]), int(raw[1]), float(raw[2])))
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid edge entry: {e!r}", details={'line': line})

    if not nodes:
        raise ValidationError("World has no nodes.", details={'line': None})

    object_vocab_size = int(data.get('object_vocab_size', len(nodes[0].semantic)))
    room_vocab_size = int(data.get('room_vocab_size', max(n.room_type for n in nodes) + 1))
    room_count = int(data.get('room_count', len({n.room_index for n in nodes})))
    if 'object_priors' in data:
        priors = {int(k): tuple(int(c) for c in v) for k, v in data['object_priors'].items()}
    else:
        priors = _inferred_priors(nodes, min(DEFAULT_PRIOR_SIZE, object_vocab_size))

    world = WorldGraph(nodes, edges, room_count, object_vocab_size, room_vocab_size,
                       priors, data.get('seed'))
    check_world_invariants(world, edge_lines=edge_lines, node_lines=node_lines)

    unique = sorted({(a, b): length for a, b, length in world.edges}.items())
    if len(unique) != len(world.edges):
        world = WorldGraph(nodes, [(a, b, length) for (a, b), length in unique], room_count,
                           object_vocab_size, room_vocab_size, priors, data.get('seed'))
    return world


def load_world(path) -> WorldGraph:
    """
    Load and re-validate a world file.

    Raises:
        ValidationError: If the file is missing or violates an invariant.
    """
    source = Path(path)
    if not source.is_file():
        raise ValidationError(f"World file not found: {path}", details={'path': str(path), 'line': None})
    world = world_from_text(source.read_text(encoding='utf-8'))
    logger.debug("Loaded world %s with %d nodes", source, len(world.nodes))
    return world
