"""
Configuration Module

Dataclass configurations for every stage of the engine: world generation,
observation noise, imaginers, the agent loop, the policy network, training
and whole runs. Each configuration validates itself on construction and
round-trips through plain dictionaries so run configs can live in JSON or
YAML files next to their reports.
"""

import json
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from hybridnav.exceptions import ConfigurationError


IMAGINER_KINDS = ('oracle', 'learned', 'null')
GAMMA_MODES = ('dynamic', 'fixed')
MEMORY_TYPES = ('reality', 'imagination', 'hybrid')
ACTION_MODES = ('greedy', 'sample')


def _require_positive(name: str, value: Any) -> None:
    if not isinstance(value, (int, float)) or value <= 0:
        raise ConfigurationError(
            f"{name} must be positive (got {value}).",
            details={name: value, 'valid_range': '(0, inf)'}
        )


def _require_non_negative(name: str, value: Any) -> None:
    if not isinstance(value, (int, float)) or value < 0:
        raise ConfigurationError(
            f"{name} must be non-negative (got {value}).",
            details={name: value, 'valid_range': '[0, inf)'}
        )


def _require_choice(name: str, value: Any, choices: Tuple[str, ...]) -> None:
    if value not in choices:
        raise ConfigurationError(
            f"{name} must be one of {choices} (got '{value}').",
            details={name: value, 'choices': list(choices)}
        )


def _known_kwargs(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(
            f"Unknown keys for {cls.__name__}: {unknown}",
            details={'unknown_keys': unknown, 'known_keys': sorted(names)}
        )
    return dict(data)


@dataclass
class WorldConfig:
    """
    Configuration for procedural world generation.

    Attributes:
        rooms: Number of rooms laid out on a square-ish grid of cells.
        nodes_per_room: Viewpoints jittered inside each room cell.
        object_vocab_size: Size of the object vocabulary (semantic channel).
        room_vocab_size: Number of room types.
        appearance_dim: Dimension D of the unit-norm appearance channel.
        geometry_dim: Dimension D_g of the geometry channel.
        cell_size: Side of a room cell in meters.
        objects_per_room: Objects in each room type's generation prior.
        door_probability: Chance of an extra door between adjacent rooms
            beyond the spanning set that keeps the world connected.
        seed: Generation seed; any 64-bit value.

    Example:
        >>> config = WorldConfig(rooms=4, nodes_per_room=5, seed=7)
        >>> config.to_dict()['rooms']
        4
    """
    rooms: int = 8
    nodes_per_room: int = 6
    object_vocab_size: int = 16
    room_vocab_size: int = 8
    appearance_dim: int = 32
    geometry_dim: int = 16
    cell_size: float = 3.0
    objects_per_room: int = 3
    door_probability: float = 0.3
    seed: int = 0

    def __post_init__(self):
        """Validate configuration parameters after initialization."""
        self._validate()

    def _validate(self) -> None:
        """
        Validate configuration parameters.

        Raises:
            ConfigurationError: If any count or dimension is not positive.
        """
        for name in ('rooms', 'nodes_per_room', 'object_vocab_size',
                     'room_vocab_size', 'appearance_dim', 'geometry_dim',
                     'cell_size', 'objects_per_room'):
            _require_positive(name, getattr(self, name))
        if self.objects_per_room > self.object_vocab_size:
            raise ConfigurationError(
                "objects_per_room cannot exceed object_vocab_size.",
                details={'objects_per_room': self.objects_per_room,
                         'object_vocab_size': self.object_vocab_size}
            )
        if not 0.0 <= self.door_probability <= 1.0:
            raise ConfigurationError(
                f"door_probability must lie in [0, 1] (got {self.door_probability}).",
                details={'door_probability': self.door_probability}
            )

    @property
    def feature_dim(self) -> int:
        """Length of a concatenated (appearance, geometry, semantic) feature."""
        return self.appearance_dim + self.geometry_dim + self.object_vocab_size

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary for serialization."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'WorldConfig':
        """Create configuration from dictionary."""
        return cls(**_known_kwargs(cls, data))


@dataclass
class ObservationNoise:
    """
    Per-channel standard deviation of the Gaussian noise on neighbor stubs.

    Zero on every channel gives exact stubs.
    """
    appearance: float = 0.0
    geometry: float = 0.0
    semantic: float = 0.0

    def __post_init__(self):
        for name in ('appearance', 'geometry', 'semantic'):
            _require_non_negative(name, getattr(self, name))

    @classmethod
    def uniform(cls, std: float) -> 'ObservationNoise':
        """Same standard deviation on every channel."""
        return cls(appearance=std, geometry=std, semantic=std)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ObservationNoise':
        return cls(**_known_kwargs(cls, data))


@dataclass
class ImaginerConfig:
    """
    Selects the imaginer standing in for the generative models.

    Attributes:
        kind: 'oracle' (ground truth plus noise), 'learned' (trained
            perceptrons) or 'null' (imagines nothing).
        noise: Standard deviation sigma_im of the oracle's Gaussian noise.
        seed: Seed of the imaginer's private noise stream.
    """
    kind: str = 'oracle'
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _require_choice('imaginer.kind', self.kind, IMAGINER_KINDS)
        _require_non_negative('imaginer.noise', self.noise)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ImaginerConfig':
        return cls(**_known_kwargs(cls, data))


@dataclass
class AgentConfig:
    """
    Knobs of the navigation loop and its imagination module.

    Attributes:
        max_depth: Imagination depth bound M.
        imagination_cap: Upper bound N-bar on Imagination nodes in memory.
        history_length: Imagination history length K.
        tau: Duplicate threshold of the pruning criterion.
        position_scale: Meters that the criterion's MSE term is scaled by.
        gamma_mode: 'dynamic' (learned fusion factor) or 'fixed'.
        gamma_value: Fusion factor used when gamma_mode is 'fixed'.
        memory_type: 'reality', 'imagination' or 'hybrid' decision source.
        use_room_model: Apply room-type reweighting to imagined semantics.
        use_waypoint_model: Grow the imagination tree past depth 1.
        max_waypoints: NMS top-k per imagined node.
        nms_window: NMS window (angular bins, radial bins), odd sizes.
        max_steps: Max action steps per episode.
        action_mode: 'greedy' or 'sample'.
        temperature: Softmax temperature in 'sample' mode.
        imaginer: ImaginerConfig.
        observation_noise: ObservationNoise on neighbor stubs.
    """
    max_depth: int = 2
    imagination_cap: int = 4
    history_length: int = 2
    tau: float = 0.9
    position_scale: float = 1.0
    gamma_mode: str = 'dynamic'
    gamma_value: float = 0.5
    memory_type: str = 'hybrid'
    use_room_model: bool = True
    use_waypoint_model: bool = True
    max_waypoints: int = 4
    nms_window: Tuple[int, int] = (5, 3)
    max_steps: int = 15
    action_mode: str = 'greedy'
    temperature: float = 1.0
    imaginer: ImaginerConfig = field(default_factory=ImaginerConfig)
    observation_noise: ObservationNoise = field(default_factory=ObservationNoise)

    def __post_init__(self):
        """Validate configuration parameters after initialization."""
        if isinstance(self.imaginer, dict):
            self.imaginer = ImaginerConfig.from_dict(self.imaginer)
        if isinstance(self.observation_noise, dict):
            self.observation_noise = ObservationNoise.from_dict(self.observation_noise)
        self.nms_window = tuple(self.nms_window)
        self._validate()

    def _validate(self) -> None:
        _require_non_negative('max_depth', self.max_depth)
        _require_non_negative('imagination_cap', self.imagination_cap)
        _require_non_negative('max_steps', self.max_steps)
        _require_positive('history_length', self.history_length)
        _require_positive('position_scale', self.position_scale)
        _require_positive('max_waypoints', self.max_waypoints)
        _require_positive('temperature', self.temperature)
        _require_choice('gamma_mode', self.gamma_mode, GAMMA_MODES)
        _require_choice('memory_type', self.memory_type, MEMORY_TYPES)
        _require_choice('action_mode', self.action_mode, ACTION_MODES)
        if not 0.0 <= self.gamma_value <= 1.0:
            raise ConfigurationError(
                f"fixed gamma must lie in [0, 1] (got {self.gamma_value}).",
                details={'gamma_value': self.gamma_value, 'valid_range': '[0, 1]'}
            )
        if len(self.nms_window) != 2 or any(w < 1 or w % 2 == 0 for w in self.nms_window):
            raise ConfigurationError(
                f"nms_window must be two odd positive sizes (got {self.nms_window}).",
                details={'nms_window': list(self.nms_window)}
            )

    @property
    def imagination_enabled(self) -> bool:
        """True when the loop should build and merge imagination trees."""
        return (
            self.memory_type != 'reality'
            and self.max_depth > 0
            and self.imagination_cap > 0
            and self.imaginer.kind != 'null'
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['nms_window'] = list(self.nms_window)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AgentConfig':
        return cls(**_known_kwargs(cls, data))


@dataclass
class PolicyConfig:
    """
    Sizes of the policy network.

    Vocabulary size and node feature size are taken from the world at
    build time; everything else is fixed here.
    """
    d_model: int = 64
    n_heads: int = 4
    instruction_layers: int = 2
    graph_layers: int = 2
    ffn_multiplier: int = 4
    max_tokens: int = 64
    separate_imagination_encoder: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ('d_model', 'n_heads', 'ffn_multiplier', 'max_tokens'):
            _require_positive(name, getattr(self, name))
        _require_non_negative('instruction_layers', self.instruction_layers)
        _require_non_negative('graph_layers', self.graph_layers)
        if self.d_model % self.n_heads:
            raise ConfigurationError(
                "d_model must be divisible by n_heads.",
                details={'d_model': self.d_model, 'n_heads': self.n_heads}
            )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PolicyConfig':
        return cls(**_known_kwargs(cls, data))


@dataclass
class TrainingConfig:
    """
    Training schedule for the policy and the lite auxiliary models.

    Training worlds use seeds ``seed_start .. seed_start + worlds - 1`` and
    must not overlap the evaluation block.
    """
    worlds: int = 50
    seed_start: int = 0
    epochs: int = 5
    batch: int = 16
    lr: float = 0.01
    waypoint_epochs: int = 20
    waypoint_lr: float = 10.0
    room_epochs: int = 100
    room_lr: float = 0.5
    imaginer_epochs: int = 30
    imaginer_lr: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ('worlds', 'batch'):
            _require_positive(name, getattr(self, name))
        for name in ('epochs', 'waypoint_epochs', 'room_epochs', 'imaginer_epochs',
                     'lr', 'waypoint_lr', 'room_lr', 'imaginer_lr', 'seed_start'):
            _require_non_negative(name, getattr(self, name))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainingConfig':
        return cls(**_known_kwargs(cls, data))


@dataclass
class RunConfig:
    """
    Complete configuration of a training, evaluation or ablation run.

    Attributes:
        world: WorldConfig shared by every generated world (its seed is
            replaced per world).
        world_path: Optional JSON world file used instead of generation.
        eval_seed_start: First seed of the evaluation world block.
        eval_worlds: Number of evaluation worlds.
        categories: Instruction categories generated per evaluation world.
        episode_seed: Base seed from which per-episode seeds are derived.
        episodes: Optional cap on the number of evaluated episodes.
        agent: AgentConfig.
        policy: PolicyConfig.
        training: TrainingConfig.
        checkpoint: Path of a policy checkpoint.
        output_dir: Directory receiving reports.
        jobs: Worker processes for episode evaluation.

    Example:
        >>> config = RunConfig.from_dict({'imaginer.kind': 'oracle',
        ...                               'imaginer.noise': 0.25})
        >>> config.agent.imaginer.noise
        0.25
    """
    world: WorldConfig = field(default_factory=WorldConfig)
    world_path: Optional[str] = None
    eval_seed_start: int = 1000
    eval_worlds: int = 100
    categories: Tuple[str, ...] = ('S1', 'S2', 'S3')
    episode_seed: int = 0
    episodes: Optional[int] = None
    agent: AgentConfig = field(default_factory=AgentConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    checkpoint: Optional[str] = None
    output_dir: str = 'runs'
    jobs: int = 1

    def __post_init__(self):
        """Validate configuration parameters after initialization."""
        self.categories = tuple(self.categories)
        self._validate()

    def _validate(self) -> None:
        _require_positive('eval_worlds', self.eval_worlds)
        _require_positive('jobs', self.jobs)
        if self.episodes is not None:
            _require_positive('episodes', self.episodes)
        for category in self.categories:
            _require_choice('category', category, ('S1', 'S2', 'S3', 'plain'))
        train_end = self.training.seed_start + self.training.worlds
        eval_end = self.eval_seed_start + self.eval_worlds
        if self.training.seed_start < eval_end and self.eval_seed_start < train_end:
            raise ConfigurationError(
                "Training and evaluation world seeds overlap.",
                details={'training': [self.training.seed_start, train_end - 1],
                         'evaluation': [self.eval_seed_start, eval_end - 1]}
            )

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to a JSON-compatible dictionary."""
        return {
            'world': self.world.to_dict(),
            'world_path': self.world_path,
            'eval_seed_start': self.eval_seed_start,
            'eval_worlds': self.eval_worlds,
            'categories': list(self.categories),
            'episode_seed': self.episode_seed,
            'episodes': self.episodes,
            'agent': self.agent.to_dict(),
            'policy': self.policy.to_dict(),
            'training': self.training.to_dict(),
            'checkpoint': self.checkpoint,
            'output_dir': self.output_dir,
            'jobs': self.jobs,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """
        Create configuration from dictionary.

        Dotted keys ``imaginer.kind`` / ``imaginer.noise`` / ``imaginer.seed``
        may appear at the top level or inside ``agent``.

        Raises:
            ConfigurationError: On unknown keys or invalid values.
        """
        data = dict(data)
        agent = dict(data.pop('agent', None) or {})
        imaginer = dict(agent.pop('imaginer', None) or {})
        for source in (data, agent):
            for key in [k for k in source if k.startswith('imaginer.')]:
                imaginer[key.split('.', 1)[1]] = source.pop(key)
        if imaginer:
            agent['imaginer'] = ImaginerConfig.from_dict(imaginer)

        kwargs = _known_kwargs(cls, data)
        kwargs['agent'] = AgentConfig.from_dict(agent)
        if 'world' in kwargs:
            kwargs['world'] = WorldConfig.from_dict(kwargs['world'] or {})
        if 'policy' in kwargs:
            kwargs['policy'] = PolicyConfig.from_dict(kwargs['policy'] or {})
        if 'training' in kwargs:
            kwargs['training'] = TrainingConfig.from_dict(kwargs['training'] or {})
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> 'RunConfig':
        """
        Load a run configuration from JSON or YAML.

        Args:
            path: ``.json``, ``.yaml`` or ``.yml`` file.

        Raises:
            ConfigurationError: If the file is missing or malformed.
        """
        source = Path(path)
        if not source.is_file():
            raise ConfigurationError(
                f"Config file not found: {path}", details={'path': str(path)}
            )
        text = source.read_text(encoding='utf-8')
        try:
            if source.suffix.lower() in ('.yaml', '.yml'):
                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(
                f"Invalid config file {path}: {e}", details={'path': str(path)}
            )
        if not isinstance(data, dict):
            raise ConfigurationError(
                "Config file must contain a mapping at top level.",
                details={'path': str(path)}
            )
        return cls.from_dict(data)
