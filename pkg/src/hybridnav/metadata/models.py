"""
Run Metadata Models Module

Provenance of training, evaluation and ablation runs: the configuration,
the seeds, the execution environment and wall-clock durations. Provenance
is kept apart from reports, which stay free of timestamps so identical runs
produce identical reports.
"""

import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional


class RunKind(Enum):
    """Kinds of recorded runs."""
    GEN_WORLDS = "gen-worlds"
    TRAIN = "train"
    EVAL = "eval"
    ABLATE = "ablate"
    GRADCHECK = "gradcheck"
    ROUNDTRIP = "roundtrip-waypoints"


@dataclass
class ExecutionMetadata:
    """
    Execution environment of a run.

    Attributes:
        timestamp: ISO 8601 start time.
        python_version: Python version used.
        package_version: hybridnav version.
        torch_version: torch version.
        os_info: Operating system information.
        hostname: Machine hostname.
        jobs: Worker processes.
        durations: Wall-clock seconds per named phase.
    """
    timestamp: str
    python_version: str
    package_version: str
    torch_version: str
    os_info: str
    hostname: Optional[str] = None
    jobs: int = 1
    durations: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def capture(cls, jobs: int = 1) -> 'ExecutionMetadata':
        """Environment of the current process."""
        import torch
        import hybridnav

        return cls(
            timestamp=datetime.now().isoformat(),
            python_version=f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
            package_version=getattr(hybridnav, '__version__', '0.0.0'),
            torch_version=str(torch.__version__),
            os_info=f"{platform.system()} {platform.release()}",
            hostname=platform.node(),
            jobs=jobs,
        )


@dataclass
class SeedMetadata:
    """Seed blocks of a run."""
    training_worlds: List[int] = field(default_factory=list)
    evaluation_worlds: List[int] = field(default_factory=list)
    episode_seed: int = 0
    training_seed: int = 0


@dataclass
class RunMetadata:
    """
    Complete provenance record of one run.

    Example:
        >>> metadata = RunMetadata(run_id="eval_001", kind="eval",
        ...                        config=run_config.to_dict())
        >>> metadata.execution = ExecutionMetadata.capture(jobs=4)
    """
    run_id: str
    kind: str
    config: Dict[str, Any] = field(default_factory=dict)
    seeds: Optional[SeedMetadata] = None
    execution: Optional[ExecutionMetadata] = None
    checkpoint: Optional[str] = None
    outputs: List[str] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        valid = {k.value for k in RunKind}
        if self.kind not in valid:
            raise ValueError(f"Unknown run kind '{self.kind}'; expected one of {sorted(valid)}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunMetadata':
        """
        Create metadata from a dictionary.

        Raises:
            ValueError: If run_id or kind is missing.
        """
        missing = [key for key in ('run_id', 'kind') if key not in data]
        if missing:
            raise ValueError(f"Missing required fields: {missing}")
        kwargs = dict(data)
        if kwargs.get('seeds'):
            kwargs['seeds'] = SeedMetadata(**kwargs['seeds'])
        if kwargs.get('execution'):
            kwargs['execution'] = ExecutionMetadata(**kwargs['execution'])
        return cls(**kwargs)

    @classmethod
    def for_run(cls, kind: RunKind, run_config, jobs: int = 1,
                checkpoint: Optional[str] = None) -> 'RunMetadata':
        """Provenance of a run about to start."""
        training = run_config.training
        seeds = SeedMetadata(
            training_worlds=[training.seed_start, training.seed_start + training.worlds - 1],
            evaluation_worlds=[run_config.eval_seed_start,
                               run_config.eval_seed_start + run_config.eval_worlds - 1],
            episode_seed=run_config.episode_seed,
            training_seed=training.seed,
        )
        run_id = f"{kind.value}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        return cls(run_id=run_id, kind=kind.value, config=run_config.to_dict(), seeds=seeds,
                   execution=ExecutionMetadata.capture(jobs), checkpoint=checkpoint)

    def __repr__(self) -> str:
        return f"RunMetadata(id='{self.run_id}', kind='{self.kind}')"
