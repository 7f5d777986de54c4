"""Configuration management for wmbo runs."""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from wmbo.models.fields import DEFAULT_SCALE, GridSpec, SchemeKind, ThresholdParams
from wmbo.models.shapes import Shape

logger = logging.getLogger(__name__)

COMMANDS = (
    "evolve",
    "converge-circle",
    "kernel-table",
    "kernel-verify",
    "moments",
    "expansion",
    "velocity",
    "shape-preview",
    "band-check",
)

OUTPUT_ENV = "WMBO_OUT"
MANIFEST_NAME = "manifest.json"

# Flag and file keys that differ from the field names.
KEY_ALIASES = {
    "l": "side_length",
    "side": "side_length",
    "lambda": "lam",
    "h": "h_values",
    "t": "t_values",
    "rmax": "r_max",
    "step": "r_step",
    "out": "output_dir",
    "output": "output_dir",
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "circle": {"shape": "circle:0.15", "r0": 0.15, "side_length": 1.0, "n": 2048, "h_values": [1e-5]},
    "cassini": {"shape": "cassini:0.6825,0.678", "side_length": 5.0, "n": 1024, "h_values": [0.004]},
    "rose": {"shape": "rose", "side_length": 5.0, "n": 1024, "h_values": [0.003]},
    # Step size printed in the figure caption of the rose experiment.
    "rose-caption": {"shape": "rose", "side_length": 5.0, "n": 1024, "h_values": [0.0003]},
}


def normalize_key(key: str) -> str:
    """Map a flag or file key to its RunConfig field name."""
    name = key.strip().lstrip("-")
    lowered = name.lower()
    if lowered in KEY_ALIASES:
        return KEY_ALIASES[lowered]
    return lowered.replace("-", "_")


def _as_floats(value: Any) -> List[float]:
    if isinstance(value, str):
        return [float(part) for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def _as_bool(value: Any) -> bool:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off", ""):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return bool(value)


def _optional(cast):
    def convert(value):
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "null")):
            return None
        return cast(value)

    return convert


@dataclass
class RunConfig:
    """Fully resolved settings of one command invocation."""

    command: str
    side_length: float = 1.0
    n: int = 256
    shape: str = "circle:0.15"
    r0: float = 0.15
    h_values: List[float] = field(default_factory=lambda: [1e-5])
    lam: float = 0.0
    a: float = DEFAULT_SCALE
    scheme: str = SchemeKind.THREE_SCALE.value
    steps: int = 1
    snapshot_every: int = 0
    t_final: Optional[float] = None
    t_values: List[float] = field(default_factory=list)
    dim: int = 1
    r_max: float = 20.0
    r_step: float = 0.05
    zero_count: int = 3
    n_max: int = 16
    jobs: Optional[int] = None
    emit_svg: bool = False
    output_dir: str = "output"

    CONVERTERS = {
        "command": str,
        "side_length": float,
        "n": int,
        "shape": str,
        "r0": float,
        "h_values": _as_floats,
        "lam": float,
        "a": float,
        "scheme": str,
        "steps": int,
        "snapshot_every": int,
        "t_final": _optional(float),
        "t_values": _as_floats,
        "dim": int,
        "r_max": float,
        "r_step": float,
        "zero_count": int,
        "n_max": int,
        "jobs": _optional(int),
        "emit_svg": _as_bool,
        "output_dir": str,
    }

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command '{self.command}' (known: {', '.join(COMMANDS)})")
        if not self.h_values or any(h <= 0 for h in self.h_values):
            raise ValueError(f"h values must be positive, got {self.h_values}")
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        SchemeKind(self.scheme)

    @property
    def h(self) -> float:
        return self.h_values[0]

    def grid(self) -> GridSpec:
        return GridSpec(side_length=self.side_length, n=self.n)

    def params(self, h: Optional[float] = None) -> ThresholdParams:
        return ThresholdParams(h=self.h if h is None else h, lam=self.lam, a=self.a, scheme=SchemeKind(self.scheme))

    def shape_obj(self) -> Shape:
        return Shape.parse(self.shape)

    def to_dict(self) -> dict:
        """Convert config to dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Create config from dictionary, coercing strings and ignoring None values."""
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in data.items():
            name = normalize_key(key)
            if name not in known:
                raise ValueError(f"unknown config key '{key}'")
            if value is None and name not in ("t_final", "jobs"):
                continue
            values[name] = cls.CONVERTERS[name](value)
        return cls(**values)


class ConfigManager:
    """Loads config files and writes run manifests."""

    def __init__(self, config_file: Optional[Path] = None):
        """
        Initialize the config manager.

        Args:
            config_file: Flat `key = value` file or JSON manifest. None means no file layer.
        """
        self.config_file = Path(config_file) if config_file is not None else None

    @staticmethod
    def default_output_dir() -> str:
        return os.environ.get(OUTPUT_ENV) or "output"

    def load(self) -> Dict[str, Any]:
        """
        Read the file layer.

        Returns:
            Raw key/value pairs with normalized keys; empty without a file.
        """
        if self.config_file is None:
            return {}
        if not self.config_file.is_file():
            raise ValueError(f"config file not found: {self.config_file}")
        text = self.config_file.read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            data = json.loads(text)
            if "config" in data:
                data = data["config"]
            return {normalize_key(k): v for k, v in data.items()}
        return self.parse_flat(text)

    @staticmethod
    def parse_flat(text: str) -> Dict[str, str]:
        """Parse `key = value` lines; `#` starts a comment."""
        data = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {number}: expected key = value, got {raw.strip()!r}")
            data[normalize_key(key)] = value.strip()
        return data

    def resolve(
        self, command: str, preset: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
    ) -> RunConfig:
        """
        Merge defaults < preset < config file < flags into a RunConfig.

        Args:
            command: Command name.
            preset: Optional preset name from PRESETS.
            overrides: Flag values; None entries are skipped.

        Returns:
            The resolved RunConfig.
        """
        merged: Dict[str, Any] = {"output_dir": self.default_output_dir()}
        if preset is not None:
            if preset not in PRESETS:
                raise ValueError(f"unknown preset '{preset}' (known: {', '.join(sorted(PRESETS))})")
            merged.update(PRESETS[preset])
        merged.update(self.load())
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[normalize_key(key)] = value
        merged["command"] = command
        config = RunConfig.from_dict(merged)
        logger.debug("resolved config: %s", config.to_dict())
        return config

    def save_manifest(self, config: RunConfig, outputs: Sequence[Path], extra: Optional[dict] = None) -> Path:
        """
        Write manifest.json into the run's output directory.

        Args:
            config: The resolved config.
            outputs: Artifacts written by the run.
            extra: Additional result fields (statuses, fitted values).

        Returns:
            Path of the manifest.
        """
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "config": config.to_dict(),
            "outputs": sorted(Path(p).name for p in outputs),
        }
        if extra:
            manifest["result"] = extra
        path = out_dir / MANIFEST_NAME
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
