from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import os
from pathlib import Path
import json
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

COMMANDS = (
    "verify-bubble",
    "verify-pohozaev",
    "mass-limit",
    "green-check",
    "poly-identities",
    "giraud-sweep",
    "sphere-solve",
    "blowup-demo",
    "all",
)
SWEEP_KEYS = ("rho", "xi", "mu", "p", "L")


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name, "")
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got '{value}'")


def parse_nk(text: str) -> Tuple[int, int]:
    """Parse 'N,K' into a dimension pair"""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"Dimension pair must look like N,K, got '{text}'")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"Dimension pair must contain integers, got '{text}'")


def parse_sweep(text: str) -> Dict[str, List[float]]:
    """Parse 'key=v1,v2;key2=...' into sweep grids"""
    grids: Dict[str, List[float]] = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ValueError(f"Sweep entry must look like key=v1,v2, got '{chunk}'")
        key, values = chunk.split("=", 1)
        try:
            grids[key.strip()] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"Sweep values for '{key.strip()}' must be numbers, got '{values}'")
    return grids


@dataclass
class RunConfig:
    """Configuration of one polylab run"""

    command: str
    dimensions: List[Tuple[int, int]] = field(default_factory=list)
    tol: Optional[float] = None
    sweep: Dict[str, List[float]] = field(default_factory=dict)
    out_dir: str = field(default_factory=lambda: os.getenv("POLYLAB_OUT_DIR", "polylab_out"))
    csv: bool = False
    svg: bool = False
    xlsx: bool = False
    seed: int = 0
    workers: int = field(default_factory=lambda: _env_int("POLYLAB_WORKERS", 4))
    timings: bool = False
    log_dir: Optional[str] = field(default_factory=lambda: os.getenv("POLYLAB_LOG_DIR") or None)

    @property
    def resolved_log_dir(self) -> Path:
        return Path(self.log_dir) if self.log_dir else Path(self.out_dir) / "logs"

    def validate(self) -> bool:
        """Validate the configuration settings"""
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command '{self.command}', expected one of {', '.join(COMMANDS)}")

        for pair in self.dimensions:
            if len(pair) != 2:
                raise ValueError(f"Dimension pair must have two entries, got {pair}")
            n, k = pair
            if k < 1:
                raise ValueError(f"Invalid pair (n={n}, k={k}): k must be at least 1")
            if not 2 * k < n:
                raise ValueError(f"Invalid pair (n={n}, k={k}): requires 2k < n")

        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"Tolerance must be positive, got {self.tol}")

        for key, values in self.sweep.items():
            if key not in SWEEP_KEYS:
                raise ValueError(f"Unknown sweep key '{key}', expected one of {', '.join(SWEEP_KEYS)}")
            if not values:
                raise ValueError(f"Sweep '{key}' has no values")
        for key in ("rho", "mu"):
            for value in self.sweep.get(key, []):
                if value <= 0:
                    raise ValueError(f"Sweep '{key}' values must be positive, got {value}")
        for value in self.sweep.get("xi", []):
            if not 0 <= value <= 1:
                raise ValueError(f"Sweep 'xi' holds |xi|/rho fractions in [0, 1], got {value}")
        for value in self.sweep.get("p", []):
            if value <= 2:
                raise ValueError(f"Sweep 'p' values must exceed 2, got {value}")
        for value in self.sweep.get("L", []):
            if value < 1 or value != int(value):
                raise ValueError(f"Sweep 'L' values must be positive integers, got {value}")

        if self.seed < 0:
            raise ValueError(f"Seed must be non-negative, got {self.seed}")
        if self.workers < 1:
            raise ValueError(f"Worker count must be at least 1, got {self.workers}")

        return True

    def config_echo(self) -> Dict:
        """The settings that determine report contents"""
        return {
            "command": self.command,
            "dimensions": [list(pair) for pair in self.dimensions],
            "tol": self.tol,
            "sweep": {key: list(values) for key, values in sorted(self.sweep.items())},
            "seed": self.seed,
            "formats": {"csv": self.csv, "svg": self.svg, "xlsx": self.xlsx},
        }

    @classmethod
    def load_from_json(cls, config_path: str, command: Optional[str] = None) -> "RunConfig":
        """Load configuration from a JSON file; `command` overrides the file's"""
        with open(config_path, "r") as f:
            config_data = json.load(f)

        dimensions = []
        for entry in config_data.get("dimensions", []):
            dimensions.append(parse_nk(entry) if isinstance(entry, str) else tuple(int(v) for v in entry))

        sweep = config_data.get("sweep", {})
        if isinstance(sweep, str):
            sweep = parse_sweep(sweep)

        instance = cls(command=command or config_data.get("command", "all"))
        instance.dimensions = dimensions
        instance.tol = config_data.get("tol")
        instance.sweep = {key: [float(v) for v in values] for key, values in sweep.items()}
        instance.out_dir = config_data.get("out_dir", instance.out_dir)
        instance.csv = config_data.get("csv", False)
        instance.svg = config_data.get("svg", False)
        instance.xlsx = config_data.get("xlsx", False)
        instance.seed = config_data.get("seed", 0)
        instance.workers = config_data.get("workers", instance.workers)
        instance.timings = config_data.get("timings", False)
        instance.log_dir = config_data.get("log_dir", instance.log_dir)

        return instance
