"""JSON run configuration with strict validation and full default echo.

Unknown keys are rejected by dotted name, every omitted key is filled
from the defaults, and the merged ("effective") document is what commands
write next to their outputs, so any run can be replayed from its echo.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .preproc import OPERATORS

__all__ = ["ConfigError", "RunConfig", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


DEFAULTS: dict = {
    "dataset": {"root": "", "fractions": [0.8, 0.1, 0.1]},
    "preproc": {"name": "histeq", "params": {}},
    "model": {"input_size": 224, "num_classes": 4, "width_divisor": 1},
    "train": {"batch_size": 32, "epochs": 25, "lr": 1e-3, "seed": 0},
    "output": {"dir": "runs"},
}


def _reject_unknown(doc: dict, reference: dict, prefix: str = "") -> None:
    for key, value in doc.items():
        dotted = f"{prefix}{key}"
        if key not in reference:
            raise ConfigError(f"unknown config key: {dotted}")
        if isinstance(reference[key], dict) and key != "params":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {dotted} must be an object")
            _reject_unknown(value, reference[key], prefix=f"{dotted}.")


def _merged(doc: dict) -> dict:
    out = json.loads(json.dumps(DEFAULTS))  # deep copy
    for section, values in doc.items():
        for key, value in values.items():
            out[section][key] = value
    return out


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"config key {key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    dataset_root: str
    fractions: tuple[float, float, float]
    preproc_name: str
    preproc_params: dict
    input_size: int
    num_classes: int
    width_divisor: int
    batch_size: int
    epochs: int
    lr: float
    seed: int
    output_dir: str

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(doc, DEFAULTS)
        m = _merged(doc)

        fractions = m["dataset"]["fractions"]
        _require(
            isinstance(fractions, (list, tuple)) and len(fractions) == 3,
            "dataset.fractions",
            "must be a list of three numbers",
        )
        _require(
            all(isinstance(f, (int, float)) and f > 0 for f in fractions),
            "dataset.fractions",
            "entries must be positive numbers",
        )
        _require(
            abs(sum(float(f) for f in fractions) - 1.0) <= 1e-9,
            "dataset.fractions",
            f"must sum to 1, got {sum(fractions)!r}",
        )
        name = m["preproc"]["name"]
        _require(
            name in OPERATORS,
            "preproc.name",
            f"unknown operator {name!r}; valid: {', '.join(sorted(OPERATORS))}",
        )
        _require(
            isinstance(m["preproc"]["params"], dict),
            "preproc.params",
            "must be an object",
        )
        size = m["model"]["input_size"]
        _require(
            isinstance(size, int) and size >= 32,
            "model.input_size",
            "must be an integer >= 32",
        )
        _require(
            isinstance(m["model"]["num_classes"], int) and m["model"]["num_classes"] >= 2,
            "model.num_classes",
            "must be an integer >= 2",
        )
        _require(
            isinstance(m["model"]["width_divisor"], int) and m["model"]["width_divisor"] >= 1,
            "model.width_divisor",
            "must be an integer >= 1",
        )
        _require(
            isinstance(m["train"]["batch_size"], int) and m["train"]["batch_size"] >= 1,
            "train.batch_size",
            "must be an integer >= 1",
        )
        _require(
            isinstance(m["train"]["epochs"], int) and m["train"]["epochs"] >= 1,
            "train.epochs",
            "must be an integer >= 1",
        )
        _require(
            isinstance(m["train"]["lr"], (int, float)) and m["train"]["lr"] >= 0,
            "train.lr",
            "must be a non-negative number",
        )
        _require(
            isinstance(m["train"]["seed"], int),
            "train.seed",
            "must be an integer",
        )
        _require(
            isinstance(m["dataset"]["root"], str),
            "dataset.root",
            "must be a string path",
        )
        _require(
            isinstance(m["output"]["dir"], str) and m["output"]["dir"] != "",
            "output.dir",
            "must be a non-empty string",
        )
        return cls(
            dataset_root=m["dataset"]["root"],
            fractions=tuple(float(f) for f in fractions),
            preproc_name=name,
            preproc_params=dict(m["preproc"]["params"]),
            input_size=size,
            num_classes=m["model"]["num_classes"],
            width_divisor=m["model"]["width_divisor"],
            batch_size=m["train"]["batch_size"],
            epochs=m["train"]["epochs"],
            lr=float(m["train"]["lr"]),
            seed=m["train"]["seed"],
            output_dir=m["output"]["dir"],
        )

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        """Full effective document, every default materialized."""
        return {
            "dataset": {
                "root": self.dataset_root,
                "fractions": list(self.fractions),
            },
            "preproc": {"name": self.preproc_name, "params": dict(self.preproc_params)},
            "model": {
                "input_size": self.input_size,
                "num_classes": self.num_classes,
                "width_divisor": self.width_divisor,
            },
            "train": {
                "batch_size": self.batch_size,
                "epochs": self.epochs,
                "lr": self.lr,
                "seed": self.seed,
            },
            "output": {"dir": self.output_dir},
        }

    def write_echo(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
