"""Default tracking parameters and the JSON config file loader.

Defaults are per class. The score threshold additionally depends on the
tracking mode (vehicles use a lower threshold in image space than in world
space); everything else is mode-independent. A config file may override any
subset of fields; unknown keys are rejected rather than ignored so typos
fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .kalman import Noise2D, Noise3D
from .types import ClassConfig, Mode, ObjectClass

_CLASS_DEFAULTS: dict[ObjectClass, dict[str, float]] = {
    ObjectClass.PEDESTRIAN: dict(
        t_a=0.15,
        max_iou_dist_front=0.95,
        max_iou_dist_front_lr=0.97,
        max_iou_dist_side=0.99,
        sigma=1.5,
        max_center_dist=0.7,
    ),
    ObjectClass.VEHICLE: dict(
        t_a=0.06,
        max_iou_dist_front=0.90,
        max_iou_dist_front_lr=0.93,
        max_iou_dist_side=0.95,
        sigma=5.0,
        max_center_dist=0.5,
    ),
    ObjectClass.CYCLIST: dict(
        t_a=0.15,
        max_iou_dist_front=0.95,
        max_iou_dist_front_lr=0.97,
        max_iou_dist_side=0.99,
        sigma=3.0,
        max_center_dist=0.9,
    ),
}

_T_S_2D = {
    ObjectClass.PEDESTRIAN: 0.5,
    ObjectClass.VEHICLE: 0.4,
    ObjectClass.CYCLIST: 0.5,
}
_T_S_3D = {
    ObjectClass.PEDESTRIAN: 0.5,
    ObjectClass.VEHICLE: 0.5,
    ObjectClass.CYCLIST: 0.5,
}

_CLASS_FIELD_NAMES = {f.name for f in dataclasses.fields(ClassConfig)}
_INT_FIELDS = {"a_max", "min_hits", "gallery_budget"}
_BOOL_FIELDS = {"mahalanobis_gating"}


def default_class_configs(mode: Mode | str = Mode.D2) -> dict[ObjectClass, ClassConfig]:
    """Fully populated per-class defaults for the given mode."""
    mode = Mode(mode)
    t_s = _T_S_2D if mode is Mode.D2 else _T_S_3D
    return {
        cls: ClassConfig(t_s=t_s[cls], **params)
        for cls, params in _CLASS_DEFAULTS.items()
    }


@dataclass(frozen=True)
class TrackerConfig:
    """Everything the pipeline needs: mode, per-class parameters, filter noise."""

    mode: Mode
    class_configs: dict[ObjectClass, ClassConfig]
    noise_2d: Noise2D
    noise_3d: Noise3D


def _require_mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _coerce(key: str, value: Any, path: str) -> Any:
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}.{key}: expected a boolean, got {value!r}")
        return value
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    return float(value)


def _merge_dataclass(base: Any, overrides: Mapping[str, Any], path: str) -> Any:
    names = {f.name for f in dataclasses.fields(base)}
    updates = {}
    for key, value in overrides.items():
        if key not in names:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
        updates[key] = float(value)
    try:
        return dataclasses.replace(base, **updates)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_config(data: Mapping[str, Any], mode: Mode | str | None = None) -> TrackerConfig:
    """Build a TrackerConfig from decoded JSON, filling gaps with defaults.

    ``mode`` supplies the tracking mode when the file does not name one; if
    both are present they must agree.
    """
    _require_mapping(data, "config")
    allowed = {"mode", "classes", "kalman"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"config: unknown key {key!r}")

    file_mode: Mode | None = None
    if "mode" in data:
        try:
            file_mode = Mode(data["mode"])
        except ValueError:
            raise ConfigError(f"config.mode: expected '2d' or '3d', got {data['mode']!r}") from None
    if mode is not None:
        mode = Mode(mode)
        if file_mode is not None and file_mode is not mode:
            raise ConfigError(
                f"config.mode {file_mode.value!r} contradicts requested mode {mode.value!r}"
            )
    resolved_mode = mode or file_mode
    if resolved_mode is None:
        raise ConfigError("config: no mode given (set 'mode' in the file or pass one)")

    class_configs = default_class_configs(resolved_mode)
    class_blocks = _require_mapping(data.get("classes", {}), "config.classes")
    for name, block in class_blocks.items():
        try:
            cls = ObjectClass(name)
        except ValueError:
            raise ConfigError(f"config.classes: unknown class {name!r}") from None
        path = f"config.classes.{name}"
        block = _require_mapping(block, path)
        fields = dataclasses.asdict(class_configs[cls])
        for key, value in block.items():
            if key not in _CLASS_FIELD_NAMES:
                raise ConfigError(f"{path}: unknown key {key!r}")
            fields[key] = _coerce(key, value, path)
        try:
            class_configs[cls] = ClassConfig(**fields)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    noise_2d = Noise2D()
    noise_3d = Noise3D()
    kalman_block = _require_mapping(data.get("kalman", {}), "config.kalman")
    for key in kalman_block:
        if key not in ("noise_2d", "noise_3d"):
            raise ConfigError(f"config.kalman: unknown key {key!r}")
    if "noise_2d" in kalman_block:
        noise_2d = _merge_dataclass(
            noise_2d,
            _require_mapping(kalman_block["noise_2d"], "config.kalman.noise_2d"),
            "config.kalman.noise_2d",
        )
    if "noise_3d" in kalman_block:
        noise_3d = _merge_dataclass(
            noise_3d,
            _require_mapping(kalman_block["noise_3d"], "config.kalman.noise_3d"),
            "config.kalman.noise_3d",
        )

    return TrackerConfig(resolved_mode, class_configs, noise_2d, noise_3d)


def load_config(path: str | Path | None, mode: Mode | str | None = None) -> TrackerConfig:
    """Read a JSON config file; ``path=None`` means all defaults."""
    if path is None:
        return parse_config({}, mode=mode)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data, mode=mode)
