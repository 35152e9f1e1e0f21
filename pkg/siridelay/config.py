"""Scenario files: flat key = value text read with python-dotenv.

Model rates have no defaults. Everything else that has one is listed in
DEFAULTS; any key not listed in KNOWN_KEYS is rejected.
"""
import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Tuple

from dotenv import dotenv_values

from .incidence import BILINEAR, INCIDENCE_FAMILIES, IncidenceFunction, builtin_incidence
from .integrator import DEFAULT_STEP, HISTORY_PRESETS, HistoryFunction, sinusoid
from .kernel import KERNEL_FAMILIES, POINT_MASS, DelayKernel, make_kernel
from .logger import logger
from .model import RATE_NAMES, ModelParams
from .utils import parse_bool, steps_in, validate_finite, validate_positive

SCENARIO_SUFFIX = ".conf"
SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "scenarios")
SINUSOIDAL = "sinusoidal"
HISTORY_KINDS = tuple(HISTORY_PRESETS) + (SINUSOIDAL,)
HISTORY_COMPONENT_KEYS = ("history_s", "history_i", "history_r")

DEFAULTS = {
    "incidence_saturation": "0",
    "t_end": "200",
    "step": str(DEFAULT_STEP),
    "output": "out",
    "check_certificates": "true",
    "check_invariants": "true",
}
REQUIRED_KEYS = RATE_NAMES + ("kernel_family", "kernel_h", "incidence_family", "history")
KNOWN_KEYS = REQUIRED_KEYS + tuple(DEFAULTS) + HISTORY_COMPONENT_KEYS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    kernel_family: str
    kernel_h: float
    incidence_family: str
    incidence_saturation: float
    history_tag: str
    # (kind, amplitude, frequency, offset) per component, only for sinusoidal
    history_coefficients: Optional[Tuple[Tuple[str, float, float, float], ...]]
    t_end: float
    step: float
    output: str
    check_certificates: bool
    check_invariants: bool
    name: str = "scenario"

    @property
    def n_nodes(self) -> int:
        if self.kernel_h == 0:
            return 1
        return steps_in(self.kernel_h, self.step) + 1

    def kernel(self) -> DelayKernel:
        return make_kernel(self.kernel_family, self.kernel_h, self.n_nodes)

    def incidence(self) -> IncidenceFunction:
        return builtin_incidence(self.incidence_family, self.incidence_saturation)

    def history(self) -> HistoryFunction:
        if self.history_tag != SINUSOIDAL:
            return HISTORY_PRESETS[self.history_tag]
        return HistoryFunction(*(sinusoid(*coefficients) for coefficients in self.history_coefficients))

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with overrides; rate names go into params. Re-validates."""
        rates = {k: changes.pop(k) for k in list(changes) if k in RATE_NAMES}
        if rates:
            try:
                changes["params"] = self.params.replace(**rates)
            except ValueError as e:
                raise ConfigError(str(e)) from e
        updated = replace(self, **changes)
        _check_consistency(updated)
        return updated


def _parse_history_component(key: str, text: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ConfigError(f"'{key}' must look like kind,amplitude,frequency,offset, got '{text}'.")
    kind = parts[0]
    if kind not in ("sin", "cos"):
        raise ConfigError(f"'{key}' kind must be sin or cos, got '{kind}'.")
    try:
        amplitude, frequency, offset = (validate_finite(key, p, allow_negative=True) for p in parts[1:])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return kind, amplitude, frequency, offset


def _check_consistency(config: ScenarioConfig):
    if config.kernel_family not in KERNEL_FAMILIES:
        raise ConfigError(f"Unknown kernel_family '{config.kernel_family}'. Known families: {', '.join(KERNEL_FAMILIES)}")
    if config.incidence_family not in INCIDENCE_FAMILIES:
        raise ConfigError(f"Unknown incidence_family '{config.incidence_family}'. Known families: {', '.join(INCIDENCE_FAMILIES)}")
    if config.history_tag not in HISTORY_KINDS:
        raise ConfigError(f"Unknown history '{config.history_tag}'. Known histories: {', '.join(HISTORY_KINDS)}")
    if not config.step > 0:
        raise ConfigError(f"step must be positive, got {config.step}.")
    if not config.t_end > 0:
        raise ConfigError(f"t_end must be positive, got {config.t_end}.")
    if (config.kernel_family == POINT_MASS) != (config.kernel_h == 0):
        raise ConfigError("kernel_h must be 0 exactly when kernel_family is point-mass.")
    if config.kernel_h > 0:
        try:
            steps_in(config.kernel_h, config.step)
        except ValueError as e:
            raise ConfigError(f"step {config.step} must divide kernel_h {config.kernel_h}.") from e
    if config.step > config.t_end:
        raise ConfigError(f"step {config.step} is longer than t_end {config.t_end}.")
    try:
        config.history().validate(config.kernel_h, warn_at_zero=False)
    except ValueError as e:
        raise ConfigError(f"history '{config.history_tag}': {e}") from e
    if config.incidence_family == BILINEAR and config.incidence_saturation != 0:
        logger.warning("incidence_saturation is ignored by the bilinear family")


def config_from_mapping(values: Mapping[str, Optional[str]], name: str = "scenario") -> ScenarioConfig:
    unknown = sorted(set(values) - set(KNOWN_KEYS))
    if unknown:
        raise ConfigError(f"Unknown keys in {name}: {', '.join(unknown)}")
    merged = {**DEFAULTS, **{k: v for k, v in values.items()}}
    missing = [k for k in REQUIRED_KEYS if merged.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"Missing required keys in {name}: {', '.join(missing)}")

    try:
        params = ModelParams.from_mapping({k: float(merged[k]) for k in RATE_NAMES})
        kernel_h = validate_finite("kernel_h", merged["kernel_h"])
        saturation = validate_finite("incidence_saturation", merged["incidence_saturation"])
        t_end = validate_positive("t_end", merged["t_end"])
        step = validate_positive("step", merged["step"])
        check_certificates = parse_bool("check_certificates", merged["check_certificates"])
        check_invariants = parse_bool("check_invariants", merged["check_invariants"])
    except ValueError as e:
        raise ConfigError(f"{name}: {e}") from e

    history_tag = merged["history"].strip()
    coefficients = None
    if history_tag == SINUSOIDAL:
        absent = [k for k in HISTORY_COMPONENT_KEYS if not merged.get(k)]
        if absent:
            raise ConfigError(f"history = sinusoidal needs {', '.join(absent)}")
        coefficients = tuple(_parse_history_component(k, merged[k]) for k in HISTORY_COMPONENT_KEYS)
    elif any(merged.get(k) for k in HISTORY_COMPONENT_KEYS):
        logger.warning(f"history_s/i/r are only read for history = {SINUSOIDAL}")

    config = ScenarioConfig(
        params=params,
        kernel_family=merged["kernel_family"].strip(),
        kernel_h=kernel_h,
        incidence_family=merged["incidence_family"].strip(),
        incidence_saturation=saturation,
        history_tag=history_tag,
        history_coefficients=coefficients,
        t_end=t_end,
        step=step,
        output=merged["output"],
        check_certificates=check_certificates,
        check_invariants=check_invariants,
        name=name,
    )
    _check_consistency(config)
    return config


def load_config(path: str) -> ScenarioConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"Config file '{path}' does not exist or is not a file.")
    try:
        values = dotenv_values(path)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Could not read config file '{path}': {e}") from e
    name = os.path.splitext(os.path.basename(path))[0]
    logger.debug(f"Read {len(values)} keys from {path}")
    return config_from_mapping(values, name=name)


def scenario_dirs():
    extra = os.environ.get("SIRI_SCENARIO_DIR")
    return [d for d in (extra, SCENARIO_DIR) if d]


def list_presets():
    names = set()
    for directory in scenario_dirs():
        if os.path.isdir(directory):
            names.update(f[:-len(SCENARIO_SUFFIX)] for f in os.listdir(directory) if f.endswith(SCENARIO_SUFFIX))
    return sorted(names)


def preset_path(name: str) -> str:
    for directory in scenario_dirs():
        path = os.path.join(directory, name + SCENARIO_SUFFIX)
        if os.path.isfile(path):
            return path
    raise ConfigError(f"Unknown preset '{name}'. Known presets: {', '.join(list_presets())}")


def load_preset(name: str) -> ScenarioConfig:
    return load_config(preset_path(name))
