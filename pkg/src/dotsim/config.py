"""Run configuration: one flat JSON object per experiment.

A config names exactly one experiment kind and carries only the keys
that kind understands; unknown keys are rejected rather than ignored so
a typo cannot silently fall back to a default. Validation reports the
offending key by name. Defaults follow the device scales used
throughout: 160 nm pitch, 90 nm gate depth, relative permittivity 12.9,
45 nm orbital fwhm, t = 20 ueV.
"""
import json
import os
from dataclasses import dataclass

from .layouts import BUILTIN_NAMES

__all__ = ["ConfigError", "ExperimentConfig", "load_config",
           "read_document", "validate_config", "EXPERIMENT_KINDS"]

EXPERIMENT_KINDS = ("screen", "params", "atom", "molecule", "occupation",
                    "stability")

EE_MODELS = ("bare", "image", "tiled")


class ConfigError(ValueError):
    """A config value is missing, unknown, or out of range."""


def _reject_bool(key, value):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean")


def _float(key, value, minimum=None, exclusive=False):
    _reject_bool(key, value)
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, "
                          f"got {type(value).__name__}")
    value = float(value)
    if minimum is not None:
        if exclusive and not value > minimum:
            raise ConfigError(f"{key}: must be > {minimum}, got {value}")
        if not exclusive and not value >= minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _int(key, value, minimum):
    _reject_bool(key, value)
    if not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, "
                          f"got {type(value).__name__}")
    if value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _enum(key, value, choices):
    if value not in choices:
        raise ConfigError(f"{key}: must be one of {', '.join(choices)}, "
                          f"got {value!r}")
    return value


def _string(key, value):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{key}: expected a non-empty string")
    return value


def _layout(key, value):
    value = _string(key, value)
    if value in BUILTIN_NAMES or os.path.exists(value):
        return value
    raise ConfigError(f"{key}: {value!r} is neither a builtin layout "
                      f"({', '.join(BUILTIN_NAMES)}) nor an existing file")


def _existing_file(key, value):
    value = _string(key, value)
    if not os.path.exists(value):
        raise ConfigError(f"{key}: file {value!r} does not exist")
    return value


# converter factories keep the schema tables declarative
def pos_float(key, value):
    return _float(key, value, minimum=0.0, exclusive=True)


def nonneg_float(key, value):
    return _float(key, value, minimum=0.0)


def any_float(key, value):
    return _float(key, value)


def pos_int(key, value):
    return _int(key, value, minimum=1)


def nonneg_int(key, value):
    return _int(key, value, minimum=0)


def steps_int(key, value):
    return _int(key, value, minimum=2)


def ee_model(key, value):
    return _enum(key, value, EE_MODELS)


_GEOMETRY = {
    "a_qd_nm": (160.0, pos_float),
    "fwhm_nm": (45.0, pos_float),
}

_SCREENING = {
    "depth_nm": (90.0, pos_float),
    "rel_permittivity": (12.9, pos_float),
    "tile_nm": (20.0, pos_float),
    "layout": ("finger-gates", _layout),
}

# None as default marks a required key
SCHEMAS = {
    "screen": {
        **_SCREENING,
        "rho_min_nm": (160.0, pos_float),
        "rho_max_nm": (800.0, pos_float),
        "rho_steps": (5, pos_int),
        "reference": ("reservoir", lambda k, v: _enum(k, v, ("reservoir",
                                                             "isolated"))),
    },
    "params": {
        **_SCREENING,
        **_GEOMETRY,
        "sites": (6, pos_int),
        "dots": (None, _existing_file),
        "model": ("tiled", ee_model),
    },
    "atom": {
        **_GEOMETRY,
        "sites": (25, pos_int),
        "t_ueV": (20.0, pos_float),
        "v0_min_ueV": (10.0, pos_float),
        "v0_max_ueV": (60.0, pos_float),
        "v0_steps": (11, pos_int),
        "levels": (3, pos_int),
    },
    "molecule": {
        **_GEOMETRY,
        **_SCREENING,
        "sites": (10, pos_int),
        "t_ueV": (20.0, pos_float),
        "v0_ueV": (200.0, pos_float),
        "r_min": (2.0, pos_float),
        "r_max": (8.0, pos_float),
        "r_steps": (4, pos_int),
        "ee_model": ("tiled", ee_model),
        "soft_core": (0.0, nonneg_float),
    },
    "occupation": {
        **_GEOMETRY,
        **_SCREENING,
        "sites": (10, pos_int),
        "t_ueV": (20.0, pos_float),
        # eta = 0.5: orbitals spread enough that a 10 ueV ramp visibly
        # reshapes the excited-state map (deep wells pin the charge)
        "v0_ueV": (40.0, pos_float),
        "r_min": (2.0, pos_float),
        "r_max": (8.0, pos_float),
        "r_steps": (4, pos_int),
        "ee_model": ("tiled", ee_model),
        "soft_core": (0.0, nonneg_float),
        "bias_slope_ueV": (10.0, any_float),
    },
    "stability": {
        "mode": ("simulate", lambda k, v: _enum(k, v, ("simulate", "fit"))),
        "v_ij_ueV": (40.0, nonneg_float),
        "t_ij_ueV": (20.0, nonneg_float),
        "center_i_ueV": (0.0, any_float),
        "center_j_ueV": (0.0, any_float),
        "span_ueV": (0.0, nonneg_float),  # 0 picks 1.5 (V + 2t) + 30
        "points": (81, steps_int),
        "broadening_ueV": (10.0, pos_float),
        "noise": (0.0, nonneg_float),
        "weight_i": (1.0, any_float),
        "weight_j": (1.0, any_float),
        "input": (None, _existing_file),
        "fix_t_ueV": (None, nonneg_float),
    },
}

# keys whose absence is fine even though their default is None
_OPTIONAL = {("params", "dots"), ("stability", "input"),
             ("stability", "fix_t_ueV")}

_DEFAULT_OUT = {"screen": "screen.csv", "params": "params.csv",
                "atom": "atom.csv", "molecule": "mol.csv",
                "occupation": "occ.csv", "stability": "diagram.csv"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    out: str
    seed: int
    threads: int
    params: dict

    def echo(self) -> dict:
        """Flat dictionary that validates back to an equal config."""
        flat = {"experiment": self.kind, "out": self.out,
                "seed": self.seed, "threads": self.threads}
        flat.update({k: v for k, v in self.params.items() if v is not None})
        return flat


def validate_config(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "experiment" not in data:
        raise ConfigError("missing required key experiment")
    kind = _enum("experiment", data["experiment"], EXPERIMENT_KINDS)

    schema = SCHEMAS[kind]
    known = set(schema) | {"experiment", "out", "seed", "threads"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys for {kind} config: "
                          f"{', '.join(unknown)}")

    params = {}
    for key, (default, convert) in schema.items():
        if key in data:
            params[key] = convert(key, data[key])
        elif default is None and (kind, key) not in _OPTIONAL:
            raise ConfigError(f"missing required key {key}")
        else:
            params[key] = default

    _check_grids(kind, params)

    out = data.get("out")
    if out is None:
        out = _DEFAULT_OUT[kind]
        if kind == "stability" and params["mode"] == "fit":
            out = "fit.json"
    else:
        out = _string("out", out)
    seed = nonneg_int("seed", data.get("seed", 0))
    threads = nonneg_int("threads", data.get("threads", 0))
    return ExperimentConfig(kind=kind, out=out, seed=seed, threads=threads,
                            params=params)


def _check_grids(kind: str, params: dict) -> None:
    for low, high, steps in (("v0_min_ueV", "v0_max_ueV", "v0_steps"),
                             ("r_min", "r_max", "r_steps"),
                             ("rho_min_nm", "rho_max_nm", "rho_steps")):
        if low in params:
            if params[low] > params[high]:
                raise ConfigError(f"{low}: must be <= {high} "
                                  f"({params[low]} > {params[high]})")
            if params[low] == params[high] and params[steps] != 1:
                raise ConfigError(f"{steps}: must be 1 when {low} equals "
                                  f"{high}")
    if kind == "stability" and params["mode"] == "fit" \
            and params["input"] is None:
        raise ConfigError("input: required when mode is fit")


def read_document(path) -> dict:
    """Raw config JSON object, parse errors wrapped as ConfigError."""
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as err:
        raise ConfigError(f"{path}: cannot read config ({err})") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: not valid JSON ({err})") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def load_config(path) -> ExperimentConfig:
    return validate_config(read_document(path))
