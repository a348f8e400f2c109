"""Run configuration: JSON loading, field validation, the battery-value
constant gamma, and the reproducibility manifest.

A run config is a flat JSON document whose keys are validated by the
subcommand that consumes it.  Paths are resolved relative to the config
file so configs can ship inside the repository and run from anywhere.
"""

import hashlib
import json
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ConfigError
from .icnn import PicnnArch
from .objectives import PackParams
from .training import TrainConfig

__all__ = [
    "RunConfig",
    "derive_gamma",
    "pack_from_config",
    "arch_from_config",
    "train_config_from_config",
    "rho_from_value",
    "write_manifest",
]


def derive_gamma(cost_new_eur_per_kwh: float,
                 residual_price_eur_per_kwh: float,
                 residual_capacity_fraction: float,
                 fade_fraction_at_eol: float) -> float:
    """Cost attributed to each kWh of faded capacity.

    A pack bought at ``cost_new`` is salvaged once it fades to
    ``residual_capacity_fraction`` of its rating, recovering
    ``residual_capacity_fraction * residual_price`` per original kWh.
    The net loss is spread over the ``fade_fraction_at_eol`` kWh that
    degraded away per original kWh.
    """
    if not cost_new_eur_per_kwh > 0:
        raise ConfigError(
            f"cost_new_eur_per_kwh must be positive, got "
            f"{cost_new_eur_per_kwh}", field="cost_new_eur_per_kwh")
    if residual_price_eur_per_kwh < 0:
        raise ConfigError(
            f"residual_price_eur_per_kwh must be >= 0, got "
            f"{residual_price_eur_per_kwh}",
            field="residual_price_eur_per_kwh")
    if not 0.0 <= residual_capacity_fraction <= 1.0:
        raise ConfigError(
            f"residual_capacity_fraction must be in [0, 1], got "
            f"{residual_capacity_fraction}",
            field="residual_capacity_fraction")
    if not 0.0 < fade_fraction_at_eol <= 1.0:
        raise ConfigError(
            f"fade_fraction_at_eol must be in (0, 1], got "
            f"{fade_fraction_at_eol}", field="fade_fraction_at_eol")
    return ((cost_new_eur_per_kwh
             - residual_capacity_fraction * residual_price_eur_per_kwh)
            / fade_fraction_at_eol)


@dataclass(frozen=True)
class RunConfig:
    """A parsed run config plus the directory its paths resolve against."""

    doc: dict
    base_dir: Path
    source: Path

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}",
                              field="config")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}",
                              field="config") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object",
                              field="config")
        return cls(doc=doc, base_dir=path.parent.resolve(),
                   source=path.resolve())

    def require(self, field: str):
        if field not in self.doc:
            raise ConfigError(f"missing required config field: {field}",
                              field=field)
        return self.doc[field]

    def get(self, field: str, default=None):
        return self.doc.get(field, default)

    def input_path(self, field: str) -> Path:
        """Resolve a referenced file and insist it exists."""
        value = self.require(field)
        if not isinstance(value, str) or not value:
            raise ConfigError(f"{field} must be a non-empty path string",
                              field=field)
        path = Path(value)
        if not path.is_absolute():
            path = self.base_dir / path
        if not path.is_file():
            raise ConfigError(f"{field} references a missing file: {path}",
                              field=field)
        return path

    def output_dir(self, field: str = "output_dir") -> Path:
        value = self.require(field)
        if not isinstance(value, str) or not value:
            raise ConfigError(f"{field} must be a non-empty path string",
                              field=field)
        path = Path(value)
        if not path.is_absolute():
            path = self.base_dir / path
        path.mkdir(parents=True, exist_ok=True)
        return path

    def seed(self, default: int = 0) -> int:
        value = self.get("seed", default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"seed must be an integer, got {value!r}",
                              field="seed")
        return value


_PACK_FIELDS = {
    "capacity_kwh", "n_series", "n_parallel", "v_bat", "gamma", "eta_avg",
    "e0", "e_lo", "e_hi", "e_des", "epsilon", "p_max", "dt",
}
_GAMMA_INPUT_FIELDS = {
    "cost_new_eur_per_kwh", "residual_price_eur_per_kwh",
    "residual_capacity_fraction", "fade_fraction_at_eol",
}


def pack_from_config(section) -> PackParams:
    """Build PackParams from the config's "pack" object.

    gamma is either given directly or derived from a "gamma_inputs"
    object holding the economic inputs; supplying both is an error.
    """
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("pack must be a JSON object", field="pack")
    section = dict(section)
    gamma_inputs = section.pop("gamma_inputs", None)
    unknown = set(section) - _PACK_FIELDS
    if unknown:
        raise ConfigError(
            f"unknown pack fields: {', '.join(sorted(unknown))}",
            field="pack")
    if gamma_inputs is not None:
        if "gamma" in section:
            raise ConfigError(
                "give either gamma or gamma_inputs, not both", field="pack")
        if not isinstance(gamma_inputs, dict):
            raise ConfigError("gamma_inputs must be a JSON object",
                              field="gamma_inputs")
        unknown = set(gamma_inputs) - _GAMMA_INPUT_FIELDS
        if unknown:
            raise ConfigError(
                f"unknown gamma_inputs fields: {', '.join(sorted(unknown))}",
                field="gamma_inputs")
        missing = _GAMMA_INPUT_FIELDS - set(gamma_inputs)
        if missing:
            raise ConfigError(
                f"gamma_inputs missing: {', '.join(sorted(missing))}",
                field="gamma_inputs")
        section["gamma"] = derive_gamma(
            float(gamma_inputs["cost_new_eur_per_kwh"]),
            float(gamma_inputs["residual_price_eur_per_kwh"]),
            float(gamma_inputs["residual_capacity_fraction"]),
            float(gamma_inputs["fade_fraction_at_eol"]),
        )
    return PackParams(**section)


def arch_from_config(section) -> PicnnArch:
    """Build the network shape from the config's "arch" object."""
    if section is None:
        return PicnnArch.default()
    if not isinstance(section, dict):
        raise ConfigError("arch must be a JSON object", field="arch")
    known = {"z_widths", "u_widths", "g_names", "g_tilde_names"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(
            f"unknown arch fields: {', '.join(sorted(unknown))}",
            field="arch")
    default = PicnnArch.default()
    try:
        return PicnnArch(
            n_x=default.n_x,
            n_y=default.n_y,
            z_widths=tuple(section.get("z_widths", default.z_widths)),
            u_widths=tuple(section.get("u_widths", default.u_widths)),
            g_names=tuple(section.get("g_names", default.g_names)),
            g_tilde_names=tuple(
                section.get("g_tilde_names", default.g_tilde_names)),
        )
    except Exception as exc:
        raise ConfigError(f"invalid arch: {exc}", field="arch") from exc


def train_config_from_config(section, seed: int) -> TrainConfig:
    """Build TrainConfig from the config's "train" object; the root seed
    wins unless the section pins its own."""
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("train must be a JSON object", field="train")
    known = {"epochs", "batch_size", "initial_lr", "lr_decay", "seed",
             "holdout_cell_id", "validation_fraction"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(
            f"unknown train fields: {', '.join(sorted(unknown))}",
            field="train")
    kwargs = dict(section)
    kwargs.setdefault("seed", seed)
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid train settings: {exc}",
                          field="train") from exc


def rho_from_value(value, field: str = "rho") -> float:
    try:
        rho = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{field} must be a number, got {value!r}",
                          field=field) from None
    if not np.isfinite(rho) or not 0.0 <= rho <= 1.0:
        raise ConfigError(f"{field} must lie in [0, 1], got {rho}",
                          field=field)
    return rho


def write_manifest(out_dir, run_config: RunConfig, command: str,
                   seed: int) -> Path:
    """Record what produced the artifacts in this directory: the exact
    config bytes (by hash), the seed, and the library versions.  No
    timestamps, so identical reruns write identical manifests.
    """
    digest = hashlib.sha256(run_config.source.read_bytes()).hexdigest()
    doc = {
        "command": command,
        "config_sha256": digest,
        "seed": seed,
        "versions": {
            "v2gopt": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path
