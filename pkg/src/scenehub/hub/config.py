"""Hub configuration: evidence thresholds, default mission, data file paths.

Defaults are tuned for the shipped scenarios and resolve paths relative to
the working directory; point the ``HUB_CONFIG`` environment variable (or
``--config``) at a JSON file to override any subset of fields. Unknown
fields are rejected so typos never silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path


class HubConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HubConfig:
    # Evidence derivation: a radiation reading counts as positive when it
    # exceeds this multiple of the scene background dose.
    rad_threshold_factor: float = 3.0
    rav_src_prefix: str = "rav"
    rav_evidence_var: str = "lowflight_rad_detect"
    handheld_evidence_var: str = "handheld_rad_positive"

    model_path: str = "models/default_cbrne.model"
    corpus_dir: str = "corpus"
    synonyms_path: str = "synonyms.json"
    top_k_docs: int = 10

    # Simulated swarm brought up for serve/run modes.
    agent_count: int = 2
    agent_speed_m_s: float = 10.0
    agent_battery_pct: float = 100.0
    drain_rate_pct_s: float = 0.01
    sensor_noise_rel: float = 0.05
    sensor_noise_floor: float = 0.0
    footprint_half_width_m: float = 15.0
    heartbeat_interval_s: float = 1.0
    radio_range_m: float = 5000.0
    dt_s: float = 1.0
    detector: dict | None = None  # None -> swarm default detector

    # Scripted mission for headless runs; corners default to the terrain
    # grid extent when not given explicitly.
    mission_spacing_m: float = 20.0
    mission_altitude_m: float = 10.0
    mission_corners: list | None = None  # [{lat_deg, lon_deg, alt_m} x 4]

    # Sim-seconds advanced per wall-clock second in serve mode.
    time_scale: float = 10.0


def load_hub_config(path: str | Path | None) -> HubConfig:
    """Config from a JSON file, or pure defaults when ``path`` is None."""
    if path is None:
        return HubConfig()
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise HubConfigError(f"hub config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise HubConfigError(f"hub config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise HubConfigError("hub config: top-level document must be a JSON object")
    known = {f.name for f in dataclasses.fields(HubConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise HubConfigError(f"hub config: unknown fields {unknown}")
    return HubConfig(**data)
