"""Run configuration: one YAML document, validated before any computation.

Layout (all blocks except ``source`` optional)::

    seed: 7
    output_dir: runs/demo          # HITSPEC_OUTPUT_DIR overrides
    source:
      alphabet: 2                  # Markov source ...
      order: 0
      kernel: [[0.7, 0.3]]
      # ... or the Manneville-Pomeau coding:
      # mp: {alpha: 0.5, burn_in: 1000}
    generate:     {length: 1000000}
    spectrum:     {n_grid: [8, 12, 16], q_grid: [-2, -1, 0, 1, 2], n_samples: 20000,
                   budget: 1000000, sampler: scan, return_spectra: true}
    fluctuations: {n: 40, n_samples: 1000, sampler: exact, eps: 3, ...}
    mp:           {q: [2.5, 1.0], doublings: 4, budget: 10000000, replicates: 8}

A missing ``q_grid`` means the default grid on ``[-3, 3]`` with step 0.1.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .sources import InvalidSpec, MarkovSpec, MPParams, SourceSpec

OUTPUT_ENV = "HITSPEC_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 2)."""


DEFAULTS: dict = {
    "seed": 0,
    "output_dir": "hitspec-out",
    "generate": {"length": 1_000_000},
    "spectrum": {
        "n_grid": [8, 12, 16],
        "q_grid": None,
        "n_samples": 2000,
        "budget": 1_000_000,
        "sampler": "scan",
        "return_spectra": True,
        "workers": 1,
    },
    "fluctuations": {
        "n": 40,
        "n_samples": 1000,
        "budget": 10**8,
        "sampler": "exact",
        "eps": 3.0,
        "sa_n_grid": [10, 20, 30],
        "sa_samples": 2000,
        "lil_n_max": 200,
        "kac_pattern": "01",
        "kac_returns": 100_000,
        "exp_pattern": None,
        "exp_samples": 10_000,
        "workers": 1,
        "tolerances": {
            "clt_ks": 0.08,
            "clt_var_rel": 0.25,
            "kac": 0.05,
            "exp_ks": 0.02,
            "exp_rho": [0.9, 1.1],
            "sa_max": 0.05,
            "lil": [0.2, 2.5],
        },
    },
    "mp": {
        "q": [2.5, 1.0],
        "doublings": 4,
        "budget": 10_000_000,
        "replicates": 8,
        "variant": "stationary",
        "tolerances": {"growth_min": 1.2, "stable_max": 0.05, "tail": [1.7, 2.3]},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _int(block: dict, key: str, lo: int = 1) -> int:
    v = block[key]
    try:
        iv = int(float(v))
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {v!r}") from None
    if iv != float(v) or iv < lo:
        raise ConfigError(f"{key} must be an integer >= {lo}, got {v!r}")
    return iv


def parse_source(block: dict, seed: int) -> SourceSpec:
    if not isinstance(block, dict):
        raise ConfigError("source must be a mapping")
    try:
        if "mp" in block:
            mp = block["mp"] or {}
            unknown = set(mp) - {"alpha", "burn_in", "precision"}
            if unknown:
                raise ConfigError(f"unknown mp keys: {sorted(unknown)}")
            return SourceSpec(MPParams(float(mp["alpha"]), int(mp.get("burn_in", 1000)),
                                       mp.get("precision", "double")), seed)
        kernel = np.asarray(block["kernel"], dtype=float)
        order = int(block.get("order", 0))
        if kernel.ndim == 1:
            kernel = kernel[None, :]
        if "alphabet" in block and int(block["alphabet"]) != kernel.shape[1]:
            raise ConfigError("alphabet does not match the kernel width")
        return SourceSpec(MarkovSpec(kernel, order, bool(block.get("subshift", False))), seed)
    except KeyError as e:
        raise ConfigError(f"source block is missing {e.args[0]!r}") from None
    except InvalidSpec as e:
        raise ConfigError(f"invalid source: {e}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid source: {e}") from None


@dataclass
class RunConfig:
    """Validated configuration tree plus the parsed source."""

    raw: dict
    source: SourceSpec
    output_dir: Path
    seed: int
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    def resolved(self) -> dict:
        """Plain-data copy of the effective configuration (for the audit trail)."""
        out = copy.deepcopy(self.raw)
        out["seed"] = self.seed
        out["output_dir"] = str(self.output_dir)
        out["source"] = self.source.to_dict()
        return out

    def dump(self, path: Path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.resolved(), fh, sort_keys=True)


def _validate(cfg: dict) -> dict:
    sections = {}
    sp = cfg["spectrum"]
    sections["spectrum"] = {
        "n_grid": [int(n) for n in sp["n_grid"]],
        "q_grid": None if sp.get("q_grid") is None else [float(q) for q in sp["q_grid"]],
        "n_samples": _int(sp, "n_samples", 100),
        "budget": _int(sp, "budget", 2),
        "sampler": str(sp["sampler"]),
        "return_spectra": bool(sp["return_spectra"]),
        "workers": _int(sp, "workers", 1),
    }
    if sections["spectrum"]["sampler"] not in ("scan", "exact"):
        raise ConfigError("spectrum.sampler must be 'scan' or 'exact'")
    if min(sections["spectrum"]["n_grid"]) < 1:
        raise ConfigError("spectrum.n_grid entries must be >= 1")
    fl = cfg["fluctuations"]
    sections["fluctuations"] = dict(fl)
    for key, lo in (("n", 1), ("n_samples", 100), ("budget", 2), ("sa_samples", 100), ("lil_n_max", 17),
                    ("kac_returns", 2), ("exp_samples", 1000), ("workers", 1)):
        sections["fluctuations"][key] = _int(fl, key, lo)
    if not float(fl["eps"]) > 1:
        raise ConfigError("fluctuations.eps must exceed 1")
    if str(fl["sampler"]) not in ("scan", "exact"):
        raise ConfigError("fluctuations.sampler must be 'scan' or 'exact'")
    mp = cfg["mp"]
    sections["mp"] = dict(mp)
    sections["mp"]["q"] = [float(q) for q in np.atleast_1d(mp["q"])]
    for key, lo in (("doublings", 1), ("budget", 10**4), ("replicates", 1)):
        sections["mp"][key] = _int(mp, key, lo)
    if mp["variant"] not in ("stationary", "sojourn"):
        raise ConfigError("mp.variant must be 'stationary' or 'sojourn'")
    sections["generate"] = {"length": _int(cfg["generate"], "length", 1)}
    return sections


def load_config(source: Any = None, overrides: Optional[dict] = None) -> RunConfig:
    """Read and validate a configuration.

    ``source`` is a path, a YAML string, a mapping, or ``None`` (defaults
    only, which requires ``overrides`` to supply a source block).
    """
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = copy.deepcopy(source)
    else:
        p = Path(source)
        try:
            text = p.read_text() if p.exists() else str(source)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed YAML: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
    if overrides:
        data = _merge(data, overrides)
    unknown = set(data) - set(DEFAULTS) - {"source"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "source" not in data:
        raise ConfigError("config needs a source block")
    cfg = _merge(DEFAULTS, data)
    src_block = cfg["source"]
    seed = src_block.get("seed", cfg["seed"]) if isinstance(src_block, dict) else cfg["seed"]
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    source = parse_source({k: v for k, v in src_block.items() if k != "seed"}, seed)
    try:
        sections = _validate(cfg)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid parameter block: {e}") from None
    out = Path(os.environ.get(OUTPUT_ENV) or cfg["output_dir"])
    return RunConfig(cfg, source, out, seed, sections)
