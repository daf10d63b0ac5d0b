import copy
from pathlib import Path
from typing import Any, Dict, Optional

import toml
from loguru import logger

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "config.toml"

REQUIRED_FIELDS = {
    "search": ["max_word_length", "power_cap", "epsilon", "rng_seed", "orbit_node_cap", "refinements"],
    "reduction": ["denom_bound", "harvest_height"],
    "numerics": ["isometry_tol", "fixed_point_tol", "eigen_tol", "discriminant_tol", "rational_approx_denominator"],
    "runtime": ["threads", "log_level"],
}

BUILTIN_DEFAULTS: Dict[str, Any] = {
    "search": {
        "max_word_length": 20,
        "power_cap": 60,
        "epsilon": 0.01,
        "rng_seed": 0,
        "orbit_node_cap": 20000,
        "scan_node_cap": 2000,
        "refinements": 6,
        "max_candidates": 64,
    },
    "reduction": {"denom_bound": 10000, "harvest_height": 3, "glue_orbit_cap": 500},
    "numerics": {
        "isometry_tol": 1e-9,
        "fixed_point_tol": 1e-6,
        "eigen_tol": 1e-8,
        "discriminant_tol": 1e-10,
        "rational_approx_denominator": 1000000000000,
    },
    "runtime": {"threads": 1, "log_level": "WARNING"},
}


def load_config(config_path: str) -> Dict[str, Any]:
    """
    Load and validate configuration from TOML file

    Args:
        config_path: Path to config file

    Returns:
        Validated configuration dictionary
    """
    try:
        with open(config_path, "r") as f:
            config = toml.load(f)

        for section, fields in REQUIRED_FIELDS.items():
            if section not in config:
                raise ValueError(f"Missing required section '{section}' in config")
            for field in fields:
                if field not in config[section]:
                    raise ValueError(f"Missing required field '{field}' in {section} config")

        if config["runtime"]["threads"] < 1:
            raise ValueError("runtime.threads must be at least 1")
        if config["search"]["epsilon"] <= 0:
            raise ValueError("search.epsilon must be positive")

        logger.info("Configuration loaded and validated successfully")
        return config

    except Exception as e:
        logger.error(f"Error loading config: {str(e)}")
        raise


def default_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Packaged defaults: the config file when present, otherwise the built-in values"""
    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if path.exists():
        return load_config(str(path))
    logger.debug(f"No config file at {path}; using built-in defaults")
    return copy.deepcopy(BUILTIN_DEFAULTS)
