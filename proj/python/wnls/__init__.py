"""Python access to the wnls lab: configs, epsilon families, noise statistics."""

from ._core import (
    ConfigError,
    IoError,
    NumericalAbort,
    c_eps,
    default_config,
    fit_line,
    lab_main,
    noise_fields,
    noise_stats,
    parse_config,
    parse_eps_list,
    run_family,
    uniqueness,
    version,
)

__version__ = version()


def config(**overrides):
    """Default lab config as a str -> str dict, with keyword overrides applied."""
    cfg = default_config()
    for key, value in overrides.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        cfg[key] = str(value)
    return cfg
