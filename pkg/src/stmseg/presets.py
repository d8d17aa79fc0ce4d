"""Named parameter sets for reference STM images.

Cartoon presets carry both time steps: ``dt`` (used by the local model)
and ``dt_plain`` (the step for the plain multiphase model, ``beta = 0``).  Texture
presets set the spectrum percentile, the number of clusters and the
clustering MBO step.
"""
from .errors import InvalidParameterError

MU_UNIT = 255.0**2


def _cartoon(lam, mu, beta, dt_plain, dt_local):
    return {"cartoon": {"lam": lam, "mu": mu * MU_UNIT, "beta": beta, "dt": dt_local},
            "dt_plain": dt_plain}


def _texture(p, k, dt):
    return {"detection": {"p": p}, "kmeans": {"k": k}, "mbo": {"dt": dt}}


PRESETS = {
    "fig8a": _cartoon(10, 1e-3, 10, 0.75, 3.2),
    "fig8b": _cartoon(10, 1e-3, 300, 4, 4),
    "fig8c": _cartoon(10, 1e-3, 60, 2, 2),
    "fig8d": _cartoon(10, 1e-3, 10, 2.5, 2),
    "fig9a": _cartoon(5, 1e-1, 70, 0.35, 0.10),
    "fig9b": _cartoon(10, 1e-2, 30, 0.1, 6.5),
    "fig9c": _cartoon(7, 1e-4, 65, 5, 18),
    "fig9d": _cartoon(5, 1e-4, 50, 12, 0.6),
    "fig10a": _texture(0.92, 5, 0.03),
    "fig10b": _texture(0.995, 2, 0.10),
    "fig10c": _texture(0.988, 2, 0.05),
    "fig10d": _texture(0.85, 3, 0.05),
    "fig11a": _texture(0.9515, 5, 0.10),
    # Step 0.10 here is the clustering MBO step like in the other sets.
    "fig11b": _texture(0.45, 4, 0.10),
    "fig11c": _texture(0.85, 2, 0.05),
    "fig11d": _texture(0.725, 4, 0.05),
}


def get_preset(name):
    """Return a fresh copy of preset ``name`` as nested override dicts."""
    if name not in PRESETS:
        raise InvalidParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return {key: dict(val) if isinstance(val, dict) else val
            for key, val in PRESETS[name].items()}
