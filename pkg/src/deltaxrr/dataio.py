"""Text serialization of curves, scans, configs, and run manifests.

Curve files are plain text: ``#`` header lines with ``key: value`` pairs,
then whitespace-separated numeric columns.  The header must declare the
abscissa convention explicitly (``abscissa: q_nm^-1`` or
``abscissa: theta_deg``); nothing is ever guessed from the numbers.  All
floats are written in a fixed exponential format so identical inputs
produce byte-identical files.

Run manifests are JSON with sorted keys.  Their timestamp honors the
``SOURCE_DATE_EPOCH`` environment variable (seconds since the epoch) so
that archival reruns can be byte-identical; without it, wall-clock UTC is
recorded.
"""

import hashlib
import json
import os
import time

import numpy as np

from .errors import ConfigError, OutputError, ParseError
from .forward import EnergyScan, ReflectivityCurve, q_from_theta

ABSCISSA_Q = "q_nm^-1"
ABSCISSA_THETA = "theta_deg"
ABSCISSA_ENERGY = "energy_ev"

_FLOAT_FMT = "%.9e"


def _format_row(values):
    return " ".join(_FLOAT_FMT % v for v in values)


def write_curve(path, curve, extra_header=None):
    """Write a reflectivity curve with its declaring header."""
    lines = ["# reflectivity curve"]
    lines.append("# energy_ev: %s" % (_FLOAT_FMT % curve.energy_ev))
    lines.append("# abscissa: %s" % ABSCISSA_Q)
    for key, value in sorted((extra_header or {}).items()):
        lines.append("# %s: %s" % (key, value))
    cols = "q r" + (" sigma_r" if curve.sigma_r is not None else "")
    lines.append("# columns: %s" % cols)
    for i in range(curve.q.size):
        row = [curve.q[i], curve.r[i]]
        if curve.sigma_r is not None:
            row.append(curve.sigma_r[i])
        lines.append(_format_row(row))
    _write_text(path, "\n".join(lines) + "\n")


def write_scan(path, scan, extra_header=None):
    """Write a fixed-angle energy scan."""
    lines = ["# energy scan"]
    lines.append("# theta_deg: %s" % (_FLOAT_FMT % scan.theta_deg))
    lines.append("# abscissa: %s" % ABSCISSA_ENERGY)
    lines.append("# normalized: %s" % ("yes" if scan.normalized else "no"))
    for key, value in sorted((extra_header or {}).items()):
        lines.append("# %s: %s" % (key, value))
    lines.append("# columns: energy_ev r")
    for i in range(scan.energies_ev.size):
        lines.append(_format_row([scan.energies_ev[i], scan.r[i]]))
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError("cannot write %s: %s" % (path, exc))


def _parse_header_and_rows(path, n_cols_allowed):
    if not os.path.exists(path):
        raise ConfigError("input file not found: %s" % path)
    header = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if ":" in body:
                    key, _, value = body.partition(":")
                    header[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) not in n_cols_allowed:
                raise ParseError(
                    "expected %s numeric columns, got %d"
                    % (" or ".join(map(str, sorted(n_cols_allowed))),
                       len(parts)),
                    line=lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError("non-numeric value in %r" % line, line=lineno)
    if not rows:
        raise ParseError("no data rows in %s" % path, line=1)
    return header, rows


def read_curve(path):
    """Read a reflectivity curve; the header must declare the abscissa."""
    header, rows = _parse_header_and_rows(path, n_cols_allowed={2, 3})
    if "abscissa" not in header:
        raise ConfigError(
            "%s: header must declare 'abscissa: %s' or 'abscissa: %s'"
            % (path, ABSCISSA_Q, ABSCISSA_THETA))
    abscissa = header["abscissa"]
    if abscissa not in (ABSCISSA_Q, ABSCISSA_THETA):
        raise ConfigError("%s: unknown abscissa %r" % (path, abscissa))
    if "energy_ev" not in header:
        raise ConfigError("%s: header must declare the photon energy" % path)
    try:
        energy = float(header["energy_ev"])
    except ValueError:
        raise ConfigError("%s: energy_ev is not a number" % path)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError("inconsistent column count in %s" % path,
                         line=None)
    data = np.array(rows, dtype=float)
    if abscissa == ABSCISSA_THETA:
        theta = data[:, 0]
        q = q_from_theta(theta, energy)
    else:
        theta = None
        q = data[:, 0]
    sigma = data[:, 2] if data.shape[1] == 3 else None
    return ReflectivityCurve(q=q, r=data[:, 1], energy_ev=energy,
                             sigma_r=sigma, theta_deg=theta)


def read_scan(path):
    """Read a fixed-angle energy scan."""
    header, rows = _parse_header_and_rows(path, n_cols_allowed={2})
    if header.get("abscissa") != ABSCISSA_ENERGY:
        raise ConfigError(
            "%s: header must declare 'abscissa: %s'" % (path, ABSCISSA_ENERGY))
    if "theta_deg" not in header:
        raise ConfigError("%s: header must declare theta_deg" % path)
    try:
        theta = float(header["theta_deg"])
    except ValueError:
        raise ConfigError("%s: theta_deg is not a number" % path)
    data = np.array(rows, dtype=float)
    normalized = header.get("normalized", "yes") == "yes"
    return EnergyScan(theta_deg=theta, energies_ev=data[:, 0], r=data[:, 1],
                      normalized=normalized)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_timestamp():
    """UTC timestamp string; ``SOURCE_DATE_EPOCH`` pins it for reproducibility."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def build_manifest(command, inputs, config, tables, seed, version):
    """Assemble the run manifest dictionary (sorted-key JSON on disk)."""
    return {
        "command": list(command),
        "config": config,
        "created": manifest_timestamp(),
        "inputs": {str(k): file_sha256(k) for k in inputs},
        "seed": seed,
        "tables": {k: file_sha256(v) for k, v in tables.items()},
        "version": version,
    }


def write_manifest(path, manifest):
    _write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


_CONFIG_SCHEMA = {
    "window": (list, tuple),
    "cutoff_nm": (int, float, type(None)),
    "energies": (dict,),
    "seed": (int,),
    "i0": (int, float, type(None)),
    "theta_deg": (int, float),
    "tables_dir": (str, type(None)),
    "solver": (str,),
}

_ENERGIES_SCHEMA = {
    "below": (int, float),
    "above": (int, float),
}

DEFAULT_CONFIG = {
    "window": [1.5, 5.0],
    "cutoff_nm": None,
    "energies": {"below": 1300.0, "above": 1335.0},
    "seed": 0,
    "i0": None,
    "theta_deg": 10.0,
    "tables_dir": None,
    "solver": "lm",
}


def load_config(path=None):
    """Load and validate a JSON config, naming the offending key on error."""
    config = {k: (dict(v) if isinstance(v, dict) else v)
              for k, v in DEFAULT_CONFIG.items()}
    if path is None:
        return config
    if not os.path.exists(path):
        raise ConfigError("config file not found: %s" % path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("config %s is not valid JSON: %s" % (path, exc),
                         line=exc.lineno)
    if not isinstance(loaded, dict):
        raise ConfigError("config root must be an object")
    for key, value in loaded.items():
        if key not in _CONFIG_SCHEMA:
            raise ConfigError("config key '%s' is not recognized" % key)
        if not isinstance(value, _CONFIG_SCHEMA[key]):
            raise ConfigError("config key '%s' has the wrong type" % key)
        if key == "window":
            if (len(value) != 2
                    or not all(isinstance(v, (int, float)) for v in value)):
                raise ConfigError(
                    "config key 'window' must be two numbers")
            if not float(value[0]) < float(value[1]):
                raise ConfigError(
                    "config key 'window' must be increasing")
        if key == "energies":
            for sub, subval in value.items():
                if sub not in _ENERGIES_SCHEMA:
                    raise ConfigError(
                        "config key 'energies.%s' is not recognized" % sub)
                if not isinstance(subval, _ENERGIES_SCHEMA[sub]):
                    raise ConfigError(
                        "config key 'energies.%s' has the wrong type" % sub)
        if key == "seed" and isinstance(value, bool):
            raise ConfigError("config key 'seed' has the wrong type")
        config[key] = value
    if config["solver"] != "lm":
        raise ConfigError("config key 'solver' must be 'lm'")
    return config
