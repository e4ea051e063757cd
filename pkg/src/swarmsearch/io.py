"""Configuration parsing, result serialization, frame dumps, and manifests.

Config files are JSON.  A simulation config is a flat object of SimConfig
keys; a sweep spec is {"base": {...}, "axes": {...}, "replicates": N,
"base_seed": S}.  Summaries are written twice: a delimited table for eyes and
a structured JSON twin that reloads to an equal in-memory result.  Every run
directory gets a manifest (written last) listing each emitted file with its
checksum, so any persisted run can be re-derived and verified byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .behavior import STATE_NAMES
from .engine import EventLog, SimConfig
from .experiments import BatchStats, InstanceResult, SweepResult, SweepSpec

SCHEMA_VERSION = 1

_CONFIG_KEYS = {f.name for f in dataclasses.fields(SimConfig)}
_SWEEP_KEYS = {"base", "axes", "replicates", "base_seed"}


class ConfigError(ValueError):
    """A config file failed validation; the message names the offender."""


class RecordingDisabledError(RuntimeError):
    """Frames were requested from a run without trajectory recording."""


def parse_config(text: str) -> Union[SimConfig, SweepSpec]:
    """Parse a JSON config into a SimConfig or (if it has axes) a SweepSpec.

    Missing keys fall back to the standard fixed parameters.  Unknown keys
    and out-of-range values raise ConfigError naming the key.  A simulation
    config may omit `seed`; running it then requires a seed from the caller
    (the CLI's --seed flag).
    """
    text = text.strip()
    data = {} if not text else json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    if _SWEEP_KEYS & set(data):
        return _parse_sweep(data)
    return _parse_sim(data)


def _parse_sim(data: dict) -> SimConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]!r}")
    try:
        return SimConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse_sweep(data: dict) -> SweepSpec:
    unknown = set(data) - _SWEEP_KEYS
    if unknown:
        raise ConfigError(f"unknown sweep key: {sorted(unknown)[0]!r}")
    if "base_seed" not in data:
        raise ConfigError("missing required key: 'base_seed'")
    if "axes" not in data or not isinstance(data["axes"], dict):
        raise ConfigError("missing required key: 'axes'")
    base = _parse_sim(data.get("base", {}))
    if base.seed is None:
        base = base.replace(seed=0)  # replicate seeds derive from base_seed
    try:
        return SweepSpec(base=base, axes=data["axes"],
                         replicates=int(data.get("replicates", 1)),
                         base_seed=int(data["base_seed"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(config: Union[SimConfig, SweepSpec]) -> str:
    """Canonical JSON for a config; parse(serialize(c)) == c."""
    if isinstance(config, SweepSpec):
        payload = {
            "base": _sim_dict(config.base),
            "axes": config.axes,
            "replicates": config.replicates,
            "base_seed": config.base_seed,
        }
    else:
        payload = _sim_dict(config)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _sim_dict(config: SimConfig) -> dict:
    out = dataclasses.asdict(config)
    return {k: v for k, v in out.items() if v is not None}


# ---------------------------------------------------------------------------
# Summary tables.
# ---------------------------------------------------------------------------

_PARAM_COLUMNS = ("n", "t", "side_length", "v", "c_f", "r_t", "r_s",
                  "r1_frac", "r2_frac", "rho", "sigma")
_STAT_COLUMNS = ("replicates", "complete_replicates", "s_avg_mean",
                 "s_avg_std", "pooled_agent_std", "first_find_mean",
                 "normalized", "f_count_mean", "c_comp_star_mean",
                 "c_prop_mean", "g_size_mean", "censoring_rate",
                 "lock_transitions")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_summary(result: SweepResult, path) -> Path:
    """Write the per-instance table plus its structured JSON twin.

    One row per instance: every parameter of the instance's config, then the
    aggregate statistics (times in seconds).  The twin at <path>.json reloads
    via read_summary to an equal SweepResult.
    """
    path = Path(path)
    header = list(_PARAM_COLUMNS) + list(_STAT_COLUMNS)
    lines = ["\t".join(header)]
    for row in result.rows:
        cfg = result.spec.base.replace(**row.params)
        record = row.stats.summary_row()
        record["normalized"] = row.normalized
        cells = [_fmt(getattr(cfg, c)) for c in _PARAM_COLUMNS]
        cells += [_fmt(record.get(c)) for c in _STAT_COLUMNS]
        lines.append("\t".join(cells))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    twin = path.with_suffix(path.suffix + ".json")
    twin.write_text(_summary_json(result))
    return path


def _summary_json(result: SweepResult) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "spec": {
            "base": _sim_dict(result.spec.base),
            "axes": result.spec.axes,
            "replicates": result.spec.replicates,
            "base_seed": result.spec.base_seed,
        },
        "rows": [{
            "params": row.params,
            "normalized": row.normalized,
            "instance_index": row.stats.instance_index,
            "censored_agents": row.stats.censored_agents,
            "total_agents": row.stats.total_agents,
            "lock_transitions": row.stats.lock_transitions,
            "pooled_sum": row.stats.pooled_sum,
            "pooled_sum_sq": row.stats.pooled_sum_sq,
            "pooled_count": row.stats.pooled_count,
            "s_avg_values": _float_list(row.stats.s_avg_values),
            "first_find_values": _float_list(row.stats.first_find_values),
            "f_count_values": _float_list(row.stats.f_count_values),
            "c_comp_star_values": _float_list(row.stats.c_comp_star_values),
            "c_prop_values": _float_list(row.stats.c_prop_values),
            "n_ticks_values": [int(v) for v in row.stats.n_ticks_values],
        } for row in result.rows],
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _float_list(arr) -> list:
    return [None if np.isnan(v) else float(v) for v in np.asarray(arr, np.float64)]


def _float_array(values) -> np.ndarray:
    return np.array([np.nan if v is None else float(v) for v in values],
                    np.float64)


def read_summary(path) -> SweepResult:
    """Reload the structured twin written by write_summary."""
    data = json.loads(Path(path).read_text())
    spec_d = data["spec"]
    spec = SweepSpec(base=_parse_sim(spec_d["base"]), axes=spec_d["axes"],
                     replicates=spec_d["replicates"],
                     base_seed=spec_d["base_seed"])
    rows = []
    for rec in data["rows"]:
        cfg = spec.base.replace(**rec["params"])
        stats = BatchStats(
            config=cfg, replicates=spec.replicates, base_seed=spec.base_seed,
            instance_index=rec["instance_index"],
            s_avg_values=_float_array(rec["s_avg_values"]),
            first_find_values=_float_array(rec["first_find_values"]),
            f_count_values=_float_array(rec["f_count_values"]),
            c_comp_star_values=_float_array(rec["c_comp_star_values"]),
            c_prop_values=_float_array(rec["c_prop_values"]),
            n_ticks_values=np.array(rec["n_ticks_values"], np.int64),
            censored_agents=rec["censored_agents"],
            total_agents=rec["total_agents"],
            lock_transitions=rec["lock_transitions"],
            pooled_sum=rec["pooled_sum"],
            pooled_sum_sq=rec["pooled_sum_sq"],
            pooled_count=rec["pooled_count"])
        rows.append(InstanceResult(params=rec["params"], stats=stats,
                                   normalized=rec["normalized"]))
    return SweepResult(spec=spec, rows=rows)


def sweep_results_equal(a: SweepResult, b: SweepResult) -> bool:
    """Field-by-field equality of two sweep results (NaN-aware)."""
    if (a.spec.axes != b.spec.axes or a.spec.replicates != b.spec.replicates
            or a.spec.base_seed != b.spec.base_seed
            or _sim_dict(a.spec.base) != _sim_dict(b.spec.base)
            or len(a.rows) != len(b.rows)):
        return False
    for ra, rb in zip(a.rows, b.rows):
        if ra.params != rb.params or ra.normalized != rb.normalized:
            return False
        sa, sb = ra.stats, rb.stats
        for name in ("s_avg_values", "first_find_values", "f_count_values",
                     "c_comp_star_values", "c_prop_values"):
            if not np.array_equal(getattr(sa, name), getattr(sb, name),
                                  equal_nan=True):
                return False
        if (not np.array_equal(sa.n_ticks_values, sb.n_ticks_values)
                or sa.censored_agents != sb.censored_agents
                or sa.total_agents != sb.total_agents
                or sa.lock_transitions != sb.lock_transitions
                or sa.pooled_sum != sb.pooled_sum
                or sa.pooled_sum_sq != sb.pooled_sum_sq
                or sa.pooled_count != sb.pooled_count):
            return False
    return True


# ---------------------------------------------------------------------------
# Frame dumps.
# ---------------------------------------------------------------------------


def write_frames(log: EventLog, path) -> Path:
    """Dump per-tick agent records for offline rendering.

    One record per agent per recorded snapshot (including the initial state):
    tick, agent id, x, y, heading in degrees, state tag.  The header carries
    the config and the target positions.
    """
    if log.trajectory is None:
        raise RecordingDisabledError(
            "trajectory recording was not enabled for this run")
    path = Path(path)
    lines = [
        "# swarmsearch frames v%d" % SCHEMA_VERSION,
        "# config: " + json.dumps(_sim_dict(log.config), sort_keys=True),
        "# targets: " + json.dumps([[float(v) for v in t] for t in log.targets]),
        "tick\tagent\tx\ty\theading_deg\tstate",
    ]
    n_snapshots, n, _ = log.trajectory.shape
    for tick in range(n_snapshots):
        for i in range(n):
            x, y, h = log.trajectory[tick, i]
            state = STATE_NAMES[int(log.trajectory_states[tick, i])]
            lines.append(f"{tick}\t{i}\t{x!r}\t{y!r}\t{h!r}\t{state}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_frames(path) -> tuple[SimConfig, np.ndarray, np.ndarray]:
    """Reload a frame dump: (config, targets (t,2), records structured array)."""
    config = None
    targets = np.empty((0, 2))
    records = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config: "):
            config = _parse_sim(json.loads(line[len("# config: "):]))
        elif line.startswith("# targets: "):
            data = json.loads(line[len("# targets: "):])
            targets = np.asarray(data, np.float64).reshape(-1, 2)
        elif line.startswith("#") or line.startswith("tick\t") or not line:
            continue
        else:
            tick, agent, x, y, h, state = line.split("\t")
            records.append((int(tick), int(agent), float(x), float(y),
                            float(h), state))
    arr = np.array(records, dtype=[("tick", np.int64), ("agent", np.int64),
                                   ("x", np.float64), ("y", np.float64),
                                   ("heading_deg", np.float64),
                                   ("state", "U8")])
    return config, targets, arr


# ---------------------------------------------------------------------------
# Run manifests.
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    """Commit marker for a run directory: config digest, seed, outputs."""

    config_sha256: str
    code_version: str
    base_seed: Optional[int]
    timestamp: str
    files: dict[str, str]  # relative path -> sha256


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(out_dir, config_text: str, base_seed: Optional[int],
                   files) -> Path:
    """Hash every output file and write manifest.json last."""
    from .experiments import code_fingerprint
    out_dir = Path(out_dir)
    entries = {}
    for f in files:
        f = Path(f)
        entries[str(f.relative_to(out_dir))] = _sha256(f)
    manifest = RunManifest(
        config_sha256=hashlib.sha256(config_text.encode()).hexdigest(),
        code_version=code_fingerprint(),
        base_seed=base_seed,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        files=entries)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(dataclasses.asdict(manifest), indent=2,
                               sort_keys=True) + "\n")
    return path


def verify_manifest(out_dir) -> list[str]:
    """Re-hash the files listed in a manifest; returns mismatched paths."""
    out_dir = Path(out_dir)
    data = json.loads((out_dir / "manifest.json").read_text())
    bad = []
    for rel, digest in data["files"].items():
        target = out_dir / rel
        if not target.exists() or _sha256(target) != digest:
            bad.append(rel)
    return bad
