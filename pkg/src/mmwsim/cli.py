"""Command-line entry point: run a campaign and write the figure data as CSV.

Exit codes: 0 when every requested output was written, 1 for configuration
errors, 2 for runtime or I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np
import scipy

from .config import DEFAULT_SEED, MODELS, SystemConfig, parse_config, serialize_config
from .errors import ConfigError
from .montecarlo import SCHEMES, CampaignResult, run_campaign
from .scenario import (
    Environment,
    LinkState,
    Model,
    load_pathloss_table,
    los_probability_3gpp,
    los_probability_nyusim,
    mean_path_loss,
    distance_3d,
)

__all__ = ["OUTPUTS", "RunManifest", "emit_outputs", "build_parser", "main"]

log = logging.getLogger(__name__)

OUTPUTS = {
    "los-prob-curves": "los_prob.csv",
    "pathloss-curves": "pathloss.csv",
    "eigen-ratios": "eigen_ratios.csv",
    "eigen-cdfs": "eigen_cdfs.csv",
    "se-cdfs": "se_cdfs.csv",
}
CAMPAIGN_OUTPUTS = frozenset({"eigen-ratios", "eigen-cdfs", "se-cdfs"})
CURVE_DISTANCES = np.arange(1.0, 501.0)


@dataclass
class RunManifest:
    config_path: Optional[str]
    seed: int
    output_dir: Path
    outputs: FrozenSet[str] = field(default_factory=lambda: frozenset(OUTPUTS))

    def __post_init__(self):
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ConfigError(f"unknown outputs: {', '.join(sorted(unknown))}", "outputs")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _los_rows():
    d = CURVE_DISTANCES
    table = load_pathloss_table()
    cols = [d]
    for env in (Environment.UMI, Environment.UMA):
        row = table[(env, LinkState.LOS)]
        cols.append(los_probability_3gpp(d, env))
        cols.append(los_probability_nyusim(d, row.los_d1_m, row.los_d2_m))
    # column order: 3gpp-umi, nyu-umi, 3gpp-uma, nyu-uma
    return zip(*cols)


def _pathloss_rows(config: SystemConfig):
    table = load_pathloss_table(config.pathloss_table or None)
    env = config.environment
    d3d = distance_3d(CURVE_DISTANCES[CURVE_DISTANCES >= config.min_distance_m], env, config.ue_height_m)
    cols = [d3d]
    for model in (Model.THREEGPP, Model.NYUSIM):
        for state in (LinkState.LOS, LinkState.NLOS):
            cols.append(mean_path_loss(model, state, config.carrier_ghz, d3d, table, env, config.breakpoint))
    return zip(*cols)


def _median_ratio_rows(result: CampaignResult):
    models = [m for m in MODELS if m in result.eigenvalues]
    med = {}
    for m in models:
        r = np.median(result.eigen_ratios(m), axis=0)
        med[m] = 10.0 * np.log10(r / r.sum())
    n = len(next(iter(med.values())))
    return models, [[i + 1] + [med[m][i] for m in models] for i in range(n)]


def _eigen_cdf_rows(result: CampaignResult):
    for m in MODELS:
        if m not in result.eigenvalues:
            continue
        for rank in range(1, result.eigenvalues[m].shape[1] + 1):
            for v, f in result.eigen_cdf(m, rank):
                yield 10.0 * np.log10(v) if v > 0 else float("-inf"), f, rank, m


def _se_cdf_rows(result: CampaignResult):
    for m in MODELS:
        for scheme in SCHEMES:
            if (m, scheme) in result.se:
                for v, f in result.se_cdf(m, scheme):
                    yield v, f, m, scheme


def _versions() -> Dict[str, str]:
    try:
        own = metadata.version("mmwsim")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"mmwsim": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def emit_outputs(result: Optional[CampaignResult], manifest: RunManifest,
                 config: Optional[SystemConfig] = None) -> List[Path]:
    """Write the selected CSVs and ``manifest.json`` into ``manifest.output_dir``.

    ``result`` may be ``None`` when only the analytic curves are requested.

    Raises
    ------
    OSError
        If the output directory cannot be created or written.
    """
    config = config or (result.config if result is not None else SystemConfig())
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    sel = manifest.outputs
    if sel & CAMPAIGN_OUTPUTS and result is None:
        raise ValueError("campaign outputs requested without a campaign result")

    if "los-prob-curves" in sel:
        written.append(_write_csv(out / OUTPUTS["los-prob-curves"],
                                  ["distance_m", "p_3gpp_umi", "p_nyu_umi", "p_3gpp_uma", "p_nyu_uma"],
                                  _los_rows()))
    if "pathloss-curves" in sel:
        written.append(_write_csv(out / OUTPUTS["pathloss-curves"],
                                  ["distance_3d_m", "pl_3gpp_los_db", "pl_3gpp_nlos_db",
                                   "pl_nyu_los_db", "pl_nyu_nlos_db"],
                                  _pathloss_rows(config)))
    if "eigen-ratios" in sel:
        models, rows = _median_ratio_rows(result)
        written.append(_write_csv(out / OUTPUTS["eigen-ratios"],
                                  ["index"] + [f"ratio_{m}_db" for m in models], rows))
    if "eigen-cdfs" in sel:
        written.append(_write_csv(out / OUTPUTS["eigen-cdfs"],
                                  ["value_db", "cdf", "rank", "model"], _eigen_cdf_rows(result)))
    if "se-cdfs" in sel:
        written.append(_write_csv(out / OUTPUTS["se-cdfs"],
                                  ["se_bps_per_hz", "cdf", "model", "scheme"], _se_cdf_rows(result)))

    record = {
        "config_path": manifest.config_path,
        "seed": manifest.seed,
        "outputs": sorted(sel),
        "files": [p.name for p in written],
        "config": serialize_config(config),
        "versions": _versions(),
    }
    if result is not None:
        record["cell_radius_m"] = {m: result.radii[m] for m in sorted(result.radii)}
        record["resampled_drops"] = {m: result.resamples[m] for m in sorted(result.resamples)}
        record["los_fraction"] = {m: result.los_fraction[m] for m in sorted(result.los_fraction)}
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(mpath)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwsim", description="mmWave channel-model comparison campaign")
    p.add_argument("--config", metavar="PATH", help="sectioned key = value config file")
    p.add_argument("--seed", type=int, help=f"campaign seed (default {DEFAULT_SEED})")
    p.add_argument("--model", choices=list(MODELS) + ["all"], default=None)
    p.add_argument("--scenario", choices=["umi", "uma"])
    p.add_argument("--drops", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--out", metavar="DIR", default="mmwsim-out")
    p.add_argument("--outputs", metavar="LIST", default=",".join(OUTPUTS),
                   help="comma-separated subset of: " + ", ".join(OUTPUTS))
    p.add_argument("--workers", type=int, help="worker processes (default: MMWSIM_WORKERS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config) if args.config else SystemConfig()
        models = None
        if args.model is not None:
            models = MODELS if args.model == "all" else (args.model,)
        config = config.with_overrides(seed=args.seed, scenario=args.scenario, drops=args.drops,
                                       users=args.users, models=models)
        selected = frozenset(s.strip() for s in args.outputs.split(",") if s.strip())
        manifest = RunManifest(args.config, config.seed, Path(args.out), selected)
    except ConfigError as exc:
        print(f"mmwsim: configuration error: {exc.args[0]}", file=sys.stderr)
        return 1

    try:
        result = run_campaign(config, args.workers) if selected & CAMPAIGN_OUTPUTS else None
        files = emit_outputs(result, manifest, config)
    except ConfigError as exc:
        print(f"mmwsim: configuration error: {exc.args[0]}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"mmwsim: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
