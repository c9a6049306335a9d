"""
Result files
CSV tables with a commented provenance header and JSON run summaries
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

from phaseprobe import __version__

FLOAT_FORMAT = "%.15g"
SUMMARY_SUFFIX = ".summary.json"


def summary_path(output_dir: Union[str, Path], stem: str) -> Path:
    return Path(output_dir) / f"{stem}{SUMMARY_SUFFIX}"


def build_header(command: str, params: Dict[str, Any], summary_name: str) -> List[str]:
    """
    Provenance lines for every table of one run

    Args:
        command: Subcommand name
        params: Merged configuration of the run
        summary_name: File name of the run summary

    Returns:
        Header lines without the leading '#'
    """
    seeds = {key: value for key, value in params.items() if key == "seed" or key.endswith("_seed")}
    grid = {key: params[key] for key in ("n_grid", "q_points", "q_sigmas") if key in params}
    return [
        f"phaseprobe {__version__}",
        f"command: {command}",
        f"config: {json.dumps(params, sort_keys=True, default=str)}",
        f"seed: {json.dumps(seeds, sort_keys=True) if seeds else 'none'}",
        f"grid: {json.dumps(grid, sort_keys=True)}",
        f"summary: {summary_name}",
    ]


def write_table(path: Union[str, Path], frame: pd.DataFrame, header: Sequence[str]) -> Path:
    """Write a CSV preceded by '#' comment lines"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        for line in header:
            f.write(f"# {line}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    return path


def write_summary(path: Union[str, Path], summary: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a table written by write_table"""
    return pd.read_csv(path, comment="#")
