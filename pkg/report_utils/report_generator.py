"""
Report Generator Utility
Standalone functions for writing sweep datasets, run manifests and text summaries
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional
import hashlib
import json
import platform

import pandas as pd

import config

FLOAT_FORMAT = '%.10g'


def config_hash(settings: Dict) -> str:
    """
    Stable hash of a run configuration

    Args:
        settings: JSON-serializable configuration (key order does not matter)

    Returns:
        First 16 hex digits of the SHA-256 of the canonical JSON
    """
    canonical = json.dumps(settings, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


def write_dataset(path: Path, rows: List[Dict], columns: Dict[str, str],
                  digest: str, title: str = '') -> Path:
    """
    Write rows as CSV with '#' header comments documenting every column.

    Data files carry no timestamps so identical configurations produce
    byte-identical files.

    Args:
        path: Output CSV path
        rows: One dict per evaluated point (extra keys are ignored)
        columns: Column name -> unit/description, in output order
        digest: Configuration hash
        title: Optional dataset title

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows, columns=list(columns))

    header = [f"# fid-memory dataset, schema version {config.CLI_SETTINGS['csv_schema_version']}"]
    if title:
        header.append(f"# {title}")
    header.append(f"# config_hash: {digest}")
    header.extend(f"# {name}: {description}" for name, description in columns.items())

    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write("\n".join(header) + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def read_dataset(path: Path) -> pd.DataFrame:
    """Load a dataset written by write_dataset"""
    return pd.read_csv(path, comment='#')


def write_manifest(csv_path: Path, settings: Dict, digest: str, resolution: Optional[Dict],
                   flags: List[str], extra: Optional[Dict] = None) -> Path:
    """
    Write `<name>.manifest.json` next to a dataset.

    Returns:
        The manifest path
    """
    csv_path = Path(csv_path)
    manifest_path = csv_path.with_name(csv_path.stem + '.manifest.json')
    manifest = {
        'tool_version': config.CLI_SETTINGS['tool_version'],
        'csv_schema_version': config.CLI_SETTINGS['csv_schema_version'],
        'dataset': csv_path.name,
        'config_hash': digest,
        'config': settings,
        'resolution': resolution,
        'non_convergence': bool(flags),
        'flags': flags,
        'created': datetime.now(timezone.utc).isoformat(timespec='seconds'),
        'python': platform.python_version(),
    }
    if extra:
        manifest.update(extra)
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
    return manifest_path


def write_text_report(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding='utf-8')
    return path


def format_run_summary(mode: str, rows: List[Dict], flags: List[str], outputs: List[Path]) -> str:
    """
    Short terminal summary of a run

    Args:
        mode: Run mode
        rows: Evaluated rows
        flags: Non-convergence messages
        outputs: Files written

    Returns:
        Formatted summary
    """
    succeeded = sum(1 for r in rows if r.get('success', True))
    lines = [
        "=" * 70,
        f"RUN SUMMARY: {mode}",
        "=" * 70,
        f"  Points: {succeeded}/{len(rows)} successful",
    ]
    for output in outputs:
        lines.append(f"  Wrote: {output}")
    if flags:
        lines.append(f"⚠️  {len(flags)} convergence flag(s):")
        lines.extend(f"    - {flag}" for flag in flags[:10])
        if len(flags) > 10:
            lines.append(f"    ... {len(flags) - 10} more in the manifest")
    else:
        lines.append("✅ All points converged")
    return "\n".join(lines)
