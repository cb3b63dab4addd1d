"""
Report Utils Package
Utility functions for writing datasets, manifests and run reports
"""

from .report_generator import (
    config_hash,
    format_run_summary,
    read_dataset,
    write_dataset,
    write_manifest,
    write_text_report,
)

__all__ = [
    'config_hash',
    'format_run_summary',
    'read_dataset',
    'write_dataset',
    'write_manifest',
    'write_text_report',
]
