"""Dataset bundles and result files."""

from app.store.datasets import DatasetBundle, config_hash, read_bundle, read_manifest, write_bundle
from app.store.results import read_table, write_gnuplot, write_result_manifest, write_table

__all__ = [
    "DatasetBundle",
    "config_hash",
    "read_bundle",
    "read_manifest",
    "write_bundle",
    "read_table",
    "write_gnuplot",
    "write_result_manifest",
    "write_table",
]
