"""Post-hoc figure generation for market-sweep outputs.

Operates purely on the harness's emitted files (cells.csv, stylized.csv,
runs.jsonl); never imports the simulator.
"""

from .io import CellTable, SchemaError, load_cells, load_runs
from .plots import KINDS, heatmap, lines, plot, pricepath, stylized

__version__ = "0.1.0"
