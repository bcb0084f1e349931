"""Read-only plotting scripts for openmctdh run directories.

Each plot consumes the CSV/JSON files written by a run and never recomputes
any dynamics; the only evaluation done here is rendering the static model
curves from the configuration echoed in meta.json.
"""

__version__ = "0.1.0"
