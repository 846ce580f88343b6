import logging
from dataclasses import asdict, is_dataclass

import pandas as pd

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "code", "family", "k", "tau_c_s", "one_minus_T", "L_km", "L0_km",
    "F", "F_final", "P0", "P_k", "rate_hz_per_memory",
]
FIDELITY_COLUMNS = ["code", "family", "k", "tau_c_s", "one_minus_T", "L_km", "L0_km", "F", "F_final"]
MONTECARLO_COLUMNS = SWEEP_COLUMNS + [
    "rate_stderr_hz_per_memory", "trials", "blocks", "seed", "rng", "required_blocks",
]
FLOAT_FORMAT = "%.8g"

# SweepResult attribute names that differ from their column names
_RENAMES = {"code_label": "code", "rate_per_memory_hz": "rate_hz_per_memory"}


def result_row(result):
    row = asdict(result) if is_dataclass(result) else dict(result)
    return {_RENAMES.get(key, key): value for key, value in row.items()}


def results_frame(results, columns=SWEEP_COLUMNS):
    return pd.DataFrame([result_row(r) for r in results], columns=columns)


# =========================================
# 1. CSV Output
# =========================================
def emit_csv(results, path=None, columns=SWEEP_COLUMNS):
    """
    Writes result rows as CSV with a fixed column order and 8 significant digits.

    Parameters:
    - results (list): SweepResult rows or mappings with the column keys.
    - path (str | Path | None): Destination file; None returns the text instead.
    - columns (list[str]): Column order.
    Returns:
    - str | None: The CSV text when path is None.
    Raises:
    - RuntimeError: If the file cannot be written.
    """
    frame = results_frame(results, columns)
    try:
        text = frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    except OSError as e:
        logger.error(f"Error writing CSV to {path}: {e}")
        raise RuntimeError(f"Failed to write CSV to {path}")
    if path is not None:
        logger.info(f"Wrote {len(frame)} rows to {path}")
    return text


# =========================================
# 2. Gnuplot Companion
# =========================================
def emit_gnuplot(results, path, columns=SWEEP_COLUMNS):
    """
    Writes the same rows whitespace-separated with a '#' header line.
    """
    frame = results_frame(results, columns)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("# " + " ".join(columns) + "\n")
            frame.to_csv(
                handle, sep=" ", header=False, index=False,
                float_format=FLOAT_FORMAT, na_rep="NaN", lineterminator="\n",
            )
    except OSError as e:
        logger.error(f"Error writing gnuplot data to {path}: {e}")
        raise RuntimeError(f"Failed to write gnuplot data to {path}")
    logger.info(f"Wrote gnuplot companion with {len(frame)} rows to {path}")
