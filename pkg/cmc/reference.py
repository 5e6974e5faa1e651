"""Example data: a 6-class yearly rating transition matrix (rows rounded to 4 digits) and sector labels."""
import numpy as np  # type: ignore

EXAMPLE_MATRIX = np.array(
    [
        [0.9191, 0.0753, 0.0044, 0.0009, 0.0001, 0.0001],
        [0.0335, 0.8958, 0.0657, 0.0036, 0.0006, 0.0009],
        [0.0080, 0.0674, 0.8554, 0.0665, 0.0011, 0.0016],
        [0.0039, 0.0092, 0.0794, 0.8678, 0.0244, 0.0153],
        [0.0023, 0.0034, 0.0045, 0.1759, 0.6009, 0.2131],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
)
EXAMPLE_MATRIX.setflags(write=False)

SECTOR_LABELS = [
    "Mining and Construction",
    "Manufacturing",
    "Transportation, Technology and Utility",
    "Trade",
    "Finance",
    "Services",
]


def sector_label(s: int) -> str:
    return SECTOR_LABELS[s - 1] if 1 <= s <= len(SECTOR_LABELS) else f"sector {s}"
