"""Reference JSON files for every generator preset.

``python -m centralspec.golden`` rewrites them; the test-suite regenerates
each preset and compares against the stored copy.
"""

import sys
from importlib import resources
from pathlib import Path

from .central import (
    CentralConfiguration,
    gen_euler_collinear,
    gen_lagrange_equilateral,
    gen_symmetric_cloud,
)

VERSION = "v1"

PRESETS = {
    "lagrange_equal": lambda: gen_lagrange_equilateral([1.0, 1.0, 1.0]),
    "lagrange_123": lambda: gen_lagrange_equilateral([1.0, 2.0, 3.0]),
    "euler_equal": lambda: gen_euler_collinear([1.0, 1.0, 1.0]),
    "euler_123_012": lambda: gen_euler_collinear([1.0, 2.0, 3.0], (0, 1, 2)),
    "euler_123_102": lambda: gen_euler_collinear([1.0, 2.0, 3.0], (1, 0, 2)),
    "euler_123_021": lambda: gen_euler_collinear([1.0, 2.0, 3.0], (0, 2, 1)),
    **{f"polygon_{n}": (lambda n=n: gen_symmetric_cloud("polygon", 1.0, 1.0, size=n))
       for n in range(3, 13)},
    "polygon_6_light": lambda: gen_symmetric_cloud("polygon", 0.01, 1.0, size=6),
    **{f"cross_polytope_{d}": (lambda d=d: gen_symmetric_cloud("cross_polytope", 1.0, 2.0, size=d))
       for d in (2, 3, 4)},
    **{f"hypercube_{d}": (lambda d=d: gen_symmetric_cloud("hypercube", 1.0, 1.0, size=d))
       for d in (2, 3, 4)},
    "icosahedron": lambda: gen_symmetric_cloud("icosahedron", 1.0, 1.0),
    "icosahedron_bare": lambda: gen_symmetric_cloud("icosahedron", 1.0, 0.0),
    "cuboctahedron": lambda: gen_symmetric_cloud("cuboctahedron", 1.0, 1.0),
}


def golden_dir():
    return Path(str(resources.files("centralspec"))) / "data" / "golden" / VERSION


def load(name) -> CentralConfiguration:
    return CentralConfiguration.load(golden_dir() / f"{name}.json")


def regenerate(directory=None):
    out = Path(directory) if directory else golden_dir()
    out.mkdir(parents=True, exist_ok=True)
    for name, make in PRESETS.items():
        make().save(out / f"{name}.json")
    return out


if __name__ == "__main__":
    print(regenerate(sys.argv[1] if len(sys.argv) > 1 else None))
