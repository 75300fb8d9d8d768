#!/usr/bin/env python3
"""Bake the parametric film styles to the .cube files shipped with the
package. Rerun after editing camforge.lut.FILM_STYLES."""

from pathlib import Path

from camforge.calibration import load_registry
from camforge.lut import FILM_STYLES, bake_style_lut, write_cube


def main() -> None:
    registry = load_registry()
    out_dir = registry.root / "luts"
    out_dir.mkdir(parents=True, exist_ok=True)
    by_name = {s.name: s for s in FILM_STYLES}
    for name, rel in zip(registry.names, registry.lut_paths):
        lut = bake_style_lut(by_name[name])
        write_cube(lut, registry.root / rel)
        print(f"wrote {rel} ({lut.title})")


if __name__ == "__main__":
    main()
