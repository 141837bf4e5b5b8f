#!/usr/bin/env python3
"""Write the built-in template meshes and their library.json manifest.

Usage: python scripts/make_templates.py [--detail tiny|normal|fine] [--out DIR]
"""

import argparse
from pathlib import Path

from forestgen import stl, templates


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--detail", choices=templates.DETAIL_PRESETS, default="normal")
    parser.add_argument("--out", default="out/templates")
    parser.add_argument("--format", choices=("binary", "ascii"), default="binary")
    args = parser.parse_args()

    lib = templates.default_library(args.detail)
    manifest = stl.save_library(lib, Path(args.out), args.format)
    print(f"library manifest: {manifest}")
    for role in stl.LIBRARY_ROLES:
        mesh = lib.template(role)
        stats = stl.mesh_stats(mesh)
        print(f"  {role:11s} triangles={stats.triangle_count:5d} "
              f"extent={lib.extent(role):.3f} area={stats.total_area:.4f}")


if __name__ == "__main__":
    main()
