#!/usr/bin/env python3
"""
Reference Table Generator
Writes closed-form reference tables (τ^p boundary profiles, the Cyl^p identity GH
bound, ω_N and the n → ∞ limits of v) as CSV files for plotting and regression checks.
"""

import argparse
import csv
import io
import os
import sys

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from tools.artifacts import ArtifactWriter
from tools.core import format_p, format_real, parse_p
from tools.gh import gh_identity_upper_cyl
from tools.hausdorff import Classification, omega_n, v_limit_in_n
from tools.lp_spaces import lorentz_norm_array

DEFAULT_P_GRID = "1,1.25,1.5,2,3,4,8,16,inf"


def _table(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def boundary_profile_table(exponents, samples: int) -> str:
    """τ^p((0,0), (1, φ)) = (1 − φ^p)^{1/p} on an even φ grid."""
    phis = np.linspace(0.0, 1.0, samples + 1)
    rows = []
    for p in exponents:
        values = lorentz_norm_array(np.ones_like(phis), phis, p)
        rows.extend([format_p(p), format_real(phi), format_real(v)] for phi, v in zip(phis, values))
    return _table(["p", "phi", "tau"], rows)


def identity_bound_table(exponents) -> str:
    rows = [[format_p(p), format_p(q), format_real(gh_identity_upper_cyl(p, q))]
            for p in exponents for q in exponents]
    return _table(["p", "q", "gh_identity_upper"], rows)


def omega_table(dimensions) -> str:
    return _table(["N", "omega_N"], [[format_real(n), format_real(omega_n(n))] for n in dimensions])


def v_limit_table(exponents, dimensions) -> str:
    rows = []
    for p in exponents:
        if not isinstance(p, float):
            continue
        for d in dimensions:
            limit = v_limit_in_n(p, d)
            value = format_real(limit.value) if limit.kind is Classification.FINITE else ""
            rows.append([format_p(p), format_real(d), limit.kind.value, value])
    return _table(["p", "d", "classification", "value"], rows)


def main():
    parser = argparse.ArgumentParser(
        description="Reference Tables - closed-form values for regression comparison"
    )
    parser.add_argument(
        "--p-grid",
        default=DEFAULT_P_GRID,
        help=f"Comma-separated exponents (default: {DEFAULT_P_GRID})"
    )
    parser.add_argument(
        "--samples",
        type=int,
        default=64,
        help="φ subdivisions of the boundary profile (default: 64)"
    )
    parser.add_argument(
        "--output-dir",
        default="reference_tables",
        help="Directory for the CSV files (default: reference_tables)"
    )
    args = parser.parse_args()

    exponents = [parse_p(item) for item in args.p_grid.split(",") if item.strip()]
    writer = ArtifactWriter(args.output_dir)
    tables = {
        "boundary_profile.csv": boundary_profile_table(exponents, args.samples),
        "gh_identity_upper.csv": identity_bound_table(exponents),
        "omega_n.csv": omega_table([0.5, 1.0, 1.5, 2.0, 3.0, 4.0]),
        "v_limits.csv": v_limit_table(exponents, [1.0, 1.5, 2.0, 3.0, 4.0]),
    }
    for name, body in tables.items():
        path = writer.write_text(name, body)
        print(f"✓ {path}")


if __name__ == "__main__":
    main()
