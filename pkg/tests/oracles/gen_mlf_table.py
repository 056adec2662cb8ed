"""Regenerate ``mlf_table.json``: arbitrary-precision Mittag-Leffler reference values.

Each value comes from the power series summed in high precision when the
series is cheap (``|z|^(1/alpha) < 600``), otherwise from Talbot inversion of
the Laplace transform ``s^(alpha-beta) / (s^alpha - z)`` at ``t = 1``. Both
routes are run where they overlap as a cross-check.

Run from the repository root: ``python3 tests/oracles/gen_mlf_table.py``.
"""

from __future__ import annotations

import json
from pathlib import Path

import mpmath

ALPHAS = (0.3, 0.5, 0.7, 0.9)
ZS = tuple(-50.0 + 55.0 * i / 24 for i in range(25))


def series(alpha, beta, z):
    a, b, zz = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
    lost = int(abs(z) ** (1 / alpha) / 2.3) + 40
    with mpmath.workdps(lost):
        return mpmath.nsum(lambda k: zz**k * mpmath.rgamma(a * k + b), [0, mpmath.inf], method="direct", steps=[20000])


def talbot(alpha, beta, z):
    a, b, zz = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
    with mpmath.workdps(60):
        return mpmath.invertlaplace(lambda s: s ** (a - b) / (s**a - zz), 1, method="talbot")


def reference(alpha, beta, z):
    if abs(z) ** (1 / alpha) < 600:
        return series(alpha, beta, z)
    return talbot(alpha, beta, z)


def main():
    rows = []
    for alpha in ALPHAS:
        for beta in (alpha, alpha + 1.0, 1.0):
            for z in ZS:
                v = reference(alpha, beta, z)
                rows.append({"alpha": alpha, "beta": beta, "z": z, "value": mpmath.nstr(v, 25)})
    out = Path(__file__).with_name("mlf_table.json")
    out.write_text(json.dumps(rows, indent=1) + "\n")
    print(f"wrote {len(rows)} values to {out}")


if __name__ == "__main__":
    main()
