"""Reference moments of the rescaled largest GUE eigenvalue.

Samples the largest eigenvalue of N x N GUE matrices through the tridiagonal
model of Dumitriu and Edelman (beta = 2), which has exactly the GUE eigenvalue
law, and records mean and variance of u = N^(1/6) (lambda_max - 2 sqrt(N)).
The matrices have unit off-diagonal variance, so the edge sits at 2 sqrt(N).

    python3 scripts/tracy_widom_oracle.py --draws 100000 --out src/rmcurve/data/tracy_widom_gue.json
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal


def largest_eigenvalue(n: int, rng: np.random.Generator) -> float:
    beta = 2
    diag = rng.normal(0.0, math.sqrt(2.0), n) / math.sqrt(beta)
    dof = beta * np.arange(n - 1, 0, -1)
    off = np.sqrt(rng.chisquare(dof)) / math.sqrt(beta)
    return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(n - 1, n - 1))[0])


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--draws", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=20240611)
    parser.add_argument("--out", type=Path, default=Path("src/rmcurve/data/tracy_widom_gue.json"))
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    u = np.array([largest_eigenvalue(args.n, rng) for _ in range(args.draws)])
    u = args.n ** (1.0 / 6.0) * (u - 2.0 * math.sqrt(args.n))
    var = float(u.var(ddof=1))
    m4 = float(np.mean((u - u.mean()) ** 4))
    record = {
        "ensemble": "GUE (beta = 2 tridiagonal model)",
        "statistic": "N^(1/6) (lambda_max - 2 sqrt(N))",
        "N": args.n,
        "draws": args.draws,
        "seed": args.seed,
        "mean": float(u.mean()),
        "mean_se": math.sqrt(var / args.draws),
        "var": var,
        "var_se": math.sqrt(max(m4 - var**2, 0.0) / args.draws),
        "quantiles": {str(q): float(np.quantile(u, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)},
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(record, indent=2))


if __name__ == "__main__":
    main()
