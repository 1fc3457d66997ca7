#!/usr/bin/env python3
"""Print the Gram-degeneration table for H = 0 over a decade of grid sizes.

The covariance operator norm saturates near 2*beta/pi while the embedding
norm sqrt(n/(2*beta)) grows like sqrt(n); their product is the per-factor
weight the naive Gram determinant estimate would charge.
"""

import numpy as np

from fermicov.covariance import fit_growth_exponent, gram_norm_demo
from fermicov.spectral import HermitianMatrix
from fermicov.torus import DiscreteTorus

if __name__ == "__main__":
    ns = [4, 8, 16, 32, 64]
    rows, zero_mode = gram_norm_demo(
        HermitianMatrix(np.zeros((1, 1))), [DiscreteTorus(beta=1.0, n=n) for n in ns]
    )
    print(f"zero mode present: {zero_mode}")
    print(f"{'n':>4}  {'cov_norm':>10}  {'embed_norm':>10}  {'gram_factor':>11}")
    for row in rows:
        print(f"{row.n:>4}  {row.cov_norm:>10.6f}  {row.embed_norm:>10.6f}  "
              f"{row.gram_factor:>11.6f}")
    print(f"fitted exponent cov_norm:    "
          f"{fit_growth_exponent(ns, [r.cov_norm for r in rows]):+.4f}")
    print(f"fitted exponent gram_factor: "
          f"{fit_growth_exponent(ns, [r.gram_factor for r in rows]):+.4f}")
    print(f"saturation value 2 beta / pi = {2 / np.pi:.6f}")
