"""Numerical tolerances shared by every module.

A single frozen record keeps results reproducible across platforms; pass a
modified copy (``dataclasses.replace``) wherever a function accepts ``tol``.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12        # max |A - A^H| accepted before symmetrization
    eig_residual: float = 1e-9      # relative to ||A||_F
    eig_offdiag: float = 1e-15      # Jacobi stop: off-diagonal norm relative to ||A||_F
    eig_max_sweeps: int = 100
    eig_max_dim: int = 256
    psd_slack: float = 1e-10        # Sigma >= -psd_slack * I and tr(Sigma) <= 1 + psd_slack
    quad_clamp: float = 1e-12       # negative quadratic forms above -quad_clamp become 0
    decode_slack: float = 1e-12     # bits, in favour of decoding
    rate_equal: float = 1e-12       # bits, outer-loop stopping test


DEFAULT_TOLERANCES = Tolerances()
