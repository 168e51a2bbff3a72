"""Backend selection for the numerical kernels.

The hot inner loops (mixture tail sums, the level equation for the final
threshold, stage-two quadrature) exist twice: compiled Cython in
``mixtrial._core_cy`` and NumPy in ``mixtrial._core_py``.  The compiled
module is preferred when importable; set ``MIXTRIAL_KERNELS=py`` or ``=cy``
to force a backend.  Both expose the identical function surface and agree
to ~1e-12, which ``tests/test_kernels.py`` checks.
"""
from __future__ import annotations

import os

_force = os.environ.get("MIXTRIAL_KERNELS", "").strip().lower()

if _force in ("py", "python"):
    from . import _core_py as _impl
elif _force in ("cy", "cython"):
    from . import _core_cy as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _core_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _core_py as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.BACKEND

binom_pmf_window = _impl.binom_pmf_window
beta_mix = _impl.beta_mix
beta_mix_pdf = _impl.beta_mix_pdf
solve_eta2 = _impl.solve_eta2
beta2_se_approx = _impl.beta2_se_approx
beta2_se_exact = _impl.beta2_se_exact
beta2_point = _impl.beta2_point
pvalue2 = _impl.pvalue2

__all__ = [
    "BACKEND",
    "binom_pmf_window",
    "beta_mix",
    "beta_mix_pdf",
    "solve_eta2",
    "beta2_se_approx",
    "beta2_se_exact",
    "beta2_point",
    "pvalue2",
]
