"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set ``VRLAB_FORCE_FALLBACK=1`` to ignore a built extension (used by the
benchmark and the parity tests).
"""

import os

from . import fallback

if os.environ.get("VRLAB_FORCE_FALLBACK", "") == "1":
    kernels = fallback
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = fallback

COMPILED = kernels.COMPILED

ring_kernel = kernels.ring_kernel
ring_stream_sum = kernels.ring_stream_sum
ring_pair_energy = kernels.ring_pair_energy
halfplane_log_sum = kernels.halfplane_log_sum
halfplane_log_grad_sum = kernels.halfplane_log_grad_sum
catmull_rom_2d = kernels.catmull_rom_2d
set_num_threads = kernels.set_num_threads
