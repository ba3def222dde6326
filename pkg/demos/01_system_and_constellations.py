"""A tour of the signal model: alphabets, channels, and the search radius.

Run:  python3 demos/01_system_and_constellations.py
"""

import numpy as np

from mimodec import (generate_instance, initial_radius_sq, make_constellation,
                     noise_variance)

# Every supported alphabet is normalized to unit mean symbol energy and
# carries Gray-coded bit labels, so bit error rates are comparable across
# modulations.
for kind in ("bpsk", "qpsk", "qam16", "qam64"):
    c = make_constellation(kind)
    energy = np.mean(np.abs(c.points) ** 2)
    print(f"{kind:>6}: {c.size:3d} points, {c.bits_per_symbol} bits/symbol, "
          f"mean energy {energy:.12f}")
    if kind == "qpsk":
        for p, lab in zip(c.points, c.bit_labels):
            print(f"         {p:+.3f}  <-> bits {lab}")

# Instances are reproducible from a single integer seed: the channel is
# i.i.d. Rayleigh, symbols uniform, and the noise variance follows the SNR.
c = make_constellation("qam16")
inst = generate_instance(4, 4, c, snr_db=12.0, rng=7)
again = generate_instance(4, 4, c, snr_db=12.0, rng=7)
assert np.array_equal(inst.y, again.y)
print("\n4x4 instance at 12 dB (seed 7):")
print("  sent symbol indices:", inst.s_true)
print("  received vector    :", np.round(inst.y, 3))
print("  noise variance     :", noise_variance(12.0))

# The default squared search radius shrinks exponentially with SNR and grows
# with the antenna counts; it equals M times the expected squared noise norm.
print("\ndefault squared radius, 16x16 system:")
for snr in (0, 10, 20, 30):
    print(f"  {snr:>3} dB -> r^2 = {initial_radius_sq(16, 16, snr):.4f}")
