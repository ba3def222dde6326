"""Fixed-complexity K-best versus the hybrid SD/K-best decoder.

K-best's work is a pure function of the problem shape: it never looks at the
radius, so its cost is flat across SNR but its accuracy drops on dense
constellations.  The hybrid keeps an exact best-first master search and lets
K-best workers finish the unpromising subtrees, retaining near-exact error
rates at a fraction of the exact search's cost.

Run:  python3 demos/05_kbest_and_hybrid.py   (~60 s)
"""

import numpy as np

from mimodec import (KbestConfig, generate_instance, kbest_decode,
                     make_constellation, preprocess, sd_kbest_decode)

c = make_constellation("qam64")
M = 12
TRIALS = 400
hybrid = KbestConfig(k=4, n_workers=8)

print(f"{M}x{M} 64-QAM, {TRIALS} trials per SNR\n")
print(f"{'snr':>5} {'kbest k=8 SER':>15} {'hybrid k=4 SER':>15} "
      f"{'kbest visited':>14} {'hybrid/thread':>14}")
for snr in (16, 20, 24):
    kb_err = hy_err = 0
    kb_vis = []
    hy_vis = []
    for seed in range(TRIALS):
        inst = generate_instance(M, M, c, snr, seed)
        prob = preprocess(inst)
        kb = kbest_decode(prob, 8)
        kb_err += int((kb.decoded != inst.s_true).sum())
        kb_vis.append(kb.visited_nodes)
        hy = sd_kbest_decode(prob, hybrid, watchdog_s=120)
        if hy.decoded is None:
            hy_err += M
        else:
            hy_err += int((hy.decoded != inst.s_true).sum())
        hy_vis.append(hy.visited_nodes / hy.n_threads)
    n_sym = TRIALS * M
    print(f"{snr:>5} {kb_err / n_sym:>15.5f} {hy_err / n_sym:>15.5f} "
          f"{np.mean(kb_vis):>14.0f} {np.mean(hy_vis):>14.1f}")

print("\nK-best's counters repeat exactly at every SNR; the hybrid's "
      "per-thread work\nshrinks as the radius tightens, while its error rate "
      "stays far below K-best's.")
