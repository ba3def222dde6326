"""Monte Carlo campaigns through the library API (the CLI wraps the same calls).

Equivalent shell commands:

    mimodec simulate --tx 8 --rx 8 --mod bpsk --snr 0:12:4 --trials 300 \
            --decoder sd:bestfs --seed 11 --out sd.csv
    mimodec simulate --tx 8 --rx 8 --mod bpsk --snr 0:12:4 --trials 300 \
            --decoder mmse --seed 11 --out mmse.csv
    mimodec compare sd.csv mmse.csv

Run:  python3 demos/06_error_rate_campaign.py   (~30 s)
"""

import tempfile
from pathlib import Path

from mimodec import CampaignConfig, compare_report, run_campaign

outdir = Path(tempfile.mkdtemp(prefix="mimodec_demo_"))
common = dict(m=8, n=8, mod="bpsk", snr_grid=(0.0, 4.0, 8.0, 12.0),
              trials=300, seed=11)

paths = {}
for decoder in ("sd:bestfs", "mmse", "zf"):
    out = outdir / f"{decoder.split(':')[0]}.csv"
    paths[decoder] = out
    print(f"=== {decoder} ===")
    run_campaign(CampaignConfig(decoder=decoder, out=str(out), **common))
    print()

print("=== sphere decoder vs mmse (negative delta = first wins) ===")
print(compare_report(paths["sd:bestfs"], paths["mmse"]))
print("\n=== mmse vs zf ===")
print(compare_report(paths["mmse"], paths["zf"]))
print(f"\nCSV files kept in {outdir}")
