"""How the pool discipline drives sphere-decoder complexity.

Breadth-first search cannot tighten the radius until it reaches the leaves,
depth-first tightens it early, and best-first steers straight at good leaves.
All three return the same metric; only the explored-node counts differ.

Run:  python3 demos/02_exploration_strategies.py   (~20 s)
"""

from mimodec import generate_instance, make_constellation, preprocess, sd_decode

M = 14
TRIALS = 60
c = make_constellation("bpsk")

print(f"{M}x{M} BPSK, default radius, {TRIALS} trials per point\n")
print(f"{'snr':>5} {'bfs':>10} {'dfs':>10} {'bestfs':>10}   (mean visited nodes)")
for snr in (0, 6, 12, 18, 24):
    visited = {s: 0 for s in ("bfs", "dfs", "bestfs")}
    dists = set()
    for seed in range(TRIALS):
        inst = generate_instance(M, M, c, snr, seed)
        prob = preprocess(inst)  # radius from the SNR formula
        for strategy in visited:
            rep = sd_decode(prob, strategy)
            visited[strategy] += rep.visited_nodes
            dists.add(round(rep.dist, 9))
    row = {s: v / TRIALS for s, v in visited.items()}
    print(f"{snr:>5} {row['bfs']:>10.1f} {row['dfs']:>10.1f} {row['bestfs']:>10.1f}")

print("\nAt low SNR the radius starts loose: breadth-first pays the full "
      "exponential bill,\nwhile best-first finds a tight incumbent almost "
      "immediately.  At high SNR the\ninitial radius already prunes nearly "
      "everything and the three agree.")
