#!/usr/bin/env python3
"""Writes the small two-channel dataset under data/synthetic.

16 biological samples (4 tissues x 2 types x 2), each hybridized twice with
the dyes swapped, on a 2x2 grid of 6x6 print-tip blocks. Spot intensities
carry an intensity-dependent dye bias and a per-block offset so that the
normalization steps have something to remove.
"""
import argparse
import os

import numpy as np

GRID_R, GRID_C, TIP_R, TIP_C = 2, 2, 6, 6
N_SPOTS = GRID_R * GRID_C * TIP_R * TIP_C
N_CONTROLS = 8
N_GENES = (N_SPOTS - N_CONTROLS) // 2
TISSUES = ["Colon", "Liver", "Lung", "Skin"]
TYPES = ["Normal", "Tumor"]


def gene_name(g):
    return "G%03d" % (g + 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "synthetic"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)

    # Every gene is printed twice; controls and genes are scattered over the
    # blocks.
    spot_gene = [None] * N_CONTROLS + [g for g in range(N_GENES)] * 2
    spot_gene = [spot_gene[i] for i in rng.permutation(N_SPOTS)]
    with open(os.path.join(args.out, "genes.txt"), "w") as f:
        f.write("GeneName\tSpotType\n")
        for s in spot_gene:
            if s is None:
                f.write("Control\tcontrol\n")
            else:
                f.write("%s\tgene\n" % gene_name(s))

    samples = []
    for t in TISSUES:
        for ty in TYPES:
            for rep in range(2):
                samples.append(("%s_%s_%d" % (t, ty, rep + 1), t, ty))

    base = rng.normal(10.0, 1.6, N_GENES)
    # True log-ratios: a type effect on G001-G010, a tissue effect on
    # G011-G020, and a co-expressed module G021-G028 driven by a shared factor
    # whose sign flips in tumors.
    truth = {}
    for name, tissue, ty in samples:
        w = rng.normal(0.0, 0.25, N_GENES)
        if ty == "Tumor":
            w[:10] += 1.5
        w[10:20] += 0.6 * TISSUES.index(tissue) - 0.9
        factor = rng.normal(0.0, 0.8)
        w[20:24] += factor
        w[24:28] += factor if ty == "Normal" else -factor
        truth[name] = w

    chips = []
    for name, tissue, ty in samples:
        chips.append((name + "_a", "ch1", name, tissue, ty))
        chips.append((name + "_b", "ch2", name, tissue, ty))

    block_offset = rng.normal(0.0, 0.2, (len(chips), GRID_R * GRID_C))
    with open(os.path.join(args.out, "samples.txt"), "w") as f:
        f.write("fileName\tinterestChannel\tSample\tTissue\tType\n")
        for c, (fname, interest, name, tissue, ty) in enumerate(chips):
            f.write("%s\t%s\t%s\t%s\t%s\n" % (fname, interest, name, tissue, ty))
            rows = []
            for s in range(N_SPOTS):
                g = spot_gene[s]
                a = rng.normal(8.0, 0.4) if g is None else base[g] + rng.normal(0, 0.15)
                w = 0.0 if g is None else truth[name][g]
                block = s // (TIP_R * TIP_C)
                bias = 0.25 * (a - 10.0) + block_offset[c, block]
                w_obs = w + rng.normal(0.0, 0.15)
                sample_int = 2.0 ** (a + w_obs / 2)
                ref_int = 2.0 ** (a - w_obs / 2)
                if interest == "ch1":
                    ch1, ch2 = sample_int, ref_int
                else:
                    ch1, ch2 = ref_int, sample_int
                ch1 *= 2.0 ** (bias / 2)
                ch2 *= 2.0 ** (-bias / 2)
                b1, b2 = rng.uniform(40, 80), rng.uniform(40, 80)
                flag = -50 if rng.random() < 0.01 else 0
                rows.append((ch1 + b1, b1, ch2 + b2, b2, flag))
            with open(os.path.join(args.out, fname + ".txt"), "w") as q:
                q.write("Type=GenePix Results 3\n")
                q.write("Scanner=synthetic\n")
                q.write("Block\tF635 Mean\tB635 Mean\tF532 Mean\tB532 Mean\tFlags\n")
                for s, (f1, bb1, f2, bb2, flag) in enumerate(rows):
                    q.write("%d\t%.1f\t%.1f\t%.1f\t%.1f\t%d\n" % (s // (TIP_R * TIP_C) + 1, f1, bb1, f2, bb2, flag))

    with open(os.path.join(args.out, "synthetic.conf"), "w") as f:
        f.write("# Synthetic two-channel dataset\n")
        f.write('dataDir = "."\n')
        f.write('ext = ".txt"\n')
        f.write('sampleFile = "samples.txt"\n')
        f.write('datasetId = "synthetic"\n')
        f.write('geneMap = "genes.txt"\n')
        f.write('headers = c("F635 Mean", "B635 Mean", "F532 Mean", "B532 Mean", "Flags")\n')
        f.write("skip = 2\n")
        f.write('sep = "\\t"\n')
        f.write("gridR = %d\ngridC = %d\nprintTipR = %d\nprintTipC = %d\n" % (GRID_R, GRID_C, TIP_R, TIP_C))

    with open(os.path.join(args.out, "type_genes.txt"), "w") as f:
        f.write("# genes with a type effect\n")
        for g in range(10):
            f.write(gene_name(g) + "\n")
    with open(os.path.join(args.out, "tissue_genes.txt"), "w") as f:
        for g in range(10, 20):
            f.write(gene_name(g) + "\n")
    with open(os.path.join(args.out, "module_genes.txt"), "w") as f:
        for g in range(20, 28):
            f.write(gene_name(g) + "\n")
    with open(os.path.join(args.out, "background_genes.txt"), "w") as f:
        for g in range(40, 50):
            f.write(gene_name(g) + "\n")
    with open(os.path.join(args.out, "module_net.txt"), "w") as f:
        for a in range(20, 28):
            for b in range(a + 1, 28):
                f.write("%s\t%s\n" % (gene_name(a), gene_name(b)))
    with open(os.path.join(args.out, "background_net.txt"), "w") as f:
        for a in range(40, 45):
            f.write("%s %s\n" % (gene_name(a), gene_name(a + 5)))


if __name__ == "__main__":
    main()
