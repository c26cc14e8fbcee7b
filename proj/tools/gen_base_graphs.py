#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
#
# Generates the QC-LDPC base-graph data assets in data/ldpc/.
#
# The graphs follow the NR base-graph layout: BG1 is 46x68 with 22 systematic
# columns, BG2 is 42x52 with 10 systematic columns, the first four rows form
# the core with a dual-diagonal 4x4 parity block, and every extension row
# owns one degree-1 parity column. Row weights are the NR layer sizes. Column
# positions and shift values are drawn from a fixed-seed PRNG; shifts are
# drawn per lifting set (a in {2,3,5,7,9,11,13,15}); a draw is rejected when it
# closes a length-4 cycle at any lifting size >= MIN_CHECKED_Z of that set, and
# among the survivors the one closing the fewest length-6 cycles at lifting
# sizes >= MIN_GIRTH6_Z is kept.
#
# Output format (see docs/formats.md):
#   # comment lines
#   bg <id> rows <R> cols <C> sets 8
#   checksum fnv1a64 <hex over every line after the checksum line>
#   set <i>
#   <row> <col> <shift>          one line per edge, shift in [0, Zmax(set))
#
# Usage: tools/gen_base_graphs.py [outdir]

import random
import sys
from pathlib import Path

SET_BASES = [2, 3, 5, 7, 9, 11, 13, 15]
MAX_Z = 384
MIN_CHECKED_Z = 12
MIN_GIRTH6_Z = 48
CANDIDATES = 400
# Degree bonus for core parity columns when filling extension rows. Left
# at degree 2-3 they carry most residual errors at low rate.
CORE_PARITY_BIAS = -4
SEED = 20240611

BG1_ROW_WEIGHTS = [19, 19, 19, 19, 3, 8, 9, 7, 10, 9, 7, 8, 7, 6, 7, 7, 6, 6, 6, 6,
                   6, 6, 5, 5, 6, 5, 5, 4, 5, 5, 5, 5, 5, 5, 5, 5, 5, 4, 5, 5,
                   4, 5, 4, 5, 5, 4]
BG2_ROW_WEIGHTS = [8, 10, 8, 10, 4, 6, 6, 6, 4, 5, 5, 5, 4, 5, 5, 4, 5, 5, 4, 4,
                   4, 4, 3, 4, 4, 3, 5, 3, 4, 3, 5, 3, 4, 4, 4, 4, 4, 3, 4, 4,
                   4, 4]


def lifting_sizes(a):
    out = []
    z = a
    while z <= MAX_Z:
        out.append(z)
        z *= 2
    return out


def fnv1a64(text):
    h = 0xcbf29ce484222325
    for b in text.encode():
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


# Core parity block, (row, col offset from kb, shift). Shift 1 on the first
# parity column of rows 0 and 3 makes the sum of the four core rows isolate
# that column, which is what the encoder relies on.
CORE_PARITY = [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 0), (1, 2, 0),
               (2, 2, 0), (2, 3, 0), (3, 0, 1), (3, 3, 0)]


def build_structure(kb, row_weights, rng):
    rows = len(row_weights)
    cols = kb + 4 + (rows - 4)
    core_parity_count = [2, 3, 2, 2]
    degree = [0] * cols
    edges = []  # (row, col) in row-major order

    # Core rows: the punctured columns 0 and 1 as in NR, with row 1 missing
    # column 1 and row 3 missing column 0 so that a high-rate block with
    # only the core active still peels.
    core_punctured = [{0, 1}, {0}, {0, 1}, {1}]
    for r in range(4):
        need = row_weights[r] - core_parity_count[r]
        chosen = set(core_punctured[r])
        pool = list(range(2, kb))
        rng.shuffle(pool)
        pool.sort(key=lambda c: degree[c])
        for c in pool:
            if len(chosen) >= need:
                break
            chosen.add(c)
        for c in sorted(chosen):
            edges.append((r, c))
            degree[c] += 1
        for (pr, pc, _) in CORE_PARITY:
            if pr == r:
                edges.append((r, kb + pc))
                degree[kb + pc] += 1

    ext_rows = rows - 4
    # Columns 0/1 carry roughly 60% of extension rows each.
    quota0 = round(0.62 * ext_rows)
    quota1 = round(0.60 * ext_rows)
    for j in range(ext_rows):
        r = 4 + j
        m = row_weights[r] - 1
        chosen = set()
        take0 = j == 0 or (j * quota0) // ext_rows != ((j + 1) * quota0) // ext_rows
        take1 = j == 0 or ((j + 1) * quota1) // ext_rows != ((j + 2) * quota1) // ext_rows
        if take0 and len(chosen) < m:
            chosen.add(0)
        if take1 and len(chosen) < m:
            chosen.add(1)
        pool = list(range(2, kb + 4))
        rng.shuffle(pool)
        pool.sort(key=lambda c: degree[c] + (CORE_PARITY_BIAS if c >= kb else 0))
        for c in pool:
            if len(chosen) >= m:
                break
            chosen.add(c)
        for c in sorted(chosen):
            edges.append((r, c))
            degree[c] += 1
        edges.append((r, kb + 4 + j))
        degree[kb + 4 + j] += 1
    assert len(edges) == sum(row_weights)
    return rows, cols, edges


def closing_sums(edges_by_row, rows_by_col, r, c):
    """Partial alternating shift sums of every 4- and 6-cycle that a new
    edge (r, c) would close; the cycle exists at lifting size z when
    s + sum == 0 mod z."""
    four = []
    six = []
    row_map = edges_by_row.get(r, {})
    for r2, m2 in edges_by_row.items():
        if r2 == r or c not in m2:
            continue
        # path c -> r2 -> c2 -> r (4-cycle) or c -> r2 -> c2 -> r3 -> c3 -> r (6-cycle)
        for c2, s_r2c2 in m2.items():
            if c2 == c:
                continue
            base = -m2[c] + s_r2c2
            if c2 in row_map:
                four.append(base - row_map[c2])
            for r3 in rows_by_col.get(c2, ()):
                if r3 == r or r3 == r2:
                    continue
                m3 = edges_by_row[r3]
                for c3, s_r3c3 in m3.items():
                    if c3 == c2 or c3 == c or c3 not in row_map:
                        continue
                    six.append(base - m3[c2] + s_r3c3 - row_map[c3])
    return four, six


def assign_shifts(kb, edges, a, rng):
    zs = [z for z in lifting_sizes(a) if z >= MIN_CHECKED_Z]
    zs6 = [z for z in zs if z >= MIN_GIRTH6_Z]
    zmax = lifting_sizes(a)[-1]
    fixed = {(pr, kb + pc): sh for (pr, pc, sh) in CORE_PARITY}
    edges_by_row = {}
    rows_by_col = {}
    out = []
    for (r, c) in edges:
        if (r, c) in fixed:
            s = fixed[(r, c)]
        elif r >= 4 and c == kb + r:
            s = 0
        else:
            four, six = closing_sums(edges_by_row, rows_by_col, r, c)
            best = None
            for _ in range(CANDIDATES):
                cand = rng.randrange(zmax)
                if any((cand + t) % z == 0 for z in zs for t in four):
                    continue
                cost = sum(1 for z in zs6 for t in six if (cand + t) % z == 0)
                if best is None or cost < best[0]:
                    best = (cost, cand)
                    if cost == 0:
                        break
            s = best[1] if best is not None else rng.randrange(zmax)
        edges_by_row.setdefault(r, {})[c] = s
        rows_by_col.setdefault(c, []).append(r)
        out.append((r, c, s))
    return out


def emit(path, bg_id, kb, row_weights):
    rng = random.Random(SEED + bg_id)
    rows, cols, edges = build_structure(kb, row_weights, rng)
    body = []
    for i, a in enumerate(SET_BASES):
        body.append(f"set {i}")
        for (r, c, s) in assign_shifts(kb, edges, a, random.Random(SEED * 31 + bg_id * 8 + i)):
            body.append(f"{r} {c} {s}")
    text = "\n".join(body) + "\n"
    header = [
        f"# QC-LDPC base graph {bg_id}: NR layout, generated by tools/gen_base_graphs.py (seed {SEED})",
        f"bg {bg_id} rows {rows} cols {cols} sets {len(SET_BASES)}",
        f"checksum fnv1a64 {fnv1a64(text):016x}",
    ]
    Path(path).write_text("\n".join(header) + "\n" + text)


def main():
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "ldpc")
    outdir.mkdir(parents=True, exist_ok=True)
    emit(outdir / "bg1.txt", 1, 22, BG1_ROW_WEIGHTS)
    emit(outdir / "bg2.txt", 2, 10, BG2_ROW_WEIGHTS)


if __name__ == "__main__":
    main()
