"""Search for finite {f,d} quotient tilings by adding random relators.

Example:
    python3 scripts/search_quotients.py --f 5 --d 5 --lengths 10 12 14 --seeds 2000 \
        --max-order 2000 --out found/
"""

import argparse
import logging
from pathlib import Path

from isingdual.css import css_distance_upper
from isingdual.tiling import build_tiling, search_quotients


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--f", type=int, default=5)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--lengths", type=int, nargs="+", default=[10, 12, 14, 16])
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--max-cosets", type=int, default=200_000)
    ap.add_argument("--min-order", type=int, default=100)
    ap.add_argument("--max-order", type=int, default=5000)
    ap.add_argument("--trials", type=int, default=2000, help="window-search budget for d")
    ap.add_argument("--out", type=Path, help="directory for presentation files")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    seen = set()
    hits = search_quotients(args.f, args.d, args.lengths, range(args.seeds), args.max_cosets,
                            max_order=args.max_order, min_order=args.min_order)
    print("order r n k d relator seed")
    for pres, order, rel, seed in hits:
        if order in seen:
            continue
        seen.add(order)
        t = build_tiling(pres, args.f, args.d, args.max_cosets)
        p = t.css()
        d = min(css_distance_upper(q, args.trials, seed=0) or 0 for q in (p, p.swapped()))
        print(f"{order} {t.r} {t.n} {p.k} {d} {rel} {seed}", flush=True)
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            pres.save(args.out / f"f{args.f}d{args.d}_n{t.n}.txt")


if __name__ == "__main__":
    main()
