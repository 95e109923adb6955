"""Run every lemma campaign on a list of base spaces and collect the CSV summaries.

    python scripts/campaigns.py --spaces c0 lp:2 lp:3 --trials 50 --workers 4 --out runs/
"""
import argparse
import io
import sys
from pathlib import Path

from xmspace import cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--spaces", nargs="+", default=["c0", "lp:2"])
    p.add_argument("--lemmas", nargs="+", default=list(cli.LEMMAS))
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--violate", action="store_true", help="run the negative controls instead")
    p.add_argument("--out", default="runs")
    args = p.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, worst = [], cli.EXIT_PASS
    for space in args.spaces:
        cfg = cli.RunConfig(space=space, trials=args.trials, seed=args.seed, workers=args.workers,
                            violate=args.violate)
        setup = cli.load_setup(cfg)
        for lemma in args.lemmas:
            if args.violate and lemma == "C3":
                continue
            cfg.lemma = lemma
            records = cli.run_campaign(cfg, setup)
            tag = f"{lemma}-{space.replace(':', '_').replace('/', '-')}"
            with open(out / f"{tag}.jsonl", "w") as fh:
                cli.write_report(records, cfg, fh)
            buf = io.StringIO()
            cli.write_summary_csv(cli.summarize(records), space, buf)
            lines = buf.getvalue().splitlines()
            if not rows:
                rows.append(lines[0])
            rows.extend(lines[1:])
            worst = max(worst, cli.campaign_exit(records, args.violate))
            print(lines[1], flush=True)
    (out / "summary.csv").write_text("\n".join(rows) + "\n")
    return worst


if __name__ == "__main__":
    sys.exit(main())
