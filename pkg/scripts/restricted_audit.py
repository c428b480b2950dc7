"""Run the rope/fuel emulation over the seeded finite corpus and print one line per instance.

    python3 scripts/restricted_audit.py --count 50
"""

import argparse
from fractions import Fraction

from treasure_hunt.environment import AgentSession, Restriction
from treasure_hunt.hunt import emulate_restricted, treasure_hunt
from treasure_hunt.verify import SuiteResult, check_restricted, restricted_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha", default="1/2,1,2")
    args = ap.parse_args()
    alphas = [Fraction(a) for a in args.alpha.split(",")]
    res = SuiteResult("restricted")
    print("instance,r,alpha,model,unrestricted_cost,emulated_cost,max_rope,max_fill")
    for k, o in enumerate(restricted_corpus(args.count, args.seed)):
        for alpha in alphas:
            ref, _ = treasure_hunt(AgentSession(o, record=False), alpha / 2)
            for kind in ("rope", "fuel"):
                session = AgentSession(o, Restriction(kind, alpha), record=False)
                result, _, _ = emulate_restricted(session, alpha)
                print(f"{k},{o.radius},{alpha},{kind},{ref.cost},{result.cost},{session.max_rope},{session.max_fill}")
                check_restricted(res, o, alpha, kind, ref, f"[#{k}]")
        res.instances += 1
    print(f"# {res.summary()}")
    for msg in res.failures[:10]:
        print(f"# {msg}")


if __name__ == "__main__":
    main()
