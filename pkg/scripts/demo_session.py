#!/usr/bin/env python3
"""Drive one full stub session in-process and print the chat as it unfolds.

Handy for eyeballing the loop without starting the server:

    python3 scripts/demo_session.py --seed 7 --policy wrong
"""

from __future__ import annotations

import argparse

from convocoach.engine import UserProfile
from convocoach.harness import make_script, run_session


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--policy", default="wrong",
                        help="appropriate | wrong | random | comma-separated indices")
    parser.add_argument("--name", default="Robin")
    parser.add_argument("--topic", default="photography")
    args = parser.parse_args()

    profile = UserProfile(args.name, "they/them", args.topic)
    result = run_session(make_script(profile, args.seed, args.policy))
    doc = result.transcript

    print(f"=== {doc['profile']['first_name']} chatting with {doc['character_name']} "
          f"about {doc['profile']['topic']} ===\n")
    print(doc["brief"]["background"])
    print()
    for turn in doc["turns"]:
        print(f"--- turn {turn['index']} [{turn['assignment']}] ---")
        for message in turn["character_messages"]:
            if message["role"] == "blunt_trigger":
                print(f"  {doc['character_name']}: {message['text']}")
        if turn["draft"]:
            print(f"  (draft) {turn['draft']}")
        if turn["options"]:
            for i, option in enumerate(turn["options"]):
                marker = " *" if i == turn["selected"] else ""
                print(f"    option {i}: {option['text']}{marker}")
        for message in turn["character_messages"]:
            if message["role"] != "blunt_trigger":
                print(f"  {doc['character_name']}: {message['text']}")
        if turn["feedback"]:
            feedback = turn["feedback"]
            print(f"  [{feedback['kind_tag']}] {feedback['heading']}: {feedback['body'][:120]}...")
        if turn["continue_message"]:
            print(f"  (continue) {turn['continue_message']}")
        print()
    print(result.report.render_text())
    return 0 if result.report.overall else 1


if __name__ == "__main__":
    raise SystemExit(main())
