#!/usr/bin/env python3
"""Run the chat simulation service.

Stub mode is the default, so this works with zero external services:

    python3 scripts/serve.py
    python3 scripts/serve.py --config config.yaml
"""

from convocoach.service.app import main

if __name__ == "__main__":
    main()
