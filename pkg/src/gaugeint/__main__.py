"""Module entry point: python -m gaugeint ..."""

from .cli import main

raise SystemExit(main())
