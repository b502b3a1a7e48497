# backend/app/__main__.py - python -m app
import sys

from app.cli import main

sys.exit(main())
