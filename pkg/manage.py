#!/usr/bin/env python
"""
Command-line entry point of the equilibrium engine.

    python manage.py solve scenarios/bundled/s1.json --out artifacts/s1
    python manage.py verify scenarios/bundled/s1.json --strategy scenarios/bundled/flat.json
    python manage.py verify general.json --solution artifacts/s1
    python manage.py equivalence|moments|validate <config>

Exit codes: 0 all verdicts pass, 1 verification failure, 2 input error,
3 numeric failure.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
