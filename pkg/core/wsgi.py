"""
WSGI entry point serving the admin and the read-only registry of scenario runs.

The numerical pipelines do not run behind this callable; they are driven by
the scenario management commands (solve, verify, equivalence, moments,
validate).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')

application = get_wsgi_application()
