"""
URL configuration for core project.

The engine is driven from management commands; the HTTP surface only
exposes the admin and the read-only registry of recorded runs.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/v1/scenarios/', include('scenarios.urls')),
]
