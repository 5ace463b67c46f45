from django.apps import AppConfig


class FbsdeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'fbsde'
