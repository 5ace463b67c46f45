"""
Response headers for the runs API
"""

from django.conf import settings
from django.utils.deprecation import MiddlewareMixin


class EngineHeadersMiddleware(MiddlewareMixin):
    """
    Disables caching of API responses and stamps them with the engine version
    so a stored report can be traced back to the code that produced it.
    """

    def process_response(self, request, response):
        if request.path.startswith('/api/'):
            response['Cache-Control'] = 'no-cache, no-store, must-revalidate, private'
            response['Pragma'] = 'no-cache'
            response['X-Content-Type-Options'] = 'nosniff'
            response['X-Engine-Version'] = settings.ENGINE_VERSION
        return response
