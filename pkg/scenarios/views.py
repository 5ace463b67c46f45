from rest_framework import viewsets

from .models import ScenarioRun
from .serializers import ScenarioRunSerializer


class ScenarioRunViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = ScenarioRun.objects.all().order_by('-created_at')
    serializer_class = ScenarioRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        verb = self.request.query_params.get('verb')
        if verb:
            queryset = queryset.filter(verb=verb)
        return queryset
