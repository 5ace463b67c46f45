from django.urls import path, include
from rest_framework.routers import DefaultRouter
from .views import ScenarioRunViewSet

router = DefaultRouter()
router.register(r'runs', ScenarioRunViewSet)

urlpatterns = [
    path('', include(router.urls)),
]
