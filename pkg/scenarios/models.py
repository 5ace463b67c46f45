from django.db import models


class ScenarioRun(models.Model):
    VERB_CHOICES = [
        ('solve', 'Solve'),
        ('verify', 'Verify'),
        ('equivalence', 'Equivalence'),
        ('moments', 'Moments'),
        ('validate', 'Validate'),
    ]

    verb = models.CharField(max_length=20, choices=VERB_CHOICES)
    name = models.CharField(max_length=100)
    config_hash = models.CharField(max_length=64)
    seed = models.DecimalField(max_digits=20, decimal_places=0)
    passed = models.BooleanField()
    exit_code = models.PositiveSmallIntegerField()
    output_dir = models.CharField(max_length=500)
    report = models.JSONField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [models.Index(fields=['verb', 'config_hash', 'created_at'], name='scenario_run_lookup_idx')]

    def __str__(self):
        verdict = 'PASS' if self.passed else 'FAIL'
        return f"{self.verb} {self.name} ({self.config_hash[:12]}) {verdict}"
