import json

from django.contrib import admin
from django.utils.html import format_html

from .models import ScenarioRun


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    list_display = ['run_info', 'verb', 'verdict_display', 'exit_code', 'created_at']
    list_filter = ['verb', 'passed', 'exit_code', 'created_at']
    search_fields = ['name', 'config_hash', 'output_dir']
    readonly_fields = ['created_at', 'report_display']

    fieldsets = (
        ('Run', {
            'fields': ('verb', 'name', 'config_hash', 'seed', 'output_dir')
        }),
        ('Outcome', {
            'fields': ('passed', 'exit_code', 'report_display'),
        }),
        ('Metadata', {
            'fields': ('created_at',),
            'classes': ('collapse',)
        }),
    )

    def run_info(self, obj):
        return format_html('<strong>{}</strong><br><small>{}</small>', obj.name, obj.config_hash[:12])
    run_info.short_description = 'Scenario'

    def verdict_display(self, obj):
        color = 'green' if obj.passed else 'red'
        return format_html('<span style="color: {}; font-weight: bold;">{}</span>',
                           color, 'PASS' if obj.passed else 'FAIL')
    verdict_display.short_description = 'Verdict'

    def report_display(self, obj):
        if obj.report:
            return format_html('<pre>{}</pre>', json.dumps(obj.report, indent=2, sort_keys=True))
        return 'No report'
    report_display.short_description = 'Report'

    def has_add_permission(self, request):
        # Runs are recorded by the management commands only
        return False

    def has_change_permission(self, request, obj=None):
        return False
