# Generated by Django 5.2.7 on 2026-10-12 09:14

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('verb', models.CharField(choices=[('solve', 'Solve'), ('verify', 'Verify'), ('equivalence', 'Equivalence'), ('moments', 'Moments'), ('validate', 'Validate')], max_length=20)),
                ('name', models.CharField(max_length=100)),
                ('config_hash', models.CharField(max_length=64)),
                ('seed', models.DecimalField(decimal_places=0, max_digits=20)),
                ('passed', models.BooleanField()),
                ('exit_code', models.PositiveSmallIntegerField()),
                ('output_dir', models.CharField(max_length=500)),
                ('report', models.JSONField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['verb', 'config_hash', 'created_at'], name='scenario_run_lookup_idx')],
            },
        ),
    ]
