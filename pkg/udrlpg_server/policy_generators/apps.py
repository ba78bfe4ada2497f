from django.apps import AppConfig


class PolicyGeneratorsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'policy_generators'
    verbose_name = 'Policy generators'
