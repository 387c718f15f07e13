from django.apps import AppConfig


class MatrixioConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'matrixio'
    verbose_name = 'Matrix, frame, observation and trace files'
