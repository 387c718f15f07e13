import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rcurc_lab.settings')

# Una aplicación Celery para todo el laboratorio; las claves CELERY_* de settings.py
# deciden si las repeticiones corren en proceso (eager) o en un worker con Redis
app = Celery('rcurc_lab')
app.config_from_object('django.conf:settings', namespace='CELERY')

# experiments/tasks.py
app.autodiscover_tasks()
