"""
Configuración de Django del proyecto rcurc_lab.

El proyecto no tiene superficie web: Django aporta la capa de configuración, el
registro de apps, los comandos de gestión (synth, sample, solve, eval, run) y el
runner de tests.

Lista completa de opciones y sus valores en
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()


# Rutas dentro del proyecto: BASE_DIR / 'subdir'
BASE_DIR = Path(__file__).resolve().parent.parent

# No hay sesiones ni firmas: la clave solo satisface a Django
SECRET_KEY = os.getenv('SECRET_KEY', 'rcurc-lab-local-only')

DEBUG = os.getenv("DEBUG", "False").lower() in ("true", "1", "t", "yes")

ALLOWED_HOSTS = []


# Configuración de Celery (repeticiones de experimentos en workers)
CELERY_BROKER_URL = os.getenv('CELERY_BROKER_URL', 'memory://')
CELERY_RESULT_BACKEND = os.getenv('CELERY_RESULT_BACKEND', 'cache+memory://')
CELERY_TASK_ALWAYS_EAGER = os.getenv("CELERY_TASK_ALWAYS_EAGER", "True").lower() in ("true", "1", "t", "yes")
CELERY_ACCEPT_CONTENT = ['json']  # Formato aceptado para mensajes
CELERY_TASK_SERIALIZER = 'json'  # Serializador para tareas
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'  # Zona horaria
CELERY_BROKER_CONNECTION_RETRY_ON_STARTUP = True


# Definición de aplicaciones

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',

    #apps nuestras
    'core',
    'sampling',
    'problems',
    'solver',
    'metrics',
    'matrixio',
    'experiments',

   #apps externas
    'rest_framework',
]

# Sin base de datos: todo el estado vive en ficheros de salida
DATABASES = {}


# Internacionalización
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


################################################################################################################################
########################################### CONFIG DEL SOLVER RCURC ############################################################
################################################################################################################################

# Valores por defecto de SolverConfig; "auto" se resuelve con las tasas observadas
RCURC_SOLVER_DEFAULTS = {
    'gamma': 0.65,
    'eps': 1e-4,
    'max_iters': 500,
    'eta_r': 'auto',
    'eta_c': 'auto',
    'zeta0': 'auto',
    'stagnation_window': 10,
    'stagnation_tol': 1e-12,
}

# Hilos para --repeats (no afecta a los resultados numéricos)
RCURC_WORKERS = int(os.getenv('RCURC_WORKERS', '1'))

################################################################################################################################


LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}
