import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rcurc_lab.settings')
django.setup()
