"""
Django settings for the sdn_ledger test project.

The project has no views and no models, it only provides
the environment for the management commands:

    ./manage.py run --scenario case_b
    ./manage.py verifychain sdn_runs/chain.log
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.abspath(__file__))

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = 'r0k$1u#p9d-sdn-ledger-testapp-2w!x7q@m4c&h8v'

DEBUG = True

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'sdn_ledger',  # add the SDN ledger app
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
    },
]


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.path.join(BASE_DIR, 'db.sqlite3'),
    }
}


# Logging
# security events are logged as warnings, the rest of the run as info

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'sdn_ledger': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}


# The SDN ledger settings, the rest keeps the defaults

SDN_LEDGER = {
    'output_dir': os.path.join(BASE_DIR, 'sdn_runs'),
}
